#include "mscv/imagekit.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>

#include "mscv/error.hpp"

namespace mscv {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  MSCV_REQUIRE(width >= 0 && height >= 0 && channels >= 0, "Image: negative dimension");
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  MSCV_REQUIRE(width >= 0 && height >= 0 && channels >= 0, "Image: negative dimension");
  MSCV_REQUIRE(data_.size() == static_cast<std::size_t>(width) * height * channels,
               "Image: data length does not match dimensions");
}

Image Image::channel(int c) const {
  MSCV_REQUIRE(c >= 0 && c < channels_, "Image::channel: index out of range");
  auto p = plane(c);
  return Image(width_, height_, 1, std::vector<double>(p.begin(), p.end()));
}

DisparityMap::DisparityMap(int width, int height, float fill)
    : width_(width), height_(height),
      values_(static_cast<std::size_t>(width) * height, fill),
      valid_(static_cast<std::size_t>(width) * height, 1) {
  MSCV_REQUIRE(width >= 0 && height >= 0, "DisparityMap: negative dimension");
}

DisparityMap DisparityMap::from_samples(int width, int height, std::span<const float> samples,
                                        float max_disparity) {
  MSCV_REQUIRE(samples.size() == static_cast<std::size_t>(width) * height,
               "DisparityMap::from_samples: sample count does not match dimensions");
  DisparityMap map(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const float v = samples[static_cast<std::size_t>(y) * width + x];
      if (std::isfinite(v) && v >= 0.0f && v < max_disparity) {
        map.set(y, x, v);
      } else {
        map.invalidate(y, x);
      }
    }
  }
  return map;
}

std::size_t DisparityMap::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), 1));
}

namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Cursor over a netpbm-style text header.
class HeaderReader {
 public:
  HeaderReader(std::span<const unsigned char> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') ++pos_;
    if (start == pos_) throw FormatError("unexpected end of header", start);
    return std::string(bytes_.begin() + static_cast<std::ptrdiff_t>(start),
                       bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
  }

  long positive_int(const char* what) {
    const std::size_t at = (skip_space_and_comments(), pos_);
    const std::string t = token();
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }) ||
        t.size() > 9) {
      throw FormatError(std::string("invalid ") + what + " '" + t + "'", at);
    }
    const long v = std::stol(t);
    if (v <= 0) throw FormatError(std::string("non-positive ") + what, at);
    return v;
  }

  // Exactly one whitespace byte separates the header from the payload.
  void single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("missing whitespace before payload", pos_);
    }
    ++pos_;
  }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_;
};

}  // namespace

Image decode_pnm(std::span<const unsigned char> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("not a binary PGM/PPM file (expected P5 or P6)", 0);
  }
  const int channels = bytes[1] == '6' ? 3 : 1;
  HeaderReader hdr(bytes, 2);
  const long width = hdr.positive_int("width");
  const long height = hdr.positive_int("height");
  const std::size_t maxval_at = (hdr.skip_space_and_comments(), hdr.pos());
  const long maxval = hdr.positive_int("maxval");
  if (maxval != 255) throw FormatError("unsupported maxval " + std::to_string(maxval), maxval_at);
  hdr.single_space();
  const std::size_t payload_at = hdr.pos();
  const std::size_t needed = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - payload_at < needed) {
    throw FormatError("truncated payload: need " + std::to_string(needed) + " bytes, have " +
                          std::to_string(bytes.size() - payload_at),
                      bytes.size());
  }

  Image img(static_cast<int>(width), static_cast<int>(height), channels);
  const unsigned char* p = bytes.data() + payload_at;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < channels; ++c) img.at(c, y, x) = *p++ / 255.0;
    }
  }
  return img;
}

std::vector<unsigned char> encode_pnm(const Image& image) {
  MSCV_REQUIRE(image.channels() == 1 || image.channels() == 3,
               "encode_pnm: only 1- or 3-channel images are supported");
  std::ostringstream hdr;
  hdr << (image.channels() == 3 ? "P6" : "P5") << '\n'
      << image.width() << ' ' << image.height() << '\n'
      << 255 << '\n';
  const std::string h = hdr.str();
  std::vector<unsigned char> out(h.begin(), h.end());
  out.reserve(h.size() + image.data().size());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        out.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
  }
  return out;
}

Image read_pnm(const std::filesystem::path& path) { return decode_pnm(slurp(path)); }

void write_pnm(const Image& image, const std::filesystem::path& path) { dump(path, encode_pnm(image)); }

namespace {

std::uint32_t load_u32(const unsigned char* p, bool little) {
  std::uint32_t v = 0;
  if (little) {
    v = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
  } else {
    v = std::uint32_t(p[3]) | std::uint32_t(p[2]) << 8 | std::uint32_t(p[1]) << 16 | std::uint32_t(p[0]) << 24;
  }
  return v;
}

}  // namespace

DisparityMap decode_pfm(std::span<const unsigned char> bytes, float max_disparity) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == 'F') {
    throw FormatError("color PFM ('PF') is not supported", 0);
  }
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != 'f') {
    throw FormatError("not a grayscale PFM file (expected 'Pf')", 0);
  }
  HeaderReader hdr(bytes, 2);
  const long width = hdr.positive_int("width");
  const long height = hdr.positive_int("height");
  const std::size_t scale_at = (hdr.skip_space_and_comments(), hdr.pos());
  const std::string scale_tok = hdr.token();
  double scale = 0.0;
  {
    std::istringstream ss(scale_tok);
    ss >> scale;
    if (!ss || !ss.eof() || scale == 0.0 || !std::isfinite(scale)) {
      throw FormatError("bad PFM scale '" + scale_tok + "'", scale_at);
    }
  }
  const bool little = scale < 0.0;
  hdr.single_space();
  const std::size_t payload_at = hdr.pos();
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - payload_at < count * 4) {
    throw FormatError("truncated payload: need " + std::to_string(count * 4) + " bytes, have " +
                          std::to_string(bytes.size() - payload_at),
                      bytes.size());
  }

  std::vector<float> samples(count);
  const unsigned char* p = bytes.data() + payload_at;
  for (long row = 0; row < height; ++row) {
    const long y = height - 1 - row;
    for (long x = 0; x < width; ++x) {
      samples[static_cast<std::size_t>(y) * width + x] = std::bit_cast<float>(load_u32(p, little));
      p += 4;
    }
  }
  return DisparityMap::from_samples(static_cast<int>(width), static_cast<int>(height), samples,
                                    max_disparity);
}

std::vector<unsigned char> encode_pfm(const DisparityMap& map) {
  const std::string h =
      "Pf\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n-1.0\n";
  std::vector<unsigned char> out(h.begin(), h.end());
  out.reserve(h.size() + map.size() * 4);
  for (int row = 0; row < map.height(); ++row) {
    const int y = map.height() - 1 - row;
    for (int x = 0; x < map.width(); ++x) {
      const float v = map.valid(y, x) ? map.value(y, x) : std::numeric_limits<float>::infinity();
      const auto u = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(u >> (8 * b)));
    }
  }
  return out;
}

DisparityMap read_pfm(const std::filesystem::path& path, float max_disparity) {
  return decode_pfm(slurp(path), max_disparity);
}

void write_pfm(const DisparityMap& map, const std::filesystem::path& path) { dump(path, encode_pfm(map)); }

// BT.601 luma weights; chroma scaled so U,V span [-0.5,0.5].
namespace {
constexpr double kR = 0.299, kG = 0.587, kB = 0.114;
constexpr double kU = 0.5 / (1.0 - kB);
constexpr double kV = 0.5 / (1.0 - kR);
}  // namespace

Image rgb_to_yuv(const Image& rgb) {
  MSCV_REQUIRE(rgb.channels() == 3, "rgb_to_yuv: expected 3 channels");
  Image out(rgb.width(), rgb.height(), 3);
  const auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
  auto yy = out.plane(0), uu = out.plane(1), vv = out.plane(2);
  for (std::size_t i = 0; i < rgb.plane_size(); ++i) {
    const double y = kR * r[i] + kG * g[i] + kB * b[i];
    yy[i] = y;
    uu[i] = (b[i] - y) * kU;
    vv[i] = (r[i] - y) * kV;
  }
  return out;
}

Image yuv_to_rgb(const Image& yuv) {
  MSCV_REQUIRE(yuv.channels() == 3, "yuv_to_rgb: expected 3 channels");
  Image out(yuv.width(), yuv.height(), 3);
  const auto yy = yuv.plane(0), uu = yuv.plane(1), vv = yuv.plane(2);
  auto r = out.plane(0), g = out.plane(1), b = out.plane(2);
  for (std::size_t i = 0; i < yuv.plane_size(); ++i) {
    r[i] = yy[i] + vv[i] / kV;
    b[i] = yy[i] + uu[i] / kU;
    g[i] = (yy[i] - kR * r[i] - kB * b[i]) / kG;
  }
  return out;
}

Image mean_pool_2x(const Image& image) {
  MSCV_REQUIRE(image.width() % 2 == 0 && image.height() % 2 == 0,
               "mean_pool_2x: width and height must be even (pad first)");
  Image out(image.width() / 2, image.height() / 2, image.channels());
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        const double s = image.at(c, 2 * y, 2 * x) + image.at(c, 2 * y, 2 * x + 1) +
                         image.at(c, 2 * y + 1, 2 * x) + image.at(c, 2 * y + 1, 2 * x + 1);
        out.at(c, y, x) = s * 0.25;
      }
    }
  }
  return out;
}

namespace {

// Mirror index without repeating the edge sample; period 2(n-1).
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

int round_up(int v, int multiple) { return (v + multiple - 1) / multiple * multiple; }

}  // namespace

Padded pad_reflect(const Image& image, int multiple) {
  MSCV_REQUIRE(multiple >= 1, "pad_reflect: multiple must be >= 1");
  const int w = round_up(image.width(), multiple);
  const int h = round_up(image.height(), multiple);
  Padded result{Image(w, h, image.channels()), Dims{image.width(), image.height()}};
  if (image.width() == 0 || image.height() == 0) return result;
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      const int sy = reflect_index(y, image.height());
      for (int x = 0; x < w; ++x) {
        result.image.at(c, y, x) = image.at(c, sy, reflect_index(x, image.width()));
      }
    }
  }
  return result;
}

Image crop(const Image& image, Dims dims) {
  MSCV_REQUIRE(dims.width <= image.width() && dims.height <= image.height() && dims.width >= 0 &&
                   dims.height >= 0,
               "crop: target larger than source");
  Image out(dims.width, dims.height, image.channels());
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) out.at(c, y, x) = image.at(c, y, x);
    }
  }
  return out;
}

}  // namespace mscv
