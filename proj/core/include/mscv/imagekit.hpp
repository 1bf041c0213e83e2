#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace mscv {

/// Planar multi-channel raster, row-major within each plane.
/// Samples are nominally in [0,1]; chroma planes of a YUV image are centered at 0.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);
  Image(int width, int height, int channels, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width_) * height_; }

  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<double> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> plane(int c) const { return {data_.data() + c * plane_size(), plane_size()}; }

  /// Single-channel copy of plane `c`.
  Image channel(int c) const;

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Dense disparity map in full-resolution pixel units with per-pixel validity.
///
/// Invalid pixels always carry value 0. Validity is decided by `max_disparity`
/// (values must be finite and in [0, max)); loss evaluation further excludes
/// zero ground truth, which sparse datasets use to encode "missing".
class DisparityMap {
 public:
  static constexpr float kMaxDisparity = 192.0f;

  DisparityMap() = default;
  /// All pixels valid with value `fill`.
  DisparityMap(int width, int height, float fill = 0.0f);

  /// Builds a map from raw samples, marking non-finite or out-of-range samples invalid.
  static DisparityMap from_samples(int width, int height, std::span<const float> samples,
                                   float max_disparity = kMaxDisparity);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  float value(int y, int x) const { return values_[idx(y, x)]; }
  bool valid(int y, int x) const { return valid_[idx(y, x)] != 0; }

  void set(int y, int x, float v) {
    values_[idx(y, x)] = v;
    valid_[idx(y, x)] = 1;
  }
  void invalidate(int y, int x) {
    values_[idx(y, x)] = 0.0f;
    valid_[idx(y, x)] = 0;
  }

  std::span<const float> values() const noexcept { return values_; }
  std::span<const unsigned char> validity() const noexcept { return valid_; }
  std::size_t valid_count() const noexcept;

  friend bool operator==(const DisparityMap&, const DisparityMap&) = default;

 private:
  std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
  std::vector<unsigned char> valid_;
};

struct Dims {
  int width = 0;
  int height = 0;
  friend bool operator==(const Dims&, const Dims&) = default;
};

// Binary PPM (P6, 3 channels) and PGM (P5, 1 channel), maxval 255.
Image read_pnm(const std::filesystem::path& path);
void write_pnm(const Image& image, const std::filesystem::path& path);
Image decode_pnm(std::span<const unsigned char> bytes);
std::vector<unsigned char> encode_pnm(const Image& image);

// Grayscale PFM ("Pf"). Written little-endian, bottom row first; invalid pixels
// are written as +inf so validity survives a round trip.
DisparityMap read_pfm(const std::filesystem::path& path,
                      float max_disparity = DisparityMap::kMaxDisparity);
void write_pfm(const DisparityMap& map, const std::filesystem::path& path);
DisparityMap decode_pfm(std::span<const unsigned char> bytes,
                        float max_disparity = DisparityMap::kMaxDisparity);
std::vector<unsigned char> encode_pfm(const DisparityMap& map);

/// BT.601 full-range: Y in [0,1], U and V in [-0.5,0.5].
Image rgb_to_yuv(const Image& rgb);
Image yuv_to_rgb(const Image& yuv);

/// Mean of each 2x2 block. Width and height must be even.
Image mean_pool_2x(const Image& image);

struct Padded {
  Image image;
  Dims original;
};

/// Reflect-pads right and bottom edges up to the next multiple of `multiple`.
Padded pad_reflect(const Image& image, int multiple);
Image crop(const Image& image, Dims dims);

}  // namespace mscv
