#include "mscv/costvol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "mscv/error.hpp"
#include "mscv/parallel.hpp"

namespace mscv {

namespace {
constexpr int kRadius = 2;
}

CensusPlane census_transform(const Image& plane) {
  MSCV_REQUIRE(plane.channels() == 1, "census_transform: expected a single-channel plane");
  const int W = plane.width(), H = plane.height();
  CensusPlane out(W, H);
  parallel_for(static_cast<std::size_t>(H), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < W; ++x) {
      const double center = plane.at(0, y, x);
      std::uint32_t bits = 0;
      for (int dx = -kRadius; dx <= kRadius; ++dx) {
        const int nx = std::clamp(x + dx, 0, W - 1);
        for (int dy = -kRadius; dy <= kRadius; ++dy) {
          if (dx == 0 && dy == 0) continue;
          const int ny = std::clamp(y + dy, 0, H - 1);
          bits = (bits << 1) | (center > plane.at(0, ny, nx) ? 1u : 0u);
        }
      }
      out.at(y, x) = bits;
    }
  });
  return out;
}

CostVolume hamming_cost_volume(const CensusPlane& left, const CensusPlane& right, int max_d, Scale scale) {
  MSCV_REQUIRE(left.width() == right.width() && left.height() == right.height(),
               "hamming_cost_volume: census planes differ in size");
  MSCV_REQUIRE(max_d >= 1, "hamming_cost_volume: max_d must be >= 1");
  const int W = left.width(), H = left.height();
  CostVolume vol{Tensor(max_d, H, W), scale, VolumeKind::matching_cost};
  parallel_for(static_cast<std::size_t>(H), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int d = 0; d < max_d; ++d) {
      float* dst = vol.costs.row(d, y);
      const int first = std::min(d, W);
      std::fill(dst, dst + first, static_cast<float>(CensusPlane::kBits));
      for (int x = first; x < W; ++x) {
        dst[x] = static_cast<float>(std::popcount(left.at(y, x) ^ right.at(y, x - d)));
      }
    }
  });
  return vol;
}

CostVolume ad_cost_volume(const Image& left, const Image& right, int max_d, Scale scale) {
  MSCV_REQUIRE(left.channels() == 1 && right.channels() == 1, "ad_cost_volume: expected single-channel planes");
  MSCV_REQUIRE(left.width() == right.width() && left.height() == right.height(),
               "ad_cost_volume: planes differ in size");
  MSCV_REQUIRE(max_d >= 1, "ad_cost_volume: max_d must be >= 1");
  const int W = left.width(), H = left.height();
  CostVolume vol{Tensor(max_d, H, W), scale, VolumeKind::matching_cost};
  parallel_for(static_cast<std::size_t>(H), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int d = 0; d < max_d; ++d) {
      float* dst = vol.costs.row(d, y);
      const int first = std::min(d, W);
      std::fill(dst, dst + first, 1.0f);
      for (int x = first; x < W; ++x) {
        dst[x] = static_cast<float>(std::abs(left.at(0, y, x) - right.at(0, y, x - d)));
      }
    }
  });
  return vol;
}

void normalize_global(Tensor& t) {
  auto data = t.data();
  if (data.empty()) return;
  double sum = 0.0;
  for (float v : data) sum += v;
  const double mean = sum / static_cast<double>(data.size());
  double sq = 0.0;
  for (float v : data) {
    const double c = v - mean;
    sq += c * c;
  }
  const double inv = 1.0 / (std::sqrt(sq / static_cast<double>(data.size())) + kNormalizeEps);
  for (float& v : data) v = static_cast<float>((v - mean) * inv);
}

CostVolume assemble_traditional(const CostVolume& c1, const CostVolume& c2, const CostVolume& c3) {
  for (const CostVolume* c : {&c1, &c2, &c3}) {
    MSCV_REQUIRE(c->depth() == kTraditionalDepth,
                 "assemble_traditional: every input must have depth 96, got " + std::to_string(c->depth()));
    MSCV_REQUIRE(c->costs.height() == c1.costs.height() && c->costs.width() == c1.costs.width() &&
                     c->scale == c1.scale,
                 "assemble_traditional: inputs differ in size or scale");
  }
  const int H = c1.height(), W = c1.width();
  CostVolume out{Tensor(3 * kTraditionalDepth, H, W), c1.scale, VolumeKind::matching_cost};
  for (int d = 0; d < kTraditionalDepth; ++d) {
    const CostVolume* src[3] = {&c1, &c2, &c3};
    for (int k = 0; k < 3; ++k) {
      auto from = src[k]->costs.plane(d);
      std::copy(from.begin(), from.end(), out.costs.plane(3 * d + k).begin());
    }
  }
  normalize_global(out.costs);
  return out;
}

CostVolume correlate_1d(const Tensor& f_left, const Tensor& f_right, int max_d, Scale scale) {
  MSCV_REQUIRE(f_left.same_shape(f_right), "correlate_1d: feature shapes differ");
  MSCV_REQUIRE(max_d >= 1, "correlate_1d: max_d must be >= 1");
  MSCV_REQUIRE(f_left.channels() >= 1, "correlate_1d: features have no channels");
  const int C = f_left.channels(), H = f_left.height(), W = f_left.width();
  const float inv_n = 1.0f / static_cast<float>(C);
  CostVolume vol{Tensor(max_d, H, W), scale, VolumeKind::matching_cost};
  parallel_for(static_cast<std::size_t>(H), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int d = 0; d < std::min(max_d, W); ++d) {
      float* dst = vol.costs.row(d, y);
      for (int c = 0; c < C; ++c) {
        const float* l = f_left.row(c, y);
        const float* r = f_right.row(c, y);
        for (int x = d; x < W; ++x) dst[x] += l[x] * r[x - d];
      }
      for (int x = d; x < W; ++x) dst[x] *= inv_n;
    }
  });
  return vol;
}

TraditionalVolumes traditional_volumes(const Image& left_rgb, const Image& right_rgb, int max_d) {
  MSCV_REQUIRE(left_rgb.channels() == 3 && right_rgb.channels() == 3,
               "traditional_volumes: expected RGB images");
  MSCV_REQUIRE(left_rgb.width() == right_rgb.width() && left_rgb.height() == right_rgb.height(),
               "traditional_volumes: stereo pair differs in size");
  const Image left = rgb_to_yuv(mean_pool_2x(left_rgb));
  const Image right = rgb_to_yuv(mean_pool_2x(right_rgb));
  TraditionalVolumes out;
  out.census_y = hamming_cost_volume(census_transform(left.channel(0)), census_transform(right.channel(0)),
                                     max_d, Scale::half);
  out.ad_u = ad_cost_volume(left.channel(1), right.channel(1), max_d, Scale::half);
  out.ad_v = ad_cost_volume(left.channel(2), right.channel(2), max_d, Scale::half);
  out.left_half_yuv = left;
  return out;
}

}  // namespace mscv
