#pragma once

#include <cstdint>
#include <vector>

#include "mscv/imagekit.hpp"
#include "mscv/tensor.hpp"

namespace mscv {

/// Resolution of a volume relative to the full-resolution input.
enum class Scale { full = 1, half = 2, quarter = 4 };

/// matching_cost volumes hold one slice per disparity candidate and can be
/// reduced by winner-take-all; feature volumes are learned channel stacks.
enum class VolumeKind { matching_cost, feature };

/// Layout (d or c, y, x), i.e. a Tensor whose channel axis is the depth axis.
struct CostVolume {
  Tensor costs;
  Scale scale = Scale::half;
  VolumeKind kind = VolumeKind::matching_cost;

  int depth() const noexcept { return costs.channels(); }
  int height() const noexcept { return costs.height(); }
  int width() const noexcept { return costs.width(); }
  float at(int d, int y, int x) const { return costs.at(d, y, x); }
};

/// One 24-bit census descriptor per pixel of a 5x5 window.
class CensusPlane {
 public:
  static constexpr int kBits = 24;

  CensusPlane() = default;
  CensusPlane(int width, int height) : width_(width), height_(height), bits_(std::size_t(width) * height) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::uint32_t& at(int y, int x) { return bits_[std::size_t(y) * width_ + x]; }
  std::uint32_t at(int y, int x) const { return bits_[std::size_t(y) * width_ + x]; }

  friend bool operator==(const CensusPlane&, const CensusPlane&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> bits_;
};

/// Census transform over a 5x5 window with clamped neighbor coordinates.
///
/// Bits are emitted MSB-first with the horizontal offset as the outer loop
/// and the vertical offset inner, skipping the center. A bit is set iff the
/// center sample is strictly greater than the neighbor.
CensusPlane census_transform(const Image& plane);

/// cost(d,y,x) = popcount(left(y,x) ^ right(y,x-d)); candidates with x-d < 0 cost 24.
CostVolume hamming_cost_volume(const CensusPlane& left, const CensusPlane& right, int max_d,
                               Scale scale = Scale::half);

/// cost(d,y,x) = |left(y,x) - right(y,x-d)|; candidates with x-d < 0 cost 1.
CostVolume ad_cost_volume(const Image& left, const Image& right, int max_d,
                          Scale scale = Scale::half);

inline constexpr int kTraditionalDepth = 96;
inline constexpr double kNormalizeEps = 1e-8;

/// Interleaves census (Y), AD (U) and AD (V) volumes per disparity as
/// [c1(0), c2(0), c3(0), c1(1), ...] and normalizes the whole volume to zero
/// mean and unit variance.
CostVolume assemble_traditional(const CostVolume& c1, const CostVolume& c2, const CostVolume& c3);

/// Zero-mean, unit-variance rescale of every entry, using one global mean and
/// population variance accumulated in double in a fixed order.
void normalize_global(Tensor& t);

/// cost(d,y,x) = <f_l(:,y,x), f_r(:,y,x-d)> / C, with 0 where x-d < 0.
CostVolume correlate_1d(const Tensor& f_left, const Tensor& f_right, int max_d, Scale scale);

/// The three half-resolution matching-cost volumes of the traditional branch.
struct TraditionalVolumes {
  CostVolume census_y;
  CostVolume ad_u;
  CostVolume ad_v;
  Image left_half_yuv;
};

/// Mean-pools an even-sized RGB pair to half resolution, converts to YUV and
/// builds census(Y), AD(U) and AD(V) volumes with `max_d` half-scale candidates.
TraditionalVolumes traditional_volumes(const Image& left_rgb, const Image& right_rgb,
                                       int max_d = kTraditionalDepth);

}  // namespace mscv
