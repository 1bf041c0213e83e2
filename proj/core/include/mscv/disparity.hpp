#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mscv/costvol.hpp"
#include "mscv/imagekit.hpp"

namespace mscv {

enum class Objective { minimize, maximize };

/// Per-pixel arg-extremum over the depth axis, scaled to full-resolution
/// units by the volume's scale factor. Ties resolve to the smaller candidate.
DisparityMap wta_disparity(const CostVolume& vol, Objective objective);

/// Traditional-only baseline: census(Y) Hamming volume at half resolution,
/// winner-take-all, nearest-neighbor upsampling back to the input size.
/// Output values are multiples of 2 in full-resolution pixels.
DisparityMap census_wta_match(const Image& left_rgb, const Image& right_rgb, int max_disp = 192);

/// Warped target coordinate Y(x) = x - d(x) for one row.
std::vector<double> warp_row(std::span<const float> disparities);

/// Flags boundary pixels of non-monotone runs in a warped row.
///
/// A pixel is inside a run when it lies strictly below the running maximum of
/// the row. Each maximal run [a, b] flags its leading pair (a-1, a); its
/// trailing pair (b, b+1) is flagged only when the row recovers gently,
/// Y(b+1) - Y(b) <= epsilon. Runs that reach the end of the row keep only the
/// leading pair.
std::vector<std::uint8_t> discontinuity_row(std::span<const double> warped, double epsilon);

class DiscontinuityMask {
 public:
  DiscontinuityMask() = default;
  DiscontinuityMask(int width, int height) : width_(width), height_(height), flags_(std::size_t(width) * height) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::uint8_t at(int y, int x) const { return flags_[std::size_t(y) * width_ + x]; }
  std::uint8_t& at(int y, int x) { return flags_[std::size_t(y) * width_ + x]; }
  std::span<const std::uint8_t> flags() const noexcept { return flags_; }
  std::size_t count() const noexcept;

  /// 0 / 1 single-channel image, ready for PGM output as 0 / 255.
  Image to_image() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> flags_;
};

inline constexpr double kDefaultEpsilon = 3.0;

DiscontinuityMask discontinuity_mask(const DisparityMap& map, double epsilon = kDefaultEpsilon);

struct LossParams {
  double tau = 1.0;
  double lambda = 0.5;
  double exponent = 0.125;
  double max_disp = 192.0;
};

/// max(tau, |gt - pred| * (1 - lambda * flag)) ^ exponent for one pixel.
double pixel_loss(double pred, double gt, bool flagged, const LossParams& p);

/// d pixel_loss / d pred; 0 where the tau clamp is active.
double pixel_loss_grad(double pred, double gt, bool flagged, const LossParams& p);

struct LossResult {
  double mean = 0.0;
  std::vector<double> per_pixel;  // 0 at excluded pixels
  std::size_t count = 0;
};

/// Averages pixel_loss over pixels whose ground truth is valid and in (0, max_disp).
/// Throws EmptySelectionError when no pixel qualifies.
LossResult loss_eval(const DisparityMap& pred, const DisparityMap& gt, const DiscontinuityMask& mask,
                     const LossParams& p = {});

/// Per-pixel gradient of the pixel loss wrt the prediction; 0 at excluded pixels.
std::vector<double> loss_grad(const DisparityMap& pred, const DisparityMap& gt, const DiscontinuityMask& mask,
                              const LossParams& p = {});

}  // namespace mscv
