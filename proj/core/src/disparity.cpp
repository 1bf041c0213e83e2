#include "mscv/disparity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mscv/error.hpp"
#include "mscv/parallel.hpp"

namespace mscv {

DisparityMap wta_disparity(const CostVolume& vol, Objective objective) {
  MSCV_REQUIRE(vol.kind == VolumeKind::matching_cost, "wta_disparity: feature volumes have no disparity axis");
  MSCV_REQUIRE(vol.depth() >= 1, "wta_disparity: empty depth axis");
  const int H = vol.height(), W = vol.width(), D = vol.depth();
  const float factor = static_cast<float>(static_cast<int>(vol.scale));
  DisparityMap out(W, H);
  parallel_for(static_cast<std::size_t>(H), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < W; ++x) {
      int best = 0;
      float best_cost = vol.at(0, y, x);
      for (int d = 1; d < D; ++d) {
        const float c = vol.at(d, y, x);
        if (objective == Objective::minimize ? c < best_cost : c > best_cost) {
          best = d;
          best_cost = c;
        }
      }
      out.set(y, x, factor * static_cast<float>(best));
    }
  });
  return out;
}

DisparityMap census_wta_match(const Image& left_rgb, const Image& right_rgb, int max_disp) {
  MSCV_REQUIRE(max_disp >= 2, "census_wta_match: max_disp must be >= 2");
  MSCV_REQUIRE(left_rgb.width() == right_rgb.width() && left_rgb.height() == right_rgb.height(),
               "census_wta_match: stereo pair differs in size");
  const Padded lp = pad_reflect(left_rgb, 2);
  const Padded rp = pad_reflect(right_rgb, 2);
  const Image left = rgb_to_yuv(mean_pool_2x(lp.image));
  const Image right = rgb_to_yuv(mean_pool_2x(rp.image));
  const CostVolume vol = hamming_cost_volume(census_transform(left.channel(0)), census_transform(right.channel(0)),
                                             max_disp / 2, Scale::half);
  const DisparityMap half = wta_disparity(vol, Objective::minimize);
  DisparityMap full(left_rgb.width(), left_rgb.height());
  for (int y = 0; y < full.height(); ++y) {
    for (int x = 0; x < full.width(); ++x) full.set(y, x, half.value(y / 2, x / 2));
  }
  return full;
}

std::vector<double> warp_row(std::span<const float> disparities) {
  std::vector<double> y(disparities.size());
  for (std::size_t x = 0; x < disparities.size(); ++x) y[x] = static_cast<double>(x) - disparities[x];
  return y;
}

std::vector<std::uint8_t> discontinuity_row(std::span<const double> warped, double epsilon) {
  const std::size_t n = warped.size();
  std::vector<std::uint8_t> out(n, 0);
  if (n == 0) return out;

  std::vector<std::uint8_t> mask(n, 0);
  double running_max = warped[0];
  for (std::size_t x = 0; x < n; ++x) {
    running_max = std::max(running_max, warped[x]);
    mask[x] = running_max - warped[x] > 0.0 ? 1 : 0;
  }

  // |M>>1 - M| + |M<<1 - M|, zero beyond both ends, clipped to {0,1}.
  for (std::size_t x = 0; x < n; ++x) {
    const int prev = x > 0 ? mask[x - 1] : 0;
    const int next = x + 1 < n ? mask[x + 1] : 0;
    out[x] = (std::abs(prev - mask[x]) + std::abs(next - mask[x])) > 0 ? 1 : 0;
  }

  // Leading pairs always stay; trailing pairs of steep recoveries are cleared.
  std::vector<std::uint8_t> leading(n, 0);
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t x = 0; x < n;) {
    if (!mask[x]) {
      ++x;
      continue;
    }
    const std::size_t a = x;
    while (x < n && mask[x]) ++x;
    runs.emplace_back(a, x - 1);
    leading[a] = 1;
    if (a > 0) leading[a - 1] = 1;
  }
  for (const auto& [a, b] : runs) {
    const bool has_successor = b + 1 < n;
    if (has_successor && warped[b + 1] - warped[b] <= epsilon) continue;
    if (!leading[b]) out[b] = 0;
    if (has_successor && !leading[b + 1]) out[b + 1] = 0;
  }
  return out;
}

std::size_t DiscontinuityMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), 1));
}

Image DiscontinuityMask::to_image() const {
  Image img(width_, height_, 1);
  for (std::size_t i = 0; i < flags_.size(); ++i) img.data()[i] = flags_[i] ? 1.0 : 0.0;
  return img;
}

DiscontinuityMask discontinuity_mask(const DisparityMap& map, double epsilon) {
  MSCV_REQUIRE(epsilon >= 0.0, "discontinuity_mask: epsilon must be >= 0");
  DiscontinuityMask mask(map.width(), map.height());
  const auto values = map.values();
  parallel_for(static_cast<std::size_t>(map.height()), [&](std::size_t row) {
    const auto w = static_cast<std::size_t>(map.width());
    const auto flags = discontinuity_row(warp_row(values.subspan(row * w, w)), epsilon);
    for (std::size_t x = 0; x < w; ++x) mask.at(static_cast<int>(row), static_cast<int>(x)) = flags[x];
  });
  return mask;
}

namespace {

void check_loss_inputs(const DisparityMap& pred, const DisparityMap& gt, const DiscontinuityMask& mask,
                       const LossParams& p) {
  MSCV_REQUIRE(pred.width() == gt.width() && pred.height() == gt.height(), "loss: prediction/gt dims differ");
  MSCV_REQUIRE(mask.width() == gt.width() && mask.height() == gt.height(), "loss: mask dims differ");
  MSCV_REQUIRE(p.tau >= 0.0, "loss: tau must be >= 0");
  MSCV_REQUIRE(p.lambda >= 0.0 && p.lambda <= 1.0, "loss: lambda must be in [0,1]");
}

bool counts(const DisparityMap& gt, int y, int x, const LossParams& p) {
  const float g = gt.value(y, x);
  return gt.valid(y, x) && g > 0.0f && g < p.max_disp;
}

}  // namespace

double pixel_loss(double pred, double gt, bool flagged, const LossParams& p) {
  const double u = std::abs(gt - pred) * (1.0 - p.lambda * (flagged ? 1.0 : 0.0));
  return std::pow(std::max(p.tau, u), p.exponent);
}

double pixel_loss_grad(double pred, double gt, bool flagged, const LossParams& p) {
  const double weight = 1.0 - p.lambda * (flagged ? 1.0 : 0.0);
  const double u = std::abs(gt - pred) * weight;
  if (u <= p.tau || u == 0.0) return 0.0;
  const double sign = pred > gt ? 1.0 : -1.0;
  return p.exponent * std::pow(u, p.exponent - 1.0) * weight * sign;
}

LossResult loss_eval(const DisparityMap& pred, const DisparityMap& gt, const DiscontinuityMask& mask,
                     const LossParams& p) {
  check_loss_inputs(pred, gt, mask, p);
  LossResult r;
  r.per_pixel.assign(gt.size(), 0.0);
  double sum = 0.0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!counts(gt, y, x, p)) continue;
      const double l = pixel_loss(pred.value(y, x), gt.value(y, x), mask.at(y, x) != 0, p);
      r.per_pixel[static_cast<std::size_t>(y) * gt.width() + x] = l;
      sum += l;
      ++r.count;
    }
  }
  if (r.count == 0) throw EmptySelectionError("loss_eval: no valid ground-truth pixels");
  r.mean = sum / static_cast<double>(r.count);
  return r;
}

std::vector<double> loss_grad(const DisparityMap& pred, const DisparityMap& gt, const DiscontinuityMask& mask,
                              const LossParams& p) {
  check_loss_inputs(pred, gt, mask, p);
  std::vector<double> g(gt.size(), 0.0);
  std::size_t n = 0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!counts(gt, y, x, p)) continue;
      g[static_cast<std::size_t>(y) * gt.width() + x] =
          pixel_loss_grad(pred.value(y, x), gt.value(y, x), mask.at(y, x) != 0, p);
      ++n;
    }
  }
  if (n == 0) throw EmptySelectionError("loss_grad: no valid ground-truth pixels");
  return g;
}

}  // namespace mscv
