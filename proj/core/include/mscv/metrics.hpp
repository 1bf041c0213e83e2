#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mscv/imagekit.hpp"

namespace mscv {

/// Per-pixel region selector (foreground, non-occluded, ...). Empty = unused.
using PixelMask = std::vector<std::uint8_t>;

/// Mean |pred - gt| over valid ground-truth pixels.
double epe(const DisparityMap& pred, const DisparityMap& gt);

/// Percentage of valid pixels with |pred - gt| > threshold (strict).
double outlier_rate(const DisparityMap& pred, const DisparityMap& gt, double threshold_px);

struct OutlierRule {
  double threshold_px = 3.0;
  /// KITTI devkit rule: additionally require |err| > relative * gt.
  bool kitti = false;
  double relative = 0.05;

  bool is_outlier(double err, double gt) const {
    return err > threshold_px && (!kitti || err > relative * gt);
  }
};

struct D1 {
  std::optional<double> bg;
  std::optional<double> fg;
  std::optional<double> all;
  std::size_t bg_count = 0;
  std::size_t fg_count = 0;
  std::size_t bg_outliers = 0;
  std::size_t fg_outliers = 0;
};

/// Outlier percentages over background / foreground / all valid pixels.
/// A region with no valid pixels is reported as absent.
D1 d1_metrics(const DisparityMap& pred, const DisparityMap& gt, std::span<const std::uint8_t> fg_mask,
              const OutlierRule& rule = {});

struct EvalReport {
  double epe = 0.0;
  double outlier_3px = 0.0;
  double outlier_5px = 0.0;
  D1 d1;
  std::size_t valid_count = 0;
  // Only present when a non-occluded mask was supplied.
  std::optional<double> noc_3px;
  std::optional<double> noc_5px;
  std::optional<D1> d1_noc;
};

/// Full report. `fg_mask` and `noc_mask` may be empty.
EvalReport evaluate(const DisparityMap& pred, const DisparityMap& gt, std::span<const std::uint8_t> fg_mask,
                    std::span<const std::uint8_t> noc_mask, const OutlierRule& d1_rule = {});

void write_report_table(std::ostream& os, const EvalReport& r);
void write_report_kv(std::ostream& os, const EvalReport& r);

}  // namespace mscv
