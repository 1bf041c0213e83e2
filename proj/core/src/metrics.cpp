#include "mscv/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "mscv/error.hpp"

namespace mscv {

namespace {

void check_dims(const DisparityMap& pred, const DisparityMap& gt) {
  MSCV_REQUIRE(pred.width() == gt.width() && pred.height() == gt.height(), "metrics: prediction/gt dims differ");
}

void check_mask(std::span<const std::uint8_t> mask, const DisparityMap& gt, const char* what) {
  MSCV_REQUIRE(mask.empty() || mask.size() == gt.size(), std::string("metrics: ") + what + " mask size mismatch");
}

// Counts outliers over valid gt pixels accepted by `select`.
template <class Select>
std::pair<std::size_t, std::size_t> count_outliers(const DisparityMap& pred, const DisparityMap& gt,
                                                   const OutlierRule& rule, Select select) {
  std::size_t bad = 0, n = 0;
  const auto pv = pred.values(), gv = gt.values();
  const auto ok = gt.validity();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (!ok[i] || !select(i)) continue;
    ++n;
    if (rule.is_outlier(std::abs(static_cast<double>(pv[i]) - gv[i]), gv[i])) ++bad;
  }
  return {bad, n};
}

std::optional<double> percent(std::pair<std::size_t, std::size_t> c) {
  if (c.second == 0) return std::nullopt;
  return 100.0 * static_cast<double>(c.first) / static_cast<double>(c.second);
}

D1 d1_impl(const DisparityMap& pred, const DisparityMap& gt, std::span<const std::uint8_t> fg,
           std::span<const std::uint8_t> region, const OutlierRule& rule) {
  auto in_region = [&](std::size_t i) { return region.empty() || region[i] != 0; };
  auto is_fg = [&](std::size_t i) { return !fg.empty() && fg[i] != 0; };
  const auto bg = count_outliers(pred, gt, rule, [&](std::size_t i) { return in_region(i) && !is_fg(i); });
  const auto fgc = count_outliers(pred, gt, rule, [&](std::size_t i) { return in_region(i) && is_fg(i); });
  const auto all = count_outliers(pred, gt, rule, in_region);
  return {percent(bg), percent(fgc), percent(all), bg.second, fgc.second, bg.first, fgc.first};
}

}  // namespace

double epe(const DisparityMap& pred, const DisparityMap& gt) {
  check_dims(pred, gt);
  double sum = 0.0;
  std::size_t n = 0;
  const auto pv = pred.values(), gv = gt.values();
  const auto ok = gt.validity();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (!ok[i]) continue;
    sum += std::abs(static_cast<double>(pv[i]) - gv[i]);
    ++n;
  }
  if (n == 0) throw EmptySelectionError("epe: no valid ground-truth pixels");
  return sum / static_cast<double>(n);
}

double outlier_rate(const DisparityMap& pred, const DisparityMap& gt, double threshold_px) {
  check_dims(pred, gt);
  MSCV_REQUIRE(threshold_px > 0.0, "outlier_rate: threshold must be > 0");
  const auto c = count_outliers(pred, gt, OutlierRule{threshold_px}, [](std::size_t) { return true; });
  if (c.second == 0) throw EmptySelectionError("outlier_rate: no valid ground-truth pixels");
  return *percent(c);
}

D1 d1_metrics(const DisparityMap& pred, const DisparityMap& gt, std::span<const std::uint8_t> fg_mask,
              const OutlierRule& rule) {
  check_dims(pred, gt);
  check_mask(fg_mask, gt, "foreground");
  return d1_impl(pred, gt, fg_mask, {}, rule);
}

EvalReport evaluate(const DisparityMap& pred, const DisparityMap& gt, std::span<const std::uint8_t> fg_mask,
                    std::span<const std::uint8_t> noc_mask, const OutlierRule& d1_rule) {
  check_dims(pred, gt);
  check_mask(fg_mask, gt, "foreground");
  check_mask(noc_mask, gt, "non-occluded");
  EvalReport r;
  r.epe = epe(pred, gt);
  r.outlier_3px = outlier_rate(pred, gt, 3.0);
  r.outlier_5px = outlier_rate(pred, gt, 5.0);
  r.valid_count = gt.valid_count();
  r.d1 = d1_impl(pred, gt, fg_mask, {}, d1_rule);
  if (!noc_mask.empty()) {
    auto noc = [&](std::size_t i) { return noc_mask[i] != 0; };
    r.noc_3px = percent(count_outliers(pred, gt, OutlierRule{3.0}, noc));
    r.noc_5px = percent(count_outliers(pred, gt, OutlierRule{5.0}, noc));
    r.d1_noc = d1_impl(pred, gt, fg_mask, noc_mask, d1_rule);
  }
  return r;
}

namespace {

std::string fmt(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

void write_report_table(std::ostream& os, const EvalReport& r) {
  char line[128];
  auto row = [&](const char* name, const std::string& all, const std::string& noc) {
    std::snprintf(line, sizeof line, "%-12s %12s %12s\n", name, all.c_str(), noc.c_str());
    os << line;
  };
  row("metric", "all", "noc");
  row("EPE", fmt(r.epe), "-");
  row(">3px", fmt(r.outlier_3px), fmt(r.noc_3px));
  row(">5px", fmt(r.outlier_5px), fmt(r.noc_5px));
  row("D1-bg", fmt(r.d1.bg), r.d1_noc ? fmt(r.d1_noc->bg) : "-");
  row("D1-fg", fmt(r.d1.fg), r.d1_noc ? fmt(r.d1_noc->fg) : "-");
  row("D1-all", fmt(r.d1.all), r.d1_noc ? fmt(r.d1_noc->all) : "-");
  row("valid", std::to_string(r.valid_count), "-");
}

void write_report_kv(std::ostream& os, const EvalReport& r) {
  os << "epe=" << fmt(r.epe) << '\n'
     << "out_3px=" << fmt(r.outlier_3px) << '\n'
     << "out_5px=" << fmt(r.outlier_5px) << '\n'
     << "d1_bg=" << fmt(r.d1.bg) << '\n'
     << "d1_fg=" << fmt(r.d1.fg) << '\n'
     << "d1_all=" << fmt(r.d1.all) << '\n'
     << "valid_count=" << r.valid_count << '\n';
  if (r.noc_3px) {
    os << "out_noc_3px=" << fmt(r.noc_3px) << '\n' << "out_noc_5px=" << fmt(r.noc_5px) << '\n';
    os << "d1_noc_bg=" << fmt(r.d1_noc->bg) << '\n'
       << "d1_noc_fg=" << fmt(r.d1_noc->fg) << '\n'
       << "d1_noc_all=" << fmt(r.d1_noc->all) << '\n';
  }
}

}  // namespace mscv
