#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mscv/imagekit.hpp"

namespace mscv {

/// Axis-aligned region [x0, x1) x [y0, y1) with a constant disparity.
struct Region {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int disparity = 0;
};

/// Piecewise-constant disparity layout: a background value overridden by
/// regions in order (later regions win).
struct DisparityPlan {
  int background = 0;
  std::vector<Region> regions;
};

/// Parses "bg[;d@x0,y0,x1,y1]*", e.g. "4;16@100,40,220,160". Throws ConfigError.
DisparityPlan parse_plan(const std::string& text);
std::string format_plan(const DisparityPlan& plan);

struct SyntheticPair {
  Image left;
  Image right;
  DisparityMap gt;
};

/// Textured random right view; the left view samples it at x - d(x).
///
/// Left pixels whose source column is out of frame or hidden behind a larger
/// disparity are occluded: they receive fresh texture and are invalid in `gt`.
/// Samples are quantized to k/255 so PPM round trips are exact.
/// Throws ConfigError for infeasible plans.
SyntheticPair generate_synthetic_pair(std::uint64_t seed, int width, int height, const DisparityPlan& plan,
                                      int max_disp = 192);

}  // namespace mscv
