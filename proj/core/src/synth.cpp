#include "mscv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "mscv/error.hpp"

namespace mscv {

DisparityPlan parse_plan(const std::string& text) {
  DisparityPlan plan;
  std::stringstream ss(text);
  std::string item;
  bool first = true;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    try {
      if (first && item.find('@') == std::string::npos) {
        std::size_t used = 0;
        plan.background = std::stoi(item, &used);
        if (used != item.size()) throw ConfigError("");
      } else {
        Region r;
        char at = 0, c1 = 0, c2 = 0, c3 = 0;
        std::istringstream is(item);
        if (!(is >> r.disparity >> at >> r.x0 >> c1 >> r.y0 >> c2 >> r.x1 >> c3 >> r.y1) || at != '@' ||
            c1 != ',' || c2 != ',' || c3 != ',') {
          throw ConfigError("");
        }
        is >> std::ws;
        if (!is.eof()) throw ConfigError("");
        plan.regions.push_back(r);
      }
    } catch (const std::exception&) {
      throw ConfigError("bad disparity plan item '" + item + "' (expected 'd' or 'd@x0,y0,x1,y1')");
    }
    first = false;
  }
  if (first) throw ConfigError("empty disparity plan");
  return plan;
}

std::string format_plan(const DisparityPlan& plan) {
  std::string s = std::to_string(plan.background);
  for (const Region& r : plan.regions) {
    s += ";" + std::to_string(r.disparity) + "@" + std::to_string(r.x0) + "," + std::to_string(r.y0) + "," +
         std::to_string(r.x1) + "," + std::to_string(r.y1);
  }
  return s;
}

namespace {

void check_plan(const DisparityPlan& plan, int width, int height, int max_disp) {
  if (width < 1 || height < 1) throw ConfigError("synthetic pair needs positive dimensions");
  auto check_d = [&](int d, int extent, const std::string& what) {
    if (d < 0) throw ConfigError(what + ": negative disparity");
    if (d >= max_disp) throw ConfigError(what + ": disparity " + std::to_string(d) + " >= max_disp");
    if (d >= extent) throw ConfigError(what + ": disparity " + std::to_string(d) + " >= x-extent " + std::to_string(extent));
  };
  check_d(plan.background, width, "background");
  for (const Region& r : plan.regions) {
    if (r.x0 < 0 || r.y0 < 0 || r.x1 > width || r.y1 > height || r.x0 >= r.x1 || r.y0 >= r.y1) {
      throw ConfigError("region outside the image or empty");
    }
    check_d(r.disparity, r.x1 - r.x0, "region");
  }
}

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

// Smoothed noise plus per-pixel noise, one plane per channel.
Image texture(std::mt19937_64& rng, int width, int height) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Image coarse(width, height, 3);
  for (double& v : coarse.data()) v = gauss(rng);
  Image out(width, height, 3);
  constexpr int r = 2;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double s = 0.0;
        int n = 0;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
            s += coarse.at(c, yy, xx);
            ++n;
          }
        }
        // box blur of n unit gaussians has stddev 1/sqrt(n)
        out.at(c, y, x) = 0.5 + 0.25 * s / std::sqrt(static_cast<double>(n));
      }
    }
  }
  for (double& v : out.data()) v = quantize(v + 0.08 * gauss(rng));
  return out;
}

}  // namespace

SyntheticPair generate_synthetic_pair(std::uint64_t seed, int width, int height, const DisparityPlan& plan,
                                      int max_disp) {
  check_plan(plan, width, height, max_disp);
  std::vector<int> disp(static_cast<std::size_t>(width) * height, plan.background);
  for (const Region& r : plan.regions) {
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) disp[static_cast<std::size_t>(y) * width + x] = r.disparity;
    }
  }

  std::mt19937_64 rng(seed);
  SyntheticPair pair{Image(width, height, 3), texture(rng, width, height), DisparityMap(width, height)};
  const Image hidden = texture(rng, width, height);

  std::vector<int> owner(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    const int* d = disp.data() + static_cast<std::size_t>(y) * width;
    // A right-view column is seen by the left pixel with the largest disparity landing on it.
    std::fill(owner.begin(), owner.end(), -1);
    for (int x = 0; x < width; ++x) {
      if (x - d[x] >= 0) owner[x - d[x]] = std::max(owner[x - d[x]], d[x]);
    }
    for (int x = 0; x < width; ++x) {
      const int src = x - d[x];
      const bool visible = src >= 0 && owner[src] == d[x];
      for (int c = 0; c < 3; ++c) {
        pair.left.at(c, y, x) = visible ? pair.right.at(c, y, src) : hidden.at(c, y, x);
      }
      if (visible) {
        pair.gt.set(y, x, static_cast<float>(d[x]));
      } else {
        pair.gt.invalidate(y, x);
      }
    }
  }
  return pair;
}

}  // namespace mscv
