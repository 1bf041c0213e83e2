// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "mscv/costvol.hpp"
#include "mscv/disparity.hpp"
#include "mscv/imagekit.hpp"
#include "mscv/metrics.hpp"
#include "mscv/network.hpp"
#include "mscv/parallel.hpp"
#include "mscv/synth.hpp"
#include "mscv/tensor.hpp"
#include "mscv/weights.hpp"
#include "oracles.hpp"

using namespace mscv;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && pass) {
      pass = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CensusPlane to_plane(const std::vector<std::uint32_t>& bits, int w, int h) {
  CensusPlane p(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) p.at(y, x) = bits[static_cast<std::size_t>(y) * w + x];
  return p;
}

Outcome census_oracle() {
  Outcome o;
  oracle::Rng rng(1);
  std::vector<Image> planes;
  for (int i = 0; i < 100; ++i) planes.push_back(oracle::random_image_8bit(rng, 16, 16, 1));
  const auto t0 = Clock::now();
  int mismatches = 0;
  for (const Image& p : planes) mismatches += !(census_transform(p) == to_plane(oracle::census(p), 16, 16));
  const double s = seconds_since(t0);
  o.require(mismatches == 0, std::to_string(mismatches) + " planes differ");
  o.require(s < 1.0, "took " + fmt("%.3f s", s));
  if (o.pass) o.detail = "100 planes exact in " + fmt("%.4f s", s);
  return o;
}

Outcome matching_cost_oracles() {
  Outcome o;
  oracle::Rng rng(2);
  std::size_t checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Image l = oracle::random_image_8bit(rng, 16, 16, 1), r = oracle::random_image_8bit(rng, 16, 16, 1);
    const auto bl = oracle::census(l), br = oracle::census(r);
    const CostVolume h = hamming_cost_volume(to_plane(bl, 16, 16), to_plane(br, 16, 16), 8);
    const CostVolume a = ad_cost_volume(l, r, 8);
    for (int d = 0; d < 8; ++d)
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
          o.require(h.at(d, y, x) == oracle::hamming(bl, br, 16, d, y, x), "hamming mismatch");
          o.require(a.at(d, y, x) == oracle::abs_diff(l, r, d, y, x), "AD mismatch");
          checked += 2;
        }
  }
  if (o.pass) o.detail = std::to_string(checked) + " entries exact";
  return o;
}

bool in_interior(const DisparityMap& gt, int y, int x, int r) {
  if (y < r || x < r || y >= gt.height() - r || x >= gt.width() - r) return false;
  const float v = gt.value(y, x);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (!gt.valid(y + dy, x + dx) || gt.value(y + dy, x + dx) != v) return false;
  return true;
}

Outcome synthetic_traditional() {
  Outcome o;
  const std::vector<std::string> plans = {"0", "4", "8", "16", "4;16@96,48,224,176;8@300,120,460,230",
                                          "0;8@40,30,200,220;16@260,60,480,200;4@120,150,330,240"};
  double worst = 100.0, slowest = 0.0;
  std::uint64_t seed = 10;
  for (const std::string& plan : plans) {
    const SyntheticPair pair = generate_synthetic_pair(seed++, 512, 256, parse_plan(plan));
    const auto t0 = Clock::now();
    const DisparityMap d = census_wta_match(pair.left, pair.right, 192);
    slowest = std::max(slowest, seconds_since(t0));
    std::size_t n = 0, hit = 0;
    for (int y = 0; y < 256; ++y)
      for (int x = 0; x < 512; ++x) {
        if (!in_interior(pair.gt, y, x, 4)) continue;
        ++n;
        hit += d.value(y, x) == pair.gt.value(y, x);
      }
    const double pct = 100.0 * hit / std::max<std::size_t>(n, 1);
    worst = std::min(worst, pct);
    o.require(n > 0 && pct >= 95.0, "plan '" + plan + "' " + fmt("%.2f%% correct", pct));
  }
  o.require(slowest < 5.0, "slowest pair " + fmt("%.3f s", slowest));
  if (o.pass) o.detail = "worst plan " + fmt("%.2f%%", worst) + " correct, slowest " + fmt("%.3f s", slowest);
  return o;
}

Outcome correlation() {
  Outcome o;
  oracle::Rng rng(4);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor fl = oracle::random_tensor(rng, 4, 5, 6), fr = oracle::random_tensor(rng, 4, 5, 6);
    const CostVolume v = correlate_1d(fl, fr, 5, Scale::half);
    for (int d = 0; d < 5; ++d)
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 6; ++x) worst = std::max(worst, std::abs(v.at(d, y, x) - oracle::correlation(fl, fr, d, y, x)));
  }
  o.require(worst <= 1e-6, "max error " + fmt("%.3g", worst));

  // Random features shifted by k: argmax over d recovers k wherever x >= k.
  for (int k : {0, 1, 3, 7}) {
    const int W = 24, C = 64;
    const Tensor fr = oracle::random_tensor(rng, C, 3, W);
    Tensor fl(C, 3, W);
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < 3; ++y)
        for (int x = k; x < W; ++x) fl.at(c, y, x) = fr.at(c, y, x - k);
    const CostVolume v = correlate_1d(fl, fr, 10, Scale::full);
    const DisparityMap d = wta_disparity(CostVolume{v.costs, Scale::full, VolumeKind::matching_cost}, Objective::maximize);
    for (int y = 0; y < 3; ++y)
      for (int x = std::max(k, 9); x < W; ++x) o.require(d.value(y, x) == float(k), "shift " + std::to_string(k) + " not recovered");
  }
  if (o.pass) o.detail = "max error " + fmt("%.3g", worst) + ", shifts recovered";
  return o;
}

Outcome normalization() {
  Outcome o;
  oracle::Rng rng(5);
  double worst_mean = 0, worst_var = 0;
  for (int trial = 0; trial < 4; ++trial) {
    const Image l = oracle::random_image_8bit(rng, 96, 48, 3), r = oracle::random_image_8bit(rng, 96, 48, 3);
    const TraditionalVolumes tv = traditional_volumes(l, r, kTraditionalDepth);
    const CostVolume v = assemble_traditional(tv.census_y, tv.ad_u, tv.ad_v);
    o.require(v.depth() == 288, "depth " + std::to_string(v.depth()));
    double s = 0;
    for (float x : v.costs.data()) s += x;
    const double mean = s / v.costs.size();
    double q = 0;
    for (float x : v.costs.data()) q += (x - mean) * (x - mean);
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_var = std::max(worst_var, std::abs(q / v.costs.size() - 1.0));
  }
  o.require(worst_mean < 1e-6, "|mean| " + fmt("%.3g", worst_mean));
  o.require(worst_var < 1e-5, "|var-1| " + fmt("%.3g", worst_var));
  const CostVolume flat{Tensor(96, 4, 4, 3.0f), Scale::half, VolumeKind::matching_cost};
  const CostVolume z = assemble_traditional(flat, flat, flat);
  o.require(std::all_of(z.costs.data().begin(), z.costs.data().end(), [](float x) { return x == 0.0f; }),
            "zero-variance input not all zero");
  if (o.pass) o.detail = "|mean| " + fmt("%.2g", worst_mean) + ", |var-1| " + fmt("%.2g", worst_var);
  return o;
}

Outcome mask() {
  Outcome o;
  oracle::Rng rng(6);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto y = oracle::random_warped_row(rng, 64);
    bad += discontinuity_row(y, 3.0) != oracle::mask_row(y, 3.0);
  }
  o.require(bad == 0, std::to_string(bad) + " of 10000 rows differ");
  const std::vector<double> a{1, 2, 3, 9, 4, 5, 6, 10, 11}, b{1, 2, 3, 9, 4, 5, 6, 7, 11};
  o.require(discontinuity_row(a, 3) == std::vector<std::uint8_t>{0, 0, 0, 1, 1, 0, 0, 0, 0}, "worked pattern 1");
  o.require(discontinuity_row(b, 5) == std::vector<std::uint8_t>{0, 0, 0, 1, 1, 0, 0, 1, 1}, "worked pattern 2");
  if (o.pass) o.detail = "10000 rows match, both worked patterns exact";
  return o;
}

Outcome loss() {
  Outcome o;
  oracle::Rng rng(7);
  const double top = std::exp(std::log(192.0) / 8.0);
  DisparityMap gt(32, 16), pred(32, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 32; ++x) gt.set(y, x, float(oracle::uniform(rng, 0.5, 191)));
  o.require(loss_eval(gt, gt, discontinuity_mask(gt)).mean == 1.0, "equal maps mean != 1");

  DisparityMap big_gt(4, 4, 100.0f), big_pred(4, 4, 292.0f);
  const double m192 = loss_eval(big_pred, big_gt, DiscontinuityMask(4, 4)).mean;
  o.require(std::abs(m192 - top) <= 1e-9, "192 error gives " + fmt("%.12f", m192));

  double lo = 10, hi = 0;
  for (int trial = 0; trial < 200; ++trial) {
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 32; ++x) {
        gt.set(y, x, float(oracle::uniform(rng, 0.01, 191.99)));
        pred.set(y, x, float(oracle::uniform(rng, 0, 191.99)));
      }
    const DiscontinuityMask m = discontinuity_mask(gt);
    LossParams p;
    p.lambda = oracle::uniform(rng, 0, 1);
    const LossResult r = loss_eval(pred, gt, m, p);
    for (std::size_t i = 0; i < r.per_pixel.size(); ++i) {
      lo = std::min(lo, r.per_pixel[i]);
      hi = std::max(hi, r.per_pixel[i]);
    }
    p.lambda = 0;
    const LossResult a = loss_eval(pred, gt, m, p), b = loss_eval(pred, gt, DiscontinuityMask(32, 16), p);
    o.require(a.mean == b.mean && a.per_pixel == b.per_pixel, "lambda=0 depends on mask");
  }
  o.require(lo >= 1.0 && hi <= top, "range [" + fmt("%.6f", lo) + ", " + fmt("%.6f", hi) + "]");
  if (o.pass) o.detail = "192^(1/8)=" + fmt("%.12f", m192) + ", range ok, lambda=0 bit-equal";
  return o;
}

Outcome loss_gradient() {
  Outcome o;
  oracle::Rng rng(8);
  const double h = 1e-4;
  double worst = 0;
  int tested = 0;
  while (tested < 1000) {
    LossParams p;
    p.lambda = oracle::uniform(rng, 0, 1);
    const double gt = oracle::uniform(rng, 0.1, 191), pred = oracle::uniform(rng, 0, 191);
    const bool flag = oracle::uniform_int(rng, 0, 1) == 1;
    if (std::abs(gt - pred) * (1 - p.lambda * flag) < p.tau + 1e-3) continue;
    const double fd = (pixel_loss(pred + h, gt, flag, p) - pixel_loss(pred - h, gt, flag, p)) / (2 * h);
    worst = std::max(worst, std::abs(pixel_loss_grad(pred, gt, flag, p) - fd) / std::abs(fd));
    ++tested;
  }
  o.require(worst <= 1e-4, "max relative error " + fmt("%.3g", worst));

  DisparityMap gt(50, 1), pred(50, 1);
  for (int x = 0; x < 50; ++x) {
    gt.set(0, x, float(oracle::uniform(rng, 1, 190)));
    pred.set(0, x, gt.value(0, x) + float(oracle::uniform(rng, -0.99, 0.99)));
  }
  const auto g = loss_grad(pred, gt, discontinuity_mask(gt));
  o.require(std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; }), "clamped pixel with nonzero gradient");
  if (o.pass) o.detail = "1000 pixels, max relative error " + fmt("%.3g", worst);
  return o;
}

Outcome tensor_engine() {
  Outcome o;
  oracle::Rng rng(9);
  double conv_err = 0, deconv_err = 0, bn_err = 0, bil_err = 0, adj_err = 0;
  auto max_diff = [](const Tensor& a, const Tensor& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, double(std::abs(a.data()[i] - b.data()[i])));
    return m;
  };
  for (int trial = 0; trial < 20; ++trial) {
    const int c = oracle::uniform_int(rng, 1, 4), h = oracle::uniform_int(rng, 3, 9), w = oracle::uniform_int(rng, 3, 9);
    const int out = oracle::uniform_int(rng, 1, 4), k = trial % 2 ? 3 : 1, s = trial % 3 ? 1 : 2;
    const Tensor x = oracle::random_tensor(rng, c, h, w);
    const ConvParams p = oracle::random_conv(rng, out, c, k, s);
    conv_err = std::max(conv_err, max_diff(conv2d(x, p), oracle::conv(x, p, true)));

    ConvParams d = oracle::random_conv(rng, out, c, 2, 2);
    d.in_channels = c;
    d.out_channels = out;
    deconv_err = std::max(deconv_err, max_diff(deconv2d_s2(x, d), oracle::deconv_scatter(x, d)));

    std::fill(d.bias.begin(), d.bias.end(), 0.0f);
    const ConvParams fwd{c, out, 2, 2, 2, d.weights, std::vector<float>(static_cast<std::size_t>(c), 0.0f)};
    const Tensor y = oracle::random_tensor(rng, out, 2 * h, 2 * w);
    const double lhs = oracle::dot(conv2d(y, fwd, Padding::valid), x), rhs = oracle::dot(y, deconv2d_s2(x, d));
    adj_err = std::max(adj_err, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));

    BatchNormParams bn;
    for (int i = 0; i < c; ++i) {
      bn.mean.push_back(float(oracle::uniform(rng, -1, 1)));
      bn.var.push_back(float(oracle::uniform(rng, 0.1, 2)));
      bn.gamma.push_back(float(oracle::uniform(rng, -2, 2)));
      bn.beta.push_back(float(oracle::uniform(rng, -1, 1)));
    }
    const Tensor b = batchnorm_relu(x, bn);
    for (int ch = 0; ch < c; ++ch)
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
          bn_err = std::max(bn_err, std::abs(b.at(ch, yy, xx) - oracle::batchnorm(x.at(ch, yy, xx), bn.mean[ch], bn.var[ch],
                                                                                  bn.gamma[ch], bn.beta[ch], true)));

    const int oh = oracle::uniform_int(rng, 1, 20), ow = oracle::uniform_int(rng, 1, 20);
    const Tensor r = bilinear_resize(x, oh, ow);
    for (int ch = 0; ch < c; ++ch)
      for (int yy = 0; yy < oh; ++yy)
        for (int xx = 0; xx < ow; ++xx)
          bil_err = std::max(bil_err, std::abs(r.at(ch, yy, xx) - oracle::bilinear(x, ch, oh, ow, yy, xx)));
  }
  o.require(conv_err <= 1e-5, "conv " + fmt("%.3g", conv_err));
  o.require(deconv_err <= 1e-5, "deconv " + fmt("%.3g", deconv_err));
  o.require(bn_err <= 1e-5, "batchnorm " + fmt("%.3g", bn_err));
  o.require(bil_err <= 1e-5, "bilinear " + fmt("%.3g", bil_err));
  o.require(adj_err <= 1e-5, "adjoint " + fmt("%.3g", adj_err));
  if (o.pass) {
    o.detail = "conv " + fmt("%.2g", conv_err) + " deconv " + fmt("%.2g", deconv_err) + " bn " + fmt("%.2g", bn_err) +
               " bilinear " + fmt("%.2g", bil_err) + " adjoint " + fmt("%.2g", adj_err);
  }
  return o;
}

Outcome full_forward_kitti() {
  Outcome o;
  const SyntheticPair pair = generate_synthetic_pair(11, 1240, 376, parse_plan("6;24@300,100,700,300;12@800,40,1100,200"));
  const Network net(init_weights(2024));
  const int hw = static_cast<int>(std::max(2u, std::min(8u, std::thread::hardware_concurrency())));

  set_num_threads(1);
  ForwardTrace trace;
  auto t0 = Clock::now();
  const DisparityMap a = net.full_forward(pair.left, pair.right, &trace);
  const double single = seconds_since(t0);
  const DisparityMap b = net.full_forward(pair.left, pair.right);
  set_num_threads(hw);
  t0 = Clock::now();
  const DisparityMap c = net.full_forward(pair.left, pair.right);
  const double multi = seconds_since(t0);
  set_num_threads(1);

  o.require(a.width() == 1240 && a.height() == 376, "output dims");
  o.require(std::all_of(a.values().begin(), a.values().end(), [](float v) { return std::isfinite(v); }), "non-finite output");
  o.require(a == b, "two runs differ");
  o.require(c == a, "threads=" + std::to_string(hw) + " differs from threads=1");
  const auto ch = trace.channel_trace();
  const std::vector<int> chain{288, 144, 72, 36, 32};
  o.require(std::search(ch.begin(), ch.end(), chain.begin(), chain.end()) != ch.end(), "channel chain missing");
  const auto* refined = trace.find("refined");
  o.require(refined && refined->channels == 32 && refined->height == 384 / 2 && refined->width == 1248 / 2,
            "refined shape");
  o.require(single < 120.0, "took " + fmt("%.1f s", single));
  if (o.pass) {
    o.detail = "376x1240 in " + fmt("%.2f s", single) + " (1 thread), " + fmt("%.2f s", multi) + " (" +
               std::to_string(hw) + " threads), refined 32x192x624, bit-identical";
  }
  return o;
}

Outcome metrics() {
  Outcome o;
  DisparityMap gt(2, 2, 10.0f), pred(2, 2, 10.0f);
  pred.set(0, 1, 11.0f);
  pred.set(1, 0, 8.0f);
  pred.set(1, 1, 15.0f);
  o.require(epe(pred, gt) == 2.0, "epe");
  o.require(outlier_rate(pred, gt, 3) == 25.0, ">3px");
  o.require(outlier_rate(pred, gt, 5) == 0.0, ">5px strict");
  const D1 d = d1_metrics(pred, gt, PixelMask{0, 0, 0, 1});
  o.require(d.fg == 100.0 && d.all == 25.0 && d.bg == 0.0, "hand D1");
  const D1 none = d1_metrics(pred, gt, PixelMask{});
  o.require(!none.fg && none.all == none.bg, "absent foreground");

  oracle::Rng rng(12);
  double worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int w = oracle::uniform_int(rng, 1, 24), h = oracle::uniform_int(rng, 1, 24);
    DisparityMap g(w, h), p(w, h);
    PixelMask fg(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        g.set(y, x, float(oracle::uniform(rng, 0, 60)));
        p.set(y, x, float(oracle::uniform(rng, 0, 60)));
        fg[static_cast<std::size_t>(y) * w + x] = oracle::uniform_int(rng, 0, 3) == 0;
      }
    const D1 r = d1_metrics(p, g, fg);
    const std::size_t n = r.bg_count + r.fg_count;
    o.require(n == g.valid_count(), "region counts");
    o.require(std::lround(*r.all * n / 100.0) == static_cast<long>(r.bg_outliers + r.fg_outliers), "outlier counts");
    const double lhs = *r.all * n, rhs = r.bg.value_or(0) * r.bg_count + r.fg.value_or(0) * r.fg_count;
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, lhs));
  }
  o.require(worst <= 1e-12, "weighted identity off by " + fmt("%.3g", worst));
  if (o.pass) o.detail = "hand cases exact, weighted identity within " + fmt("%.2g", worst) + " on 500 maps";
  return o;
}

Outcome round_trips() {
  Outcome o;
  oracle::Rng rng(13);
  const WeightStore w = init_weights(5);
  const auto enc = encode_weights(w);
  const WeightStore back = decode_weights(enc);
  o.require(back == w && encode_weights(back) == enc, "weights");
  const auto path = std::filesystem::temp_directory_path() / "mscv_acceptance_weights.bin";
  save_weights(w, path);
  o.require(load_weights(path) == w, "weights file");
  std::filesystem::remove(path);

  DisparityMap m(33, 17);
  for (int y = 0; y < 17; ++y)
    for (int x = 0; x < 33; ++x) m.set(y, x, float(oracle::uniform(rng, 0, 191.9)));
  m.invalidate(3, 3);
  const auto pfm = encode_pfm(m);
  o.require(decode_pfm(pfm) == m && encode_pfm(decode_pfm(pfm)) == pfm, "pfm");
  for (int c : {1, 3}) {
    const Image img = oracle::random_image_8bit(rng, 21, 11, c);
    const auto pnm = encode_pnm(img);
    o.require(decode_pnm(pnm) == img && encode_pnm(decode_pnm(pnm)) == pnm, c == 1 ? "pgm" : "ppm");
  }
  if (o.pass) o.detail = std::to_string(enc.size()) + "-byte weight file, PFM, PGM and PPM bit-exact";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"census transform vs double-loop oracle", census_oracle},
      {"hamming and AD volumes vs brute force", matching_cost_oracles},
      {"synthetic census WTA end to end", synthetic_traditional},
      {"1D correlation vs triple loop and shift recovery", correlation},
      {"global normalization of the 288-channel volume", normalization},
      {"discontinuity mask vs run enumeration", mask},
      {"loss values and invariants", loss},
      {"loss gradient vs central differences", loss_gradient},
      {"conv, deconv, batchnorm, bilinear vs oracles", tensor_engine},
      {"full forward on a padded 376x1240 pair", full_forward_kitti},
      {"EPE, outlier and D1 metrics", metrics},
      {"weight, PFM and PNM round trips", round_trips},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    failed += !r.pass;
    std::printf("%s  %2zu  %s: %s\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
