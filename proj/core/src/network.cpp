#include "mscv/network.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "mscv/error.hpp"

namespace mscv {

std::size_t LayerSpec::parameter_count() const {
  const std::size_t k = kind == LayerKind::deconv ? 2 : static_cast<std::size_t>(kernel);
  std::size_t n = static_cast<std::size_t>(in) * out * k * k + static_cast<std::size_t>(out);
  if (batchnorm) n += 4 * static_cast<std::size_t>(out);
  return n;
}

namespace {

constexpr int F = kFeatureChannels;

LayerSpec conv(std::string name, int in, int out, int kernel, int stride = 1, bool bn = true, bool relu = true) {
  return {std::move(name), LayerKind::conv, in, out, kernel, stride, bn, relu};
}

LayerSpec deconv(std::string name, int in, int out) {
  return {std::move(name), LayerKind::deconv, in, out, 2, 2, true, true};
}

void add_residual(std::vector<LayerSpec>& t, const std::string& prefix) {
  t.push_back(conv(prefix + ".conv1", F, F, 3));
  // ReLU is applied after the identity shortcut is added.
  t.push_back(conv(prefix + ".conv2", F, F, 3, 1, true, false));
}

// Guide level index for a scale denominator: 2 -> 0, 4 -> 1, 8 -> 2, 16 -> 3.
int level_of(int denom) { return denom == 2 ? 0 : denom == 4 ? 1 : denom == 8 ? 2 : 3; }

std::vector<int> hourglass_down_scales(int stage) {
  return stage == 1 ? std::vector<int>{8, 16} : std::vector<int>{4, 8, 16};
}
std::vector<int> hourglass_up_scales(int stage) {
  return stage == 1 ? std::vector<int>{8, 4} : std::vector<int>{8, 4, 2};
}

std::vector<LayerSpec> build_architecture() {
  std::vector<LayerSpec> t;
  // Unet feature extractor: 16/32/64/128 channels at 1, 1/2, 1/4, 1/8.
  t.push_back(conv("unet.enc1", 3, 16, 3));
  t.push_back(conv("unet.down2", 16, 32, 2, 2));
  t.push_back(conv("unet.enc2", 32, 32, 3));
  t.push_back(conv("unet.down4", 32, 64, 2, 2));
  t.push_back(conv("unet.enc4", 64, 64, 3));
  t.push_back(conv("unet.down8", 64, 128, 2, 2));
  t.push_back(conv("unet.enc8", 128, 128, 3));
  t.push_back(deconv("unet.up4.deconv", 128, 64));
  t.push_back(conv("unet.up4.reduce", 128, 64, 1));
  t.push_back(conv("unet.up4.conv", 64, F, 3));
  t.push_back(deconv("unet.up2.deconv", F, F));
  t.push_back(conv("unet.up2.reduce", 2 * F, F, 1));
  t.push_back(conv("unet.up2.conv", F, F, 3));

  // Traditional volume reduction.
  t.push_back(conv("trad.reduce1", 288, 144, 1));
  t.push_back(conv("trad.reduce2", 144, 72, 1));
  t.push_back(conv("trad.reduce3", 72, 36, 1));
  t.push_back(conv("trad.reduce4", 36, 32, 1));
  t.push_back(conv("trad.harvest1", 35, F, 3));
  t.push_back(conv("trad.harvest2", F, F, 3));
  t.push_back(conv("trad.harvest3", F, F, 3));

  t.push_back(conv("corr.reduce", kCorrDepthHalf, F, 1));

  t.push_back(conv("guide.g2", F, F, 3));
  for (int s : {4, 8, 16}) {
    const std::string p = "guide.g" + std::to_string(s);
    t.push_back(conv(p + ".down", F, F, 3, 2));
    t.push_back(conv(p + ".conv", F, F, 3));
  }

  for (int stage : {1, 2}) {
    const std::string hg = "hg" + std::to_string(stage);
    t.push_back(conv(hg + ".stem", stage == 1 ? kCorrDepthQuarter : F, F, 3));
    for (int s : hourglass_down_scales(stage)) {
      const std::string p = hg + ".down" + std::to_string(s);
      t.push_back(conv(p + ".conv", F, F, 3, 2));
      add_residual(t, p + ".res");
    }
    t.push_back(conv(hg + ".bottleneck", 2 * F, F, 1));
    for (int s : hourglass_up_scales(stage)) {
      const std::string p = hg + ".up" + std::to_string(s);
      t.push_back(deconv(p + ".deconv", F, F));
      t.push_back(conv(p + ".fuse", 2 * F, F, 1));
      t.push_back(conv(p + ".conv", F, F, 3));
    }
    if (stage == 1) {
      t.push_back(deconv("cascade.upsample", F, F));
      t.push_back(conv("cascade.fuse", 3 * F, F, 1));
    }
  }

  t.push_back(conv("head.disparity", F, 1, 1, 1, false, false));
  return t;
}

std::vector<int> weight_shape(const LayerSpec& l) {
  return l.kind == LayerKind::deconv ? std::vector<int>{l.in, l.out, 2, 2}
                                     : std::vector<int>{l.out, l.in, l.kernel, l.kernel};
}

// Portable uniform in [0,1) from the top 53 bits.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

const std::vector<LayerSpec>& architecture() {
  static const std::vector<LayerSpec> table = build_architecture();
  return table;
}

std::vector<ManifestEntry> architecture_manifest() {
  std::vector<ManifestEntry> m;
  for (const LayerSpec& l : architecture()) {
    m.push_back({l.name + ".weight", weight_shape(l)});
    m.push_back({l.name + ".bias", {l.out}});
    if (l.batchnorm) {
      for (const char* s : {".bn.mean", ".bn.var", ".bn.gamma", ".bn.beta"}) m.push_back({l.name + s, {l.out}});
    }
  }
  return m;
}

WeightStore init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightStore store;
  for (const LayerSpec& l : architecture()) {
    const int fan_in = l.kind == LayerKind::deconv ? l.in : l.in * l.kernel * l.kernel;
    const double wlim = std::sqrt(6.0 / fan_in);
    const double blim = 1.0 / std::sqrt(static_cast<double>(fan_in));
    auto shape = weight_shape(l);
    std::vector<float> w(static_cast<std::size_t>(shape[0]) * shape[1] * shape[2] * shape[3]);
    for (float& v : w) v = static_cast<float>(wlim * (2.0 * unit(rng) - 1.0));
    std::vector<float> b(static_cast<std::size_t>(l.out));
    for (float& v : b) v = static_cast<float>(blim * (2.0 * unit(rng) - 1.0));
    store.add(l.name + ".weight", std::move(shape), std::move(w));
    store.add(l.name + ".bias", {l.out}, std::move(b));
    if (l.batchnorm) {
      const auto n = static_cast<std::size_t>(l.out);
      store.add(l.name + ".bn.mean", {l.out}, std::vector<float>(n, 0.0f));
      store.add(l.name + ".bn.var", {l.out}, std::vector<float>(n, 1.0f));
      store.add(l.name + ".bn.gamma", {l.out}, std::vector<float>(n, 1.0f));
      store.add(l.name + ".bn.beta", {l.out}, std::vector<float>(n, 0.0f));
    }
  }
  return store;
}

void describe_architecture(std::ostream& os) {
  std::size_t total = 0;
  os << std::left << std::setw(28) << "layer" << std::setw(8) << "kind" << std::setw(18) << "weight"
     << std::setw(8) << "stride" << std::setw(6) << "bn" << std::right << std::setw(10) << "params" << '\n';
  for (const LayerSpec& l : architecture()) {
    const auto s = weight_shape(l);
    const std::string shape = std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]) +
                              "x" + std::to_string(s[3]);
    os << std::left << std::setw(28) << l.name << std::setw(8) << (l.kind == LayerKind::conv ? "conv" : "deconv")
       << std::setw(18) << shape << std::setw(8) << l.stride << std::setw(6)
       << (l.batchnorm ? (l.relu ? "relu" : "bn") : "-") << std::right << std::setw(10) << l.parameter_count()
       << '\n';
    total += l.parameter_count();
  }
  os << "layers=" << architecture().size() << " parameters=" << total << '\n';
}

std::vector<int> ForwardTrace::channel_trace() const {
  std::vector<int> c;
  for (const auto& e : entries) c.push_back(e.channels);
  return c;
}

const ForwardTrace::Entry* ForwardTrace::find(const std::string& stage) const {
  for (const auto& e : entries) {
    if (e.stage == stage) return &e;
  }
  return nullptr;
}

Network::Network(const WeightStore& weights) {
  for (const LayerSpec& l : architecture()) {
    BoundLayer b;
    b.spec = &l;
    const auto ws = weight_shape(l);
    const ParamArray& w = weights.require(l.name + ".weight", ws);
    const std::vector<int> vec{l.out};
    const ParamArray& bias = weights.require(l.name + ".bias", vec);
    b.conv = ConvParams{l.out, l.in, l.kind == LayerKind::deconv ? 2 : l.kernel,
                        l.kind == LayerKind::deconv ? 2 : l.kernel, l.stride, w.values, bias.values};
    if (l.batchnorm) {
      b.bn.mean = weights.require(l.name + ".bn.mean", vec).values;
      b.bn.var = weights.require(l.name + ".bn.var", vec).values;
      b.bn.gamma = weights.require(l.name + ".bn.gamma", vec).values;
      b.bn.beta = weights.require(l.name + ".bn.beta", vec).values;
      for (float v : b.bn.var) {
        if (!(v >= 0.0f)) throw LoadError("negative batchnorm variance", l.name + ".bn.var");
      }
    }
    names_.push_back(l.name);
    layers_.push_back(std::move(b));
  }
}

const Network::BoundLayer& Network::layer(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  MSCV_REQUIRE(it != names_.end(), "Network: unknown layer " + name);
  return layers_[static_cast<std::size_t>(it - names_.begin())];
}

Tensor Network::apply(const std::string& name, const Tensor& x) const {
  const BoundLayer& l = layer(name);
  Tensor y = l.spec->kind == LayerKind::deconv ? deconv2d_s2(x, l.conv) : conv2d(x, l.conv, Padding::same);
  if (l.spec->batchnorm) y = batchnorm(y, l.bn, l.spec->relu);
  return y;
}

Tensor Network::residual_block(const std::string& prefix, const Tensor& x) const {
  const Tensor h = apply(prefix + ".conv2", apply(prefix + ".conv1", x));
  return relu(add(h, x));
}

namespace {

void trace_if(ForwardTrace* trace, const std::string& stage, const Tensor& t) {
  if (trace) trace->record(stage, t);
}

Tensor image_to_tensor(const Image& img) {
  std::vector<float> data(img.data().begin(), img.data().end());
  return Tensor(img.channels(), img.height(), img.width(), std::move(data));
}

void require_divisible(int h, int w, int multiple, const char* what) {
  MSCV_REQUIRE(h % multiple == 0 && w % multiple == 0,
               std::string(what) + ": spatial dims must be divisible by " + std::to_string(multiple));
}

}  // namespace

UnetFeatures Network::unet_features(const Image& rgb, ForwardTrace* trace) const {
  MSCV_REQUIRE(rgb.channels() == 3, "unet_features: expected an RGB image");
  require_divisible(rgb.height(), rgb.width(), kCanvasMultiple, "unet_features");
  const Tensor e1 = apply("unet.enc1", image_to_tensor(rgb));
  const Tensor e2 = apply("unet.enc2", apply("unet.down2", e1));
  const Tensor e4 = apply("unet.enc4", apply("unet.down4", e2));
  const Tensor e8 = apply("unet.enc8", apply("unet.down8", e4));
  trace_if(trace, "unet.enc8", e8);

  const Tensor u4 = apply("unet.up4.deconv", e8);
  Tensor q = apply("unet.up4.conv", apply("unet.up4.reduce", concat_channels({&u4, &e4})));
  trace_if(trace, "unet.quarter", q);
  const Tensor u2 = apply("unet.up2.deconv", q);
  Tensor h = apply("unet.up2.conv", apply("unet.up2.reduce", concat_channels({&u2, &e2})));
  trace_if(trace, "unet.half", h);
  return {std::move(h), std::move(q)};
}

CostVolume Network::reduce_traditional(const CostVolume& vol288, const Image& left_half, ForwardTrace* trace) const {
  MSCV_REQUIRE(vol288.depth() == 3 * kTraditionalDepth, "reduce_traditional: expected a 288-deep volume");
  MSCV_REQUIRE(vol288.scale == Scale::half, "reduce_traditional: volume must be at half scale");
  MSCV_REQUIRE(left_half.channels() == 3 && left_half.width() == vol288.width() &&
                   left_half.height() == vol288.height(),
               "reduce_traditional: left image must be 3-channel at the volume's resolution");
  trace_if(trace, "trad.assembled", vol288.costs);
  Tensor x = vol288.costs;
  for (const char* name : {"trad.reduce1", "trad.reduce2", "trad.reduce3", "trad.reduce4"}) {
    x = apply(name, x);
    trace_if(trace, name, x);
  }
  const Tensor img = image_to_tensor(left_half);
  x = concat_channels({&x, &img});
  trace_if(trace, "trad.with_image", x);
  for (const char* name : {"trad.harvest1", "trad.harvest2", "trad.harvest3"}) {
    x = apply(name, x);
    trace_if(trace, name, x);
  }
  return {std::move(x), Scale::half, VolumeKind::feature};
}

CostVolume Network::reduce_correlation(const CostVolume& vol96, ForwardTrace* trace) const {
  MSCV_REQUIRE(vol96.depth() == kCorrDepthHalf, "reduce_correlation: expected a 96-deep volume");
  Tensor x = apply("corr.reduce", vol96.costs);
  trace_if(trace, "corr.reduce", x);
  return {std::move(x), vol96.scale, VolumeKind::feature};
}

GuideSet Network::guide_encoder(const CostVolume& trad32, ForwardTrace* trace) const {
  MSCV_REQUIRE(trad32.scale == Scale::half, "guide_encoder: input must be at half scale");
  MSCV_REQUIRE(trad32.depth() == F, "guide_encoder: expected 32 channels");
  require_divisible(trad32.height(), trad32.width(), kCanvasMultiple / 2, "guide_encoder");
  GuideSet g;
  g.levels[0] = apply("guide.g2", trad32.costs);
  trace_if(trace, "guide.g2", g.levels[0]);
  int level = 1;
  for (int s : {4, 8, 16}) {
    const std::string p = "guide.g" + std::to_string(s);
    g.levels[level] = apply(p + ".conv", apply(p + ".down", g.levels[level - 1]));
    trace_if(trace, p, g.levels[level]);
    ++level;
  }
  return g;
}

Tensor Network::hourglass_forward(const Tensor& input, const GuideSet& guides, int stage, ForwardTrace* trace) const {
  MSCV_REQUIRE(stage == 1 || stage == 2, "hourglass_forward: stage must be 1 or 2");
  const Tensor& at_input_scale = guides.at_level(stage == 1 ? 1 : 0);
  MSCV_REQUIRE(input.height() == at_input_scale.height() && input.width() == at_input_scale.width(),
               "hourglass_forward: input scale does not match the guide pyramid");
  const std::string hg = "hg" + std::to_string(stage);
  Tensor x = apply(hg + ".stem", input);
  for (int s : hourglass_down_scales(stage)) {
    const std::string p = hg + ".down" + std::to_string(s);
    x = residual_block(p + ".res", apply(p + ".conv", x));
    trace_if(trace, p, x);
  }
  const Tensor& deepest = guides.at_level(3);
  MSCV_REQUIRE(x.height() == deepest.height() && x.width() == deepest.width(),
               "hourglass_forward: 1/16 guide scale mismatch");
  x = apply(hg + ".bottleneck", concat_channels({&x, &deepest}));
  trace_if(trace, hg + ".bottleneck", x);
  for (int s : hourglass_up_scales(stage)) {
    const std::string p = hg + ".up" + std::to_string(s);
    const Tensor up = apply(p + ".deconv", x);
    const Tensor& guide = guides.at_level(level_of(s));
    MSCV_REQUIRE(up.height() == guide.height() && up.width() == guide.width(),
                 "hourglass_forward: guide scale mismatch at 1/" + std::to_string(s));
    x = apply(p + ".conv", apply(p + ".fuse", concat_channels({&up, &guide})));
    trace_if(trace, p, x);
  }
  return x;
}

Tensor Network::cascade_forward(const CostVolume& trad32, const CostVolume& corr32_half,
                                const CostVolume& corr48_quarter, const GuideSet& guides, ForwardTrace* trace) const {
  MSCV_REQUIRE(corr48_quarter.depth() == kCorrDepthQuarter && corr48_quarter.scale == Scale::quarter,
               "cascade_forward: expected the 48-deep quarter-scale correlation volume");
  MSCV_REQUIRE(corr32_half.depth() == F && trad32.depth() == F, "cascade_forward: expected 32-channel half-scale volumes");
  const Tensor h1 = hourglass_forward(corr48_quarter.costs, guides, 1, trace);
  const Tensor u = apply("cascade.upsample", h1);
  trace_if(trace, "cascade.upsample", u);
  const Tensor fused = apply("cascade.fuse", concat_channels({&u, &corr32_half.costs, &trad32.costs}));
  trace_if(trace, "cascade.fuse", fused);
  Tensor refined = hourglass_forward(fused, guides, 2, trace);
  trace_if(trace, "refined", refined);
  return refined;
}

DisparityMap Network::disparity_head(const Tensor& refined, Dims original, ForwardTrace* trace) const {
  MSCV_REQUIRE(refined.channels() == F, "disparity_head: expected 32 channels");
  MSCV_REQUIRE(original.width <= 2 * refined.width() && original.height <= 2 * refined.height(),
               "disparity_head: original dims exceed the padded canvas");
  const Tensor half = apply("head.disparity", refined);
  const Tensor full = bilinear_resize(half, 2 * refined.height(), 2 * refined.width());
  trace_if(trace, "head.full", full);
  DisparityMap map(original.width, original.height);
  for (int y = 0; y < original.height; ++y) {
    for (int x = 0; x < original.width; ++x) map.set(y, x, std::max(full.at(0, y, x), 0.0f));
  }
  return map;
}

DisparityMap Network::full_forward(const Image& left, const Image& right, ForwardTrace* trace) const {
  MSCV_REQUIRE(left.channels() == 3 && right.channels() == 3, "full_forward: expected RGB images");
  MSCV_REQUIRE(left.width() == right.width() && left.height() == right.height(),
               "full_forward: stereo pair differs in size");
  const Padded lp = pad_reflect(left, kCanvasMultiple);
  const Padded rp = pad_reflect(right, kCanvasMultiple);

  const TraditionalVolumes tv = traditional_volumes(lp.image, rp.image, kTraditionalDepth);
  const CostVolume trad32 =
      reduce_traditional(assemble_traditional(tv.census_y, tv.ad_u, tv.ad_v), tv.left_half_yuv, trace);

  const UnetFeatures fl = unet_features(lp.image, trace);
  const UnetFeatures fr = unet_features(rp.image);
  const CostVolume corr_half = correlate_1d(fl.half, fr.half, kCorrDepthHalf, Scale::half);
  const CostVolume corr_quarter = correlate_1d(fl.quarter, fr.quarter, kCorrDepthQuarter, Scale::quarter);
  trace_if(trace, "corr.half", corr_half.costs);
  trace_if(trace, "corr.quarter", corr_quarter.costs);
  const CostVolume corr32 = reduce_correlation(corr_half, trace);

  const GuideSet guides = guide_encoder(trad32, trace);
  const Tensor refined = cascade_forward(trad32, corr32, corr_quarter, guides, trace);
  return disparity_head(refined, lp.original, trace);
}

DisparityMap full_forward(const Image& left, const Image& right, const WeightStore& weights, ForwardTrace* trace) {
  return Network(weights).full_forward(left, right, trace);
}

}  // namespace mscv
