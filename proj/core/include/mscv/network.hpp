#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mscv/costvol.hpp"
#include "mscv/imagekit.hpp"
#include "mscv/tensor.hpp"
#include "mscv/weights.hpp"

namespace mscv {

// Feature channel width shared by all aggregation stages.
inline constexpr int kFeatureChannels = 32;
inline constexpr int kCorrDepthHalf = 96;
inline constexpr int kCorrDepthQuarter = 48;
// Padded canvas must survive four halvings (down to 1/16).
inline constexpr int kCanvasMultiple = 16;

enum class LayerKind { conv, deconv };

/// One learnable layer. Convs own `<name>.weight` [out,in,k,k] and `<name>.bias`;
/// deconvs own `<name>.weight` [in,out,2,2]. When `batchnorm` is set the layer also
/// owns `<name>.bn.{mean,var,gamma,beta}`, and `relu` selects the trailing ReLU.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::conv;
  int in = 0;
  int out = 0;
  int kernel = 1;
  int stride = 1;
  bool batchnorm = true;
  bool relu = true;

  std::size_t parameter_count() const;
};

/// The full layer table in forward order.
const std::vector<LayerSpec>& architecture();

/// Parameter names and shapes implied by `architecture()`, in order.
std::vector<ManifestEntry> architecture_manifest();

/// Deterministic fan-in scaled uniform initialization. Conv weights are drawn
/// from U(-sqrt(6/fan_in), sqrt(6/fan_in)), biases from U(-1/sqrt(fan_in), 1/sqrt(fan_in));
/// batchnorm statistics start at mean 0 / var 1, gamma 1, beta 0.
WeightStore init_weights(std::uint64_t seed);

/// Writes the layer table: name, kind, shape, parameter count.
void describe_architecture(std::ostream& os);

/// Multi-scale guidance from the traditional volume, at 1/2, 1/4, 1/8, 1/16.
struct GuideSet {
  std::array<Tensor, 4> levels;

  const Tensor& half() const { return levels[0]; }
  const Tensor& at_level(int level) const { return levels[static_cast<std::size_t>(level)]; }
};

struct UnetFeatures {
  Tensor half;
  Tensor quarter;
};

/// Records (stage, C, H, W) for every named intermediate of a forward pass.
struct ForwardTrace {
  struct Entry {
    std::string stage;
    int channels, height, width;
  };
  std::vector<Entry> entries;

  void record(std::string stage, const Tensor& t) {
    entries.push_back({std::move(stage), t.channels(), t.height(), t.width()});
  }
  std::vector<int> channel_trace() const;
  const Entry* find(const std::string& stage) const;
};

/// Forward-only network bound to a read-only weight store. Construction
/// validates every parameter against the architecture and throws LoadError
/// naming the first missing or mis-shaped one.
class Network {
 public:
  explicit Network(const WeightStore& weights);

  UnetFeatures unet_features(const Image& rgb, ForwardTrace* trace = nullptr) const;

  /// 288 -> 144 -> 72 -> 36 -> 32 (1x1 convs), concat the half-scale left image, then three 3x3 convs.
  CostVolume reduce_traditional(const CostVolume& vol288, const Image& left_half,
                                ForwardTrace* trace = nullptr) const;

  /// Single 1x1 conv 96 -> 32.
  CostVolume reduce_correlation(const CostVolume& vol96, ForwardTrace* trace = nullptr) const;

  GuideSet guide_encoder(const CostVolume& trad32, ForwardTrace* trace = nullptr) const;

  /// Stage 1 runs at 1/4 scale on the 48-deep correlation volume; stage 2 at 1/2 on the fused input.
  Tensor hourglass_forward(const Tensor& input, const GuideSet& guides, int stage,
                           ForwardTrace* trace = nullptr) const;

  Tensor cascade_forward(const CostVolume& trad32, const CostVolume& corr32_half,
                         const CostVolume& corr48_quarter, const GuideSet& guides,
                         ForwardTrace* trace = nullptr) const;

  /// 1x1 conv to a single channel, bilinear upsample to the padded canvas
  /// (twice the input dims), crop to `original`, clamp negatives to 0.
  DisparityMap disparity_head(const Tensor& refined, Dims original, ForwardTrace* trace = nullptr) const;

  DisparityMap full_forward(const Image& left, const Image& right, ForwardTrace* trace = nullptr) const;

  /// Applies the named layer (conv/deconv, then optional batchnorm/ReLU).
  Tensor apply(const std::string& layer, const Tensor& x) const;

  /// Residual block: relu(bn(conv2(relu(bn(conv1(x))))) + x).
  Tensor residual_block(const std::string& prefix, const Tensor& x) const;

 private:
  struct BoundLayer {
    const LayerSpec* spec = nullptr;
    ConvParams conv;
    BatchNormParams bn;
  };
  const BoundLayer& layer(const std::string& name) const;

  std::vector<BoundLayer> layers_;
  std::vector<std::string> names_;
};

/// Convenience wrapper: binds `weights` and runs the whole pipeline.
DisparityMap full_forward(const Image& left, const Image& right, const WeightStore& weights,
                          ForwardTrace* trace = nullptr);

}  // namespace mscv
