#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mscv {

/// C x H x W float array, channel-major planes.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, float fill = 0.0f);
  Tensor(int channels, int height, int width, std::vector<float> data);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  float& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  float at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  float* row(int c, int y) { return data_.data() + index(c, y, 0); }
  const float* row(int c, int y) const { return data_.data() + index(c, y, 0); }

  std::span<float> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(int c) const { return {data_.data() + c * plane_size(), plane_size()}; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const Tensor& o) const noexcept {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// Weights are laid out [out][in][kh][kw].
struct ConvParams {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  std::vector<float> weights;
  std::vector<float> bias;

  float& w(int o, int i, int ky, int kx) {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) * kernel_w + kx];
  }
  float w(int o, int i, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) * kernel_w + kx];
  }
};

/// Inference-mode batch statistics and affine terms, one entry per channel.
struct BatchNormParams {
  std::vector<float> mean;
  std::vector<float> var;
  std::vector<float> gamma;
  std::vector<float> beta;
};

enum class Padding { same, valid };

inline constexpr float kBatchNormEps = 1e-5f;

/// Cross-correlation plus bias. `same` zero-pads so that the output is
/// ceil(H/stride) x ceil(W/stride); `valid` uses no padding.
Tensor conv2d(const Tensor& x, const ConvParams& p, Padding padding = Padding::same);

/// Transposed 2x2 stride-2 convolution; weights laid out [in][out][2][2]
/// (matching the conv it is the adjoint of), output is exactly 2H x 2W.
Tensor deconv2d_s2(const Tensor& x, const ConvParams& p);

Tensor batchnorm(const Tensor& x, const BatchNormParams& bn, bool relu);
inline Tensor batchnorm_relu(const Tensor& x, const BatchNormParams& bn) { return batchnorm(x, bn, true); }

Tensor relu(Tensor x);
Tensor add(const Tensor& a, const Tensor& b);

/// Half-pixel-center bilinear resampling with edge clamping.
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);

Tensor concat_channels(std::span<const Tensor* const> xs);
Tensor concat_channels(std::initializer_list<const Tensor*> xs);

}  // namespace mscv
