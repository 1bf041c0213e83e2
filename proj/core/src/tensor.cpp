#include "mscv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mscv/error.hpp"
#include "mscv/parallel.hpp"

namespace mscv {

Tensor::Tensor(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
  MSCV_REQUIRE(channels >= 0 && height >= 0 && width >= 0, "Tensor: negative dimension");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

Tensor::Tensor(int channels, int height, int width, std::vector<float> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  MSCV_REQUIRE(channels >= 0 && height >= 0 && width >= 0, "Tensor: negative dimension");
  MSCV_REQUIRE(data_.size() == static_cast<std::size_t>(channels) * height * width,
               "Tensor: data length does not match shape");
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

namespace {

void check_params(const ConvParams& p) {
  MSCV_REQUIRE(p.out_channels > 0 && p.in_channels > 0 && p.kernel_h > 0 && p.kernel_w > 0,
               "ConvParams: non-positive shape");
  MSCV_REQUIRE(p.weights.size() == static_cast<std::size_t>(p.out_channels) * p.in_channels *
                                       p.kernel_h * p.kernel_w,
               "ConvParams: weight length != out*in*kh*kw");
  MSCV_REQUIRE(p.bias.size() == static_cast<std::size_t>(p.out_channels), "ConvParams: bias length != out");
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

Tensor conv2d(const Tensor& x, const ConvParams& p, Padding padding) {
  check_params(p);
  MSCV_REQUIRE(p.stride == 1 || p.stride == 2, "conv2d: stride must be 1 or 2");
  MSCV_REQUIRE(x.channels() == p.in_channels,
               "conv2d: input has " + std::to_string(x.channels()) + " channels, kernel expects " +
                   std::to_string(p.in_channels));
  const int s = p.stride, kh = p.kernel_h, kw = p.kernel_w;
  const int H = x.height(), W = x.width();
  int out_h = 0, out_w = 0, pad_t = 0, pad_l = 0;
  if (padding == Padding::same) {
    out_h = ceil_div(H, s);
    out_w = ceil_div(W, s);
    pad_t = std::max((out_h - 1) * s + kh - H, 0) / 2;
    pad_l = std::max((out_w - 1) * s + kw - W, 0) / 2;
  } else {
    MSCV_REQUIRE(H >= kh && W >= kw, "conv2d: input smaller than kernel with valid padding");
    out_h = (H - kh) / s + 1;
    out_w = (W - kw) / s + 1;
  }

  Tensor out(p.out_channels, out_h, out_w);
  parallel_for(static_cast<std::size_t>(out_h), [&](std::size_t row) {
    const int oy = static_cast<int>(row);
    for (int oc = 0; oc < p.out_channels; ++oc) {
      float* acc = out.row(oc, oy);
      std::fill(acc, acc + out_w, p.bias[oc]);
      for (int ic = 0; ic < p.in_channels; ++ic) {
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * s + ky - pad_t;
          if (iy < 0 || iy >= H) continue;
          const float* in = x.row(ic, iy);
          for (int kx = 0; kx < kw; ++kx) {
            const float wv = p.w(oc, ic, ky, kx);
            const int off = kx - pad_l;
            // ox range with 0 <= ox*s + off < W
            const int lo = off >= 0 ? 0 : ceil_div(-off, s);
            const int hi = std::min(out_w, W - off <= 0 ? 0 : ceil_div(W - off, s));
            if (s == 1) {
              const float* src = in + off;
              for (int ox = lo; ox < hi; ++ox) acc[ox] += wv * src[ox];
            } else {
              for (int ox = lo; ox < hi; ++ox) acc[ox] += wv * in[ox * s + off];
            }
          }
        }
      }
    }
  });
  return out;
}

Tensor deconv2d_s2(const Tensor& x, const ConvParams& p) {
  check_params(p);
  MSCV_REQUIRE(p.kernel_h == 2 && p.kernel_w == 2 && p.stride == 2,
               "deconv2d_s2: kernel must be 2x2 with stride 2");
  MSCV_REQUIRE(x.channels() == p.in_channels,
               "deconv2d_s2: input has " + std::to_string(x.channels()) + " channels, kernel expects " +
                   std::to_string(p.in_channels));
  const int H = x.height(), W = x.width();
  Tensor out(p.out_channels, 2 * H, 2 * W);
  // [in][out][ky][kx]
  auto weight = [&](int i, int o, int ky, int kx) {
    return p.weights[((static_cast<std::size_t>(i) * p.out_channels + o) * 2 + ky) * 2 + kx];
  };
  parallel_for(static_cast<std::size_t>(2 * H), [&](std::size_t row) {
    const int oy = static_cast<int>(row);
    const int iy = oy / 2, ky = oy % 2;
    for (int o = 0; o < p.out_channels; ++o) {
      float* acc = out.row(o, oy);
      std::fill(acc, acc + 2 * W, p.bias[o]);
      for (int i = 0; i < p.in_channels; ++i) {
        const float* in = x.row(i, iy);
        const float w0 = weight(i, o, ky, 0), w1 = weight(i, o, ky, 1);
        for (int ix = 0; ix < W; ++ix) {
          acc[2 * ix] += w0 * in[ix];
          acc[2 * ix + 1] += w1 * in[ix];
        }
      }
    }
  });
  return out;
}

Tensor batchnorm(const Tensor& x, const BatchNormParams& bn, bool relu) {
  const auto C = static_cast<std::size_t>(x.channels());
  MSCV_REQUIRE(bn.mean.size() == C && bn.var.size() == C && bn.gamma.size() == C && bn.beta.size() == C,
               "batchnorm: parameter length != channel count");
  Tensor out(x.channels(), x.height(), x.width());
  for (int c = 0; c < x.channels(); ++c) {
    const float scale = static_cast<float>(bn.gamma[c] / std::sqrt(static_cast<double>(bn.var[c]) + kBatchNormEps));
    const float shift = bn.beta[c];
    const float mean = bn.mean[c];
    auto in = x.plane(c);
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const float v = (in[i] - mean) * scale + shift;
      dst[i] = relu ? std::max(v, 0.0f) : v;
    }
  }
  return out;
}

Tensor relu(Tensor x) {
  for (float& v : x.data()) v = std::max(v, 0.0f);
  return x;
}

Tensor add(const Tensor& a, const Tensor& b) {
  MSCV_REQUIRE(a.same_shape(b), "add: shape mismatch");
  Tensor out = a;
  auto d = out.data();
  auto s = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  return out;
}

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
  MSCV_REQUIRE(out_h >= 1 && out_w >= 1, "bilinear_resize: output dims must be >= 1");
  MSCV_REQUIRE(x.height() >= 1 && x.width() >= 1, "bilinear_resize: empty input");
  struct Tap {
    int i0, i1;
    float t;
  };
  auto taps = [](int in, int out) {
    std::vector<Tap> result(static_cast<std::size_t>(out));
    const double ratio = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      const double src = std::clamp((o + 0.5) * ratio - 0.5, 0.0, static_cast<double>(in - 1));
      const int i0 = static_cast<int>(std::floor(src));
      result[o] = {i0, std::min(i0 + 1, in - 1), static_cast<float>(src - i0)};
    }
    return result;
  };
  const auto ty = taps(x.height(), out_h);
  const auto tx = taps(x.width(), out_w);
  Tensor out(x.channels(), out_h, out_w);
  for (int c = 0; c < x.channels(); ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      const Tap& a = ty[oy];
      for (int ox = 0; ox < out_w; ++ox) {
        const Tap& b = tx[ox];
        const float top = x.at(c, a.i0, b.i0) + b.t * (x.at(c, a.i0, b.i1) - x.at(c, a.i0, b.i0));
        const float bot = x.at(c, a.i1, b.i0) + b.t * (x.at(c, a.i1, b.i1) - x.at(c, a.i1, b.i0));
        out.at(c, oy, ox) = top + a.t * (bot - top);
      }
    }
  }
  return out;
}

Tensor concat_channels(std::span<const Tensor* const> xs) {
  MSCV_REQUIRE(!xs.empty(), "concat_channels: no inputs");
  int channels = 0;
  for (const Tensor* t : xs) {
    MSCV_REQUIRE(t->height() == xs[0]->height() && t->width() == xs[0]->width(),
                 "concat_channels: spatial dims differ");
    channels += t->channels();
  }
  Tensor out(channels, xs[0]->height(), xs[0]->width());
  auto dst = out.data().begin();
  for (const Tensor* t : xs) dst = std::copy(t->data().begin(), t->data().end(), dst);
  return out;
}

Tensor concat_channels(std::initializer_list<const Tensor*> xs) {
  return concat_channels(std::span<const Tensor* const>(xs.begin(), xs.size()));
}

}  // namespace mscv
