#include <gtest/gtest.h>

#include "mscv/error.hpp"
#include "mscv/parallel.hpp"
#include "mscv/tensor.hpp"
#include "oracles.hpp"

using namespace mscv;

namespace {

void expect_close(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_TRUE(a.same_shape(b));
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.data()[i], b.data()[i], tol) << "index " << i;
}

}  // namespace

TEST(Conv, IdentityKernel) {
  oracle::Rng rng(1);
  const Tensor x = oracle::random_tensor(rng, 3, 4, 5);
  ConvParams p{3, 3, 1, 1, 1, std::vector<float>(9, 0.0f), std::vector<float>(3, 0.0f)};
  for (int c = 0; c < 3; ++c) p.w(c, c, 0, 0) = 1.0f;
  EXPECT_EQ(conv2d(x, p), x);
}

TEST(Conv, PointwiseIsMatmul) {
  oracle::Rng rng(2);
  const Tensor x = oracle::random_tensor(rng, 7, 3, 4);
  const ConvParams p = oracle::random_conv(rng, 5, 7, 1, 1);
  const Tensor y = conv2d(x, p);
  for (int o = 0; o < 5; ++o)
    for (int yy = 0; yy < 3; ++yy)
      for (int xx = 0; xx < 4; ++xx) {
        double acc = p.bias[o];
        for (int i = 0; i < 7; ++i) acc += double(p.w(o, i, 0, 0)) * x.at(i, yy, xx);
        EXPECT_NEAR(y.at(o, yy, xx), acc, 1e-6);
      }
}

TEST(Conv, MatchesQuadrupleLoopOracle) {
  oracle::Rng rng(3);
  struct Case {
    int c, h, w, out, k, s;
    bool same;
  };
  for (const Case& t : {Case{3, 5, 5, 2, 3, 2, true}, Case{3, 5, 5, 4, 3, 1, true}, Case{2, 8, 6, 3, 3, 2, true},
                        Case{2, 7, 9, 3, 3, 1, false}, Case{4, 6, 6, 2, 1, 2, true}, Case{1, 9, 7, 2, 3, 2, false}}) {
    const Tensor x = oracle::random_tensor(rng, t.c, t.h, t.w);
    const ConvParams p = oracle::random_conv(rng, t.out, t.c, t.k, t.s);
    expect_close(conv2d(x, p, t.same ? Padding::same : Padding::valid), oracle::conv(x, p, t.same), 1e-5);
  }
}

TEST(Conv, SameOutputIsCeil) {
  oracle::Rng rng(4);
  const Tensor y = conv2d(oracle::random_tensor(rng, 1, 7, 9), oracle::random_conv(rng, 1, 1, 3, 2));
  EXPECT_EQ(y.height(), 4);
  EXPECT_EQ(y.width(), 5);
}

TEST(Conv, ChannelMismatch) {
  oracle::Rng rng(5);
  EXPECT_THROW(conv2d(Tensor(2, 3, 3), oracle::random_conv(rng, 1, 3, 3, 1)), ContractError);
}

TEST(Deconv, SingleTapSpread) {
  ConvParams p{1, 1, 2, 2, 2, std::vector<float>(4, 1.0f), std::vector<float>(1, 0.0f)};
  const Tensor y = deconv2d_s2(Tensor(1, 1, 1, 1.0f), p);
  EXPECT_EQ(y, Tensor(1, 2, 2, 1.0f));
}

TEST(Deconv, MatchesScatterOracle) {
  oracle::Rng rng(6);
  const Tensor x = oracle::random_tensor(rng, 3, 4, 5);
  const ConvParams p = oracle::random_conv(rng, 2, 3, 2, 2);  // reused as [in=3][out=2] storage
  ConvParams d = p;
  d.out_channels = 2;
  d.in_channels = 3;
  expect_close(deconv2d_s2(x, d), oracle::deconv_scatter(x, d), 1e-5);
}

TEST(Deconv, AdjointOfStridedConv) {
  oracle::Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int in = oracle::uniform_int(rng, 1, 5), out = oracle::uniform_int(rng, 1, 5);
    const int h = oracle::uniform_int(rng, 1, 6), w = oracle::uniform_int(rng, 1, 6);
    ConvParams dec = oracle::random_conv(rng, out, in, 2, 2);
    dec.in_channels = in;
    dec.out_channels = out;
    std::fill(dec.bias.begin(), dec.bias.end(), 0.0f);
    dec.bias.resize(static_cast<std::size_t>(out));
    // Same storage read as a forward conv [out'=in][in'=out][2][2].
    ConvParams fwd{in, out, 2, 2, 2, dec.weights, std::vector<float>(static_cast<std::size_t>(in), 0.0f)};
    const Tensor x = oracle::random_tensor(rng, in, h, w);
    const Tensor y = oracle::random_tensor(rng, out, 2 * h, 2 * w);
    const double lhs = oracle::dot(conv2d(y, fwd, Padding::valid), x);
    const double rhs = oracle::dot(y, deconv2d_s2(x, dec));
    EXPECT_NEAR(lhs, rhs, 1e-5 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Deconv, KernelContract) {
  oracle::Rng rng(8);
  EXPECT_THROW(deconv2d_s2(Tensor(1, 2, 2), oracle::random_conv(rng, 1, 1, 3, 2)), ContractError);
}

TEST(BatchNorm, IdentityOnNonNegative) {
  oracle::Rng rng(9);
  const Tensor x = oracle::random_tensor(rng, 2, 3, 3, 0.0, 1.0);
  const BatchNormParams bn{{0, 0}, {1, 1}, {1, 1}, {0, 0}};
  expect_close(batchnorm_relu(x, bn), x, 1e-5);
}

TEST(BatchNorm, LargeNegativeBetaZeroes) {
  oracle::Rng rng(10);
  const Tensor y = batchnorm_relu(oracle::random_tensor(rng, 1, 4, 4), BatchNormParams{{0}, {1}, {1}, {-1e30f}});
  for (float v : y.data()) EXPECT_EQ(v, 0.0f);
}

TEST(BatchNorm, MatchesScalarOracle) {
  oracle::Rng rng(11);
  const Tensor x = oracle::random_tensor(rng, 4, 3, 5, -3, 3);
  BatchNormParams bn;
  for (int c = 0; c < 4; ++c) {
    bn.mean.push_back(float(oracle::uniform(rng, -1, 1)));
    bn.var.push_back(float(oracle::uniform(rng, 0.1, 2)));
    bn.gamma.push_back(float(oracle::uniform(rng, -2, 2)));
    bn.beta.push_back(float(oracle::uniform(rng, -1, 1)));
  }
  for (bool r : {false, true}) {
    const Tensor y = batchnorm(x, bn, r);
    for (int c = 0; c < 4; ++c)
      for (int yy = 0; yy < 3; ++yy)
        for (int xx = 0; xx < 5; ++xx)
          ASSERT_NEAR(y.at(c, yy, xx), oracle::batchnorm(x.at(c, yy, xx), bn.mean[c], bn.var[c], bn.gamma[c], bn.beta[c], r),
                      1e-5);
  }
  EXPECT_THROW(batchnorm(x, BatchNormParams{{0}, {1}, {1}, {0}}, true), ContractError);
}

TEST(Bilinear, ConstantStaysConstant) {
  const Tensor y = bilinear_resize(Tensor(2, 3, 5, 0.7f), 11, 4);
  for (float v : y.data()) EXPECT_FLOAT_EQ(v, 0.7f);
}

TEST(Bilinear, RowUpsampleQuarterPoints) {
  const Tensor y = bilinear_resize(Tensor(1, 1, 2, std::vector<float>{0, 1}), 1, 4);
  EXPECT_EQ(y.data()[0], 0.0f);
  EXPECT_FLOAT_EQ(y.data()[1], 0.25f);
  EXPECT_FLOAT_EQ(y.data()[2], 0.75f);
  EXPECT_EQ(y.data()[3], 1.0f);
}

TEST(Bilinear, MatchesClosedFormOracle) {
  oracle::Rng rng(12);
  const Tensor x = oracle::random_tensor(rng, 2, 5, 7);
  for (auto [oh, ow] : {std::pair{10, 14}, std::pair{3, 4}, std::pair{5, 7}, std::pair{11, 2}}) {
    const Tensor y = bilinear_resize(x, oh, ow);
    for (int c = 0; c < 2; ++c)
      for (int yy = 0; yy < oh; ++yy)
        for (int xx = 0; xx < ow; ++xx) ASSERT_NEAR(y.at(c, yy, xx), oracle::bilinear(x, c, oh, ow, yy, xx), 1e-5);
  }
}

TEST(Concat, ShapeAndOffsets) {
  oracle::Rng rng(13);
  const Tensor a = oracle::random_tensor(rng, 2, 3, 4), b = oracle::random_tensor(rng, 5, 3, 4);
  EXPECT_EQ(concat_channels({&a}), a);
  const Tensor c = concat_channels({&a, &b});
  EXPECT_EQ(c.channels(), 7);
  for (int ch = 0; ch < 7; ++ch)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 4; ++x) EXPECT_EQ(c.at(ch, y, x), ch < 2 ? a.at(ch, y, x) : b.at(ch - 2, y, x));
  const Tensor bad(1, 2, 4);
  EXPECT_THROW(concat_channels({&a, &bad}), ContractError);
}

TEST(Parallel, ThreadCountDoesNotChangeResults) {
  oracle::Rng rng(14);
  const Tensor x = oracle::random_tensor(rng, 8, 17, 23);
  const ConvParams p = oracle::random_conv(rng, 6, 8, 3, 1);
  set_num_threads(1);
  const Tensor ref = conv2d(x, p);
  for (int t : {2, 3, 8}) {
    set_num_threads(t);
    EXPECT_EQ(conv2d(x, p), ref);
  }
  set_num_threads(1);
}

TEST(Parallel, PropagatesExceptions) {
  set_num_threads(4);
  EXPECT_THROW(parallel_for(16, [](std::size_t i) {
                 if (i == 9) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  set_num_threads(1);
}
