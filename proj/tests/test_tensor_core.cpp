#include <gtest/gtest.h>

#include <cmath>

#include "unet/gradcheck.hpp"
#include "unet/kernels.hpp"
#include "unet/ops.hpp"
#include "unet/optim.hpp"

namespace unet {
namespace {

Tensor<double> random_tensor(const Shape& s, Rng& rng) {
  Tensor<double> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

TEST(Tensor, RejectsZeroDimensionAndLengthMismatch) {
  EXPECT_THROW(Tensor<float>({1, 0, 2, 2}), PreconditionError);
  EXPECT_THROW(Tensor<float>({1, 1, 2, 2}, std::vector<float>(3)), PreconditionError);
  Tensor<float> t({2, 3, 4, 5});
  EXPECT_EQ(t.size(), 120u);
  t(1, 2, 3, 4) = 7;
  EXPECT_EQ(t[119], 7);
}

TEST(Conv2d, OneByOneKernelScales) {
  Tensor<double> in({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor<double> w({1, 1, 1, 1}, {2});
  Tensor<double> b({1, 1, 1, 1});
  const auto out = kernels::conv2d_forward(in, w, b);
  EXPECT_EQ(std::vector<double>(out.values().begin(), out.values().end()), (std::vector<double>{2, 4, 6, 8}));
}

TEST(Conv2d, OnesKernelSumsWindow) {
  Tensor<double> in({1, 1, 3, 3}, 1.0), w({1, 1, 3, 3}, 1.0), b({1, 1, 1, 1});
  const auto out = kernels::conv2d_forward(in, w, b);
  EXPECT_EQ(out.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(out[0], 9);
}

TEST(Conv2d, OutputShapeOfFirstLayer) {
  EXPECT_EQ(check_conv_shapes({1, 64, 570, 570}, {64, 64, 3, 3}, {1, 64, 1, 1}), (Shape{1, 64, 568, 568}));
}

TEST(Conv2d, ShapeMismatchNamesBothShapes) {
  Tensor<float> in({1, 2, 5, 5}), w({3, 4, 3, 3}), b({1, 3, 1, 1});
  try {
    kernels::conv2d_forward(in, w, b);
    FAIL();
  } catch (const PreconditionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("1x2x5x5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3x4x3x3"), std::string::npos) << msg;
  }
  EXPECT_THROW(kernels::conv2d_forward(Tensor<float>({1, 4, 2, 2}), w, b), PreconditionError);
}

TEST(Conv2d, LinearWithZeroBias) {
  Rng rng(3);
  const auto x = random_tensor({1, 3, 7, 6}, rng), y = random_tensor({1, 3, 7, 6}, rng);
  const auto w = random_tensor({2, 3, 3, 3}, rng);
  const Tensor<double> b({1, 2, 1, 1});
  const double alpha = 0.7, beta = -1.3;
  Tensor<double> mix(x.shape());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * x[i] + beta * y[i];
  const auto fm = kernels::conv2d_forward(mix, w, b);
  const auto fx = kernels::conv2d_forward(x, w, b), fy = kernels::conv2d_forward(y, w, b);
  for (std::size_t i = 0; i < fm.size(); ++i) EXPECT_NEAR(fm[i], alpha * fx[i] + beta * fy[i], 1e-12);
}

TEST(Relu, Examples) {
  Tensor<double> in({1, 1, 1, 3}, {-1, 0, 2});
  const auto out = kernels::relu_forward(in);
  EXPECT_EQ(out[0], 0);
  EXPECT_EQ(out[1], 0);
  EXPECT_EQ(out[2], 2);
  Tensor<double> neg({1, 2, 3, 3}, -0.5), pos({1, 2, 3, 3}, 0.25);
  EXPECT_EQ(kernels::relu_forward(neg), Tensor<double>(neg.shape()));
  EXPECT_EQ(kernels::relu_forward(pos), pos);
}

TEST(Relu, GradientAtZeroIsZero) {
  Tensor<double> in({1, 1, 1, 3}, {-1, 0, 2}), g({1, 1, 1, 3}, 1.0);
  const auto gi = kernels::relu_backward(in, g);
  EXPECT_EQ(gi[0], 0);
  EXPECT_EQ(gi[1], 0);
  EXPECT_EQ(gi[2], 1);
}

TEST(MaxPool, PicksMaximum) {
  Tensor<double> in({1, 1, 2, 2}, {1, 2, 3, 4});
  const auto r = kernels::maxpool2x2_forward(in);
  EXPECT_EQ(r.output[0], 4);
  EXPECT_EQ(r.indices.argmax[0], 3u);  // (1, 1)
}

TEST(MaxPool, TieBreakFirstInRowMajorOrder) {
  Tensor<double> in({1, 2, 4, 4}, 2.5);
  const auto r = kernels::maxpool2x2_forward(in);
  for (std::size_t i = 0; i < r.output.size(); ++i) EXPECT_EQ(r.output[i], 2.5);
  // Block (by, bx) starts at row 2*by, column 2*bx of a 4-wide plane.
  const std::vector<std::uint32_t> first = {0, 2, 8, 10};
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.indices.argmax[c * 4 + i], first[i]);

  const auto gi = kernels::maxpool2x2_backward(in.shape(), r.indices, Tensor<double>(r.output.shape(), 1.0));
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t by = 0; by < 2; ++by)
      for (std::size_t bx = 0; bx < 2; ++bx) {
        double sum = 0;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) sum += gi(0, c, 2 * by + dy, 2 * bx + dx);
        EXPECT_EQ(sum, 1.0);
        EXPECT_EQ(gi(0, c, 2 * by, 2 * bx), 1.0);
      }
}

TEST(MaxPool, RejectsOddSize) {
  EXPECT_THROW(kernels::maxpool2x2_forward(Tensor<float>({1, 1, 3, 4})), PreconditionError);
}

TEST(UpConv, SingleScatter) {
  Tensor<double> in({1, 1, 1, 1}, 1.5), w({1, 1, 2, 2}, 1.0), b({1, 1, 1, 1});
  const auto out = kernels::upconv2x2_forward(in, w, b);
  EXPECT_EQ(out.shape(), (Shape{1, 1, 2, 2}));
  for (double v : out.values()) EXPECT_EQ(v, 1.5);
}

TEST(UpConv, ZeroInputGivesBias) {
  Rng rng(1);
  Tensor<double> in({1, 3, 2, 3}), w = random_tensor({2, 3, 2, 2}, rng), b({1, 2, 1, 1}, {0.5, -2});
  const auto out = kernels::upconv2x2_forward(in, w, b);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 6; ++x) EXPECT_EQ(out(0, k, y, x), b[k]);
}

TEST(UpConv, ShapesAndPreconditions) {
  EXPECT_EQ(check_upconv_shapes({1, 1024, 28, 28}, {512, 1024, 2, 2}, {1, 512, 1, 1}), (Shape{1, 512, 56, 56}));
  EXPECT_THROW(check_upconv_shapes({1, 4, 3, 3}, {2, 4, 3, 3}, {1, 2, 1, 1}), PreconditionError);
}

TEST(CropConcat, CentersSkipAndPutsItFirst) {
  EXPECT_EQ(check_crop_concat_shapes({1, 64, 64, 64}, {1, 64, 56, 56}), (Shape{1, 128, 56, 56}));
  Tensor<double> skip({1, 1, 8, 8}), up({1, 1, 4, 4}, -1.0);
  for (std::size_t i = 0; i < skip.size(); ++i) skip[i] = static_cast<double>(i);
  const auto out = kernels::crop_concat_forward(skip, up);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) {
      EXPECT_EQ(out(0, 0, y, x), skip(0, 0, y + 2, x + 2));
      EXPECT_EQ(out(0, 1, y, x), -1.0);
    }
}

TEST(CropConcat, EqualSizesConcatenate) {
  Tensor<double> a({1, 2, 3, 3}, 1.0), b({1, 1, 3, 3}, 2.0);
  const auto out = kernels::crop_concat_forward(a, b);
  EXPECT_EQ(out.shape(), (Shape{1, 3, 3, 3}));
  EXPECT_EQ(out(0, 1, 2, 2), 1.0);
  EXPECT_EQ(out(0, 2, 0, 0), 2.0);
}

TEST(CropConcat, RejectsOddDifference) {
  EXPECT_THROW(kernels::crop_concat_forward(Tensor<float>({1, 1, 5, 5}), Tensor<float>({1, 1, 4, 4})),
               PreconditionError);
}

TEST(CropConcat, GradientIsZeroOnCroppedPixels) {
  Tensor<double> g({1, 2, 2, 2}, 1.0), gs, gu;
  kernels::crop_concat_backward(g, {1, 1, 4, 4}, {1, 1, 2, 2}, gs, gu);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) {
      const bool inside = y >= 1 && y < 3 && x >= 1 && x < 3;
      EXPECT_EQ(gs(0, 0, y, x), inside ? 1.0 : 0.0);
    }
  for (double v : gu.values()) EXPECT_EQ(v, 1.0);
}

TEST(Conv1x1, Examples) {
  GradTape<double> tape;
  const Var x = tape.constant(Tensor<double>({1, 2, 1, 1}, {1, 2}));
  const Var w = tape.constant(Tensor<double>({1, 2, 1, 1}, {1, 1}));
  const Var b = tape.constant(Tensor<double>({1, 1, 1, 1}));
  EXPECT_EQ(tape.value(ops::conv1x1(tape, x, w, b))[0], 3);

  Rng rng(5);
  const auto in = random_tensor({1, 3, 4, 5}, rng);
  Tensor<double> id({3, 3, 1, 1});
  for (std::size_t k = 0; k < 3; ++k) id(k, k, 0, 0) = 1;
  EXPECT_EQ(kernels::conv2d_forward(in, id, Tensor<double>({1, 3, 1, 1})), in);

  EXPECT_EQ(check_conv_shapes({1, 64, 388, 388}, {2, 64, 1, 1}, {1, 2, 1, 1}), (Shape{1, 2, 388, 388}));
  const Var w3 = tape.constant(Tensor<double>({1, 2, 3, 3}));
  EXPECT_THROW(ops::conv1x1(tape, tape.constant(Tensor<double>({1, 2, 3, 3})), w3, b), PreconditionError);
}

TEST(Dropout, IdentityCases) {
  Rng rng(1), data(2);
  GradTape<double> tape;
  const Var x = tape.constant(random_tensor({1, 2, 5, 5}, data));
  EXPECT_EQ(tape.value(ops::dropout(tape, x, 0.0, Mode::Train, rng)), tape.value(x));
  EXPECT_EQ(tape.value(ops::dropout(tape, x, 0.0, Mode::Infer, rng)), tape.value(x));
  EXPECT_EQ(tape.value(ops::dropout(tape, x, 0.7, Mode::Infer, rng)), tape.value(x));
  EXPECT_THROW(ops::dropout(tape, x, 1.0, Mode::Train, rng), PreconditionError);
  EXPECT_THROW(ops::dropout(tape, x, -0.1, Mode::Train, rng), PreconditionError);
}

TEST(Dropout, InvertedScalingKeepsMean) {
  Rng rng(11);
  GradTape<float> tape;
  const Var x = tape.constant(Tensor<float>({1, 1, 1000, 1000}, 1.0f));
  const Tensor<float>& out = tape.value(ops::dropout(tape, x, 0.5, Mode::Train, rng));
  double sum = 0;
  std::size_t zeros = 0;
  for (float v : out.values()) {
    sum += v;
    zeros += v == 0.0f;
    EXPECT_TRUE(v == 0.0f || v == 2.0f);
  }
  EXPECT_NEAR(sum / 1e6, 1.0, 0.01);
  EXPECT_NEAR(static_cast<double>(zeros) / 1e6, 0.5, 0.01);
}

TEST(Softmax, Examples) {
  const auto p = kernels::softmax_channels(Tensor<double>({1, 2, 1, 1}, {0, 0}));
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
  const auto q = kernels::softmax_channels(Tensor<double>({1, 2, 1, 1}, {1000, 0}));
  EXPECT_TRUE(std::isfinite(q[0]) && std::isfinite(q[1]));
  EXPECT_NEAR(q[0], 1.0, 1e-12);
  EXPECT_NEAR(q[1], 0.0, 1e-12);
}

TEST(Softmax, NormalizedAndShiftInvariant) {
  Rng rng(9);
  Tensor<float> a({1, 3, 6, 6});
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<float>(rng.uniform(-1e4, 1e4));
  Tensor<float> shifted = a;
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 6; ++x) {
      const auto s = static_cast<float>(rng.uniform(-5, 5));
      for (std::size_t c = 0; c < 3; ++c) shifted(0, c, y, x) += s;
    }
  const auto p = kernels::softmax_channels(a), q = kernels::softmax_channels(shifted);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 6; ++x) {
      double sum = 0;
      for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_GE(p(0, c, y, x), 0.0f);
        EXPECT_LE(p(0, c, y, x), 1.0f);
        EXPECT_NEAR(p(0, c, y, x), q(0, c, y, x), 1e-5);
        sum += p(0, c, y, x);
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
}

TEST(HeInit, StandardDeviationForFirstLayerFanIn) {
  const Shape s{64, 64, 3, 3};
  EXPECT_EQ(s.c * s.h * s.w, 576u);
  EXPECT_NEAR(std::sqrt(2.0 / 576.0), 0.05893, 5e-6);
  Rng rng(1);
  const auto w = he_init<double>(s, rng);
  double sum = 0, sq = 0;
  for (double v : w.values()) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(w.size());
  EXPECT_NEAR(sum / n, 0.0, 4 * 0.05893 / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(sq / n), 0.05893, 0.05893 * 0.03);
}

TEST(SgdMomentum, PlainSgdWithoutMomentum) {
  Tensor<double> w({1, 1, 1, 2}, {1.0, -2.0});
  const std::vector<Tensor<double>> g = {Tensor<double>({1, 1, 1, 2}, {0.5, 0.25})};
  SgdMomentum<double> opt(0.1, 0.0);
  std::vector<Tensor<double>*> p = {&w};
  opt.step(p, g);
  EXPECT_DOUBLE_EQ(w[0], 1.0 - 0.05);
  EXPECT_DOUBLE_EQ(w[1], -2.0 - 0.025);
}

TEST(SgdMomentum, ZeroGradientLeavesParameters) {
  Tensor<float> w({2, 1, 3, 3}, 0.3f);
  const Tensor<float> before = w;
  SgdMomentum<float> opt(0.5, 0.99);
  std::vector<Tensor<float>*> p = {&w};
  opt.step(p, std::vector<Tensor<float>>{Tensor<float>(w.shape())});
  EXPECT_EQ(w, before);
}

TEST(SgdMomentum, TwoStepsAccumulateVelocity) {
  const double lr = 0.01, m = 0.99, g = 2.0;
  Tensor<double> w({1, 1, 1, 1}, 0.0);
  SgdMomentum<double> opt(lr, m);
  std::vector<Tensor<double>*> p = {&w};
  const std::vector<Tensor<double>> grads = {Tensor<double>({1, 1, 1, 1}, g)};
  opt.step(p, grads);
  opt.step(p, grads);
  EXPECT_NEAR(w[0], -lr * g * (1 + (1 + m)), 1e-15);
}

TEST(SgdMomentum, RejectsNonFiniteGradientWithoutUpdating) {
  Tensor<double> a({1, 1, 1, 1}, 1.0), b({1, 1, 1, 1}, 1.0);
  SgdMomentum<double> opt(0.1, 0.9);
  std::vector<Tensor<double>*> p = {&a, &b};
  const std::vector<Tensor<double>> grads = {Tensor<double>({1, 1, 1, 1}, 1.0),
                                             Tensor<double>({1, 1, 1, 1}, std::nan(""))};
  EXPECT_THROW(opt.step(p, grads), PreconditionError);
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(b[0], 1.0);
}

TEST(Tape, SumOfReluGivesOnes) {
  Rng rng(2);
  Tensor<double> x({1, 2, 3, 3});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(0.1, 2.0);
  GradTape<double> tape;
  const Var v = tape.input(x);
  tape.backward(ops::sum(tape, ops::relu(tape, v)));
  for (double g : tape.grad(v).values()) EXPECT_EQ(g, 1.0);
}

TEST(Tape, OnesKernelWeightGradientIsWindowSum) {
  // loss = sum(conv(x, ones)) on a 3x3 input with a 2x2 kernel: output is 2x2,
  // and dL/dw[dy][dx] = sum over outputs of x[y+dy][x+dx].
  const Tensor<double> x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  GradTape<double> tape;
  const Var in = tape.input(x);
  const Var w = tape.input(Tensor<double>({1, 1, 2, 2}, 1.0));
  const Var b = tape.input(Tensor<double>({1, 1, 1, 1}));
  tape.backward(ops::sum(tape, ops::conv2d(tape, in, w, b)));
  const auto& gw = tape.grad(w);
  EXPECT_EQ(gw(0, 0, 0, 0), 1 + 2 + 4 + 5);
  EXPECT_EQ(gw(0, 0, 0, 1), 2 + 3 + 5 + 6);
  EXPECT_EQ(gw(0, 0, 1, 0), 4 + 5 + 7 + 8);
  EXPECT_EQ(gw(0, 0, 1, 1), 5 + 6 + 8 + 9);
  EXPECT_EQ(tape.grad(b)[0], 4);
  const std::vector<double> coverage = {1, 2, 1, 2, 4, 2, 1, 2, 1};
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(tape.grad(in)[i], coverage[i]);
}

TEST(Tape, BackwardVisitsInReverseExecutionOrder) {
  GradTape<double> tape;
  const Var x = tape.input(Tensor<double>({1, 2, 4, 4}, 0.5));
  const Var a = ops::relu(tape, x);
  const Var p = ops::maxpool2x2(tape, a);
  const Var c = ops::crop_concat(tape, a, ops::upconv2x2(tape, p, tape.input(Tensor<double>({2, 2, 2, 2}, 0.1)),
                                                          tape.input(Tensor<double>({1, 2, 1, 1}))));
  const Var loss = ops::sum(tape, c);
  tape.backward(loss);
  const auto& order = tape.backward_order();
  ASSERT_FALSE(order.empty());
  EXPECT_EQ(order.front(), loss.id);
  for (std::size_t i = 1; i < order.size(); ++i) EXPECT_LT(order[i], order[i - 1]);
}

TEST(Tape, UnusedParameterGetsZeroGradient) {
  GradTape<double> tape;
  const Var used = tape.input(Tensor<double>({1, 1, 2, 2}, 1.0));
  const Var unused = tape.input(Tensor<double>({3, 1, 3, 3}, 1.0));
  tape.backward(ops::sum(tape, used));
  EXPECT_EQ(tape.grad(unused), Tensor<double>({3, 1, 3, 3}));
}

TEST(Tape, Preconditions) {
  GradTape<double> tape;
  EXPECT_THROW(tape.backward(Var{0}), PreconditionError);
  const Var x = tape.input(Tensor<double>({1, 1, 2, 2}, 1.0));
  EXPECT_THROW(tape.backward(ops::relu(tape, x)), PreconditionError);
}

TEST(Loss, Examples) {
  const ClassMap labels(2, 3, std::vector<std::uint8_t>{0, 1, 1, 0, 0, 1});
  const WeightMap ones(2, 3, 1.0), twos(2, 3, 2.0);
  Tensor<double> perfect({1, 2, 2, 3});
  for (std::size_t i = 0; i < 6; ++i) perfect[labels.data[i] * 6 + i] = 1.0;
  EXPECT_EQ(weighted_cross_entropy(perfect, labels, ones), 0.0);

  const Tensor<double> half({1, 2, 2, 3}, 0.5);
  EXPECT_NEAR(weighted_cross_entropy(half, labels, ones), 6 * std::log(2.0), 1e-12);
  EXPECT_NEAR(weighted_cross_entropy(half, labels, twos), 2 * weighted_cross_entropy(half, labels, ones), 1e-12);
}

TEST(Loss, ClampsAndCountsSaturation) {
  const ClassMap labels(1, 2, std::vector<std::uint8_t>{0, 1});
  const Tensor<double> p({1, 2, 1, 2}, {0.0, 0.5, 1.0, 0.5});
  std::size_t saturated = 0;
  const double loss = weighted_cross_entropy(p, labels, WeightMap(1, 2, 1.0), &saturated);
  EXPECT_EQ(saturated, 1u);
  EXPECT_NEAR(loss, -std::log(1e-12) + std::log(2.0), 1e-9);
}

TEST(Loss, SoftmaxGradientIsWeightTimesResidual) {
  Rng rng(4);
  const Tensor<double> a = random_tensor({1, 3, 2, 2}, rng);
  const ClassMap labels(2, 2, std::vector<std::uint8_t>{0, 2, 1, 1});
  const WeightMap w(2, 2, std::vector<double>{1.0, 2.0, 0.5, 3.0});
  GradTape<double> tape;
  const Var v = tape.input(a);
  tape.backward(ops::softmax_cross_entropy(tape, v, labels, w));
  const auto p = kernels::softmax_channels(a);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 4; ++i) {
      const double expected = w.data[i] * (p[c * 4 + i] - (labels.data[i] == c ? 1.0 : 0.0));
      EXPECT_NEAR(tape.grad(v)[c * 4 + i], expected, 1e-12);
    }
}

TEST(Loss, NonNegative) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = kernels::softmax_channels(random_tensor({1, 3, 4, 4}, rng));
    ClassMap labels(4, 4);
    WeightMap w(4, 4);
    for (std::size_t i = 0; i < 16; ++i) {
      labels.data[i] = static_cast<std::uint8_t>(rng.below(3));
      w.data[i] = rng.uniform(0.0, 5.0);
    }
    EXPECT_GE(weighted_cross_entropy(p, labels, w), 0.0);
  }
}

TEST(GradientSuite, EveryOperatorMatchesFiniteDifferences) {
  for (const GradCheckResult& r : run_gradient_suite(21)) {
    EXPECT_TRUE(r.passed) << r.name << " max relative error " << r.max_relative_error;
    EXPECT_GT(r.checked, 0u) << r.name;
  }
}

TEST(GradientSuite, DetectsAWrongGradientRule) {
  // A deliberately broken rule (gradient scaled by 2) must be reported.
  const ScalarFunction broken = [](GradTape<double>& t, const std::vector<Var>& v) {
    const Var s = ops::sum(t, v[0]);
    return t.record(Tensor<double>(t.value(s).shape(), t.value(s)[0]), {v[0]}, "broken",
                    [x = v[0]](GradTape<double>& tt, const Tensor<double>& g) {
                      tt.accumulate(x, Tensor<double>(tt.value(x).shape(), 2 * g[0]));
                    });
  };
  Rng rng(1);
  EXPECT_FALSE(check_gradients("broken", {random_tensor({1, 1, 2, 2}, rng)}, broken).passed);
}

TEST(GradientSuite, RelativeErrorDenominator) {
  EXPECT_EQ(relative_error(0.0, 0.0, 1e-8), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0, 1e-8), 0.1);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0, 1e-8), 0.5);
}

}  // namespace
}  // namespace unet
