// Copyright (c) the JRC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "gradcheck.h"
#include "nn/adam.h"
#include "nn/checkpoint.h"
#include "nn/ops.h"
#include "nn/tensor.h"
#include "util/error.h"
#include "util/rng.h"

using namespace jrc;
using namespace jrc::nn;
using jrc::testing::MaxRelGradError;
using jrc::testing::ProjectToScalar;
using jrc::testing::RandomTensor;

namespace {

constexpr double kGradTol = 1e-6;

// Direct O(everything) convolution used as an independent forward oracle.
std::vector<double> NaiveConv(const std::vector<double>& x, int B, int IC,
                              int IH, int IW, const std::vector<double>& w,
                              int OC, int K, int S,
                              const std::vector<double>& bias) {
  const int OH = (IH + S - 1) / S, OW = (IW + S - 1) / S;
  const int pt = std::max((OH - 1) * S + K - IH, 0) / 2;
  const int pl = std::max((OW - 1) * S + K - IW, 0) / 2;
  std::vector<double> out(size_t(B) * OC * OH * OW, 0.0);
  for (int b = 0; b < B; ++b)
    for (int oc = 0; oc < OC; ++oc)
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[oc];
          for (int ic = 0; ic < IC; ++ic)
            for (int ky = 0; ky < K; ++ky)
              for (int kx = 0; kx < K; ++kx) {
                const int iy = oy * S + ky - pt, ix = ox * S + kx - pl;
                if (iy < 0 || iy >= IH || ix < 0 || ix >= IW) continue;
                acc += w[((size_t(oc) * IC + ic) * K + ky) * K + kx] *
                       x[((size_t(b) * IC + ic) * IH + iy) * IW + ix];
              }
          out[((size_t(b) * OC + oc) * OH + oy) * OW + ox] = acc;
        }
  return out;
}

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

TEST_CASE("elementwise ops pass gradcheck") {
  Rng rng(101, 0);
  const Shape s(2, 3, 4, 5);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Tensor> ab = {RandomTensor(s, rng, -2.0, 2.0),
                              RandomTensor(s, rng, -2.0, 2.0)};
    CHECK(MaxRelGradError(ab, [&] {
            return ProjectToScalar(Add(ab[0], ab[1]), 1);
          }) < kGradTol);
    CHECK(MaxRelGradError(ab, [&] {
            return ProjectToScalar(Sub(ab[0], ab[1]), 2);
          }) < kGradTol);
    CHECK(MaxRelGradError(ab, [&] {
            return ProjectToScalar(Mul(ab[0], ab[1]), 3);
          }) < kGradTol);
    std::vector<Tensor> one = {RandomTensor(s, rng, -2.0, 2.0)};
    CHECK(MaxRelGradError(one, [&] {
            return ProjectToScalar(Scale(one[0], -1.7), 4);
          }) < kGradTol);
    CHECK(MaxRelGradError(one, [&] {
            return ProjectToScalar(AddScalar(one[0], 0.37), 5);
          }) < kGradTol);
    CHECK(MaxRelGradError(one, [&] {
            return ProjectToScalar(Exp(one[0]), 6);
          }) < kGradTol);
    CHECK(MaxRelGradError(one, [&] {
            return ProjectToScalar(Softplus(one[0]), 7);
          }) < kGradTol);
    CHECK(MaxRelGradError(one, [&] { return Mean(one[0]); }) < kGradTol);
    CHECK(MaxRelGradError(one, [&] { return Sum(one[0]); }) < kGradTol);
    CHECK(MaxRelGradError(one, [&] {
            return ProjectToScalar(Tanh(one[0]), 8);
          }) < kGradTol);
    CHECK(MaxRelGradError(one, [&] {
            return ProjectToScalar(Sigmoid(one[0]), 9);
          }) < kGradTol);
    std::vector<Tensor> pos = {RandomTensor(s, rng, 0.1, 3.0)};
    CHECK(MaxRelGradError(pos, [&] {
            return ProjectToScalar(Log(pos[0]), 10);
          }) < kGradTol);
  }
}

TEST_CASE("tanh, sigmoid and log forward values") {
  const Tensor t = Tensor::FromVector(Shape(1, 1, 1, 3), {0.0, 1.0, -50.0});
  CHECK(Tanh(t).data()[0] == 0.0);
  CHECK(Tanh(t).data()[1] == doctest::Approx(std::tanh(1.0)));
  CHECK(Sigmoid(t).data()[0] == 0.5);
  CHECK(Sigmoid(t).data()[2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(Sigmoid(t).data()[2] > 0.0);  // no overflow, no hard zero
  const Tensor p = Tensor::FromVector(Shape(1, 1, 1, 2), {1.0, std::exp(2.0)});
  CHECK(Log(p).data()[0] == 0.0);
  CHECK(Log(p).data()[1] == doctest::Approx(2.0));
  const Tensor bad = Tensor::FromVector(Shape(1, 1, 1, 1), {-1.0});
  CHECK_THROWS_AS(Log(bad), Error);
}

TEST_CASE("kinked elementwise ops pass gradcheck away from their kinks") {
  Rng rng(102, 0);
  const Shape s(1, 2, 6, 6);
  auto away = [&](double lo, double hi, std::vector<double> kinks) {
    std::vector<double> v(size_t(s.numel()));
    for (double& x : v) {
      for (;;) {
        x = lo + (hi - lo) * rng.NextUniform();
        bool ok = true;
        for (double k : kinks) ok = ok && std::abs(x - k) > 1e-3;
        if (ok) break;
      }
    }
    return Tensor::FromVector(s, std::move(v));
  };
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Tensor> r = {away(-3.0, 3.0, {0.0})};
    CHECK(MaxRelGradError(r, [&] {
            return ProjectToScalar(Relu(r[0]), 11);
          }) < kGradTol);
    std::vector<Tensor> r6 = {away(-2.0, 8.0, {0.0, 6.0})};
    CHECK(MaxRelGradError(r6, [&] {
            return ProjectToScalar(Relu6(r6[0]), 12);
          }) < kGradTol);
    std::vector<Tensor> cl = {away(-2.0, 2.0, {-1.0, 1.0})};
    CHECK(MaxRelGradError(cl, [&] {
            return ProjectToScalar(Clamp(cl[0], -1.0, 1.0), 13);
          }) < kGradTol);
    std::vector<Tensor> rc = {away(-2.0, 2.0, {-0.2, 0.0, 0.2})};
    // keep |x| >= 0.2 for a well-conditioned reciprocal
    for (double& x : rc[0].data()) {
      if (std::abs(x) < 0.2) x = x < 0 ? x - 0.3 : x + 0.3;
    }
    CHECK(MaxRelGradError(rc, [&] {
            return ProjectToScalar(Reciprocal(rc[0]), 14);
          }) < kGradTol);
  }
}

TEST_CASE("softplus stays finite and linear for large inputs") {
  Tensor x = Tensor::FromVector(Shape(1, 1, 1, 2), {40.0, -40.0}, true);
  Tensor y = Softplus(x);
  CHECK(y.data()[0] == 40.0);
  CHECK(y.data()[1] == doctest::Approx(0.0).epsilon(1e-12));
  Backward(Sum(y));
  CHECK(x.grad()[0] == doctest::Approx(1.0));
  CHECK(x.grad()[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("straight-through round: rounds forward, identity backward") {
  Tensor x = Tensor::FromVector(Shape(1, 1, 1, 6),
                                {1.4, -1.6, 2.5, -2.5, 0.49, -0.49}, true);
  Tensor y = SteRound(x);
  const std::vector<double> want = {1.0, -2.0, 3.0, -3.0, 0.0, -0.0};
  for (int i = 0; i < 6; ++i) CHECK(y.data()[i] == want[i]);
  Backward(Sum(y));
  for (int i = 0; i < 6; ++i) CHECK(x.grad()[i] == 1.0);
}

TEST_CASE("uniform noise injection is reproducible and identity in grad") {
  Rng rng(103, 0);
  Tensor x = RandomTensor(Shape(2, 2, 3, 3), rng, -5.0, 5.0);
  x.set_requires_grad(true);
  Tensor y1 = AddUniformNoise(x, 999, 4);
  Tensor y2 = AddUniformNoise(x, 999, 4);
  Tensor y3 = AddUniformNoise(x, 999, 5);
  bool same = true, differ = false;
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double n1 = y1.data()[i] - x.data()[i];
    same = same && (y1.data()[i] == y2.data()[i]);
    differ = differ || (y1.data()[i] != y3.data()[i]);
    CHECK(n1 > -0.5);
    CHECK(n1 < 0.5);
    CHECK(y1.data()[i] ==
          x.data()[i] + Rng::CenteredUniformAt(999, 4, uint64_t(i)));
  }
  CHECK(same);
  CHECK(differ);
  Backward(Sum(y1));
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(x.grad()[i] == 1.0);
}

TEST_CASE("per-channel bias add broadcasts and passes gradcheck") {
  Rng rng(118, 0);
  std::vector<Tensor> leaves = {RandomTensor(Shape(2, 3, 4, 4), rng, -1, 1),
                                RandomTensor(Shape(1, 3, 1, 1), rng, -1, 1)};
  const Tensor y = AddChannel(leaves[0], leaves[1]);
  for (int c = 0; c < 3; ++c) {
    CHECK(y.data()[size_t(c) * 16] ==
          leaves[0].data()[size_t(c) * 16] + leaves[1].data()[size_t(c)]);
  }
  CHECK(MaxRelGradError(leaves, [&] {
          return ProjectToScalar(AddChannel(leaves[0], leaves[1]), 1);
        }) < kGradTol);
}

TEST_CASE("grouped linear maps channels per group and passes gradcheck") {
  Rng rng(119, 0);
  // groups=2, in_c=2, out_c=3 on a 1x4x2x2 input
  std::vector<Tensor> leaves = {RandomTensor(Shape(1, 4, 2, 2), rng, -1, 1),
                                RandomTensor(Shape(2, 3, 2, 1), rng, -1, 1)};
  const Tensor y = GroupedLinear(leaves[0], leaves[1], 2, 3, 2);
  CHECK(y.dim(1) == 6);
  // hand check one output element: group 1, oc 2, pixel (0,1)
  const double* x = leaves[0].data().data();
  const double* w = leaves[1].data().data();
  const double expect = w[(1 * 3 + 2) * 2 + 0] * x[(2 * 4 + 0) + 1] +
                        w[(1 * 3 + 2) * 2 + 1] * x[(3 * 4 + 0) + 1];
  CHECK(y.data()[(size_t(1) * 3 + 2) * 4 + 1] == doctest::Approx(expect));
  CHECK(MaxRelGradError(leaves, [&] {
          return ProjectToScalar(GroupedLinear(leaves[0], leaves[1], 2, 3, 2),
                                 2);
        }) < kGradTol);

  CHECK_THROWS_AS(GroupedLinear(leaves[0], leaves[1], 2, 3, 1), Error);
}

TEST_CASE("per-channel scaling matches gradcheck") {
  Rng rng(104, 0);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Tensor> leaves = {RandomTensor(Shape(2, 3, 4, 5), rng, -2, 2),
                                  RandomTensor(Shape(1, 3, 1, 1), rng, -2, 2)};
    CHECK(MaxRelGradError(leaves, [&] {
            return ProjectToScalar(MulChannel(leaves[0], leaves[1]), 21);
          }) < kGradTol);
  }
}

TEST_CASE("conv2d forward matches a naive padded loop") {
  Rng rng(105, 0);
  for (int s = 1; s <= 2; ++s) {
    for (int k : {3, 5}) {
      const int B = 2, IC = 3, OC = 2, IH = 7, IW = 5;
      Tensor x = RandomTensor(Shape(B, IC, IH, IW), rng, -1, 1);
      Tensor w = RandomTensor(Shape(OC, IC, k, k), rng, -1, 1);
      Tensor b = RandomTensor(Shape(1, OC, 1, 1), rng, -1, 1);
      Tensor y = Conv2d(x, w, b, s);
      const std::vector<double> want =
          NaiveConv(x.data(), B, IC, IH, IW, w.data(), OC, k, s, b.data());
      REQUIRE(size_t(y.numel()) == want.size());
      CHECK(y.dim(2) == (IH + s - 1) / s);
      CHECK(y.dim(3) == (IW + s - 1) / s);
      double maxdiff = 0.0;
      for (size_t i = 0; i < want.size(); ++i) {
        maxdiff = std::max(maxdiff, std::abs(y.data()[i] - want[i]));
      }
      CHECK(maxdiff < 1e-12);
    }
  }
}

TEST_CASE("conv2d passes gradcheck in input, weight and bias") {
  Rng rng(106, 0);
  for (int rep = 0; rep < 5; ++rep) {
    const int s = 1 + rep % 2;
    std::vector<Tensor> leaves = {RandomTensor(Shape(2, 3, 5, 7), rng, -1, 1),
                                  RandomTensor(Shape(2, 3, 3, 3), rng, -1, 1),
                                  RandomTensor(Shape(1, 2, 1, 1), rng, -1, 1)};
    CHECK(MaxRelGradError(leaves, [&] {
            return ProjectToScalar(Conv2d(leaves[0], leaves[1], leaves[2], s),
                                   31);
          }) < kGradTol);
  }
}

TEST_CASE("conv_transpose2d passes gradcheck and upsamples exactly") {
  Rng rng(107, 0);
  for (int rep = 0; rep < 5; ++rep) {
    const int s = 1 + rep % 2;
    const int k = s == 1 ? 3 : 4;
    std::vector<Tensor> leaves = {RandomTensor(Shape(2, 3, 3, 2), rng, -1, 1),
                                  RandomTensor(Shape(3, 2, k, k), rng, -1, 1),
                                  RandomTensor(Shape(1, 2, 1, 1), rng, -1, 1)};
    Tensor y = ConvTranspose2d(leaves[0], leaves[1], leaves[2], s);
    CHECK(y.dim(2) == 3 * s);
    CHECK(y.dim(3) == 2 * s);
    CHECK(MaxRelGradError(leaves, [&] {
            return ProjectToScalar(
                ConvTranspose2d(leaves[0], leaves[1], leaves[2], s), 32);
          }) < kGradTol);
  }
  // stride-4 kernel-4 layer used by the synthesis stack
  Tensor x = RandomTensor(Shape(1, 2, 3, 3), rng, -1, 1);
  Tensor w = RandomTensor(Shape(2, 1, 4, 4), rng, -1, 1);
  Tensor b = Tensor::Zeros(Shape(1, 1, 1, 1));
  Tensor y4 = ConvTranspose2d(x, w, b, 4);
  CHECK(y4.dim(2) == 12);
  CHECK(y4.dim(3) == 12);
  CHECK_THROWS_AS(ConvTranspose2d(x, RandomTensor(Shape(2, 1, 3, 3), rng, -1, 1),
                                  b, 4),
                  Error);
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
  Rng rng(108, 0);
  for (int s : {1, 2, 4}) {
    const int IC = 3, OC = 2, K = 4, H = 8, W = 4;
    Tensor x = RandomTensor(Shape(1, IC, H, W), rng, -1, 1);
    Tensor y = RandomTensor(Shape(1, OC, H / s, W / s), rng, -1, 1);
    Tensor w = RandomTensor(Shape(OC, IC, K, K), rng, -1, 1);
    Tensor zb_o = Tensor::Zeros(Shape(1, OC, 1, 1));
    Tensor zb_i = Tensor::Zeros(Shape(1, IC, 1, 1));
    const double lhs = Dot(Conv2d(x, w, zb_o, s).data(), y.data());
    const double rhs = Dot(x.data(), ConvTranspose2d(y, w, zb_i, s).data());
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("forward pass is bit-deterministic") {
  Rng rng(109, 0);
  Tensor x = RandomTensor(Shape(2, 3, 9, 9), rng, -1, 1);
  Tensor w = RandomTensor(Shape(4, 3, 5, 5), rng, -1, 1);
  Tensor b = RandomTensor(Shape(1, 4, 1, 1), rng, -1, 1);
  Tensor y1 = Conv2d(x, w, b, 2);
  Tensor y2 = Conv2d(x, w, b, 2);
  CHECK(y1.data() == y2.data());
}

TEST_CASE("channel concat, slice, crop and upsample pass gradcheck") {
  Rng rng(110, 0);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<Tensor> leaves = {RandomTensor(Shape(2, 2, 4, 3), rng, -1, 1),
                                  RandomTensor(Shape(2, 3, 4, 3), rng, -1, 1)};
    CHECK(MaxRelGradError(leaves, [&] {
            return ProjectToScalar(ConcatChannels(leaves[0], leaves[1]), 41);
          }) < kGradTol);
    std::vector<Tensor> one = {RandomTensor(Shape(2, 5, 4, 6), rng, -1, 1)};
    CHECK(MaxRelGradError(one, [&] {
            return ProjectToScalar(SliceChannels(one[0], 1, 4), 42);
          }) < kGradTol);
    CHECK(MaxRelGradError(one, [&] {
            return ProjectToScalar(CropHW(one[0], 3, 5), 43);
          }) < kGradTol);
    CHECK(MaxRelGradError(one, [&] {
            return ProjectToScalar(Upsample2xNearest(one[0]), 44);
          }) < kGradTol);
  }
  Tensor x = Tensor::FromVector(Shape(1, 2, 1, 1), {3.0, -4.0});
  Tensor up = Upsample2xNearest(x);
  CHECK(up.data() == std::vector<double>{3, 3, 3, 3, -4, -4, -4, -4});
}

TEST_CASE("slice inverts concat") {
  Rng rng(111, 0);
  Tensor a = RandomTensor(Shape(2, 2, 3, 3), rng, -1, 1);
  Tensor b = RandomTensor(Shape(2, 4, 3, 3), rng, -1, 1);
  Tensor cat = ConcatChannels(a, b);
  CHECK(SliceChannels(cat, 0, 2).data() == a.data());
  CHECK(SliceChannels(cat, 2, 6).data() == b.data());
}

TEST_CASE("block-to-space maps frequency channels to pixel offsets") {
  std::vector<double> v(64 * 2 * 3);
  for (int p = 0; p < 64; ++p)
    for (int i = 0; i < 6; ++i) v[p * 6 + i] = double(p);
  Tensor x = Tensor::FromVector(Shape(1, 64, 2, 3), std::move(v));
  Tensor y = BlockToSpace(x, 1);
  REQUIRE(y.dim(2) == 16);
  REQUIRE(y.dim(3) == 24);
  for (int py = 0; py < 16; ++py)
    for (int px = 0; px < 24; ++px)
      CHECK(y.data()[py * 24 + px] == double((py % 8) * 8 + px % 8));
  Rng rng(112, 0);
  std::vector<Tensor> leaves = {RandomTensor(Shape(2, 128, 2, 2), rng, -1, 1)};
  CHECK(MaxRelGradError(leaves, [&] {
          return ProjectToScalar(BlockToSpace(leaves[0], 2), 51);
        }) < kGradTol);
}

TEST_CASE("fixed channel map applies groupwise and passes gradcheck") {
  const std::vector<double> m = {1.0, 2.0, -1.0, 0.5, 0.0, 3.0};  // 2x3
  Tensor x = Tensor::FromVector(Shape(1, 6, 1, 1), {1, 2, 3, 4, 5, 6});
  Tensor y = ChannelLinear(x, m, 2, 3, 2);
  REQUIRE(y.numel() == 4);
  CHECK(y.data()[0] == doctest::Approx(1 + 4 - 3));
  CHECK(y.data()[1] == doctest::Approx(0.5 + 9));
  CHECK(y.data()[2] == doctest::Approx(4 + 10 - 6));
  CHECK(y.data()[3] == doctest::Approx(2 + 18));
  Rng rng(113, 0);
  std::vector<Tensor> leaves = {RandomTensor(Shape(2, 6, 3, 2), rng, -1, 1)};
  CHECK(MaxRelGradError(leaves, [&] {
          return ProjectToScalar(ChannelLinear(leaves[0], m, 2, 3, 2), 52);
        }) < kGradTol);
}

TEST_CASE("discretized Gaussian mass matches closed forms") {
  CHECK(GaussianIntervalProb(0.0, 1.0) ==
        doctest::Approx(0.3829249225480261).epsilon(1e-12));
  CHECK(GaussianIntervalProb(0.0, 100.0) ==
        doctest::Approx(0.0039894062).epsilon(1e-6));
  CHECK(GaussianIntervalProb(3.0, 1.0) ==
        doctest::Approx(GaussianIntervalProb(-3.0, 1.0)).epsilon(1e-14));
  // long tail collapses to zero mass, code length hits the floor
  Tensor v = Tensor::FromVector(Shape(1, 1, 1, 1), {500.0});
  Tensor s = Tensor::FromVector(Shape(1, 1, 1, 1), {1.0});
  CHECK(GaussianBits(v, s).scalar() == doctest::Approx(16.0));
}

TEST_CASE("Gaussian code length passes gradcheck in symbol and scale") {
  Rng rng(114, 0);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Tensor> leaves = {RandomTensor(Shape(2, 2, 3, 3), rng, -3, 3),
                                  RandomTensor(Shape(2, 2, 3, 3), rng, 1, 3)};
    CHECK(MaxRelGradError(leaves, [&] {
            return ProjectToScalar(GaussianBits(leaves[0], leaves[1]), 61);
          }) < kGradTol);
  }
}

TEST_CASE("gradients accumulate across reused nodes") {
  Tensor x = Tensor::FromVector(Shape(1, 1, 1, 3), {0.5, -1.5, 2.0}, true);
  Tensor loss = Sum(Add(Mul(x, x), x));  // f = x^2 + x
  Backward(loss);
  for (int i = 0; i < 3; ++i) {
    CHECK(x.grad()[i] == doctest::Approx(2.0 * x.data()[i] + 1.0));
  }
  x.ZeroGrad();
  Tensor u = Exp(x);
  Backward(Sum(Add(u, u)));
  for (int i = 0; i < 3; ++i) {
    CHECK(x.grad()[i] == doctest::Approx(2.0 * std::exp(x.data()[i])));
  }
}

TEST_CASE("backward ignores constant subgraphs") {
  Tensor x = Tensor::FromVector(Shape(1, 1, 1, 2), {1.0, 2.0}, true);
  Tensor c = Tensor::Constant(Shape(1, 1, 1, 2), 3.0);
  Tensor loss = Sum(Mul(x, c));
  Backward(loss);
  CHECK(x.grad()[0] == 3.0);
  CHECK(x.grad()[1] == 3.0);
  CHECK(c.node->grad.empty());
}

TEST_CASE("adam takes the textbook first step and clears gradients") {
  Parameter p("w", Tensor::FromVector(Shape(1, 1, 1, 2), {1.0, -1.0}));
  p.tensor.node->EnsureGrad();
  p.tensor.node->grad[0] = 2.0;
  p.tensor.node->grad[1] = -0.5;
  std::vector<Parameter*> params = {&p};
  AdamConfig cfg;
  cfg.lr = 0.1;
  AdamStep(params, cfg);
  CHECK(p.tensor.data()[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p.tensor.data()[1] == doctest::Approx(-0.9).epsilon(1e-6));
  CHECK(p.tensor.grad()[0] == 0.0);
  CHECK(p.step_count == 1);
  // a parameter that never saw a gradient is left alone
  Parameter q("b", Tensor::FromVector(Shape(1, 1, 1, 1), {5.0}));
  std::vector<Parameter*> only_q = {&q};
  AdamStep(only_q, cfg);
  CHECK(q.tensor.data()[0] == 5.0);
  CHECK(q.step_count == 0);
}

TEST_CASE("staircase learning-rate decay") {
  CHECK(LrDecay(1e-4, 0.9, 500, 0) == doctest::Approx(1e-4));
  CHECK(LrDecay(1e-4, 0.9, 500, 499) == doctest::Approx(1e-4));
  CHECK(LrDecay(1e-4, 0.9, 500, 500) == doctest::Approx(9e-5));
  CHECK(LrDecay(1e-4, 0.9, 500, 1250) == doctest::Approx(8.1e-5));
  CHECK(LrDecay(1e-3, 0.94, 1, 3) == doctest::Approx(1e-3 * 0.94 * 0.94 * 0.94));
}

TEST_CASE("checkpoint round trips and detects corruption") {
  Checkpoint ckpt;
  ckpt.config_json = "{\"n\":32}";
  ckpt.params.push_back({"ga.w0", {4, 3, 5, 5}, std::vector<double>(300)});
  ckpt.params.push_back({"ga.b0", {4}, {0.5, -0.25, 1e-300, 42.0}});
  for (size_t i = 0; i < 300; ++i) ckpt.params[0].data[i] = std::sin(double(i));
  std::vector<uint8_t> bytes = SerializeCheckpoint(ckpt);
  std::vector<uint8_t> again = SerializeCheckpoint(ckpt);
  CHECK(bytes == again);

  Checkpoint back = ParseCheckpoint(bytes.data(), bytes.size());
  CHECK(back.config_json == ckpt.config_json);
  REQUIRE(back.params.size() == 2);
  CHECK(back.params[0].name == "ga.w0");
  CHECK(back.params[0].dims == std::vector<int>{4, 3, 5, 5});
  CHECK(back.params[0].data == ckpt.params[0].data);
  CHECK(back.params[1].data == ckpt.params[1].data);
  CHECK(back.hash == ckpt.hash);

  std::vector<uint8_t> bad = bytes;
  bad[bad.size() / 2] ^= 0x40;
  CHECK_THROWS_AS(ParseCheckpoint(bad.data(), bad.size()), Error);
  CHECK_THROWS_AS(ParseCheckpoint(bytes.data(), 10), Error);

  const std::string path = "/tmp/jrc_ckpt_test.jrnn";
  SaveCheckpointFile(path, ckpt);
  Checkpoint from_file = LoadCheckpointFile(path);
  CHECK(from_file.hash == ckpt.hash);
  std::remove(path.c_str());
}
