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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "coder/gaussian_cdf.h"
#include "coder/range_coder.h"
#include "doctest.h"
#include "gradcheck.h"
#include "model/hyperprior.h"
#include "nn/adam.h"
#include "nn/checkpoint.h"
#include "nn/ops.h"
#include "util/rng.h"

using namespace jrc;
using namespace jrc::model;
using jrc::nn::Tensor;
using jrc::nn::Shape;
using jrc::testing::MaxRelGradError;

namespace {

ModelConfig TinyConfig() {
  ModelConfig cfg;
  cfg.c_in = 4;
  cfg.n_latent = 6;
  cfg.m_hyper = 3;
  cfg.x_norm = 64.0;
  return cfg;
}

Tensor RandomCoeffs(const Shape& s, Rng& rng, double amp) {
  std::vector<double> v(static_cast<size_t>(s.numel()));
  for (double& x : v) x = std::round(rng.NextCenteredUniform() * 2.0 * amp);
  return Tensor::FromVector(s, v);
}

}  // namespace

TEST_CASE("model config JSON round-trips") {
  ModelConfig cfg;
  cfg.c_in = 64;
  cfg.n_latent = 128;
  cfg.m_hyper = 64;
  cfg.x_norm = 64.0;
  CHECK(ModelConfig::FromJson(cfg.ToJson()) == cfg);
  CHECK_THROWS_AS(ModelConfig::FromJson("{"), Error);
  CHECK_THROWS_AS(ModelConfig::FromJson("{\"c_in\":0}"), Error);
}

TEST_CASE("stride chains produce the contracted shapes") {
  HyperpriorModel m(TinyConfig(), "t", 7);
  Rng rng(1, 1);
  const Tensor x = RandomCoeffs(Shape(1, 4, 32, 32), rng, 100.0);
  const Tensor y = m.Analysis(x);
  CHECK(y.dim(0) == 1);
  CHECK(y.dim(1) == 6);
  CHECK(y.dim(2) == 2);
  CHECK(y.dim(3) == 2);
  const Tensor z = m.HyperAnalysis(y);
  CHECK(z.dim(1) == 3);
  CHECK(z.dim(2) == 1);
  CHECK(z.dim(3) == 1);
  const Tensor sy = m.HyperSynthesisSigma(z, y.dim(2), y.dim(3));
  CHECK(sy.dim(1) == 6);
  CHECK(sy.dim(2) == 2);
  CHECK(sy.dim(3) == 2);
  const Tensor sx = m.SynthesisSigma(y, 32, 32);
  CHECK(sx.dim(1) == 4);
  CHECK(sx.dim(2) == 32);
  CHECK(sx.dim(3) == 32);
  for (double s : sx.data()) {
    CHECK(s >= 0.04);
    CHECK(s <= 256.0);
  }
  // 16x16 block grid collapses to 1x1 latents and still synthesizes back
  const Tensor x2 = RandomCoeffs(Shape(1, 4, 16, 16), rng, 40.0);
  const Tensor y2 = m.Analysis(x2);
  CHECK(y2.dim(2) == 1);
  const Tensor z2 = m.HyperAnalysis(y2);
  CHECK(z2.dim(2) == 1);
  CHECK(m.HyperSynthesisSigma(z2, 1, 1).dim(2) == 1);
  CHECK(m.SynthesisSigma(y2, 16, 16).dim(2) == 16);
}

TEST_CASE("zero input with zero biases maps to zero latents") {
  HyperpriorModel m(TinyConfig(), "t", 9);
  const Tensor x = Tensor::Zeros(Shape(1, 4, 16, 16));
  const Tensor y = m.Analysis(x);
  for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("batch items are processed independently") {
  HyperpriorModel m(TinyConfig(), "t", 11);
  Rng rng(2, 1);
  const Tensor one = RandomCoeffs(Shape(1, 4, 16, 16), rng, 60.0);
  std::vector<double> dup = one.data();
  dup.insert(dup.end(), one.data().begin(), one.data().end());
  const Tensor two = Tensor::FromVector(Shape(2, 4, 16, 16), dup);
  const Tensor y1 = m.Analysis(one);
  const Tensor y2 = m.Analysis(two);
  const size_t half = y1.data().size();
  REQUIRE(y2.data().size() == 2 * half);
  for (size_t i = 0; i < half; ++i) {
    CHECK(y2.data()[i] == y1.data()[i]);
    CHECK(y2.data()[half + i] == y1.data()[i]);
  }
}

TEST_CASE("fresh prior is a broad proper distribution") {
  FactorizedPrior prior(5, "p", 3);
  // CDF monotone on a 1e3-point grid, channelwise
  const int n = 1000;
  std::vector<double> grid(5 * size_t(n));
  for (int c = 0; c < 5; ++c)
    for (int i = 0; i < n; ++i)
      grid[size_t(c) * n + i] = -50.0 + 0.1 * double(i);
  const Tensor v = Tensor::FromVector(Shape(1, 5, n, 1), grid);
  const Tensor cdf = prior.Cdf(v);
  for (int c = 0; c < 5; ++c) {
    for (int i = 1; i < n; ++i) {
      CHECK(cdf.data()[size_t(c) * n + i] >=
            cdf.data()[size_t(c) * n + i - 1]);
    }
  }
  // P(0) in (0,1); sum over a wide integer range <= 1 by telescoping
  std::vector<double> ints(5 * 201);
  for (int c = 0; c < 5; ++c)
    for (int i = 0; i <= 200; ++i) ints[size_t(c) * 201 + i] = i - 100.0;
  const Tensor vi = Tensor::FromVector(Shape(1, 5, 201, 1), ints);
  const Tensor hi = prior.Cdf(nn::AddScalar(vi, 0.5));
  const Tensor lo = prior.Cdf(nn::AddScalar(vi, -0.5));
  for (int c = 0; c < 5; ++c) {
    double total = 0.0;
    for (int i = 0; i <= 200; ++i) {
      total += hi.data()[size_t(c) * 201 + i] - lo.data()[size_t(c) * 201 + i];
    }
    CHECK(total <= 1.0 + 1e-9);
    const double p0 = hi.data()[size_t(c) * 201 + 100] -
                      lo.data()[size_t(c) * 201 + 100];
    CHECK(p0 > 0.0);
    CHECK(p0 < 1.0);
  }
}

TEST_CASE("prior fits integer Gaussian samples to near their entropy") {
  Rng rng(31, 2);
  const int n = 4096;
  std::vector<double> samples(static_cast<size_t>(n));
  std::map<int, int> hist;
  for (double& s : samples) {
    s = std::round(rng.NextNormal() * 3.0);
    ++hist[int(s)];
  }
  double sample_entropy = 0.0;  // bits/sample of the empirical histogram
  for (const auto& [v, c] : hist) {
    const double p = double(c) / n;
    sample_entropy -= p * std::log2(p);
  }

  FactorizedPrior prior(1, "p", 17);
  std::vector<nn::Parameter*> params;
  prior.CollectParameters(&params);
  const Tensor v = Tensor::FromVector(Shape(1, 1, n, 1), samples);
  nn::AdamConfig adam;
  adam.lr = 5e-2;
  double bits_per_sample = 1e9;
  for (int step = 0; step < 400; ++step) {
    const Tensor loss = nn::Mean(prior.Bits(v));
    bits_per_sample = loss.scalar();
    nn::Backward(loss);
    nn::AdamStep(params, adam);
  }
  CHECK(bits_per_sample < sample_entropy + 0.1);
  CHECK(bits_per_sample > sample_entropy - 0.35);  // can undershoot slightly
}

TEST_CASE("rate(noise) gradcheck through the full chain") {
  ModelConfig cfg;
  cfg.c_in = 2;
  cfg.n_latent = 2;
  cfg.m_hyper = 1;
  HyperpriorModel m(cfg, "g", 5);
  Rng rng(4, 4);
  const Tensor x = RandomCoeffs(Shape(1, 2, 16, 16), rng, 30.0);
  std::vector<Tensor> leaves;
  for (nn::Parameter* p : m.Parameters()) leaves.push_back(p->tensor);
  // Zero-initialized biases put ReLU preactivations exactly on the kink,
  // where one-sided FD and the subgradient legitimately disagree. Nudge
  // every parameter to a generic point first.
  for (Tensor& t : leaves)
    for (double& v : t.data()) v += 0.05 * rng.NextCenteredUniform();
  const double err = MaxRelGradError(
      leaves,
      [&] {
        RateTensors r = m.Rate(x, Relaxation::kNoise, 99, 1);
        return nn::Add(nn::Add(r.bits_x, r.bits_y), r.bits_z);
      },
      1e-6);
  CHECK(err < 1e-5);
}

TEST_CASE("rate reports are finite, positive and relaxation-consistent") {
  HyperpriorModel m(TinyConfig(), "t", 13);
  Rng rng(5, 5);
  const Tensor x = RandomCoeffs(Shape(1, 4, 16, 16), rng, 200.0);
  const RateTensors noise = m.Rate(x, Relaxation::kNoise, 7, 0);
  const RateTensors round = m.Rate(x, Relaxation::kRound, 7, 0);
  for (const RateTensors* r : {&noise, &round}) {
    CHECK(std::isfinite(r->bits_x.scalar()));
    CHECK(r->bits_x.scalar() > 0.0);
    CHECK(r->bits_y.scalar() >= 0.0);
    CHECK(r->bits_z.scalar() >= 0.0);
  }
  for (size_t i = 0; i < round.y_hat.data().size(); ++i) {
    CHECK(round.y_hat.data()[i] == std::round(round.y.data()[i]));
  }
  const RateReport rep = MakeRateReport(round.bits_x.scalar(),
                                        round.bits_y.scalar(),
                                        round.bits_z.scalar(), 256 * 256);
  CHECK(rep.total_bits ==
        doctest::Approx(rep.bits_x + rep.bits_y + rep.bits_z));
  CHECK(rep.bpp == doctest::Approx(rep.total_bits / (256.0 * 256.0)));
}

TEST_CASE("masked rate drops exactly the masked elements") {
  HyperpriorModel m(TinyConfig(), "t", 21);
  Rng rng(6, 6);
  const Tensor x = RandomCoeffs(Shape(1, 4, 16, 16), rng, 50.0);
  std::vector<double> mv(x.data().size(), 1.0);
  for (size_t i = 0; i < mv.size(); i += 3) mv[i] = 0.0;
  const Tensor mask = Tensor::FromVector(x.shape(), mv);
  const RateTensors all = m.Rate(x, Relaxation::kRound, 7, 0);
  const RateTensors some = m.Rate(x, Relaxation::kRound, 7, 0, &mask);
  CHECK(some.bits_x.scalar() < all.bits_x.scalar());
  // recompute by hand from the unmasked per-element bits
  const Tensor per = nn::GaussianBits(x, all.sigma_x);
  double expect = 0.0;
  for (size_t i = 0; i < mv.size(); ++i) expect += per.data()[i] * mv[i];
  CHECK(some.bits_x.scalar() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("identical seeds build identical models") {
  HyperpriorModel a(TinyConfig(), "t", 77);
  HyperpriorModel b(TinyConfig(), "t", 77);
  HyperpriorModel c(TinyConfig(), "t", 78);
  auto pa = a.Parameters(), pb = b.Parameters(), pc = c.Parameters();
  REQUIRE(pa.size() == pb.size());
  bool any_diff_c = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(pa[i]->tensor.data() == pb[i]->tensor.data());
    if (pa[i]->tensor.data() != pc[i]->tensor.data()) any_diff_c = true;
  }
  CHECK(any_diff_c);
}

TEST_CASE("parameters survive a checkpoint export/import cycle") {
  HyperpriorModel a(TinyConfig(), "m", 100);
  HyperpriorModel b(TinyConfig(), "m", 101);
  nn::Checkpoint ckpt;
  ckpt.config_json = TinyConfig().ToJson();
  auto pa = a.Parameters();
  nn::ExportParameters(pa, &ckpt.params);
  const std::vector<uint8_t> bytes = nn::SerializeCheckpoint(ckpt);

  const nn::Checkpoint back = nn::ParseCheckpoint(bytes.data(), bytes.size());
  auto pb = b.Parameters();
  nn::ImportParameters(pb, back.params);
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->tensor.data() == pb[i]->tensor.data());
  }

  // a foreign parameter set must be rejected
  HyperpriorModel other(TinyConfig(), "different", 1);
  auto po = other.Parameters();
  CHECK_THROWS_AS(nn::ImportParameters(po, back.params), Error);
}

TEST_CASE("rounded rate predicts actual coded size within tolerance") {
  // End-to-end: code x, y, z with the production table machinery and compare
  // against the model's round-relaxation bit count.
  ModelConfig cfg = TinyConfig();
  HyperpriorModel m(cfg, "t", 55);
  Rng rng(8, 8);
  for (int rep = 0; rep < 5; ++rep) {
    const Tensor x = RandomCoeffs(Shape(1, 4, 32, 32), rng, 30.0 * (rep + 1));
    const RateTensors r = m.Rate(x, Relaxation::kRound, 0, 0);

    coder::RangeEncoder enc;
    // z through per-channel prior tables over the observed range
    int zmin = 0, zmax = 0;
    for (double v : r.z_hat.data()) {
      zmin = std::min(zmin, int(v));
      zmax = std::max(zmax, int(v));
    }
    auto ztables = m.prior().CodingTables(zmin - 1, zmax + 1);
    const int zc = r.z_hat.dim(1);
    const int zplane = r.z_hat.dim(2) * r.z_hat.dim(3);
    for (int c = 0; c < zc; ++c)
      for (int i = 0; i < zplane; ++i)
        enc.EncodeValue(ztables[size_t(c)],
                        int64_t(r.z_hat.data()[size_t(c) * zplane + i]));
    // y and x through sigma-binned Gaussian tables
    coder::GaussianCdfCache ycache(4096), xcache(1024);
    for (size_t i = 0; i < r.y_hat.data().size(); ++i)
      enc.EncodeValue(ycache.ForSigma(r.sigma_y.data()[i]),
                      int64_t(r.y_hat.data()[i]));
    for (size_t i = 0; i < x.data().size(); ++i)
      enc.EncodeValue(xcache.ForSigma(r.sigma_x.data()[i]),
                      int64_t(x.data()[i]));
    const double actual_bits = double(enc.Finish().size()) * 8.0;
    const double reported =
        r.bits_x.scalar() + r.bits_y.scalar() + r.bits_z.scalar();
    CHECK(reported >= actual_bits - 64.0 * 8.0);
    CHECK(reported <= actual_bits * 1.05 + 64.0 * 8.0);
  }
}
