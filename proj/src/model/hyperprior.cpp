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

#include "model/hyperprior.h"

#include <cmath>

#include "json.hpp"
#include "util/error.h"
#include "util/rng.h"

namespace jrc::model {

namespace {

constexpr double kLn2 = 0.6931471805599453;
// Flow widths 1 -> 3 -> 3 -> 3 -> 1.
constexpr int kFlowWidths[5] = {1, 3, 3, 3, 1};
constexpr int kFlowDepth = 4;

nn::Tensor RandomUniformTensor(const nn::Shape& s, Rng& rng, double lo,
                               double hi) {
  std::vector<double> v(static_cast<size_t>(s.numel()));
  for (double& x : v) x = lo + (hi - lo) * rng.NextUniform();
  return nn::Tensor::FromVector(s, v);
}

}  // namespace

std::string ModelConfig::ToJson() const {
  nlohmann::json j;
  j["c_in"] = c_in;
  j["n_latent"] = n_latent;
  j["m_hyper"] = m_hyper;
  j["x_norm"] = x_norm;
  return j.dump();
}

ModelConfig ModelConfig::FromJson(const std::string& json) {
  ModelConfig cfg;
  try {
    const nlohmann::json j = nlohmann::json::parse(json);
    cfg.c_in = j.at("c_in").get<int>();
    cfg.n_latent = j.at("n_latent").get<int>();
    cfg.m_hyper = j.at("m_hyper").get<int>();
    cfg.x_norm = j.at("x_norm").get<double>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("bad model config: ") + e.what());
  }
  Check(cfg.c_in > 0 && cfg.n_latent > 0 && cfg.m_hyper > 0 && cfg.x_norm > 0,
        ErrorKind::kInvalidArgument, "model config values must be positive");
  return cfg;
}

FactorizedPrior::FactorizedPrior(int channels, const std::string& prefix,
                                 uint64_t seed)
    : channels_(channels) {
  Check(channels > 0, ErrorKind::kInvalidArgument,
        "prior needs at least one channel");
  Rng rng(seed, 0x9e3779b97f4a7c15ull);
  // Matrices start at softplus^-1 of 1/(scale*width) so the initial CDF is a
  // smooth ramp over roughly [-10, 10]; gates start closed at zero.
  const double scale = std::pow(10.0, 1.0 / (kFlowDepth + 1));
  for (int k = 0; k < kFlowDepth; ++k) {
    const int in_w = kFlowWidths[k];
    const int out_w = kFlowWidths[k + 1];
    const double h_init = std::log(std::expm1(1.0 / (scale * out_w)));
    params_.emplace_back(
        prefix + ".h" + std::to_string(k),
        nn::Tensor::Constant(nn::Shape(channels, out_w, in_w, 1), h_init));
    params_.emplace_back(
        prefix + ".b" + std::to_string(k),
        RandomUniformTensor(nn::Shape(1, channels * out_w, 1, 1), rng, -0.5,
                            0.5));
    if (k + 1 < kFlowDepth) {
      params_.emplace_back(
          prefix + ".a" + std::to_string(k),
          nn::Tensor::Zeros(nn::Shape(1, channels * out_w, 1, 1)));
    }
  }
}

nn::Parameter* FactorizedPrior::Find(const std::string& suffix) {
  for (auto& p : params_) {
    if (p.name.size() >= suffix.size() &&
        p.name.compare(p.name.size() - suffix.size(), suffix.size(),
                       suffix) == 0) {
      return &p;
    }
  }
  Fail(ErrorKind::kInternal, "prior parameter missing: " + suffix);
}

nn::Tensor FactorizedPrior::Cdf(const nn::Tensor& v) {
  Check(v.dim(1) == channels_, ErrorKind::kInvalidArgument,
        "prior channel count mismatch");
  nn::Tensor t = v;
  for (int k = 0; k < kFlowDepth; ++k) {
    const int in_w = kFlowWidths[k];
    const int out_w = kFlowWidths[k + 1];
    nn::Parameter* h = Find(".h" + std::to_string(k));
    nn::Parameter* b = Find(".b" + std::to_string(k));
    t = nn::GroupedLinear(t, nn::Softplus(h->tensor), channels_, out_w, in_w);
    t = nn::AddChannel(t, b->tensor);
    if (k + 1 < kFlowDepth) {
      nn::Parameter* a = Find(".a" + std::to_string(k));
      t = nn::Add(t, nn::MulChannel(nn::Tanh(t), nn::Tanh(a->tensor)));
    }
  }
  return nn::Sigmoid(t);
}

nn::Tensor FactorizedPrior::Bits(const nn::Tensor& v) {
  const nn::Tensor hi = Cdf(nn::AddScalar(v, 0.5));
  const nn::Tensor lo = Cdf(nn::AddScalar(v, -0.5));
  const nn::Tensor p = nn::Clamp(nn::Sub(hi, lo), nn::kLikelihoodFloor, 1.0);
  return nn::Scale(nn::Log(p), -1.0 / kLn2);
}

std::vector<coder::CdfTable> FactorizedPrior::CodingTables(int v_min,
                                                           int v_max) {
  Check(v_min <= v_max, ErrorKind::kInvalidArgument,
        "empty prior table support");
  const int count = v_max - v_min + 1;
  // Evaluate every channel's interval mass in one batched pass; the grid
  // lives on the H axis.
  std::vector<double> grid(size_t(channels_) * count);
  for (int c = 0; c < channels_; ++c)
    for (int i = 0; i < count; ++i)
      grid[size_t(c) * count + i] = double(v_min + i);
  const nn::Tensor v =
      nn::Tensor::FromVector(nn::Shape(1, channels_, count, 1), grid);
  const nn::Tensor hi = Cdf(nn::AddScalar(v, 0.5));
  const nn::Tensor lo = Cdf(nn::AddScalar(v, -0.5));

  std::vector<coder::CdfTable> tables;
  tables.reserve(size_t(channels_));
  for (int c = 0; c < channels_; ++c) {
    std::vector<double> w(static_cast<size_t>(count));
    double covered = 0.0;
    for (int i = 0; i < count; ++i) {
      const double p = hi.data()[size_t(c) * count + i] -
                       lo.data()[size_t(c) * count + i];
      covered += std::max(p, 0.0);
      w[size_t(i)] = std::max(p, nn::kLikelihoodFloor);
    }
    const double tail = std::max(1.0 - covered, 0.0) + nn::kLikelihoodFloor;
    tables.push_back(coder::QuantizeCdf(w, v_min, tail));
  }
  return tables;
}

void FactorizedPrior::CollectParameters(std::vector<nn::Parameter*>* out) {
  for (auto& p : params_) out->push_back(&p);
}

RateReport MakeRateReport(double bits_x, double bits_y, double bits_z,
                          int64_t pixel_count) {
  Check(bits_x >= 0 && bits_y >= 0 && bits_z >= 0, ErrorKind::kNumeric,
        "negative rate");
  Check(pixel_count > 0, ErrorKind::kInvalidArgument, "empty pixel count");
  RateReport r;
  r.bits_x = bits_x;
  r.bits_y = bits_y;
  r.bits_z = bits_z;
  r.total_bits = bits_x + bits_y + bits_z;
  r.bpp = r.total_bits / double(pixel_count);
  return r;
}

HyperpriorModel::HyperpriorModel(const ModelConfig& cfg,
                                 const std::string& prefix, uint64_t seed)
    : cfg_(cfg),
      prefix_(prefix),
      prior_(cfg.m_hyper, prefix + ".prior", HashName(prefix.c_str()) ^ seed) {
  const int C = cfg.c_in, N = cfg.n_latent, M = cfg.m_hyper;
  uint64_t stream = 1;
  auto conv = [&](std::vector<Layer>& stack, const char* stack_name, int ic,
                  int oc, int k, int s, int act, bool transpose) {
    Rng rng(seed, HashName(prefix.c_str()) ^ (stream++));
    const double bound = std::sqrt(6.0 / (double(ic) * k * k));
    // Conv weights are (OC, IC, K, K); transpose weights are (IC, OC, K, K).
    const nn::Shape ws = transpose ? nn::Shape(ic, oc, k, k)
                                   : nn::Shape(oc, ic, k, k);
    const std::string base = prefix + "." + stack_name + "." +
                             std::to_string(int(stack.size()));
    stack.push_back(Layer{
        nn::Parameter(base + ".w", RandomUniformTensor(ws, rng, -bound, bound)),
        nn::Parameter(base + ".b", nn::Tensor::Zeros(nn::Shape(1, oc, 1, 1))),
        s, act, transpose});
  };

  conv(ga_, "ga", C, N, 5, 2, 1, false);
  conv(ga_, "ga", N, N, 5, 2, 2, false);
  conv(ga_, "ga", N, N, 5, 2, 2, false);
  conv(ga_, "ga", N, N, 5, 2, 0, false);

  conv(gs_, "gs", N, N, 3, 1, 1, false);
  conv(gs_, "gs", N, N, 3, 1, 1, false);
  conv(gs_, "gs", N, N, 3, 1, 0, false);
  conv(gs_, "gs", N, N, 4, 2, 1, true);
  conv(gs_, "gs", N, N, 4, 2, 1, true);
  conv(gs_, "gs", N, C, 4, 4, 0, true);

  conv(ha_, "ha", N, M, 3, 1, 1, false);
  conv(ha_, "ha", M, M, 5, 2, 1, false);
  conv(ha_, "ha", M, M, 5, 2, 0, false);

  conv(hs_, "hs", M, N, 4, 2, 1, true);
  conv(hs_, "hs", N, N, 4, 2, 1, true);
  conv(hs_, "hs", N, N, 3, 1, 0, true);

  // Broad initial scales: the sigma heads start at ln(10) so freshly
  // initialized likelihoods are permissive rather than confidently wrong.
  const double ln10 = std::log(10.0);
  for (double& b : gs_.back().b.tensor.data()) b = ln10;
  for (double& b : hs_.back().b.tensor.data()) b = ln10;
}

nn::Tensor HyperpriorModel::RunStack(std::vector<Layer>& stack, nn::Tensor t) {
  for (Layer& l : stack) {
    t = l.transpose ? nn::ConvTranspose2d(t, l.w.tensor, l.b.tensor, l.stride)
                    : nn::Conv2d(t, l.w.tensor, l.b.tensor, l.stride);
    if (l.act == 1) t = nn::Relu(t);
    if (l.act == 2) t = nn::Relu6(t);
  }
  return t;
}

nn::Tensor HyperpriorModel::Analysis(const nn::Tensor& x) {
  Check(x.dim(1) == cfg_.c_in, ErrorKind::kInvalidArgument,
        "analysis input channel mismatch");
  return RunStack(ga_, nn::Scale(x, 1.0 / cfg_.x_norm));
}

nn::Tensor HyperpriorModel::HyperAnalysis(const nn::Tensor& y) {
  Check(y.dim(1) == cfg_.n_latent, ErrorKind::kInvalidArgument,
        "hyper-analysis input channel mismatch");
  return RunStack(ha_, y);
}

nn::Tensor HyperpriorModel::HyperSynthesisSigma(const nn::Tensor& z_hat, int h,
                                                int w) {
  nn::Tensor s = RunStack(hs_, z_hat);
  Check(s.dim(2) >= h && s.dim(3) >= w, ErrorKind::kInternal,
        "hyper-synthesis output smaller than requested crop");
  return nn::Exp(nn::Clamp(nn::CropHW(s, h, w), kSigmaLogMin, kSigmaLogMax));
}

nn::Tensor HyperpriorModel::SynthesisSigma(const nn::Tensor& y_hat, int h,
                                           int w) {
  nn::Tensor s = RunStack(gs_, y_hat);
  Check(s.dim(2) >= h && s.dim(3) >= w, ErrorKind::kInternal,
        "synthesis output smaller than requested crop");
  return nn::Exp(nn::Clamp(nn::CropHW(s, h, w), kSigmaLogMin, kSigmaLogMax));
}

RateTensors HyperpriorModel::Rate(const nn::Tensor& x, Relaxation relaxation,
                                  uint64_t noise_seed, uint64_t noise_stream,
                                  const nn::Tensor* x_mask) {
  RateTensors out;
  out.y = Analysis(x);
  out.z = HyperAnalysis(out.y);
  if (relaxation == Relaxation::kNoise) {
    out.y_hat = nn::AddUniformNoise(out.y, noise_seed, 2 * noise_stream);
    out.z_hat = nn::AddUniformNoise(out.z, noise_seed, 2 * noise_stream + 1);
  } else {
    out.y_hat = nn::SteRound(out.y);
    out.z_hat = nn::SteRound(out.z);
  }
  out.bits_z = nn::Sum(prior_.Bits(out.z_hat));
  out.sigma_y = HyperSynthesisSigma(out.z_hat, out.y.dim(2), out.y.dim(3));
  out.bits_y = nn::Sum(nn::GaussianBits(out.y_hat, out.sigma_y));
  out.sigma_x = SynthesisSigma(out.y_hat, x.dim(2), x.dim(3));
  nn::Tensor bx = nn::GaussianBits(x, out.sigma_x);
  if (x_mask != nullptr) bx = nn::Mul(bx, *x_mask);
  out.bits_x = nn::Sum(bx);
  return out;
}

std::vector<nn::Parameter*> HyperpriorModel::Parameters() {
  std::vector<nn::Parameter*> out;
  for (auto* stack : {&ga_, &gs_, &ha_, &hs_}) {
    for (Layer& l : *stack) {
      out.push_back(&l.w);
      out.push_back(&l.b);
    }
  }
  prior_.CollectParameters(&out);
  return out;
}

}  // namespace jrc::model
