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

#ifndef JRC_MODEL_HYPERPRIOR_H_
#define JRC_MODEL_HYPERPRIOR_H_

#include <memory>
#include <string>
#include <vector>

#include "coder/range_coder.h"
#include "nn/adam.h"
#include "nn/ops.h"
#include "nn/tensor.h"

namespace jrc::model {

// Channel plan and normalization for one model instance. Input tensors are
// packed DCT coefficients: one channel per block frequency, spatial dims =
// block grid. The luma instance sees 64 channels; the chroma instance sees
// Cb and Cr stacked to 128 channels on the chroma grid.
struct ModelConfig {
  int c_in = 64;
  int n_latent = 128;  // y channels
  int m_hyper = 64;    // z channels
  double x_norm = 64.0;

  std::string ToJson() const;
  static ModelConfig FromJson(const std::string& json);
  bool operator==(const ModelConfig&) const = default;
};

enum class Relaxation { kNoise, kRound };

// Per-channel univariate monotone-flow CDF (depth 4, hidden widths 3,3,3).
// Positivity of the layer matrices and bounded gating keep c monotone with
// c(-inf)=0, c(+inf)=1 by construction.
class FactorizedPrior {
 public:
  FactorizedPrior(int channels, const std::string& prefix, uint64_t seed);

  // c(v) elementwise; v shaped (B, C, H, W).
  nn::Tensor Cdf(const nn::Tensor& v);
  // -log2(max(c(v+.5) - c(v-.5), 2^-16)) per element.
  nn::Tensor Bits(const nn::Tensor& v);
  // Per-channel quantized tables over [v_min, v_max] for the range coder.
  std::vector<coder::CdfTable> CodingTables(int v_min, int v_max);

  void CollectParameters(std::vector<nn::Parameter*>* out);
  int channels() const { return channels_; }

 private:
  int channels_;
  // One matrix/bias/gate triple per flow layer; the last layer has no gate.
  std::vector<nn::Parameter> params_;
  nn::Parameter* Find(const std::string& suffix);
};

struct RateTensors {
  nn::Tensor bits_x, bits_y, bits_z;  // scalar sums over all elements
  nn::Tensor y, z;                    // continuous latents
  nn::Tensor y_hat, z_hat;            // relaxed or rounded latents
  nn::Tensor sigma_x, sigma_y;        // cropped to x and y shapes
};

struct RateReport {
  double bits_x = 0.0;
  double bits_y = 0.0;
  double bits_z = 0.0;
  double total_bits = 0.0;
  double bpp = 0.0;
};

RateReport MakeRateReport(double bits_x, double bits_y, double bits_z,
                          int64_t pixel_count);

// Analysis/synthesis transform pair plus hyper pair and factorized prior:
//   x --ga(/16)--> y --ha(/4)--> z ~ prior
//   z_hat --hs(x4)--> sigma_y ;  y_hat --gs(x16)--> sigma_x
class HyperpriorModel {
 public:
  HyperpriorModel(const ModelConfig& cfg, const std::string& prefix,
                  uint64_t seed);

  nn::Tensor Analysis(const nn::Tensor& x);  // normalizes by x_norm inside
  nn::Tensor HyperAnalysis(const nn::Tensor& y);
  // sigma outputs are exp(clamp(pre, ln 0.04, ln 256)), cropped to (h, w).
  nn::Tensor HyperSynthesisSigma(const nn::Tensor& z_hat, int h, int w);
  nn::Tensor SynthesisSigma(const nn::Tensor& y_hat, int h, int w);

  // Full rate functional. x carries raw integer coefficients (as doubles and
  // possibly with a straight-through quantization history). x_mask, when
  // given, zeroes the bits of padded elements; same shape as x.
  RateTensors Rate(const nn::Tensor& x, Relaxation relaxation,
                   uint64_t noise_seed, uint64_t noise_stream,
                   const nn::Tensor* x_mask = nullptr);

  FactorizedPrior& prior() { return prior_; }
  const ModelConfig& config() const { return cfg_; }
  const std::string& prefix() const { return prefix_; }
  std::vector<nn::Parameter*> Parameters();

 private:
  struct Layer {
    nn::Parameter w, b;
    int stride;
    int act;  // 0 = none, 1 = relu, 2 = relu6
    bool transpose;
  };

  nn::Tensor RunStack(std::vector<Layer>& stack, nn::Tensor t);

  ModelConfig cfg_;
  std::string prefix_;
  std::vector<Layer> ga_, gs_, ha_, hs_;
  FactorizedPrior prior_;
};

inline constexpr double kSigmaLogMin = -3.2188758248682006;  // ln 0.04
inline constexpr double kSigmaLogMax = 5.545177444479562;    // ln 256

}  // namespace jrc::model

#endif  // JRC_MODEL_HYPERPRIOR_H_
