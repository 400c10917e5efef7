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

#ifndef JRC_CODER_GAUSSIAN_CDF_H_
#define JRC_CODER_GAUSSIAN_CDF_H_

#include <array>
#include <memory>

#include "coder/range_coder.h"

namespace jrc::coder {

// Zero-mean discretized Gaussians are coded through a small family of
// tables indexed by a geometrically binned scale. Encoder and decoder both
// derive the bin from the model's sigma, so the tables always agree.
inline constexpr int kSigmaBins = 256;
inline constexpr double kSigmaBinMin = 0.04;
inline constexpr double kSigmaBinMax = 256.0;

int SigmaBinIndex(double sigma);
double SigmaForBin(int bin);

// Symmetric support [-s, s] with s = clamp(ceil(32*sigma), 4, support_cap);
// tail mass plus the likelihood floor goes to the escape slot.
CdfTable BuildGaussianCdf(double sigma, int support_cap);

// Lazily built per-bin tables for one fixed support cap.
class GaussianCdfCache {
 public:
  explicit GaussianCdfCache(int support_cap);
  const CdfTable& ForSigma(double sigma);
  const CdfTable& ForBin(int bin);
  int support_cap() const { return support_cap_; }

 private:
  int support_cap_;
  std::array<std::unique_ptr<CdfTable>, kSigmaBins> tables_;
};

}  // namespace jrc::coder

#endif  // JRC_CODER_GAUSSIAN_CDF_H_
