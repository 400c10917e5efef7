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

#include "coder/gaussian_cdf.h"

#include <algorithm>
#include <cmath>

#include "nn/ops.h"

namespace jrc::coder {

namespace {
const double kLogStep =
    std::log(kSigmaBinMax / kSigmaBinMin) / double(kSigmaBins - 1);
}  // namespace

int SigmaBinIndex(double sigma) {
  if (!(sigma > 0.0)) return 0;
  const int bin = int(std::lround(std::log(sigma / kSigmaBinMin) / kLogStep));
  return std::clamp(bin, 0, kSigmaBins - 1);
}

double SigmaForBin(int bin) {
  return kSigmaBinMin * std::exp(double(bin) * kLogStep);
}

CdfTable BuildGaussianCdf(double sigma, int support_cap) {
  Check(sigma > 0.0 && support_cap >= 1, ErrorKind::kInvalidArgument,
        "Gaussian CDF needs positive sigma and support");
  const int s = std::clamp(int(std::ceil(32.0 * sigma)), 4, support_cap);
  std::vector<double> w(size_t(2 * s + 1));
  double covered = 0.0;
  for (int v = -s; v <= s; ++v) {
    const double p = nn::GaussianIntervalProb(double(v), sigma);
    covered += p;
    w[size_t(v + s)] = std::max(p, nn::kLikelihoodFloor);
  }
  const double tail = std::max(1.0 - covered, 0.0) + nn::kLikelihoodFloor;
  return QuantizeCdf(w, -s, tail);
}

GaussianCdfCache::GaussianCdfCache(int support_cap)
    : support_cap_(support_cap) {
  Check(support_cap >= 1, ErrorKind::kInvalidArgument,
        "support cap must be positive");
}

const CdfTable& GaussianCdfCache::ForSigma(double sigma) {
  return ForBin(SigmaBinIndex(sigma));
}

const CdfTable& GaussianCdfCache::ForBin(int bin) {
  Check(bin >= 0 && bin < kSigmaBins, ErrorKind::kInvalidArgument,
        "sigma bin out of range");
  auto& slot = tables_[size_t(bin)];
  if (!slot) {
    slot = std::make_unique<CdfTable>(
        BuildGaussianCdf(SigmaForBin(bin), support_cap_));
  }
  return *slot;
}

}  // namespace jrc::coder
