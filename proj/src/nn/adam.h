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

#ifndef JRC_NN_ADAM_H_
#define JRC_NN_ADAM_H_

#include <string>
#include <vector>

#include "nn/tensor.h"

namespace jrc::nn {

// A named trainable tensor plus its Adam state. Parameters keep their
// moment buffers across stages so alternating schedules resume cleanly.
struct Parameter {
  std::string name;
  Tensor tensor;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  int64_t step_count = 0;

  Parameter(std::string n, Tensor t) : name(std::move(n)), tensor(std::move(t)) {
    tensor.set_requires_grad(true);
    adam_m.assign(static_cast<size_t>(tensor.numel()), 0.0);
    adam_v.assign(static_cast<size_t>(tensor.numel()), 0.0);
  }
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update per parameter; zeroes gradients after use.
// Parameters whose gradient buffer was never allocated are skipped.
void AdamStep(std::vector<Parameter*>& params, const AdamConfig& cfg);

// Staircase decay: lr * gamma^floor(epoch / interval).
double LrDecay(double initial, double gamma, int interval, int epoch);

}  // namespace jrc::nn

#endif  // JRC_NN_ADAM_H_
