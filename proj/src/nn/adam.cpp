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

#include "nn/adam.h"

#include <cmath>

namespace jrc::nn {

void AdamStep(std::vector<Parameter*>& params, const AdamConfig& cfg) {
  for (Parameter* p : params) {
    Node* node = p->tensor.node.get();
    if (node->grad.empty()) continue;
    p->step_count += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(p->step_count));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(p->step_count));
    const size_t count = node->value.size();
    for (size_t i = 0; i < count; ++i) {
      const double g = node->grad[i];
      p->adam_m[i] = cfg.beta1 * p->adam_m[i] + (1.0 - cfg.beta1) * g;
      p->adam_v[i] = cfg.beta2 * p->adam_v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = p->adam_m[i] / bc1;
      const double vhat = p->adam_v[i] / bc2;
      node->value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
      node->grad[i] = 0.0;
    }
  }
}

double LrDecay(double initial, double gamma, int interval, int epoch) {
  const int steps = interval > 0 ? epoch / interval : 0;
  return initial * std::pow(gamma, double(steps));
}

}  // namespace jrc::nn
