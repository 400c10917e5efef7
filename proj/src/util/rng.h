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

#ifndef JRC_UTIL_RNG_H_
#define JRC_UTIL_RNG_H_

#include <cstdint>

namespace jrc {

// Counter-based deterministic RNG. Every draw is a pure function of
// (seed, stream, counter), so training runs are reproducible regardless
// of evaluation order and a given noise tensor can be regenerated from
// its (step, tensor) coordinates alone.
class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream) : state_(Mix(seed, stream)) {}

  // Stateful draws (sequence determined by construction arguments).
  uint64_t NextU64();
  // Uniform in [0, 1) with 53 bits of precision.
  double NextUniform();
  // Uniform in (-0.5, 0.5).
  double NextCenteredUniform();
  // Standard normal via Box-Muller.
  double NextNormal();
  // Uniform integer in [0, n).
  uint64_t NextBelow(uint64_t n);

  // Stateless element access: value i of the stream (seed, stream, i).
  static double UniformAt(uint64_t seed, uint64_t stream, uint64_t index);
  static double CenteredUniformAt(uint64_t seed, uint64_t stream, uint64_t index);

  static uint64_t Mix(uint64_t a, uint64_t b);

 private:
  uint64_t state_;
  bool have_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// Stable 64-bit hash of a string, for deriving RNG streams from names.
uint64_t HashName(const char* name);

}  // namespace jrc

#endif  // JRC_UTIL_RNG_H_
