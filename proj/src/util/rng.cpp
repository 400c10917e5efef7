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

#include "util/rng.h"

#include <cmath>

namespace jrc {
namespace {

// splitmix64 finalizer; full-period scrambling of a 64-bit counter.
uint64_t SplitMix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double ToUnit(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

uint64_t Rng::Mix(uint64_t a, uint64_t b) {
  return SplitMix64(SplitMix64(a) ^ (b * 0xD6E8FEB86659FD93ULL));
}

uint64_t Rng::NextU64() {
  state_ = SplitMix64(state_);
  return SplitMix64(state_ ^ 0xA3C59AC2ECA34B31ULL);
}

double Rng::NextUniform() { return ToUnit(NextU64()); }

double Rng::NextCenteredUniform() {
  // (0,1) open interval, then shift; never returns exactly +-0.5.
  uint64_t bits = NextU64() >> 11;
  double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  return u - 0.5;
}

double Rng::NextNormal() {
  if (have_spare_normal_) {
    have_spare_normal_ = false;
    return spare_normal_;
  }
  double u1 = NextUniform();
  double u2 = NextUniform();
  // Guard the log.
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_normal_ = r * std::sin(theta);
  have_spare_normal_ = true;
  return r * std::cos(theta);
}

uint64_t Rng::NextBelow(uint64_t n) {
  if (n == 0) return 0;
  // Rejection-free modulo; bias is < 2^-53 of a draw, irrelevant here.
  return NextU64() % n;
}

double Rng::UniformAt(uint64_t seed, uint64_t stream, uint64_t index) {
  return ToUnit(SplitMix64(Mix(seed, stream) ^ (index * 0xC2B2AE3D27D4EB4FULL)));
}

double Rng::CenteredUniformAt(uint64_t seed, uint64_t stream, uint64_t index) {
  uint64_t bits =
      SplitMix64(Mix(seed, stream) ^ (index * 0xC2B2AE3D27D4EB4FULL)) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53 - 0.5;
}

uint64_t HashName(const char* name) {
  // FNV-1a.
  uint64_t h = 0xCBF29CE484222325ULL;
  for (const char* p = name; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace jrc
