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

#ifndef JRC_TESTS_SYNTH_H_
#define JRC_TESTS_SYNTH_H_

#include <cmath>
#include <cstdint>
#include <vector>

#include "util/rng.h"

namespace jrc::testing {

// Deterministic synthetic RGB content. Kinds cycle through flat areas,
// gradients, sinusoids, noise, checkers, edges and plasma-like blobs so the
// corpus exercises DC-heavy, AC-heavy and mixed blocks.
inline std::vector<uint8_t> MakeTestRgb(int w, int h, int kind,
                                        uint64_t seed) {
  std::vector<uint8_t> rgb(size_t(w) * h * 3);
  Rng rng(seed, uint64_t(kind));
  auto at = [&](int x, int y) { return rgb.data() + (size_t(y) * w + x) * 3; };
  switch (kind % 8) {
    case 0:  // flat mid gray
      for (auto& v : rgb) v = 128;
      break;
    case 1:  // horizontal luma gradient, mild color tint
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          uint8_t* p = at(x, y);
          const int g = w > 1 ? 255 * x / (w - 1) : 0;
          p[0] = uint8_t(g);
          p[1] = uint8_t((g * 3 / 4) + 32);
          p[2] = uint8_t(255 - g);
        }
      break;
    case 2:  // two-frequency sinusoid mix
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          uint8_t* p = at(x, y);
          const double a = std::sin(x * 0.31) * std::cos(y * 0.17);
          const double b = std::sin((x + 2 * y) * 0.07);
          p[0] = uint8_t(128 + 90 * a);
          p[1] = uint8_t(128 + 90 * b);
          p[2] = uint8_t(128 + 45 * (a + b));
        }
      break;
    case 3:  // uniform noise
      for (auto& v : rgb) v = uint8_t(rng.NextBelow(256));
      break;
    case 4:  // 8px checkerboard with color
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          uint8_t* p = at(x, y);
          const bool on = ((x / 8) + (y / 8)) & 1;
          p[0] = on ? 220 : 30;
          p[1] = on ? 40 : 200;
          p[2] = on ? 90 : 160;
        }
      break;
    case 5:  // hard vertical edges of random runs
      for (int y = 0; y < h; ++y) {
        int x = 0;
        while (x < w) {
          const int run = 1 + int(rng.NextBelow(12));
          const uint8_t r = uint8_t(rng.NextBelow(256));
          const uint8_t g = uint8_t(rng.NextBelow(256));
          const uint8_t b = uint8_t(rng.NextBelow(256));
          for (int i = 0; i < run && x < w; ++i, ++x) {
            uint8_t* p = at(x, y);
            p[0] = r;
            p[1] = g;
            p[2] = b;
          }
        }
      }
      break;
    case 6:  // radial ramp
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          uint8_t* p = at(x, y);
          const double dx = x - w / 2.0, dy = y - h / 2.0;
          const double r = std::sqrt(dx * dx + dy * dy);
          p[0] = uint8_t(std::fmod(r * 4.0, 256.0));
          p[1] = uint8_t(std::fmod(r * 2.0, 256.0));
          p[2] = uint8_t(255.0 - std::fmod(r * 3.0, 256.0));
        }
      break;
    default:  // smooth plasma blobs
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          uint8_t* p = at(x, y);
          const double v = std::sin(x * 0.041 + 1.7) + std::sin(y * 0.059) +
                           std::sin((x + y) * 0.023);
          p[0] = uint8_t(128 + 40 * v);
          p[1] = uint8_t(128 + 35 * std::sin(v * 2.1));
          p[2] = uint8_t(128 - 40 * v);
        }
      break;
  }
  return rgb;
}

}  // namespace jrc::testing

#endif  // JRC_TESTS_SYNTH_H_
