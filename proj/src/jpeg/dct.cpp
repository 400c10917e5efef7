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

#include <cmath>

#include "jpeg/jpeg.h"

namespace jrc::jpeg {
namespace {

// Orthonormal 1-D DCT-II basis: M[u][x] = a_u cos((2x+1)u pi / 16),
// a_0 = sqrt(1/8), a_u = 1/2. This is exactly the T.81 FDCT scaling.
struct Basis {
  double m[8][8];
  Basis() {
    const double pi = std::acos(-1.0);
    for (int u = 0; u < 8; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / 8.0) : 0.5;
      for (int x = 0; x < 8; ++x) {
        m[u][x] = a * std::cos((2 * x + 1) * u * pi / 16.0);
      }
    }
  }
};

const Basis kBasis;

}  // namespace

void Dct8x8(const double* in, double* out) {
  double tmp[64];
  // rows: tmp[y][u] = sum_x in[y][x] M[u][x]
  for (int y = 0; y < 8; ++y) {
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += in[y * 8 + x] * kBasis.m[u][x];
      tmp[y * 8 + u] = acc;
    }
  }
  // columns: out[v][u] = sum_y tmp[y][u] M[v][y]
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += tmp[y * 8 + u] * kBasis.m[v][y];
      out[v * 8 + u] = acc;
    }
  }
}

void Idct8x8(const double* in, double* out) {
  double tmp[64];
  // columns: tmp[y][u] = sum_v in[v][u] M[v][y]
  for (int y = 0; y < 8; ++y) {
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += in[v * 8 + u] * kBasis.m[v][y];
      tmp[y * 8 + u] = acc;
    }
  }
  // rows: out[y][x] = sum_u tmp[y][u] M[u][x]
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += tmp[y * 8 + u] * kBasis.m[u][x];
      out[y * 8 + x] = acc;
    }
  }
}

std::vector<double> Dequantize(const CoeffPlane& plane, const QuantTable& qt) {
  const std::array<uint16_t, 64> steps = qt.NaturalOrder();
  std::vector<double> out(plane.coeffs.size());
  const int64_t blocks = plane.BlockCount();
  for (int64_t b = 0; b < blocks; ++b) {
    const int16_t* src = plane.coeffs.data() + b * 64;
    double* dst = out.data() + b * 64;
    for (int k = 0; k < 64; ++k) dst[k] = double(src[k]) * steps[k];
  }
  return out;
}

CoeffPlane QuantizeRound(const std::vector<double>& blocks, int width_blocks,
                         int height_blocks, Component component,
                         const QuantTable& qt) {
  Check(int64_t(blocks.size()) == int64_t(width_blocks) * height_blocks * 64,
        ErrorKind::kInvalidArgument, "QuantizeRound: size mismatch");
  const std::array<uint16_t, 64> steps = qt.NaturalOrder();
  CoeffPlane plane;
  plane.component = component;
  plane.width_blocks = width_blocks;
  plane.height_blocks = height_blocks;
  plane.coeffs.resize(blocks.size());
  for (size_t i = 0; i < blocks.size(); ++i) {
    const double step = steps[i % 64];
    Check(step > 0, ErrorKind::kInvalidArgument, "QuantizeRound: zero step");
    double v = std::round(blocks[i] / step);
    if (v < kCoeffMin) v = kCoeffMin;
    if (v > kCoeffMax) v = kCoeffMax;
    plane.coeffs[i] = int16_t(v);
  }
  return plane;
}

}  // namespace jrc::jpeg
