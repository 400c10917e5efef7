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

#ifndef JRC_JPEG_JPEG_H_
#define JRC_JPEG_JPEG_H_

#include <array>
#include <cstdint>
#include <vector>

#include "util/error.h"

namespace jrc::jpeg {

// Scope: baseline sequential, 8-bit, YCbCr 4:2:0, Huffman-coded JFIF.
// Everything else is rejected loudly.

inline constexpr int kCoeffMin = -1024;
inline constexpr int kCoeffMax = 1023;

// Zigzag position -> natural (row-major) index, per the standard scan.
extern const std::array<int, 64> kZigzagToNatural;
extern const std::array<int, 64> kNaturalToZigzag;

template <typename T>
std::array<T, 64> Zigzag(const std::array<T, 64>& natural) {
  std::array<T, 64> out;
  for (int z = 0; z < 64; ++z) out[z] = natural[kZigzagToNatural[z]];
  return out;
}

template <typename T>
std::array<T, 64> Unzigzag(const std::array<T, 64>& zz) {
  std::array<T, 64> out;
  for (int z = 0; z < 64; ++z) out[kZigzagToNatural[z]] = zz[z];
  return out;
}

// 64 steps in zigzag order; [1, 255] whenever serialized to a JPEG file.
struct QuantTable {
  std::array<uint16_t, 64> steps{};

  std::array<uint16_t, 64> NaturalOrder() const {
    return Unzigzag(steps);
  }
  bool operator==(const QuantTable&) const = default;
};

enum class Component { kLuma = 0, kCb = 1, kCr = 2 };

// Quantized coefficients for one component. Blocks are row-major on the
// block grid; within a block the 64 values are in natural order with
// absolute (not differential) DC.
struct CoeffPlane {
  Component component = Component::kLuma;
  int width_blocks = 0;
  int height_blocks = 0;
  std::vector<int16_t> coeffs;  // width_blocks * height_blocks * 64

  int64_t BlockCount() const { return int64_t(width_blocks) * height_blocks; }
  int16_t* Block(int by, int bx) {
    return coeffs.data() + (int64_t(by) * width_blocks + bx) * 64;
  }
  const int16_t* Block(int by, int bx) const {
    return coeffs.data() + (int64_t(by) * width_blocks + bx) * 64;
  }
  bool operator==(const CoeffPlane&) const = default;
};

// One DHT payload: code counts per length and the value list.
struct HuffSpec {
  std::array<uint8_t, 16> bits{};
  std::vector<uint8_t> vals;
  bool operator==(const HuffSpec&) const = default;
};

struct JpegImage {
  int width = 0;   // pixels
  int height = 0;  // pixels
  CoeffPlane luma, cb, cr;
  QuantTable luma_qt, chroma_qt;
  HuffSpec dc_huff[2], ac_huff[2];  // as read from the file; index 0 = luma
  int restart_interval = 0;

  CoeffPlane& Plane(int i) { return i == 0 ? luma : (i == 1 ? cb : cr); }
  const CoeffPlane& Plane(int i) const {
    return i == 0 ? luma : (i == 1 ? cb : cr);
  }
  const QuantTable& PlaneQt(int i) const {
    return i == 0 ? luma_qt : chroma_qt;
  }
};

JpegImage ParseJpeg(const uint8_t* data, size_t size);
std::vector<uint8_t> SerializeJpeg(const JpegImage& image);

// Annex-K example tables (zigzag order) and IJG quality scaling.
QuantTable AnnexKLumaQuant();
QuantTable AnnexKChromaQuant();
QuantTable IjgScaleTable(const QuantTable& base, int quality);
const HuffSpec& AnnexKHuff(bool ac, bool chroma);

// Orthonormal 8x8 DCT-II and its inverse, natural-order 64-vectors.
// dct(idct(x)) = x to ~1e-13; the DC basis vector is the constant 1/8.
void Dct8x8(const double* in, double* out);
void Idct8x8(const double* in, double* out);

// I[k] = coeff[k] * step[k], natural order throughout.
std::vector<double> Dequantize(const CoeffPlane& plane, const QuantTable& qt);
// coeff[k] = round_half_away(I[k] / step[k]) clamped to [-1024, 1023].
CoeffPlane QuantizeRound(const std::vector<double>& blocks, int width_blocks,
                         int height_blocks, Component component,
                         const QuantTable& qt);

// Decode to interleaved RGB: per-block IDCT, +128 shift, chroma replication,
// BT.601 full-range, clamp to [0,255], crop to width x height.
std::vector<uint8_t> ReconstructRgb(const JpegImage& image);

// Forward pipeline for corpus preparation: BT.601 RGB->YCbCr, 2x2 mean
// chroma subsampling, edge-replication padding to MCU multiples, DCT and
// rounding quantization under the given tables.
JpegImage EncodeRgb(const uint8_t* rgb, int width, int height,
                    const QuantTable& luma_qt, const QuantTable& chroma_qt);

}  // namespace jrc::jpeg

#endif  // JRC_JPEG_JPEG_H_
