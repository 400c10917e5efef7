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

#ifndef JRC_JPEG_HUFFMAN_H_
#define JRC_JPEG_HUFFMAN_H_

#include <array>
#include <cstdint>
#include <vector>

#include "jpeg/jpeg.h"

namespace jrc::jpeg {

// Canonical Huffman decoder per T.81 F.2.2.3 (MINCODE/MAXCODE/VALPTR).
struct HuffDecoder {
  std::array<int32_t, 17> mincode{};
  std::array<int32_t, 17> maxcode{};  // -1 where no codes of that length
  std::array<int32_t, 17> valptr{};
  std::vector<uint8_t> vals;

  void Build(const HuffSpec& spec);
};

// Canonical code table for encoding; index by symbol value.
struct HuffEncoder {
  std::array<uint16_t, 256> code{};
  std::array<uint8_t, 256> size{};  // 0 = symbol absent

  void Build(const HuffSpec& spec);
};

// MSB-first bit reader over entropy-coded scan data. Un-stuffs 0xFF 0x00,
// stops at any other marker, and resynchronizes at restart markers.
class ScanBitReader {
 public:
  ScanBitReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

  int ReadBit();
  int ReadBits(int n);  // n <= 16
  int DecodeSymbol(const HuffDecoder& d);
  // Byte-aligns and consumes the expected RSTn marker (n = index mod 8).
  void SyncRestart(int index);
  // Byte-aligns and consumes fill bytes up to the next marker; returns the
  // marker code (the byte after 0xFF).
  uint8_t AlignToMarker();

 private:
  uint8_t NextByte();

  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
  uint32_t bitbuf_ = 0;
  int bitcount_ = 0;
};

// MSB-first bit writer with 0xFF byte stuffing and 1-bit fill on flush.
class ScanBitWriter {
 public:
  explicit ScanBitWriter(std::vector<uint8_t>& out) : out_(out) {}

  void WriteBits(uint32_t bits, int n);
  void Flush();

 private:
  std::vector<uint8_t>& out_;
  uint32_t bitbuf_ = 0;
  int bitcount_ = 0;
};

// Sign-magnitude helpers from T.81 F.2.2.1 / F.1.2.1.
inline int HuffExtend(int v, int s) {
  return v < (1 << (s - 1)) ? v - (1 << s) + 1 : v;
}
inline int MagnitudeCategory(int v) {
  int a = v < 0 ? -v : v;
  int s = 0;
  while (a) {
    a >>= 1;
    ++s;
  }
  return s;
}

}  // namespace jrc::jpeg

#endif  // JRC_JPEG_HUFFMAN_H_
