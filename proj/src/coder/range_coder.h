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

#ifndef JRC_CODER_RANGE_CODER_H_
#define JRC_CODER_RANGE_CODER_H_

#include <cstdint>
#include <vector>

#include "util/error.h"

namespace jrc::coder {

// Quantized CDF over a contiguous integer support plus one trailing escape
// slot. cum has one entry per slot boundary: cum[0] = 0, cum.back() = 65536,
// strictly increasing, so every slot carries at least 1/65536 mass.
struct CdfTable {
  int v_min = 0;  // value of the first regular slot
  std::vector<uint32_t> cum;

  int SlotCount() const { return int(cum.size()) - 1; }  // includes escape
  int EscapeSlot() const { return SlotCount() - 1; }
  int ValueCount() const { return SlotCount() - 1; }
  int v_max() const { return v_min + ValueCount() - 1; }
  bool Contains(int64_t v) const { return v >= v_min && v <= v_max(); }
};

// Largest-remainder quantization of (possibly unnormalized) weights to a
// 65536 total. weights[i] belongs to value v_min+i; one escape slot is
// appended with weight escape_weight. Every slot ends up >= 1.
CdfTable QuantizeCdf(const std::vector<double>& weights, int v_min,
                     double escape_weight);

// 32-bit carry-propagating range coder, 16-bit probability resolution.
// Integer state only, so streams are identical across platforms. The top
// slot absorbs the truncation remainder of each renormalization step.
class RangeEncoder {
 public:
  void EncodeSlot(const CdfTable& table, int slot);
  // Encodes v through the table, escaping to a raw 32-bit value when v is
  // outside the support.
  void EncodeValue(const CdfTable& table, int64_t v);
  void EncodeRaw16(uint16_t v);  // exactly 16 bits
  void EncodeRaw32(uint32_t v);

  // Flushes the state. The object is spent afterwards.
  std::vector<uint8_t> Finish();

 private:
  void EncodeInterval(uint32_t cum_lo, uint32_t cum_hi, bool is_top);
  void ShiftLow();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* data, size_t size);

  int DecodeSlot(const CdfTable& table);
  int64_t DecodeValue(const CdfTable& table);
  uint16_t DecodeRaw16();
  uint32_t DecodeRaw32();

 private:
  uint8_t NextByte();
  void Apply(uint32_t cum_lo, uint32_t cum_hi, bool is_top);

  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
  uint64_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
};

}  // namespace jrc::coder

#endif  // JRC_CODER_RANGE_CODER_H_
