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

#include "coder/range_coder.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace jrc::coder {

namespace {
constexpr uint32_t kTotal = 1u << 16;
constexpr uint32_t kTopValue = 1u << 24;
}  // namespace

CdfTable QuantizeCdf(const std::vector<double>& weights, int v_min,
                     double escape_weight) {
  Check(!weights.empty(), ErrorKind::kInvalidArgument, "empty CDF support");
  const size_t n = weights.size() + 1;  // plus escape
  Check(n <= kTotal / 4, ErrorKind::kInvalidArgument, "CDF support too wide");

  std::vector<double> w(weights);
  w.push_back(std::max(escape_weight, 0.0));
  double total = 0.0;
  for (double x : w) {
    Check(std::isfinite(x) && x >= 0.0, ErrorKind::kInvalidArgument,
          "CDF weights must be finite and non-negative");
    total += x;
  }
  Check(total > 0.0, ErrorKind::kInvalidArgument, "CDF weights sum to zero");

  // Largest-remainder rounding with a floor of one count per slot.
  std::vector<uint32_t> counts(n);
  std::vector<double> remainder(n);
  int64_t assigned = 0;
  for (size_t i = 0; i < n; ++i) {
    const double exact = w[i] / total * double(kTotal);
    counts[i] = uint32_t(std::floor(exact));
    remainder[i] = exact - double(counts[i]);
    if (counts[i] == 0) {
      counts[i] = 1;
      remainder[i] = -1.0;  // already over-served; no bonus
    }
    assigned += counts[i];
  }
  if (assigned > int64_t(kTotal)) {
    // Rare: the one-count floors overshot. Shave the largest slots.
    while (assigned > int64_t(kTotal)) {
      size_t best = 0;
      for (size_t i = 1; i < n; ++i)
        if (counts[i] > counts[best]) best = i;
      Check(counts[best] > 1, ErrorKind::kInternal, "CDF floor infeasible");
      --counts[best];
      --assigned;
    }
  } else if (assigned < int64_t(kTotal)) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
      return a < b;
    });
    int64_t surplus = int64_t(kTotal) - assigned;
    for (size_t k = 0; surplus > 0; k = (k + 1) % n, --surplus)
      ++counts[order[k]];
  }

  CdfTable table;
  table.v_min = v_min;
  table.cum.resize(n + 1);
  table.cum[0] = 0;
  for (size_t i = 0; i < n; ++i) table.cum[i + 1] = table.cum[i] + counts[i];
  Check(table.cum.back() == kTotal, ErrorKind::kInternal,
        "CDF quantization total mismatch");
  return table;
}

void RangeEncoder::ShiftLow() {
  if (uint32_t(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const uint8_t carry = uint8_t(low_ >> 32);
    do {
      out_.push_back(uint8_t(cache_ + carry));
      cache_ = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = uint8_t(low_ >> 24);
  }
  ++cache_size_;
  // 32-bit truncating shift: the byte just captured in cache_ must drop out.
  low_ = uint64_t(uint32_t(low_) << 8);
}

void RangeEncoder::EncodeInterval(uint32_t cum_lo, uint32_t cum_hi,
                                  bool is_top) {
  const uint32_t r = range_ >> 16;
  low_ += uint64_t(r) * cum_lo;
  // The top interval absorbs the r*kTotal..range_ remainder so no code
  // space is wasted.
  range_ = is_top ? range_ - r * cum_lo : r * (cum_hi - cum_lo);
  while (range_ < kTopValue) {
    ShiftLow();
    range_ <<= 8;
  }
}

void RangeEncoder::EncodeSlot(const CdfTable& table, int slot) {
  Check(slot >= 0 && slot < table.SlotCount(), ErrorKind::kInvalidArgument,
        "slot outside CDF table");
  const uint32_t lo = table.cum[size_t(slot)];
  const uint32_t hi = table.cum[size_t(slot) + 1];
  EncodeInterval(lo, hi, hi == kTotal);
}

void RangeEncoder::EncodeValue(const CdfTable& table, int64_t v) {
  if (table.Contains(v)) {
    EncodeSlot(table, int(v - table.v_min));
  } else {
    EncodeSlot(table, table.EscapeSlot());
    EncodeRaw32(uint32_t(int32_t(v)));
  }
}

void RangeEncoder::EncodeRaw16(uint16_t v) {
  EncodeInterval(v, uint32_t(v) + 1, v == 0xFFFF);
}

void RangeEncoder::EncodeRaw32(uint32_t v) {
  EncodeRaw16(uint16_t(v >> 16));
  EncodeRaw16(uint16_t(v & 0xFFFF));
}

std::vector<uint8_t> RangeEncoder::Finish() {
  for (int i = 0; i < 5; ++i) ShiftLow();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(const uint8_t* data, size_t size)
    : data_(data), size_(size) {
  // First byte is the encoder's initial zero cache; the mask discards it.
  for (int i = 0; i < 5; ++i)
    code_ = ((code_ << 8) | NextByte()) & 0xFFFFFFFFu;
}

uint8_t RangeDecoder::NextByte() {
  Check(pos_ < size_, ErrorKind::kCorrupt, "range-coded stream truncated");
  return data_[pos_++];
}

void RangeDecoder::Apply(uint32_t cum_lo, uint32_t cum_hi, bool is_top) {
  const uint32_t r = range_ >> 16;
  code_ -= uint64_t(r) * cum_lo;
  range_ = is_top ? range_ - r * cum_lo : r * (cum_hi - cum_lo);
  while (range_ < kTopValue) {
    code_ = ((code_ << 8) | NextByte()) & 0xFFFFFFFFu;
    range_ <<= 8;
  }
}

int RangeDecoder::DecodeSlot(const CdfTable& table) {
  const uint32_t r = range_ >> 16;
  const uint32_t dv = uint32_t(std::min<uint64_t>(code_ / r, kTotal - 1));
  // Largest slot whose lower bound is <= dv. Corrupted streams still land
  // on some valid slot; integrity is the container checksum's job.
  const int slot =
      int(std::upper_bound(table.cum.begin(), table.cum.end(), dv) -
          table.cum.begin()) -
      1;
  const uint32_t hi = table.cum[size_t(slot) + 1];
  Apply(table.cum[size_t(slot)], hi, hi == kTotal);
  return slot;
}

int64_t RangeDecoder::DecodeValue(const CdfTable& table) {
  const int slot = DecodeSlot(table);
  if (slot == table.EscapeSlot()) return int32_t(DecodeRaw32());
  return int64_t(table.v_min) + slot;
}

uint16_t RangeDecoder::DecodeRaw16() {
  const uint32_t r = range_ >> 16;
  const uint32_t v = uint32_t(std::min<uint64_t>(code_ / r, kTotal - 1));
  Apply(v, v + 1, v == kTotal - 1);
  return uint16_t(v);
}

uint32_t RangeDecoder::DecodeRaw32() {
  const uint32_t hi = DecodeRaw16();
  const uint32_t lo = DecodeRaw16();
  return (hi << 16) | lo;
}

}  // namespace jrc::coder
