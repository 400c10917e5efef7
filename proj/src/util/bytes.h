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

#ifndef JRC_UTIL_BYTES_H_
#define JRC_UTIL_BYTES_H_

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "util/error.h"

namespace jrc {

class ByteWriter {
 public:
  void U8(uint8_t v) { buf_.push_back(v); }
  void U16le(uint16_t v) {
    buf_.push_back(uint8_t(v & 0xff));
    buf_.push_back(uint8_t(v >> 8));
  }
  void U32le(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(uint8_t((v >> (8 * i)) & 0xff));
  }
  void U64le(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(uint8_t((v >> (8 * i)) & 0xff));
  }
  void U16be(uint16_t v) {
    buf_.push_back(uint8_t(v >> 8));
    buf_.push_back(uint8_t(v & 0xff));
  }
  void F64le(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    U64le(bits);
  }
  void Bytes(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void Str(const std::string& s) { Bytes(s.data(), s.size()); }

  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> Take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

 private:
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
  explicit ByteReader(const std::vector<uint8_t>& v)
      : data_(v.data()), size_(v.size()) {}

  size_t pos() const { return pos_; }
  size_t remaining() const { return size_ - pos_; }
  const uint8_t* cursor() const { return data_ + pos_; }

  void Need(size_t n) const {
    Check(remaining() >= n, ErrorKind::kCorrupt, "truncated input");
  }
  void Skip(size_t n) {
    Need(n);
    pos_ += n;
  }
  uint8_t U8() {
    Need(1);
    return data_[pos_++];
  }
  uint16_t U16le() {
    Need(2);
    uint16_t v = uint16_t(data_[pos_]) | uint16_t(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }
  uint32_t U32le() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t U64le() {
    Need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  uint16_t U16be() {
    Need(2);
    uint16_t v = uint16_t(data_[pos_]) << 8 | uint16_t(data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  double F64le() {
    uint64_t bits = U64le();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void Bytes(void* out, size_t n) {
    Need(n);
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  std::string Str(size_t n) {
    Need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

std::vector<uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, const uint8_t* data, size_t size);

}  // namespace jrc

#endif  // JRC_UTIL_BYTES_H_
