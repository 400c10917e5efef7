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

#include "jpeg/huffman.h"

namespace jrc::jpeg {
namespace {

struct CodeList {
  std::vector<uint8_t> sizes;
  std::vector<uint16_t> codes;
};

// T.81 C.2: canonical code assignment from the BITS counts.
CodeList AssignCodes(const HuffSpec& spec) {
  CodeList cl;
  for (int len = 1; len <= 16; ++len) {
    for (int i = 0; i < spec.bits[len - 1]; ++i) cl.sizes.push_back(uint8_t(len));
  }
  Check(cl.sizes.size() == spec.vals.size(), ErrorKind::kCorrupt,
        "huffman: BITS total does not match value count");
  Check(!cl.sizes.empty(), ErrorKind::kCorrupt, "huffman: empty table");
  cl.codes.resize(cl.sizes.size());
  uint32_t code = 0;
  int si = cl.sizes[0];
  for (size_t k = 0; k < cl.sizes.size();) {
    while (k < cl.sizes.size() && cl.sizes[k] == si) {
      Check(code < (1u << si), ErrorKind::kCorrupt, "huffman: code overflow");
      cl.codes[k++] = uint16_t(code++);
    }
    code <<= 1;
    ++si;
  }
  return cl;
}

}  // namespace

void HuffDecoder::Build(const HuffSpec& spec) {
  const CodeList cl = AssignCodes(spec);
  vals = spec.vals;
  size_t k = 0;
  for (int len = 1; len <= 16; ++len) {
    if (spec.bits[len - 1] == 0) {
      maxcode[len] = -1;
      mincode[len] = 0;
      valptr[len] = 0;
      continue;
    }
    valptr[len] = int32_t(k);
    mincode[len] = cl.codes[k];
    k += spec.bits[len - 1];
    maxcode[len] = cl.codes[k - 1];
  }
}

void HuffEncoder::Build(const HuffSpec& spec) {
  const CodeList cl = AssignCodes(spec);
  code.fill(0);
  size.fill(0);
  for (size_t k = 0; k < spec.vals.size(); ++k) {
    Check(size[spec.vals[k]] == 0, ErrorKind::kCorrupt,
          "huffman: duplicate symbol");
    code[spec.vals[k]] = cl.codes[k];
    size[spec.vals[k]] = cl.sizes[k];
  }
}

uint8_t ScanBitReader::NextByte() {
  Check(pos_ < size_, ErrorKind::kCorrupt, "scan data: truncated");
  uint8_t b = data_[pos_++];
  if (b == 0xFF) {
    Check(pos_ < size_, ErrorKind::kCorrupt, "scan data: truncated after 0xFF");
    const uint8_t next = data_[pos_];
    if (next == 0x00) {
      ++pos_;  // stuffed literal 0xFF
    } else {
      // A real marker inside entropy data: the scan ended early.
      Fail(ErrorKind::kCorrupt, "scan data: unexpected marker");
    }
  }
  return b;
}

int ScanBitReader::ReadBit() {
  if (bitcount_ == 0) {
    bitbuf_ = NextByte();
    bitcount_ = 8;
  }
  --bitcount_;
  return int((bitbuf_ >> bitcount_) & 1u);
}

int ScanBitReader::ReadBits(int n) {
  int v = 0;
  for (int i = 0; i < n; ++i) v = (v << 1) | ReadBit();
  return v;
}

int ScanBitReader::DecodeSymbol(const HuffDecoder& d) {
  int code = ReadBit();
  int len = 1;
  while (code > d.maxcode[len]) {
    Check(len < 16, ErrorKind::kCorrupt, "scan data: invalid huffman code");
    code = (code << 1) | ReadBit();
    ++len;
  }
  return d.vals[size_t(d.valptr[len] + code - d.mincode[len])];
}

void ScanBitReader::SyncRestart(int index) {
  bitcount_ = 0;  // discard padding bits
  Check(pos_ + 2 <= size_, ErrorKind::kCorrupt, "scan data: missing restart");
  Check(data_[pos_] == 0xFF, ErrorKind::kCorrupt,
        "scan data: expected restart marker");
  const uint8_t m = data_[pos_ + 1];
  Check(m == uint8_t(0xD0 + (index & 7)), ErrorKind::kCorrupt,
        "scan data: restart marker out of sequence");
  pos_ += 2;
}

uint8_t ScanBitReader::AlignToMarker() {
  bitcount_ = 0;
  while (pos_ + 1 < size_) {
    if (data_[pos_] != 0xFF) {
      // Garbage between scan end and marker; tolerate nothing.
      Fail(ErrorKind::kCorrupt, "scan data: trailing bytes before marker");
    }
    const uint8_t m = data_[pos_ + 1];
    pos_ += 2;
    if (m == 0xFF) {
      --pos_;  // fill byte, re-examine
      continue;
    }
    if (m == 0x00) {
      Fail(ErrorKind::kCorrupt, "scan data: stuffed byte after scan end");
    }
    return m;
  }
  Fail(ErrorKind::kCorrupt, "scan data: missing end-of-image marker");
}

void ScanBitWriter::WriteBits(uint32_t bits, int n) {
  for (int i = n - 1; i >= 0; --i) {
    bitbuf_ = (bitbuf_ << 1) | ((bits >> i) & 1u);
    if (++bitcount_ == 8) {
      const uint8_t b = uint8_t(bitbuf_ & 0xFF);
      out_.push_back(b);
      if (b == 0xFF) out_.push_back(0x00);
      bitbuf_ = 0;
      bitcount_ = 0;
    }
  }
}

void ScanBitWriter::Flush() {
  while (bitcount_ != 0) WriteBits(1, 1);
}

}  // namespace jrc::jpeg
