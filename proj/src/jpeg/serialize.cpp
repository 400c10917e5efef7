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
#include "jpeg/jpeg.h"
#include "util/bytes.h"

namespace jrc::jpeg {
namespace {

void EmitMarker(ByteWriter& w, uint8_t m) {
  w.U8(0xFF);
  w.U8(m);
}

void EmitDqt(ByteWriter& w, const QuantTable& qt, int slot) {
  EmitMarker(w, 0xDB);
  w.U16be(2 + 1 + 64);
  w.U8(uint8_t(slot));  // 8-bit precision, table slot
  for (int i = 0; i < 64; ++i) {
    Check(qt.steps[i] >= 1 && qt.steps[i] <= 255, ErrorKind::kInvalidArgument,
          "quantization step outside [1, 255]");
    w.U8(uint8_t(qt.steps[i]));
  }
}

void EmitDht(ByteWriter& w, const HuffSpec& spec, bool ac, int slot) {
  EmitMarker(w, 0xC4);
  w.U16be(uint16_t(2 + 1 + 16 + spec.vals.size()));
  w.U8(uint8_t((ac ? 0x10 : 0x00) | slot));
  for (int i = 0; i < 16; ++i) w.U8(spec.bits[i]);
  for (uint8_t v : spec.vals) w.U8(v);
}

void EncodeBlock(ScanBitWriter& bw, const HuffEncoder& dc,
                 const HuffEncoder& ac, int& pred, const int16_t* block) {
  const int dc_val = block[0];
  Check(dc_val >= kCoeffMin && dc_val <= kCoeffMax, ErrorKind::kInvalidArgument,
        "DC coefficient out of range");
  const int diff = dc_val - pred;
  pred = dc_val;
  const int s_dc = MagnitudeCategory(diff);
  Check(dc.size[s_dc] != 0, ErrorKind::kInternal, "missing DC huffman code");
  bw.WriteBits(dc.code[s_dc], dc.size[s_dc]);
  if (s_dc > 0) {
    const int bits = diff >= 0 ? diff : diff + (1 << s_dc) - 1;
    bw.WriteBits(uint32_t(bits), s_dc);
  }
  int run = 0;
  for (int k = 1; k < 64; ++k) {
    const int v = block[kZigzagToNatural[k]];
    Check(v >= kCoeffMin && v <= kCoeffMax, ErrorKind::kInvalidArgument,
          "AC coefficient out of range");
    if (v == 0) {
      ++run;
      continue;
    }
    while (run > 15) {
      bw.WriteBits(ac.code[0xF0], ac.size[0xF0]);  // ZRL
      run -= 16;
    }
    const int s = MagnitudeCategory(v);
    const int rs = (run << 4) | s;
    Check(ac.size[rs] != 0, ErrorKind::kInternal, "missing AC huffman code");
    bw.WriteBits(ac.code[rs], ac.size[rs]);
    const int bits = v >= 0 ? v : v + (1 << s) - 1;
    bw.WriteBits(uint32_t(bits), s);
    run = 0;
  }
  if (run > 0) bw.WriteBits(ac.code[0x00], ac.size[0x00]);  // EOB
}

}  // namespace

std::vector<uint8_t> SerializeJpeg(const JpegImage& image) {
  Check(image.width >= 1 && image.height >= 1, ErrorKind::kInvalidArgument,
        "cannot serialize an empty image");
  Check(image.width <= 0xFFFF && image.height <= 0xFFFF,
        ErrorKind::kInvalidArgument, "image dimensions exceed JPEG limits");
  const int mcu_cols = (image.width + 15) / 16;
  const int mcu_rows = (image.height + 15) / 16;
  Check(image.luma.width_blocks == 2 * mcu_cols &&
            image.luma.height_blocks == 2 * mcu_rows &&
            image.cb.width_blocks == mcu_cols &&
            image.cb.height_blocks == mcu_rows &&
            image.cr.width_blocks == mcu_cols &&
            image.cr.height_blocks == mcu_rows,
        ErrorKind::kInvalidArgument, "plane grids do not match dimensions");
  for (int c = 0; c < 3; ++c) {
    const CoeffPlane& p = image.Plane(c);
    Check(int64_t(p.coeffs.size()) == p.BlockCount() * 64,
          ErrorKind::kInvalidArgument, "plane buffer size mismatch");
  }

  ByteWriter w;
  EmitMarker(w, 0xD8);  // SOI
  EmitMarker(w, 0xE0);  // APP0 / JFIF 1.02, no thumbnail
  w.U16be(16);
  w.Str("JFIF");
  w.U8(0);
  w.U8(1);
  w.U8(2);
  w.U8(0);  // aspect-ratio units
  w.U16be(1);
  w.U16be(1);
  w.U8(0);
  w.U8(0);

  EmitDqt(w, image.luma_qt, 0);
  EmitDqt(w, image.chroma_qt, 1);

  EmitMarker(w, 0xC0);  // SOF0
  w.U16be(2 + 6 + 3 * 3);
  w.U8(8);
  w.U16be(uint16_t(image.height));
  w.U16be(uint16_t(image.width));
  w.U8(3);
  w.U8(1);
  w.U8(0x22);
  w.U8(0);  // Y: 2x2 sampling, table 0
  w.U8(2);
  w.U8(0x11);
  w.U8(1);  // Cb
  w.U8(3);
  w.U8(0x11);
  w.U8(1);  // Cr

  // Fresh standard tables; the parsed file's tables are not reused.
  const HuffSpec& dcl = AnnexKHuff(false, false);
  const HuffSpec& dcc = AnnexKHuff(false, true);
  const HuffSpec& acl = AnnexKHuff(true, false);
  const HuffSpec& acc = AnnexKHuff(true, true);
  EmitDht(w, dcl, false, 0);
  EmitDht(w, acl, true, 0);
  EmitDht(w, dcc, false, 1);
  EmitDht(w, acc, true, 1);

  EmitMarker(w, 0xDA);  // SOS
  w.U16be(2 + 1 + 3 * 2 + 3);
  w.U8(3);
  w.U8(1);
  w.U8(0x00);
  w.U8(2);
  w.U8(0x11);
  w.U8(3);
  w.U8(0x11);
  w.U8(0);
  w.U8(63);
  w.U8(0);

  HuffEncoder enc_dc[2], enc_ac[2];
  enc_dc[0].Build(dcl);
  enc_dc[1].Build(dcc);
  enc_ac[0].Build(acl);
  enc_ac[1].Build(acc);

  std::vector<uint8_t> scan;
  {
    ScanBitWriter bw(scan);
    int pred[3] = {0, 0, 0};
    for (int my = 0; my < mcu_rows; ++my) {
      for (int mx = 0; mx < mcu_cols; ++mx) {
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            EncodeBlock(bw, enc_dc[0], enc_ac[0], pred[0],
                        image.luma.Block(2 * my + dy, 2 * mx + dx));
          }
        }
        EncodeBlock(bw, enc_dc[1], enc_ac[1], pred[1], image.cb.Block(my, mx));
        EncodeBlock(bw, enc_dc[1], enc_ac[1], pred[2], image.cr.Block(my, mx));
      }
    }
    bw.Flush();
  }
  w.Bytes(scan.data(), scan.size());
  EmitMarker(w, 0xD9);  // EOI
  return w.Take();
}

}  // namespace jrc::jpeg
