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

#include <cstring>

#include "jpeg/huffman.h"
#include "jpeg/jpeg.h"

namespace jrc::jpeg {
namespace {

struct FrameComponent {
  int id = 0;
  int h = 0, v = 0;
  int quant_slot = 0;
};

struct MarkerReader {
  const uint8_t* data;
  size_t size;
  size_t pos = 0;

  uint8_t U8() {
    Check(pos < size, ErrorKind::kCorrupt, "truncated JPEG");
    return data[pos++];
  }
  uint16_t U16() {
    const uint16_t hi = U8();
    return uint16_t(hi << 8 | U8());
  }
  void Skip(size_t n) {
    Check(pos + n <= size, ErrorKind::kCorrupt, "truncated JPEG");
    pos += n;
  }
  // Next marker code; tolerates 0xFF fill bytes.
  uint8_t Marker() {
    uint8_t b = U8();
    Check(b == 0xFF, ErrorKind::kFormat, "expected marker");
    uint8_t m = U8();
    while (m == 0xFF) m = U8();
    Check(m != 0x00, ErrorKind::kFormat, "invalid marker 0xFF00");
    return m;
  }
};

[[noreturn]] void RejectSof(uint8_t m) {
  switch (m) {
    case 0xC1:
      Fail(ErrorKind::kUnsupported, "extended sequential JPEG not supported");
    case 0xC2:
      Fail(ErrorKind::kUnsupported, "progressive JPEG not supported");
    case 0xC3:
    case 0xC7:
    case 0xCB:
    case 0xCF:
      Fail(ErrorKind::kUnsupported, "lossless JPEG not supported");
    case 0xC9:
    case 0xCA:
    case 0xCC:
      Fail(ErrorKind::kUnsupported, "arithmetic-coded JPEG not supported");
    case 0xC5:
    case 0xC6:
    case 0xCD:
    case 0xCE:
      Fail(ErrorKind::kUnsupported, "differential/hierarchical JPEG not supported");
    default:
      Fail(ErrorKind::kUnsupported, "unsupported frame type");
  }
}

int16_t* DecodeTargetBlock(CoeffPlane& plane, int by, int bx) {
  Check(by < plane.height_blocks && bx < plane.width_blocks,
        ErrorKind::kInternal, "block index out of grid");
  return plane.Block(by, bx);
}

void DecodeBlock(ScanBitReader& br, const HuffDecoder& dc,
                 const HuffDecoder& ac, int& pred, int16_t* out) {
  std::memset(out, 0, 64 * sizeof(int16_t));
  const int s_dc = br.DecodeSymbol(dc);
  Check(s_dc <= 11, ErrorKind::kCorrupt, "DC category out of range");
  if (s_dc > 0) pred += HuffExtend(br.ReadBits(s_dc), s_dc);
  Check(pred >= kCoeffMin && pred <= kCoeffMax, ErrorKind::kCorrupt,
        "DC coefficient out of range");
  out[0] = int16_t(pred);
  int k = 1;
  while (k < 64) {
    const int rs = br.DecodeSymbol(ac);
    const int r = rs >> 4, s = rs & 15;
    if (s == 0) {
      if (r == 15) {
        k += 16;  // ZRL
        continue;
      }
      Check(r == 0, ErrorKind::kCorrupt, "invalid AC run/size symbol");
      break;  // EOB
    }
    k += r;
    Check(k < 64, ErrorKind::kCorrupt, "AC run past end of block");
    Check(s <= 10, ErrorKind::kCorrupt, "AC category out of range");
    out[kZigzagToNatural[k]] = int16_t(HuffExtend(br.ReadBits(s), s));
    ++k;
  }
  Check(k <= 64, ErrorKind::kCorrupt, "AC coefficients overflow block");
}

}  // namespace

JpegImage ParseJpeg(const uint8_t* data, size_t size) {
  MarkerReader r{data, size};
  Check(r.U8() == 0xFF && r.U8() == 0xD8, ErrorKind::kFormat,
        "not a JPEG file (missing SOI)");

  QuantTable qts[4];
  bool have_qt[4] = {};
  HuffSpec dc_specs[4], ac_specs[4];
  bool have_dc[4] = {}, have_ac[4] = {};
  FrameComponent comps[3];
  bool have_sof = false;
  int width = 0, height = 0;
  int restart_interval = 0;

  for (;;) {
    const uint8_t m = r.Marker();
    if (m == 0xD9) Fail(ErrorKind::kCorrupt, "end of image before scan data");
    if (m == 0x01 || (m >= 0xD0 && m <= 0xD7)) continue;  // TEM/RST: no body

    const uint16_t len = r.U16();
    Check(len >= 2, ErrorKind::kCorrupt, "bad marker segment length");
    const size_t seg_end = r.pos + len - 2;
    Check(seg_end <= r.size, ErrorKind::kCorrupt, "truncated marker segment");

    if ((m >= 0xE0 && m <= 0xEF) || m == 0xFE) {  // APPn / COM
      r.pos = seg_end;
    } else if (m == 0xDB) {  // DQT
      while (r.pos < seg_end) {
        const uint8_t pq_tq = r.U8();
        const int pq = pq_tq >> 4, tq = pq_tq & 15;
        Check(pq == 0, ErrorKind::kUnsupported,
              "16-bit quantization tables not supported");
        Check(tq < 4, ErrorKind::kCorrupt, "bad DQT slot");
        for (int i = 0; i < 64; ++i) {
          const uint8_t v = r.U8();
          Check(v >= 1, ErrorKind::kCorrupt, "zero quantization step");
          qts[tq].steps[i] = v;
        }
        have_qt[tq] = true;
      }
      Check(r.pos == seg_end, ErrorKind::kCorrupt, "bad DQT length");
    } else if (m == 0xC4) {  // DHT
      while (r.pos < seg_end) {
        const uint8_t tc_th = r.U8();
        const int tc = tc_th >> 4, th = tc_th & 15;
        Check(tc <= 1 && th < 4, ErrorKind::kCorrupt, "bad DHT header");
        HuffSpec spec;
        int total = 0;
        for (int i = 0; i < 16; ++i) {
          spec.bits[i] = r.U8();
          total += spec.bits[i];
        }
        Check(total >= 1 && total <= 256, ErrorKind::kCorrupt,
              "bad DHT code count");
        spec.vals.resize(size_t(total));
        for (int i = 0; i < total; ++i) spec.vals[size_t(i)] = r.U8();
        if (tc == 0) {
          dc_specs[th] = std::move(spec);
          have_dc[th] = true;
        } else {
          ac_specs[th] = std::move(spec);
          have_ac[th] = true;
        }
      }
      Check(r.pos == seg_end, ErrorKind::kCorrupt, "bad DHT length");
    } else if (m == 0xDD) {  // DRI
      Check(len == 4, ErrorKind::kCorrupt, "bad DRI length");
      restart_interval = r.U16();
    } else if (m == 0xC0) {  // SOF0 baseline
      Check(!have_sof, ErrorKind::kCorrupt, "multiple frame headers");
      const int precision = r.U8();
      Check(precision == 8, ErrorKind::kUnsupported,
            "only 8-bit precision supported");
      height = r.U16();
      width = r.U16();
      Check(width >= 1 && height >= 1, ErrorKind::kCorrupt,
            "empty frame dimensions");
      const int nc = r.U8();
      Check(nc == 3, ErrorKind::kUnsupported,
            "only 3-component YCbCr supported");
      for (int c = 0; c < 3; ++c) {
        comps[c].id = r.U8();
        const uint8_t hv = r.U8();
        comps[c].h = hv >> 4;
        comps[c].v = hv & 15;
        comps[c].quant_slot = r.U8();
        Check(comps[c].quant_slot < 4, ErrorKind::kCorrupt, "bad SOF slot");
      }
      Check(comps[0].h == 2 && comps[0].v == 2 && comps[1].h == 1 &&
                comps[1].v == 1 && comps[2].h == 1 && comps[2].v == 1,
            ErrorKind::kUnsupported, "only 4:2:0 subsampling supported");
      Check(comps[1].quant_slot == comps[2].quant_slot, ErrorKind::kUnsupported,
            "distinct Cb/Cr quantization tables not supported");
      have_sof = true;
      Check(r.pos == seg_end, ErrorKind::kCorrupt, "bad SOF length");
    } else if ((m >= 0xC1 && m <= 0xCF) && m != 0xC4 && m != 0xC8) {
      RejectSof(m);
    } else if (m == 0xDA) {  // SOS
      Check(have_sof, ErrorKind::kCorrupt, "scan before frame header");
      const int ns = r.U8();
      Check(ns == 3, ErrorKind::kUnsupported,
            "only single interleaved scans supported");
      int dc_slot[3], ac_slot[3];
      for (int s = 0; s < ns; ++s) {
        const int cs = r.U8();
        int ci = -1;
        for (int c = 0; c < 3; ++c) {
          if (comps[c].id == cs) ci = c;
        }
        Check(ci == s, ErrorKind::kUnsupported,
              "scan component order must match frame order");
        const uint8_t tda = r.U8();
        dc_slot[s] = tda >> 4;
        ac_slot[s] = tda & 15;
        Check(dc_slot[s] < 4 && ac_slot[s] < 4, ErrorKind::kCorrupt,
              "bad scan table selector");
      }
      const int ss = r.U8(), se = r.U8(), ahal = r.U8();
      Check(ss == 0 && se == 63 && ahal == 0, ErrorKind::kUnsupported,
            "spectral selection/successive approximation not supported");
      Check(r.pos == seg_end, ErrorKind::kCorrupt, "bad SOS length");

      Check(have_qt[comps[0].quant_slot] && have_qt[comps[1].quant_slot],
            ErrorKind::kCorrupt, "missing quantization table");
      HuffDecoder dc_dec[3], ac_dec[3];
      for (int c = 0; c < 3; ++c) {
        Check(have_dc[dc_slot[c]] && have_ac[ac_slot[c]], ErrorKind::kCorrupt,
              "missing huffman table");
        dc_dec[c].Build(dc_specs[dc_slot[c]]);
        ac_dec[c].Build(ac_specs[ac_slot[c]]);
      }

      JpegImage img;
      img.width = width;
      img.height = height;
      img.luma_qt = qts[comps[0].quant_slot];
      img.chroma_qt = qts[comps[1].quant_slot];
      img.dc_huff[0] = dc_specs[dc_slot[0]];
      img.dc_huff[1] = dc_specs[dc_slot[1]];
      img.ac_huff[0] = ac_specs[ac_slot[0]];
      img.ac_huff[1] = ac_specs[ac_slot[1]];
      img.restart_interval = restart_interval;

      const int mcu_cols = (width + 15) / 16;
      const int mcu_rows = (height + 15) / 16;
      img.luma.component = Component::kLuma;
      img.luma.width_blocks = 2 * mcu_cols;
      img.luma.height_blocks = 2 * mcu_rows;
      img.luma.coeffs.assign(size_t(img.luma.BlockCount()) * 64, 0);
      for (int c = 1; c < 3; ++c) {
        CoeffPlane& p = img.Plane(c);
        p.component = c == 1 ? Component::kCb : Component::kCr;
        p.width_blocks = mcu_cols;
        p.height_blocks = mcu_rows;
        p.coeffs.assign(size_t(p.BlockCount()) * 64, 0);
      }

      ScanBitReader br(r.data + r.pos, r.size - r.pos);
      int pred[3] = {0, 0, 0};
      int rst_index = 0;
      const int64_t mcus = int64_t(mcu_cols) * mcu_rows;
      for (int64_t mcu = 0; mcu < mcus; ++mcu) {
        if (restart_interval > 0 && mcu > 0 && mcu % restart_interval == 0) {
          br.SyncRestart(rst_index++);
          pred[0] = pred[1] = pred[2] = 0;
        }
        const int my = int(mcu / mcu_cols), mx = int(mcu % mcu_cols);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            DecodeBlock(br, dc_dec[0], ac_dec[0], pred[0],
                        DecodeTargetBlock(img.luma, 2 * my + dy, 2 * mx + dx));
          }
        }
        DecodeBlock(br, dc_dec[1], ac_dec[1], pred[1],
                    DecodeTargetBlock(img.cb, my, mx));
        DecodeBlock(br, dc_dec[2], ac_dec[2], pred[2],
                    DecodeTargetBlock(img.cr, my, mx));
      }
      const uint8_t end = br.AlignToMarker();
      Check(end == 0xD9, ErrorKind::kCorrupt,
            end == 0xDC ? "DNL marker not supported"
                        : "expected end-of-image after scan");
      return img;
    } else {
      Fail(ErrorKind::kFormat, "unexpected marker in JPEG stream");
    }
  }
}

}  // namespace jrc::jpeg
