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

// BT.601 full range, constants to 10 significant digits.
constexpr double kCrToR = 1.402;
constexpr double kCbToG = 0.3441362862;
constexpr double kCrToG = 0.7141362862;
constexpr double kCbToB = 1.772;
constexpr double kRToY = 0.299;
constexpr double kGToY = 0.587;
constexpr double kBToY = 0.114;
constexpr double kRToCb = 0.1687358916;
constexpr double kGToCb = 0.3312641084;
constexpr double kRToCr = 0.4186875892;
constexpr double kBToCr = 0.08131241084;

uint8_t ClampByte(double v) {
  const double r = std::round(v);
  if (r <= 0.0) return 0;
  if (r >= 255.0) return 255;
  return uint8_t(r);
}

// IDCT the whole plane into spatial samples (level shift applied).
std::vector<double> PlaneToSamples(const CoeffPlane& plane,
                                   const QuantTable& qt) {
  const std::vector<double> deq = Dequantize(plane, qt);
  const int wb = plane.width_blocks, hb = plane.height_blocks;
  std::vector<double> samples(size_t(wb) * hb * 64);
  const int w = wb * 8;
  double pix[64];
  for (int by = 0; by < hb; ++by) {
    for (int bx = 0; bx < wb; ++bx) {
      Idct8x8(deq.data() + (int64_t(by) * wb + bx) * 64, pix);
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          samples[size_t(by * 8 + y) * w + bx * 8 + x] = pix[y * 8 + x] + 128.0;
        }
      }
    }
  }
  return samples;
}

}  // namespace

std::vector<uint8_t> ReconstructRgb(const JpegImage& image) {
  const std::vector<double> ys = PlaneToSamples(image.luma, image.luma_qt);
  const std::vector<double> cbs = PlaneToSamples(image.cb, image.chroma_qt);
  const std::vector<double> crs = PlaneToSamples(image.cr, image.chroma_qt);
  const int yw = image.luma.width_blocks * 8;
  const int cw = image.cb.width_blocks * 8;
  std::vector<uint8_t> rgb(size_t(image.width) * image.height * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double Y = ys[size_t(y) * yw + x];
      const double Cb = cbs[size_t(y / 2) * cw + x / 2] - 128.0;
      const double Cr = crs[size_t(y / 2) * cw + x / 2] - 128.0;
      uint8_t* px = rgb.data() + (size_t(y) * image.width + x) * 3;
      px[0] = ClampByte(Y + kCrToR * Cr);
      px[1] = ClampByte(Y - kCbToG * Cb - kCrToG * Cr);
      px[2] = ClampByte(Y + kCbToB * Cb);
    }
  }
  return rgb;
}

JpegImage EncodeRgb(const uint8_t* rgb, int width, int height,
                    const QuantTable& luma_qt, const QuantTable& chroma_qt) {
  Check(width >= 1 && height >= 1, ErrorKind::kInvalidArgument,
        "cannot encode an empty image");
  const int mcu_cols = (width + 15) / 16;
  const int mcu_rows = (height + 15) / 16;
  const int lw = 16 * mcu_cols, lh = 16 * mcu_rows;
  const int cww = 8 * mcu_cols, chh = 8 * mcu_rows;

  // Full-resolution YCbCr with edge replication out to the MCU boundary.
  std::vector<double> yf(size_t(lw) * lh), cbf(size_t(lw) * lh),
      crf(size_t(lw) * lh);
  for (int y = 0; y < lh; ++y) {
    const int sy = y < height ? y : height - 1;
    for (int x = 0; x < lw; ++x) {
      const int sx = x < width ? x : width - 1;
      const uint8_t* px = rgb + (size_t(sy) * width + sx) * 3;
      const double R = px[0], G = px[1], B = px[2];
      yf[size_t(y) * lw + x] = kRToY * R + kGToY * G + kBToY * B;
      cbf[size_t(y) * lw + x] = 128.0 - kRToCb * R - kGToCb * G + 0.5 * B;
      crf[size_t(y) * lw + x] = 128.0 + 0.5 * R - kRToCr * G - kBToCr * B;
    }
  }

  auto quantize_plane = [](const std::vector<double>& samples, int w, int h,
                           Component comp, const QuantTable& qt) {
    const int wb = w / 8, hb = h / 8;
    std::vector<double> coeffs(size_t(wb) * hb * 64);
    double block[64], freq[64];
    for (int by = 0; by < hb; ++by) {
      for (int bx = 0; bx < wb; ++bx) {
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            block[y * 8 + x] =
                samples[size_t(by * 8 + y) * w + bx * 8 + x] - 128.0;
          }
        }
        Dct8x8(block, freq);
        double* dst = coeffs.data() + (int64_t(by) * wb + bx) * 64;
        for (int k = 0; k < 64; ++k) dst[k] = freq[k];
      }
    }
    return QuantizeRound(coeffs, wb, hb, comp, qt);
  };

  // 2x2 mean chroma subsampling on the padded grid.
  std::vector<double> cb2(size_t(cww) * chh), cr2(size_t(cww) * chh);
  for (int y = 0; y < chh; ++y) {
    for (int x = 0; x < cww; ++x) {
      const size_t o = size_t(2 * y) * lw + 2 * x;
      cb2[size_t(y) * cww + x] =
          0.25 * (cbf[o] + cbf[o + 1] + cbf[o + lw] + cbf[o + lw + 1]);
      cr2[size_t(y) * cww + x] =
          0.25 * (crf[o] + crf[o + 1] + crf[o + lw] + crf[o + lw + 1]);
    }
  }

  JpegImage img;
  img.width = width;
  img.height = height;
  img.luma_qt = luma_qt;
  img.chroma_qt = chroma_qt;
  img.dc_huff[0] = AnnexKHuff(false, false);
  img.dc_huff[1] = AnnexKHuff(false, true);
  img.ac_huff[0] = AnnexKHuff(true, false);
  img.ac_huff[1] = AnnexKHuff(true, true);
  img.luma = quantize_plane(yf, lw, lh, Component::kLuma, luma_qt);
  img.cb = quantize_plane(cb2, cww, chh, Component::kCb, chroma_qt);
  img.cr = quantize_plane(cr2, cww, chh, Component::kCr, chroma_qt);
  return img;
}

}  // namespace jrc::jpeg
