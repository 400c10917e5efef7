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

#include "eval/image_io.h"

#include <cstring>
#include <string>

#include <zlib.h>

#include "util/bytes.h"
#include "util/error.h"

namespace jrc::eval {

namespace {

constexpr int64_t kMaxPixels = int64_t(1) << 28;  // 256 Mpix sanity bound

void CheckDims(int64_t w, int64_t h) {
  Check(w >= 1 && h >= 1 && w * h <= kMaxPixels, ErrorKind::kFormat,
        "unreasonable image dimensions");
}

// PPM header tokens are separated by whitespace; '#' starts a comment that
// runs to the end of the line.
int64_t PpmToken(ByteReader* r) {
  for (;;) {
    r->Need(1);
    const uint8_t c = r->U8();
    if (c == '#') {
      while (r->remaining() > 0 && r->U8() != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      int64_t v = 0;
      uint8_t d = c;
      Check(std::isdigit(d), ErrorKind::kFormat, "bad PPM header token");
      for (;;) {
        v = v * 10 + (d - '0');
        Check(v <= (int64_t(1) << 40), ErrorKind::kFormat,
              "PPM header value overflow");
        if (r->remaining() == 0) break;
        d = r->U8();
        if (!std::isdigit(d)) break;
      }
      return v;
    }
  }
}

uint32_t ReadU32be(ByteReader* r) {
  const uint32_t hi = r->U16be();
  return (hi << 16) | r->U16be();
}

std::vector<uint8_t> Inflate(const std::vector<uint8_t>& in,
                             size_t expected_size) {
  std::vector<uint8_t> out(expected_size);
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  Check(inflateInit(&zs) == Z_OK, ErrorKind::kInternal, "inflate init failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = uInt(in.size());
  zs.next_out = out.data();
  zs.avail_out = uInt(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  Check(rc == Z_STREAM_END && zs.avail_out == 0, ErrorKind::kCorrupt,
        "PNG pixel data does not inflate to the expected size");
  return out;
}

uint8_t PaethPredictor(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return uint8_t(a);
  if (pb <= pc) return uint8_t(b);
  return uint8_t(c);
}

}  // namespace

RgbImage ParsePpm(const uint8_t* data, size_t size) {
  ByteReader r(data, size);
  Check(size >= 2 && data[0] == 'P' && data[1] == '6', ErrorKind::kFormat,
        "not a P6 PPM");
  r.Skip(2);
  const int64_t w = PpmToken(&r);
  const int64_t h = PpmToken(&r);
  const int64_t maxval = PpmToken(&r);
  CheckDims(w, h);
  Check(maxval == 255, ErrorKind::kUnsupported, "PPM maxval must be 255");
  // PpmToken consumed exactly one byte of whitespace after the maxval.
  RgbImage img;
  img.width = int(w);
  img.height = int(h);
  img.rgb.resize(size_t(w) * h * 3);
  r.Bytes(img.rgb.data(), img.rgb.size());
  return img;
}

std::vector<uint8_t> SerializePpm(const RgbImage& image) {
  CheckDims(image.width, image.height);
  Check(image.rgb.size() == size_t(image.PixelCount()) * 3,
        ErrorKind::kInvalidArgument, "pixel buffer does not match dims");
  ByteWriter w;
  w.Str("P6\n" + std::to_string(image.width) + " " +
        std::to_string(image.height) + "\n255\n");
  w.Bytes(image.rgb.data(), image.rgb.size());
  return w.Take();
}

RgbImage ParsePng(const uint8_t* data, size_t size) {
  static const uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  ByteReader r(data, size);
  uint8_t sig[8];
  r.Bytes(sig, 8);
  Check(std::memcmp(sig, kSig, 8) == 0, ErrorKind::kFormat, "not a PNG");

  int width = 0, height = 0, channels = 0;
  bool saw_ihdr = false, saw_iend = false;
  std::vector<uint8_t> idat;
  while (!saw_iend) {
    const uint32_t len = ReadU32be(&r);
    Check(len <= (uint32_t(1) << 30), ErrorKind::kFormat, "PNG chunk too long");
    r.Need(size_t(len) + 8);
    const uint8_t* chunk_start = r.cursor();
    char type[5] = {0};
    r.Bytes(type, 4);
    std::vector<uint8_t> payload(len);
    if (len > 0) r.Bytes(payload.data(), len);
    const uint32_t crc = ReadU32be(&r);
    Check(uint32_t(crc32(0, chunk_start, uInt(len + 4))) == crc,
          ErrorKind::kCorrupt, "PNG chunk checksum mismatch");

    if (std::strcmp(type, "IHDR") == 0) {
      Check(!saw_ihdr && len == 13, ErrorKind::kFormat, "bad IHDR");
      saw_ihdr = true;
      ByteReader hr(payload);
      const uint32_t w = ReadU32be(&hr);
      const uint32_t h = ReadU32be(&hr);
      const uint8_t bit_depth = hr.U8();
      const uint8_t color_type = hr.U8();
      const uint8_t compression = hr.U8();
      const uint8_t filter = hr.U8();
      const uint8_t interlace = hr.U8();
      CheckDims(w, h);
      Check(bit_depth == 8 && (color_type == 2 || color_type == 6),
            ErrorKind::kUnsupported,
            "only 8-bit truecolor PNG (with or without alpha) supported");
      Check(compression == 0 && filter == 0, ErrorKind::kFormat,
            "bad PNG compression/filter method");
      Check(interlace == 0, ErrorKind::kUnsupported,
            "interlaced PNG not supported");
      width = int(w);
      height = int(h);
      channels = color_type == 2 ? 3 : 4;
    } else if (std::strcmp(type, "IDAT") == 0) {
      Check(saw_ihdr, ErrorKind::kFormat, "IDAT before IHDR");
      idat.insert(idat.end(), payload.begin(), payload.end());
    } else if (std::strcmp(type, "IEND") == 0) {
      saw_iend = true;
    }
    // Ancillary chunks (and PLTE, which cannot apply to truecolor data
    // under this subset) are skipped.
  }
  Check(saw_ihdr && !idat.empty(), ErrorKind::kFormat, "PNG missing image data");

  const size_t stride = size_t(width) * channels;
  const std::vector<uint8_t> raw = Inflate(idat, (stride + 1) * height);

  RgbImage img;
  img.width = width;
  img.height = height;
  img.rgb.resize(size_t(width) * height * 3);
  std::vector<uint8_t> prev(stride, 0), cur(stride);
  for (int y = 0; y < height; ++y) {
    const uint8_t* row = raw.data() + size_t(y) * (stride + 1);
    const uint8_t filter = row[0];
    Check(filter <= 4, ErrorKind::kCorrupt, "bad PNG row filter");
    for (size_t i = 0; i < stride; ++i) {
      const int x = row[1 + i];
      const int a = i >= size_t(channels) ? cur[i - channels] : 0;
      const int b = prev[i];
      const int c = i >= size_t(channels) ? prev[i - channels] : 0;
      int v = x;
      switch (filter) {
        case 1: v = x + a; break;
        case 2: v = x + b; break;
        case 3: v = x + (a + b) / 2; break;
        case 4: v = x + PaethPredictor(a, b, c); break;
        default: break;
      }
      cur[i] = uint8_t(v);
    }
    for (int px = 0; px < width; ++px)
      for (int ch = 0; ch < 3; ++ch)
        img.rgb[(size_t(y) * width + px) * 3 + ch] =
            cur[size_t(px) * channels + ch];
    std::swap(prev, cur);
  }
  return img;
}

RgbImage ParseImage(const uint8_t* data, size_t size) {
  Check(size >= 2, ErrorKind::kFormat, "image file too short");
  if (data[0] == 'P' && data[1] == '6') return ParsePpm(data, size);
  if (data[0] == 0x89 && data[1] == 'P') return ParsePng(data, size);
  Check(false, ErrorKind::kUnsupported, "unrecognized image format");
  return {};
}

RgbImage ReadImageFile(const std::string& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  return ParseImage(bytes.data(), bytes.size());
}

}  // namespace jrc::eval
