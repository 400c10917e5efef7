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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <vector>

#include <zlib.h>

#include "codec/codec.h"
#include "doctest.h"
#include "eval/corpus.h"
#include "eval/image_io.h"
#include "eval/metrics.h"
#include "eval/sweep.h"
#include "jpeg/jpeg.h"
#include "jpeg_ref.h"
#include "nn/checkpoint.h"
#include "train/trainer.h"
#include "util/bytes.h"
#include "util/error.h"

using namespace jrc;
using namespace jrc::eval;

namespace {

// ---- PNG fixture helpers ----

void ChunkU32be(ByteWriter* w, uint32_t v) {
  w->U16be(uint16_t(v >> 16));
  w->U16be(uint16_t(v & 0xFFFF));
}

void AppendChunk(ByteWriter* w, const char* type,
                 const std::vector<uint8_t>& payload) {
  ChunkU32be(w, uint32_t(payload.size()));
  std::vector<uint8_t> body(type, type + 4);
  body.insert(body.end(), payload.begin(), payload.end());
  w->Bytes(body.data(), body.size());
  ChunkU32be(w, uint32_t(crc32(0, body.data(), uInt(body.size()))));
}

// Builds a PNG applying the given per-row filter types; `pixels` is raw
// interleaved data with `channels` bytes per pixel.
std::vector<uint8_t> BuildPng(int width, int height, int channels,
                              const std::vector<uint8_t>& pixels,
                              const std::vector<int>& row_filters,
                              uint8_t interlace = 0) {
  const size_t stride = size_t(width) * channels;
  std::vector<uint8_t> raw;
  for (int y = 0; y < height; ++y) {
    const int f = row_filters[size_t(y) % row_filters.size()];
    raw.push_back(uint8_t(f));
    for (size_t i = 0; i < stride; ++i) {
      const int x = pixels[size_t(y) * stride + i];
      const int a = i >= size_t(channels)
                        ? pixels[size_t(y) * stride + i - channels]
                        : 0;
      const int b = y > 0 ? pixels[size_t(y - 1) * stride + i] : 0;
      const int c = (y > 0 && i >= size_t(channels))
                        ? pixels[size_t(y - 1) * stride + i - channels]
                        : 0;
      int pred = 0;
      switch (f) {
        case 1: pred = a; break;
        case 2: pred = b; break;
        case 3: pred = (a + b) / 2; break;
        case 4: {
          const int p = a + b - c;
          const int pa = std::abs(p - a), pb = std::abs(p - b),
                    pc = std::abs(p - c);
          pred = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
          break;
        }
        default: break;
      }
      raw.push_back(uint8_t(x - pred));
    }
  }
  std::vector<uint8_t> compressed(compressBound(uLong(raw.size())));
  uLongf clen = uLongf(compressed.size());
  REQUIRE(compress2(compressed.data(), &clen, raw.data(), uLong(raw.size()),
                    9) == Z_OK);
  compressed.resize(clen);

  ByteWriter w;
  const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  w.Bytes(sig, 8);
  ByteWriter ihdr;
  ChunkU32be(&ihdr, uint32_t(width));
  ChunkU32be(&ihdr, uint32_t(height));
  ihdr.U8(8);                                   // bit depth
  ihdr.U8(channels == 3 ? 2 : 6);               // color type
  ihdr.U8(0);                                   // compression
  ihdr.U8(0);                                   // filter method
  ihdr.U8(interlace);
  AppendChunk(&w, "IHDR", ihdr.Take());
  AppendChunk(&w, "IDAT", compressed);
  AppendChunk(&w, "IEND", {});
  return w.Take();
}

std::vector<uint8_t> PatternPixels(int width, int height, int channels) {
  std::vector<uint8_t> px(size_t(width) * height * channels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        px[(size_t(y) * width + x) * channels + size_t(c)] =
            uint8_t((11 * x + 23 * y + 41 * c + 7) % 256);
  return px;
}

// ---- MS-SSIM reference patterns (integer-exact twins of the script that
// produced the frozen multiscale-SSIM oracle values) ----

RgbImage PatA(int h, int w) {
  RgbImage img;
  img.width = w;
  img.height = h;
  img.rgb.resize(size_t(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.rgb[(size_t(y) * w + x) * 3 + size_t(c)] =
            uint8_t((3 * x + 5 * y + 7 * c) % 256);
  return img;
}

RgbImage PatAPerturbed(int h, int w) {
  RgbImage img = PatA(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.rgb[(size_t(y) * w + x) * 3 + size_t(c)] =
            uint8_t((3 * x + 5 * y + 7 * c + (x * y) % 5) % 256);
  return img;
}

RgbImage PatNoise(int h, int w) {
  RgbImage img;
  img.width = w;
  img.height = h;
  img.rgb.resize(size_t(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.rgb[(size_t(y) * w + x) * 3 + size_t(c)] =
            uint8_t((x * x + 2 * y * y + x * y + 31 * c) % 256);
  return img;
}

RgbImage Inverted(const RgbImage& a) {
  RgbImage img = a;
  for (uint8_t& v : img.rgb) v = uint8_t(255 - v);
  return img;
}

std::filesystem::path TestDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<uint8_t> TinyCheckpointBytes(uint64_t seed) {
  train::TrainConfig cfg;
  cfg.luma.n_latent = 4;
  cfg.luma.m_hyper = 2;
  cfg.chroma.c_in = 128;
  cfg.chroma.n_latent = 4;
  cfg.chroma.m_hyper = 2;
  cfg.seed = seed;
  train::Trainer trainer(cfg);
  nn::Checkpoint ck = trainer.MakeCheckpoint();
  return nn::SerializeCheckpoint(ck);
}

}  // namespace

TEST_CASE("PPM round trip preserves pixels and handles header comments") {
  RgbImage img;
  img.width = 5;
  img.height = 3;
  img.rgb = PatternPixels(5, 3, 3);
  const auto bytes = SerializePpm(img);
  CHECK(ParsePpm(bytes.data(), bytes.size()) == img);
  CHECK(ParseImage(bytes.data(), bytes.size()) == img);

  std::string header = "P6 # inline comment\n# full line\n 5\t3\n255\n";
  std::vector<uint8_t> crafted(header.begin(), header.end());
  crafted.insert(crafted.end(), img.rgb.begin(), img.rgb.end());
  CHECK(ParsePpm(crafted.data(), crafted.size()) == img);

  std::string wide = "P6\n2 2\n65535\n";
  std::vector<uint8_t> bad(wide.begin(), wide.end());
  bad.resize(bad.size() + 24, 0);
  CHECK_THROWS_AS(ParsePpm(bad.data(), bad.size()), Error);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 4);
  CHECK_THROWS_AS(ParsePpm(truncated.data(), truncated.size()), Error);
}

TEST_CASE("PNG parser decodes reference-encoder fixtures") {
  // 8x4 tiles saved by an independent encoder; pixel (x,y,c) carries
  // (11x + 23y + 41c + 7) mod 256, alpha dropped for the RGBA one.
  static const uint8_t kRgbPng[] = {
      0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0x00, 0x00, 0x00, 0x0D,
      0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x08, 0x00, 0x00, 0x00, 0x04,
      0x08, 0x02, 0x00, 0x00, 0x00, 0x3C, 0xAF, 0xE9, 0xA7, 0x00, 0x00, 0x00,
      0x15, 0x49, 0x44, 0x41, 0x54, 0x78, 0xDA, 0x63, 0x64, 0x37, 0x88, 0xE4,
      0xC6, 0x06, 0x58, 0xC4, 0xC5, 0xC5, 0xA9, 0x24, 0x01, 0x00, 0x0F, 0xDB,
      0x05, 0x09, 0x00, 0x9A, 0xDD, 0x2B, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45,
      0x4E, 0x44, 0xAE, 0x42, 0x60, 0x82};
  static const uint8_t kRgbaPng[] = {
      0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0x00, 0x00, 0x00, 0x0D,
      0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x08, 0x00, 0x00, 0x00, 0x04,
      0x08, 0x06, 0x00, 0x00, 0x00, 0xB3, 0xCD, 0x7E, 0xF0, 0x00, 0x00, 0x00,
      0x17, 0x49, 0x44, 0x41, 0x54, 0x78, 0xDA, 0x63, 0x64, 0x37, 0x88, 0x6C,
      0xE2, 0xC6, 0x03, 0x58, 0xC4, 0xC5, 0xC5, 0xC5, 0x69, 0xAB, 0x00, 0x00,
      0x06, 0x82, 0x07, 0x04, 0xB1, 0xDA, 0x47, 0x06, 0x00, 0x00, 0x00, 0x00,
      0x49, 0x45, 0x4E, 0x44, 0xAE, 0x42, 0x60, 0x82};

  const std::vector<uint8_t> expected = PatternPixels(8, 4, 3);
  RgbImage img = ParsePng(kRgbPng, sizeof(kRgbPng));
  CHECK(img.width == 8);
  CHECK(img.height == 4);
  CHECK(img.rgb == expected);
  img = ParsePng(kRgbaPng, sizeof(kRgbaPng));
  CHECK(img.width == 8);
  CHECK(img.height == 4);
  CHECK(img.rgb == expected);
}

TEST_CASE("PNG parser inverts every filter type and rejects damage") {
  const int w = 23, h = 10;
  const auto rgb = PatternPixels(w, h, 3);
  const auto rgba = PatternPixels(w, h, 4);

  // Every filter type appears at least twice across the rows.
  const std::vector<int> filters = {0, 1, 2, 3, 4};
  const auto png3 = BuildPng(w, h, 3, rgb, filters);
  RgbImage got = ParsePng(png3.data(), png3.size());
  CHECK(got.width == w);
  CHECK(got.rgb == rgb);

  const auto png4 = BuildPng(w, h, 4, rgba, filters);
  got = ParsePng(png4.data(), png4.size());
  std::vector<uint8_t> rgba_rgb(size_t(w) * h * 3);
  for (size_t p = 0; p < size_t(w) * h; ++p)
    for (int c = 0; c < 3; ++c) rgba_rgb[p * 3 + c] = rgba[p * 4 + c];
  CHECK(got.rgb == rgba_rgb);
  CHECK(ParseImage(png3.data(), png3.size()).rgb == rgb);

  SUBCASE("chunk checksum") {
    auto bad = png3;
    bad[bad.size() / 2] ^= 0x10;  // inside IDAT
    try {
      ParsePng(bad.data(), bad.size());
      FAIL("expected corruption error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kCorrupt);
    }
  }
  SUBCASE("interlaced") {
    const auto bad = BuildPng(w, h, 3, rgb, filters, /*interlace=*/1);
    try {
      ParsePng(bad.data(), bad.size());
      FAIL("expected unsupported error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUnsupported);
    }
  }
  SUBCASE("truncation") {
    auto bad = png3;
    bad.resize(bad.size() - 10);
    CHECK_THROWS_AS(ParsePng(bad.data(), bad.size()), Error);
  }
  SUBCASE("unknown format dispatch") {
    const std::vector<uint8_t> junk = {'G', 'I', 'F', '8'};
    CHECK_THROWS_AS(ParseImage(junk.data(), junk.size()), Error);
  }
}

TEST_CASE("PSNR matches closed forms and the brute-force sum") {
  RgbImage a = PatA(32, 48);
  CHECK(std::isinf(Psnr(a, a)));

  RgbImage b = a;
  for (uint8_t& v : b.rgb) v = uint8_t(std::min<int>(v, 254) + 1);
  RgbImage a_cap = a;
  for (uint8_t& v : a_cap.rgb) v = uint8_t(std::min<int>(v, 254));
  // Uniform 1/255 offset: 20*log10(255).
  CHECK(Psnr(a_cap, b) == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-12));

  const RgbImage n = PatNoise(32, 48);
  double se = 0.0;
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = (double(a.rgb[i]) - double(n.rgb[i])) / 255.0;
    se += d * d;
  }
  CHECK(Psnr(a, n) ==
        doctest::Approx(10.0 * std::log10(a.rgb.size() / se)).epsilon(1e-12));

  RgbImage small;
  small.width = 4;
  small.height = 4;
  small.rgb.assign(48, 0);
  CHECK_THROWS_AS(Psnr(a, small), Error);
}

TEST_CASE("multiscale SSIM matches the frozen reference values") {
  // Frozen from tf.image.ssim_multiscale on the identical integer
  // patterns (max_val 1, default window, weights, and k constants).
  struct Case {
    int h, w;
    double perturbed, noise;
  };
  const Case cases[] = {
      {176, 176, 0.9912943840026855, 0.0351933054625988},
      {190, 178, 0.9911978840827942, 0.033628370612859726},
  };
  for (const Case& c : cases) {
    const RgbImage a = PatA(c.h, c.w);
    CHECK(MsSsim(a, PatAPerturbed(c.h, c.w)) ==
          doctest::Approx(c.perturbed).epsilon(1e-4));
    CHECK(MsSsim(a, PatNoise(c.h, c.w)) ==
          doctest::Approx(c.noise).epsilon(1e-4));
    CHECK(MsSsim(a, a) == 1.0);
    const double inv = MsSsim(a, Inverted(a));
    CHECK(inv >= 0.0);
    CHECK(inv < 0.2);
    CHECK(MsSsim(a, PatNoise(c.h, c.w)) == MsSsim(PatNoise(c.h, c.w), a));
  }

  const RgbImage tiny = PatA(64, 176);
  CHECK_THROWS_AS(MsSsim(tiny, tiny), Error);
  CHECK_THROWS_AS(MsSsim(PatA(176, 176), PatA(176, 178)), Error);
}

TEST_CASE("corpus manifests are JSON round-trippable and validated") {
  CorpusManifest m;
  m.sources = {"a.ppm", "b.png"};
  m.crop_size = 128;
  m.quality = 80;
  m.seed = 987654321098765ull;
  m.crops_per_source = 3;
  m.out_dir = "/tmp/x";
  const CorpusManifest back = CorpusManifest::FromJson(m.ToJson());
  CHECK(back.sources == m.sources);
  CHECK(back.crop_size == m.crop_size);
  CHECK(back.quality == m.quality);
  CHECK(back.seed == m.seed);
  CHECK(back.crops_per_source == m.crops_per_source);
  CHECK(back.out_dir == m.out_dir);

  CHECK_THROWS_AS(CorpusManifest::FromJson("{}"), Error);
  CHECK_THROWS_AS(CorpusManifest::FromJson("not json"), Error);
}

TEST_CASE("corpus preparation is deterministic and QP-faithful") {
  const auto dir = TestDir("jrc_eval_corpus");
  // Two sources: a gradient and a constant-color card.
  RgbImage grad;
  grad.width = 320;
  grad.height = 300;
  grad.rgb.resize(size_t(320) * 300 * 3);
  for (int y = 0; y < 300; ++y)
    for (int x = 0; x < 320; ++x)
      for (int c = 0; c < 3; ++c)
        grad.rgb[(size_t(y) * 320 + x) * 3 + size_t(c)] =
            uint8_t((x / 2 + y / 3 + 40 * c) % 256);
  RgbImage flat;
  flat.width = 280;
  flat.height = 280;
  flat.rgb.assign(size_t(280) * 280 * 3, 77);

  const std::string grad_path = (dir / "grad.ppm").string();
  const std::string flat_path = (dir / "flat.ppm").string();
  const auto grad_bytes = SerializePpm(grad);
  const auto flat_bytes = SerializePpm(flat);
  WriteFileBytes(grad_path, grad_bytes.data(), grad_bytes.size());
  WriteFileBytes(flat_path, flat_bytes.data(), flat_bytes.size());

  CorpusManifest m;
  m.sources = {grad_path, flat_path};
  m.seed = 42;
  m.crops_per_source = 2;
  m.out_dir = (dir / "tiles").string();

  const auto tiles1 = MakeCorpusTiles(m);
  const auto tiles2 = MakeCorpusTiles(m);
  REQUIRE(tiles1.size() == 4);
  CHECK(tiles1 == tiles2);

  // Tiles decode in the reference decoder at the right size.
  int w = 0, h = 0;
  const auto rgb = testing::RefDecodeRgb(tiles1[0], &w, &h);
  CHECK(w == 256);
  CHECK(h == 256);

  // Constant-color source: every AC coefficient is zero, DC constant.
  const jpeg::JpegImage flat_tile =
      jpeg::ParseJpeg(tiles1[2].data(), tiles1[2].size());
  for (int p = 0; p < 3; ++p) {
    const jpeg::CoeffPlane& plane = flat_tile.Plane(p);
    for (int64_t b = 0; b < plane.BlockCount(); ++b)
      for (int k = 1; k < 64; ++k)
        CHECK(plane.coeffs[size_t(b) * 64 + size_t(k)] == 0);
    for (int64_t b = 1; b < plane.BlockCount(); ++b)
      CHECK(plane.coeffs[size_t(b) * 64] == plane.coeffs[0]);
  }

  // The quantization tables are the IJG-scaled standard tables.
  CHECK(flat_tile.luma_qt == jpeg::IjgScaleTable(jpeg::AnnexKLumaQuant(), 75));

  const auto paths = PrepareCorpus(m);
  REQUIRE(paths.size() == 4);
  for (size_t i = 0; i < paths.size(); ++i)
    CHECK(ReadFileBytes(paths[i]) == tiles1[i]);

  CorpusManifest too_small = m;
  too_small.sources = {grad_path};
  too_small.crop_size = 512;
  CHECK_THROWS_AS(MakeCorpusTiles(too_small), Error);
}

TEST_CASE("rate-distortion sweep emits a coherent CSV") {
  const auto ck = TinyCheckpointBytes(5);
  auto model = codec::CodecModel::Load(ck.data(), ck.size());

  const auto dir = TestDir("jrc_eval_sweep");
  RgbImage src;
  src.width = 256;
  src.height = 256;
  src.rgb.resize(size_t(256) * 256 * 3);
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x)
      for (int c = 0; c < 3; ++c)
        src.rgb[(size_t(y) * 256 + x) * 3 + size_t(c)] =
            uint8_t((x + 2 * y + 30 * c + (x * y) % 7) % 256);
  const std::string src_path = (dir / "src.ppm").string();
  const auto src_bytes = SerializePpm(src);
  WriteFileBytes(src_path, src_bytes.data(), src_bytes.size());

  CorpusManifest m;
  m.sources = {src_path};
  m.seed = 9;
  m.crops_per_source = 2;
  m.crop_size = 256;
  const auto tiles = MakeCorpusTiles(m);

  std::vector<SweepEntry> entries;
  entries.push_back({{1.0, 100.0}, model.get()});
  const auto rows = RdSweep(*model, entries, tiles);
  REQUIRE(rows.size() == 2);

  const RdRow& lossless = rows[0];
  CHECK(lossless.lambda_r == 0.0);
  CHECK(lossless.lambda_d == 0.0);
  CHECK(std::isinf(lossless.psnr_db));
  CHECK(lossless.ms_ssim == 1.0);
  CHECK(lossless.bpp == lossless.lossless_bpp);
  CHECK(lossless.jpeg_bpp > 0.0);

  const RdRow& lossy = rows[1];
  CHECK(lossy.lambda_r == 1.0);
  CHECK(lossy.lambda_d == 100.0);
  CHECK(lossy.bpp > 0.0);
  CHECK(std::isfinite(lossy.psnr_db));
  CHECK(lossy.psnr_db > 10.0);
  CHECK(lossy.ms_ssim > 0.0);
  CHECK(lossy.ms_ssim <= 1.0);
  CHECK(lossy.lossless_bpp == lossless.lossless_bpp);

  const std::string csv = WriteRdCsv(rows);
  const auto parsed = ParseRdCsv(csv);
  REQUIRE(parsed.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(parsed[i].lambda_r == rows[i].lambda_r);
    CHECK(parsed[i].lambda_d == rows[i].lambda_d);
    CHECK(parsed[i].bpp == rows[i].bpp);
    CHECK(parsed[i].psnr_db == rows[i].psnr_db);
    CHECK(parsed[i].ms_ssim == rows[i].ms_ssim);
    CHECK(parsed[i].lossless_bpp == rows[i].lossless_bpp);
    CHECK(parsed[i].jpeg_bpp == rows[i].jpeg_bpp);
  }

  const std::string header =
      "lambda_r,lambda_d,bpp,psnr_db,ms_ssim,lossless_bpp,jpeg_bpp";
  CHECK(csv.find(header) != std::string::npos);
  CHECK_THROWS_AS(ParseRdCsv("lambda,wrong,header\n"), Error);
  CHECK_THROWS_AS(ParseRdCsv(header + "\n1,2,3\n"), Error);
  CHECK_THROWS_AS(ParseRdCsv(header + "\n1,2,3,4,x,6,7\n"), Error);
}
