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
#include <numeric>
#include <vector>

#include "codec/codec.h"
#include "doctest.h"
#include "jpeg/jpeg.h"
#include "nn/checkpoint.h"
#include "train/trainer.h"
#include "util/bytes.h"
#include "util/error.h"
#include "util/rng.h"

using namespace jrc;
using namespace jrc::codec;

namespace {

// Smooth-plus-noise RGB tile encoded through the forward path at the given
// quality; returns serialized JPEG bytes.
std::vector<uint8_t> TileJpeg(int width, int height, int quality,
                              uint64_t seed) {
  const jpeg::QuantTable ql =
      jpeg::IjgScaleTable(jpeg::AnnexKLumaQuant(), quality);
  const jpeg::QuantTable qc =
      jpeg::IjgScaleTable(jpeg::AnnexKChromaQuant(), quality);
  Rng rng(seed, 0);
  std::vector<uint8_t> rgb(size_t(width) * height * 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double base = 100.0 + 60.0 * std::sin(0.09 * x) +
                          45.0 * std::cos(0.05 * y + 0.02 * x);
      for (int c = 0; c < 3; ++c) {
        const double v = base + 15.0 * c + 20.0 * rng.NextCenteredUniform();
        rgb[(size_t(y) * width + x) * 3 + c] =
            uint8_t(std::clamp(int(std::lround(v)), 0, 255));
      }
    }
  }
  return jpeg::SerializeJpeg(jpeg::EncodeRgb(rgb.data(), width, height, ql, qc));
}

// A fresh (untrained) checkpoint is a perfectly valid model for transport
// tests; training only changes the numbers, not the plumbing.
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

// Sum of the six segment payload lengths, skipping the fixed header.
int64_t PayloadBits(const std::vector<uint8_t>& container) {
  ByteReader r(container.data(), container.size());
  r.Skip(4 + 1 + 1 + 4 + 4 + 3 * 4 + 2 * 64 * 2 + 32);
  int64_t bits = 0;
  for (int s = 0; s < 6; ++s) {
    const uint32_t len = r.U32le();
    r.Skip(4 + len);
    bits += int64_t(len) * 8;
  }
  REQUIRE(r.remaining() == 0);
  return bits;
}

}  // namespace

TEST_CASE("padding rounds block grids up to multiples of 64") {
  const PaddedGrid a = PadAndMask(32, 32);
  CHECK(a.hp == 64);
  CHECK(a.wp == 64);
  CHECK(a.TrueCount() == 1024);
  CHECK(std::accumulate(a.mask.begin(), a.mask.end(), 0) == 1024);
  CHECK(a.mask[0] == 1);
  CHECK(a.mask[31 * 64 + 31] == 1);
  CHECK(a.mask[31 * 64 + 32] == 0);
  CHECK(a.mask[32 * 64 + 0] == 0);

  const PaddedGrid b = PadAndMask(64, 64);
  CHECK(b.hp == 64);
  CHECK(b.wp == 64);
  CHECK(std::accumulate(b.mask.begin(), b.mask.end(), 0) == 64 * 64);

  const PaddedGrid c = PadAndMask(1, 1);
  CHECK(c.hp == 64);
  CHECK(c.wp == 64);
  CHECK(c.TrueCount() == 1);
  CHECK(std::accumulate(c.mask.begin(), c.mask.end(), 0) == 1);

  const PaddedGrid d = PadAndMask(65, 100);
  CHECK(d.hp == 128);
  CHECK(d.wp == 128);

  CHECK_THROWS_AS(PadAndMask(0, 5), Error);
}

TEST_CASE("codec model loads from checkpoint bytes and is deterministic") {
  const auto bytes = TinyCheckpointBytes(7);
  auto m1 = CodecModel::Load(bytes.data(), bytes.size());
  auto m2 = CodecModel::Load(bytes.data(), bytes.size());
  CHECK(m1->Hash() == m2->Hash());
  CHECK(m1->QtLumaSteps() == m2->QtLumaSteps());
  CHECK(m1->QtiLuma() == m2->QtiLuma());
  // Untrained tables sit at the quality-75 init.
  CHECK(m1->QtiLuma() == jpeg::IjgScaleTable(jpeg::AnnexKLumaQuant(), 75));
  CHECK(m1->QtiChroma() == jpeg::IjgScaleTable(jpeg::AnnexKChromaQuant(), 75));

  const auto other = TinyCheckpointBytes(8);
  auto m3 = CodecModel::Load(other.data(), other.size());
  CHECK(m1->Hash() != m3->Hash());
}

TEST_CASE("lossless round trip restores every plane and table exactly") {
  const auto ck = TinyCheckpointBytes(7);
  auto model = CodecModel::Load(ck.data(), ck.size());
  for (const auto dims : {std::pair<int, int>{48, 32},
                          std::pair<int, int>{16, 16},
                          std::pair<int, int>{33, 17}}) {
    const auto jpeg_bytes = TileJpeg(dims.first, dims.second, 75, 3);
    const jpeg::JpegImage in =
        jpeg::ParseJpeg(jpeg_bytes.data(), jpeg_bytes.size());

    const CompressResult cr = Compress(jpeg_bytes.data(), jpeg_bytes.size(),
                                       *model, CodecMode::kLossless);
    const auto out_bytes =
        Decompress(cr.container.data(), cr.container.size(), *model);
    const jpeg::JpegImage out =
        jpeg::ParseJpeg(out_bytes.data(), out_bytes.size());

    CHECK(out.width == in.width);
    CHECK(out.height == in.height);
    CHECK(out.luma == in.luma);
    CHECK(out.cb == in.cb);
    CHECK(out.cr == in.cr);
    CHECK(out.luma_qt == in.luma_qt);
    CHECK(out.chroma_qt == in.chroma_qt);
    CHECK(jpeg::ReconstructRgb(out) == jpeg::ReconstructRgb(in));
  }
}

TEST_CASE("compression and decompression are deterministic") {
  const auto ck = TinyCheckpointBytes(7);
  auto model = CodecModel::Load(ck.data(), ck.size());
  const auto jpeg_bytes = TileJpeg(48, 32, 75, 5);
  const CompressResult a = Compress(jpeg_bytes.data(), jpeg_bytes.size(),
                                    *model, CodecMode::kLossy);
  const CompressResult b = Compress(jpeg_bytes.data(), jpeg_bytes.size(),
                                    *model, CodecMode::kLossy);
  CHECK(a.container == b.container);
  CHECK(a.report.total_bits == b.report.total_bits);
  CHECK(Decompress(a.container.data(), a.container.size(), *model) ==
        Decompress(b.container.data(), b.container.size(), *model));
}

TEST_CASE("container header carries dims, grids, tables, and mode") {
  const auto ck = TinyCheckpointBytes(7);
  auto model = CodecModel::Load(ck.data(), ck.size());
  const auto jpeg_bytes = TileJpeg(33, 17, 75, 9);
  const jpeg::JpegImage in =
      jpeg::ParseJpeg(jpeg_bytes.data(), jpeg_bytes.size());
  const CompressResult cr = Compress(jpeg_bytes.data(), jpeg_bytes.size(),
                                     *model, CodecMode::kLossless);

  ByteReader r(cr.container.data(), cr.container.size());
  char magic[4];
  r.Bytes(magic, 4);
  CHECK(magic[0] == 'J');
  CHECK(magic[3] == '1');
  CHECK(r.U8() == 1);  // version
  CHECK(r.U8() == 0);  // lossless
  CHECK(int(r.U32le()) == 33);
  CHECK(int(r.U32le()) == 17);
  CHECK(int(r.U16le()) == in.luma.height_blocks);
  CHECK(int(r.U16le()) == in.luma.width_blocks);
  CHECK(int(r.U16le()) == in.cb.height_blocks);
  CHECK(int(r.U16le()) == in.cb.width_blocks);
  CHECK(int(r.U16le()) == in.cr.height_blocks);
  CHECK(int(r.U16le()) == in.cr.width_blocks);
  for (int z = 0; z < 64; ++z)
    CHECK(r.U16le() == in.luma_qt.steps[size_t(z)]);
  for (int z = 0; z < 64; ++z)
    CHECK(r.U16le() == in.chroma_qt.steps[size_t(z)]);
  Sha256Digest h;
  r.Bytes(h.data(), h.size());
  CHECK(h == model->Hash());
}

TEST_CASE("reported rate tracks actual payload size both ways") {
  const auto ck = TinyCheckpointBytes(7);
  auto model = CodecModel::Load(ck.data(), ck.size());
  const double slack_bits = 64.0 * 8.0;
  for (uint64_t seed : {11ull, 12ull, 13ull}) {
    const auto jpeg_bytes = TileJpeg(64, 64, 75, seed);
    for (CodecMode mode : {CodecMode::kLossless, CodecMode::kLossy}) {
      const CompressResult cr =
          Compress(jpeg_bytes.data(), jpeg_bytes.size(), *model, mode);
      const double actual = double(PayloadBits(cr.container));
      const double reported = cr.report.total_bits;
      CHECK(actual <= 1.05 * reported + slack_bits);
      CHECK(reported <= 1.05 * actual + slack_bits);
      CHECK(cr.report.bpp ==
            doctest::Approx(reported / (64.0 * 64.0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("lossy output is a decodable baseline JPEG with the learned tables") {
  const auto ck = TinyCheckpointBytes(7);
  auto model = CodecModel::Load(ck.data(), ck.size());
  const auto jpeg_bytes = TileJpeg(48, 32, 90, 21);
  const CompressResult cr = Compress(jpeg_bytes.data(), jpeg_bytes.size(),
                                     *model, CodecMode::kLossy);
  const auto out_bytes =
      Decompress(cr.container.data(), cr.container.size(), *model);
  const jpeg::JpegImage out =
      jpeg::ParseJpeg(out_bytes.data(), out_bytes.size());
  CHECK(out.width == 48);
  CHECK(out.height == 32);
  CHECK(out.luma_qt == model->QtiLuma());
  CHECK(out.chroma_qt == model->QtiChroma());
  const auto rgb = jpeg::ReconstructRgb(out);
  CHECK(rgb.size() == size_t(48) * 32 * 3);
  // Requantization under the quality-75 init from a quality-90 source loses
  // detail but must stay in the same ballpark.
  const jpeg::JpegImage in =
      jpeg::ParseJpeg(jpeg_bytes.data(), jpeg_bytes.size());
  const auto ref = jpeg::ReconstructRgb(in);
  double mse = 0.0;
  for (size_t i = 0; i < rgb.size(); ++i) {
    const double d = double(rgb[i]) - double(ref[i]);
    mse += d * d;
  }
  mse /= double(rgb.size());
  CHECK(mse < 400.0);  // > 22 dB PSNR against the source reconstruction
}

TEST_CASE("decoder rejects tampered containers") {
  const auto ck = TinyCheckpointBytes(7);
  auto model = CodecModel::Load(ck.data(), ck.size());
  const auto jpeg_bytes = TileJpeg(16, 16, 75, 31);
  const CompressResult cr = Compress(jpeg_bytes.data(), jpeg_bytes.size(),
                                     *model, CodecMode::kLossless);
  const auto& good = cr.container;
  REQUIRE_NOTHROW(Decompress(good.data(), good.size(), *model));

  SUBCASE("bad magic") {
    auto bad = good;
    bad[0] ^= 0xFF;
    CHECK_THROWS_WITH_AS(Decompress(bad.data(), bad.size(), *model),
                         "not a coded container", Error);
  }
  SUBCASE("bad version") {
    auto bad = good;
    bad[4] = 99;
    CHECK_THROWS_AS(Decompress(bad.data(), bad.size(), *model), Error);
  }
  SUBCASE("wrong model hash") {
    auto bad = good;
    bad[4 + 1 + 1 + 4 + 4 + 12 + 256] ^= 0x01;  // first hash byte
    try {
      Decompress(bad.data(), bad.size(), *model);
      FAIL("expected model mismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kModelMismatch);
    }
  }
  SUBCASE("payload corruption trips the checksum") {
    auto bad = good;
    bad[bad.size() - 1] ^= 0x40;  // inside the last payload
    try {
      Decompress(bad.data(), bad.size(), *model);
      FAIL("expected corruption error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kCorrupt);
    }
  }
  SUBCASE("truncation") {
    auto bad = good;
    bad.resize(bad.size() / 2);
    try {
      Decompress(bad.data(), bad.size(), *model);
      FAIL("expected corruption error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kCorrupt);
    }
  }
  SUBCASE("different model of the same shape") {
    const auto other = TinyCheckpointBytes(8);
    auto m2 = CodecModel::Load(other.data(), other.size());
    try {
      Decompress(good.data(), good.size(), *m2);
      FAIL("expected model mismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kModelMismatch);
    }
  }
}
