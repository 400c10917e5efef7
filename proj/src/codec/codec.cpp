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

#include "codec/codec.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include <zlib.h>

#include "coder/gaussian_cdf.h"
#include "json.hpp"
#include "nn/checkpoint.h"
#include "train/trainer.h"
#include "util/bytes.h"
#include "util/error.h"

namespace jrc::codec {

namespace {

constexpr char kMagic[4] = {'J', 'R', 'C', '1'};
constexpr uint8_t kVersion = 1;
constexpr int kPadBlocks = 64;
// Gaussian table supports: latents are small, coefficients span the full
// JPEG range. Both stay well under the coder's slot-count ceiling.
constexpr int kLatentSupportCap = 4096;
constexpr int kCoeffSupportCap = 1024;

uint32_t Crc32(const std::vector<uint8_t>& payload) {
  return uint32_t(
      crc32(0, payload.empty() ? Z_NULL : payload.data(), uInt(payload.size())));
}

void AppendSegment(ByteWriter* w, const std::vector<uint8_t>& payload) {
  w->U32le(uint32_t(payload.size()));
  w->U32le(Crc32(payload));
  w->Bytes(payload.data(), payload.size());
}

std::vector<uint8_t> ReadSegment(ByteReader* r) {
  const uint32_t len = r->U32le();
  const uint32_t crc = r->U32le();
  std::vector<uint8_t> payload(len);
  if (len > 0) r->Bytes(payload.data(), len);
  Check(Crc32(payload) == crc, ErrorKind::kCorrupt,
        "segment checksum mismatch");
  return payload;
}

// One component group as the models see it: luma is the Y plane alone,
// chroma is Cb and Cr packed into one 128-channel tensor on the shared grid.
struct Group {
  model::HyperpriorModel* model = nullptr;
  std::vector<const jpeg::CoeffPlane*> planes;  // 1 (luma) or 2 (cb, cr)
  std::vector<double> in_steps;   // 64 per plane, natural order
  std::vector<double> out_steps;  // 64 per plane, natural order
  bool lossless = false;
  PaddedGrid grid;
};

std::vector<double> NaturalSteps(const jpeg::QuantTable& qt) {
  const auto nat = qt.NaturalOrder();
  std::vector<double> out(64);
  for (int k = 0; k < 64; ++k) out[k] = double(nat[k]);
  return out;
}

int64_t ClampedLevel(double value, double step, int k) {
  // AC magnitudes above 1023 have no baseline Huffman category, so the AC
  // floor is one tighter than the DC floor.
  const int lo = (k == 0) ? jpeg::kCoeffMin : jpeg::kCoeffMin + 1;
  const int64_t level = std::llround(value / step);
  return std::clamp<int64_t>(level, lo, jpeg::kCoeffMax);
}

// x = round(levels * Q_in / Q_t) over the padded grid, zeros elsewhere.
// In lossless mode Q_in == Q_t, so the stored levels pass through exactly.
nn::Tensor BuildGroupX(const Group& g) {
  const int c_total = int(g.planes.size()) * 64;
  const int hp = g.grid.hp, wp = g.grid.wp;
  std::vector<double> x(size_t(c_total) * hp * wp, 0.0);
  for (size_t p = 0; p < g.planes.size(); ++p) {
    const jpeg::CoeffPlane& plane = *g.planes[p];
    for (int by = 0; by < g.grid.hb; ++by) {
      for (int bx = 0; bx < g.grid.wb; ++bx) {
        const int16_t* block = plane.Block(by, bx);
        for (int k = 0; k < 64; ++k) {
          const size_t c = p * 64 + size_t(k);
          const size_t at = (c * hp + size_t(by)) * wp + size_t(bx);
          if (g.lossless) {
            x[at] = double(block[k]);
          } else {
            const double value = double(block[k]) * g.in_steps[p * 64 + k];
            x[at] = double(ClampedLevel(value, g.out_steps[p * 64 + k], k));
          }
        }
      }
    }
  }
  return nn::Tensor::FromVector(nn::Shape(1, c_total, hp, wp), std::move(x));
}

nn::Tensor BuildGroupMask(const Group& g) {
  const int c_total = int(g.planes.size()) * 64;
  const int hp = g.grid.hp, wp = g.grid.wp;
  std::vector<double> m(size_t(c_total) * hp * wp, 0.0);
  for (int c = 0; c < c_total; ++c)
    for (int h = 0; h < hp; ++h)
      for (int w = 0; w < wp; ++w)
        m[(size_t(c) * hp + h) * wp + w] = g.grid.mask[size_t(h) * wp + w];
  return nn::Tensor::FromVector(nn::Shape(1, c_total, hp, wp), std::move(m));
}

void ObservedRange(const std::vector<double>& v, int* lo, int* hi) {
  *lo = *hi = int(std::llround(v[0]));
  for (double d : v) {
    const int i = int(std::llround(d));
    *lo = std::min(*lo, i);
    *hi = std::max(*hi, i);
  }
}

std::vector<uint8_t> EncodeZ(model::HyperpriorModel& m,
                             const nn::Tensor& z_hat) {
  int z_lo = 0, z_hi = 0;
  ObservedRange(z_hat.data(), &z_lo, &z_hi);
  Check(z_lo >= -32000 && z_hi <= 32000, ErrorKind::kNumeric,
        "hyper latent magnitude exceeds the container range");
  auto tables = m.prior().CodingTables(z_lo - 1, z_hi + 1);
  coder::RangeEncoder enc;
  for (size_t i = 0; i < z_hat.data().size(); ++i) {
    const int c = int(i / (size_t(z_hat.dim(2)) * z_hat.dim(3)));
    enc.EncodeValue(tables[size_t(c)], std::llround(z_hat.data()[i]));
  }
  ByteWriter w;
  w.U16le(uint16_t(int16_t(z_lo)));
  w.U16le(uint16_t(int16_t(z_hi)));
  const std::vector<uint8_t> coded = enc.Finish();
  w.Bytes(coded.data(), coded.size());
  return w.Take();
}

std::vector<uint8_t> EncodeGaussian(const nn::Tensor& values,
                                    const nn::Tensor& sigma,
                                    coder::GaussianCdfCache* cache,
                                    const std::vector<uint8_t>* spatial_mask) {
  coder::RangeEncoder enc;
  const int64_t plane = int64_t(values.dim(2)) * values.dim(3);
  for (int64_t i = 0; i < values.numel(); ++i) {
    if (spatial_mask != nullptr && !(*spatial_mask)[size_t(i % plane)])
      continue;
    enc.EncodeValue(cache->ForSigma(sigma.data()[size_t(i)]),
                    std::llround(values.data()[size_t(i)]));
  }
  return enc.Finish();
}

nn::Tensor DecodeZ(model::HyperpriorModel& m, const std::vector<uint8_t>& seg,
                   int channels, int zh, int zw) {
  ByteReader r(seg);
  const int z_lo = int16_t(r.U16le());
  const int z_hi = int16_t(r.U16le());
  Check(z_lo <= z_hi, ErrorKind::kCorrupt, "bad hyper latent range");
  auto tables = m.prior().CodingTables(z_lo - 1, z_hi + 1);
  coder::RangeDecoder dec(r.cursor(), r.remaining());
  std::vector<double> z(size_t(channels) * zh * zw);
  for (size_t i = 0; i < z.size(); ++i) {
    const int c = int(i / (size_t(zh) * zw));
    z[i] = double(dec.DecodeValue(tables[size_t(c)]));
  }
  return nn::Tensor::FromVector(nn::Shape(1, channels, zh, zw), std::move(z));
}

nn::Tensor DecodeGaussian(const std::vector<uint8_t>& seg,
                          const nn::Tensor& sigma,
                          coder::GaussianCdfCache* cache, int channels, int h,
                          int w, const std::vector<uint8_t>* spatial_mask) {
  coder::RangeDecoder dec(seg.data(), seg.size());
  std::vector<double> v(size_t(channels) * h * w, 0.0);
  const int64_t plane = int64_t(h) * w;
  for (int64_t i = 0; i < int64_t(v.size()); ++i) {
    if (spatial_mask != nullptr && !(*spatial_mask)[size_t(i % plane)])
      continue;
    v[size_t(i)] = double(dec.DecodeValue(cache->ForSigma(sigma.data()[size_t(i)])));
  }
  return nn::Tensor::FromVector(nn::Shape(1, channels, h, w), std::move(v));
}

struct DecodedGroup {
  nn::Tensor x;  // (1, C, hp, wp) integer levels, zeros in padded blocks
};

// Runs the Markov chain z -> sigma_y -> y -> sigma_x -> x for one group.
DecodedGroup DecodeGroup(model::HyperpriorModel& m, const PaddedGrid& grid,
                         const std::vector<uint8_t>& seg_z,
                         const std::vector<uint8_t>& seg_y,
                         const std::vector<uint8_t>& seg_x, int c_total) {
  const int yh = grid.hp / 16, yw = grid.wp / 16;
  const int zh = grid.hp / kPadBlocks, zw = grid.wp / kPadBlocks;
  const int n_latent = m.config().n_latent;
  const int m_hyper = m.config().m_hyper;

  nn::Tensor z_hat = DecodeZ(m, seg_z, m_hyper, zh, zw);
  nn::Tensor sigma_y = m.HyperSynthesisSigma(z_hat, yh, yw);
  coder::GaussianCdfCache latent_cache(kLatentSupportCap);
  nn::Tensor y_hat = DecodeGaussian(seg_y, sigma_y, &latent_cache, n_latent,
                                    yh, yw, nullptr);
  nn::Tensor sigma_x = m.SynthesisSigma(y_hat, grid.hp, grid.wp);
  coder::GaussianCdfCache coeff_cache(kCoeffSupportCap);
  DecodedGroup out;
  out.x = DecodeGaussian(seg_x, sigma_x, &coeff_cache, c_total, grid.hp,
                         grid.wp, &grid.mask);
  return out;
}

void UnpackPlane(const nn::Tensor& x, int plane_index, const PaddedGrid& grid,
                 jpeg::Component component, jpeg::CoeffPlane* out) {
  out->component = component;
  out->height_blocks = grid.hb;
  out->width_blocks = grid.wb;
  out->coeffs.assign(size_t(grid.hb) * grid.wb * 64, 0);
  const int hp = grid.hp, wp = grid.wp;
  for (int by = 0; by < grid.hb; ++by) {
    for (int bx = 0; bx < grid.wb; ++bx) {
      int16_t* block = out->Block(by, bx);
      for (int k = 0; k < 64; ++k) {
        const size_t c = size_t(plane_index) * 64 + size_t(k);
        const double v = x.data()[(c * hp + size_t(by)) * wp + size_t(bx)];
        const int64_t level = std::llround(v);
        Check(level >= jpeg::kCoeffMin && level <= jpeg::kCoeffMax,
              ErrorKind::kCorrupt, "decoded coefficient out of range");
        block[k] = int16_t(level);
      }
    }
  }
}

}  // namespace

int64_t PaddedGrid::TrueCount() const { return int64_t(hb) * wb; }

PaddedGrid PadAndMask(int hb, int wb) {
  Check(hb >= 1 && wb >= 1, ErrorKind::kInvalidArgument,
        "block grid must be at least 1x1");
  PaddedGrid g;
  g.hb = hb;
  g.wb = wb;
  g.hp = (hb + kPadBlocks - 1) / kPadBlocks * kPadBlocks;
  g.wp = (wb + kPadBlocks - 1) / kPadBlocks * kPadBlocks;
  g.mask.assign(size_t(g.hp) * g.wp, 0);
  for (int h = 0; h < hb; ++h)
    for (int w = 0; w < wb; ++w) g.mask[size_t(h) * g.wp + w] = 1;
  return g;
}

std::unique_ptr<CodecModel> CodecModel::Load(const uint8_t* data, size_t size) {
  nn::Checkpoint ck = nn::ParseCheckpoint(data, size);
  train::TrainConfig cfg;
  try {
    const nlohmann::json j = nlohmann::json::parse(ck.config_json);
    cfg = train::TrainConfig::FromJson(j.at("train_config").dump());
  } catch (const nlohmann::json::exception& e) {
    Check(false, ErrorKind::kFormat,
          std::string("bad checkpoint config: ") + e.what());
  }
  Check(cfg.luma.c_in == 64 && cfg.chroma.c_in == 128, ErrorKind::kFormat,
        "checkpoint channel plan does not fit the codec");

  std::unique_ptr<CodecModel> m(new CodecModel);
  m->luma_ =
      std::make_unique<model::HyperpriorModel>(cfg.luma, "luma", cfg.seed);
  m->chroma_ =
      std::make_unique<model::HyperpriorModel>(cfg.chroma, "chroma", cfg.seed);
  train::LearnedTables tables(
      jpeg::IjgScaleTable(jpeg::AnnexKLumaQuant(), cfg.table_init_quality),
      jpeg::IjgScaleTable(jpeg::AnnexKChromaQuant(), cfg.table_init_quality));
  std::vector<nn::Parameter*> all;
  for (nn::Parameter* p : m->luma_->Parameters()) all.push_back(p);
  for (nn::Parameter* p : m->chroma_->Parameters()) all.push_back(p);
  tables.CollectParameters(&all);
  nn::ImportParameters(all, ck.params);

  m->qt_luma_ = tables.QtLuma().data();
  m->qt_chroma_ = tables.QtChroma().data();
  m->qti_luma_ = tables.QuantizedQtiLuma();
  m->qti_chroma_ = tables.QuantizedQtiChroma();
  m->hash_ = ck.hash;
  return m;
}

CompressResult Compress(const uint8_t* jpeg_bytes, size_t size,
                        const CodecModel& model, CodecMode mode) {
  const jpeg::JpegImage img = jpeg::ParseJpeg(jpeg_bytes, size);
  const bool lossless = mode == CodecMode::kLossless;

  Group luma;
  luma.model = &model.Luma();
  luma.planes = {&img.luma};
  luma.in_steps = NaturalSteps(img.luma_qt);
  luma.out_steps = lossless ? luma.in_steps : model.QtLumaSteps();
  luma.lossless = lossless;
  luma.grid = PadAndMask(img.luma.height_blocks, img.luma.width_blocks);

  Group chroma;
  chroma.model = &model.Chroma();
  chroma.planes = {&img.cb, &img.cr};
  const std::vector<double> cs = NaturalSteps(img.chroma_qt);
  chroma.in_steps.insert(chroma.in_steps.end(), cs.begin(), cs.end());
  chroma.in_steps.insert(chroma.in_steps.end(), cs.begin(), cs.end());
  if (lossless) {
    chroma.out_steps = chroma.in_steps;
  } else {
    const std::vector<double>& qc = model.QtChromaSteps();
    chroma.out_steps.insert(chroma.out_steps.end(), qc.begin(), qc.end());
    chroma.out_steps.insert(chroma.out_steps.end(), qc.begin(), qc.end());
  }
  chroma.lossless = lossless;
  chroma.grid = PadAndMask(img.cb.height_blocks, img.cb.width_blocks);
  Check(img.cr.height_blocks == img.cb.height_blocks &&
            img.cr.width_blocks == img.cb.width_blocks,
        ErrorKind::kUnsupported, "chroma planes disagree on grid size");

  const jpeg::QuantTable qt_out_luma =
      lossless ? img.luma_qt : model.QtiLuma();
  const jpeg::QuantTable qt_out_chroma =
      lossless ? img.chroma_qt : model.QtiChroma();

  ByteWriter w;
  w.Bytes(kMagic, 4);
  w.U8(kVersion);
  w.U8(uint8_t(mode));
  w.U32le(uint32_t(img.width));
  w.U32le(uint32_t(img.height));
  for (int i = 0; i < 3; ++i) {
    const jpeg::CoeffPlane& p = img.Plane(i);
    Check(p.height_blocks <= 0xFFFF && p.width_blocks <= 0xFFFF,
          ErrorKind::kUnsupported, "image too large for the container");
    w.U16le(uint16_t(p.height_blocks));
    w.U16le(uint16_t(p.width_blocks));
  }
  for (const jpeg::QuantTable* qt : {&qt_out_luma, &qt_out_chroma})
    for (int z = 0; z < 64; ++z) w.U16le(qt->steps[size_t(z)]);
  w.Bytes(model.Hash().data(), model.Hash().size());

  double bits_x = 0.0, bits_y = 0.0, bits_z = 0.0;
  for (Group* g : {&luma, &chroma}) {
    nn::Tensor x = BuildGroupX(*g);
    nn::Tensor mask = BuildGroupMask(*g);
    model::RateTensors rt =
        g->model->Rate(x, model::Relaxation::kRound, 0, 0, &mask);
    bits_x += rt.bits_x.scalar();
    bits_y += rt.bits_y.scalar();
    bits_z += rt.bits_z.scalar();

    AppendSegment(&w, EncodeZ(*g->model, rt.z_hat));
    coder::GaussianCdfCache latent_cache(kLatentSupportCap);
    AppendSegment(&w,
                  EncodeGaussian(rt.y_hat, rt.sigma_y, &latent_cache, nullptr));
    coder::GaussianCdfCache coeff_cache(kCoeffSupportCap);
    AppendSegment(
        &w, EncodeGaussian(x, rt.sigma_x, &coeff_cache, &g->grid.mask));
  }

  CompressResult out;
  out.container = w.Take();
  out.report = model::MakeRateReport(bits_x, bits_y, bits_z,
                                     int64_t(img.width) * img.height);
  return out;
}

std::vector<uint8_t> Decompress(const uint8_t* container, size_t size,
                                const CodecModel& model) {
  ByteReader r(container, size);
  char magic[4];
  r.Bytes(magic, 4);
  Check(std::memcmp(magic, kMagic, 4) == 0, ErrorKind::kFormat,
        "not a coded container");
  Check(r.U8() == kVersion, ErrorKind::kFormat,
        "unsupported container version");
  const uint8_t mode = r.U8();
  Check(mode <= uint8_t(CodecMode::kLossy), ErrorKind::kFormat,
        "unknown container mode");
  const int width = int(r.U32le());
  const int height = int(r.U32le());
  Check(width >= 1 && height >= 1, ErrorKind::kCorrupt, "bad pixel dims");

  int hb[3], wb[3];
  for (int i = 0; i < 3; ++i) {
    hb[i] = r.U16le();
    wb[i] = r.U16le();
    Check(hb[i] >= 1 && wb[i] >= 1, ErrorKind::kCorrupt, "bad block grid");
  }
  const int mcu_cols = (width + 15) / 16;
  const int mcu_rows = (height + 15) / 16;
  Check(hb[1] == hb[2] && wb[1] == wb[2], ErrorKind::kCorrupt,
        "chroma grids disagree");
  Check(hb[1] == mcu_rows && wb[1] == mcu_cols && hb[0] == 2 * mcu_rows &&
            wb[0] == 2 * mcu_cols,
        ErrorKind::kCorrupt, "block grids inconsistent with pixel dims");

  jpeg::QuantTable qts[2];
  for (auto& qt : qts)
    for (int z = 0; z < 64; ++z) {
      const uint16_t s = r.U16le();
      Check(s >= 1 && s <= 255, ErrorKind::kCorrupt,
            "quantization step out of range");
      qt.steps[size_t(z)] = s;
    }

  Sha256Digest hash;
  r.Bytes(hash.data(), hash.size());
  Check(hash == model.Hash(), ErrorKind::kModelMismatch,
        "container was coded with a different model");

  jpeg::JpegImage img;
  img.width = width;
  img.height = height;
  img.luma_qt = qts[0];
  img.chroma_qt = qts[1];
  for (int i = 0; i < 2; ++i) {
    img.dc_huff[i] = jpeg::AnnexKHuff(false, i == 1);
    img.ac_huff[i] = jpeg::AnnexKHuff(true, i == 1);
  }

  const PaddedGrid luma_grid = PadAndMask(hb[0], wb[0]);
  const PaddedGrid chroma_grid = PadAndMask(hb[1], wb[1]);
  for (int gi = 0; gi < 2; ++gi) {
    const PaddedGrid& grid = gi == 0 ? luma_grid : chroma_grid;
    model::HyperpriorModel& m = gi == 0 ? model.Luma() : model.Chroma();
    const int c_total = gi == 0 ? 64 : 128;
    const std::vector<uint8_t> seg_z = ReadSegment(&r);
    const std::vector<uint8_t> seg_y = ReadSegment(&r);
    const std::vector<uint8_t> seg_x = ReadSegment(&r);
    DecodedGroup dg = DecodeGroup(m, grid, seg_z, seg_y, seg_x, c_total);
    if (gi == 0) {
      UnpackPlane(dg.x, 0, grid, jpeg::Component::kLuma, &img.luma);
    } else {
      UnpackPlane(dg.x, 0, grid, jpeg::Component::kCb, &img.cb);
      UnpackPlane(dg.x, 1, grid, jpeg::Component::kCr, &img.cr);
    }
  }
  Check(r.remaining() == 0, ErrorKind::kCorrupt,
        "trailing bytes after the last segment");
  return jpeg::SerializeJpeg(img);
}

}  // namespace jrc::codec
