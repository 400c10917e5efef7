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

#include "train/losses.h"

#include <array>
#include <cmath>

#include "nn/ops.h"

namespace jrc::train {

namespace {

using nn::Shape;
using nn::Tensor;

// BT.601 full-range constants, identical to the integer reconstruction path.
constexpr double kCrToR = 1.402;
constexpr double kCbToG = 0.3441362862;
constexpr double kCrToG = 0.7141362862;
constexpr double kCbToB = 1.772;

// Column q of the matrix is the spatial response of coefficient basis q:
// pixel_p = sum_q M[p*64+q] * coeff_q.
const std::vector<double>& IdctMatrix() {
  static const std::vector<double> m = [] {
    std::vector<double> mat(64 * 64);
    for (int q = 0; q < 64; ++q) {
      std::array<double, 64> unit{};
      unit[size_t(q)] = 1.0;
      std::array<double, 64> pixels{};
      jpeg::Idct8x8(unit.data(), pixels.data());
      for (int p = 0; p < 64; ++p) mat[size_t(p) * 64 + q] = pixels[size_t(p)];
    }
    return mat;
  }();
  return m;
}

// Temporarily turns gradient tracking off for a parameter set; restores on
// scope exit so optimizer state is untouched.
class FreezeGuard {
 public:
  explicit FreezeGuard(const std::vector<nn::Parameter*>& params)
      : params_(params) {
    for (nn::Parameter* p : params_) p->tensor.set_requires_grad(false);
  }
  ~FreezeGuard() {
    for (nn::Parameter* p : params_) p->tensor.set_requires_grad(true);
  }

 private:
  std::vector<nn::Parameter*> params_;
};

void CheckSameGrid(const std::vector<const jpeg::CoeffPlane*>& planes) {
  Check(!planes.empty(), ErrorKind::kInvalidArgument, "empty plane batch");
  for (const jpeg::CoeffPlane* p : planes) {
    Check(p->width_blocks == planes[0]->width_blocks &&
              p->height_blocks == planes[0]->height_blocks,
          ErrorKind::kInvalidArgument, "batch planes must share one grid");
  }
}

// Copies one plane's levels into channel-major layout at batch slot b.
void FillPlane(std::vector<double>* out, const jpeg::CoeffPlane& plane,
               int64_t batch_offset, int channel_base, int channels_total) {
  const int Hb = plane.height_blocks, Wb = plane.width_blocks;
  const int64_t grid = int64_t(Hb) * Wb;
  for (int by = 0; by < Hb; ++by) {
    for (int bx = 0; bx < Wb; ++bx) {
      const int16_t* blk = plane.Block(by, bx);
      for (int p = 0; p < 64; ++p) {
        (*out)[size_t(batch_offset +
                      int64_t(channel_base + p) * grid + int64_t(by) * Wb +
                      bx)] = double(blk[p]);
      }
    }
  }
  (void)channels_total;
}

}  // namespace

std::vector<TradeoffPoint> LambdaGrid() {
  return {{0.1, 100}, {0.2, 100}, {0.4, 100}, {0.6, 100}, {0.8, 100},
          {1, 100},   {2, 100},   {4, 100},   {8, 100},   {16, 100},
          {32, 100},  {48, 50},   {64, 20},   {64, 10},   {64, 5}};
}

Tensor PackLevels(const std::vector<const jpeg::CoeffPlane*>& planes) {
  CheckSameGrid(planes);
  const int B = int(planes.size());
  const int Hb = planes[0]->height_blocks, Wb = planes[0]->width_blocks;
  const int64_t per_image = 64 * int64_t(Hb) * Wb;
  std::vector<double> v(size_t(B) * per_image);
  for (int b = 0; b < B; ++b) {
    FillPlane(&v, *planes[b], int64_t(b) * per_image, 0, 64);
  }
  return Tensor::FromVector(Shape(B, 64, Hb, Wb), std::move(v));
}

Tensor PackChromaLevels(const std::vector<const jpeg::CoeffPlane*>& cbs,
                        const std::vector<const jpeg::CoeffPlane*>& crs) {
  CheckSameGrid(cbs);
  CheckSameGrid(crs);
  Check(cbs.size() == crs.size() &&
            cbs[0]->width_blocks == crs[0]->width_blocks &&
            cbs[0]->height_blocks == crs[0]->height_blocks,
        ErrorKind::kInvalidArgument, "Cb/Cr batches must match");
  const int B = int(cbs.size());
  const int Hb = cbs[0]->height_blocks, Wb = cbs[0]->width_blocks;
  const int64_t grid = int64_t(Hb) * Wb;
  const int64_t per_image = 128 * grid;
  std::vector<double> v(size_t(B) * per_image);
  for (int b = 0; b < B; ++b) {
    FillPlane(&v, *cbs[b], int64_t(b) * per_image, 0, 128);
    FillPlane(&v, *crs[b], int64_t(b) * per_image, 64, 128);
  }
  return Tensor::FromVector(Shape(B, 128, Hb, Wb), std::move(v));
}

Tensor StepsTensor(const jpeg::QuantTable& table, int copies) {
  const auto natural = table.NaturalOrder();
  std::vector<double> v(size_t(copies) * 64);
  for (int c = 0; c < copies; ++c)
    for (int i = 0; i < 64; ++i) v[size_t(c) * 64 + i] = double(natural[i]);
  return Tensor::FromVector(Shape(1, copies * 64, 1, 1), std::move(v));
}

Tensor RepeatSteps(const Tensor& steps64, int copies) {
  Check(steps64.dim(1) == 64, ErrorKind::kInvalidArgument,
        "expected a 64-step tensor");
  Tensor out = steps64;
  for (int c = 1; c < copies; ++c) out = nn::ConcatChannels(out, steps64);
  return out;
}

Tensor RgbFromCoeffTensors(const Tensor& luma_coeffs,
                           const Tensor& chroma_coeffs, int width,
                           int height) {
  Check(luma_coeffs.dim(1) == 64 && chroma_coeffs.dim(1) == 128,
        ErrorKind::kInvalidArgument, "expected packed 64/128-channel planes");
  const Tensor y = nn::AddScalar(
      nn::BlockToSpace(nn::ChannelLinear(luma_coeffs, IdctMatrix(), 64, 64, 1),
                       1),
      128.0);
  const Tensor c = nn::AddScalar(
      nn::BlockToSpace(
          nn::ChannelLinear(chroma_coeffs, IdctMatrix(), 64, 64, 2), 2),
      128.0);
  Check(y.dim(2) >= height && y.dim(3) >= width, ErrorKind::kInvalidArgument,
        "luma grid smaller than pixel dims");
  const Tensor yc = nn::CropHW(y, height, width);
  const Tensor up = nn::Upsample2xNearest(c);
  Check(up.dim(2) >= height && up.dim(3) >= width, ErrorKind::kInvalidArgument,
        "chroma grid smaller than pixel dims");
  const Tensor cb = nn::AddScalar(
      nn::CropHW(nn::SliceChannels(up, 0, 1), height, width), -128.0);
  const Tensor cr = nn::AddScalar(
      nn::CropHW(nn::SliceChannels(up, 1, 2), height, width), -128.0);
  const Tensor r = nn::Add(yc, nn::Scale(cr, kCrToR));
  const Tensor g = nn::Sub(nn::Sub(yc, nn::Scale(cb, kCbToG)),
                           nn::Scale(cr, kCrToG));
  const Tensor b = nn::Add(yc, nn::Scale(cb, kCbToB));
  return nn::Scale(nn::ConcatChannels(r, nn::ConcatChannels(g, b)),
                   1.0 / 255.0);
}

Tensor Distortion(const Tensor& a, const Tensor& b) {
  Check(a.shape() == b.shape(), ErrorKind::kInvalidArgument,
        "distortion shape mismatch");
  const Tensor diff = nn::Sub(a, b);
  return nn::Mean(nn::Mul(diff, diff));
}

CoeffBatch MakeCoeffBatch(const std::vector<const jpeg::JpegImage*>& images) {
  Check(!images.empty(), ErrorKind::kInvalidArgument, "empty image batch");
  std::vector<const jpeg::CoeffPlane*> lumas, cbs, crs;
  for (const jpeg::JpegImage* im : images) {
    Check(im->width == images[0]->width && im->height == images[0]->height,
          ErrorKind::kInvalidArgument, "batch images must share dimensions");
    lumas.push_back(&im->luma);
    cbs.push_back(&im->cb);
    crs.push_back(&im->cr);
  }
  CoeffBatch batch;
  const Tensor luma_levels = PackLevels(lumas);
  const Tensor chroma_levels = PackChromaLevels(cbs, crs);
  // All images in a batch come from one corpus and share tables; multiply
  // by each image's own stored tables would need per-batch-slot steps, so
  // require equality instead.
  for (const jpeg::JpegImage* im : images) {
    Check(im->luma_qt == images[0]->luma_qt &&
              im->chroma_qt == images[0]->chroma_qt,
          ErrorKind::kInvalidArgument, "batch images must share quant tables");
  }
  batch.i_luma =
      nn::MulChannel(luma_levels, StepsTensor(images[0]->luma_qt, 1));
  batch.i_chroma =
      nn::MulChannel(chroma_levels, StepsTensor(images[0]->chroma_qt, 2));
  batch.width = images[0]->width;
  batch.height = images[0]->height;
  batch.pixel_count =
      int64_t(images.size()) * images[0]->width * images[0]->height;
  batch.recon_ref = RgbFromCoeffTensors(batch.i_luma, batch.i_chroma,
                                        batch.width, batch.height);
  return batch;
}

QuantizedBatch QuantizeBatch(const CoeffBatch& batch, const Tensor& qt_luma,
                             const Tensor& qt_chroma) {
  QuantizedBatch q;
  q.x_luma = nn::SteRound(
      nn::MulChannel(batch.i_luma, nn::Reciprocal(qt_luma)));
  q.x_chroma = nn::SteRound(
      nn::MulChannel(batch.i_chroma, nn::Reciprocal(RepeatSteps(qt_chroma, 2))));
  return q;
}

Tensor LossModel(model::HyperpriorModel& luma_model,
                 model::HyperpriorModel& chroma_model, const CoeffBatch& batch,
                 const std::vector<double>& qt_luma_steps,
                 const std::vector<double>& qt_chroma_steps,
                 uint64_t noise_seed, uint64_t noise_stream) {
  Check(qt_luma_steps.size() == 64 && qt_chroma_steps.size() == 64,
        ErrorKind::kInvalidArgument, "expected 64 steps per table");
  const Tensor qt_l =
      Tensor::FromVector(Shape(1, 64, 1, 1), qt_luma_steps);
  const Tensor qt_c =
      Tensor::FromVector(Shape(1, 64, 1, 1), qt_chroma_steps);
  const QuantizedBatch q = QuantizeBatch(batch, qt_l, qt_c);
  model::RateTensors rl = luma_model.Rate(q.x_luma, model::Relaxation::kNoise,
                                          noise_seed, 2 * noise_stream);
  model::RateTensors rc = chroma_model.Rate(
      q.x_chroma, model::Relaxation::kNoise, noise_seed, 2 * noise_stream + 1);
  return nn::Add(nn::Add(rl.bits_x, rl.bits_y),
                 nn::Add(rl.bits_z,
                         nn::Add(nn::Add(rc.bits_x, rc.bits_y), rc.bits_z)));
}

RdParts LossRd(model::HyperpriorModel& luma_model,
               model::HyperpriorModel& chroma_model, const CoeffBatch& batch,
               const LearnedTables& tables, const TradeoffPoint& point) {
  Check(point.lambda_r > 0 || point.lambda_d > 0, ErrorKind::kInvalidArgument,
        "lambda_r and lambda_d must not both be zero");
  std::vector<nn::Parameter*> frozen;
  for (nn::Parameter* p : luma_model.Parameters()) frozen.push_back(p);
  for (nn::Parameter* p : chroma_model.Parameters()) frozen.push_back(p);
  auto guard = std::make_shared<FreezeGuard>(frozen);

  const QuantizedBatch q =
      QuantizeBatch(batch, tables.QtLuma(), tables.QtChroma());
  // Round relaxation: deterministic, and the straight-through estimator
  // already carries the table gradients.
  model::RateTensors rl =
      luma_model.Rate(q.x_luma, model::Relaxation::kRound, 0, 0);
  model::RateTensors rc =
      chroma_model.Rate(q.x_chroma, model::Relaxation::kRound, 0, 0);
  const Tensor rate =
      nn::Add(nn::Add(rl.bits_x, rl.bits_y),
              nn::Add(rl.bits_z,
                      nn::Add(nn::Add(rc.bits_x, rc.bits_y), rc.bits_z)));

  const Tensor deq_luma = nn::MulChannel(q.x_luma, tables.QtiLuma());
  const Tensor deq_chroma =
      nn::MulChannel(q.x_chroma, RepeatSteps(tables.QtiChroma(), 2));
  const Tensor recon =
      RgbFromCoeffTensors(deq_luma, deq_chroma, batch.width, batch.height);
  const Tensor d = Distortion(batch.recon_ref, recon);

  RdParts parts;
  parts.loss = nn::Add(nn::Scale(rate, point.lambda_r),
                       nn::Scale(d, point.lambda_d * double(batch.pixel_count)));
  parts.rate_bits = rate.scalar();
  parts.distortion = d.scalar();
  parts.lq_per_pixel = point.lambda_r * parts.rate_bits / double(batch.pixel_count) +
                       point.lambda_d * parts.distortion;
  parts.freeze = guard;
  return parts;
}

}  // namespace jrc::train
