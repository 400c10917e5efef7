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

#ifndef JRC_TRAIN_LOSSES_H_
#define JRC_TRAIN_LOSSES_H_

#include <cstdint>
#include <memory>
#include <vector>

#include "jpeg/jpeg.h"
#include "model/hyperprior.h"
#include "nn/tensor.h"
#include "train/tables.h"

namespace jrc::train {

// One rate-distortion trade-off; lambda_r weights rate, lambda_d weights
// distortion. Never both zero.
struct TradeoffPoint {
  double lambda_r = 0.0;
  double lambda_d = 0.0;
};

// The 15-point trade-off grid used for the published rate-distortion sweep.
std::vector<TradeoffPoint> LambdaGrid();

// Stored quantized levels packed as (B,64,Hb,Wb), coefficient channels in
// natural (row-major) order. All planes must share one block-grid size.
nn::Tensor PackLevels(const std::vector<const jpeg::CoeffPlane*>& planes);
// Cb and Cr packed together as (B,128,Hb,Wb): Cb channels 0..63, Cr 64..127.
nn::Tensor PackChromaLevels(const std::vector<const jpeg::CoeffPlane*>& cbs,
                            const std::vector<const jpeg::CoeffPlane*>& crs);

// Per-channel quantization steps as constant broadcast tensors. `table` is
// a stored table; `copies` is 1 for luma, 2 for the packed chroma pair.
nn::Tensor StepsTensor(const jpeg::QuantTable& table, int copies);
// Same, from live 64-step graph tensors (keeps gradients attached).
nn::Tensor RepeatSteps(const nn::Tensor& steps64, int copies);

// Differentiable JPEG reconstruction of packed dequantized coefficients:
// per-block inverse DCT, +128 shift, 2x replication chroma upsampling,
// BT.601 color matrix, crop to width x height, scaled to [0,1]. No clamp;
// training must see gradients beyond the displayable range.
nn::Tensor RgbFromCoeffTensors(const nn::Tensor& luma_coeffs,
                               const nn::Tensor& chroma_coeffs, int width,
                               int height);

// Mean squared error between two (B,3,H,W) reconstructions in [0,1].
nn::Tensor Distortion(const nn::Tensor& a, const nn::Tensor& b);

// Constant inputs for one training batch.
struct CoeffBatch {
  nn::Tensor i_luma;     // (B,64,Hl,Wl) dequantized coefficient values
  nn::Tensor i_chroma;   // (B,128,Hc,Wc)
  nn::Tensor recon_ref;  // (B,3,H,W) reference reconstruction in [0,1]
  int width = 0;         // pixels per image
  int height = 0;
  int64_t pixel_count = 0;  // batch * width * height
};

// Builds the constant batch tensors from parsed images. All images must
// share pixel and block-grid dimensions.
CoeffBatch MakeCoeffBatch(const std::vector<const jpeg::JpegImage*>& images);

// x = ste_round(I / Q_t) for both component groups. Steps are 64-channel
// graph tensors (natural order); gradients reach them through the
// straight-through estimator.
struct QuantizedBatch {
  nn::Tensor x_luma;
  nn::Tensor x_chroma;
};
QuantizedBatch QuantizeBatch(const CoeffBatch& batch,
                             const nn::Tensor& qt_luma,
                             const nn::Tensor& qt_chroma);

// Model loss: total noise-relaxed rate of x in bits for the whole batch.
// The forward tables enter as fixed constants, so table parameters get
// exactly zero gradient; only model parameters learn.
nn::Tensor LossModel(model::HyperpriorModel& luma_model,
                     model::HyperpriorModel& chroma_model,
                     const CoeffBatch& batch,
                     const std::vector<double>& qt_luma_steps,
                     const std::vector<double>& qt_chroma_steps,
                     uint64_t noise_seed, uint64_t noise_stream);

// Table loss L_q = lambda_r * R + lambda_d * D * pixel_count, with R the
// round-relaxed rate in bits per batch. Model parameters are frozen to
// exactly zero gradient; the freeze lasts until the returned parts are
// destroyed, so run Backward while holding them. Gradients reach Q_t
// through the straight-through quantizer and Q_t' through the
// reconstruction.
struct RdParts {
  nn::Tensor loss;          // scalar graph tensor
  double rate_bits = 0.0;   // batch total
  double distortion = 0.0;  // mean squared error, [0,1] pixels
  double lq_per_pixel = 0.0;  // lambda_r*bpp + lambda_d*D
  std::shared_ptr<void> freeze;  // keeps model parameters non-trainable
};
RdParts LossRd(model::HyperpriorModel& luma_model,
               model::HyperpriorModel& chroma_model, const CoeffBatch& batch,
               const LearnedTables& tables, const TradeoffPoint& point);

}  // namespace jrc::train

#endif  // JRC_TRAIN_LOSSES_H_
