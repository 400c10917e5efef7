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

#ifndef JRC_CODEC_CODEC_H_
#define JRC_CODEC_CODEC_H_

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "jpeg/jpeg.h"
#include "model/hyperprior.h"

namespace jrc::codec {

// Block grids are padded to multiples of 64 blocks so the analysis stride
// chain (16x) and the hyper stride chain (4x) divide evenly. Only true
// blocks carry coded coefficient symbols; latents are coded densely.
struct PaddedGrid {
  int hb = 0, wb = 0;  // true grid
  int hp = 0, wp = 0;  // padded grid, multiples of 64
  std::vector<uint8_t> mask;  // hp*wp row-major, 1 = true block

  int64_t TrueCount() const;
};
PaddedGrid PadAndMask(int hb, int wb);

// A frozen trained model bundle: both component models, the learned
// forward tables (continuous) and the rounded inverse tables, bound to the
// checkpoint bytes by hash.
class CodecModel {
 public:
  // Takes serialized trainer checkpoint bytes.
  static std::unique_ptr<CodecModel> Load(const uint8_t* data, size_t size);

  model::HyperpriorModel& Luma() const { return *luma_; }
  model::HyperpriorModel& Chroma() const { return *chroma_; }
  // Continuous forward steps, natural order, 64 per table.
  const std::vector<double>& QtLumaSteps() const { return qt_luma_; }
  const std::vector<double>& QtChromaSteps() const { return qt_chroma_; }
  const jpeg::QuantTable& QtiLuma() const { return qti_luma_; }
  const jpeg::QuantTable& QtiChroma() const { return qti_chroma_; }
  const std::array<uint8_t, 32>& Hash() const { return hash_; }

 private:
  CodecModel() = default;
  std::unique_ptr<model::HyperpriorModel> luma_, chroma_;
  std::vector<double> qt_luma_, qt_chroma_;
  jpeg::QuantTable qti_luma_, qti_chroma_;
  std::array<uint8_t, 32> hash_{};
};

enum class CodecMode : uint8_t { kLossless = 0, kLossy = 1 };

struct CompressResult {
  std::vector<uint8_t> container;
  // Model-reported rate (round relaxation, masked), same quantities the
  // training loop optimizes. bpp uses the true pixel count.
  model::RateReport report;
};

// Transcodes a baseline JPEG into a coded container. Lossless mode keeps
// the stored coefficients under the image's own tables; lossy mode
// requantizes with the model's learned tables.
CompressResult Compress(const uint8_t* jpeg_bytes, size_t size,
                        const CodecModel& model, CodecMode mode);

// Decodes a container back to a baseline JPEG byte stream.
std::vector<uint8_t> Decompress(const uint8_t* container, size_t size,
                                const CodecModel& model);

}  // namespace jrc::codec

#endif  // JRC_CODEC_CODEC_H_
