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

#ifndef JRC_TRAIN_TABLES_H_
#define JRC_TRAIN_TABLES_H_

#include <vector>

#include "jpeg/jpeg.h"
#include "nn/adam.h"
#include "nn/tensor.h"

namespace jrc::train {

// Continuous quantization tables for gradient training. Each table is 64
// softplus-parameterized positive steps in natural (row-major) order; the
// effective step seen by any consumer is clamp(softplus(raw), 1, 255).
// Four tables: forward and inverse, for luma and for shared chroma.
class LearnedTables {
 public:
  // Initializes all four tables so the effective steps equal the given
  // integer tables (luma and chroma, forward == inverse).
  LearnedTables(const jpeg::QuantTable& luma, const jpeg::QuantTable& chroma);

  // Effective steps as a (1,64,1,1) graph tensor, gradients attached.
  nn::Tensor QtLuma() const;
  nn::Tensor QtChroma() const;
  nn::Tensor QtiLuma() const;
  nn::Tensor QtiChroma() const;

  // Inverse table rounded to integers in [1,255], zigzag order, for
  // emission into a JPEG DQT segment.
  jpeg::QuantTable QuantizedQtiLuma() const;
  jpeg::QuantTable QuantizedQtiChroma() const;
  // Largest |continuous - rounded| step discrepancy across both inverse
  // tables; reported alongside checkpoints.
  double MaxRoundingError() const;

  void CollectParameters(std::vector<nn::Parameter*>* out);

 private:
  nn::Parameter qt_luma_, qt_chroma_, qti_luma_, qti_chroma_;
};

}  // namespace jrc::train

#endif  // JRC_TRAIN_TABLES_H_
