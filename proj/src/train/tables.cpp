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

#include "train/tables.h"

#include <cmath>
#include <utility>

#include "nn/ops.h"

namespace jrc::train {

namespace {

// Inverse of softplus: raw such that log1p(exp(raw)) == step. For large
// steps softplus is the identity to double precision.
double InverseSoftplus(double step) {
  return step > 30.0 ? step : std::log(std::expm1(step));
}

nn::Parameter TableParameter(const char* name, const jpeg::QuantTable& qt) {
  const auto natural = qt.NaturalOrder();
  std::vector<double> raw(64);
  for (int i = 0; i < 64; ++i) raw[i] = InverseSoftplus(double(natural[i]));
  return nn::Parameter(name,
                       nn::Tensor::FromVector(nn::Shape(1, 64, 1, 1), raw));
}

nn::Tensor EffectiveSteps(const nn::Parameter& p) {
  return nn::Clamp(nn::Softplus(p.tensor), 1.0, 255.0);
}

jpeg::QuantTable RoundTable(const nn::Parameter& p) {
  const nn::Tensor steps = nn::Clamp(nn::Softplus(p.tensor), 1.0, 255.0);
  std::array<uint16_t, 64> natural{};
  for (int i = 0; i < 64; ++i) {
    natural[i] = uint16_t(std::lround(steps.data()[size_t(i)]));
  }
  jpeg::QuantTable qt;
  qt.steps = jpeg::Zigzag(natural);
  return qt;
}

}  // namespace

LearnedTables::LearnedTables(const jpeg::QuantTable& luma,
                             const jpeg::QuantTable& chroma)
    : qt_luma_(TableParameter("tables.qt_luma", luma)),
      qt_chroma_(TableParameter("tables.qt_chroma", chroma)),
      qti_luma_(TableParameter("tables.qti_luma", luma)),
      qti_chroma_(TableParameter("tables.qti_chroma", chroma)) {}

nn::Tensor LearnedTables::QtLuma() const { return EffectiveSteps(qt_luma_); }
nn::Tensor LearnedTables::QtChroma() const {
  return EffectiveSteps(qt_chroma_);
}
nn::Tensor LearnedTables::QtiLuma() const { return EffectiveSteps(qti_luma_); }
nn::Tensor LearnedTables::QtiChroma() const {
  return EffectiveSteps(qti_chroma_);
}

jpeg::QuantTable LearnedTables::QuantizedQtiLuma() const {
  return RoundTable(qti_luma_);
}
jpeg::QuantTable LearnedTables::QuantizedQtiChroma() const {
  return RoundTable(qti_chroma_);
}

double LearnedTables::MaxRoundingError() const {
  double worst = 0.0;
  for (const nn::Parameter* p : {&qti_luma_, &qti_chroma_}) {
    const nn::Tensor steps = EffectiveSteps(*p);
    for (double s : steps.data()) {
      worst = std::max(worst, std::fabs(s - double(std::lround(s))));
    }
  }
  return worst;
}

void LearnedTables::CollectParameters(std::vector<nn::Parameter*>* out) {
  out->push_back(&qt_luma_);
  out->push_back(&qt_chroma_);
  out->push_back(&qti_luma_);
  out->push_back(&qti_chroma_);
}

}  // namespace jrc::train
