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

#ifndef JRC_EVAL_METRICS_H_
#define JRC_EVAL_METRICS_H_

#include "eval/image_io.h"

namespace jrc::eval {

// 10*log10(1/MSE) with pixels scaled to [0,1]; identical inputs return the
// +infinity sentinel. Dims must match.
double Psnr(const RgbImage& a, const RgbImage& b);

// Five-scale multiscale SSIM with the standard per-scale exponents
// (0.0448, 0.2856, 0.3001, 0.2363, 0.1333), an 11x11 Gaussian window with
// sigma 1.5, and k1=0.01, k2=0.03 on a [0,1] range. Computed per RGB
// channel and averaged, with dyadic downscaling by 2x2 mean pooling
// (edge-replicated to even dims first); negative per-scale terms clamp to
// zero. Requires both dims >= 176 so the coarsest scale still fits the
// window.
double MsSsim(const RgbImage& a, const RgbImage& b);

}  // namespace jrc::eval

#endif  // JRC_EVAL_METRICS_H_
