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

#ifndef JRC_NN_OPS_H_
#define JRC_NN_OPS_H_

#include <cstdint>
#include <vector>

#include "nn/tensor.h"

namespace jrc::nn {

// Elementwise.
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double s);
Tensor AddScalar(const Tensor& a, double s);
Tensor Reciprocal(const Tensor& a);
Tensor Exp(const Tensor& a);
Tensor Softplus(const Tensor& a);
Tensor Clamp(const Tensor& a, double lo, double hi);
Tensor Relu(const Tensor& a);
Tensor Relu6(const Tensor& a);
Tensor Tanh(const Tensor& a);
Tensor Sigmoid(const Tensor& a);
Tensor Log(const Tensor& a);  // natural log; input must stay positive

// Forward: round half away from zero. Backward: identity (straight-through).
Tensor SteRound(const Tensor& a);

// Adds i.i.d. U(-0.5, 0.5) noise; element i draws from the deterministic
// counter stream (seed, stream, i). Backward: identity.
Tensor AddUniformNoise(const Tensor& a, uint64_t seed, uint64_t stream);

// Multiplies each channel c of x (B,C,H,W) by v[c]; v has shape (1,C,1,1).
Tensor MulChannel(const Tensor& x, const Tensor& v);
// Adds v[c] to each channel c of x; v has shape (1,C,1,1).
Tensor AddChannel(const Tensor& x, const Tensor& v);

// Learned groupwise 1x1 channel map: x has groups*in_c channels and the
// output groups*out_c, with out[b, g*out_c+oc] = sum_ic w[g, oc, ic, 0] *
// x[b, g*in_c+ic]. w has shape (groups, out_c, in_c, 1) and receives
// gradients, unlike ChannelLinear's fixed matrix.
Tensor GroupedLinear(const Tensor& x, const Tensor& w, int groups, int out_c,
                     int in_c);

// Zero-padded strided cross-correlation. Padding policy: output spatial dims
// are ceil(in/stride); total pad = (out-1)*stride + k - in, split with the
// smaller half on top/left. Weight shape (OC, IC, K, K), bias (1, OC, 1, 1).
Tensor Conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride);

// Adjoint of Conv2d with the same geometry: output spatial dims are exactly
// in*stride. Weight shape (IC, OC, K, K), bias (1, OC, 1, 1). Requires k >= s.
Tensor ConvTranspose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                       int stride);

// Data movement.
Tensor ConcatChannels(const Tensor& a, const Tensor& b);
Tensor SliceChannels(const Tensor& x, int c0, int c1);  // [c0, c1)
Tensor CropHW(const Tensor& x, int h, int w);           // top-left corner
Tensor Upsample2xNearest(const Tensor& x);

// (B, groups*64, Hb, Wb) -> (B, groups, 8*Hb, 8*Wb): channel p of each group
// is pixel (p/8, p%8) of that block.
Tensor BlockToSpace(const Tensor& x, int groups);

// Fixed (non-learned) per-position channel map applied groupwise:
// out[g*OC+oc] = sum_ic m[oc*IC+ic] * in[g*IC+ic]. m is row-major OC x IC.
Tensor ChannelLinear(const Tensor& x, const std::vector<double>& m, int out_c,
                     int in_c, int groups);

// Reductions to a {1,1,1,1} scalar.
Tensor Sum(const Tensor& a);
Tensor Mean(const Tensor& a);

// Per-element code length -log2(max(Phi((v+.5)/sigma) - Phi((v-.5)/sigma),
// 2^-16)) in bits, differentiable in both v and sigma away from the floor.
Tensor GaussianBits(const Tensor& v, const Tensor& sigma);

// Scalar helpers shared with the coder (identical math on both paths).
double GaussianIntervalProb(double v, double sigma);  // before flooring
constexpr double kLikelihoodFloor = 1.0 / 65536.0;    // 2^-16

}  // namespace jrc::nn

#endif  // JRC_NN_OPS_H_
