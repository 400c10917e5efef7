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

#include "nn/ops.h"

#include <algorithm>
#include <cmath>

#include "util/rng.h"

namespace jrc::nn {
namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

std::shared_ptr<Node> MakeNode(const Shape& s,
                               std::vector<std::shared_ptr<Node>> inputs) {
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->value.resize(static_cast<size_t>(s.numel()));
  for (const auto& in : inputs) {
    if (in->requires_grad) n->requires_grad = true;
  }
  n->inputs = std::move(inputs);
  return n;
}

void CheckSameShape(const Tensor& a, const Tensor& b, const char* op) {
  Check(a.shape() == b.shape(), ErrorKind::kInvalidArgument,
        std::string(op) + ": shape mismatch");
}

// Generic elementwise binary op: fwd(a_i, b_i); backward receives
// (a_i, b_i, out_i, g_i) and returns the two input gradients.
template <typename Fwd, typename Bwd>
Tensor ElementwiseBinary(const Tensor& a, const Tensor& b, Fwd fwd, Bwd bwd,
                         const char* name) {
  CheckSameShape(a, b, name);
  auto n = MakeNode(a.shape(), {a.node, b.node});
  const size_t count = n->value.size();
  for (size_t i = 0; i < count; ++i) {
    n->value[i] = fwd(a.node->value[i], b.node->value[i]);
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto an = a.node;
    auto bn = b.node;
    n->backward_fn = [self, an, bn, bwd]() {
      const size_t count = self->value.size();
      if (an->requires_grad) an->EnsureGrad();
      if (bn->requires_grad) bn->EnsureGrad();
      for (size_t i = 0; i < count; ++i) {
        double ga, gb;
        bwd(an->value[i], bn->value[i], self->value[i], self->grad[i], ga, gb);
        if (an->requires_grad) an->grad[i] += ga;
        if (bn->requires_grad) bn->grad[i] += gb;
      }
    };
  }
  return Tensor(n);
}

template <typename Fwd, typename Bwd>
Tensor ElementwiseUnary(const Tensor& a, Fwd fwd, Bwd bwd) {
  auto n = MakeNode(a.shape(), {a.node});
  const size_t count = n->value.size();
  for (size_t i = 0; i < count; ++i) n->value[i] = fwd(a.node->value[i]);
  if (n->requires_grad) {
    Node* self = n.get();
    auto an = a.node;
    n->backward_fn = [self, an, bwd]() {
      an->EnsureGrad();
      const size_t count = self->value.size();
      for (size_t i = 0; i < count; ++i) {
        an->grad[i] += bwd(an->value[i], self->value[i]) * self->grad[i];
      }
    };
  }
  return Tensor(n);
}

// ---- convolution core -----------------------------------------------------

struct ConvGeom {
  int ih, iw, oh, ow, k, s, pt, pl;
};

ConvGeom CeilPadGeom(int ih, int iw, int k, int s) {
  ConvGeom g;
  g.ih = ih;
  g.iw = iw;
  g.k = k;
  g.s = s;
  g.oh = (ih + s - 1) / s;
  g.ow = (iw + s - 1) / s;
  int th = std::max((g.oh - 1) * s + k - ih, 0);
  int tw = std::max((g.ow - 1) * s + k - iw, 0);
  g.pt = th / 2;
  g.pl = tw / 2;
  return g;
}

struct KernelRange {
  int lo, hi;  // inclusive output range; empty if lo > hi
};

KernelRange OutRange(int in_sz, int out_sz, int kpos, int pad, int s) {
  KernelRange r;
  int lo = pad - kpos;
  r.lo = lo > 0 ? (lo + s - 1) / s : 0;
  int hi = in_sz - 1 - kpos + pad;
  r.hi = hi >= 0 ? std::min(out_sz - 1, hi / s) : -1;
  return r;
}

// out[b,oc,oy,ox] (+)= bias[oc] + sum_{ic,ky,kx} w[oc,ic,ky,kx] * in[...]
void ConvForwardCore(const double* in, int B, int IC, const double* w, int OC,
                     const ConvGeom& g, const double* bias, double* out,
                     bool accumulate) {
  const int K = g.k, S = g.s, OH = g.oh, OW = g.ow, IH = g.ih, IW = g.iw;
  const int64_t ics = int64_t(IH) * IW, ibs = int64_t(IC) * ics;
  const int64_t ocs = int64_t(OH) * OW, obs = int64_t(OC) * ocs;
  for (int b = 0; b < B; ++b) {
    for (int oc = 0; oc < OC; ++oc) {
      double* o = out + b * obs + oc * ocs;
      if (!accumulate) {
        const double bv = bias ? bias[oc] : 0.0;
        std::fill(o, o + ocs, bv);
      }
      const double* woc = w + int64_t(oc) * IC * K * K;
      for (int ic = 0; ic < IC; ++ic) {
        const double* x = in + b * ibs + ic * ics;
        const double* wk = woc + int64_t(ic) * K * K;
        for (int ky = 0; ky < K; ++ky) {
          const KernelRange ry = OutRange(IH, OH, ky, g.pt, S);
          for (int kx = 0; kx < K; ++kx) {
            const double wv = wk[ky * K + kx];
            const KernelRange rx = OutRange(IW, OW, kx, g.pl, S);
            for (int oy = ry.lo; oy <= ry.hi; ++oy) {
              const int iy = oy * S + ky - g.pt;
              const double* xrow = x + int64_t(iy) * IW;
              double* orow = o + int64_t(oy) * OW;
              int ix = rx.lo * S + kx - g.pl;
              for (int ox = rx.lo; ox <= rx.hi; ++ox, ix += S) {
                orow[ox] += wv * xrow[ix];
              }
            }
          }
        }
      }
    }
  }
}

// gin[b,ic,iy,ix] += sum_{oc,ky,kx} w[oc,ic,ky,kx] * gout[b,oc,oy,ox]
void ConvBackInputCore(const double* gout, int B, int OC, const double* w,
                       int IC, const ConvGeom& g, double* gin) {
  const int K = g.k, S = g.s, OH = g.oh, OW = g.ow, IH = g.ih, IW = g.iw;
  const int64_t ics = int64_t(IH) * IW, ibs = int64_t(IC) * ics;
  const int64_t ocs = int64_t(OH) * OW, obs = int64_t(OC) * ocs;
  for (int b = 0; b < B; ++b) {
    for (int oc = 0; oc < OC; ++oc) {
      const double* go = gout + b * obs + oc * ocs;
      const double* woc = w + int64_t(oc) * IC * K * K;
      for (int ic = 0; ic < IC; ++ic) {
        double* gx = gin + b * ibs + ic * ics;
        const double* wk = woc + int64_t(ic) * K * K;
        for (int ky = 0; ky < K; ++ky) {
          const KernelRange ry = OutRange(IH, OH, ky, g.pt, S);
          for (int kx = 0; kx < K; ++kx) {
            const double wv = wk[ky * K + kx];
            const KernelRange rx = OutRange(IW, OW, kx, g.pl, S);
            for (int oy = ry.lo; oy <= ry.hi; ++oy) {
              const int iy = oy * S + ky - g.pt;
              double* gxrow = gx + int64_t(iy) * IW;
              const double* grow = go + int64_t(oy) * OW;
              int ix = rx.lo * S + kx - g.pl;
              for (int ox = rx.lo; ox <= rx.hi; ++ox, ix += S) {
                gxrow[ix] += wv * grow[ox];
              }
            }
          }
        }
      }
    }
  }
}

// gw[oc,ic,ky,kx] += sum_{b,oy,ox} gout[b,oc,oy,ox] * in[b,ic,iy,ix]
void ConvBackWeightCore(const double* in, const double* gout, int B, int IC,
                        int OC, const ConvGeom& g, double* gw) {
  const int K = g.k, S = g.s, OH = g.oh, OW = g.ow, IH = g.ih, IW = g.iw;
  const int64_t ics = int64_t(IH) * IW, ibs = int64_t(IC) * ics;
  const int64_t ocs = int64_t(OH) * OW, obs = int64_t(OC) * ocs;
  for (int b = 0; b < B; ++b) {
    for (int oc = 0; oc < OC; ++oc) {
      const double* go = gout + b * obs + oc * ocs;
      for (int ic = 0; ic < IC; ++ic) {
        const double* x = in + b * ibs + ic * ics;
        double* gwk = gw + (int64_t(oc) * IC + ic) * K * K;
        for (int ky = 0; ky < K; ++ky) {
          const KernelRange ry = OutRange(IH, OH, ky, g.pt, S);
          for (int kx = 0; kx < K; ++kx) {
            const KernelRange rx = OutRange(IW, OW, kx, g.pl, S);
            double acc = 0.0;
            for (int oy = ry.lo; oy <= ry.hi; ++oy) {
              const int iy = oy * S + ky - g.pt;
              const double* xrow = x + int64_t(iy) * IW;
              const double* grow = go + int64_t(oy) * OW;
              int ix = rx.lo * S + kx - g.pl;
              for (int ox = rx.lo; ox <= rx.hi; ++ox, ix += S) {
                acc += grow[ox] * xrow[ix];
              }
            }
            gwk[ky * K + kx] += acc;
          }
        }
      }
    }
  }
}

void AddBiasGrad(const double* gout, int B, int C, int64_t plane, double* gb) {
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const double* g = gout + (int64_t(b) * C + c) * plane;
      double acc = 0.0;
      for (int64_t i = 0; i < plane; ++i) acc += g[i];
      gb[c] += acc;
    }
  }
}

}  // namespace

// ---- elementwise ----------------------------------------------------------

Tensor Add(const Tensor& a, const Tensor& b) {
  return ElementwiseBinary(
      a, b, [](double x, double y) { return x + y; },
      [](double, double, double, double g, double& ga, double& gb) {
        ga = g;
        gb = g;
      },
      "Add");
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  return ElementwiseBinary(
      a, b, [](double x, double y) { return x - y; },
      [](double, double, double, double g, double& ga, double& gb) {
        ga = g;
        gb = -g;
      },
      "Sub");
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  return ElementwiseBinary(
      a, b, [](double x, double y) { return x * y; },
      [](double x, double y, double, double g, double& ga, double& gb) {
        ga = g * y;
        gb = g * x;
      },
      "Mul");
}

Tensor Scale(const Tensor& a, double s) {
  return ElementwiseUnary(
      a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor AddScalar(const Tensor& a, double s) {
  return ElementwiseUnary(
      a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor Reciprocal(const Tensor& a) {
  return ElementwiseUnary(
      a, [](double x) { return 1.0 / x; },
      [](double x, double) { return -1.0 / (x * x); });
}

Tensor Exp(const Tensor& a) {
  return ElementwiseUnary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor Softplus(const Tensor& a) {
  return ElementwiseUnary(
      a,
      [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor Clamp(const Tensor& a, double lo, double hi) {
  return ElementwiseUnary(
      a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor Relu(const Tensor& a) {
  return ElementwiseUnary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor Relu6(const Tensor& a) {
  return ElementwiseUnary(
      a, [](double x) { return std::min(std::max(x, 0.0), 6.0); },
      [](double x, double) { return (x > 0.0 && x < 6.0) ? 1.0 : 0.0; });
}

Tensor Tanh(const Tensor& a) {
  return ElementwiseUnary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor Sigmoid(const Tensor& a) {
  return ElementwiseUnary(
      a,
      [](double x) {
        // Saturating form avoids overflow on large |x|.
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor Log(const Tensor& a) {
  return ElementwiseUnary(
      a,
      [](double x) {
        Check(x > 0.0, ErrorKind::kNumeric, "Log: non-positive input");
        return std::log(x);
      },
      [](double x, double) { return 1.0 / x; });
}

Tensor SteRound(const Tensor& a) {
  return ElementwiseUnary(
      a, [](double x) { return std::round(x); },
      [](double, double) { return 1.0; });
}

Tensor AddUniformNoise(const Tensor& a, uint64_t seed, uint64_t stream) {
  auto n = MakeNode(a.shape(), {a.node});
  const size_t count = n->value.size();
  for (size_t i = 0; i < count; ++i) {
    n->value[i] = a.node->value[i] + Rng::CenteredUniformAt(seed, stream, i);
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto an = a.node;
    n->backward_fn = [self, an]() {
      an->EnsureGrad();
      const size_t count = self->value.size();
      for (size_t i = 0; i < count; ++i) an->grad[i] += self->grad[i];
    };
  }
  return Tensor(n);
}

Tensor MulChannel(const Tensor& x, const Tensor& v) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Check(v.dim(0) == 1 && v.dim(1) == C && v.dim(2) == 1 && v.dim(3) == 1,
        ErrorKind::kInvalidArgument, "MulChannel: v must be (1,C,1,1)");
  auto n = MakeNode(x.shape(), {x.node, v.node});
  const int64_t plane = int64_t(H) * W;
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const double vc = v.node->value[c];
      const double* xi = x.node->value.data() + (int64_t(b) * C + c) * plane;
      double* out = n->value.data() + (int64_t(b) * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) out[i] = xi[i] * vc;
    }
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto xn = x.node;
    auto vn = v.node;
    n->backward_fn = [self, xn, vn, B, C, plane]() {
      if (xn->requires_grad) xn->EnsureGrad();
      if (vn->requires_grad) vn->EnsureGrad();
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          const int64_t off = (int64_t(b) * C + c) * plane;
          const double* g = self->grad.data() + off;
          if (xn->requires_grad) {
            const double vc = vn->value[c];
            double* gx = xn->grad.data() + off;
            for (int64_t i = 0; i < plane; ++i) gx[i] += g[i] * vc;
          }
          if (vn->requires_grad) {
            const double* xi = xn->value.data() + off;
            double acc = 0.0;
            for (int64_t i = 0; i < plane; ++i) acc += g[i] * xi[i];
            vn->grad[c] += acc;
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor AddChannel(const Tensor& x, const Tensor& v) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Check(v.dim(0) == 1 && v.dim(1) == C && v.dim(2) == 1 && v.dim(3) == 1,
        ErrorKind::kInvalidArgument, "AddChannel: v must be (1,C,1,1)");
  auto n = MakeNode(x.shape(), {x.node, v.node});
  const int64_t plane = int64_t(H) * W;
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const double vc = v.node->value[c];
      const double* xi = x.node->value.data() + (int64_t(b) * C + c) * plane;
      double* out = n->value.data() + (int64_t(b) * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) out[i] = xi[i] + vc;
    }
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto xn = x.node;
    auto vn = v.node;
    n->backward_fn = [self, xn, vn, B, C, plane]() {
      if (xn->requires_grad) xn->EnsureGrad();
      if (vn->requires_grad) vn->EnsureGrad();
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          const int64_t off = (int64_t(b) * C + c) * plane;
          const double* g = self->grad.data() + off;
          if (xn->requires_grad) {
            double* gx = xn->grad.data() + off;
            for (int64_t i = 0; i < plane; ++i) gx[i] += g[i];
          }
          if (vn->requires_grad) {
            double acc = 0.0;
            for (int64_t i = 0; i < plane; ++i) acc += g[i];
            vn->grad[c] += acc;
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor GroupedLinear(const Tensor& x, const Tensor& w, int groups, int out_c,
                     int in_c) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Check(C == groups * in_c, ErrorKind::kInvalidArgument,
        "GroupedLinear: input channel count mismatch");
  Check(w.dim(0) == groups && w.dim(1) == out_c && w.dim(2) == in_c &&
            w.dim(3) == 1,
        ErrorKind::kInvalidArgument,
        "GroupedLinear: weight must be (groups,out_c,in_c,1)");
  auto n = MakeNode(Shape{B, groups * out_c, H, W}, {x.node, w.node});
  const int64_t plane = int64_t(H) * W;
  // By-value captures: these helpers outlive this frame inside backward_fn.
  auto xoff = [C, in_c, plane](int b, int g, int ic) {
    return (int64_t(b) * C + int64_t(g) * in_c + ic) * plane;
  };
  auto ooff = [groups, out_c, plane](int b, int g, int oc) {
    return ((int64_t(b) * groups + g) * out_c + oc) * plane;
  };
  auto widx = [out_c, in_c](int g, int oc, int ic) {
    return (int64_t(g) * out_c + oc) * in_c + ic;
  };
  for (int b = 0; b < B; ++b) {
    for (int g = 0; g < groups; ++g) {
      for (int oc = 0; oc < out_c; ++oc) {
        double* out = n->value.data() + ooff(b, g, oc);
        for (int ic = 0; ic < in_c; ++ic) {
          const double wv = w.node->value[size_t(widx(g, oc, ic))];
          const double* xi = x.node->value.data() + xoff(b, g, ic);
          for (int64_t i = 0; i < plane; ++i) out[i] += wv * xi[i];
        }
      }
    }
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto xn = x.node;
    auto wn = w.node;
    n->backward_fn = [self, xn, wn, B, groups, out_c, in_c, plane, xoff, ooff,
                      widx]() {
      if (xn->requires_grad) xn->EnsureGrad();
      if (wn->requires_grad) wn->EnsureGrad();
      for (int b = 0; b < B; ++b) {
        for (int g = 0; g < groups; ++g) {
          for (int oc = 0; oc < out_c; ++oc) {
            const double* gout = self->grad.data() + ooff(b, g, oc);
            for (int ic = 0; ic < in_c; ++ic) {
              const size_t wi = size_t(widx(g, oc, ic));
              if (xn->requires_grad) {
                const double wv = wn->value[wi];
                double* gx = xn->grad.data() + xoff(b, g, ic);
                for (int64_t i = 0; i < plane; ++i) gx[i] += wv * gout[i];
              }
              if (wn->requires_grad) {
                const double* xi = xn->value.data() + xoff(b, g, ic);
                double acc = 0.0;
                for (int64_t i = 0; i < plane; ++i) acc += gout[i] * xi[i];
                wn->grad[wi] += acc;
              }
            }
          }
        }
      }
    };
  }
  return Tensor(n);
}

// ---- convolutions ---------------------------------------------------------

Tensor Conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
  const int B = x.dim(0), IC = x.dim(1), IH = x.dim(2), IW = x.dim(3);
  const int OC = w.dim(0), K = w.dim(2);
  Check(w.dim(1) == IC, ErrorKind::kInvalidArgument,
        "Conv2d: weight input channels do not match input");
  Check(w.dim(3) == K, ErrorKind::kInvalidArgument, "Conv2d: non-square kernel");
  Check(b.dim(1) == OC && b.numel() == OC, ErrorKind::kInvalidArgument,
        "Conv2d: bias must be (1,OC,1,1)");
  const ConvGeom g = CeilPadGeom(IH, IW, K, stride);
  auto n = MakeNode(Shape(B, OC, g.oh, g.ow), {x.node, w.node, b.node});
  ConvForwardCore(x.node->value.data(), B, IC, w.node->value.data(), OC, g,
                  b.node->value.data(), n->value.data(), /*accumulate=*/false);
  if (n->requires_grad) {
    Node* self = n.get();
    auto xn = x.node;
    auto wn = w.node;
    auto bn = b.node;
    n->backward_fn = [self, xn, wn, bn, B, IC, OC, g]() {
      if (xn->requires_grad) {
        xn->EnsureGrad();
        ConvBackInputCore(self->grad.data(), B, OC, wn->value.data(), IC, g,
                          xn->grad.data());
      }
      if (wn->requires_grad) {
        wn->EnsureGrad();
        ConvBackWeightCore(xn->value.data(), self->grad.data(), B, IC, OC, g,
                           wn->grad.data());
      }
      if (bn->requires_grad) {
        bn->EnsureGrad();
        AddBiasGrad(self->grad.data(), B, OC, int64_t(g.oh) * g.ow,
                    bn->grad.data());
      }
    };
  }
  return Tensor(n);
}

Tensor ConvTranspose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                       int stride) {
  const int B = x.dim(0), CI = x.dim(1), MH = x.dim(2), MW = x.dim(3);
  const int CO = w.dim(1), K = w.dim(2);
  Check(w.dim(0) == CI, ErrorKind::kInvalidArgument,
        "ConvTranspose2d: weight input channels do not match input");
  Check(w.dim(3) == K, ErrorKind::kInvalidArgument,
        "ConvTranspose2d: non-square kernel");
  Check(K >= stride, ErrorKind::kInvalidArgument,
        "ConvTranspose2d: kernel smaller than stride leaves gaps");
  Check(b.dim(1) == CO && b.numel() == CO, ErrorKind::kInvalidArgument,
        "ConvTranspose2d: bias must be (1,CO,1,1)");
  // Adjoint geometry: this op's output plays the conv input.
  const int OH = MH * stride, OW = MW * stride;
  const ConvGeom g = CeilPadGeom(OH, OW, K, stride);
  Check(g.oh == MH && g.ow == MW, ErrorKind::kInternal,
        "ConvTranspose2d: geometry mismatch");
  auto n = MakeNode(Shape(B, CO, OH, OW), {x.node, w.node, b.node});
  std::fill(n->value.begin(), n->value.end(), 0.0);
  ConvBackInputCore(x.node->value.data(), B, CI, w.node->value.data(), CO, g,
                    n->value.data());
  {  // bias per output channel
    const int64_t plane = int64_t(OH) * OW;
    for (int bb = 0; bb < B; ++bb) {
      for (int c = 0; c < CO; ++c) {
        const double bv = b.node->value[c];
        double* o = n->value.data() + (int64_t(bb) * CO + c) * plane;
        for (int64_t i = 0; i < plane; ++i) o[i] += bv;
      }
    }
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto xn = x.node;
    auto wn = w.node;
    auto bn = b.node;
    n->backward_fn = [self, xn, wn, bn, B, CI, CO, g]() {
      if (xn->requires_grad) {
        xn->EnsureGrad();
        ConvForwardCore(self->grad.data(), B, CO, wn->value.data(), CI, g,
                        nullptr, xn->grad.data(), /*accumulate=*/true);
      }
      if (wn->requires_grad) {
        wn->EnsureGrad();
        ConvBackWeightCore(self->grad.data(), xn->value.data(), B, CO, CI, g,
                           wn->grad.data());
      }
      if (bn->requires_grad) {
        bn->EnsureGrad();
        AddBiasGrad(self->grad.data(), B, CO, int64_t(g.ih) * g.iw,
                    bn->grad.data());
      }
    };
  }
  return Tensor(n);
}

// ---- data movement --------------------------------------------------------

Tensor ConcatChannels(const Tensor& a, const Tensor& b) {
  const int B = a.dim(0), CA = a.dim(1), H = a.dim(2), W = a.dim(3);
  const int CB = b.dim(1);
  Check(b.dim(0) == B && b.dim(2) == H && b.dim(3) == W,
        ErrorKind::kInvalidArgument, "ConcatChannels: spatial/batch mismatch");
  auto n = MakeNode(Shape(B, CA + CB, H, W), {a.node, b.node});
  const int64_t plane = int64_t(H) * W;
  for (int bb = 0; bb < B; ++bb) {
    std::copy_n(a.node->value.data() + int64_t(bb) * CA * plane, CA * plane,
                n->value.data() + int64_t(bb) * (CA + CB) * plane);
    std::copy_n(b.node->value.data() + int64_t(bb) * CB * plane, CB * plane,
                n->value.data() + (int64_t(bb) * (CA + CB) + CA) * plane);
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto an = a.node;
    auto bn = b.node;
    n->backward_fn = [self, an, bn, B, CA, CB, plane]() {
      for (int bb = 0; bb < B; ++bb) {
        if (an->requires_grad) {
          an->EnsureGrad();
          const double* g = self->grad.data() + int64_t(bb) * (CA + CB) * plane;
          double* ga = an->grad.data() + int64_t(bb) * CA * plane;
          for (int64_t i = 0; i < CA * plane; ++i) ga[i] += g[i];
        }
        if (bn->requires_grad) {
          bn->EnsureGrad();
          const double* g =
              self->grad.data() + (int64_t(bb) * (CA + CB) + CA) * plane;
          double* gb = bn->grad.data() + int64_t(bb) * CB * plane;
          for (int64_t i = 0; i < CB * plane; ++i) gb[i] += g[i];
        }
      }
    };
  }
  return Tensor(n);
}

Tensor SliceChannels(const Tensor& x, int c0, int c1) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Check(0 <= c0 && c0 < c1 && c1 <= C, ErrorKind::kInvalidArgument,
        "SliceChannels: bad channel range");
  const int CS = c1 - c0;
  auto n = MakeNode(Shape(B, CS, H, W), {x.node});
  const int64_t plane = int64_t(H) * W;
  for (int b = 0; b < B; ++b) {
    std::copy_n(x.node->value.data() + (int64_t(b) * C + c0) * plane,
                CS * plane, n->value.data() + int64_t(b) * CS * plane);
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto xn = x.node;
    n->backward_fn = [self, xn, B, C, c0, CS, plane]() {
      xn->EnsureGrad();
      for (int b = 0; b < B; ++b) {
        const double* g = self->grad.data() + int64_t(b) * CS * plane;
        double* gx = xn->grad.data() + (int64_t(b) * C + c0) * plane;
        for (int64_t i = 0; i < CS * plane; ++i) gx[i] += g[i];
      }
    };
  }
  return Tensor(n);
}

Tensor CropHW(const Tensor& x, int h, int w) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Check(h <= H && w <= W && h >= 1 && w >= 1, ErrorKind::kInvalidArgument,
        "CropHW: target larger than input");
  if (h == H && w == W) return x;
  auto n = MakeNode(Shape(B, C, h, w), {x.node});
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const double* src = x.node->value.data() + (int64_t(b) * C + c) * H * W;
      double* dst = n->value.data() + (int64_t(b) * C + c) * h * w;
      for (int y = 0; y < h; ++y) {
        std::copy_n(src + int64_t(y) * W, w, dst + int64_t(y) * w);
      }
    }
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto xn = x.node;
    n->backward_fn = [self, xn, B, C, H, W, h, w]() {
      xn->EnsureGrad();
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          const double* g = self->grad.data() + (int64_t(b) * C + c) * h * w;
          double* gx = xn->grad.data() + (int64_t(b) * C + c) * H * W;
          for (int y = 0; y < h; ++y) {
            for (int xx = 0; xx < w; ++xx) {
              gx[int64_t(y) * W + xx] += g[int64_t(y) * w + xx];
            }
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor Upsample2xNearest(const Tensor& x) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  auto n = MakeNode(Shape(B, C, 2 * H, 2 * W), {x.node});
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      const double* src = x.node->value.data() + (int64_t(b) * C + c) * H * W;
      double* dst = n->value.data() + (int64_t(b) * C + c) * 4 * H * W;
      for (int y = 0; y < H; ++y) {
        for (int xx = 0; xx < W; ++xx) {
          const double v = src[int64_t(y) * W + xx];
          double* d = dst + int64_t(2 * y) * 2 * W + 2 * xx;
          d[0] = v;
          d[1] = v;
          d[2 * W] = v;
          d[2 * W + 1] = v;
        }
      }
    }
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto xn = x.node;
    n->backward_fn = [self, xn, B, C, H, W]() {
      xn->EnsureGrad();
      for (int b = 0; b < B; ++b) {
        for (int c = 0; c < C; ++c) {
          const double* g = self->grad.data() + (int64_t(b) * C + c) * 4 * H * W;
          double* gx = xn->grad.data() + (int64_t(b) * C + c) * H * W;
          for (int y = 0; y < H; ++y) {
            for (int xx = 0; xx < W; ++xx) {
              const double* gs = g + int64_t(2 * y) * 2 * W + 2 * xx;
              gx[int64_t(y) * W + xx] +=
                  gs[0] + gs[1] + gs[2 * W] + gs[2 * W + 1];
            }
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor BlockToSpace(const Tensor& x, int groups) {
  const int B = x.dim(0), C = x.dim(1), Hb = x.dim(2), Wb = x.dim(3);
  Check(C == groups * 64, ErrorKind::kInvalidArgument,
        "BlockToSpace: channels must be groups*64");
  auto n = MakeNode(Shape(B, groups, 8 * Hb, 8 * Wb), {x.node});
  const int64_t in_plane = int64_t(Hb) * Wb;
  const int64_t out_plane = in_plane * 64;
  for (int b = 0; b < B; ++b) {
    for (int g = 0; g < groups; ++g) {
      double* dst = n->value.data() + (int64_t(b) * groups + g) * out_plane;
      for (int p = 0; p < 64; ++p) {
        const int r = p / 8, c = p % 8;
        const double* src =
            x.node->value.data() + (int64_t(b) * C + g * 64 + p) * in_plane;
        for (int by = 0; by < Hb; ++by) {
          for (int bx = 0; bx < Wb; ++bx) {
            dst[(int64_t(8 * by + r)) * 8 * Wb + 8 * bx + c] =
                src[int64_t(by) * Wb + bx];
          }
        }
      }
    }
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto xn = x.node;
    n->backward_fn = [self, xn, B, C, Hb, Wb, groups, in_plane, out_plane]() {
      xn->EnsureGrad();
      for (int b = 0; b < B; ++b) {
        for (int g = 0; g < groups; ++g) {
          const double* gsrc =
              self->grad.data() + (int64_t(b) * groups + g) * out_plane;
          for (int p = 0; p < 64; ++p) {
            const int r = p / 8, c = p % 8;
            double* gdst =
                xn->grad.data() + (int64_t(b) * C + g * 64 + p) * in_plane;
            for (int by = 0; by < Hb; ++by) {
              for (int bx = 0; bx < Wb; ++bx) {
                gdst[int64_t(by) * Wb + bx] +=
                    gsrc[(int64_t(8 * by + r)) * 8 * Wb + 8 * bx + c];
              }
            }
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor ChannelLinear(const Tensor& x, const std::vector<double>& m, int out_c,
                     int in_c, int groups) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Check(C == groups * in_c, ErrorKind::kInvalidArgument,
        "ChannelLinear: channel count mismatch");
  Check(static_cast<int>(m.size()) == out_c * in_c, ErrorKind::kInvalidArgument,
        "ChannelLinear: matrix size mismatch");
  auto n = MakeNode(Shape(B, groups * out_c, H, W), {x.node});
  const int64_t plane = int64_t(H) * W;
  std::fill(n->value.begin(), n->value.end(), 0.0);
  for (int b = 0; b < B; ++b) {
    for (int g = 0; g < groups; ++g) {
      for (int oc = 0; oc < out_c; ++oc) {
        double* dst =
            n->value.data() +
            (int64_t(b) * groups * out_c + g * out_c + oc) * plane;
        for (int ic = 0; ic < in_c; ++ic) {
          const double mv = m[oc * in_c + ic];
          const double* src =
              x.node->value.data() + (int64_t(b) * C + g * in_c + ic) * plane;
          for (int64_t i = 0; i < plane; ++i) dst[i] += mv * src[i];
        }
      }
    }
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto xn = x.node;
    n->backward_fn = [self, xn, m, B, C, out_c, in_c, groups, plane]() {
      xn->EnsureGrad();
      for (int b = 0; b < B; ++b) {
        for (int g = 0; g < groups; ++g) {
          for (int oc = 0; oc < out_c; ++oc) {
            const double* gsrc =
                self->grad.data() +
                (int64_t(b) * groups * out_c + g * out_c + oc) * plane;
            for (int ic = 0; ic < in_c; ++ic) {
              const double mv = m[oc * in_c + ic];
              double* gdst = xn->grad.data() +
                             (int64_t(b) * C + g * in_c + ic) * plane;
              for (int64_t i = 0; i < plane; ++i) gdst[i] += mv * gsrc[i];
            }
          }
        }
      }
    };
  }
  return Tensor(n);
}

// ---- reductions -----------------------------------------------------------

Tensor Sum(const Tensor& a) {
  auto n = MakeNode(Shape(1, 1, 1, 1), {a.node});
  double acc = 0.0;
  for (double v : a.node->value) acc += v;
  n->value[0] = acc;
  if (n->requires_grad) {
    Node* self = n.get();
    auto an = a.node;
    n->backward_fn = [self, an]() {
      an->EnsureGrad();
      const double g = self->grad[0];
      for (double& gv : an->grad) gv += g;
    };
  }
  return Tensor(n);
}

Tensor Mean(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.numel());
  return Scale(Sum(a), inv);
}

// ---- discretized Gaussian code length -------------------------------------

double GaussianIntervalProb(double v, double sigma) {
  const double av = std::abs(v);
  const double a = (av + 0.5) / sigma;
  const double b = (av - 0.5) / sigma;
  return 0.5 * (std::erfc(b * M_SQRT1_2) - std::erfc(a * M_SQRT1_2));
}

Tensor GaussianBits(const Tensor& v, const Tensor& sigma) {
  CheckSameShape(v, sigma, "GaussianBits");
  auto n = MakeNode(v.shape(), {v.node, sigma.node});
  const size_t count = n->value.size();
  for (size_t i = 0; i < count; ++i) {
    const double p =
        std::max(GaussianIntervalProb(v.node->value[i], sigma.node->value[i]),
                 kLikelihoodFloor);
    n->value[i] = -std::log2(p);
  }
  if (n->requires_grad) {
    Node* self = n.get();
    auto vn = v.node;
    auto sn = sigma.node;
    n->backward_fn = [self, vn, sn]() {
      if (vn->requires_grad) vn->EnsureGrad();
      if (sn->requires_grad) sn->EnsureGrad();
      const size_t count = self->value.size();
      for (size_t i = 0; i < count; ++i) {
        const double vv = vn->value[i], s = sn->value[i];
        const double p = GaussianIntervalProb(vv, s);
        if (p <= kLikelihoodFloor) continue;  // flat region of the floor
        const double a = (vv + 0.5) / s, b = (vv - 0.5) / s;
        const double phi_a = kInvSqrt2Pi * std::exp(-0.5 * a * a);
        const double phi_b = kInvSqrt2Pi * std::exp(-0.5 * b * b);
        const double scale = self->grad[i] / (s * p * kLn2);
        if (vn->requires_grad) vn->grad[i] += -(phi_a - phi_b) * scale;
        if (sn->requires_grad) sn->grad[i] += (phi_a * a - phi_b * b) * scale;
      }
    };
  }
  return Tensor(n);
}

}  // namespace jrc::nn
