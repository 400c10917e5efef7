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

#include "eval/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "util/error.h"

namespace jrc::eval {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (k1 * range)^2, range = 1
constexpr double kC2 = 0.03 * 0.03;
constexpr int kScales = 5;
constexpr std::array<double, kScales> kWeights = {0.0448, 0.2856, 0.3001,
                                                 0.2363, 0.1333};

struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;

  double& At(int y, int x) { return v[size_t(y) * w + x]; }
  double At(int y, int x) const { return v[size_t(y) * w + x]; }
};

std::array<double, kWindow> GaussKernel() {
  std::array<double, kWindow> k{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = double(i) - (kWindow - 1) / 2.0;
    k[size_t(i)] = std::exp(-0.5 * d * d / (kSigma * kSigma));
    sum += k[size_t(i)];
  }
  for (double& x : k) x /= sum;
  return k;
}

// Valid-only separable Gaussian blur: output (h-10) x (w-10).
Plane Blur(const Plane& p) {
  static const std::array<double, kWindow> kKernel = GaussKernel();
  Plane tmp;  // horizontal pass
  tmp.h = p.h;
  tmp.w = p.w - (kWindow - 1);
  tmp.v.assign(size_t(tmp.h) * tmp.w, 0.0);
  for (int y = 0; y < tmp.h; ++y)
    for (int x = 0; x < tmp.w; ++x) {
      double s = 0.0;
      for (int t = 0; t < kWindow; ++t) s += kKernel[size_t(t)] * p.At(y, x + t);
      tmp.At(y, x) = s;
    }
  Plane out;
  out.h = p.h - (kWindow - 1);
  out.w = tmp.w;
  out.v.assign(size_t(out.h) * out.w, 0.0);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int t = 0; t < kWindow; ++t) s += kKernel[size_t(t)] * tmp.At(y + t, x);
      out.At(y, x) = s;
    }
  return out;
}

Plane MulPlanes(const Plane& a, const Plane& b) {
  Plane out = a;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= b.v[i];
  return out;
}

// 2x2 mean pooling after replicating the last row/column to even dims.
Plane Halve(const Plane& p) {
  const int he = p.h + (p.h & 1), we = p.w + (p.w & 1);
  Plane out;
  out.h = he / 2;
  out.w = we / 2;
  out.v.assign(size_t(out.h) * out.w, 0.0);
  auto at = [&](int y, int x) {
    return p.At(std::min(y, p.h - 1), std::min(x, p.w - 1));
  };
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      out.At(y, x) = 0.25 * (at(2 * y, 2 * x) + at(2 * y, 2 * x + 1) +
                             at(2 * y + 1, 2 * x) + at(2 * y + 1, 2 * x + 1));
  return out;
}

double MeanOf(const Plane& p) {
  double s = 0.0;
  for (double v : p.v) s += v;
  return s / double(p.v.size());
}

// Mean luminance*cs and mean cs over all window positions of one scale.
void SsimScale(const Plane& a, const Plane& b, double* mean_ssim,
               double* mean_cs) {
  const Plane mu_a = Blur(a), mu_b = Blur(b);
  const Plane e_aa = Blur(MulPlanes(a, a));
  const Plane e_bb = Blur(MulPlanes(b, b));
  const Plane e_ab = Blur(MulPlanes(a, b));
  double ssim_sum = 0.0, cs_sum = 0.0;
  for (size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i], mb = mu_b.v[i];
    const double num0 = 2.0 * ma * mb, den0 = ma * ma + mb * mb;
    const double lum = (num0 + kC1) / (den0 + kC1);
    const double cs = (2.0 * e_ab.v[i] - num0 + kC2) /
                      (e_aa.v[i] + e_bb.v[i] - den0 + kC2);
    ssim_sum += lum * cs;
    cs_sum += cs;
  }
  *mean_ssim = ssim_sum / double(mu_a.v.size());
  *mean_cs = cs_sum / double(mu_a.v.size());
}

Plane ChannelPlane(const RgbImage& img, int channel) {
  Plane p;
  p.h = img.height;
  p.w = img.width;
  p.v.resize(size_t(p.h) * p.w);
  for (size_t i = 0; i < p.v.size(); ++i)
    p.v[i] = double(img.rgb[i * 3 + size_t(channel)]) / 255.0;
  return p;
}

}  // namespace

double Psnr(const RgbImage& a, const RgbImage& b) {
  Check(a.width == b.width && a.height == b.height,
        ErrorKind::kInvalidArgument, "image dims differ");
  double se = 0.0;
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = (double(a.rgb[i]) - double(b.rgb[i])) / 255.0;
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / double(a.rgb.size());
  return 10.0 * std::log10(1.0 / mse);
}

double MsSsim(const RgbImage& a, const RgbImage& b) {
  Check(a.width == b.width && a.height == b.height,
        ErrorKind::kInvalidArgument, "image dims differ");
  Check(a.width >= 176 && a.height >= 176, ErrorKind::kInvalidArgument,
        "multiscale SSIM needs at least 176x176 input");
  double result = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    Plane pa = ChannelPlane(a, ch), pb = ChannelPlane(b, ch);
    double value = 1.0;
    for (int scale = 0; scale < kScales; ++scale) {
      if (scale > 0) {
        pa = Halve(pa);
        pb = Halve(pb);
      }
      double mean_ssim = 0.0, mean_cs = 0.0;
      SsimScale(pa, pb, &mean_ssim, &mean_cs);
      const double term =
          scale + 1 == kScales ? std::max(mean_ssim, 0.0) : std::max(mean_cs, 0.0);
      value *= std::pow(term, kWeights[size_t(scale)]);
    }
    result += value;
  }
  return result / 3.0;
}

}  // namespace jrc::eval
