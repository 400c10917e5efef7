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

#include "eval/sweep.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "eval/metrics.h"
#include "jpeg/jpeg.h"
#include "util/error.h"

namespace jrc::eval {

namespace {

constexpr const char* kCsvComment =
    "# psnr_db and ms_ssim are measured against the input JPEG's "
    "reconstruction (the compression target), not the pre-JPEG original; "
    "lambda_r = lambda_d = 0 tags the lossless-mode row";
constexpr const char* kCsvHeader =
    "lambda_r,lambda_d,bpp,psnr_db,ms_ssim,lossless_bpp,jpeg_bpp";

RgbImage DecodeToRgb(const jpeg::JpegImage& img) {
  RgbImage out;
  out.width = img.width;
  out.height = img.height;
  out.rgb = jpeg::ReconstructRgb(img);
  return out;
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseDouble(const std::string& s) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    Check(used == s.size(), ErrorKind::kFormat, "bad CSV number: " + s);
    return v;
  } catch (const std::exception&) {
    Check(false, ErrorKind::kFormat, "bad CSV number: " + s);
    return 0.0;
  }
}

}  // namespace

std::vector<RdRow> RdSweep(const codec::CodecModel& lossless_model,
                           const std::vector<SweepEntry>& lossy,
                           const std::vector<std::vector<uint8_t>>& test_jpegs) {
  Check(!test_jpegs.empty(), ErrorKind::kInvalidArgument, "empty test set");

  double jpeg_bpp = 0.0, lossless_bpp = 0.0;
  std::vector<RgbImage> references;
  references.reserve(test_jpegs.size());
  for (const auto& bytes : test_jpegs) {
    const jpeg::JpegImage img = jpeg::ParseJpeg(bytes.data(), bytes.size());
    const double pixels = double(img.width) * img.height;
    jpeg_bpp += double(bytes.size()) * 8.0 / pixels;
    const codec::CompressResult cr = codec::Compress(
        bytes.data(), bytes.size(), lossless_model, codec::CodecMode::kLossless);
    lossless_bpp += double(cr.container.size()) * 8.0 / pixels;
    references.push_back(DecodeToRgb(img));
  }
  jpeg_bpp /= double(test_jpegs.size());
  lossless_bpp /= double(test_jpegs.size());

  std::vector<RdRow> rows;
  RdRow base;
  base.lambda_r = 0.0;
  base.lambda_d = 0.0;
  base.bpp = lossless_bpp;
  base.psnr_db = std::numeric_limits<double>::infinity();
  base.ms_ssim = 1.0;
  base.lossless_bpp = lossless_bpp;
  base.jpeg_bpp = jpeg_bpp;
  rows.push_back(base);

  for (const SweepEntry& entry : lossy) {
    Check(entry.model != nullptr, ErrorKind::kInvalidArgument,
          "sweep entry has no model");
    RdRow row;
    row.lambda_r = entry.point.lambda_r;
    row.lambda_d = entry.point.lambda_d;
    row.lossless_bpp = lossless_bpp;
    row.jpeg_bpp = jpeg_bpp;
    for (size_t i = 0; i < test_jpegs.size(); ++i) {
      const auto& bytes = test_jpegs[i];
      const codec::CompressResult cr = codec::Compress(
          bytes.data(), bytes.size(), *entry.model, codec::CodecMode::kLossy);
      const auto decoded =
          codec::Decompress(cr.container.data(), cr.container.size(),
                            *entry.model);
      const RgbImage out = DecodeToRgb(
          jpeg::ParseJpeg(decoded.data(), decoded.size()));
      const double pixels = double(out.width) * out.height;
      row.bpp += double(cr.container.size()) * 8.0 / pixels;
      const double psnr = Psnr(references[i], out);
      // An exact lossy hit would send the mean to infinity; cap per image
      // at the quantization-noise ceiling instead of poisoning the average.
      row.psnr_db += std::isinf(psnr) ? 100.0 : psnr;
      row.ms_ssim += MsSsim(references[i], out);
    }
    const double n = double(test_jpegs.size());
    row.bpp /= n;
    row.psnr_db /= n;
    row.ms_ssim /= n;
    rows.push_back(row);
  }
  return rows;
}

std::string WriteRdCsv(const std::vector<RdRow>& rows) {
  std::string out = std::string(kCsvComment) + "\n" + kCsvHeader + "\n";
  for (const RdRow& r : rows) {
    out += FormatDouble(r.lambda_r) + "," + FormatDouble(r.lambda_d) + "," +
           FormatDouble(r.bpp) + "," + FormatDouble(r.psnr_db) + "," +
           FormatDouble(r.ms_ssim) + "," + FormatDouble(r.lossless_bpp) + "," +
           FormatDouble(r.jpeg_bpp) + "\n";
  }
  return out;
}

std::vector<RdRow> ParseRdCsv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  bool saw_header = false;
  std::vector<RdRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      Check(line == kCsvHeader, ErrorKind::kFormat,
            "unexpected CSV header: " + line);
      saw_header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    Check(fields.size() == 7, ErrorKind::kFormat,
          "expected 7 CSV fields, got " + std::to_string(fields.size()));
    RdRow r;
    r.lambda_r = ParseDouble(fields[0]);
    r.lambda_d = ParseDouble(fields[1]);
    r.bpp = ParseDouble(fields[2]);
    r.psnr_db = ParseDouble(fields[3]);
    r.ms_ssim = ParseDouble(fields[4]);
    r.lossless_bpp = ParseDouble(fields[5]);
    r.jpeg_bpp = ParseDouble(fields[6]);
    rows.push_back(r);
  }
  Check(saw_header, ErrorKind::kFormat, "CSV missing header line");
  return rows;
}

}  // namespace jrc::eval
