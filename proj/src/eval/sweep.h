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

#ifndef JRC_EVAL_SWEEP_H_
#define JRC_EVAL_SWEEP_H_

#include <string>
#include <vector>

#include "codec/codec.h"
#include "train/losses.h"

namespace jrc::eval {

// One averaged rate-distortion measurement. bpp counts actual container
// bytes against the original pixel count; psnr_db and ms_ssim compare the
// decoded output with the input JPEG's reconstruction (the compression
// target), so the lossless row reads +inf / 1. The lossless row is tagged
// lambda_r = lambda_d = 0.
struct RdRow {
  double lambda_r = 0.0;
  double lambda_d = 0.0;
  double bpp = 0.0;
  double psnr_db = 0.0;
  double ms_ssim = 0.0;
  double lossless_bpp = 0.0;  // same model family, lossless mode
  double jpeg_bpp = 0.0;      // Huffman-coded input files
};

struct SweepEntry {
  train::TradeoffPoint point;
  const codec::CodecModel* model = nullptr;
};

// Runs every lossy checkpoint plus the lossless baseline over the test
// set and averages per row. Emits the lossless row first.
std::vector<RdRow> RdSweep(const codec::CodecModel& lossless_model,
                           const std::vector<SweepEntry>& lossy,
                           const std::vector<std::vector<uint8_t>>& test_jpegs);

// CSV with a comment header stating the metric reference; doubles are
// printed round-trip exact and reparse to identical values.
std::string WriteRdCsv(const std::vector<RdRow>& rows);
std::vector<RdRow> ParseRdCsv(const std::string& csv);

}  // namespace jrc::eval

#endif  // JRC_EVAL_SWEEP_H_
