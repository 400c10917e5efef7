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

#ifndef JRC_EVAL_CORPUS_H_
#define JRC_EVAL_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "eval/image_io.h"

namespace jrc::eval {

// Recipe for a training/evaluation tile set. The output is a pure function
// of the manifest: seeded crop positions, fixed encoder settings.
struct CorpusManifest {
  std::vector<std::string> sources;  // PPM or PNG files
  int crop_size = 256;
  int quality = 75;
  uint64_t seed = 1;
  int crops_per_source = 1;
  std::string out_dir;

  std::string ToJson() const;
  static CorpusManifest FromJson(const std::string& json);
};

// Crops each source and encodes the crops as baseline JPEGs through the
// forward path (BT.601 conversion, 2x2 box chroma subsampling, quality-
// scaled standard tables). Returns the serialized tiles in manifest order.
std::vector<std::vector<uint8_t>> MakeCorpusTiles(const CorpusManifest& m);

// Same, but writes tile_NNNNN.jpg files under out_dir and returns paths.
std::vector<std::string> PrepareCorpus(const CorpusManifest& m);

}  // namespace jrc::eval

#endif  // JRC_EVAL_CORPUS_H_
