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

#include "eval/corpus.h"

#include <cstdio>
#include <filesystem>

#include "jpeg/jpeg.h"
#include "json.hpp"
#include "util/bytes.h"
#include "util/error.h"
#include "util/rng.h"

namespace jrc::eval {

std::string CorpusManifest::ToJson() const {
  nlohmann::json j;
  j["sources"] = sources;
  j["crop_size"] = crop_size;
  j["quality"] = quality;
  j["seed"] = std::to_string(seed);  // JSON numbers lose 64-bit precision
  j["crops_per_source"] = crops_per_source;
  j["out_dir"] = out_dir;
  return j.dump(2);
}

CorpusManifest CorpusManifest::FromJson(const std::string& json) {
  CorpusManifest m;
  try {
    const nlohmann::json j = nlohmann::json::parse(json);
    m.sources = j.at("sources").get<std::vector<std::string>>();
    m.crop_size = j.at("crop_size").get<int>();
    m.quality = j.at("quality").get<int>();
    m.seed = std::stoull(j.at("seed").get<std::string>());
    m.crops_per_source = j.at("crops_per_source").get<int>();
    m.out_dir = j.at("out_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    Check(false, ErrorKind::kFormat,
          std::string("bad corpus manifest: ") + e.what());
  } catch (const std::exception& e) {
    Check(false, ErrorKind::kFormat,
          std::string("bad corpus manifest: ") + e.what());
  }
  Check(m.crop_size >= 16 && m.crop_size % 16 == 0, ErrorKind::kInvalidArgument,
        "crop size must be a positive multiple of 16");
  Check(m.quality >= 1 && m.quality <= 100, ErrorKind::kInvalidArgument,
        "quality must be in [1,100]");
  Check(m.crops_per_source >= 1, ErrorKind::kInvalidArgument,
        "crops_per_source must be positive");
  return m;
}

std::vector<std::vector<uint8_t>> MakeCorpusTiles(const CorpusManifest& m) {
  Check(m.crop_size >= 16, ErrorKind::kInvalidArgument, "crop size too small");
  const jpeg::QuantTable ql =
      jpeg::IjgScaleTable(jpeg::AnnexKLumaQuant(), m.quality);
  const jpeg::QuantTable qc =
      jpeg::IjgScaleTable(jpeg::AnnexKChromaQuant(), m.quality);
  std::vector<std::vector<uint8_t>> tiles;
  uint64_t tile_index = 0;
  for (const std::string& path : m.sources) {
    const RgbImage src = ReadImageFile(path);
    Check(src.width >= m.crop_size && src.height >= m.crop_size,
          ErrorKind::kInvalidArgument,
          "source image smaller than the crop size: " + path);
    for (int k = 0; k < m.crops_per_source; ++k, ++tile_index) {
      Rng rng(m.seed, tile_index);
      const int x0 = int(rng.NextBelow(uint64_t(src.width - m.crop_size + 1)));
      const int y0 = int(rng.NextBelow(uint64_t(src.height - m.crop_size + 1)));
      std::vector<uint8_t> crop(size_t(m.crop_size) * m.crop_size * 3);
      for (int y = 0; y < m.crop_size; ++y) {
        const uint8_t* src_row =
            src.rgb.data() + (size_t(y0 + y) * src.width + x0) * 3;
        std::copy(src_row, src_row + size_t(m.crop_size) * 3,
                  crop.data() + size_t(y) * m.crop_size * 3);
      }
      tiles.push_back(jpeg::SerializeJpeg(
          jpeg::EncodeRgb(crop.data(), m.crop_size, m.crop_size, ql, qc)));
    }
  }
  return tiles;
}

std::vector<std::string> PrepareCorpus(const CorpusManifest& m) {
  Check(!m.out_dir.empty(), ErrorKind::kInvalidArgument,
        "manifest has no output directory");
  std::filesystem::create_directories(m.out_dir);
  const auto tiles = MakeCorpusTiles(m);
  std::vector<std::string> paths;
  for (size_t i = 0; i < tiles.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "tile_%05zu.jpg", i);
    std::string path = (std::filesystem::path(m.out_dir) / name).string();
    WriteFileBytes(path, tiles[i].data(), tiles[i].size());
    paths.push_back(std::move(path));
  }
  return paths;
}

}  // namespace jrc::eval
