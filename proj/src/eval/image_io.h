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

#ifndef JRC_EVAL_IMAGE_IO_H_
#define JRC_EVAL_IMAGE_IO_H_

#include <cstdint>
#include <string>
#include <vector>

namespace jrc::eval {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // interleaved, row-major, 3 bytes per pixel

  int64_t PixelCount() const { return int64_t(width) * height; }
  bool operator==(const RgbImage&) const = default;
};

// Binary PPM (P6, maxval 255).
RgbImage ParsePpm(const uint8_t* data, size_t size);
std::vector<uint8_t> SerializePpm(const RgbImage& image);

// PNG subset: 8-bit truecolor with or without alpha (alpha is dropped),
// non-interlaced, single IHDR/IDAT*/IEND stream. Chunk CRCs are verified.
RgbImage ParsePng(const uint8_t* data, size_t size);

// Dispatches on the magic bytes (PPM or PNG).
RgbImage ParseImage(const uint8_t* data, size_t size);
RgbImage ReadImageFile(const std::string& path);

}  // namespace jrc::eval

#endif  // JRC_EVAL_IMAGE_IO_H_
