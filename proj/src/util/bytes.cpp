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

#include "util/bytes.h"

#include <cstdio>

namespace jrc {

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  Check(f != nullptr, ErrorKind::kIo, "cannot open " + path);
  std::fseek(f, 0, SEEK_END);
  const long size = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<uint8_t> out(size > 0 ? size_t(size) : 0);
  const size_t got = out.empty() ? 0 : std::fread(out.data(), 1, out.size(), f);
  std::fclose(f);
  Check(got == out.size(), ErrorKind::kIo, "short read from " + path);
  return out;
}

void WriteFileBytes(const std::string& path, const uint8_t* data, size_t size) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  Check(f != nullptr, ErrorKind::kIo, "cannot create " + path);
  const size_t put = size == 0 ? 0 : std::fwrite(data, 1, size, f);
  const int rc = std::fclose(f);
  Check(put == size && rc == 0, ErrorKind::kIo, "short write to " + path);
}

}  // namespace jrc
