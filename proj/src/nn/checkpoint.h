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

#ifndef JRC_NN_CHECKPOINT_H_
#define JRC_NN_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "util/sha256.h"

namespace jrc::nn {

struct NamedArray {
  std::string name;
  std::vector<int> dims;
  std::vector<double> data;
};

// On-disk parameter bundle.
//
//   "JRNN" | version u32 | config_len u32 | config JSON bytes |
//   param_count u32 | { name_len u32 | name | ndims u32 | dims u32[] |
//   doubles f64le[] }* | sha256 of everything above
//
// The trailing digest doubles as the model identity hash.
struct Checkpoint {
  std::string config_json;
  std::vector<NamedArray> params;
  Sha256Digest hash{};  // filled in by Serialize/Parse
};

inline constexpr uint32_t kCheckpointVersion = 1;

std::vector<uint8_t> SerializeCheckpoint(Checkpoint& ckpt);
Checkpoint ParseCheckpoint(const uint8_t* data, size_t size);

void SaveCheckpointFile(const std::string& path, Checkpoint& ckpt);
Checkpoint LoadCheckpointFile(const std::string& path);

struct Parameter;  // nn/adam.h

// Snapshot live parameters as named arrays (shape = the tensor's 4 dims).
void ExportParameters(const std::vector<Parameter*>& params,
                      std::vector<NamedArray>* out);
// Restore by name; every parameter must be present with matching element
// count or loading fails with kModelMismatch.
void ImportParameters(const std::vector<Parameter*>& params,
                      const std::vector<NamedArray>& arrays);

}  // namespace jrc::nn

#endif  // JRC_NN_CHECKPOINT_H_
