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

#include "nn/checkpoint.h"

#include "nn/adam.h"
#include "util/bytes.h"
#include "util/error.h"

namespace jrc::nn {

static constexpr char kMagic[4] = {'J', 'R', 'N', 'N'};

std::vector<uint8_t> SerializeCheckpoint(Checkpoint& ckpt) {
  ByteWriter w;
  w.Bytes(kMagic, 4);
  w.U32le(kCheckpointVersion);
  w.U32le(uint32_t(ckpt.config_json.size()));
  w.Str(ckpt.config_json);
  w.U32le(uint32_t(ckpt.params.size()));
  for (const NamedArray& p : ckpt.params) {
    w.U32le(uint32_t(p.name.size()));
    w.Str(p.name);
    w.U32le(uint32_t(p.dims.size()));
    int64_t expect = 1;
    for (int d : p.dims) {
      Check(d > 0, ErrorKind::kInvalidArgument, "checkpoint: bad dim");
      w.U32le(uint32_t(d));
      expect *= d;
    }
    Check(expect == int64_t(p.data.size()), ErrorKind::kInvalidArgument,
          "checkpoint: dims do not match data for " + p.name);
    for (double v : p.data) w.F64le(v);
  }
  ckpt.hash = Sha256::Of(w.data().data(), w.size());
  w.Bytes(ckpt.hash.data(), ckpt.hash.size());
  return w.Take();
}

Checkpoint ParseCheckpoint(const uint8_t* data, size_t size) {
  Check(size >= 4 + 32, ErrorKind::kCorrupt, "checkpoint: too short");
  ByteReader r(data, size);
  char magic[4];
  r.Bytes(magic, 4);
  Check(std::memcmp(magic, kMagic, 4) == 0, ErrorKind::kFormat,
        "checkpoint: bad magic");
  const uint32_t version = r.U32le();
  Check(version == kCheckpointVersion, ErrorKind::kUnsupported,
        "checkpoint: unsupported version");
  Checkpoint ckpt;
  ckpt.config_json = r.Str(r.U32le());
  const uint32_t count = r.U32le();
  ckpt.params.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    NamedArray p;
    p.name = r.Str(r.U32le());
    const uint32_t ndims = r.U32le();
    Check(ndims >= 1 && ndims <= 4, ErrorKind::kCorrupt,
          "checkpoint: bad rank");
    int64_t numel = 1;
    for (uint32_t d = 0; d < ndims; ++d) {
      const uint32_t dim = r.U32le();
      Check(dim >= 1 && dim <= (1u << 24), ErrorKind::kCorrupt,
            "checkpoint: bad dim");
      p.dims.push_back(int(dim));
      numel *= dim;
    }
    Check(uint64_t(numel) * 8 <= r.remaining(), ErrorKind::kCorrupt,
          "checkpoint: truncated parameter data");
    p.data.resize(size_t(numel));
    for (double& v : p.data) v = r.F64le();
    ckpt.params.push_back(std::move(p));
  }
  const size_t body = r.pos();
  Check(r.remaining() == 32, ErrorKind::kCorrupt,
        "checkpoint: trailing bytes or missing hash");
  Sha256Digest stored;
  r.Bytes(stored.data(), stored.size());
  ckpt.hash = Sha256::Of(data, body);
  Check(stored == ckpt.hash, ErrorKind::kCorrupt,
        "checkpoint: content hash mismatch");
  return ckpt;
}

void SaveCheckpointFile(const std::string& path, Checkpoint& ckpt) {
  const std::vector<uint8_t> bytes = SerializeCheckpoint(ckpt);
  WriteFileBytes(path, bytes.data(), bytes.size());
}

Checkpoint LoadCheckpointFile(const std::string& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  return ParseCheckpoint(bytes.data(), bytes.size());
}

void ExportParameters(const std::vector<Parameter*>& params,
                      std::vector<NamedArray>* out) {
  for (const Parameter* p : params) {
    NamedArray a;
    a.name = p->name;
    for (int d = 0; d < 4; ++d) a.dims.push_back(p->tensor.dim(d));
    a.data = p->tensor.data();
    out->push_back(std::move(a));
  }
}

void ImportParameters(const std::vector<Parameter*>& params,
                      const std::vector<NamedArray>& arrays) {
  for (Parameter* p : params) {
    const NamedArray* found = nullptr;
    for (const NamedArray& a : arrays) {
      if (a.name == p->name) {
        found = &a;
        break;
      }
    }
    Check(found != nullptr, ErrorKind::kModelMismatch,
          "checkpoint missing parameter: " + p->name);
    Check(int64_t(found->data.size()) == p->tensor.numel(),
          ErrorKind::kModelMismatch,
          "checkpoint shape mismatch for: " + p->name);
    p->tensor.data() = found->data;
  }
}

}  // namespace jrc::nn
