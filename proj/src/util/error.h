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

#ifndef JRC_UTIL_ERROR_H_
#define JRC_UTIL_ERROR_H_

#include <stdexcept>
#include <string>

namespace jrc {

enum class ErrorKind {
  kIo,
  kFormat,         // malformed bitstream/file (bad magic, bad lengths)
  kUnsupported,    // valid but out-of-scope (progressive JPEG, 4:4:4, ...)
  kCorrupt,        // truncated stream, checksum mismatch, invalid Huffman code
  kModelMismatch,  // container hash does not match the loaded checkpoint
  kInvalidArgument,
  kNumeric,        // non-finite loss during training
  kInternal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void Check(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) Fail(kind, message);
}

}  // namespace jrc

#endif  // JRC_UTIL_ERROR_H_
