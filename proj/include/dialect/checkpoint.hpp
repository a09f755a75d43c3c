// Copyright 2026 The dialect-adapt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Checkpoint file layout. All integers are little-endian; strings are a u32
// byte length followed by UTF-8 bytes.
//
//   magic            8 bytes  "DIALCKPT"
//   format version   u32      1
//   scalar bytes     u32      4 (IEEE-754 binary32)
//   vocab size       u32
//   embedding size   u32
//   hidden size      u32
//   layers           u32
//   flag mode        u8       0 plain, 1 flagged
//   dialect          string   target dialect of a transfer model, else empty
//   vocabulary       u32 count, then per entry a u8 kind and
//                      special/boundary: string text
//                      flag:             string id, string name
//                      char:             u32 code point
//   tensor count     u32
//   tensors          per tensor: string name, u32 rows, u32 cols, then
//                    rows*cols binary32 values in row-major order
//
// Tensors appear in ModelParams::ForEach order.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dialect/model.hpp"
#include "dialect/vocabulary.hpp"

namespace dialect {

enum class FlagMode { kPlain = 0, kFlagged = 1 };

FlagMode ParseFlagMode(const std::string& name);
std::string FlagModeName(FlagMode mode);

struct Checkpoint {
  Vocabulary vocab;
  ModelParams<float> params;
  FlagMode mode = FlagMode::kPlain;
  std::string dialect;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void WriteCheckpoint(std::ostream& out, const Checkpoint& ckpt);
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint ReadCheckpoint(std::istream& in);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

/// The serialized tensor records (name, shape, values) of one parameter group.
std::string SerializeGroup(const ModelParams<float>& params, const std::string& group);

}  // namespace dialect
