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

#include "dialect/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "dialect/binary_io.hpp"
#include "dialect/error.hpp"

namespace dialect {
namespace {

constexpr char kMagic[8] = {'D', 'I', 'A', 'L', 'C', 'K', 'P', 'T'};

void WriteTensor(std::ostream& out, const std::string& name, const Matrix<float>& m) {
  binary::WriteString(out, name);
  binary::WriteU32(out, static_cast<std::uint32_t>(m.rows()));
  binary::WriteU32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) binary::WriteF32(out, m(r, c));
  }
}

}  // namespace

FlagMode ParseFlagMode(const std::string& name) {
  if (name == "flagged" || name == "flags") return FlagMode::kFlagged;
  if (name == "plain" || name == "none") return FlagMode::kPlain;
  throw Error(ErrorCode::kInvalidArgument, "unknown flag mode '" + name + "' (expected flagged or plain)");
}

std::string FlagModeName(FlagMode mode) { return mode == FlagMode::kFlagged ? "flagged" : "plain"; }

void WriteCheckpoint(std::ostream& out, const Checkpoint& ckpt) {
  const auto& shape = ckpt.params.shape;
  if (shape.vocab_size != ckpt.vocab.size()) {
    throw Error(ErrorCode::kCheckpoint, "model and vocabulary sizes differ");
  }
  out.write(kMagic, sizeof kMagic);
  binary::WriteU32(out, kCheckpointVersion);
  binary::WriteU32(out, sizeof(float));
  binary::WriteU32(out, static_cast<std::uint32_t>(shape.vocab_size));
  binary::WriteU32(out, static_cast<std::uint32_t>(shape.embedding_size));
  binary::WriteU32(out, static_cast<std::uint32_t>(shape.hidden_size));
  binary::WriteU32(out, static_cast<std::uint32_t>(shape.layers));
  binary::WriteU8(out, static_cast<std::uint8_t>(ckpt.mode));
  binary::WriteString(out, ckpt.dialect);
  ckpt.vocab.Write(out);
  std::uint32_t count = 0;
  ckpt.params.ForEach([&](const std::string&, const std::string&, const Matrix<float>&) { ++count; });
  binary::WriteU32(out, count);
  ckpt.params.ForEach([&](const std::string& name, const std::string&, const Matrix<float>& m) {
    WriteTensor(out, name, m);
  });
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  WriteCheckpoint(out, ckpt);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Checkpoint ReadCheckpoint(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::kCheckpoint, "not a checkpoint file");
  }
  std::uint32_t version = binary::ReadU32(in);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  if (binary::ReadU32(in) != sizeof(float)) throw Error(ErrorCode::kCheckpoint, "unsupported scalar size");
  ModelShape shape;
  shape.vocab_size = binary::ReadU32(in);
  shape.embedding_size = binary::ReadU32(in);
  shape.hidden_size = binary::ReadU32(in);
  shape.layers = binary::ReadU32(in);
  if (shape.embedding_size > 65536 || shape.hidden_size > 65536 || shape.layers > 64) {
    throw Error(ErrorCode::kCheckpoint, "implausible model dimensions");
  }

  Checkpoint ckpt;
  std::uint8_t mode = binary::ReadU8(in);
  if (mode > 1) throw Error(ErrorCode::kCheckpoint, "bad flag mode");
  ckpt.mode = static_cast<FlagMode>(mode);
  ckpt.dialect = binary::ReadString(in);
  ckpt.vocab = Vocabulary::Read(in);
  if (ckpt.vocab.size() != shape.vocab_size) {
    throw Error(ErrorCode::kCheckpoint, "vocabulary does not match the model's vocabulary size");
  }
  ckpt.params = ModelParams<float>::Zeros(shape);

  std::uint32_t count = binary::ReadU32(in);
  std::uint32_t expected = 0;
  ckpt.params.ForEach([&](const std::string&, const std::string&, const Matrix<float>&) { ++expected; });
  if (count != expected) throw Error(ErrorCode::kCheckpoint, "unexpected tensor count");
  ckpt.params.ForEach([&](const std::string& name, const std::string&, Matrix<float>& m) {
    std::string stored = binary::ReadString(in);
    if (stored != name) throw Error(ErrorCode::kCheckpoint, "expected tensor " + name + ", found " + stored);
    std::uint32_t rows = binary::ReadU32(in);
    std::uint32_t cols = binary::ReadU32(in);
    if (rows != m.rows() || cols != m.cols()) {
      throw Error(ErrorCode::kCheckpoint, "shape mismatch for tensor " + name);
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = binary::ReadF32(in);
    }
  });
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorCode::kCheckpoint, "trailing bytes");
  return ckpt;
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return ReadCheckpoint(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string SerializeGroup(const ModelParams<float>& params, const std::string& group) {
  std::ostringstream out(std::ios::binary);
  bool found = false;
  params.ForEach([&](const std::string& name, const std::string& g, const Matrix<float>& m) {
    if (g != group) return;
    found = true;
    WriteTensor(out, name, m);
  });
  if (!found) throw Error(ErrorCode::kInvalidArgument, "unknown parameter group '" + group + "'");
  return out.str();
}

}  // namespace dialect
