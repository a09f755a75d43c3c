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

// Little-endian primitives for the checkpoint format.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "dialect/error.hpp"

namespace dialect::binary {

inline void WriteU8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

inline void WriteU32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void WriteU64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void WriteString(std::ostream& out, const std::string& s) {
  WriteU32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint8_t ReadU8(std::istream& in) {
  int c = in.get();
  if (c == std::char_traits<char>::eof()) throw Error(ErrorCode::kCheckpoint, "unexpected end of file");
  return static_cast<std::uint8_t>(c);
}

inline std::uint32_t ReadU32(std::istream& in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(ReadU8(in)) << (8 * i);
  return v;
}

inline std::uint64_t ReadU64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(ReadU8(in)) << (8 * i);
  return v;
}

inline std::string ReadString(std::istream& in, std::uint32_t max_len = 1u << 20) {
  std::uint32_t n = ReadU32(in);
  if (n > max_len) throw Error(ErrorCode::kCheckpoint, "string length out of range");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (static_cast<std::uint32_t>(in.gcount()) != n) {
    throw Error(ErrorCode::kCheckpoint, "unexpected end of file");
  }
  return s;
}

inline void WriteF32(std::ostream& out, float v) { WriteU32(out, std::bit_cast<std::uint32_t>(v)); }
inline void WriteF64(std::ostream& out, double v) { WriteU64(out, std::bit_cast<std::uint64_t>(v)); }
inline float ReadF32(std::istream& in) { return std::bit_cast<float>(ReadU32(in)); }
inline double ReadF64(std::istream& in) { return std::bit_cast<double>(ReadU64(in)); }

}  // namespace dialect::binary
