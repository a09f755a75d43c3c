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

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dialect::utf8 {

// Throws Error(kParse) on invalid UTF-8.
std::u32string Decode(std::string_view text);
std::string Encode(std::u32string_view text);
std::string Encode(char32_t cp);

// Splits on ASCII whitespace, dropping empty fields.
std::vector<std::string> SplitWords(std::string_view line);
std::string JoinWords(const std::vector<std::string>& words);

bool IsSpace(char32_t cp);

}  // namespace dialect::utf8
