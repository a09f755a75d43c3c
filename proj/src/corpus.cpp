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

#include "dialect/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "dialect/error.hpp"
#include "dialect/random.hpp"
#include "dialect/utf8.hpp"

namespace dialect {
namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

void StripCarriageReturn(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool IsBlank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return utf8::IsSpace(static_cast<unsigned char>(c)); });
}

std::ifstream OpenInput(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream OpenOutput(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

// Accepts a literal single character or U+XXXX / 0xXXXX.
char32_t ParseCharField(const std::string& field, std::size_t line_no) {
  if ((field.size() > 2) && (field.starts_with("U+") || field.starts_with("u+") ||
                             field.starts_with("0x") || field.starts_with("0X"))) {
    try {
      std::size_t used = 0;
      unsigned long value = std::stoul(field.substr(2), &used, 16);
      if (used == field.size() - 2 && value <= 0x10FFFF) return static_cast<char32_t>(value);
    } catch (const std::exception&) {
    }
    throw ParseError(ErrorCode::kParse, line_no, "bad code point '" + field + "'");
  }
  std::u32string decoded;
  try {
    decoded = utf8::Decode(field);
  } catch (const Error& e) {
    throw ParseError(ErrorCode::kParse, line_no, e.what());
  }
  if (decoded.size() != 1) {
    throw ParseError(ErrorCode::kParse, line_no,
                     "expected a single character, got '" + field + "'");
  }
  return decoded[0];
}

std::string Hex(char32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
  return buf;
}

}  // namespace

DialectManifest::DialectManifest(std::vector<DialectInfo> dialects) : dialects_(std::move(dialects)) {
  std::set<std::string> seen;
  for (auto& d : dialects_) {
    if (d.id.empty()) throw Error(ErrorCode::kInvalidArgument, "empty dialect id");
    if (d.name.empty()) d.name = d.id;
    if (!seen.insert(d.id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate dialect id " + d.id);
    }
  }
}

DialectManifest DialectManifest::Parse(std::istream& in) {
  std::vector<DialectInfo> dialects;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    StripCarriageReturn(line);
    if (IsBlank(line) || line[0] == '#') continue;
    auto fields = SplitTabs(line);
    if (fields.size() > 2 || fields[0].empty()) {
      throw ParseError(ErrorCode::kParse, line_no, "expected 'ID' or 'ID<TAB>Name'");
    }
    DialectInfo info{fields[0], fields.size() == 2 ? fields[1] : fields[0]};
    if (info.name.empty()) info.name = info.id;
    if (!seen.insert(info.id).second) {
      throw ParseError(ErrorCode::kParse, line_no, "duplicate dialect id " + info.id);
    }
    dialects.push_back(std::move(info));
  }
  return DialectManifest(std::move(dialects));
}

DialectManifest DialectManifest::Load(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  return Parse(in);
}

DialectManifest DialectManifest::FromExamples(const std::vector<ParallelExample>& examples) {
  std::vector<DialectInfo> dialects;
  std::set<std::string> seen;
  for (const auto& ex : examples) {
    if (seen.insert(ex.dialect_id).second) dialects.push_back({ex.dialect_id, ex.dialect_id});
  }
  return DialectManifest(std::move(dialects));
}

void DialectManifest::Write(std::ostream& out) const {
  for (const auto& d : dialects_) {
    out << d.id;
    if (d.name != d.id) out << '\t' << d.name;
    out << '\n';
  }
}

bool DialectManifest::Contains(const std::string& id) const {
  return std::any_of(dialects_.begin(), dialects_.end(), [&](const auto& d) { return d.id == id; });
}

const DialectInfo& DialectManifest::Find(const std::string& id) const {
  for (const auto& d : dialects_) {
    if (d.id == id) return d;
  }
  throw Error(ErrorCode::kUnknownDialect, "unknown dialect '" + id + "'");
}

std::vector<std::string> DialectManifest::ids() const {
  std::vector<std::string> out;
  for (const auto& d : dialects_) out.push_back(d.id);
  return out;
}

CorpusFormat ParseCorpusFormat(const std::string& name) {
  if (name == "tsv") return CorpusFormat::kTsv;
  throw Error(ErrorCode::kInvalidArgument, "unknown corpus format '" + name + "'");
}

void ValidateExample(const ParallelExample& example) {
  if (example.dialect_id.empty()) throw Error(ErrorCode::kParse, "empty dialect id");
  if (example.source_words.empty() || example.target_words.empty()) {
    throw Error(ErrorCode::kParse, "empty sentence");
  }
  if (example.source_words.size() != example.target_words.size()) {
    throw Error(ErrorCode::kAlignment,
                "alignment mismatch: " + std::to_string(example.source_words.size()) +
                    " source words vs " + std::to_string(example.target_words.size()) +
                    " target words");
  }
  for (const auto* side : {&example.source_words, &example.target_words}) {
    for (const auto& w : *side) {
      if (w.empty()) throw Error(ErrorCode::kParse, "empty word");
      if (w.find('_') != std::string::npos) {
        throw Error(ErrorCode::kParse, "word '" + w + "' contains the reserved boundary symbol '_'");
      }
      for (char c : w) {
        if (utf8::IsSpace(static_cast<unsigned char>(c))) {
          throw Error(ErrorCode::kParse, "word contains whitespace");
        }
      }
    }
  }
}

std::vector<ParallelExample> ParseCorpus(std::istream& in, const DialectManifest* manifest) {
  std::vector<ParallelExample> examples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    StripCarriageReturn(line);
    if (IsBlank(line)) continue;
    auto fields = SplitTabs(line);
    if (fields.size() != 3) {
      throw ParseError(ErrorCode::kParse, line_no,
                       "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    ParallelExample ex{fields[0], utf8::SplitWords(fields[1]), utf8::SplitWords(fields[2])};
    try {
      utf8::Decode(fields[1]);
      utf8::Decode(fields[2]);
      ValidateExample(ex);
    } catch (const Error& e) {
      throw ParseError(e.code(), line_no, e.what());
    }
    if (manifest && !manifest->Contains(ex.dialect_id)) {
      throw ParseError(ErrorCode::kUnknownDialect, line_no,
                       "dialect '" + ex.dialect_id + "' is not declared in the manifest");
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

std::vector<ParallelExample> LoadCorpus(const std::filesystem::path& path, CorpusFormat format,
                                        const DialectManifest* manifest) {
  switch (format) {
    case CorpusFormat::kTsv: {
      auto in = OpenInput(path);
      try {
        return ParseCorpus(in, manifest);
      } catch (const ParseError& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
      }
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unsupported corpus format");
}

void WriteCorpus(std::ostream& out, const std::vector<ParallelExample>& examples) {
  for (const auto& ex : examples) {
    out << ex.dialect_id << '\t' << utf8::JoinWords(ex.source_words) << '\t'
        << utf8::JoinWords(ex.target_words) << '\n';
  }
}

void WriteCorpus(const std::filesystem::path& path, const std::vector<ParallelExample>& examples) {
  auto out = OpenOutput(path);
  WriteCorpus(out, examples);
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

CleaningMap::CleaningMap(std::set<char32_t> delete_chars, std::map<char32_t, char32_t> replace_chars)
    : delete_(std::move(delete_chars)), replace_(std::move(replace_chars)) {
  Validate();
}

void CleaningMap::Validate() const {
  for (const auto& [from, to] : replace_) {
    if (from == to) throw Error(ErrorCode::kInvalidArgument, Hex(from) + " maps to itself");
    if (delete_.count(from)) {
      throw Error(ErrorCode::kInvalidArgument, Hex(from) + " is both deleted and replaced");
    }
    // A replacement that is itself rewritten would make cleaning non-idempotent.
    if (delete_.count(to) || replace_.count(to)) {
      throw Error(ErrorCode::kInvalidArgument,
                  Hex(from) + " maps to " + Hex(to) + ", which is itself rewritten");
    }
  }
}

CleaningMap CleaningMap::Parse(std::istream& in) {
  std::set<char32_t> del;
  std::map<char32_t, char32_t> rep;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    StripCarriageReturn(line);
    if (line.empty() || line[0] == '#') continue;
    auto fields = SplitTabs(line);
    if (fields.size() > 2) throw ParseError(ErrorCode::kParse, line_no, "expected at most 2 columns");
    char32_t from = ParseCharField(fields[0], line_no);
    if (del.count(from) || rep.count(from)) {
      throw ParseError(ErrorCode::kParse, line_no, Hex(from) + " listed twice");
    }
    if (fields.size() == 1 || fields[1].empty()) {
      del.insert(from);
    } else {
      rep[from] = ParseCharField(fields[1], line_no);
    }
  }
  return CleaningMap(std::move(del), std::move(rep));
}

CleaningMap CleaningMap::Load(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  return Parse(in);
}

std::string CleanText(const std::string& text, const CleaningMap& map) {
  std::u32string out;
  for (char32_t cp : utf8::Decode(text)) {
    if (map.delete_chars().count(cp)) continue;
    auto it = map.replace_chars().find(cp);
    out.push_back(it == map.replace_chars().end() ? cp : it->second);
  }
  return utf8::Encode(out);
}

ParallelExample CleanExample(const ParallelExample& example, const CleaningMap& map) {
  ParallelExample out{example.dialect_id,
                      utf8::SplitWords(CleanText(utf8::JoinWords(example.source_words), map)),
                      utf8::SplitWords(CleanText(utf8::JoinWords(example.target_words), map))};
  if (out.source_words.size() != example.source_words.size() ||
      out.target_words.size() != example.target_words.size()) {
    throw Error(ErrorCode::kAlignment, "cleaning removed a whole word");
  }
  ValidateExample(out);
  return out;
}

SplitSizes SplitSizesFor(std::size_t n, const SplitRatios& ratios) {
  // The epsilon keeps products such as 0.7 * 10 from landing just below an integer.
  auto part = [n](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  std::size_t train = part(ratios.train);
  std::size_t valid = part(ratios.valid);
  return {train, valid, n - train - valid};
}

CorpusSplit StratifiedSplit(const std::vector<ParallelExample>& examples, const SplitRatios& ratios,
                            std::uint64_t seed) {
  for (double r : {ratios.train, ratios.valid, ratios.test}) {
    if (!(r >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative split ratio");
  }
  if (std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must sum to 1");
  }

  std::map<std::string, std::vector<std::size_t>> by_dialect;
  for (std::size_t i = 0; i < examples.size(); ++i) by_dialect[examples[i].dialect_id].push_back(i);

  CorpusSplit split;
  split.seed = seed;
  split.ratios = ratios;
  Rng rng(seed);
  for (auto& [dialect, indices] : by_dialect) {
    if (indices.size() < 3) {
      throw Error(ErrorCode::kInvalidArgument,
                  "dialect '" + dialect + "' has " + std::to_string(indices.size()) +
                      " examples; at least 3 are needed to populate every split");
    }
    rng.Shuffle(std::span(indices));
    auto sizes = SplitSizesFor(indices.size(), ratios);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const auto& ex = examples[indices[k]];
      if (k < sizes.train) {
        split.train.push_back(ex);
      } else if (k < sizes.train + sizes.valid) {
        split.valid.push_back(ex);
      } else {
        split.test.push_back(ex);
      }
    }
  }
  return split;
}

std::vector<ParallelExample> FilterDialect(const std::vector<ParallelExample>& examples,
                                           const std::string& dialect_id) {
  std::vector<ParallelExample> out;
  std::copy_if(examples.begin(), examples.end(), std::back_inserter(out),
               [&](const auto& ex) { return ex.dialect_id == dialect_id; });
  return out;
}

}  // namespace dialect
