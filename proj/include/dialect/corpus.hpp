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

// Word-aligned parallel corpora: loading, annotation cleanup and the
// per-dialect train/valid/test split.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dialect {

/// One sentence pair. source_words[i] is the standard form of target_words[i].
struct ParallelExample {
  std::string dialect_id;
  std::vector<std::string> source_words;
  std::vector<std::string> target_words;

  bool operator==(const ParallelExample&) const = default;
  auto operator<=>(const ParallelExample&) const = default;
};

struct DialectInfo {
  std::string id;
  // Flag symbol text; defaults to the id.
  std::string name;
};

/// The declared dialect set of a corpus.
///
/// File format: one dialect per line, `ID` or `ID<TAB>Name`. Blank lines and
/// lines starting with '#' are ignored.
class DialectManifest {
 public:
  DialectManifest() = default;
  explicit DialectManifest(std::vector<DialectInfo> dialects);

  static DialectManifest Parse(std::istream& in);
  static DialectManifest Load(const std::filesystem::path& path);
  /// Ids in order of first appearance, names equal to ids.
  static DialectManifest FromExamples(const std::vector<ParallelExample>& examples);

  void Write(std::ostream& out) const;

  bool Contains(const std::string& id) const;
  const DialectInfo& Find(const std::string& id) const;
  const std::vector<DialectInfo>& dialects() const { return dialects_; }
  std::vector<std::string> ids() const;
  bool empty() const { return dialects_.empty(); }

 private:
  std::vector<DialectInfo> dialects_;
};

enum class CorpusFormat { kTsv };

CorpusFormat ParseCorpusFormat(const std::string& name);

/// Parses `dialect<TAB>source sentence<TAB>target sentence` records. When a
/// manifest is given every dialect id must be declared in it.
std::vector<ParallelExample> ParseCorpus(std::istream& in, const DialectManifest* manifest = nullptr);

std::vector<ParallelExample> LoadCorpus(const std::filesystem::path& path,
                                        CorpusFormat format = CorpusFormat::kTsv,
                                        const DialectManifest* manifest = nullptr);

void WriteCorpus(std::ostream& out, const std::vector<ParallelExample>& examples);
void WriteCorpus(const std::filesystem::path& path, const std::vector<ParallelExample>& examples);

/// Throws if the example violates the ParallelExample invariants.
void ValidateExample(const ParallelExample& example);

/// Per-codepoint cleanup of annotation characters.
///
/// File format: two tab-separated columns, a character (literal or `U+XXXX`)
/// and its replacement. An empty or missing second column deletes the
/// character. Lines starting with '#' are comments.
class CleaningMap {
 public:
  CleaningMap() = default;
  CleaningMap(std::set<char32_t> delete_chars, std::map<char32_t, char32_t> replace_chars);

  static CleaningMap Parse(std::istream& in);
  static CleaningMap Load(const std::filesystem::path& path);

  const std::set<char32_t>& delete_chars() const { return delete_; }
  const std::map<char32_t, char32_t>& replace_chars() const { return replace_; }

 private:
  void Validate() const;

  std::set<char32_t> delete_;
  std::map<char32_t, char32_t> replace_;
};

std::string CleanText(const std::string& text, const CleaningMap& map);

/// Cleans both sides of an example and re-splits them into words. Throws an
/// alignment error if cleaning changes the word count of either side.
ParallelExample CleanExample(const ParallelExample& example, const CleaningMap& map);

struct SplitRatios {
  double train = 0.70;
  double valid = 0.15;
  double test = 0.15;
};

struct CorpusSplit {
  std::vector<ParallelExample> train;
  std::vector<ParallelExample> valid;
  std::vector<ParallelExample> test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

struct SplitSizes {
  std::size_t train, valid, test;
};

/// floor(train * n), floor(valid * n), and the remainder.
SplitSizes SplitSizesFor(std::size_t n, const SplitRatios& ratios);

/// Shuffles each dialect's examples separately and cuts them by the floor
/// rule, so every dialect is represented proportionally in each part.
CorpusSplit StratifiedSplit(const std::vector<ParallelExample>& examples,
                            const SplitRatios& ratios, std::uint64_t seed);

/// Examples of one dialect, in corpus order.
std::vector<ParallelExample> FilterDialect(const std::vector<ParallelExample>& examples,
                                           const std::string& dialect_id);

}  // namespace dialect
