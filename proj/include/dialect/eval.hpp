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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dialect/checkpoint.hpp"
#include "dialect/corpus.hpp"

namespace dialect {

struct WerCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t correct = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
  std::size_t reference_length() const { return substitutions + deletions + correct; }
  std::size_t hypothesis_length() const { return substitutions + insertions + correct; }

  WerCounts& operator+=(const WerCounts& o);
  bool operator==(const WerCounts&) const = default;
};

/// Minimum-cost word alignment with unit edit costs. Among co-optimal
/// alignments the backtrace prefers correct, then substitution, then
/// deletion, then insertion.
WerCounts AlignWords(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis);

/// (S + D + I) / (S + D + C); nullopt for an empty reference.
std::optional<double> Wer(const WerCounts& counts);

struct WerReport {
  std::vector<WerCounts> sentence_counts;
  std::vector<std::optional<double>> sentence_wer;
  WerCounts totals;
  std::size_t excluded = 0;  // sentences with an empty reference
  std::optional<double> macro;  // mean of defined per-sentence values
  std::optional<double> micro;  // from the pooled counts

  static WerReport FromCounts(std::vector<WerCounts> counts);
};

WerReport ScoreSentences(const std::vector<std::vector<std::string>>& references,
                         const std::vector<std::vector<std::string>>& hypotheses);

/// Fraction and percentage, e.g. "0.2437 (24.37%)"; "n/a" when undefined.
std::string FormatWer(const std::optional<double>& value);

struct AdaptOptions {
  std::size_t beam_width = 1;  // 1 is greedy decoding
};

struct AdaptStats {
  std::size_t sentences = 0;
  std::size_t chunks = 0;
  std::size_t over_generated = 0;   // chunks truncated to the source word count
  std::size_t under_generated = 0;  // chunks that produced too few words
  std::size_t backfilled_words = 0; // missing positions filled with the source word
  std::size_t hit_length_cap = 0;

  AdaptStats& operator+=(const AdaptStats& o);
};

/// Source text to dialect text, one chunk of words at a time: encode, flag
/// (flagged models), decode, truncate to the chunk's word count, fill any
/// missing positions with the source word, and concatenate. Output always has
/// the input's word count.
class Adapter {
 public:
  explicit Adapter(const Checkpoint& model, AdaptOptions options = {});

  /// `dialect_id` selects the flag of a flagged model and is ignored otherwise.
  std::vector<std::string> AdaptWords(const std::vector<std::string>& words,
                                      const std::optional<std::string>& dialect_id,
                                      AdaptStats* stats = nullptr) const;
  std::string AdaptLine(const std::string& line, const std::optional<std::string>& dialect_id,
                        AdaptStats* stats = nullptr) const;

  const Checkpoint& model() const { return model_; }

 private:
  std::vector<int> SourceIds(const std::vector<std::string>& words, std::optional<int> flag) const;

  const Checkpoint& model_;
  AdaptOptions options_;
};

struct Evaluation {
  WerReport report;
  AdaptStats stats;
  std::vector<std::vector<std::string>> hypotheses;
};

/// Adapts each example's source (flagged models get the example's dialect
/// flag) and scores it against the example's target words.
Evaluation EvaluateModel(const Checkpoint& model, const std::vector<ParallelExample>& examples,
                         AdaptOptions options = {});

/// How far adapted text is from the standard text it came from; the
/// standard sentences are the reference.
WerReport DistanceFromStandard(const std::vector<std::vector<std::string>>& adapted,
                               const std::vector<std::vector<std::string>>& standard);

/// Distance from standard measured on the original spoken-dialect corpus,
/// in percent. Kept for comparison only; synthetic data cannot reproduce them.
struct ReferenceDistance {
  std::string_view dialect;
  double percent;
};
inline constexpr ReferenceDistance kReferenceDistances[] = {{"EK", 34.38}, {"IS", 43.41}, {"PVS", 54.69}};

struct MatrixModel {
  std::string id;
  const Checkpoint* model = nullptr;
};

struct MatrixColumn {
  std::string dialect_id;
  std::string split;  // identifies the test data, e.g. its file path
  std::vector<ParallelExample> examples;
};

struct WerCell {
  WerReport report;
  AdaptStats stats;
  std::string split;
};

struct WerMatrix {
  std::vector<std::string> models;
  std::vector<std::string> dialects;
  std::vector<std::vector<WerCell>> cells;  // [model][dialect]

  const WerCell& at(std::size_t model, std::size_t dialect) const { return cells.at(model).at(dialect); }
  /// Macro WER not exceeded by any other cell of the column (row).
  bool IsColumnMinimum(std::size_t model, std::size_t dialect) const;
  bool IsRowMinimum(std::size_t model, std::size_t dialect) const;

  /// model,dialect,split,sentences,excluded,macro_wer,micro_wer,macro_pct,micro_pct,column_min,row_min
  std::string ToCsv() const;
  /// Model rows, dialect columns, macro WER in percent with two decimals;
  /// '*' marks column minima and '+' row minima.
  std::string ToTable() const;
};

WerMatrix ComputeWerMatrix(const std::vector<MatrixModel>& models, const std::vector<MatrixColumn>& columns,
                           AdaptOptions options = {});

}  // namespace dialect
