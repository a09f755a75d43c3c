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

#include "dialect/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "dialect/error.hpp"
#include "dialect/model.hpp"
#include "dialect/textcodec.hpp"
#include "dialect/utf8.hpp"

namespace dialect {

WerCounts& WerCounts::operator+=(const WerCounts& o) {
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  correct += o.correct;
  return *this;
}

WerCounts AlignWords(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  WerCounts c;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i, j) == at(i - 1, j - 1)) {
      ++c.correct;
      --i, --j;
    } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      ++c.substitutions;
      --i, --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

std::optional<double> Wer(const WerCounts& c) {
  if (c.reference_length() == 0) return std::nullopt;
  return static_cast<double>(c.errors()) / static_cast<double>(c.reference_length());
}

WerReport WerReport::FromCounts(std::vector<WerCounts> counts) {
  WerReport r;
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& c : counts) {
    auto w = Wer(c);
    r.sentence_wer.push_back(w);
    r.totals += c;
    if (w) {
      sum += *w;
      ++defined;
    } else {
      ++r.excluded;
    }
  }
  if (defined > 0) r.macro = sum / static_cast<double>(defined);
  r.micro = Wer(r.totals);
  r.sentence_counts = std::move(counts);
  return r;
}

WerReport ScoreSentences(const std::vector<std::vector<std::string>>& references,
                         const std::vector<std::vector<std::string>>& hypotheses) {
  if (references.size() != hypotheses.size()) {
    throw Error(ErrorCode::kInvalidArgument, "reference and hypothesis counts differ");
  }
  std::vector<WerCounts> counts;
  counts.reserve(references.size());
  for (std::size_t i = 0; i < references.size(); ++i) counts.push_back(AlignWords(references[i], hypotheses[i]));
  return WerReport::FromCounts(std::move(counts));
}

std::string FormatWer(const std::optional<double>& value) {
  if (!value) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f (%.2f%%)", *value, *value * 100.0);
  return buf;
}

AdaptStats& AdaptStats::operator+=(const AdaptStats& o) {
  sentences += o.sentences;
  chunks += o.chunks;
  over_generated += o.over_generated;
  under_generated += o.under_generated;
  backfilled_words += o.backfilled_words;
  hit_length_cap += o.hit_length_cap;
  return *this;
}

// ---------------------------------------------------------------------------

Adapter::Adapter(const Checkpoint& model, AdaptOptions options) : model_(model), options_(options) {
  if (model.params.shape.vocab_size != model.vocab.size()) {
    throw Error(ErrorCode::kCheckpoint, "model and vocabulary sizes differ");
  }
  if (options_.beam_width == 0) throw Error(ErrorCode::kInvalidArgument, "beam width must be at least 1");
}

std::vector<int> Adapter::SourceIds(const std::vector<std::string>& words, std::optional<int> flag) const {
  std::vector<int> ids;
  if (flag) ids.push_back(*flag);
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (w > 0) ids.push_back(Vocabulary::kBoundaryId);
    for (char32_t c : utf8::Decode(words[w])) {
      // A literal boundary character inside a word would split it.
      ids.push_back(c == kBoundary ? Vocabulary::kUnk : model_.vocab.CharId(c));
    }
  }
  return ids;
}

std::vector<std::string> Adapter::AdaptWords(const std::vector<std::string>& words,
                                             const std::optional<std::string>& dialect_id,
                                             AdaptStats* stats) const {
  std::optional<int> flag;
  if (model_.mode == FlagMode::kFlagged) {
    if (!dialect_id) throw Error(ErrorCode::kUnknownDialect, "a flagged model needs a target dialect");
    flag = model_.vocab.FlagId(*dialect_id);
    if (!flag) throw Error(ErrorCode::kUnknownDialect, "model has no flag for dialect '" + *dialect_id + "'");
  }
  AdaptStats local;
  local.sentences = 1;
  if (words.empty()) {
    if (stats) *stats += local;
    return {};
  }
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const auto& chunk : ChunkSentence(words)) {
    auto src = SourceIds(chunk.words, flag);
    auto max_len = DefaultMaxDecodeLength(src.size());
    DecodeResult r = options_.beam_width == 1 ? GreedyDecode(model_.params, src, max_len)
                                              : BeamDecode(model_.params, src, options_.beam_width, max_len);
    auto truncated = TruncateToSource(model_.vocab.WordsFromIds(r.tokens), chunk.words.size());
    ++local.chunks;
    local.over_generated += truncated.over_generated;
    local.under_generated += truncated.under_generated;
    local.hit_length_cap += r.hit_length_cap;
    for (std::size_t k = truncated.words.size(); k < chunk.words.size(); ++k) {
      truncated.words.push_back(chunk.words[k]);
      ++local.backfilled_words;
    }
    out.insert(out.end(), truncated.words.begin(), truncated.words.end());
  }
  if (stats) *stats += local;
  return out;
}

std::string Adapter::AdaptLine(const std::string& line, const std::optional<std::string>& dialect_id,
                               AdaptStats* stats) const {
  return utf8::JoinWords(AdaptWords(utf8::SplitWords(line), dialect_id, stats));
}

Evaluation EvaluateModel(const Checkpoint& model, const std::vector<ParallelExample>& examples,
                         AdaptOptions options) {
  Adapter adapter(model, options);
  Evaluation ev;
  std::vector<std::vector<std::string>> refs;
  for (const auto& ex : examples) {
    ev.hypotheses.push_back(adapter.AdaptWords(ex.source_words, ex.dialect_id, &ev.stats));
    refs.push_back(ex.target_words);
  }
  ev.report = ScoreSentences(refs, ev.hypotheses);
  return ev;
}

WerReport DistanceFromStandard(const std::vector<std::vector<std::string>>& adapted,
                               const std::vector<std::vector<std::string>>& standard) {
  return ScoreSentences(standard, adapted);
}

// ---------------------------------------------------------------------------

namespace {

double CellValue(const WerCell& c) { return c.report.macro.value_or(std::numeric_limits<double>::infinity()); }

std::string Fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

bool WerMatrix::IsColumnMinimum(std::size_t model, std::size_t dialect) const {
  double v = CellValue(at(model, dialect));
  for (std::size_t r = 0; r < models.size(); ++r) {
    if (CellValue(at(r, dialect)) < v) return false;
  }
  return at(model, dialect).report.macro.has_value();
}

bool WerMatrix::IsRowMinimum(std::size_t model, std::size_t dialect) const {
  double v = CellValue(at(model, dialect));
  for (std::size_t c = 0; c < dialects.size(); ++c) {
    if (CellValue(at(model, c)) < v) return false;
  }
  return at(model, dialect).report.macro.has_value();
}

std::string WerMatrix::ToCsv() const {
  std::ostringstream out;
  out << "model,dialect,split,sentences,excluded,macro_wer,micro_wer,macro_pct,micro_pct,column_min,row_min\n";
  auto num = [](const std::optional<double>& v, double scale) { return v ? Fixed(*v * scale, scale == 1 ? 6 : 2) : ""; };
  for (std::size_t r = 0; r < models.size(); ++r) {
    for (std::size_t c = 0; c < dialects.size(); ++c) {
      const auto& cell = at(r, c);
      out << models[r] << ',' << dialects[c] << ',' << cell.split << ',' << cell.report.sentence_wer.size() << ','
          << cell.report.excluded << ',' << num(cell.report.macro, 1) << ',' << num(cell.report.micro, 1) << ','
          << num(cell.report.macro, 100) << ',' << num(cell.report.micro, 100) << ','
          << (IsColumnMinimum(r, c) ? 1 : 0) << ',' << (IsRowMinimum(r, c) ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::string WerMatrix::ToTable() const {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"Model"});
  for (const auto& d : dialects) grid[0].push_back(d);
  for (std::size_t r = 0; r < models.size(); ++r) {
    std::vector<std::string> row = {models[r]};
    for (std::size_t c = 0; c < dialects.size(); ++c) {
      const auto& m = at(r, c).report.macro;
      std::string s = m ? Fixed(*m * 100.0, 2) : "n/a";
      s += IsColumnMinimum(r, c) ? "*" : " ";
      s += IsRowMinimum(r, c) ? "+" : " ";
      row.push_back(s);
    }
    grid.push_back(std::move(row));
  }
  std::vector<std::size_t> width(grid[0].size(), 0);
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], utf8::Decode(row[c]).size());
  }
  std::ostringstream out;
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::size_t pad = width[c] - utf8::Decode(row[c]).size();
      if (c == 0) {
        out << row[c] << std::string(pad, ' ');
      } else {
        out << "  " << std::string(pad, ' ') << row[c];
      }
    }
    out << '\n';
  }
  out << "Macro WER in percent. * column minimum, + row minimum.\n";
  return out.str();
}

WerMatrix ComputeWerMatrix(const std::vector<MatrixModel>& models, const std::vector<MatrixColumn>& columns,
                           AdaptOptions options) {
  WerMatrix m;
  for (const auto& c : columns) {
    for (const auto& ex : c.examples) {
      if (ex.dialect_id != c.dialect_id) {
        throw Error(ErrorCode::kInvalidArgument,
                    "column " + c.dialect_id + " contains an example of dialect " + ex.dialect_id);
      }
    }
    m.dialects.push_back(c.dialect_id);
  }
  for (const auto& model : models) {
    if (model.model == nullptr) throw Error(ErrorCode::kInvalidArgument, "model " + model.id + " is missing");
    m.models.push_back(model.id);
    std::vector<WerCell> row;
    for (const auto& c : columns) {
      auto ev = EvaluateModel(*model.model, c.examples, options);
      row.push_back({std::move(ev.report), ev.stats, c.split});
    }
    m.cells.push_back(std::move(row));
  }
  return m;
}

}  // namespace dialect
