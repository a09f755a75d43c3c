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

// Context-sensitive character rewrite rules that define synthetic dialects,
// and a generator for parallel corpora with known ground truth.
//
// Rule file syntax, one statement per line:
//
//   ! comment
//   %dialect ID          dialect id (defaults to the file stem)
//   %name Display Name   flag text (defaults to the id)
//   %class V aeiouyäö    named character class, used as {V}
//   target / left _ right -> replacement
//   target -> replacement
//
// `->` and `→` are both accepted; an empty replacement or `∅` deletes. Context
// elements are literal characters, `.` (any), `[abc]`, `[^abc]`, `{NAME}` and
// `#` (word edge, only as the outermost element). Whitespace is ignored.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dialect/corpus.hpp"

namespace dialect {

struct ContextElement {
  enum class Kind { kLiteral, kSet, kNegatedSet, kAny, kWordEdge };
  Kind kind = Kind::kLiteral;
  std::u32string chars;

  bool Matches(char32_t cp) const;
  bool operator==(const ContextElement&) const = default;
};

struct RewriteRule {
  std::u32string target;
  std::u32string replacement;
  std::vector<ContextElement> left_context;
  std::vector<ContextElement> right_context;

  bool operator==(const RewriteRule&) const = default;
  std::string ToString() const;
};

struct RewriteRuleSet {
  std::string dialect_id;
  std::string name;
  std::vector<RewriteRule> rules;

  DialectInfo info() const { return {dialect_id, name.empty() ? dialect_id : name}; }
};

/// Parses one rule line. `classes` resolves {NAME} references.
RewriteRule ParseRule(const std::string& line, const std::map<std::string, std::u32string>& classes = {});

RewriteRuleSet ParseRuleSet(std::istream& in, const std::string& default_id);
RewriteRuleSet LoadRuleSet(const std::filesystem::path& path);
/// Every *.rules file in `dir`, sorted by file name.
std::vector<RewriteRuleSet> LoadRuleSets(const std::filesystem::path& dir);

/// One left-to-right pass of a single rule. Contexts are matched against the
/// form as it was before the pass, and the scan resumes after each rewritten
/// target, so a rule never applies to its own output.
std::u32string ApplyRule(const std::u32string& word, const RewriteRule& rule);

/// Applies the rules in order, one pass each.
std::string ApplyRules(const std::string& word, const RewriteRuleSet& rules);

struct SynthOptions {
  std::size_t sentences = 1000;
  std::size_t min_length = 1;
  std::size_t max_length = 8;
  std::uint64_t seed = 1;
};

/// Sentence i belongs to dialect i mod |dialects|; words are drawn uniformly
/// from `vocabulary` and each target word is ApplyRules of its source word.
///
/// Throws when a rule set maps a vocabulary word to the empty string or to a
/// string with reserved symbols, and when two dialects that differ on the
/// vocabulary end up with no distinguishing word in the generated corpus.
std::vector<ParallelExample> GenerateCorpus(const std::vector<std::string>& vocabulary,
                                            const std::vector<RewriteRuleSet>& dialects,
                                            const SynthOptions& options);

std::vector<std::string> LoadWordList(const std::filesystem::path& path);

}  // namespace dialect
