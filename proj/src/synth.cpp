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

#include "dialect/synth.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "dialect/error.hpp"
#include "dialect/random.hpp"
#include "dialect/textcodec.hpp"
#include "dialect/utf8.hpp"

namespace dialect {
namespace {

std::u32string StripSpaces(const std::u32string& s) {
  std::u32string out;
  for (char32_t c : s) {
    if (!utf8::IsSpace(c)) out.push_back(c);
  }
  return out;
}

std::string Trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && utf8::IsSpace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && utf8::IsSpace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

void CheckPlainChars(const std::u32string& s, const char* what) {
  for (char32_t c : s) {
    if (c == kBoundary) throw Error(ErrorCode::kParse, std::string(what) + " contains '_'");
    if (c == U'#' || c == U'[' || c == U']' || c == U'{' || c == U'}' || c == U'/' || c == U'.') {
      throw Error(ErrorCode::kParse, std::string(what) + " contains a pattern character");
    }
  }
}

std::vector<ContextElement> ParseContext(const std::u32string& text,
                                         const std::map<std::string, std::u32string>& classes) {
  std::vector<ContextElement> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char32_t c = text[i];
    ContextElement e;
    if (c == U'#') {
      e.kind = ContextElement::Kind::kWordEdge;
    } else if (c == U'.') {
      e.kind = ContextElement::Kind::kAny;
    } else if (c == U'[') {
      std::size_t close = text.find(U']', i);
      if (close == std::u32string::npos) throw Error(ErrorCode::kParse, "unterminated '['");
      std::u32string body = text.substr(i + 1, close - i - 1);
      e.kind = ContextElement::Kind::kSet;
      if (!body.empty() && body[0] == U'^') {
        e.kind = ContextElement::Kind::kNegatedSet;
        body.erase(0, 1);
      }
      if (body.empty()) throw Error(ErrorCode::kParse, "empty character set");
      e.chars = body;
      i = close;
    } else if (c == U'{') {
      std::size_t close = text.find(U'}', i);
      if (close == std::u32string::npos) throw Error(ErrorCode::kParse, "unterminated '{'");
      std::string name = utf8::Encode(text.substr(i + 1, close - i - 1));
      auto it = classes.find(name);
      if (it == classes.end()) throw Error(ErrorCode::kParse, "undefined class {" + name + "}");
      e.kind = ContextElement::Kind::kSet;
      e.chars = it->second;
      i = close;
    } else if (c == U']' || c == U'}' || c == kBoundary || c == U'/') {
      throw Error(ErrorCode::kParse, "unexpected '" + utf8::Encode(c) + "' in context");
    } else {
      e.kind = ContextElement::Kind::kLiteral;
      e.chars = std::u32string(1, c);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string RenderContext(const std::vector<ContextElement>& ctx) {
  std::string out;
  for (const auto& e : ctx) {
    switch (e.kind) {
      case ContextElement::Kind::kWordEdge: out += "#"; break;
      case ContextElement::Kind::kAny: out += "."; break;
      case ContextElement::Kind::kLiteral: out += utf8::Encode(e.chars); break;
      case ContextElement::Kind::kSet: out += "[" + utf8::Encode(e.chars) + "]"; break;
      case ContextElement::Kind::kNegatedSet: out += "[^" + utf8::Encode(e.chars) + "]"; break;
    }
  }
  return out;
}

bool LeftMatches(const std::u32string& w, std::size_t pos, const std::vector<ContextElement>& ctx) {
  for (auto it = ctx.rbegin(); it != ctx.rend(); ++it) {
    if (it->kind == ContextElement::Kind::kWordEdge) {
      if (pos != 0) return false;
      continue;
    }
    if (pos == 0 || !it->Matches(w[pos - 1])) return false;
    --pos;
  }
  return true;
}

bool RightMatches(const std::u32string& w, std::size_t pos, const std::vector<ContextElement>& ctx) {
  for (const auto& e : ctx) {
    if (e.kind == ContextElement::Kind::kWordEdge) {
      if (pos != w.size()) return false;
      continue;
    }
    if (pos >= w.size() || !e.Matches(w[pos])) return false;
    ++pos;
  }
  return true;
}

}  // namespace

bool ContextElement::Matches(char32_t cp) const {
  switch (kind) {
    case Kind::kLiteral: return chars.size() == 1 && chars[0] == cp;
    case Kind::kSet: return chars.find(cp) != std::u32string::npos;
    case Kind::kNegatedSet: return chars.find(cp) == std::u32string::npos;
    case Kind::kAny: return true;
    case Kind::kWordEdge: return false;
  }
  return false;
}

std::string RewriteRule::ToString() const {
  std::string out = utf8::Encode(target);
  if (!left_context.empty() || !right_context.empty()) {
    out += " / " + RenderContext(left_context) + " _ " + RenderContext(right_context);
  }
  out += " -> " + utf8::Encode(replacement);
  return out;
}

RewriteRule ParseRule(const std::string& line, const std::map<std::string, std::u32string>& classes) {
  std::u32string text = utf8::Decode(line);
  std::u32string lhs, rhs;
  if (auto arrow = text.find(U'→'); arrow != std::u32string::npos) {
    lhs = text.substr(0, arrow);
    rhs = text.substr(arrow + 1);
  } else if (auto ascii = text.find(U"->"); ascii != std::u32string::npos) {
    lhs = text.substr(0, ascii);
    rhs = text.substr(ascii + 2);
  } else {
    throw Error(ErrorCode::kParse, "rule has no '->'");
  }

  RewriteRule rule;
  rule.replacement = StripSpaces(rhs);
  if (rule.replacement == U"∅") rule.replacement.clear();
  CheckPlainChars(rule.replacement, "replacement");

  std::u32string env;
  if (auto slash = lhs.find(U'/'); slash != std::u32string::npos) {
    rule.target = StripSpaces(lhs.substr(0, slash));
    env = StripSpaces(lhs.substr(slash + 1));
    auto focus = env.find(kBoundary);
    if (focus == std::u32string::npos || env.find(kBoundary, focus + 1) != std::u32string::npos) {
      throw Error(ErrorCode::kParse, "context must contain exactly one '_'");
    }
    rule.left_context = ParseContext(env.substr(0, focus), classes);
    rule.right_context = ParseContext(env.substr(focus + 1), classes);
  } else {
    rule.target = StripSpaces(lhs);
  }
  if (rule.target.empty()) throw Error(ErrorCode::kParse, "rule target is empty");
  CheckPlainChars(rule.target, "target");

  for (std::size_t i = 0; i < rule.left_context.size(); ++i) {
    if (rule.left_context[i].kind == ContextElement::Kind::kWordEdge && i != 0) {
      throw Error(ErrorCode::kParse, "'#' must be the first element of a left context");
    }
  }
  for (std::size_t i = 0; i < rule.right_context.size(); ++i) {
    if (rule.right_context[i].kind == ContextElement::Kind::kWordEdge &&
        i + 1 != rule.right_context.size()) {
      throw Error(ErrorCode::kParse, "'#' must be the last element of a right context");
    }
  }
  return rule;
}

RewriteRuleSet ParseRuleSet(std::istream& in, const std::string& default_id) {
  RewriteRuleSet set;
  set.dialect_id = default_id;
  std::map<std::string, std::u32string> classes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed[0] == '!') continue;
    try {
      if (trimmed[0] == '%') {
        std::istringstream ss(trimmed.substr(1));
        std::string directive;
        ss >> directive;
        std::string rest;
        std::getline(ss, rest);
        rest = Trim(rest);
        if (directive == "dialect") {
          if (rest.empty() || rest.find_first_of(" \t") != std::string::npos) {
            throw Error(ErrorCode::kParse, "%dialect needs a single id");
          }
          set.dialect_id = rest;
        } else if (directive == "name") {
          set.name = rest;
        } else if (directive == "class") {
          std::istringstream cs(rest);
          std::string name, members;
          cs >> name;
          std::getline(cs, members);
          auto chars = StripSpaces(utf8::Decode(members));
          if (name.empty() || chars.empty()) throw Error(ErrorCode::kParse, "%class needs a name and members");
          classes[name] = chars;
        } else {
          throw Error(ErrorCode::kParse, "unknown directive %" + directive);
        }
        continue;
      }
      set.rules.push_back(ParseRule(trimmed, classes));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.code(), line_no, e.what());
    }
  }
  if (set.dialect_id.empty()) throw Error(ErrorCode::kParse, "rule set has no dialect id");
  return set;
}

RewriteRuleSet LoadRuleSet(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return ParseRuleSet(in, path.stem().string());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<RewriteRuleSet> LoadRuleSets(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".rules") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RewriteRuleSet> sets;
  std::set<std::string> ids;
  for (const auto& f : files) {
    sets.push_back(LoadRuleSet(f));
    if (!ids.insert(sets.back().dialect_id).second) {
      throw Error(ErrorCode::kParse, "duplicate dialect id " + sets.back().dialect_id + " in " + f.string());
    }
  }
  return sets;
}

std::u32string ApplyRule(const std::u32string& word, const RewriteRule& rule) {
  std::u32string out;
  out.reserve(word.size());
  const std::size_t len = rule.target.size();
  std::size_t i = 0;
  while (i < word.size()) {
    if (word.compare(i, len, rule.target) == 0 && LeftMatches(word, i, rule.left_context) &&
        RightMatches(word, i + len, rule.right_context)) {
      out += rule.replacement;
      i += len;
    } else {
      out.push_back(word[i]);
      ++i;
    }
  }
  return out;
}

std::string ApplyRules(const std::string& word, const RewriteRuleSet& rules) {
  std::u32string form = utf8::Decode(word);
  for (const auto& rule : rules.rules) form = ApplyRule(form, rule);
  return utf8::Encode(form);
}

std::vector<ParallelExample> GenerateCorpus(const std::vector<std::string>& vocabulary,
                                            const std::vector<RewriteRuleSet>& dialects,
                                            const SynthOptions& options) {
  if (vocabulary.empty()) throw Error(ErrorCode::kInvalidArgument, "vocabulary is empty");
  if (dialects.empty()) throw Error(ErrorCode::kInvalidArgument, "no dialect rule sets");
  if (options.sentences == 0) throw Error(ErrorCode::kInvalidArgument, "sentences must be at least 1");
  if (options.min_length == 0 || options.min_length > options.max_length) {
    throw Error(ErrorCode::kInvalidArgument, "invalid sentence length range");
  }

  // Word-level maps per dialect over the whole vocabulary.
  std::vector<std::vector<std::string>> mapped(dialects.size());
  for (std::size_t d = 0; d < dialects.size(); ++d) {
    for (const auto& w : vocabulary) {
      Encode({w});  // rejects reserved symbols in the vocabulary itself
      std::string out = ApplyRules(w, dialects[d]);
      if (out.empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "dialect " + dialects[d].dialect_id + " deletes the whole word '" + w + "'");
      }
      Encode({out});
      mapped[d].push_back(std::move(out));
    }
  }

  Rng rng(options.seed);
  std::vector<ParallelExample> examples;
  examples.reserve(options.sentences);
  std::vector<std::vector<bool>> used(dialects.size(), std::vector<bool>(vocabulary.size(), false));
  for (std::size_t s = 0; s < options.sentences; ++s) {
    std::size_t d = s % dialects.size();
    auto length = static_cast<std::size_t>(rng.Between(static_cast<std::int64_t>(options.min_length),
                                                       static_cast<std::int64_t>(options.max_length)));
    ParallelExample ex;
    ex.dialect_id = dialects[d].dialect_id;
    for (std::size_t k = 0; k < length; ++k) {
      std::size_t w = rng.Index(vocabulary.size());
      used[d][w] = true;
      ex.source_words.push_back(vocabulary[w]);
      ex.target_words.push_back(mapped[d][w]);
    }
    examples.push_back(std::move(ex));
  }

  for (std::size_t a = 0; a < dialects.size(); ++a) {
    for (std::size_t b = a + 1; b < dialects.size(); ++b) {
      if (mapped[a] == mapped[b]) continue;
      bool distinguished = false;
      for (std::size_t w = 0; w < vocabulary.size() && !distinguished; ++w) {
        distinguished = used[a][w] && used[b][w] && mapped[a][w] != mapped[b][w];
      }
      if (!distinguished) {
        throw Error(ErrorCode::kInvalidArgument,
                    "generated corpus does not distinguish dialects " + dialects[a].dialect_id +
                        " and " + dialects[b].dialect_id + "; generate more sentences");
      }
    }
  }
  return examples;
}

std::vector<std::string> LoadWordList(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    for (auto& w : utf8::SplitWords(t)) words.push_back(std::move(w));
  }
  return words;
}

}  // namespace dialect
