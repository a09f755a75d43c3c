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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dialect/error.hpp"
#include "dialect/random.hpp"
#include "dialect/synth.hpp"
#include "dialect/utf8.hpp"
#include "doctest.h"

using namespace dialect;

namespace {

// Oracle context element over a word padded with '#' at both ends.
struct OracleElement {
  std::string text;  // "#", ".", "x", "[xy]" or "[^xy]"

  bool Accepts(char32_t c) const {
    if (text == "#") return c == U'#';
    if (c == U'#') return false;
    if (text == ".") return true;
    auto body = utf8::Decode(text);
    if (body.size() == 1) return body[0] == c;
    bool negated = body[1] == U'^';
    auto set = body.substr(negated ? 2 : 1, body.size() - (negated ? 3 : 2));
    return (set.find(c) != std::u32string::npos) != negated;
  }
};

std::u32string OracleApply(const std::u32string& word, const std::u32string& target, const std::u32string& repl,
                           const std::vector<OracleElement>& left, const std::vector<OracleElement>& right) {
  const std::u32string padded = U"#" + word + U"#";
  std::u32string out;
  std::size_t p = 1;  // position in padded
  while (p + 1 < padded.size()) {
    bool hit = padded.compare(p, target.size(), target) == 0 && p + target.size() <= padded.size() - 1;
    if (hit) {
      for (std::size_t k = 0; k < left.size() && hit; ++k) {
        std::size_t q = p - left.size() + k;
        hit = p >= left.size() && left[k].Accepts(padded[q]);
      }
      std::size_t after = p + target.size();
      for (std::size_t k = 0; k < right.size() && hit; ++k) {
        hit = after + k < padded.size() && right[k].Accepts(padded[after + k]);
      }
    }
    if (hit) {
      out += repl;
      p += target.size();
    } else {
      out.push_back(padded[p]);
      ++p;
    }
  }
  return out;
}

std::vector<OracleElement> RandomContext(Rng& rng, bool left) {
  static const std::vector<std::string> pool = {"a", "b", "c", ".", "[ab]", "[^a]", "[bc]"};
  std::vector<OracleElement> ctx(rng.Index(3));
  for (auto& e : ctx) e.text = pool[rng.Index(pool.size())];
  if (rng.Index(3) == 0) {
    if (left) {
      ctx.insert(ctx.begin(), OracleElement{"#"});
    } else {
      ctx.push_back(OracleElement{"#"});
    }
  }
  return ctx;
}

std::string Join(const std::vector<OracleElement>& ctx) {
  std::string s;
  for (const auto& e : ctx) s += e.text;
  return s;
}

std::u32string RandomWord(Rng& rng, std::size_t max_len) {
  std::u32string w(1 + rng.Index(max_len), U'a');
  for (auto& c : w) c = U"abc"[rng.Index(3)];
  return w;
}

RewriteRuleSet Rules(const std::string& text, const std::string& id = "X") {
  std::istringstream in(text);
  return ParseRuleSet(in, id);
}

}  // namespace

TEST_CASE("single rule passes match a padded-word oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    std::u32string target = RandomWord(rng, 2);
    std::u32string repl = rng.Index(4) == 0 ? U"" : RandomWord(rng, 2);
    auto left = RandomContext(rng, true);
    auto right = RandomContext(rng, false);
    std::string line = utf8::Encode(target) + " / " + Join(left) + " _ " + Join(right) + " -> " + utf8::Encode(repl);
    RewriteRule rule = ParseRule(line);
    for (int k = 0; k < 5; ++k) {
      std::u32string word = RandomWord(rng, 8);
      INFO(line << " on " << utf8::Encode(word));
      REQUIRE(ApplyRule(word, rule) == OracleApply(word, target, repl, left, right));
    }
  }
}

TEST_CASE("rule syntax") {
  auto r = ParseRule("n / _ # ->");
  CHECK(r.target == U"n");
  CHECK(r.replacement.empty());
  CHECK(r.right_context.size() == 1);
  CHECK(ParseRule("d → r").replacement == U"r");
  CHECK(ParseRule("h -> ∅").replacement.empty());
  auto c = ParseRule("a / {V} _ -> b", {{"V", U"aeiou"}});
  CHECK(c.left_context[0].kind == ContextElement::Kind::kSet);
  CHECK(c.left_context[0].chars == U"aeiou");
  CHECK(ParseRule(ParseRule("ts / [^s] _ . # -> tt").ToString()) == ParseRule("ts / [^s] _ . # -> tt"));
  CHECK_THROWS_AS(ParseRule("a b"), Error);
  CHECK_THROWS_AS(ParseRule("-> b"), Error);
  CHECK_THROWS_AS(ParseRule("a / x # _ -> b"), Error);
  CHECK_THROWS_AS(ParseRule("a / _ # x -> b"), Error);
  CHECK_THROWS_AS(ParseRule("a / {W} _ -> b"), Error);
  CHECK_THROWS_AS(ParseRule("a / [ab _ -> b"), Error);
}

TEST_CASE("a rule never applies to its own output") {
  CHECK(ApplyRule(U"aaa", ParseRule("a -> aa")) == U"aaaaaa");
  CHECK(ApplyRule(U"aaaa", ParseRule("aa -> a")) == U"aa");
  // Contexts see the form before the pass.
  CHECK(ApplyRule(U"bab", ParseRule("b / _ a -> a")) == U"aab");
  CHECK(ApplyRule(U"bbb", ParseRule("b / b _ -> c")) == U"bcc");
}

TEST_CASE("rule files") {
  auto set = Rules("! comment\n%dialect IS\n%name Inkerinsuomalaismurteet\n%class C mks\n"
                   "inä / # {C} _ # -> ie\nun / # k _ # -> o\n");
  CHECK(set.dialect_id == "IS");
  CHECK(set.info().name == "Inkerinsuomalaismurteet");
  CHECK(ApplyRules("minä", set) == "mie");
  CHECK(ApplyRules("sinä", set) == "sie");
  CHECK(ApplyRules("kun", set) == "ko");
  CHECK(ApplyRules("näin", set) == "näin");
  CHECK(ApplyRules("tuntuun", set) == "tuntuun");
  CHECK(Rules("a -> b\n", "stem").dialect_id == "stem");
  try {
    Rules("a -> b\nbroken\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("rules apply in order, one pass each") {
  auto set = Rules("n / _ # ->\nd -> r\n");
  CHECK(ApplyRules("veden", set) == "vere");
  CHECK(ApplyRules("kun", set) == "ku");
  CHECK(ApplyRules("nainen", set) == "naine");
  CHECK(ApplyRules("talo", set) == "talo");
  auto chain = Rules("a -> b\nb -> c\n");
  CHECK(ApplyRules("ab", chain) == "cc");
}

TEST_CASE("bundled rule packs load") {
  const std::filesystem::path root = DIALECT_SOURCE_DIR "/data/rules";
  for (const char* pack : {"single", "three", "graded", "ingrian"}) {
    CAPTURE(pack);
    CHECK_FALSE(LoadRuleSets(root / pack).empty());
  }
  auto three = LoadRuleSets(root / "three");
  REQUIRE(three.size() == 3);
  CHECK(three[0].dialect_id == "EAST");
  auto single = LoadRuleSets(root / "single");
  CHECK(ApplyRules("veden", single[0]) == "vere");
}

TEST_CASE("generated corpora follow the rules round-robin") {
  std::vector<std::string> vocab = {"kun", "veden", "talo", "minä", "sata"};
  auto sets = std::vector<RewriteRuleSet>{Rules("n / _ # ->\n", "A"), Rules("d -> r\n", "B")};
  SynthOptions opts;
  opts.sentences = 200;
  opts.seed = 3;
  auto corpus = GenerateCorpus(vocab, sets, opts);
  REQUIRE(corpus.size() == 200);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& ex = corpus[i];
    CHECK(ex.dialect_id == sets[i % 2].dialect_id);
    CHECK(ex.source_words.size() >= opts.min_length);
    CHECK(ex.source_words.size() <= opts.max_length);
    REQUIRE(ex.source_words.size() == ex.target_words.size());
    for (std::size_t w = 0; w < ex.source_words.size(); ++w) {
      CHECK(ex.target_words[w] == ApplyRules(ex.source_words[w], sets[i % 2]));
    }
  }
  CHECK(GenerateCorpus(vocab, sets, opts) == corpus);
  opts.seed = 4;
  CHECK(GenerateCorpus(vocab, sets, opts) != corpus);
}

TEST_CASE("generation rejects degenerate dialects") {
  SynthOptions opts;
  opts.sentences = 10;
  CHECK_THROWS_AS(GenerateCorpus({"n", "kala"}, {Rules("n / _ # ->\n", "A")}, opts), Error);
  CHECK_THROWS_AS(GenerateCorpus({"kala"}, {Rules("a -> _\n", "A")}, opts), Error);
  CHECK_THROWS_AS(GenerateCorpus({}, {Rules("a -> b\n", "A")}, opts), Error);
  // Two dialects that differ only on a word the tiny corpus never draws for both.
  opts.sentences = 2;
  opts.max_length = 1;
  std::vector<std::string> vocab;
  for (int i = 0; i < 200; ++i) vocab.push_back("w" + std::to_string(i));
  vocab.push_back("kun");
  CHECK_THROWS_AS(GenerateCorpus(vocab, {Rules("n / _ # ->\n", "A"), Rules("n / _ # -> m\n", "B")}, opts), Error);
}

TEST_CASE("word lists skip comments and blank lines") {
  auto path = std::filesystem::temp_directory_path() / "dialect_words_test.txt";
  {
    std::ofstream out(path);
    out << "# header\nminä\n\nkun näin\n";
  }
  CHECK(LoadWordList(path) == std::vector<std::string>{"minä", "kun", "näin"});
  std::filesystem::remove(path);
  auto vocab = LoadWordList(DIALECT_SOURCE_DIR "/data/vocab/finnish.txt");
  CHECK(vocab.size() > 300);
}
