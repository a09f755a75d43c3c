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

#include <string>
#include <vector>

#include "dialect/error.hpp"
#include "dialect/random.hpp"
#include "dialect/textcodec.hpp"
#include "dialect/utf8.hpp"
#include "doctest.h"

using namespace dialect;

namespace {

const DialectManifest& Dialects() {
  static const DialectManifest m(std::vector<DialectInfo>{{"IS", "Inkerinsuomalaismurteet"}, {"EK", "EK"}});
  return m;
}

std::vector<std::string> RandomSentence(Rng& rng, std::size_t max_words) {
  static const std::u32string alphabet = U"abdehijklmnoprstuvyäöÅ'-";
  std::vector<std::string> words(1 + rng.Index(max_words));
  for (auto& w : words) {
    std::u32string cps(1 + rng.Index(9), U'a');
    for (auto& c : cps) c = alphabet[rng.Index(alphabet.size())];
    w = utf8::Encode(cps);
  }
  return words;
}

}  // namespace

TEST_CASE("encoding inserts boundaries between words") {
  auto seq = Encode({"minä", "kun", "näin"});
  CHECK(seq.ToString() == "m i n ä _ k u n _ n ä i n");
  CHECK(seq.size() == 13);
  auto target = Encode({"mie", "ko", "näin"});
  CHECK(target.ToString() == "m i e _ k o _ n ä i n");
}

TEST_CASE("flags are one atomic symbol rendered by name") {
  auto seq = AddFlag(Encode({"minä", "kun", "näin"}), "IS", Dialects());
  CHECK(seq.ToString() == "Inkerinsuomalaismurteet m i n ä _ k u n _ n ä i n");
  CHECK(seq.size() == 14);
  CHECK(seq.flag->id == "IS");
  CHECK_THROWS_AS(AddFlag(seq, "IS", Dialects()), Error);
  CHECK_THROWS_AS(AddFlag(Encode({"a"}), "PVS", Dialects()), Error);
}

TEST_CASE("encode rejects what decode could not restore") {
  CHECK_THROWS_AS(Encode({}), Error);
  CHECK_THROWS_AS(Encode({"a", ""}), Error);
  CHECK_THROWS_AS(Encode({"a_b"}), Error);
  CHECK_THROWS_AS(Encode({"a b"}), Error);
  EncodedSequence bad;
  bad.symbols = U"ab__c";
  CHECK_THROWS_AS(Decode(bad), Error);
  bad.symbols = U"_a";
  CHECK_THROWS_AS(Decode(bad), Error);
  bad.symbols = U"a_";
  CHECK_THROWS_AS(Decode(bad), Error);
  CHECK_THROWS_AS(Decode(AddFlag(Encode({"a"}), "EK", Dialects())), Error);
}

TEST_CASE("decode inverts encode and chunks concatenate back to the sentence") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    // Every third sentence has one or two words.
    auto words = RandomSentence(rng, trial % 3 == 0 ? 2 : 12);
    REQUIRE(Decode(Encode(words)) == words);
    auto chunks = ChunkSentence(words, kDefaultChunkSize, 7);
    std::vector<std::string> joined;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      REQUIRE(chunks[i].chunk_index == i);
      REQUIRE(chunks[i].sentence_index == 7);
      REQUIRE(Decode(Encode(chunks[i].words)) == chunks[i].words);
      joined.insert(joined.end(), chunks[i].words.begin(), chunks[i].words.end());
    }
    REQUIRE(joined == words);
    REQUIRE(chunks.size() == (words.size() + 2) / 3);
  }
}

TEST_CASE("chunking arithmetic") {
  std::vector<std::string> seven = {"a", "b", "c", "d", "e", "f", "g"};
  auto chunks = ChunkSentence(seven);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].words.size() == 3);
  CHECK(chunks[1].words.size() == 3);
  CHECK(chunks[2].words == std::vector<std::string>{"g"});
  CHECK(ChunkSentence({"a"}).size() == 1);
  CHECK(ChunkSentence({"a", "b"}, 1).size() == 2);
  CHECK_THROWS_AS(ChunkSentence({}), Error);
  CHECK_THROWS_AS(ChunkSentence({"a"}, 0), Error);
}

TEST_CASE("truncation keeps at most the source word count") {
  auto over = TruncateToSource({"olev", "vanha", "a"}, 2);
  CHECK(over.words == std::vector<std::string>{"olev", "vanha"});
  CHECK(over.over_generated);
  CHECK_FALSE(over.under_generated);
  auto exact = TruncateToSource({"mie", "ko"}, 2);
  CHECK(exact.words.size() == 2);
  CHECK_FALSE(exact.over_generated);
  CHECK_FALSE(exact.under_generated);
  auto under = TruncateToSource({"mie"}, 3);
  CHECK(under.words == std::vector<std::string>{"mie"});
  CHECK(under.under_generated);
  CHECK_THROWS_AS(TruncateToSource({"a"}, 0), Error);
}
