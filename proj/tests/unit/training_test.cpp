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
#include "dialect/training.hpp"
#include "doctest.h"

using namespace dialect;

namespace {

const DialectManifest& Manifest() {
  static const DialectManifest m(std::vector<DialectInfo>{{"IS", "Inkerinsuomalaismurteet"}, {"EK", "EK"}});
  return m;
}

std::vector<ParallelExample> IdentityCorpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ParallelExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> words(1 + rng.Index(3));
    for (auto& w : words) {
      w.resize(1 + rng.Index(4));
      for (auto& c : w) c = static_cast<char>('a' + rng.Index(5));
    }
    out.push_back({i % 2 ? "IS" : "EK", words, words});
  }
  return out;
}

TrainingConfig Tiny() {
  TrainingConfig c;
  c.steps = 20;
  c.batch_size = 8;
  c.embedding_size = 8;
  c.hidden_size = 16;
  c.checkpoint_every = 10;
  return c;
}

std::string Bytes(const Checkpoint& c) {
  std::ostringstream out;
  WriteCheckpoint(out, c);
  return out.str();
}

}  // namespace

TEST_CASE("training pairs follow the chunk layout") {
  std::vector<ParallelExample> ex = {{"IS", {"minä", "kun", "näin"}, {"mie", "ko", "näin"}}};
  auto flagged = MakeTrainingPairs(ex, FlagMode::kFlagged, Manifest());
  REQUIRE(flagged.size() == 1);
  CHECK(flagged[0].source.ToString() == "Inkerinsuomalaismurteet m i n ä _ k u n _ n ä i n");
  CHECK(flagged[0].target.ToString() == "m i e _ k o _ n ä i n");
  auto plain = MakeTrainingPairs(ex, FlagMode::kPlain, Manifest());
  CHECK(plain[0].source.ToString() == "m i n ä _ k u n _ n ä i n");

  std::vector<std::string> seven = {"a", "b", "c", "d", "e", "f", "g"};
  std::vector<ParallelExample> long_ex = {{"EK", seven, seven}, {"IS", {"x"}, {"y"}}};
  CHECK(MakeTrainingPairs(long_ex, FlagMode::kPlain, Manifest()).size() == 4);
  auto only_ek = MakeTrainingPairs(long_ex, FlagMode::kFlagged, Manifest(), std::string("EK"));
  REQUIRE(only_ek.size() == 3);
  CHECK(only_ek[2].source.ToString() == "EK g");
  CHECK_THROWS_AS(MakeTrainingPairs(long_ex, FlagMode::kPlain, Manifest(), std::string("PVS")), Error);
  std::vector<ParallelExample> no_is = {{"EK", {"a"}, {"a"}}};
  CHECK_THROWS_AS(MakeTrainingPairs(no_is, FlagMode::kPlain, Manifest(), std::string("IS")), Error);
}

TEST_CASE("config files") {
  auto desk = TrainingConfig::Preset("desk");
  CHECK(desk.steps == 3000);
  auto reference = TrainingConfig::Preset("reference");
  CHECK(reference.steps == 100000);
  CHECK(reference.optimizer == OptimizerKind::kSgd);
  CHECK(reference.hidden_size == 500);
  auto transfer = TrainingConfig::Preset("transfer");
  CHECK(transfer.steps == 20000);
  CHECK(transfer.freeze == TransferFreezeGroups());
  CHECK_THROWS_AS(TrainingConfig::Preset("huge"), Error);

  std::istringstream in("# comment\npreset = reference\nsteps = 12\nfreeze = attention, generator\nflags = plain\n");
  auto c = TrainingConfig::Parse(in);
  CHECK(c.steps == 12);
  CHECK(c.optimizer == OptimizerKind::kSgd);
  CHECK(c.freeze == std::set<std::string>{"attention", "generator"});
  CHECK(c.flags == FlagMode::kPlain);
  std::istringstream round(c.ToString());
  CHECK(TrainingConfig::Parse(round).ToString() == c.ToString());

  auto bad = [](const std::string& text) {
    std::istringstream s(text);
    try {
      TrainingConfig::Parse(s).Validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::kConfig;
    }
    return false;
  };
  CHECK(bad("stepz = 3\n"));
  CHECK(bad("steps = 0\n"));
  CHECK(bad("steps = many\n"));
  CHECK(bad("batch_size = 0\n"));
  CHECK(bad("dropout = 1\n"));
  CHECK(bad("optimizer = rmsprop\n"));
  CHECK(bad("steps\n"));

  TrainingConfig o;
  o.Override("learning_rate=0.5");
  CHECK(o.learning_rate == 0.5);
  CHECK_THROWS_AS(o.Override("learning_rate"), Error);
}

TEST_CASE("training rejects bad input") {
  auto corpus = IdentityCorpus(20, 1);
  auto cfg = Tiny();
  cfg.steps = 0;
  CHECK_THROWS_AS(TrainOnCorpus(corpus, corpus, Manifest(), cfg), Error);
  cfg = Tiny();
  cfg.freeze = {"encoder.layer7"};
  CHECK_THROWS_AS(TrainOnCorpus(corpus, corpus, Manifest(), cfg), Error);
  CHECK_THROWS_AS(TrainOnCorpus({}, corpus, Manifest(), Tiny()), Error);
}

TEST_CASE("seeded runs are reproducible") {
  auto train = IdentityCorpus(60, 2);
  auto valid = IdentityCorpus(10, 3);
  auto a = TrainOnCorpus(train, valid, Manifest(), Tiny());
  auto b = TrainOnCorpus(train, valid, Manifest(), Tiny());
  CHECK(a.loss_log.size() == 20);
  CHECK(a.loss_log == b.loss_log);
  CHECK(Bytes(a.final_model) == Bytes(b.final_model));
  REQUIRE(a.validation_log.size() == 2);
  CHECK(a.validation_log[0].step == 10);
  CHECK(a.validation_log[1].step == 20);
  auto cfg = Tiny();
  cfg.seed = 2;
  CHECK(TrainOnCorpus(train, valid, Manifest(), cfg).loss_log != a.loss_log);
}

TEST_CASE("frozen groups are untouched") {
  auto train = IdentityCorpus(60, 2);
  auto cfg = Tiny();
  cfg.freeze = {"attention", "decoder.layer2"};
  auto run = TrainOnCorpus(train, train, Manifest(), cfg);
  const auto& before = run.final_model.vocab;
  auto initial = InitialCheckpoint(before, cfg);
  for (const auto& g : ParameterGroups(run.final_model.params.shape)) {
    CAPTURE(g);
    bool same = SerializeGroup(initial.params, g) == SerializeGroup(run.final_model.params, g);
    CHECK(same == (cfg.freeze.count(g) > 0));
  }
}

TEST_CASE("transfer freezes the source side") {
  auto train = IdentityCorpus(60, 4);
  auto cfg = Tiny();
  cfg.flags = FlagMode::kPlain;
  auto base = TrainOnCorpus(train, train, Manifest(), cfg).final_model;
  auto run = TransferOnCorpus(base, "IS", train, train, Tiny());
  const auto& model = run.final_model;
  CHECK(model.dialect == "IS");
  CHECK(model.mode == FlagMode::kPlain);
  CHECK(run.config.freeze == TransferFreezeGroups());
  for (const auto& g : ParameterGroups(model.params.shape)) {
    CAPTURE(g);
    bool same = SerializeGroup(base.params, g) == SerializeGroup(model.params, g);
    CHECK(same == (TransferFreezeGroups().count(g) > 0));
  }

  auto flagged = TrainOnCorpus(train, train, Manifest(), Tiny()).final_model;
  CHECK_THROWS_AS(TransferOnCorpus(flagged, "IS", train, train, Tiny()), Error);
  CHECK_THROWS_AS(TransferOnCorpus(base, "PVS", train, train, Tiny()), Error);
  auto flag_pairs = ToTokenPairs(MakeTrainingPairs(train, FlagMode::kFlagged, Manifest()), flagged.vocab);
  CHECK_THROWS_AS(TransferTrain(flagged, "IS", flag_pairs, {}, Tiny()), Error);
}

TEST_CASE("divergence names the step") {
  auto train = IdentityCorpus(40, 5);
  auto cfg = Tiny();
  cfg.optimizer = OptimizerKind::kSgd;
  cfg.learning_rate = 1e30;
  cfg.max_grad_norm = 0;
  try {
    TrainOnCorpus(train, train, Manifest(), cfg);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDivergence);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("run directory contents") {
  auto dir = std::filesystem::temp_directory_path() / "dialect_training_test_run";
  std::filesystem::remove_all(dir);
  auto train = IdentityCorpus(30, 6);
  TrainingOptions opts;
  opts.output_dir = dir;
  auto run = TrainOnCorpus(train, train, Manifest(), Tiny(), opts);
  for (const char* f : {"final.ckpt", "best.ckpt", "log.csv", "config.txt"}) {
    CAPTURE(f);
    CHECK(std::filesystem::exists(dir / f));
  }
  CHECK(Bytes(LoadCheckpoint(dir / "final.ckpt")) == Bytes(run.final_model));
  std::ifstream log(dir / "log.csv");
  std::string header;
  std::getline(log, header);
  CHECK(header == "step,train_loss,valid_loss");
  std::size_t rows = 0;
  for (std::string line; std::getline(log, line);) ++rows;
  CHECK(rows == 20);
  CHECK(TrainingConfig::Load(dir / "config.txt").ToString() == run.config.ToString());
  std::filesystem::remove_all(dir);
}

TEST_CASE("desk profile overfits an identity task") {
  static const std::vector<std::string> words = {"talo", "kala", "sata", "vesi", "koti", "kuu", "maa", "puu",
                                                 "tie", "suo", "yö", "jää", "luu", "savu", "kivi", "mäki"};
  auto sentences = [&](std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ParallelExample> out;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> s(1 + rng.Index(3));
      for (auto& w : s) w = words[rng.Index(words.size())];
      out.push_back({"EK", s, s});
    }
    return out;
  };
  auto train = sentences(400, 7);
  auto valid = sentences(50, 8);
  auto cfg = TrainingConfig::Preset("desk");
  cfg.steps = 500;
  cfg.checkpoint_every = 250;
  auto run = TrainOnCorpus(train, valid, Manifest(), cfg);
  REQUIRE_FALSE(run.validation_log.empty());
  CHECK(run.validation_log.back().loss < 0.05);
}

TEST_CASE("shipped config files load") {
  const std::filesystem::path dir = DIALECT_SOURCE_DIR "/configs";
  CHECK(TrainingConfig::Load(dir / "desk.cfg").ToString() == TrainingConfig::Preset("desk").ToString());
  CHECK(TrainingConfig::Load(dir / "reference.cfg").ToString() == TrainingConfig::Preset("reference").ToString());
  CHECK(TrainingConfig::Load(dir / "transfer.cfg").ToString() == TrainingConfig::Preset("transfer").ToString());
  auto desk_transfer = TrainingConfig::Load(dir / "desk-transfer.cfg");
  CHECK(desk_transfer.freeze == TransferFreezeGroups());
  CHECK(desk_transfer.flags == FlagMode::kPlain);
  CHECK(desk_transfer.steps == 1000);
}
