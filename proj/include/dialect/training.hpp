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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dialect/checkpoint.hpp"
#include "dialect/corpus.hpp"
#include "dialect/model.hpp"
#include "dialect/textcodec.hpp"
#include "dialect/vocabulary.hpp"

namespace dialect {

struct EncodedPair {
  EncodedSequence source;
  EncodedSequence target;
};

/// Chunks every sentence pair in parallel; chunk i of the source pairs with
/// chunk i of the target. Flagged mode prefixes each source chunk with the
/// dialect's flag. `dialect_filter` keeps one dialect, which must be declared
/// in `dialects` and occur in `examples`.
std::vector<EncodedPair> MakeTrainingPairs(const std::vector<ParallelExample>& examples, FlagMode mode,
                                           const DialectManifest& dialects,
                                           const std::optional<std::string>& dialect_filter = std::nullopt);

std::vector<TokenPair> ToTokenPairs(const std::vector<EncodedPair>& pairs, const Vocabulary& vocab);

enum class OptimizerKind { kSgd, kAdam };

/// Training settings. Config files hold one `key = value` per line with '#'
/// comments; `preset = NAME` first resets every field to a named preset.
///
///   steps             optimizer steps (>= 1)
///   batch_size        chunk pairs per step (>= 1)
///   optimizer         sgd | adam
///   learning_rate     initial step size
///   lr_decay          factor applied when validation loss stops improving (1 disables)
///   dropout           rate between stacked layers, in [0, 1)
///   seed              drives initialization, batch order and dropout
///   checkpoint_every  steps between validation passes
///   freeze            comma-separated parameter groups left untouched
///   max_grad_norm     global gradient norm clip (0 disables)
///   param_init        uniform initialization range
///   embedding_size, hidden_size, layers
///   flags             flagged | plain
struct TrainingConfig {
  std::size_t steps = 3000;
  std::size_t batch_size = 32;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 0.002;
  double lr_decay = 0.5;
  double dropout = 0.1;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 500;
  std::set<std::string> freeze;
  double max_grad_norm = 5.0;
  double param_init = 0.1;
  std::size_t embedding_size = 64;
  std::size_t hidden_size = 128;
  std::size_t layers = 2;
  FlagMode flags = FlagMode::kFlagged;

  /// "reference": 100,000 SGD steps at 500/500. "transfer": 20,000 steps with
  /// the source embedding and first encoder layer frozen. "desk": the defaults.
  static TrainingConfig Preset(const std::string& name);
  static std::vector<std::string> PresetNames();

  /// Sets one field from text; unknown keys and malformed values throw kConfig.
  void Set(const std::string& key, const std::string& value);
  /// Applies "key=value".
  void Override(const std::string& assignment);
  void Validate() const;

  /// Settings not named in the input keep their value from `base`.
  static TrainingConfig Parse(std::istream& in, TrainingConfig base);
  static TrainingConfig Parse(std::istream& in);
  static TrainingConfig Load(const std::filesystem::path& path, TrainingConfig base);
  static TrainingConfig Load(const std::filesystem::path& path);
  /// Every field in config-file syntax; Parse(ToString()) restores the config.
  std::string ToString() const;

  ModelShape Shape(std::size_t vocab_size) const;
};

std::string OptimizerName(OptimizerKind kind);

/// The groups transfer training always freezes.
std::set<std::string> TransferFreezeGroups();

struct ValidationPoint {
  std::size_t step = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainingRun {
  TrainingConfig config;
  std::optional<std::filesystem::path> initial_checkpoint;
  std::vector<double> loss_log;  // one mean token NLL per step
  std::vector<ValidationPoint> validation_log;
  Checkpoint final_model;
  Checkpoint best_model;  // lowest validation loss; the final model without validation data
  std::optional<std::filesystem::path> final_checkpoint;
  std::optional<std::filesystem::path> best_checkpoint;
};

struct TrainingOptions {
  /// When set, receives final.ckpt, best.ckpt, log.csv and config.txt.
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> initial_checkpoint;  // recorded in the run
  std::function<void(const std::string&)> log;
};

/// Fresh model for `vocab` initialized from config.seed.
Checkpoint InitialCheckpoint(const Vocabulary& vocab, const TrainingConfig& config);

/// Runs exactly config.steps optimizer steps. Throws Error(kDivergence) naming
/// the step when the loss or an update is not finite.
TrainingRun Train(const Checkpoint& initial, const std::vector<TokenPair>& train,
                  const std::vector<TokenPair>& valid, const TrainingConfig& config,
                  const TrainingOptions& options = {});

/// Continues a plain-mode model on one dialect's plain pairs with fresh
/// optimizer state, adding TransferFreezeGroups() to the freeze set.
TrainingRun TransferTrain(const Checkpoint& base, const std::string& dialect_id,
                          const std::vector<TokenPair>& train, const std::vector<TokenPair>& valid,
                          TrainingConfig config, const TrainingOptions& options = {});

/// Builds the vocabulary from `train` and `valid`, chunks both in
/// config.flags mode and trains a fresh model.
TrainingRun TrainOnCorpus(const std::vector<ParallelExample>& train, const std::vector<ParallelExample>& valid,
                          const DialectManifest& dialects, const TrainingConfig& config,
                          const TrainingOptions& options = {});

/// Transfer training on the `dialect_id` examples of `train` and `valid`.
TrainingRun TransferOnCorpus(const Checkpoint& base, const std::string& dialect_id,
                             const std::vector<ParallelExample>& train, const std::vector<ParallelExample>& valid,
                             const TrainingConfig& config, const TrainingOptions& options = {});

/// Mean token NLL over `pairs`, evaluated in batches.
double EvaluateLoss(const ModelParams<float>& params, const std::vector<TokenPair>& pairs,
                    std::size_t batch_size = 64);

}  // namespace dialect
