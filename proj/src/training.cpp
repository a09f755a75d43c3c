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

#include "dialect/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "dialect/error.hpp"

namespace dialect {
namespace {

std::string Trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kConfig, "bad value '" + value + "' for " + key);
  }
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Adam moments, or nothing for plain SGD.
struct OptimizerState {
  ModelParams<float> m, v;
  std::size_t t = 0;
};

}  // namespace

std::vector<EncodedPair> MakeTrainingPairs(const std::vector<ParallelExample>& examples, FlagMode mode,
                                           const DialectManifest& dialects,
                                           const std::optional<std::string>& dialect_filter) {
  if (dialect_filter) {
    dialects.Find(*dialect_filter);
    bool present = std::any_of(examples.begin(), examples.end(),
                               [&](const ParallelExample& ex) { return ex.dialect_id == *dialect_filter; });
    if (!present) {
      throw Error(ErrorCode::kUnknownDialect, "no examples for dialect '" + *dialect_filter + "'");
    }
  }
  std::vector<EncodedPair> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (dialect_filter && ex.dialect_id != *dialect_filter) continue;
    ValidateExample(ex);
    auto src_chunks = ChunkSentence(ex.source_words, kDefaultChunkSize, i);
    auto tgt_chunks = ChunkSentence(ex.target_words, kDefaultChunkSize, i);
    for (std::size_t c = 0; c < src_chunks.size(); ++c) {
      EncodedPair pair{Encode(src_chunks[c].words), Encode(tgt_chunks[c].words)};
      if (mode == FlagMode::kFlagged) pair.source = AddFlag(pair.source, ex.dialect_id, dialects);
      out.push_back(std::move(pair));
    }
  }
  return out;
}

std::vector<TokenPair> ToTokenPairs(const std::vector<EncodedPair>& pairs, const Vocabulary& vocab) {
  std::vector<TokenPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({vocab.SourceIds(p.source), vocab.TargetIds(p.target)});
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

std::string OptimizerName(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

std::set<std::string> TransferFreezeGroups() {
  return {groups::kSourceEmbedding, groups::EncoderLayer(0)};
}

TrainingConfig TrainingConfig::Preset(const std::string& name) {
  TrainingConfig c;
  if (name == "desk") return c;
  if (name == "reference" || name == "transfer") {
    c.steps = 100000;
    c.batch_size = 64;
    c.optimizer = OptimizerKind::kSgd;
    c.learning_rate = 1.0;
    c.lr_decay = 0.5;
    c.dropout = 0.3;
    c.checkpoint_every = 5000;
    c.embedding_size = 500;
    c.hidden_size = 500;
    if (name == "transfer") {
      c.steps = 20000;
      c.freeze = TransferFreezeGroups();
      c.flags = FlagMode::kPlain;
    }
    return c;
  }
  throw Error(ErrorCode::kConfig, "unknown preset '" + name + "'");
}

std::vector<std::string> TrainingConfig::PresetNames() { return {"desk", "reference", "transfer"}; }

void TrainingConfig::Set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = Trim(raw_key);
  const std::string value = Trim(raw_value);
  if (key == "preset") {
    *this = Preset(value);
  } else if (key == "steps") {
    steps = ParseNumber<std::size_t>(key, value);
  } else if (key == "batch_size") {
    batch_size = ParseNumber<std::size_t>(key, value);
  } else if (key == "optimizer") {
    if (value == "sgd") {
      optimizer = OptimizerKind::kSgd;
    } else if (value == "adam") {
      optimizer = OptimizerKind::kAdam;
    } else {
      throw Error(ErrorCode::kConfig, "optimizer must be sgd or adam, got '" + value + "'");
    }
  } else if (key == "learning_rate") {
    learning_rate = ParseNumber<double>(key, value);
  } else if (key == "lr_decay") {
    lr_decay = ParseNumber<double>(key, value);
  } else if (key == "dropout") {
    dropout = ParseNumber<double>(key, value);
  } else if (key == "seed") {
    seed = ParseNumber<std::uint64_t>(key, value);
  } else if (key == "checkpoint_every") {
    checkpoint_every = ParseNumber<std::size_t>(key, value);
  } else if (key == "freeze") {
    freeze.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = Trim(item);
      if (!item.empty()) freeze.insert(item);
    }
  } else if (key == "max_grad_norm") {
    max_grad_norm = ParseNumber<double>(key, value);
  } else if (key == "param_init") {
    param_init = ParseNumber<double>(key, value);
  } else if (key == "embedding_size") {
    embedding_size = ParseNumber<std::size_t>(key, value);
  } else if (key == "hidden_size") {
    hidden_size = ParseNumber<std::size_t>(key, value);
  } else if (key == "layers") {
    layers = ParseNumber<std::size_t>(key, value);
  } else if (key == "flags") {
    try {
      flags = ParseFlagMode(value);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, e.what());
    }
  } else {
    throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
  }
}

void TrainingConfig::Override(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error(ErrorCode::kConfig, "expected key=value, got '" + assignment + "'");
  Set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void TrainingConfig::Validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfig, msg); };
  if (steps < 1) fail("steps must be at least 1");
  if (batch_size < 1) fail("batch_size must be at least 1");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (!(lr_decay > 0 && lr_decay <= 1)) fail("lr_decay must be in (0, 1]");
  if (!(dropout >= 0 && dropout < 1)) fail("dropout must be in [0, 1)");
  if (checkpoint_every < 1) fail("checkpoint_every must be at least 1");
  if (!(max_grad_norm >= 0)) fail("max_grad_norm must be non-negative");
  if (!(param_init > 0)) fail("param_init must be positive");
  if (embedding_size < 1 || hidden_size < 1 || layers < 1) fail("model dimensions must be positive");
  auto known = ParameterGroups(Shape(1));
  for (const auto& g : freeze) {
    if (std::find(known.begin(), known.end(), g) == known.end()) fail("unknown parameter group '" + g + "' in freeze");
  }
}

TrainingConfig TrainingConfig::Parse(std::istream& in, TrainingConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (Trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(ErrorCode::kConfig, line_no, "expected key = value");
    try {
      base.Set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      throw ParseError(ErrorCode::kConfig, line_no, e.what());
    }
  }
  return base;
}

TrainingConfig TrainingConfig::Load(const std::filesystem::path& path, TrainingConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return Parse(in, std::move(base));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

TrainingConfig TrainingConfig::Parse(std::istream& in) { return Parse(in, TrainingConfig{}); }

TrainingConfig TrainingConfig::Load(const std::filesystem::path& path) { return Load(path, TrainingConfig{}); }

std::string TrainingConfig::ToString() const {
  std::ostringstream out;
  std::string frozen;
  for (const auto& g : freeze) frozen += (frozen.empty() ? "" : ",") + g;
  out << "steps = " << steps << "\n"
      << "batch_size = " << batch_size << "\n"
      << "optimizer = " << OptimizerName(optimizer) << "\n"
      << "learning_rate = " << FormatDouble(learning_rate) << "\n"
      << "lr_decay = " << FormatDouble(lr_decay) << "\n"
      << "dropout = " << FormatDouble(dropout) << "\n"
      << "seed = " << seed << "\n"
      << "checkpoint_every = " << checkpoint_every << "\n"
      << "freeze = " << frozen << "\n"
      << "max_grad_norm = " << FormatDouble(max_grad_norm) << "\n"
      << "param_init = " << FormatDouble(param_init) << "\n"
      << "embedding_size = " << embedding_size << "\n"
      << "hidden_size = " << hidden_size << "\n"
      << "layers = " << layers << "\n"
      << "flags = " << FlagModeName(flags) << "\n";
  return out.str();
}

ModelShape TrainingConfig::Shape(std::size_t vocab_size) const {
  return {vocab_size, embedding_size, hidden_size, layers};
}

// ---------------------------------------------------------------------------
// Training loop

Checkpoint InitialCheckpoint(const Vocabulary& vocab, const TrainingConfig& config) {
  config.Validate();
  Rng rng(config.seed);
  Checkpoint ckpt;
  ckpt.vocab = vocab;
  ckpt.params = ModelParams<float>::Random(config.Shape(vocab.size()), config.param_init, rng);
  ckpt.mode = config.flags;
  return ckpt;
}

double EvaluateLoss(const ModelParams<float>& params, const std::vector<TokenPair>& pairs, std::size_t batch_size) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no pairs to evaluate");
  double nll = 0.0;
  std::size_t tokens = 0;
  for (std::size_t i = 0; i < pairs.size(); i += batch_size) {
    std::size_t n = std::min(batch_size, pairs.size() - i);
    auto r = ComputeLoss(params, MakeBatch(std::span<const TokenPair>(pairs.data() + i, n)));
    nll += static_cast<double>(r.total_nll);
    tokens += r.tokens;
  }
  return nll / static_cast<double>(tokens);
}

TrainingRun Train(const Checkpoint& initial, const std::vector<TokenPair>& train,
                  const std::vector<TokenPair>& valid, const TrainingConfig& config,
                  const TrainingOptions& options) {
  config.Validate();
  if (train.empty()) throw Error(ErrorCode::kInvalidArgument, "no training pairs");
  if (initial.params.shape.vocab_size != initial.vocab.size()) {
    throw Error(ErrorCode::kCheckpoint, "model and vocabulary sizes differ");
  }
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  TrainingRun run;
  run.config = config;
  run.initial_checkpoint = options.initial_checkpoint;
  run.final_model = initial;
  auto& params = run.final_model.params;
  const ModelShape shape = params.shape;

  std::vector<bool> trainable;
  params.ForEach([&](const std::string&, const std::string& group, const Matrix<float>&) {
    trainable.push_back(!config.freeze.count(group));
  });

  auto grads = ModelParams<float>::Zeros(shape);
  OptimizerState opt;
  if (config.optimizer == OptimizerKind::kAdam) {
    opt.m = ModelParams<float>::Zeros(shape);
    opt.v = ModelParams<float>::Zeros(shape);
  }

  // Separate streams keep batch order independent of the dropout draws.
  Rng order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Rng dropout_rng(config.seed ^ 0xc2b2ae3d27d4eb4fULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  std::optional<std::ofstream> csv;
  if (options.output_dir) {
    std::filesystem::create_directories(*options.output_dir);
    std::ofstream cfg(*options.output_dir / "config.txt");
    cfg << config.ToString();
    csv.emplace(*options.output_dir / "log.csv");
    if (!*csv) throw Error(ErrorCode::kIo, "cannot write " + (*options.output_dir / "log.csv").string());
    *csv << "step,train_loss,valid_loss\n";
  }

  double lr = config.learning_rate;
  double best_valid = std::numeric_limits<double>::infinity();
  double previous_valid = std::numeric_limits<double>::infinity();
  run.best_model = run.final_model;
  run.loss_log.reserve(config.steps);
  std::vector<TokenPair> batch_pairs;
  batch_pairs.reserve(config.batch_size);

  for (std::size_t step = 1; step <= config.steps; ++step) {
    batch_pairs.clear();
    while (batch_pairs.size() < config.batch_size) {
      if (cursor == order.size()) {
        order_rng.Shuffle(std::span<std::size_t>(order));
        cursor = 0;
      }
      batch_pairs.push_back(train[order[cursor++]]);
    }
    Batch batch = MakeBatch(batch_pairs);

    LossResult<float> result;
    try {
      result = ComputeGradients(params, batch, grads, {config.dropout, &dropout_rng});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDivergence) throw;
      throw Error(ErrorCode::kDivergence, "step " + std::to_string(step) + ": " + e.what());
    }
    run.loss_log.push_back(static_cast<double>(result.loss));

    double scale = 1.0;
    if (config.max_grad_norm > 0) {
      double sq = 0.0;
      std::size_t k = 0;
      grads.ForEach([&](const std::string&, const std::string&, const Matrix<float>& g) {
        if (trainable[k++]) sq += static_cast<double>(g.squaredNorm());
      });
      double norm = std::sqrt(sq);
      if (norm > config.max_grad_norm) scale = config.max_grad_norm / norm;
    }

    std::vector<Matrix<float>*> ps, gs, ms, vs;
    params.ForEach([&](const std::string&, const std::string&, Matrix<float>& m) { ps.push_back(&m); });
    grads.ForEach([&](const std::string&, const std::string&, Matrix<float>& m) { gs.push_back(&m); });
    if (config.optimizer == OptimizerKind::kAdam) {
      opt.m.ForEach([&](const std::string&, const std::string&, Matrix<float>& m) { ms.push_back(&m); });
      opt.v.ForEach([&](const std::string&, const std::string&, Matrix<float>& m) { vs.push_back(&m); });
      ++opt.t;
    }
    const float s = static_cast<float>(scale);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (!trainable[k]) continue;
      auto& p = *ps[k];
      auto& g = *gs[k];
      if (config.optimizer == OptimizerKind::kSgd) {
        p.noalias() -= static_cast<float>(lr) * s * g;
      } else {
        constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
        const double t = static_cast<double>(opt.t);
        const float step_size =
            static_cast<float>(lr * std::sqrt(1.0 - std::pow(kBeta2, t)) / (1.0 - std::pow(kBeta1, t)));
        auto& m = *ms[k];
        auto& v = *vs[k];
        m = static_cast<float>(kBeta1) * m + static_cast<float>(1 - kBeta1) * s * g;
        v = static_cast<float>(kBeta2) * v + static_cast<float>(1 - kBeta2) * (s * g).cwiseAbs2();
        p.array() -= step_size * m.array() / (v.array().sqrt() + static_cast<float>(kEps));
      }
      if (!p.allFinite()) {
        throw Error(ErrorCode::kDivergence, "step " + std::to_string(step) + ": parameter update is not finite");
      }
    }

    std::optional<double> valid_loss;
    if (!valid.empty() && (step % config.checkpoint_every == 0 || step == config.steps)) {
      valid_loss = EvaluateLoss(params, valid);
      run.validation_log.push_back({step, *valid_loss, lr});
      log("step " + std::to_string(step) + " train_loss " + FormatDouble(result.loss) + " valid_loss " +
          FormatDouble(*valid_loss) + " lr " + FormatDouble(lr));
      if (*valid_loss < best_valid) {
        best_valid = *valid_loss;
        run.best_model.params = params;
      }
      if (*valid_loss >= previous_valid) lr *= config.lr_decay;
      previous_valid = *valid_loss;
    } else if (step % config.checkpoint_every == 0) {
      log("step " + std::to_string(step) + " train_loss " + FormatDouble(result.loss));
    }
    if (csv) {
      *csv << step << "," << FormatDouble(result.loss) << ",";
      if (valid_loss) *csv << FormatDouble(*valid_loss);
      *csv << "\n";
    }
  }

  if (valid.empty()) run.best_model = run.final_model;
  if (options.output_dir) {
    run.final_checkpoint = *options.output_dir / "final.ckpt";
    run.best_checkpoint = *options.output_dir / "best.ckpt";
    SaveCheckpoint(*run.final_checkpoint, run.final_model);
    SaveCheckpoint(*run.best_checkpoint, run.best_model);
  }
  return run;
}

TrainingRun TransferTrain(const Checkpoint& base, const std::string& dialect_id,
                          const std::vector<TokenPair>& train, const std::vector<TokenPair>& valid,
                          TrainingConfig config, const TrainingOptions& options) {
  if (base.mode != FlagMode::kPlain) {
    throw Error(ErrorCode::kInvalidArgument, "transfer training starts from a plain (no-flag) model");
  }
  if (dialect_id.empty()) throw Error(ErrorCode::kInvalidArgument, "transfer training needs a dialect id");
  for (const auto& p : train) {
    for (int id : p.source) {
      if (base.vocab.entry(id).kind == Vocabulary::Entry::Kind::kFlag) {
        throw Error(ErrorCode::kInvalidArgument, "transfer training pairs must not carry flags");
      }
    }
  }
  auto frozen = TransferFreezeGroups();
  config.freeze.insert(frozen.begin(), frozen.end());
  config.flags = FlagMode::kPlain;
  const ModelShape& s = base.params.shape;
  config.embedding_size = s.embedding_size;
  config.hidden_size = s.hidden_size;
  config.layers = s.layers;
  Checkpoint start = base;
  start.dialect = dialect_id;
  return Train(start, train, valid, config, options);
}

TrainingRun TrainOnCorpus(const std::vector<ParallelExample>& train, const std::vector<ParallelExample>& valid,
                          const DialectManifest& dialects, const TrainingConfig& config,
                          const TrainingOptions& options) {
  if (train.empty()) throw Error(ErrorCode::kInvalidArgument, "no training examples");
  std::vector<ParallelExample> all = train;
  all.insert(all.end(), valid.begin(), valid.end());
  Vocabulary vocab = Vocabulary::Build(all, dialects);
  auto train_pairs = ToTokenPairs(MakeTrainingPairs(train, config.flags, dialects), vocab);
  std::vector<TokenPair> valid_pairs;
  if (!valid.empty()) valid_pairs = ToTokenPairs(MakeTrainingPairs(valid, config.flags, dialects), vocab);
  return Train(InitialCheckpoint(vocab, config), train_pairs, valid_pairs, config, options);
}

TrainingRun TransferOnCorpus(const Checkpoint& base, const std::string& dialect_id,
                             const std::vector<ParallelExample>& train, const std::vector<ParallelExample>& valid,
                             const TrainingConfig& config, const TrainingOptions& options) {
  DialectManifest dialects = DialectManifest::FromExamples(train);
  auto train_pairs = ToTokenPairs(MakeTrainingPairs(train, FlagMode::kPlain, dialects, dialect_id), base.vocab);
  std::vector<TokenPair> valid_pairs;
  bool has_valid = std::any_of(valid.begin(), valid.end(),
                               [&](const ParallelExample& ex) { return ex.dialect_id == dialect_id; });
  if (has_valid) {
    DialectManifest valid_dialects = DialectManifest::FromExamples(valid);
    valid_pairs = ToTokenPairs(MakeTrainingPairs(valid, FlagMode::kPlain, valid_dialects, dialect_id), base.vocab);
  }
  return TransferTrain(base, dialect_id, train_pairs, valid_pairs, config, options);
}

}  // namespace dialect
