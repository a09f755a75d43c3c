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

#include "dialect/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dialect/checkpoint.hpp"
#include "dialect/corpus.hpp"
#include "dialect/error.hpp"
#include "dialect/eval.hpp"
#include "dialect/synth.hpp"
#include "dialect/training.hpp"
#include "dialect/utf8.hpp"

namespace dialect::cli {
namespace {

namespace fs = std::filesystem;

std::ofstream OpenOutput(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

void WriteFile(const fs::path& path, const std::string& text) {
  auto out = OpenOutput(path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

void Comment(std::ostream& err, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) err << "# " << line << '\n';
}

SplitRatios ParseRatios(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "bad ratio '" + item + "'");
    }
  }
  if (v.size() != 3) throw Error(ErrorCode::kInvalidArgument, "ratios must be three comma-separated numbers");
  return {v[0], v[1], v[2]};
}

std::optional<DialectManifest> LoadManifest(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return DialectManifest::Load(path);
}

std::vector<ParallelExample> LoadExamples(const std::string& path, const std::optional<DialectManifest>& manifest) {
  return LoadCorpus(path, CorpusFormat::kTsv, manifest ? &*manifest : nullptr);
}

// Settings shared by train and transfer.
struct ConfigOptions {
  std::string preset;
  std::string config_file;
  std::vector<std::string> overrides;

  void Register(CLI::App* app) {
    app->add_option("--preset", preset, "Start from a named preset (desk, reference, transfer)");
    app->add_option("--config", config_file, "Key-value config file applied after the preset")
        ->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "Override one setting, KEY=VALUE (repeatable)");
  }

  TrainingConfig Resolve(TrainingConfig base) const {
    if (!preset.empty()) base = TrainingConfig::Preset(preset);
    if (!config_file.empty()) base = TrainingConfig::Load(config_file, base);
    for (const auto& o : overrides) base.Override(o);
    base.Validate();
    return base;
  }
};

void PrintReport(std::ostream& out, const std::string& label, const WerReport& r) {
  out << label << "\tsentences " << r.sentence_wer.size() << "\texcluded " << r.excluded << "\tmacro "
      << FormatWer(r.macro) << "\tmicro " << FormatWer(r.micro) << "\tS " << r.totals.substitutions << "\tD "
      << r.totals.deletions << "\tI " << r.totals.insertions << "\tC " << r.totals.correct << '\n';
}

void PrintStats(std::ostream& err, const AdaptStats& s) {
  err << "# adapted " << s.sentences << " sentences in " << s.chunks << " chunks; over-generated "
      << s.over_generated << ", under-generated " << s.under_generated << " (" << s.backfilled_words
      << " words kept from the source), length cap hit " << s.hit_length_cap << '\n';
}

std::vector<std::pair<std::string, std::string>> ReadModelList(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw Error(ErrorCode::kParse, path.string() + ": line " + std::to_string(line_no) +
                                         ": expected MODEL_ID<TAB>CHECKPOINT");
    }
    fs::path ckpt = line.substr(tab + 1);
    if (ckpt.is_relative()) ckpt = path.parent_path() / ckpt;
    out.emplace_back(line.substr(0, tab), ckpt.string());
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, path.string() + ": no models listed");
  return out;
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Character-level dialect adaptation toolkit", "dialect"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // preprocess
  std::string pp_input, pp_cleaning, pp_output, pp_dialects;
  auto* preprocess = app.add_subcommand("preprocess", "Remove annotation characters from a corpus");
  preprocess->add_option("--input", pp_input, "Corpus TSV")->required()->check(CLI::ExistingFile);
  preprocess->add_option("--cleaning", pp_cleaning, "Cleaning map TSV")->required()->check(CLI::ExistingFile);
  preprocess->add_option("--output", pp_output, "Cleaned corpus TSV")->required();
  preprocess->add_option("--dialects", pp_dialects, "Dialect manifest to validate ids against");

  // split
  std::string sp_input, sp_output_dir, sp_ratios = "0.7,0.15,0.15";
  std::uint64_t sp_seed = 1;
  auto* split = app.add_subcommand("split", "Per-dialect train/valid/test split");
  split->add_option("--input", sp_input, "Corpus TSV")->required()->check(CLI::ExistingFile);
  split->add_option("--output-dir", sp_output_dir, "Receives train.tsv, valid.tsv and test.tsv")->required();
  split->add_option("--ratios", sp_ratios, "Train, valid and test fractions")->capture_default_str();
  split->add_option("--seed", sp_seed, "Shuffle seed")->capture_default_str();

  // synth
  std::string sy_rules, sy_vocab, sy_output, sy_manifest;
  SynthOptions sy_opts;
  auto* synth = app.add_subcommand("synth", "Generate a parallel corpus from rewrite-rule dialects");
  synth->add_option("--rules", sy_rules, "Directory of *.rules files")->required()->check(CLI::ExistingDirectory);
  synth->add_option("--vocab", sy_vocab, "Word list, one word per line")->required()->check(CLI::ExistingFile);
  synth->add_option("--sentences", sy_opts.sentences, "Number of sentence pairs")->capture_default_str();
  synth->add_option("--min-length", sy_opts.min_length, "Shortest sentence in words")->capture_default_str();
  synth->add_option("--max-length", sy_opts.max_length, "Longest sentence in words")->capture_default_str();
  synth->add_option("--seed", sy_opts.seed, "Generator seed")->capture_default_str();
  synth->add_option("--output", sy_output, "Corpus TSV")->required();
  synth->add_option("--manifest", sy_manifest, "Also write the dialect manifest here");

  // train
  ConfigOptions tr_cfg;
  std::string tr_train, tr_valid, tr_dialects, tr_output_dir;
  auto* train = app.add_subcommand("train", "Train a flagged or plain model from scratch");
  tr_cfg.Register(train);
  train->add_option("--train", tr_train, "Training corpus TSV")->required()->check(CLI::ExistingFile);
  train->add_option("--valid", tr_valid, "Validation corpus TSV")->check(CLI::ExistingFile);
  train->add_option("--dialects", tr_dialects, "Dialect manifest (flag names and order)")->check(CLI::ExistingFile);
  train->add_option("--output-dir", tr_output_dir, "Receives checkpoints and logs")->required();

  // transfer
  ConfigOptions tf_cfg;
  std::string tf_base, tf_dialect, tf_train, tf_valid, tf_output_dir;
  auto* transfer = app.add_subcommand("transfer", "Continue a plain model on one dialect with frozen lower layers");
  tf_cfg.Register(transfer);
  transfer->add_option("--base", tf_base, "Plain-mode checkpoint")->required()->check(CLI::ExistingFile);
  transfer->add_option("--dialect", tf_dialect, "Dialect to specialize to")->required();
  transfer->add_option("--train", tf_train, "Training corpus TSV")->required()->check(CLI::ExistingFile);
  transfer->add_option("--valid", tf_valid, "Validation corpus TSV")->check(CLI::ExistingFile);
  transfer->add_option("--output-dir", tf_output_dir, "Receives checkpoints and logs")->required();

  // adapt
  std::string ad_model, ad_input, ad_output, ad_dialect;
  std::size_t ad_beam = 1;
  auto* adapt = app.add_subcommand("adapt", "Adapt standard text, one sentence per line");
  adapt->add_option("--model", ad_model, "Checkpoint")->required()->check(CLI::ExistingFile);
  adapt->add_option("--input", ad_input, "UTF-8 text file")->required()->check(CLI::ExistingFile);
  adapt->add_option("--output", ad_output, "Adapted text file")->required();
  adapt->add_option("--dialect", ad_dialect, "Target dialect (flagged models)");
  adapt->add_option("--beam", ad_beam, "Beam width; 1 decodes greedily")->capture_default_str();

  // evaluate
  std::string ev_model, ev_test, ev_dialect, ev_output, ev_hypotheses;
  std::size_t ev_beam = 1;
  bool ev_distance = false;
  auto* evaluate = app.add_subcommand("evaluate", "Word error rate of one model on a test corpus");
  evaluate->add_option("--model", ev_model, "Checkpoint")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--test", ev_test, "Test corpus TSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--dialect", ev_dialect, "Only score this dialect");
  evaluate->add_option("--beam", ev_beam, "Beam width; 1 decodes greedily")->capture_default_str();
  evaluate->add_flag("--distance", ev_distance, "Score against the standard side (distance from standard)");
  evaluate->add_option("--output", ev_output, "Also write the report here");
  evaluate->add_option("--hypotheses", ev_hypotheses, "Write the adapted test corpus as TSV");

  // matrix
  std::string mx_models, mx_test, mx_csv, mx_table;
  std::vector<std::string> mx_dialects;
  std::size_t mx_beam = 1;
  auto* matrix = app.add_subcommand("matrix", "Model by dialect WER matrix");
  matrix->add_option("--models", mx_models, "Lines of MODEL_ID<TAB>CHECKPOINT")->required()->check(CLI::ExistingFile);
  matrix->add_option("--test", mx_test, "Test corpus TSV with every dialect")->required()->check(CLI::ExistingFile);
  matrix->add_option("--dialect", mx_dialects, "Column order (default: order of appearance)");
  matrix->add_option("--csv", mx_csv, "Write the matrix as CSV");
  matrix->add_option("--table", mx_table, "Write the plain-text table");
  matrix->add_option("--beam", mx_beam, "Beam width; 1 decodes greedily")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error[usage]: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    err << "# dialect " << sub->get_name() << '\n';
    Comment(err, sub->config_to_str(true, false));

    if (sub == preprocess) {
      auto manifest = LoadManifest(pp_dialects);
      auto map = CleaningMap::Load(pp_cleaning);
      auto examples = LoadExamples(pp_input, manifest);
      std::size_t changed = 0;
      for (auto& ex : examples) {
        auto cleaned = CleanExample(ex, map);
        changed += !(cleaned == ex);
        ex = std::move(cleaned);
      }
      WriteCorpus(fs::path(pp_output), examples);
      err << "# cleaned " << examples.size() << " examples, " << changed << " changed\n";
    } else if (sub == split) {
      auto examples = LoadExamples(sp_input, std::nullopt);
      auto parts = StratifiedSplit(examples, ParseRatios(sp_ratios), sp_seed);
      fs::create_directories(sp_output_dir);
      WriteCorpus(fs::path(sp_output_dir) / "train.tsv", parts.train);
      WriteCorpus(fs::path(sp_output_dir) / "valid.tsv", parts.valid);
      WriteCorpus(fs::path(sp_output_dir) / "test.tsv", parts.test);
      for (const auto& id : DialectManifest::FromExamples(examples).ids()) {
        out << id << "\ttrain " << FilterDialect(parts.train, id).size() << "\tvalid "
            << FilterDialect(parts.valid, id).size() << "\ttest " << FilterDialect(parts.test, id).size() << '\n';
      }
    } else if (sub == synth) {
      auto rules = LoadRuleSets(sy_rules);
      auto corpus = GenerateCorpus(LoadWordList(sy_vocab), rules, sy_opts);
      WriteCorpus(fs::path(sy_output), corpus);
      std::vector<DialectInfo> infos;
      for (const auto& r : rules) infos.push_back(r.info());
      if (!sy_manifest.empty()) {
        auto f = OpenOutput(sy_manifest);
        DialectManifest(infos).Write(f);
      }
      err << "# generated " << corpus.size() << " sentence pairs for " << rules.size() << " dialects\n";
    } else if (sub == train) {
      auto config = tr_cfg.Resolve(TrainingConfig{});
      Comment(err, "resolved config:\n" + config.ToString());
      auto manifest = LoadManifest(tr_dialects);
      auto train_ex = LoadExamples(tr_train, manifest);
      std::vector<ParallelExample> valid_ex;
      if (!tr_valid.empty()) valid_ex = LoadExamples(tr_valid, manifest);
      DialectManifest dialects = manifest ? *manifest : DialectManifest::FromExamples(train_ex);
      TrainingOptions opts;
      opts.output_dir = tr_output_dir;
      opts.log = [&](const std::string& msg) { err << "# " << msg << '\n'; };
      auto run = TrainOnCorpus(train_ex, valid_ex, dialects, config, opts);
      out << "final\t" << run.final_checkpoint->string() << "\nbest\t" << run.best_checkpoint->string() << '\n';
    } else if (sub == transfer) {
      TrainingConfig base;
      base.steps = 20000;
      base.freeze = TransferFreezeGroups();
      base.flags = FlagMode::kPlain;
      auto config = tf_cfg.Resolve(base);
      auto model = LoadCheckpoint(tf_base);
      Comment(err, "resolved config:\n" + config.ToString());
      auto train_ex = LoadExamples(tf_train, std::nullopt);
      std::vector<ParallelExample> valid_ex;
      if (!tf_valid.empty()) valid_ex = LoadExamples(tf_valid, std::nullopt);
      TrainingOptions opts;
      opts.output_dir = tf_output_dir;
      opts.initial_checkpoint = tf_base;
      opts.log = [&](const std::string& msg) { err << "# " << msg << '\n'; };
      auto run = TransferOnCorpus(model, tf_dialect, train_ex, valid_ex, config, opts);
      out << "final\t" << run.final_checkpoint->string() << "\nbest\t" << run.best_checkpoint->string() << '\n';
    } else if (sub == adapt) {
      auto model = LoadCheckpoint(ad_model);
      std::optional<std::string> dialect;
      if (!ad_dialect.empty()) dialect = ad_dialect;
      if (model.mode == FlagMode::kFlagged && (!dialect || !model.vocab.FlagId(*dialect))) {
        throw Error(ErrorCode::kUnknownDialect, dialect ? "model has no flag for dialect '" + *dialect + "'"
                                                        : "a flagged model needs --dialect");
      }
      Adapter adapter(model, {ad_beam});
      std::ifstream in(ad_input, std::ios::binary);
      if (!in) throw Error(ErrorCode::kIo, "cannot open " + ad_input);
      auto o = OpenOutput(ad_output);
      AdaptStats stats;
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        o << adapter.AdaptLine(line, dialect, &stats) << '\n';
      }
      if (!o) throw Error(ErrorCode::kIo, "write failed: " + ad_output);
      PrintStats(err, stats);
    } else if (sub == evaluate) {
      auto model = LoadCheckpoint(ev_model);
      auto examples = LoadExamples(ev_test, std::nullopt);
      if (!ev_dialect.empty()) {
        examples = FilterDialect(examples, ev_dialect);
        if (examples.empty()) throw Error(ErrorCode::kUnknownDialect, "no test examples for dialect '" + ev_dialect + "'");
      }
      std::ostringstream report;
      std::vector<ParallelExample> adapted;
      AdaptStats stats;
      for (const auto& id : DialectManifest::FromExamples(examples).ids()) {
        auto part = FilterDialect(examples, id);
        auto ev = EvaluateModel(model, part, {ev_beam});
        stats += ev.stats;
        std::vector<std::vector<std::string>> standard;
        for (std::size_t i = 0; i < part.size(); ++i) {
          standard.push_back(part[i].source_words);
          adapted.push_back({id, part[i].source_words, ev.hypotheses[i]});
        }
        if (ev_distance) {
          PrintReport(report, id + "\tdistance_from_standard", DistanceFromStandard(ev.hypotheses, standard));
        } else {
          PrintReport(report, id + "\twer", ev.report);
        }
      }
      out << report.str();
      if (!ev_output.empty()) WriteFile(ev_output, report.str());
      if (!ev_hypotheses.empty()) WriteCorpus(fs::path(ev_hypotheses), adapted);
      PrintStats(err, stats);
    } else if (sub == matrix) {
      auto list = ReadModelList(mx_models);
      std::vector<Checkpoint> checkpoints;
      checkpoints.reserve(list.size());
      std::vector<MatrixModel> models;
      for (const auto& [id, path] : list) checkpoints.push_back(LoadCheckpoint(path));
      for (std::size_t i = 0; i < list.size(); ++i) models.push_back({list[i].first, &checkpoints[i]});
      auto examples = LoadExamples(mx_test, std::nullopt);
      if (mx_dialects.empty()) mx_dialects = DialectManifest::FromExamples(examples).ids();
      std::vector<MatrixColumn> columns;
      for (const auto& id : mx_dialects) {
        auto part = FilterDialect(examples, id);
        if (part.empty()) throw Error(ErrorCode::kUnknownDialect, "no test examples for dialect '" + id + "'");
        columns.push_back({id, mx_test + ":" + id, std::move(part)});
      }
      auto m = ComputeWerMatrix(models, columns, {mx_beam});
      out << m.ToTable();
      if (!mx_csv.empty()) WriteFile(mx_csv, m.ToCsv());
      if (!mx_table.empty()) WriteFile(mx_table, m.ToTable());
    }
  } catch (const Error& e) {
    err << "error[" << ErrorCodeName(e.code()) << "]: " << e.what() << '\n';
    return kExitError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error[io]: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}

}  // namespace dialect::cli
