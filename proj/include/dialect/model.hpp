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

// Character-level encoder-decoder: stacked unidirectional LSTM encoder,
// stacked LSTM decoder with input feeding, and global attention with the
// bilinear ("general") score h_t' * W_a * h_s.
//
// Everything is templated on the scalar type; float is used for training
// and double for gradient checking.

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dialect/random.hpp"

namespace dialect {

/// Ids the model itself relies on; the vocabulary reserves them.
inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;

struct ModelShape {
  std::size_t vocab_size = 0;
  std::size_t embedding_size = 64;
  std::size_t hidden_size = 128;
  std::size_t layers = 2;

  bool operator==(const ModelShape&) const = default;
};

/// Parameter group names, usable in a freeze set.
namespace groups {
inline constexpr const char* kSourceEmbedding = "src_embedding";
inline constexpr const char* kTargetEmbedding = "tgt_embedding";
inline constexpr const char* kAttention = "attention";
inline constexpr const char* kGenerator = "generator";
std::string EncoderLayer(std::size_t layer_index);  // 0-based in, "encoder.layer1" out
std::string DecoderLayer(std::size_t layer_index);
}  // namespace groups

std::vector<std::string> ParameterGroups(const ModelShape& shape);

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
struct LstmWeights {
  Matrix<T> weight;  // 4H x (input + H); gate rows ordered i, f, g, o
  Matrix<T> bias;    // 4H x 1
};

template <typename T>
struct ModelParams {
  ModelShape shape;
  Matrix<T> src_embedding;  // E x V, one column per symbol
  Matrix<T> tgt_embedding;  // E x V
  std::vector<LstmWeights<T>> encoder;
  std::vector<LstmWeights<T>> decoder;  // layer 0 input is [embedding; previous attentional state]
  Matrix<T> attn_score;     // H x H
  Matrix<T> attn_output;    // H x 2H, applied to [context; h_t]
  Matrix<T> gen_weight;     // V x H
  Matrix<T> gen_bias;       // V x 1

  static ModelParams Zeros(const ModelShape& shape);
  /// Uniform in [-init_range, init_range].
  static ModelParams Random(const ModelShape& shape, double init_range, Rng& rng);

  /// Visits every tensor in a fixed order: f(name, group, matrix).
  template <typename F>
  void ForEach(F&& f);
  template <typename F>
  void ForEach(F&& f) const;

  template <typename U>
  ModelParams<U> Cast() const;

  std::size_t NumParameters() const;
  bool AllFinite() const;
  void SetZero();
};

/// One training or evaluation example as vocabulary ids.
struct TokenPair {
  std::vector<int> source;  // optional flag, then characters
  std::vector<int> target;  // BOS ... EOS
};

/// Padded, time-major batch.
struct Batch {
  std::size_t size = 0;
  std::size_t src_steps = 0;
  std::size_t tgt_steps = 0;        // target length minus one (decoder steps)
  std::vector<int> src;             // src_steps x size, index t * size + b
  std::vector<int> tgt_in;          // tgt_steps x size
  std::vector<int> tgt_out;         // tgt_steps x size
  std::vector<std::size_t> src_len;
  std::vector<std::size_t> tgt_len; // decoder steps per example
  std::size_t tokens = 0;           // sum of tgt_len
};

Batch MakeBatch(std::span<const TokenPair> pairs);

template <typename T>
struct LossResult {
  T loss = 0;                // mean NLL per target token
  T total_nll = 0;
  std::size_t tokens = 0;
  std::vector<T> example_nll;  // summed NLL per example
};

struct DropoutOptions {
  double rate = 0.0;
  Rng* rng = nullptr;  // required when rate > 0
};

/// Per-step outputs of a teacher-forced pass, for inspection.
template <typename T>
struct ForwardTrace {
  LossResult<T> loss;
  std::vector<Matrix<T>> probabilities;  // per decoder step, V x B
  std::vector<Matrix<T>> attention;      // per decoder step, S x B (zero past src_len)
};

template <typename T>
LossResult<T> ComputeLoss(const ModelParams<T>& params, const Batch& batch);

template <typename T>
ForwardTrace<T> TraceForward(const ModelParams<T>& params, const Batch& batch);

/// Forward and backward pass; `grads` receives d(mean token NLL)/d(param).
/// Throws Error(kDivergence) if the loss or any gradient is not finite.
template <typename T>
LossResult<T> ComputeGradients(const ModelParams<T>& params, const Batch& batch,
                               ModelParams<T>& grads, const DropoutOptions& dropout = {});

struct DecodeResult {
  std::vector<int> tokens;  // generated ids, ending with EOS unless hit_length_cap
  double score = 0.0;       // sum of per-step log-probabilities
  bool hit_length_cap = false;
};

std::size_t DefaultMaxDecodeLength(std::size_t source_length);

template <typename T>
DecodeResult GreedyDecode(const ModelParams<T>& params, const std::vector<int>& source, std::size_t max_len);

/// Beam search over raw summed log-probabilities. beam_width 1 reproduces
/// GreedyDecode exactly, and the result never scores below the greedy one.
template <typename T>
DecodeResult BeamDecode(const ModelParams<T>& params, const std::vector<int>& source,
                        std::size_t beam_width, std::size_t max_len);

// ---------------------------------------------------------------------------

template <typename T>
template <typename F>
void ModelParams<T>::ForEach(F&& f) {
  f("src_embedding", std::string(groups::kSourceEmbedding), src_embedding);
  f("tgt_embedding", std::string(groups::kTargetEmbedding), tgt_embedding);
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    auto g = groups::EncoderLayer(l);
    f(g + ".weight", g, encoder[l].weight);
    f(g + ".bias", g, encoder[l].bias);
  }
  for (std::size_t l = 0; l < decoder.size(); ++l) {
    auto g = groups::DecoderLayer(l);
    f(g + ".weight", g, decoder[l].weight);
    f(g + ".bias", g, decoder[l].bias);
  }
  f("attention.score", std::string(groups::kAttention), attn_score);
  f("attention.output", std::string(groups::kAttention), attn_output);
  f("generator.weight", std::string(groups::kGenerator), gen_weight);
  f("generator.bias", std::string(groups::kGenerator), gen_bias);
}

template <typename T>
template <typename F>
void ModelParams<T>::ForEach(F&& f) const {
  const_cast<ModelParams<T>*>(this)->ForEach(
      [&](const std::string& name, const std::string& group, Matrix<T>& m) {
        f(name, group, static_cast<const Matrix<T>&>(m));
      });
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::Cast() const {
  ModelParams<U> out = ModelParams<U>::Zeros(shape);
  std::vector<const Matrix<T>*> src;
  ForEach([&](const std::string&, const std::string&, const Matrix<T>& m) { src.push_back(&m); });
  std::size_t i = 0;
  out.ForEach([&](const std::string&, const std::string&, Matrix<U>& m) {
    m = src[i++]->template cast<U>();
  });
  return out;
}

}  // namespace dialect
