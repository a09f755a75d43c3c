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

#include <cmath>
#include <numeric>
#include <vector>

#include "dialect/error.hpp"
#include "dialect/model.hpp"
#include "doctest.h"

using namespace dialect;

namespace {

constexpr int kFirstSymbol = 3;

ModelShape TinyShape(std::size_t vocab = 14) { return {vocab, 8, 16, 2}; }

TokenPair RandomPair(Rng& rng, int vocab, std::size_t max_len) {
  TokenPair p;
  std::size_t ns = 1 + rng.Index(max_len);
  std::size_t nt = 1 + rng.Index(max_len);
  for (std::size_t i = 0; i < ns; ++i) p.source.push_back(kFirstSymbol + static_cast<int>(rng.Index(vocab - kFirstSymbol)));
  p.target.push_back(kBosId);
  for (std::size_t i = 0; i < nt; ++i) p.target.push_back(kFirstSymbol + static_cast<int>(rng.Index(vocab - kFirstSymbol)));
  p.target.push_back(kEosId);
  return p;
}

std::vector<TokenPair> RandomPairs(Rng& rng, int vocab, std::size_t n, std::size_t max_len) {
  std::vector<TokenPair> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(RandomPair(rng, vocab, max_len));
  return out;
}

}  // namespace

TEST_CASE("analytic gradients match central differences") {
  Rng rng(7);
  auto params = ModelParams<double>::Random(TinyShape(), 0.3, rng);
  auto pairs = RandomPairs(rng, 14, 3, 6);
  Batch batch = MakeBatch(pairs);
  auto grads = ModelParams<double>::Zeros(params.shape);
  ComputeGradients(params, batch, grads);

  std::vector<Matrix<double>*> ps, gs;
  params.ForEach([&](const std::string&, const std::string&, Matrix<double>& m) { ps.push_back(&m); });
  grads.ForEach([&](const std::string&, const std::string&, Matrix<double>& m) { gs.push_back(&m); });

  const double h = 1e-6;
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    Matrix<double>& m = *ps[k];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      // Every coordinate of small tensors, a strided sample of large ones.
      if (m.size() > 400 && i % 7 != 0) continue;
      double saved = m.data()[i];
      m.data()[i] = saved + h;
      double up = ComputeLoss(params, batch).loss;
      m.data()[i] = saved - h;
      double down = ComputeLoss(params, batch).loss;
      m.data()[i] = saved;
      double fd = (up - down) / (2 * h);
      double err = std::abs(gs[k]->data()[i] - fd) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
      ++checked;
    }
  }
  MESSAGE("checked " << checked << " coordinates, worst relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("gradients with dropout match central differences under a fixed mask") {
  Rng rng(11);
  auto params = ModelParams<double>::Random(TinyShape(), 0.3, rng);
  Batch batch = MakeBatch(RandomPairs(rng, 14, 2, 5));
  auto grads = ModelParams<double>::Zeros(params.shape);
  auto loss_with_mask = [&](ModelParams<double>& g) {
    Rng mask_rng(99);
    return ComputeGradients(params, batch, g, {0.3, &mask_rng}).loss;
  };
  loss_with_mask(grads);
  auto scratch = ModelParams<double>::Zeros(params.shape);
  const double h = 1e-6;
  double worst = 0.0;
  auto& w = params.decoder[1].weight;
  for (Eigen::Index i = 0; i < w.size(); i += 13) {
    double saved = w.data()[i];
    w.data()[i] = saved + h;
    double up = loss_with_mask(scratch);
    w.data()[i] = saved - h;
    double down = loss_with_mask(scratch);
    w.data()[i] = saved;
    double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(grads.decoder[1].weight.data()[i] - fd) / std::max(1.0, std::abs(fd)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("unused source symbols receive zero gradient") {
  Rng rng(3);
  auto params = ModelParams<double>::Random(TinyShape(), 0.1, rng);
  TokenPair p{{5, 6, 7}, {kBosId, 5, kEosId}};
  auto grads = ModelParams<double>::Zeros(params.shape);
  ComputeGradients(params, MakeBatch(std::span<const TokenPair>(&p, 1)), grads);
  for (int v = 0; v < 14; ++v) {
    bool used = v >= 5 && v <= 7;
    CHECK((grads.src_embedding.col(v).norm() == 0.0) == !used);
  }
}

TEST_CASE("output and attention distributions are normalized") {
  Rng rng(5);
  auto params = ModelParams<double>::Random(TinyShape(), 0.5, rng);
  Batch batch = MakeBatch(RandomPairs(rng, 14, 4, 7));
  auto trace = TraceForward(params, batch);
  REQUIRE(trace.probabilities.size() == batch.tgt_steps);
  for (std::size_t t = 0; t < batch.tgt_steps; ++t) {
    for (std::size_t b = 0; b < batch.size; ++b) {
      auto col = trace.probabilities[t].col(static_cast<Eigen::Index>(b));
      CHECK(col.minCoeff() >= 0.0);
      CHECK(std::abs(col.sum() - 1.0) < 1e-6);
      if (t < batch.tgt_len[b]) {
        auto a = trace.attention[t].col(static_cast<Eigen::Index>(b));
        CHECK(std::abs(a.sum() - 1.0) < 1e-6);
        for (std::size_t s = batch.src_len[b]; s < batch.src_steps; ++s) CHECK(a(static_cast<Eigen::Index>(s)) == 0.0);
      }
    }
  }
}

TEST_CASE("untrained loss is close to the uniform entropy") {
  Rng rng(13);
  const std::size_t V = 40;
  auto params = ModelParams<float>::Random({V, 64, 128, 2}, 0.1, rng);
  Batch batch = MakeBatch(RandomPairs(rng, static_cast<int>(V), 16, 12));
  double loss = ComputeLoss(params, batch).loss;
  double uniform = std::log(static_cast<double>(V));
  CHECK(std::abs(loss - uniform) < 0.1 * uniform);
}

TEST_CASE("per-example loss does not depend on batch composition or order") {
  Rng rng(17);
  auto params = ModelParams<double>::Random(TinyShape(), 0.3, rng);
  auto pairs = RandomPairs(rng, 14, 6, 8);
  auto together = ComputeLoss(params, MakeBatch(pairs));
  std::vector<TokenPair> reversed(pairs.rbegin(), pairs.rend());
  auto backwards = ComputeLoss(params, MakeBatch(reversed));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto alone = ComputeLoss(params, MakeBatch(std::span<const TokenPair>(&pairs[i], 1)));
    CHECK(std::abs(alone.total_nll - together.example_nll[i]) < 1e-6);
    CHECK(std::abs(backwards.example_nll[pairs.size() - 1 - i] - together.example_nll[i]) < 1e-6);
  }
  CHECK(std::abs(together.loss - backwards.loss) < 1e-6);
}

TEST_CASE("batch construction pads and counts tokens") {
  std::vector<TokenPair> pairs = {{{4, 5}, {kBosId, 6, kEosId}}, {{4}, {kBosId, 6, 7, 8, kEosId}}};
  Batch b = MakeBatch(pairs);
  CHECK(b.src_steps == 2);
  CHECK(b.tgt_steps == 4);
  CHECK(b.tokens == 6);
  CHECK(b.src[1 * 2 + 1] == kPadId);
  CHECK(b.tgt_out[1 * 2 + 0] == kEosId);
  CHECK_THROWS_AS(MakeBatch(std::vector<TokenPair>{}), Error);
  CHECK_THROWS_AS(MakeBatch(std::vector<TokenPair>{{{}, {kBosId, kEosId}}}), Error);
}

TEST_CASE("out-of-range symbols are rejected") {
  Rng rng(1);
  auto params = ModelParams<double>::Random(TinyShape(), 0.1, rng);
  std::vector<TokenPair> pairs = {{{4, 99}, {kBosId, 5, kEosId}}};
  CHECK_THROWS_AS(ComputeLoss(params, MakeBatch(pairs)), Error);
  CHECK_THROWS_AS(GreedyDecode(params, std::vector<int>{-1}, 5), Error);
}

TEST_CASE("beam width one reproduces greedy decoding") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto params = ModelParams<float>::Random(TinyShape(), 0.8, rng);
    auto src = RandomPair(rng, 14, 8).source;
    auto max_len = DefaultMaxDecodeLength(src.size());
    auto greedy = GreedyDecode(params, src, max_len);
    auto beam = BeamDecode(params, src, 1, max_len);
    REQUIRE(greedy.tokens == beam.tokens);
    REQUIRE(greedy.score == beam.score);
    REQUIRE(greedy.hit_length_cap == beam.hit_length_cap);
  }
}

TEST_CASE("decode scores equal the teacher-forced log-likelihood of the output") {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    auto params = ModelParams<double>::Random(TinyShape(), 0.8, rng);
    auto src = RandomPair(rng, 14, 6).source;
    for (std::size_t width : {1u, 4u}) {
      auto r = BeamDecode(params, src, width, DefaultMaxDecodeLength(src.size()));
      TokenPair p{src, {kBosId}};
      p.target.insert(p.target.end(), r.tokens.begin(), r.tokens.end());
      auto loss = ComputeLoss(params, MakeBatch(std::span<const TokenPair>(&p, 1)));
      CHECK(std::abs(-loss.total_nll - r.score) < 1e-6);
    }
  }
}

TEST_CASE("wider beams never score below greedy") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    auto params = ModelParams<float>::Random(TinyShape(), 1.0, rng);
    auto src = RandomPair(rng, 14, 6).source;
    auto max_len = DefaultMaxDecodeLength(src.size());
    double greedy = GreedyDecode(params, src, max_len).score;
    for (std::size_t width : {2u, 5u, 10u}) CHECK(BeamDecode(params, src, width, max_len).score >= greedy - 1e-9);
  }
}

TEST_CASE("decoding respects the length cap and is deterministic") {
  Rng rng(37);
  auto params = ModelParams<float>::Random(TinyShape(), 0.1, rng);
  // A generator that can never choose EOS.
  params.gen_bias.setZero();
  params.gen_bias(kEosId) = -1e4f;
  params.gen_bias(6) = 10.0f;
  std::vector<int> src = {4, 5, 6};
  auto r = GreedyDecode(params, src, DefaultMaxDecodeLength(src.size()));
  CHECK(r.hit_length_cap);
  CHECK(r.tokens.size() == 19);
  auto b = BeamDecode(params, src, 3, DefaultMaxDecodeLength(src.size()));
  CHECK(b.hit_length_cap);
  CHECK(b.tokens.size() == 19);
  CHECK(GreedyDecode(params, src, 19).tokens == r.tokens);
}

TEST_CASE("parameter containers") {
  Rng rng(41);
  auto p = ModelParams<float>::Random(TinyShape(), 0.1, rng);
  CHECK(p.AllFinite());
  CHECK(p.src_embedding.maxCoeff() <= 0.1f);
  CHECK(p.src_embedding.minCoeff() >= -0.1f);
  auto d = p.Cast<double>();
  CHECK(d.NumParameters() == p.NumParameters());
  CHECK(d.Cast<float>().gen_weight == p.gen_weight);
  auto groups = ParameterGroups(p.shape);
  CHECK(std::find(groups.begin(), groups.end(), "encoder.layer1") != groups.end());
  CHECK(std::find(groups.begin(), groups.end(), "src_embedding") != groups.end());
  p.attn_score(0, 0) = std::nanf("");
  CHECK_FALSE(p.AllFinite());
}
