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

#include "dialect/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dialect/error.hpp"

namespace dialect {

namespace groups {
std::string EncoderLayer(std::size_t layer_index) { return "encoder.layer" + std::to_string(layer_index + 1); }
std::string DecoderLayer(std::size_t layer_index) { return "decoder.layer" + std::to_string(layer_index + 1); }
}  // namespace groups

std::vector<std::string> ParameterGroups(const ModelShape& shape) {
  std::vector<std::string> out = {groups::kSourceEmbedding, groups::kTargetEmbedding};
  for (std::size_t l = 0; l < shape.layers; ++l) out.push_back(groups::EncoderLayer(l));
  for (std::size_t l = 0; l < shape.layers; ++l) out.push_back(groups::DecoderLayer(l));
  out.push_back(groups::kAttention);
  out.push_back(groups::kGenerator);
  return out;
}

namespace {

using Idx = Eigen::Index;

Idx I(std::size_t n) { return static_cast<Idx>(n); }

template <typename Derived>
void Sigmoid(Eigen::MatrixBase<Derived>&& m) {
  m.array() = (typename Derived::Scalar(1) + (-m.array()).exp()).inverse();
}

template <typename Derived>
void Tanh(Eigen::MatrixBase<Derived>&& m) {
  m.array() = m.array().tanh();
}

}  // namespace

template <typename T>
ModelParams<T> ModelParams<T>::Zeros(const ModelShape& shape) {
  if (shape.vocab_size == 0 || shape.embedding_size == 0 || shape.hidden_size == 0 || shape.layers == 0) {
    throw Error(ErrorCode::kInvalidArgument, "model dimensions must be positive");
  }
  const Idx V = I(shape.vocab_size), E = I(shape.embedding_size), H = I(shape.hidden_size);
  ModelParams p;
  p.shape = shape;
  p.src_embedding = Matrix<T>::Zero(E, V);
  p.tgt_embedding = Matrix<T>::Zero(E, V);
  for (std::size_t l = 0; l < shape.layers; ++l) {
    Idx enc_in = l == 0 ? E : H;
    Idx dec_in = l == 0 ? E + H : H;
    p.encoder.push_back({Matrix<T>::Zero(4 * H, enc_in + H), Matrix<T>::Zero(4 * H, 1)});
    p.decoder.push_back({Matrix<T>::Zero(4 * H, dec_in + H), Matrix<T>::Zero(4 * H, 1)});
  }
  p.attn_score = Matrix<T>::Zero(H, H);
  p.attn_output = Matrix<T>::Zero(H, 2 * H);
  p.gen_weight = Matrix<T>::Zero(V, H);
  p.gen_bias = Matrix<T>::Zero(V, 1);
  return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::Random(const ModelShape& shape, double init_range, Rng& rng) {
  ModelParams p = Zeros(shape);
  p.ForEach([&](const std::string&, const std::string&, Matrix<T>& m) {
    for (Idx r = 0; r < m.rows(); ++r) {
      for (Idx c = 0; c < m.cols(); ++c) m(r, c) = static_cast<T>(rng.Uniform(-init_range, init_range));
    }
  });
  return p;
}

template <typename T>
std::size_t ModelParams<T>::NumParameters() const {
  std::size_t n = 0;
  ForEach([&](const std::string&, const std::string&, const Matrix<T>& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

template <typename T>
bool ModelParams<T>::AllFinite() const {
  bool ok = true;
  ForEach([&](const std::string&, const std::string&, const Matrix<T>& m) { ok = ok && m.allFinite(); });
  return ok;
}

template <typename T>
void ModelParams<T>::SetZero() {
  ForEach([](const std::string&, const std::string&, Matrix<T>& m) { m.setZero(); });
}

Batch MakeBatch(std::span<const TokenPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  Batch batch;
  batch.size = pairs.size();
  for (const auto& p : pairs) {
    if (p.source.empty()) throw Error(ErrorCode::kInvalidArgument, "empty source sequence");
    if (p.target.size() < 2) throw Error(ErrorCode::kInvalidArgument, "target must be wrapped in BOS ... EOS");
    batch.src_steps = std::max(batch.src_steps, p.source.size());
    batch.tgt_steps = std::max(batch.tgt_steps, p.target.size() - 1);
  }
  const std::size_t B = batch.size;
  batch.src.assign(batch.src_steps * B, 0);
  batch.tgt_in.assign(batch.tgt_steps * B, 0);
  batch.tgt_out.assign(batch.tgt_steps * B, 0);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& p = pairs[b];
    for (std::size_t t = 0; t < p.source.size(); ++t) batch.src[t * B + b] = p.source[t];
    for (std::size_t t = 0; t + 1 < p.target.size(); ++t) {
      batch.tgt_in[t * B + b] = p.target[t];
      batch.tgt_out[t * B + b] = p.target[t + 1];
    }
    batch.src_len.push_back(p.source.size());
    batch.tgt_len.push_back(p.target.size() - 1);
    batch.tokens += p.target.size() - 1;
  }
  return batch;
}

namespace {

// Teacher-forced computation graph over one batch with the activations kept
// for back-propagation.
template <typename T>
class Graph {
 public:
  using Mat = Matrix<T>;

  Graph(const ModelParams<T>& params, const Batch& batch, const DropoutOptions& dropout)
      : p_(params),
        batch_(batch),
        dropout_(dropout),
        B_(I(batch.size)),
        S_(I(batch.src_steps)),
        T_(I(batch.tgt_steps)),
        E_(I(params.shape.embedding_size)),
        H_(I(params.shape.hidden_size)),
        V_(I(params.shape.vocab_size)),
        L_(params.shape.layers) {
    if (dropout_.rate < 0.0 || dropout_.rate >= 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "dropout must be in [0, 1)");
    }
    if (dropout_.rate > 0.0 && dropout_.rng == nullptr) {
      throw Error(ErrorCode::kInvalidArgument, "dropout requires a generator");
    }
    auto check = [&](const std::vector<int>& ids) {
      for (int id : ids) {
        if (id < 0 || id >= V_) throw Error(ErrorCode::kVocabulary, "symbol id " + std::to_string(id) + " out of range");
      }
    };
    check(batch.src);
    check(batch.tgt_in);
    check(batch.tgt_out);
  }

  void Encode();
  LossResult<T> Decode();
  void Backward(ModelParams<T>& grads);

  ForwardTrace<T> Trace(const LossResult<T>& loss) const {
    ForwardTrace<T> tr;
    tr.loss = loss;
    for (Idx t = 0; t < T_; ++t) {
      tr.probabilities.push_back(probs_.middleCols(t * B_, B_));
      tr.attention.push_back(alpha_.middleCols(t * B_, B_));
    }
    return tr;
  }

 private:
  struct LayerTrace {
    Mat x;        // (in + H) x (steps * B): [input; h_prev]
    Mat gates;    // 4H x (steps * B), post-activation
    Mat tanh_c;   // H x (steps * B)
    Mat c_out;    // H x ((steps + 1) * B); block 0 is the initial state
    Mat h_out;    // H x ((steps + 1) * B)
    Mat dropout;  // input mask, empty when dropout is off or for layer 0
  };

  void InitTrace(LayerTrace& tr, Idx in, Idx steps, bool with_dropout);
  void StepForward(const LstmWeights<T>& w, LayerTrace& tr, Idx t, const std::vector<std::size_t>* lengths);
  void StepBackward(const LstmWeights<T>& w, const LayerTrace& tr, Idx t, Mat& dh, Mat& dc, Mat& dz_all,
                    Mat& dx_in, const std::vector<std::size_t>* lengths) const;

  const ModelParams<T>& p_;
  const Batch& batch_;
  DropoutOptions dropout_;
  const Idx B_, S_, T_, E_, H_, V_;
  const std::size_t L_;

  std::vector<LayerTrace> enc_, dec_;
  std::vector<Mat> enc_out_;  // per example, H x S
  std::vector<Mat> keys_;     // per example, W_a * enc_out
  Mat feed_;                  // H x ((T + 1) * B), attentional states, block 0 zero
  Mat cat_;                   // 2H x (T * B), [context; h_t]
  Mat alpha_;                 // S x (T * B)
  Mat probs_;                 // V x (T * B)
};

template <typename T>
void Graph<T>::InitTrace(LayerTrace& tr, Idx in, Idx steps, bool with_dropout) {
  tr.x.resize(in + H_, steps * B_);
  tr.gates.resize(4 * H_, steps * B_);
  tr.tanh_c.resize(H_, steps * B_);
  tr.c_out = Mat::Zero(H_, (steps + 1) * B_);
  tr.h_out = Mat::Zero(H_, (steps + 1) * B_);
  if (with_dropout && dropout_.rate > 0.0) {
    const T keep = static_cast<T>(1.0 - dropout_.rate);
    tr.dropout.resize(in, steps * B_);
    for (Idx c = 0; c < tr.dropout.cols(); ++c) {
      for (Idx r = 0; r < in; ++r) {
        tr.dropout(r, c) = dropout_.rng->Uniform() < dropout_.rate ? T(0) : T(1) / keep;
      }
    }
  }
}

template <typename T>
void Graph<T>::StepForward(const LstmWeights<T>& w, LayerTrace& tr, Idx t,
                           const std::vector<std::size_t>* lengths) {
  const Idx H = H_;
  const Idx in = w.weight.cols() - H;
  auto X = tr.x.middleCols(t * B_, B_);
  X.bottomRows(H) = tr.h_out.middleCols(t * B_, B_);
  auto G = tr.gates.middleCols(t * B_, B_);
  G.noalias() = w.weight * X;
  G.colwise() += w.bias.col(0);
  Sigmoid(G.topRows(2 * H));
  Tanh(G.middleRows(2 * H, H));
  Sigmoid(G.bottomRows(H));
  auto c_prev = tr.c_out.middleCols(t * B_, B_);
  auto c_next = tr.c_out.middleCols((t + 1) * B_, B_);
  auto h_next = tr.h_out.middleCols((t + 1) * B_, B_);
  auto tc = tr.tanh_c.middleCols(t * B_, B_);
  c_next.array() = G.middleRows(H, H).array() * c_prev.array() +
                   G.topRows(H).array() * G.middleRows(2 * H, H).array();
  tc.array() = c_next.array().tanh();
  h_next.array() = G.bottomRows(H).array() * tc.array();
  if (lengths) {
    // Past the end of a sequence the state is carried unchanged.
    for (Idx b = 0; b < B_; ++b) {
      if (static_cast<std::size_t>(t) >= (*lengths)[static_cast<std::size_t>(b)]) {
        c_next.col(b) = c_prev.col(b);
        h_next.col(b) = X.col(b).tail(H);
      }
    }
  }
  (void)in;
}

template <typename T>
void Graph<T>::StepBackward(const LstmWeights<T>& w, const LayerTrace& tr, Idx t, Mat& dh, Mat& dc,
                            Mat& dz_all, Mat& dx_in, const std::vector<std::size_t>* lengths) const {
  const Idx H = H_;
  const Idx in = w.weight.cols() - H;
  auto G = tr.gates.middleCols(t * B_, B_).array();
  auto i = G.topRows(H);
  auto f = G.middleRows(H, H);
  auto g = G.middleRows(2 * H, H);
  auto o = G.bottomRows(H);
  auto c_prev = tr.c_out.middleCols(t * B_, B_).array();
  auto tc = tr.tanh_c.middleCols(t * B_, B_).array();
  auto dZ = dz_all.middleCols(t * B_, B_);

  Mat dct = (dc.array() + dh.array() * o * (T(1) - tc.square())).matrix();
  dZ.topRows(H).array() = dct.array() * g * i * (T(1) - i);
  dZ.middleRows(H, H).array() = dct.array() * c_prev * f * (T(1) - f);
  dZ.middleRows(2 * H, H).array() = dct.array() * i * (T(1) - g.square());
  dZ.bottomRows(H).array() = dh.array() * tc * o * (T(1) - o);
  Mat dc_prev = (dct.array() * f).matrix();

  std::vector<Idx> carried;
  if (lengths) {
    for (Idx b = 0; b < B_; ++b) {
      if (static_cast<std::size_t>(t) >= (*lengths)[static_cast<std::size_t>(b)]) {
        dZ.col(b).setZero();
        dc_prev.col(b) = dc.col(b);
        carried.push_back(b);
      }
    }
  }
  Mat dX = w.weight.transpose() * dZ;
  dx_in = dX.topRows(in);
  Mat dh_prev = dX.bottomRows(H);
  for (Idx b : carried) dh_prev.col(b) = dh.col(b);
  dh = std::move(dh_prev);
  dc = std::move(dc_prev);
}

template <typename T>
void Graph<T>::Encode() {
  enc_.assign(L_, LayerTrace{});
  for (std::size_t l = 0; l < L_; ++l) {
    const Idx in = l == 0 ? E_ : H_;
    auto& tr = enc_[l];
    InitTrace(tr, in, S_, l > 0);
    for (Idx t = 0; t < S_; ++t) {
      auto X = tr.x.middleCols(t * B_, B_);
      if (l == 0) {
        for (Idx b = 0; b < B_; ++b) {
          X.col(b).head(E_) = p_.src_embedding.col(batch_.src[static_cast<std::size_t>(t * B_ + b)]);
        }
      } else {
        X.topRows(H_) = enc_[l - 1].h_out.middleCols((t + 1) * B_, B_);
        if (tr.dropout.size()) X.topRows(H_).array() *= tr.dropout.middleCols(t * B_, B_).array();
      }
      StepForward(p_.encoder[l], tr, t, &batch_.src_len);
    }
  }
  const auto& top = enc_.back();
  enc_out_.assign(static_cast<std::size_t>(B_), Mat(H_, S_));
  keys_.assign(static_cast<std::size_t>(B_), Mat());
  for (Idx b = 0; b < B_; ++b) {
    auto& out = enc_out_[static_cast<std::size_t>(b)];
    for (Idx s = 0; s < S_; ++s) out.col(s) = top.h_out.col((s + 1) * B_ + b);
    keys_[static_cast<std::size_t>(b)].noalias() = p_.attn_score * out;
  }
}

template <typename T>
LossResult<T> Graph<T>::Decode() {
  dec_.assign(L_, LayerTrace{});
  for (std::size_t l = 0; l < L_; ++l) {
    const Idx in = l == 0 ? E_ + H_ : H_;
    InitTrace(dec_[l], in, T_, l > 0);
    dec_[l].c_out.leftCols(B_) = enc_[l].c_out.middleCols(S_ * B_, B_);
    dec_[l].h_out.leftCols(B_) = enc_[l].h_out.middleCols(S_ * B_, B_);
  }
  feed_ = Mat::Zero(H_, (T_ + 1) * B_);
  cat_.resize(2 * H_, T_ * B_);
  alpha_ = Mat::Zero(S_, T_ * B_);

  Eigen::Matrix<T, Eigen::Dynamic, 1> scores(S_);
  for (Idx t = 0; t < T_; ++t) {
    for (std::size_t l = 0; l < L_; ++l) {
      auto& tr = dec_[l];
      auto X = tr.x.middleCols(t * B_, B_);
      if (l == 0) {
        for (Idx b = 0; b < B_; ++b) {
          X.col(b).head(E_) = p_.tgt_embedding.col(batch_.tgt_in[static_cast<std::size_t>(t * B_ + b)]);
        }
        X.middleRows(E_, H_) = feed_.middleCols(t * B_, B_);
      } else {
        X.topRows(H_) = dec_[l - 1].h_out.middleCols((t + 1) * B_, B_);
        if (tr.dropout.size()) X.topRows(H_).array() *= tr.dropout.middleCols(t * B_, B_).array();
      }
      StepForward(p_.decoder[l], tr, t, nullptr);
    }
    auto h_t = dec_.back().h_out.middleCols((t + 1) * B_, B_);
    for (Idx b = 0; b < B_; ++b) {
      const Idx len = I(batch_.src_len[static_cast<std::size_t>(b)]);
      const auto& enc = enc_out_[static_cast<std::size_t>(b)];
      scores.head(len).noalias() = keys_[static_cast<std::size_t>(b)].leftCols(len).transpose() * h_t.col(b);
      T mx = scores.head(len).maxCoeff();
      auto a = alpha_.col(t * B_ + b);
      a.head(len) = (scores.head(len).array() - mx).exp().matrix();
      a.head(len) /= a.head(len).sum();
      cat_.col(t * B_ + b).head(H_).noalias() = enc.leftCols(len) * a.head(len);
      cat_.col(t * B_ + b).tail(H_) = h_t.col(b);
    }
    auto fb = feed_.middleCols((t + 1) * B_, B_);
    fb.noalias() = p_.attn_output * cat_.middleCols(t * B_, B_);
    Tanh(std::move(fb));
  }

  probs_.resize(V_, T_ * B_);
  probs_.noalias() = p_.gen_weight * feed_.rightCols(T_ * B_);
  probs_.colwise() += p_.gen_bias.col(0);

  LossResult<T> result;
  result.example_nll.assign(static_cast<std::size_t>(B_), T(0));
  for (Idx t = 0; t < T_; ++t) {
    for (Idx b = 0; b < B_; ++b) {
      const Idx col = t * B_ + b;
      auto z = probs_.col(col);
      T mx = z.maxCoeff();
      T lse = mx + std::log((z.array() - mx).exp().sum());
      if (static_cast<std::size_t>(t) < batch_.tgt_len[static_cast<std::size_t>(b)]) {
        T nll = lse - z(batch_.tgt_out[static_cast<std::size_t>(col)]);
        result.example_nll[static_cast<std::size_t>(b)] += nll;
        result.total_nll += nll;
      }
      z.array() = (z.array() - lse).exp();
    }
  }
  result.tokens = batch_.tokens;
  result.loss = result.total_nll / static_cast<T>(result.tokens);
  return result;
}

template <typename T>
void Graph<T>::Backward(ModelParams<T>& grads) {
  grads = ModelParams<T>::Zeros(p_.shape);
  const T scale = T(1) / static_cast<T>(batch_.tokens);

  Mat dlogits = probs_;
  for (Idx t = 0; t < T_; ++t) {
    for (Idx b = 0; b < B_; ++b) {
      const Idx col = t * B_ + b;
      if (static_cast<std::size_t>(t) < batch_.tgt_len[static_cast<std::size_t>(b)]) {
        dlogits(batch_.tgt_out[static_cast<std::size_t>(col)], col) -= T(1);
        dlogits.col(col) *= scale;
      } else {
        dlogits.col(col).setZero();
      }
    }
  }
  grads.gen_weight.noalias() = dlogits * feed_.rightCols(T_ * B_).transpose();
  grads.gen_bias = dlogits.rowwise().sum();
  Mat dfeed_all = p_.gen_weight.transpose() * dlogits;

  Mat dpre(H_, T_ * B_);
  std::vector<Mat> dh(L_, Mat::Zero(H_, B_)), dc(L_, Mat::Zero(H_, B_));
  std::vector<Mat> dz_dec(L_);
  for (std::size_t l = 0; l < L_; ++l) dz_dec[l].resize(4 * H_, T_ * B_);
  std::vector<Mat> d_enc(static_cast<std::size_t>(B_), Mat::Zero(H_, S_));
  std::vector<Mat> d_keys(static_cast<std::size_t>(B_), Mat::Zero(H_, S_));
  Mat dfeed_next = Mat::Zero(H_, B_);
  Mat dx_in;
  Eigen::Matrix<T, Eigen::Dynamic, 1> dalpha(S_), dscore(S_);

  for (Idx t = T_ - 1; t >= 0; --t) {
    auto htil = feed_.middleCols((t + 1) * B_, B_);
    auto dp = dpre.middleCols(t * B_, B_);
    dp.array() = (dfeed_all.middleCols(t * B_, B_) + dfeed_next).array() * (T(1) - htil.array().square());
    Mat dcat = p_.attn_output.transpose() * dp;
    Mat dh_top = dcat.bottomRows(H_);
    auto h_t = dec_.back().h_out.middleCols((t + 1) * B_, B_);
    for (Idx b = 0; b < B_; ++b) {
      const auto sb = static_cast<std::size_t>(b);
      const Idx len = I(batch_.src_len[sb]);
      auto a = alpha_.col(t * B_ + b).head(len);
      auto dctx = dcat.col(b).head(H_);
      dalpha.head(len).noalias() = enc_out_[sb].leftCols(len).transpose() * dctx;
      d_enc[sb].leftCols(len).noalias() += dctx * a.transpose();
      T dot = a.dot(dalpha.head(len));
      dscore.head(len) = (a.array() * (dalpha.head(len).array() - dot)).matrix();
      d_keys[sb].leftCols(len).noalias() += h_t.col(b) * dscore.head(len).transpose();
      dh_top.col(b).noalias() += keys_[sb].leftCols(len) * dscore.head(len);
    }

    Mat from_above = std::move(dh_top);
    for (std::size_t l = L_; l-- > 0;) {
      dh[l] += from_above;
      StepBackward(p_.decoder[l], dec_[l], t, dh[l], dc[l], dz_dec[l], dx_in, nullptr);
      if (l > 0) {
        from_above = dx_in;
        if (dec_[l].dropout.size()) from_above.array() *= dec_[l].dropout.middleCols(t * B_, B_).array();
      } else {
        for (Idx b = 0; b < B_; ++b) {
          grads.tgt_embedding.col(batch_.tgt_in[static_cast<std::size_t>(t * B_ + b)]) += dx_in.col(b).head(E_);
        }
        dfeed_next = dx_in.middleRows(E_, H_);
      }
    }
  }
  for (std::size_t l = 0; l < L_; ++l) {
    grads.decoder[l].weight.noalias() = dz_dec[l] * dec_[l].x.transpose();
    grads.decoder[l].bias = dz_dec[l].rowwise().sum();
  }
  grads.attn_output.noalias() = dpre * cat_.transpose();
  for (Idx b = 0; b < B_; ++b) {
    const auto sb = static_cast<std::size_t>(b);
    grads.attn_score.noalias() += d_keys[sb] * enc_out_[sb].transpose();
    d_enc[sb].noalias() += p_.attn_score.transpose() * d_keys[sb];
  }

  // Encoder, top layer first. dh/dc now hold the gradient of the decoder's
  // initial state, i.e. of the encoder's final state.
  Mat d_ext(H_, S_ * B_);
  for (Idx s = 0; s < S_; ++s) {
    for (Idx b = 0; b < B_; ++b) d_ext.col(s * B_ + b) = d_enc[static_cast<std::size_t>(b)].col(s);
  }
  Mat dz(4 * H_, S_ * B_);
  for (std::size_t l = L_; l-- > 0;) {
    Mat d_below;
    if (l > 0) d_below.resize(H_, S_ * B_);
    Mat& dhc = dh[l];
    Mat& dcc = dc[l];
    for (Idx s = S_ - 1; s >= 0; --s) {
      dhc += d_ext.middleCols(s * B_, B_);
      StepBackward(p_.encoder[l], enc_[l], s, dhc, dcc, dz, dx_in, &batch_.src_len);
      if (l > 0) {
        d_below.middleCols(s * B_, B_) = dx_in;
        if (enc_[l].dropout.size()) d_below.middleCols(s * B_, B_).array() *= enc_[l].dropout.middleCols(s * B_, B_).array();
      } else {
        for (Idx b = 0; b < B_; ++b) {
          if (static_cast<std::size_t>(s) < batch_.src_len[static_cast<std::size_t>(b)]) {
            grads.src_embedding.col(batch_.src[static_cast<std::size_t>(s * B_ + b)]) += dx_in.col(b);
          }
        }
      }
    }
    grads.encoder[l].weight.noalias() = dz * enc_[l].x.transpose();
    grads.encoder[l].bias = dz.rowwise().sum();
    if (l > 0) d_ext = std::move(d_below);
  }
}

}  // namespace

template <typename T>
LossResult<T> ComputeLoss(const ModelParams<T>& params, const Batch& batch) {
  Graph<T> g(params, batch, {});
  g.Encode();
  return g.Decode();
}

template <typename T>
ForwardTrace<T> TraceForward(const ModelParams<T>& params, const Batch& batch) {
  Graph<T> g(params, batch, {});
  g.Encode();
  auto loss = g.Decode();
  return g.Trace(loss);
}

template <typename T>
LossResult<T> ComputeGradients(const ModelParams<T>& params, const Batch& batch, ModelParams<T>& grads,
                               const DropoutOptions& dropout) {
  Graph<T> g(params, batch, dropout);
  g.Encode();
  auto loss = g.Decode();
  if (!std::isfinite(static_cast<double>(loss.loss))) {
    throw Error(ErrorCode::kDivergence, "loss is not finite");
  }
  g.Backward(grads);
  if (!grads.AllFinite()) throw Error(ErrorCode::kDivergence, "gradient is not finite");
  return loss;
}

// ---------------------------------------------------------------------------
// Inference

std::size_t DefaultMaxDecodeLength(std::size_t source_length) { return 3 * source_length + 10; }

namespace {

template <typename T>
struct EncodedSource {
  Matrix<T> enc;   // H x S
  Matrix<T> keys;  // H x S
};

template <typename T>
struct DecoderState {
  std::vector<Matrix<T>> h, c;  // per layer, H x k
  Matrix<T> feed;               // H x k

  void Select(const std::vector<std::size_t>& columns) {
    auto pick = [&](Matrix<T>& m) {
      Matrix<T> out(m.rows(), I(columns.size()));
      for (std::size_t j = 0; j < columns.size(); ++j) out.col(I(j)) = m.col(I(columns[j]));
      m = std::move(out);
    };
    for (auto& m : h) pick(m);
    for (auto& m : c) pick(m);
    pick(feed);
  }
};

template <typename T>
std::pair<EncodedSource<T>, DecoderState<T>> EncodeForInference(const ModelParams<T>& params,
                                                                const std::vector<int>& source) {
  const std::size_t L = params.shape.layers;
  const Idx H = I(params.shape.hidden_size);
  const Idx S = I(source.size());
  if (source.empty()) throw Error(ErrorCode::kInvalidArgument, "empty source sequence");
  for (int id : source) {
    if (id < 0 || static_cast<std::size_t>(id) >= params.shape.vocab_size) {
      throw Error(ErrorCode::kVocabulary, "symbol id " + std::to_string(id) + " out of range");
    }
  }
  DecoderState<T> state;
  state.h.assign(L, Matrix<T>::Zero(H, 1));
  state.c.assign(L, Matrix<T>::Zero(H, 1));
  state.feed = Matrix<T>::Zero(H, 1);
  EncodedSource<T> src;
  src.enc.resize(H, S);
  Matrix<T> x, z;
  for (Idx s = 0; s < S; ++s) {
    for (std::size_t l = 0; l < L; ++l) {
      const auto& w = params.encoder[l];
      const Idx in = w.weight.cols() - H;
      x.resize(in + H, 1);
      if (l == 0) {
        x.topRows(in) = params.src_embedding.col(source[static_cast<std::size_t>(s)]);
      } else {
        x.topRows(in) = state.h[l - 1];
      }
      x.bottomRows(H) = state.h[l];
      z.noalias() = w.weight * x;
      z += w.bias;
      Sigmoid(z.topRows(2 * H));
      Tanh(z.middleRows(2 * H, H));
      Sigmoid(z.bottomRows(H));
      state.c[l].array() = z.middleRows(H, H).array() * state.c[l].array() +
                           z.topRows(H).array() * z.middleRows(2 * H, H).array();
      state.h[l].array() = z.bottomRows(H).array() * state.c[l].array().tanh();
    }
    src.enc.col(s) = state.h[L - 1];
  }
  src.keys.noalias() = params.attn_score * src.enc;
  return {std::move(src), std::move(state)};
}

// One decoder step for k hypotheses; returns V x k log-probabilities.
template <typename T>
Matrix<T> DecodeStep(const ModelParams<T>& params, const EncodedSource<T>& src, DecoderState<T>& state,
                     const std::vector<int>& inputs) {
  const std::size_t L = params.shape.layers;
  const Idx H = I(params.shape.hidden_size);
  const Idx E = I(params.shape.embedding_size);
  const Idx k = I(inputs.size());
  Matrix<T> x, z;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& w = params.decoder[l];
    const Idx in = w.weight.cols() - H;
    x.resize(in + H, k);
    if (l == 0) {
      for (Idx j = 0; j < k; ++j) x.col(j).head(E) = params.tgt_embedding.col(inputs[static_cast<std::size_t>(j)]);
      x.middleRows(E, H) = state.feed;
    } else {
      x.topRows(in) = state.h[l - 1];
    }
    x.bottomRows(H) = state.h[l];
    z.noalias() = w.weight * x;
    z.colwise() += w.bias.col(0);
    Sigmoid(z.topRows(2 * H));
    Tanh(z.middleRows(2 * H, H));
    Sigmoid(z.bottomRows(H));
    state.c[l].array() = z.middleRows(H, H).array() * state.c[l].array() +
                         z.topRows(H).array() * z.middleRows(2 * H, H).array();
    state.h[l].array() = z.bottomRows(H).array() * state.c[l].array().tanh();
  }
  const auto& h = state.h[L - 1];
  Matrix<T> scores = src.keys.transpose() * h;  // S x k
  for (Idx j = 0; j < k; ++j) {
    auto col = scores.col(j);
    T mx = col.maxCoeff();
    col.array() = (col.array() - mx).exp();
    col /= col.sum();
  }
  Matrix<T> cat(2 * H, k);
  cat.topRows(H).noalias() = src.enc * scores;
  cat.bottomRows(H) = h;
  state.feed.noalias() = params.attn_output * cat;
  Tanh(state.feed.topRows(H));
  Matrix<T> logp = params.gen_weight * state.feed;
  logp.colwise() += params.gen_bias.col(0);
  for (Idx j = 0; j < k; ++j) {
    auto col = logp.col(j);
    T mx = col.maxCoeff();
    T lse = mx + std::log((col.array() - mx).exp().sum());
    col.array() -= lse;
  }
  return logp;
}

template <typename T>
int ArgMax(const Eigen::Ref<const Matrix<T>>& col) {
  int best = 0;
  for (Idx v = 1; v < col.rows(); ++v) {
    if (col(v, 0) > col(best, 0)) best = static_cast<int>(v);
  }
  return best;
}

}  // namespace

template <typename T>
DecodeResult GreedyDecode(const ModelParams<T>& params, const std::vector<int>& source, std::size_t max_len) {
  auto [src, state] = EncodeForInference(params, source);
  DecodeResult result;
  int input = kBosId;
  while (result.tokens.size() < max_len) {
    Matrix<T> logp = DecodeStep(params, src, state, {input});
    int best = ArgMax<T>(logp.col(0));
    result.score += static_cast<double>(logp(best, 0));
    result.tokens.push_back(best);
    if (best == kEosId) return result;
    input = best;
  }
  result.hit_length_cap = true;
  return result;
}

template <typename T>
DecodeResult BeamDecode(const ModelParams<T>& params, const std::vector<int>& source, std::size_t beam_width,
                        std::size_t max_len) {
  if (beam_width == 0) throw Error(ErrorCode::kInvalidArgument, "beam width must be at least 1");
  struct Hyp {
    std::vector<int> tokens;
    double score;
  };
  struct Candidate {
    double score;
    std::size_t parent;
    int token;
  };

  auto [src, state] = EncodeForInference(params, source);
  std::vector<Hyp> active = {Hyp{{}, 0.0}};
  std::vector<Hyp> finished;

  for (std::size_t step = 0; step < max_len && !active.empty(); ++step) {
    std::vector<int> inputs;
    for (const auto& h : active) inputs.push_back(h.tokens.empty() ? kBosId : h.tokens.back());
    Matrix<T> logp = DecodeStep(params, src, state, inputs);

    std::vector<Candidate> cands;
    cands.reserve(active.size() * static_cast<std::size_t>(logp.rows()));
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (Idx v = 0; v < logp.rows(); ++v) {
        cands.push_back({active[a].score + static_cast<double>(logp(v, I(a))), a, static_cast<int>(v)});
      }
    }
    const std::size_t top = std::min(beam_width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(top), cands.end(),
                      [](const Candidate& x, const Candidate& y) {
                        if (x.score != y.score) return x.score > y.score;
                        if (x.parent != y.parent) return x.parent < y.parent;
                        return x.token < y.token;
                      });

    // The beam shrinks as hypotheses finish.
    std::vector<Hyp> next;
    std::vector<std::size_t> parents;
    for (std::size_t j = 0; j < top; ++j) {
      const auto& c = cands[j];
      Hyp h{active[c.parent].tokens, c.score};
      h.tokens.push_back(c.token);
      if (c.token == kEosId) {
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
        parents.push_back(c.parent);
      }
    }
    active = std::move(next);
    if (active.empty()) break;
    // Scores only decrease, so nothing active can overtake the best finished hypothesis.
    double best_finished = -std::numeric_limits<double>::infinity();
    for (const auto& f : finished) best_finished = std::max(best_finished, f.score);
    if (best_finished >= active.front().score) break;
    state.Select(parents);
  }

  DecodeResult result;
  if (!finished.empty()) {
    const Hyp* best = &finished.front();
    for (const auto& f : finished) {
      if (f.score > best->score) best = &f;
    }
    result.tokens = best->tokens;
    result.score = best->score;
  } else {
    result.tokens = active.front().tokens;
    result.score = active.front().score;
    result.hit_length_cap = true;
  }

  if (beam_width > 1) {
    // Pruning can drop the greedy path; never return anything worse than it.
    DecodeResult greedy = GreedyDecode(params, source, max_len);
    if (greedy.score > result.score) return greedy;
  }
  return result;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template LossResult<float> ComputeLoss(const ModelParams<float>&, const Batch&);
template LossResult<double> ComputeLoss(const ModelParams<double>&, const Batch&);
template ForwardTrace<float> TraceForward(const ModelParams<float>&, const Batch&);
template ForwardTrace<double> TraceForward(const ModelParams<double>&, const Batch&);
template LossResult<float> ComputeGradients(const ModelParams<float>&, const Batch&, ModelParams<float>&,
                                            const DropoutOptions&);
template LossResult<double> ComputeGradients(const ModelParams<double>&, const Batch&, ModelParams<double>&,
                                             const DropoutOptions&);
template DecodeResult GreedyDecode(const ModelParams<float>&, const std::vector<int>&, std::size_t);
template DecodeResult GreedyDecode(const ModelParams<double>&, const std::vector<int>&, std::size_t);
template DecodeResult BeamDecode(const ModelParams<float>&, const std::vector<int>&, std::size_t, std::size_t);
template DecodeResult BeamDecode(const ModelParams<double>&, const std::vector<int>&, std::size_t, std::size_t);

}  // namespace dialect
