// Copyright 2026 The rnncoref Authors.
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

// The scoring model.
//
// For mention x_n and candidate y (0 stands for "no antecedent"):
//
//   f(n, y) = u . [h_a(n); h_p(n, y)] + u0          y != 0
//           = v . h_a(n) + v0                       y == 0
//   g(n, y) = h_c(n) . h[cluster(y)]_{<n}           y != 0
//           = q . tanh(W_s [phi_a(n); sum_m h[m]_{<n}] + b_s)
//
// where h[m]_{<n} is the LSTM state of cluster m after consuming its members
// that precede n. Training minimizes, per mention,
//
//   max_yhat cost(yhat) * (1 + s(yhat) - s(y_latent)),   s = f + g,
//
// with cluster states taken from the gold clustering.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rnncoref/corpus.hpp"
#include "rnncoref/features.hpp"
#include "rnncoref/nn.hpp"

namespace rnncoref {

inline constexpr int kNoAntecedent = 0;

struct Dims {
  int anaphoric = 200;  // h_a
  int pairwise = 700;   // h_p
  int cluster = 200;    // h_c and the LSTM state
  int na_hidden = 200;  // NA hidden layer

  bool operator==(const Dims &) const = default;
};

struct DropoutRates {
  Real concat = 0.4;  // on [h_a; h_p] before u (and on h_a before v)
  Real state = 0.3;   // on cluster states before they are scored

  bool operator==(const DropoutRates &) const = default;
};

// Mistake weights for false link, false new and wrong link.
struct CostWeights {
  Real false_link = 0.5;
  Real false_new = 1.2;
  Real wrong_link = 1.0;

  bool operator==(const CostWeights &) const = default;
};

class Model {
 public:
  Model() = default;

  // All parameters zero. Call initialize() for a trainable starting point.
  Model(FeatureVocabulary vocab, Dims dims) : vocab_(std::move(vocab)), dims_(dims) {
    if (dims.anaphoric <= 0 || dims.pairwise <= 0 || dims.cluster <= 0 || dims.na_hidden <= 0) {
      throw std::invalid_argument("model dimensions must be positive");
    }
    const int fa = vocab_.anaphoricity_size();
    const int fp = vocab_.pairwise_size();
    w_a = Parameter("w_a", ParamGroup::kAnaphoric, dims.anaphoric, fa);
    b_a = Parameter("b_a", ParamGroup::kAnaphoric, dims.anaphoric, 1);
    w_p = Parameter("w_p", ParamGroup::kPairwise, dims.pairwise, fp);
    b_p = Parameter("b_p", ParamGroup::kPairwise, dims.pairwise, 1);
    w_c = Parameter("w_c", ParamGroup::kCluster, dims.cluster, vocab_.cluster_input_size());
    b_c = Parameter("b_c", ParamGroup::kCluster, dims.cluster, 1);
    u = Parameter("u", ParamGroup::kLocal, dims.anaphoric + dims.pairwise, 1);
    u0 = Parameter("u0", ParamGroup::kLocal, 1, 1);
    v = Parameter("v", ParamGroup::kLocal, dims.anaphoric, 1);
    v0 = Parameter("v0", ParamGroup::kLocal, 1, 1);
    lstm = LstmParams(dims.cluster, dims.cluster);
    w_s = Parameter("w_s", ParamGroup::kNa, dims.na_hidden, fa + dims.cluster);
    b_s = Parameter("b_s", ParamGroup::kNa, dims.na_hidden, 1);
    q = Parameter("q", ParamGroup::kNa, dims.na_hidden, 1);
  }

  // Weights uniform in +-1/sqrt(fan-in), biases zero except the LSTM forget
  // gate bias, which starts at 1.
  void initialize(Rng &rng) {
    for (Parameter *p : parameters()) {
      const bool is_bias = p->value.cols() == 1 && p->name.rfind("b_") != std::string::npos;
      if (is_bias || p->name == "u0" || p->name == "v0") {
        p->value.setZero();
        continue;
      }
      // Vectors (u, v, q) have fan-in equal to their length.
      const Eigen::Index fan_in = p->value.cols() == 1 ? p->value.rows() : p->value.cols();
      init_uniform(*p, 1.0 / std::sqrt(static_cast<Real>(std::max<Eigen::Index>(fan_in, 1))),
                   rng);
    }
    lstm.b_f.value.setOnes();
  }

  const FeatureVocabulary &vocab() const { return vocab_; }
  const Dims &dims() const { return dims_; }

  // Declared order; the model file stores tensors in this order.
  std::vector<Parameter *> parameters() {
    std::vector<Parameter *> out = {&w_a, &b_a, &w_p, &b_p, &w_c, &b_c, &u, &u0, &v, &v0};
    for (Parameter *p : lstm.parameters()) out.push_back(p);
    out.insert(out.end(), {&w_s, &b_s, &q});
    return out;
  }
  std::vector<const Parameter *> parameters() const {
    std::vector<const Parameter *> out;
    for (Parameter *p : const_cast<Model *>(this)->parameters()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (Parameter *p : parameters()) p->zero_grad();
  }

  bool all_finite() const {
    for (const Parameter *p : parameters()) {
      if (!p->value.allFinite()) return false;
    }
    return true;
  }

  Parameter w_a, b_a;  // h_a
  Parameter w_p, b_p;  // h_p
  Parameter w_c, b_c;  // h_c
  Parameter u, u0, v, v0;
  LstmParams lstm;
  Parameter w_s, b_s, q;  // NA

 private:
  FeatureVocabulary vocab_;
  Dims dims_;
};

// --- Embeddings --------------------------------------------------------------

inline Vector embed_anaphoric(const Model &m, const SparseFeatures &phi_a) {
  return sparse_affine_tanh(m.w_a.value, m.b_a.vec(), phi_a);
}
inline Vector embed_pairwise(const Model &m, const SparseFeatures &phi_p) {
  return sparse_affine_tanh(m.w_p.value, m.b_p.vec(), phi_p);
}
inline Vector embed_cluster_input(const Model &m, const SparseFeatures &phi_c) {
  return sparse_affine_tanh(m.w_c.value, m.b_c.vec(), phi_c);
}

inline Vector embed_anaphoric(const Model &m, const Document &doc, int n) {
  return embed_anaphoric(m, extract_anaphoricity(doc, n, m.vocab()));
}
inline Vector embed_pairwise(const Model &m, const Document &doc, int n, int y) {
  return embed_pairwise(m, extract_pairwise(doc, n, y, m.vocab()));
}
inline Vector embed_cluster_input(const Model &m, const Document &doc, int n) {
  return embed_cluster_input(m, cluster_input_features(doc, n, m.vocab()));
}

// --- Score primitives ----------------------------------------------------------

// Dropout masks for one mention decision. Empty vectors mean no dropout.
struct DecisionMasks {
  Vector concat;  // size anaphoric + pairwise
  Vector state;   // size cluster
};

inline DecisionMasks draw_masks(const Model &m, const DropoutRates &rates, bool global,
                                Rng &rng) {
  DecisionMasks out;
  out.concat = dropout_mask(m.dims().anaphoric + m.dims().pairwise, rates.concat, rng);
  if (global) out.state = dropout_mask(m.dims().cluster, rates.state, rng);
  return out;
}

namespace model_detail {

inline Vector masked(const Vector &x, const Vector &mask, Eigen::Index offset) {
  if (mask.size() == 0) return x;
  return x.cwiseProduct(mask.segment(offset, x.size()));
}

}  // namespace model_detail

// f(n, y) for y != 0, from precomputed embeddings.
inline Real local_antecedent_score(const Model &m, const Vector &ha, const Vector &hp,
                                   const DecisionMasks *masks = nullptr) {
  const int da = m.dims().anaphoric;
  const int dp = m.dims().pairwise;
  const Vector empty;
  const Vector &mask = masks ? masks->concat : empty;
  return m.u.vec().head(da).dot(model_detail::masked(ha, mask, 0)) +
         m.u.vec().tail(dp).dot(model_detail::masked(hp, mask, da)) + m.u0.scalar();
}

// f(n, 0).
inline Real local_na_score(const Model &m, const Vector &ha,
                           const DecisionMasks *masks = nullptr) {
  const Vector empty;
  return m.v.vec().dot(model_detail::masked(ha, masks ? masks->concat : empty, 0)) +
         m.v0.scalar();
}

// h_c(n) . state
inline Real cluster_match_score(const Vector &hc, const Vector &state,
                                const DecisionMasks *masks = nullptr) {
  const Vector empty;
  return hc.dot(model_detail::masked(state, masks ? masks->state : empty, 0));
}

struct NaForward {
  Vector state_sum;  // after dropout
  Vector hidden;     // tanh output
  Real score = 0.0;
};

// NA(n) from phi_a(n) and the (undropped) sum of current cluster states.
inline NaForward na_forward(const Model &m, const SparseFeatures &phi_a, const Vector &state_sum,
                            const DecisionMasks *masks = nullptr) {
  const Vector empty;
  NaForward out;
  out.state_sum = model_detail::masked(state_sum, masks ? masks->state : empty, 0);
  Vector pre = m.b_s.vec();
  for (const FeatureEntry &e : phi_a) pre.noalias() += e.value * m.w_s.value.col(e.index);
  pre.noalias() += m.w_s.value.rightCols(m.dims().cluster) * out.state_sum;
  out.hidden = pre.array().tanh().matrix();
  out.score = m.q.vec().dot(out.hidden);
  return out;
}

// --- Cluster states ------------------------------------------------------------

struct ClusterState {
  Vector h;
  Vector c;
  int size = 0;

  static ClusterState empty(int dim) { return {Vector::Zero(dim), Vector::Zero(dim), 0}; }
};

inline ClusterState advance_cluster(const Model &m, const ClusterState &state,
                                    const Vector &hc) {
  auto [h, c] = lstm_step(m.lstm, hc, state.h, state.c);
  return {std::move(h), std::move(c), state.size + 1};
}

inline ClusterState advance_cluster(const Model &m, const ClusterState &state,
                                    const Document &doc, int n) {
  return advance_cluster(m, state, embed_cluster_input(m, doc, n));
}

// Sum of the states of clusters that have consumed at least one mention.
inline Vector sum_states(std::span<const ClusterState> states, int dim) {
  Vector sum = Vector::Zero(dim);
  for (const ClusterState &s : states) {
    if (s.size > 0) sum += s.h;
  }
  return sum;
}

inline Real na_score(const Model &m, const Document &doc, int n,
                     std::span<const ClusterState> states,
                     const DecisionMasks *masks = nullptr) {
  return na_forward(m, extract_anaphoricity(doc, n, m.vocab()),
                    sum_states(states, m.dims().cluster), masks)
      .score;
}

inline void check_candidate(int n, int y) {
  if (y < 0 || y >= n) {
    throw std::out_of_range("candidate " + std::to_string(y) + " not in Y(x_" +
                            std::to_string(n) + ")");
  }
}

inline Real local_score_f(const Model &m, const Document &doc, int n, int y,
                          const DecisionMasks *masks = nullptr) {
  check_candidate(n, y);
  const Vector ha = embed_anaphoric(m, doc, n);
  if (y == kNoAntecedent) return local_na_score(m, ha, masks);
  return local_antecedent_score(m, ha, embed_pairwise(m, doc, n, y), masks);
}

// g(n, y). `cluster_of` maps mentions (1-based) to cluster ids indexing
// `states` (1-based).
inline Real global_score_g(const Model &m, const Document &doc, int n, int y,
                           std::span<const int> cluster_of,
                           std::span<const ClusterState> states,
                           const DecisionMasks *masks = nullptr) {
  check_candidate(n, y);
  if (y == kNoAntecedent) return na_score(m, doc, n, states, masks);
  const ClusterState &s = states[cluster_of[y - 1] - 1];
  return cluster_match_score(embed_cluster_input(m, doc, n), s.h, masks);
}

// --- Oracle states --------------------------------------------------------------

// Every gold cluster's full LSTM trajectory, plus an N x M table of how many
// members of each cluster precede each mention, so h[m]_{<n} is O(1).
class OracleStates {
 public:
  OracleStates() = default;

  // `hc` holds h_c(n) for every mention (index n-1).
  OracleStates(const Model &m, const Clustering &oracle, std::span<const Vector> hc)
      : clustering_(oracle), zero_(Vector::Zero(m.dims().cluster)) {
    const int big_n = oracle.num_mentions();
    const int big_m = oracle.num_clusters();
    trajectories_.resize(big_m);
    for (int c = 1; c <= big_m; ++c) {
      Vector h = zero_, cell = zero_;
      for (int member : oracle.cluster(c)) {
        LstmCache k = lstm_forward(m.lstm, hc[member - 1], h, cell);
        h = k.h;
        cell = k.c;
        trajectories_[c - 1].push_back(std::move(k));
      }
    }
    consumed_.assign(static_cast<std::size_t>(big_n), std::vector<int>(big_m, 0));
    std::vector<int> running(big_m, 0);
    for (int n = 1; n <= big_n; ++n) {
      consumed_[n - 1] = running;
      ++running[oracle.cluster_of(n) - 1];
    }
  }

  const Clustering &clustering() const { return clustering_; }
  int num_clusters() const { return static_cast<int>(trajectories_.size()); }

  // Members of cluster m (1-based) with index < n.
  int consumed(int m, int n) const { return consumed_[n - 1][m - 1]; }

  const std::vector<LstmCache> &trajectory(int m) const { return trajectories_[m - 1]; }

  const Vector &state_before(int m, int n) const {
    const int j = consumed(m, n);
    return j == 0 ? zero_ : trajectories_[m - 1][j - 1].h;
  }

  ClusterState cluster_state_before(int m, int n) const {
    const int j = consumed(m, n);
    if (j == 0) return ClusterState::empty(static_cast<int>(zero_.size()));
    const LstmCache &k = trajectories_[m - 1][j - 1];
    return {k.h, k.c, j};
  }

  std::vector<ClusterState> states_before(int n) const {
    std::vector<ClusterState> out;
    out.reserve(trajectories_.size());
    for (int m = 1; m <= num_clusters(); ++m) out.push_back(cluster_state_before(m, n));
    return out;
  }

 private:
  Clustering clustering_;
  Vector zero_;
  std::vector<std::vector<LstmCache>> trajectories_;
  std::vector<std::vector<int>> consumed_;
};

inline std::vector<Vector> embed_all_cluster_inputs(const Model &m, const DocumentFeatures &f) {
  std::vector<Vector> hc;
  hc.reserve(f.size());
  for (int n = 1; n <= f.size(); ++n) hc.push_back(embed_cluster_input(m, f.phi_c(n)));
  return hc;
}

inline OracleStates precompute_oracle_states(const Model &m, const Document &doc,
                                             const Clustering &oracle) {
  const DocumentFeatures f = DocumentFeatures::extract(doc, m.vocab());
  const std::vector<Vector> hc = embed_all_cluster_inputs(m, f);
  return OracleStates(m, oracle, hc);
}

// --- Latent antecedent and mistake cost ---------------------------------------------

// `scores[y]` is s(n, y) for y = 0..n-1. Highest-scoring gold antecedent,
// ties to the smaller index; 0 when x_n starts its gold cluster.
inline int latent_antecedent(std::span<const Real> scores, int n, const Clustering &oracle) {
  if (!oracle.anaphoric(n)) return kNoAntecedent;
  int best = kNoAntecedent;
  for (int y = 1; y < n; ++y) {
    if (!oracle.coreferent(y, n)) continue;
    if (best == kNoAntecedent || scores[y] > scores[best]) best = y;
  }
  return best;
}

inline Real mistake_cost(int n, int y_hat, const Clustering &oracle, const CostWeights &alpha) {
  check_candidate(n, y_hat);
  const bool anaphoric = oracle.anaphoric(n);
  if (y_hat == kNoAntecedent) return anaphoric ? alpha.false_new : 0.0;
  if (!anaphoric) return alpha.false_link;
  return oracle.coreferent(y_hat, n) ? 0.0 : alpha.wrong_link;
}

// --- Loss ------------------------------------------------------------------------

struct LossOptions {
  CostWeights alphas;
  DropoutRates dropout;
  bool global = true;  // false: g == 0 (local mention ranking only)
  Mode mode = Mode::kTrain;
};

namespace model_detail {

// Gradient bookkeeping for one document.
struct LossWorkspace {
  std::vector<Vector> dhc;                   // dL/dh_c(n)
  std::vector<std::vector<Vector>> dstate;   // [m-1][j]: dL/dh after j members
};

}  // namespace model_detail

// Slack-rescaled latent-antecedent margin loss of one document. Adds the
// gradient of the returned loss into every parameter's `grad`.
inline Real document_loss(Model &m, const DocumentFeatures &feats, const Clustering &oracle,
                          const LossOptions &opts, Rng &rng) {
  const int big_n = feats.size();
  if (oracle.num_mentions() != big_n) {
    throw std::invalid_argument("document_loss: oracle clustering size mismatch");
  }
  const int da = m.dims().anaphoric;
  const int dp = m.dims().pairwise;
  const int dc = m.dims().cluster;
  const bool train = opts.mode == Mode::kTrain;
  DropoutRates rates = opts.dropout;
  if (!train) rates = {0.0, 0.0};

  std::vector<Vector> hc;
  OracleStates oracle_states;
  model_detail::LossWorkspace ws;
  if (opts.global) {
    hc = embed_all_cluster_inputs(m, feats);
    oracle_states = OracleStates(m, oracle, hc);
    ws.dhc.assign(big_n, Vector::Zero(dc));
    ws.dstate.resize(oracle.num_clusters());
    for (int c = 1; c <= oracle.num_clusters(); ++c) {
      ws.dstate[c - 1].assign(oracle.cluster(c).size() + 1, Vector::Zero(dc));
    }
  }

  Real total = 0.0;
  std::vector<Real> scores;
  std::vector<Vector> hp;
  for (int n = 1; n <= big_n; ++n) {
    const DecisionMasks masks = draw_masks(m, rates, opts.global, rng);
    const Vector ha = embed_anaphoric(m, feats.phi_a(n));
    hp.assign(static_cast<std::size_t>(n), Vector());
    scores.assign(static_cast<std::size_t>(n), 0.0);

    NaForward na;
    Vector state_sum;
    if (opts.global) {
      state_sum = Vector::Zero(dc);
      for (int c = 1; c <= oracle_states.num_clusters(); ++c) {
        if (oracle_states.consumed(c, n) > 0) state_sum += oracle_states.state_before(c, n);
      }
      na = na_forward(m, feats.phi_a(n), state_sum, &masks);
    }
    scores[0] = local_na_score(m, ha, &masks) + (opts.global ? na.score : 0.0);
    for (int y = 1; y < n; ++y) {
      hp[y] = embed_pairwise(m, feats.phi_p(n, y));
      Real s = local_antecedent_score(m, ha, hp[y], &masks);
      if (opts.global) {
        const int c = oracle.cluster_of(y);
        s += cluster_match_score(hc[n - 1], oracle_states.state_before(c, n), &masks);
      }
      scores[y] = s;
    }

    const int y_latent = latent_antecedent(scores, n, oracle);
    int y_hat = y_latent;
    Real best = 0.0;
    for (int y = 0; y < n; ++y) {
      const Real cost = mistake_cost(n, y, oracle, opts.alphas);
      if (cost == 0.0) continue;
      const Real val = cost * (1.0 + scores[y] - scores[y_latent]);
      if (val > best) {
        best = val;
        y_hat = y;
      }
    }
    if (y_hat == y_latent) continue;
    total += best;
    const Real cost = mistake_cost(n, y_hat, oracle, opts.alphas);

    // Backward: +cost on s(y_hat), -cost on s(y_latent).
    Vector dha_masked = Vector::Zero(da);
    const Vector empty;
    const Vector ha_in = model_detail::masked(ha, masks.concat, 0);
    for (const auto &[y, coef] : {std::pair{y_hat, cost}, std::pair{y_latent, -cost}}) {
      if (y == kNoAntecedent) {
        m.v.gvec() += coef * ha_in;
        m.v0.grad(0, 0) += coef;
        dha_masked += coef * m.v.vec();
        if (opts.global) {
          m.q.gvec() += coef * na.hidden;
          const Vector dpre =
              coef * m.q.vec().array() * (1.0 - na.hidden.array().square());
          m.b_s.gvec() += dpre;
          for (const FeatureEntry &e : feats.phi_a(n)) m.w_s.grad.col(e.index) += e.value * dpre;
          m.w_s.grad.rightCols(dc).noalias() += dpre * na.state_sum.transpose();
          Vector dsum = m.w_s.value.rightCols(dc).transpose() * dpre;
          if (masks.state.size() > 0) dsum = dsum.cwiseProduct(masks.state);
          for (int c = 1; c <= oracle_states.num_clusters(); ++c) {
            const int j = oracle_states.consumed(c, n);
            if (j > 0) ws.dstate[c - 1][j] += dsum;
          }
        }
      } else {
        const Vector hp_in = model_detail::masked(hp[y], masks.concat, da);
        m.u.grad.col(0).head(da) += coef * ha_in;
        m.u.grad.col(0).tail(dp) += coef * hp_in;
        m.u0.grad(0, 0) += coef;
        dha_masked += coef * m.u.vec().head(da);
        Vector dhp = coef * m.u.vec().tail(dp);
        if (masks.concat.size() > 0) dhp = dhp.cwiseProduct(masks.concat.tail(dp));
        sparse_affine_tanh_backward(m.w_p.grad, m.b_p.gvec(), feats.phi_p(n, y), hp[y], dhp);
        if (opts.global) {
          const int c = oracle.cluster_of(y);
          const int j = oracle_states.consumed(c, n);
          const Vector &state = oracle_states.state_before(c, n);
          ws.dhc[n - 1] += coef * model_detail::masked(state, masks.state, 0);
          if (j > 0) ws.dstate[c - 1][j] += coef * model_detail::masked(hc[n - 1], masks.state, 0);
        }
      }
    }
    Vector dha = dha_masked;
    if (masks.concat.size() > 0) dha = dha.cwiseProduct(masks.concat.head(da));
    sparse_affine_tanh_backward(m.w_a.grad, m.b_a.gvec(), feats.phi_a(n), ha, dha);
  }

  if (opts.global) {
    // Backpropagation through each gold cluster's trajectory.
    for (int c = 1; c <= oracle_states.num_clusters(); ++c) {
      const auto &traj = oracle_states.trajectory(c);
      const auto &members = oracle.cluster(c);
      Vector dh_next = Vector::Zero(dc);
      Vector dc_next = Vector::Zero(dc);
      for (int j = static_cast<int>(traj.size()); j >= 1; --j) {
        const Vector dh = ws.dstate[c - 1][j] + dh_next;
        if (dh.isZero(0.0) && dc_next.isZero(0.0)) continue;
        LstmStepGrads g = lstm_backward(m.lstm, traj[j - 1], dh, dc_next);
        ws.dhc[members[j - 1] - 1] += g.dx;
        dh_next = std::move(g.dh_prev);
        dc_next = std::move(g.dc_prev);
      }
    }
    for (int n = 1; n <= big_n; ++n) {
      if (ws.dhc[n - 1].isZero(0.0)) continue;
      sparse_affine_tanh_backward(m.w_c.grad, m.b_c.gvec(), feats.phi_c(n), hc[n - 1],
                                  ws.dhc[n - 1]);
    }
  }
  return total;
}

inline Real document_loss(Model &m, const Document &doc, const Clustering &oracle,
                          const LossOptions &opts, Rng &rng) {
  return document_loss(m, DocumentFeatures::extract(doc, m.vocab()), oracle, opts, rng);
}

}  // namespace rnncoref
