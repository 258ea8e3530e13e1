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

// Greedy left-to-right decoding and the diagnostics built on it.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rnncoref/model.hpp"

namespace rnncoref {

enum class InferenceMode {
  kMR,      // g == 0
  kAvgOH,   // cluster = running mean of h_c over gold history
  kRnnGH,   // LSTM states over the model's own decisions
  kRnnOH,   // LSTM states over gold history
};

inline std::string_view to_string(InferenceMode m) {
  switch (m) {
    case InferenceMode::kMR: return "MR";
    case InferenceMode::kAvgOH: return "AVG_OH";
    case InferenceMode::kRnnGH: return "RNN_GH";
    case InferenceMode::kRnnOH: return "RNN_OH";
  }
  return "?";
}

inline std::optional<InferenceMode> parse_inference_mode(std::string_view s) {
  if (s == "MR") return InferenceMode::kMR;
  if (s == "AVG_OH") return InferenceMode::kAvgOH;
  if (s == "RNN_GH") return InferenceMode::kRnnGH;
  if (s == "RNN_OH") return InferenceMode::kRnnOH;
  return std::nullopt;
}

inline bool needs_gold(InferenceMode m) {
  return m == InferenceMode::kAvgOH || m == InferenceMode::kRnnOH;
}

class ModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Eval-mode embeddings of one document, computed once.
class DocumentScorer {
 public:
  DocumentScorer(const Model &model, const Document &doc)
      : DocumentScorer(model, doc, DocumentFeatures::extract(doc, model.vocab())) {}

  DocumentScorer(const Model &model, const Document &doc, DocumentFeatures feats)
      : model_(&model), doc_(&doc), feats_(std::move(feats)) {
    ha_.reserve(feats_.size());
    for (int n = 1; n <= feats_.size(); ++n) ha_.push_back(embed_anaphoric(model, feats_.phi_a(n)));
    hc_ = embed_all_cluster_inputs(model, feats_);
  }

  const Model &model() const { return *model_; }
  const Document &document() const { return *doc_; }
  const DocumentFeatures &features() const { return feats_; }
  int size() const { return feats_.size(); }

  const Vector &ha(int n) const { return ha_[n - 1]; }
  const Vector &hc(int n) const { return hc_[n - 1]; }
  const std::vector<Vector> &all_hc() const { return hc_; }
  Vector hp(int n, int y) const { return embed_pairwise(*model_, feats_.phi_p(n, y)); }

  Real local(int n, int y) const {
    if (y == kNoAntecedent) return local_na_score(*model_, ha(n));
    return local_antecedent_score(*model_, ha(n), hp(n, y));
  }

 private:
  const Model *model_;
  const Document *doc_;
  DocumentFeatures feats_;
  std::vector<Vector> ha_;
  std::vector<Vector> hc_;
};

// The clustering decisions made so far, as seen by g: a cluster id per
// earlier mention and a representation per cluster id.
struct HistoryView {
  std::span<const int> cluster_of;           // [y-1], 1-based ids
  std::span<const ClusterState> clusters;    // [id-1]
};

struct Candidate {
  int antecedent = kNoAntecedent;
  Real local = 0.0;
  Real global = 0.0;
  Real score = 0.0;
};

// Scores every y in Y(x_n): 0 first, then 1..n-1.
inline std::vector<Candidate> score_candidates(const DocumentScorer &scorer, int n,
                                               const HistoryView &history, InferenceMode mode) {
  const Model &m = scorer.model();
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(n));
  const bool global = mode != InferenceMode::kMR;
  {
    Candidate c;
    c.local = scorer.local(n, kNoAntecedent);
    if (global) {
      c.global =
          na_forward(m, scorer.features().phi_a(n), sum_states(history.clusters, m.dims().cluster))
              .score;
    }
    c.score = c.local + c.global;
    out.push_back(c);
  }
  for (int y = 1; y < n; ++y) {
    Candidate c;
    c.antecedent = y;
    c.local = scorer.local(n, y);
    if (global) {
      const ClusterState &s = history.clusters[history.cluster_of[y - 1] - 1];
      c.global = cluster_match_score(scorer.hc(n), s.h);
    }
    c.score = c.local + c.global;
    out.push_back(c);
  }
  return out;
}

// First strict maximum in scan order: ties go to "no antecedent", then to
// the earliest antecedent.
inline int best_candidate(std::span<const Candidate> candidates) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].score > candidates[best].score) best = i;
  }
  return candidates[best].antecedent;
}

struct GreedyOptions {
  bool record_scores = false;
};

struct GreedyResult {
  Clustering clustering;
  std::vector<int> antecedents;               // [n-1]; 0 = new cluster
  std::size_t scored_candidates = 0;
  std::vector<std::vector<Candidate>> scores;  // only with record_scores
  // RNN_GH only: state of x_n's cluster right after consuming x_n.
  std::vector<ClusterState> state_after;
};

inline GreedyResult greedy_cluster(const DocumentScorer &scorer, InferenceMode mode,
                                   GreedyOptions opts = {}) {
  const Document &doc = scorer.document();
  const Model &m = scorer.model();
  const int big_n = scorer.size();
  const int dc = m.dims().cluster;
  if (needs_gold(mode) && !doc.has_gold()) {
    throw ModeError(std::string(to_string(mode)) + " needs gold clusters, document " + doc.id +
                    " has none");
  }

  std::optional<Clustering> oracle;
  std::optional<OracleStates> oracle_states;
  std::vector<ClusterState> avg;     // AVG_OH: mean of h_c per gold cluster
  std::vector<Vector> avg_sum;
  if (needs_gold(mode)) {
    oracle = oracle_clustering(doc);
    if (mode == InferenceMode::kRnnOH) oracle_states.emplace(m, *oracle, scorer.all_hc());
    if (mode == InferenceMode::kAvgOH) {
      avg.assign(oracle->num_clusters(), ClusterState::empty(dc));
      avg_sum.assign(oracle->num_clusters(), Vector::Zero(dc));
    }
  }

  GreedyResult out;
  std::vector<int> z;
  std::vector<ClusterState> states;  // predicted clusters (RNN_GH)
  z.reserve(big_n);
  std::vector<ClusterState> oh_states;
  int num_clusters = 0;
  for (int n = 1; n <= big_n; ++n) {
    HistoryView history;
    switch (mode) {
      case InferenceMode::kMR:
        history = {z, {}};
        break;
      case InferenceMode::kRnnGH:
        history = {z, states};
        break;
      case InferenceMode::kRnnOH:
        oh_states = oracle_states->states_before(n);
        history = {oracle->assignment(), oh_states};
        break;
      case InferenceMode::kAvgOH:
        history = {oracle->assignment(), avg};
        break;
    }
    std::vector<Candidate> cands = score_candidates(scorer, n, history, mode);
    out.scored_candidates += cands.size();
    const int y = best_candidate(cands);
    if (opts.record_scores) out.scores.push_back(std::move(cands));

    const int id = y == kNoAntecedent ? ++num_clusters : z[y - 1];
    z.push_back(id);
    out.antecedents.push_back(y);

    if (mode == InferenceMode::kRnnGH) {
      if (id > static_cast<int>(states.size())) states.push_back(ClusterState::empty(dc));
      states[id - 1] = advance_cluster(m, states[id - 1], scorer.hc(n));
      out.state_after.push_back(states[id - 1]);
    } else if (mode == InferenceMode::kAvgOH) {
      const int g = oracle->cluster_of(n);
      avg_sum[g - 1] += scorer.hc(n);
      avg[g - 1].size += 1;
      avg[g - 1].h = avg_sum[g - 1] / static_cast<Real>(avg[g - 1].size);
    }
  }
  out.clustering = Clustering::from_labels(z);
  return out;
}

inline GreedyResult greedy_cluster(const Model &m, const Document &doc, InferenceMode mode,
                                   GreedyOptions opts = {}) {
  return greedy_cluster(DocumentScorer(m, doc), mode, opts);
}

// --- Diagnostics -------------------------------------------------------------

// h_c(x_n) . h_j for the state h_j after each prefix j = 1..J of cluster m
// (the whole cluster; callers truncate to mentions before n if they want).
inline std::vector<Real> trajectory_scores(const Model &m, const Document &doc,
                                           const Clustering &clustering, int n, int cluster) {
  if (cluster < 1 || cluster > clustering.num_clusters()) {
    throw std::out_of_range("unknown cluster " + std::to_string(cluster));
  }
  const Vector hc_n = embed_cluster_input(m, doc, n);
  ClusterState s = ClusterState::empty(m.dims().cluster);
  std::vector<Real> out;
  for (int member : clustering.cluster(cluster)) {
    s = advance_cluster(m, s, embed_cluster_input(m, doc, member));
    out.push_back(hc_n.dot(s.h));
  }
  return out;
}

// NA(x_n) as a function of each cluster's input sequence (eval mode).
inline Real na_from_cluster_inputs(const Model &m, const SparseFeatures &phi_a,
                                   const std::vector<std::vector<Vector>> &inputs) {
  const int dc = m.dims().cluster;
  Vector sum = Vector::Zero(dc);
  for (const auto &seq : inputs) {
    ClusterState s = ClusterState::empty(dc);
    for (const Vector &x : seq) s = advance_cluster(m, s, x);
    if (s.size > 0) sum += s.h;
  }
  return na_forward(m, phi_a, sum).score;
}

// dNA/dx_last for every cluster's last input, by backpropagation through the
// final LSTM step of each sequence.
inline std::vector<Vector> na_last_input_gradients(const Model &m, const SparseFeatures &phi_a,
                                                   const std::vector<std::vector<Vector>> &inputs) {
  const int dc = m.dims().cluster;
  std::vector<LstmCache> last;
  Vector sum = Vector::Zero(dc);
  for (const auto &seq : inputs) {
    Vector h = Vector::Zero(dc), c = Vector::Zero(dc);
    LstmCache k;
    for (const Vector &x : seq) {
      k = lstm_forward(m.lstm, x, h, c);
      h = k.h;
      c = k.c;
    }
    if (!seq.empty()) sum += h;
    last.push_back(std::move(k));
  }
  const NaForward na = na_forward(m, phi_a, sum);
  const Vector dpre = m.q.vec().array() * (1.0 - na.hidden.array().square());
  const Vector dsum = m.w_s.value.rightCols(dc).transpose() * dpre;
  std::vector<Vector> out;
  LstmParams scratch = m.lstm;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].empty()) {
      out.push_back(Vector::Zero(dc));
      continue;
    }
    out.push_back(lstm_backward(scratch, last[i], dsum, Vector::Zero(dc), false).dx);
  }
  return out;
}

struct ClusterSaliency {
  int cluster = 0;
  int last_mention = 0;
  Real gradient_norm = 0.0;
};

// For each cluster with a member before n: || dNA(x_n) / dh_c(x_last) ||.
inline std::vector<ClusterSaliency> na_saliency(const Model &m, const Document &doc,
                                                const Clustering &clustering, int n) {
  std::vector<std::vector<Vector>> inputs;
  std::vector<ClusterSaliency> out;
  for (int c = 1; c <= clustering.num_clusters(); ++c) {
    std::vector<Vector> seq;
    int last = 0;
    for (int member : clustering.cluster(c)) {
      if (member >= n) break;
      seq.push_back(embed_cluster_input(m, doc, member));
      last = member;
    }
    if (seq.empty()) continue;
    inputs.push_back(std::move(seq));
    out.push_back({c, last, 0.0});
  }
  const auto grads = na_last_input_gradients(m, extract_anaphoricity(doc, n, m.vocab()), inputs);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].gradient_norm = grads[i].norm();
  return out;
}

struct ClusterStateRow {
  std::string doc_id;
  int cluster = 0;
  MentionType predominant_type = MentionType::kNominal;
  Vector h;
};

// Final LSTM state of every cluster with more than one mention.
inline std::vector<ClusterStateRow> export_cluster_states(const Model &m, const Document &doc,
                                                          const Clustering &clustering) {
  std::vector<ClusterStateRow> rows;
  for (int c = 1; c <= clustering.num_clusters(); ++c) {
    const auto &members = clustering.cluster(c);
    if (members.size() < 2) continue;
    int counts[3] = {0, 0, 0};
    ClusterState s = ClusterState::empty(m.dims().cluster);
    for (int member : members) {
      ++counts[static_cast<int>(doc.mention(member).type)];
      s = advance_cluster(m, s, embed_cluster_input(m, doc, member));
    }
    const int type = static_cast<int>(std::max_element(counts, counts + 3) - counts);
    rows.push_back({doc.id, c, static_cast<MentionType>(type), s.h});
  }
  return rows;
}

inline void write_cluster_states(std::ostream &out, const std::vector<ClusterStateRow> &rows) {
  out << "doc_id\tcluster\ttype\tstate\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::fixed << std::setprecision(6);
  for (const auto &r : rows) {
    out << r.doc_id << '\t' << r.cluster << '\t' << to_string(r.predominant_type) << '\t';
    for (Eigen::Index i = 0; i < r.h.size(); ++i) {
      if (i > 0) out << ' ';
      out << r.h(i);
    }
    out << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace rnncoref
