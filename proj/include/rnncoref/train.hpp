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

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rnncoref/model.hpp"

namespace rnncoref {

// Documented grid the per-group rates are usually picked from.
inline constexpr Real kLearningRateGrid[] = {0.1, 0.02, 0.01, 0.002, 0.001};

struct LearningRates {
  std::array<Real, 6> by_group{0.01, 0.01, 0.01, 0.01, 0.01, 0.01};

  Real &operator[](ParamGroup g) { return by_group[static_cast<std::size_t>(g)]; }
  Real operator[](ParamGroup g) const { return by_group[static_cast<std::size_t>(g)]; }
  bool operator==(const LearningRates &) const = default;
};

struct TrainConfig {
  std::uint64_t seed = 1;
  int epochs = 100;
  LearningRates learning_rates;
  DropoutRates dropout;
  CostWeights alphas;
  Dims dims;
  // Two-phase schedule: the first `pretrain_epochs` epochs train the local
  // scorer alone (g held at 0), the rest train everything.
  bool pretrain = true;
  int pretrain_epochs = 10;
  // false trains the local mention-ranking model only.
  bool global = true;
  Real clip_lo = -10.0;
  Real clip_hi = 10.0;
  int min_feature_count = 1;

  bool operator==(const TrainConfig &) const = default;

  // Empty when the config is usable.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    for (ParamGroup g : kAllGroups) {
      if (!(learning_rates[g] > 0.0)) {
        out.push_back("learning rate for " + std::string(to_string(g)) + " must be > 0");
      }
    }
    if (epochs < 0) out.push_back("epochs must be >= 0");
    if (pretrain_epochs < 0) out.push_back("pretrain epochs must be >= 0");
    if (dims.anaphoric <= 0 || dims.pairwise <= 0 || dims.cluster <= 0 || dims.na_hidden <= 0) {
      out.push_back("dims must be > 0");
    }
    if (alphas.false_link < 0 || alphas.false_new < 0 || alphas.wrong_link < 0) {
      out.push_back("cost weights must be >= 0");
    }
    if (dropout.concat < 0 || dropout.concat >= 1 || dropout.state < 0 || dropout.state >= 1) {
      out.push_back("dropout rates must be in [0,1)");
    }
    if (!(clip_lo < clip_hi)) out.push_back("clip bounds must satisfy lo < hi");
    if (min_feature_count < 1) out.push_back("min feature count must be >= 1");
    return out;
  }
};

struct EpochStats {
  int epoch = 0;  // 1-based
  bool global_phase = true;
  Real loss = 0.0;  // summed over documents
};

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Return false to stop training early.
using EpochCallback = std::function<bool(const EpochStats &, const Model &)>;

struct TrainResult {
  Model model;
  std::vector<EpochStats> epochs;
};

inline Model initial_model(const FeatureVocabulary &vocab, const TrainConfig &config) {
  Model model(vocab, config.dims);
  Rng rng(config.seed);
  model.initialize(rng);
  return model;
}

// Document-sized minibatches: one AdaGrad step per document, documents
// shuffled each epoch.
inline TrainResult train(const std::vector<Document> &docs, const FeatureVocabulary &vocab,
                         const TrainConfig &config, const EpochCallback &on_epoch = {}) {
  if (auto v = config.violations(); !v.empty()) throw std::invalid_argument(v.front());
  TrainResult result{initial_model(vocab, config), {}};
  Model &model = result.model;

  std::vector<DocumentFeatures> feats;
  std::vector<Clustering> oracles;
  feats.reserve(docs.size());
  for (const Document &d : docs) {
    feats.push_back(DocumentFeatures::extract(d, vocab));
    oracles.push_back(oracle_clustering(d));
  }

  // A separate stream from initialization, so adding epochs never changes
  // the initial weights.
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  const std::pair<Real, Real> clip{config.clip_lo, config.clip_hi};

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const bool global_phase =
        config.global && !(config.pretrain && epoch <= config.pretrain_epochs);
    LossOptions opts;
    opts.alphas = config.alphas;
    opts.dropout = config.dropout;
    opts.global = global_phase;
    opts.mode = Mode::kTrain;

    std::shuffle(order.begin(), order.end(), rng);
    Real epoch_loss = 0.0;
    for (std::size_t k : order) {
      model.zero_grad();
      const Real loss = document_loss(model, feats[k], oracles[k], opts, rng);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite loss " << loss << " in epoch " << epoch << " on document "
            << docs[k].id;
        throw NonFiniteLossError(msg.str());
      }
      epoch_loss += loss;
      for (Parameter *p : model.parameters()) {
        const bool frozen = !global_phase && (p->group == ParamGroup::kCluster ||
                                              p->group == ParamGroup::kLstm ||
                                              p->group == ParamGroup::kNa);
        if (frozen) continue;
        if (p->group == ParamGroup::kLstm) {
          adagrad_update(*p, config.learning_rates[p->group], clip);
        } else {
          adagrad_update(*p, config.learning_rates[p->group]);
        }
      }
      if (!model.all_finite()) {
        throw NonFiniteLossError("non-finite parameters after document " + docs[k].id +
                                 " in epoch " + std::to_string(epoch));
      }
    }
    result.epochs.push_back({epoch, global_phase, epoch_loss});
    if (on_epoch && !on_epoch(result.epochs.back(), model)) break;
  }
  model.zero_grad();
  return result;
}

}  // namespace rnncoref
