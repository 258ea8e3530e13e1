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

// Predicted clusterings plus per-mention decision logs, one JSON object per
// line.

#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rnncoref/corpus.hpp"
#include "rnncoref/inference.hpp"

namespace rnncoref {

struct Prediction {
  std::string doc_id;
  std::string mode;
  Clustering clustering;
  std::vector<int> antecedents;  // [n-1], 0 = new cluster

  bool operator==(const Prediction &) const = default;
};

inline Prediction make_prediction(const Document &doc, InferenceMode mode,
                                  const GreedyResult &r) {
  return {doc.id, std::string(to_string(mode)), r.clustering, r.antecedents};
}

inline nlohmann::json prediction_to_json(const Prediction &p) {
  return {{"id", p.doc_id},
          {"mode", p.mode},
          {"clusters", p.clustering.assignment()},
          {"antecedents", p.antecedents}};
}

inline Prediction prediction_from_json(const nlohmann::json &j) {
  Prediction p;
  p.doc_id = j.at("id").get<std::string>();
  p.mode = j.value("mode", std::string());
  const auto z = j.at("clusters").get<std::vector<int>>();
  if (auto v = validate_assignment(z); !v.empty()) {
    throw std::invalid_argument("prediction for " + p.doc_id + ": " + v.front());
  }
  p.clustering = Clustering::from_labels(z);
  if (j.contains("antecedents")) {
    p.antecedents = j.at("antecedents").get<std::vector<int>>();
    if (p.antecedents.size() != z.size()) {
      throw std::invalid_argument("prediction for " + p.doc_id +
                                  ": antecedent log length differs from clustering");
    }
    // The log must induce the clustering it ships with.
    std::vector<int> induced;
    int clusters = 0;
    for (std::size_t i = 0; i < p.antecedents.size(); ++i) {
      const int y = p.antecedents[i];
      if (y < 0 || y > static_cast<int>(i)) {
        throw std::invalid_argument("prediction for " + p.doc_id + ": antecedent " +
                                    std::to_string(y) + " invalid for mention " +
                                    std::to_string(i + 1));
      }
      induced.push_back(y == 0 ? ++clusters : induced[y - 1]);
    }
    if (induced != z) {
      throw std::invalid_argument("prediction for " + p.doc_id +
                                  ": antecedent log does not match clusters");
    }
  }
  return p;
}

inline void write_predictions(std::ostream &out, const std::vector<Prediction> &preds) {
  for (const Prediction &p : preds) out << prediction_to_json(p).dump() << '\n';
}

inline std::vector<Prediction> read_predictions(std::istream &in) {
  std::vector<Prediction> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception &e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

inline std::vector<Prediction> load_predictions(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_predictions(in);
}

}  // namespace rnncoref
