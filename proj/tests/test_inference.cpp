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

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace rnncoref {
namespace {

using testing::small_dims;
using testing::toy_document;

constexpr InferenceMode kAllModes[] = {InferenceMode::kMR, InferenceMode::kAvgOH,
                                       InferenceMode::kRnnGH, InferenceMode::kRnnOH};

Model random_model_for(const std::vector<Document> &docs, std::uint64_t seed) {
  return testing::random_model(build_vocabulary(docs), small_dims(), seed, 0.5);
}

// Small model trained on the synthetic corpus until its greedy output is
// mostly correct; shared across tests.
const std::pair<Model, std::vector<Document>> &trained_fixture() {
  static const auto fixture = [] {
    SyntheticOptions o;
    o.documents = 12;
    o.seed = 21;
    std::vector<Document> docs = generate_synthetic(o);
    TrainConfig c;
    c.dims = Dims{20, 30, 20, 20};
    c.epochs = 40;
    c.pretrain_epochs = 5;
    Model m = train(docs, build_vocabulary(docs), c).model;
    return std::pair{std::move(m), std::move(docs)};
  }();
  return fixture;
}

TEST(Inference, ModeNames) {
  for (InferenceMode m : kAllModes) EXPECT_EQ(parse_inference_mode(to_string(m)), m);
  EXPECT_FALSE(parse_inference_mode("rnn"));
  EXPECT_TRUE(needs_gold(InferenceMode::kRnnOH));
  EXPECT_FALSE(needs_gold(InferenceMode::kRnnGH));
}

TEST(Inference, SingleMentionDocument) {
  const Document d = testing::truncate_document(toy_document(), 1);
  const Model m = random_model_for({toy_document()}, 1);
  for (InferenceMode mode : kAllModes) {
    const GreedyResult r = greedy_cluster(m, d, mode);
    EXPECT_EQ(r.clustering.assignment(), std::vector<int>{1});
    EXPECT_EQ(r.scored_candidates, 1u);
  }
}

TEST(Inference, OutputIsValidAndDeterministic) {
  SyntheticOptions o;
  o.documents = 5;
  const auto docs = generate_synthetic(o);
  const Model m = random_model_for(docs, 2);
  for (const Document &d : docs) {
    for (InferenceMode mode : kAllModes) {
      const GreedyResult a = greedy_cluster(m, d, mode);
      EXPECT_TRUE(validate_assignment(a.clustering.assignment()).empty());
      EXPECT_EQ(a.clustering, greedy_cluster(m, d, mode).clustering);
      const std::size_t n = static_cast<std::size_t>(d.size());
      EXPECT_EQ(a.scored_candidates, n * (n + 1) / 2);
    }
  }
}

TEST(Inference, OracleModesNeedGold) {
  Document d = toy_document();
  for (Mention &mn : d.mentions) mn.gold_cluster.reset();
  const Model m = random_model_for({d}, 3);
  EXPECT_THROW(greedy_cluster(m, d, InferenceMode::kRnnOH), ModeError);
  EXPECT_THROW(greedy_cluster(m, d, InferenceMode::kAvgOH), ModeError);
  EXPECT_NO_THROW(greedy_cluster(m, d, InferenceMode::kMR));
  EXPECT_NO_THROW(greedy_cluster(m, d, InferenceMode::kRnnGH));
}

TEST(Inference, MrEqualsPerMentionArgmax) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SyntheticOptions o;
    o.documents = 2;
    o.seed = seed;
    const auto docs = generate_synthetic(o);
    const Model m = random_model_for(docs, seed);
    for (const Document &d : docs) {
      EXPECT_EQ(greedy_cluster(m, d, InferenceMode::kMR).antecedents, testing::per_mention_argmax(m, d));
    }
  }
}

TEST(Inference, MrIgnoresHistoryStates) {
  const Document d = toy_document();
  const Model m = random_model_for({d}, 4);
  const DocumentScorer scorer(m, d);
  Rng rng(4);
  std::uniform_real_distribution<Real> u(-1, 1);
  const std::vector<int> z = {1, 2, 1, 1, 2, 2};
  std::vector<ClusterState> noise(2, ClusterState::empty(small_dims().cluster));
  for (auto &s : noise) {
    for (Eigen::Index i = 0; i < s.h.size(); ++i) s.h(i) = u(rng);
    s.size = 1;
  }
  const auto a = score_candidates(scorer, 7, {z, {}}, InferenceMode::kMR);
  const auto b = score_candidates(scorer, 7, {z, noise}, InferenceMode::kMR);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].score, b[i].score);
}

TEST(Inference, ScoreCandidatesFirstMention) {
  const Document d = toy_document();
  const Model m = random_model_for({d}, 5);
  const DocumentScorer scorer(m, d);
  const auto c = score_candidates(scorer, 1, {{}, {}}, InferenceMode::kRnnGH);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].antecedent, kNoAntecedent);
  EXPECT_TRUE(std::isfinite(c[0].score));
}

TEST(Inference, TieBreakFavorsEpsilonThenEarliest) {
  std::vector<Candidate> c(4);
  for (int i = 0; i < 4; ++i) c[i].antecedent = i;
  c[0].score = 1.0;
  c[1].score = 1.0;
  EXPECT_EQ(best_candidate(c), kNoAntecedent);
  c[2].score = 2.0;
  c[3].score = 2.0;
  EXPECT_EQ(best_candidate(c), 2);
}

TEST(Inference, ArgmaxOfRecordedScoresMatchesDecisions) {
  SyntheticOptions o;
  o.documents = 4;
  o.seed = 7;
  const auto docs = generate_synthetic(o);
  const Model m = random_model_for(docs, 7);
  GreedyOptions g;
  g.record_scores = true;
  for (const Document &d : docs) {
    for (InferenceMode mode : kAllModes) {
      const GreedyResult r = greedy_cluster(m, d, mode, g);
      for (int n = 1; n <= d.size(); ++n) {
        EXPECT_EQ(best_candidate(r.scores[n - 1]), r.antecedents[n - 1]);
      }
    }
  }
}

TEST(Inference, GreedyHistoryMatchesOracleWhenPredictionsAreGold) {
  const auto &[m, docs] = trained_fixture();
  int matched = 0;
  GreedyOptions g;
  g.record_scores = true;
  for (const Document &d : docs) {
    const Clustering gold = oracle_clustering(d);
    const GreedyResult gh = greedy_cluster(m, d, InferenceMode::kRnnGH, g);
    if (!(gh.clustering == gold)) continue;
    ++matched;
    const OracleStates os = precompute_oracle_states(m, d, gold);
    for (int n = 1; n <= d.size(); ++n) {
      const int c = gold.cluster_of(n);
      const LstmCache &k = os.trajectory(c)[static_cast<std::size_t>(os.consumed(c, n))];
      EXPECT_EQ(gh.state_after[n - 1].h, k.h);
      EXPECT_EQ(gh.state_after[n - 1].c, k.c);
    }
    const GreedyResult oh = greedy_cluster(m, d, InferenceMode::kRnnOH, g);
    for (int n = 1; n <= d.size(); ++n) {
      for (std::size_t i = 0; i < gh.scores[n - 1].size(); ++i) {
        EXPECT_EQ(gh.scores[n - 1][i].score, oh.scores[n - 1][i].score);
      }
    }
  }
  EXPECT_GT(matched, 0);
}

TEST(Inference, AverageModeUsesRunningMean) {
  const Document d = toy_document();
  const Model m = random_model_for({d}, 8);
  GreedyOptions g;
  g.record_scores = true;
  const GreedyResult r = greedy_cluster(m, d, InferenceMode::kAvgOH, g);
  // Gold: (1, 2, 1, 1, 2, 2, 3). At n = 5 cluster 1 holds mentions 1, 3, 4.
  const DocumentScorer s(m, d);
  const Vector mean = (s.hc(1) + s.hc(3) + s.hc(4)) / 3.0;
  const Candidate &c = r.scores[4][1];  // n = 5, y = 1
  EXPECT_NEAR(c.global, s.hc(5).dot(mean), 1e-14);
}

TEST(Inference, TrajectoryScoresManualUnroll) {
  const Document d = toy_document();
  const Model m = random_model_for({d}, 9);
  const Clustering gold = oracle_clustering(d);  // cluster 1 = {1, 3, 4}
  EXPECT_EQ(trajectory_scores(m, d, gold, 5, 1).size(), 3u);
  EXPECT_LE(testing::trajectory_unroll_error(m, d, gold, 5, 1), 1e-10);
  EXPECT_LE(testing::trajectory_unroll_error(m, d, gold, 7, 2), 1e-10);
  EXPECT_THROW(trajectory_scores(m, d, gold, 5, 4), std::out_of_range);
}

TEST(Inference, SaliencyZeroQ) {
  const Document d = toy_document();
  Model m = random_model_for({d}, 10);
  m.q.value.setZero();
  for (const ClusterSaliency &s : na_saliency(m, d, oracle_clustering(d), 6)) {
    EXPECT_EQ(s.gradient_norm, 0.0);
  }
}

TEST(Inference, SaliencyExcludesLaterClusters) {
  const Document d = toy_document();
  const Model m = random_model_for({d}, 11);
  const auto s = na_saliency(m, d, oracle_clustering(d), 3);
  // Before x_3 only clusters 1 ({1}) and 2 ({2}) have members.
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].last_mention, 1);
  EXPECT_EQ(s[1].last_mention, 2);
}

TEST(Inference, SaliencyGradientsMatchFiniteDifferences) {
  const Document d = toy_document();
  const Model m = random_model_for({d}, 12);
  const Clustering gold = oracle_clustering(d);
  for (int n = 2; n <= d.size(); ++n) {
    EXPECT_LE(testing::saliency_fd_error(m, d, gold, n), 1e-4) << "n=" << n;
  }
}

TEST(Inference, ExportClusterStates) {
  const Document d = toy_document();
  const Model m(build_vocabulary({d}), Dims{});
  const Clustering gold = oracle_clustering(d);  // sizes 3, 3, 1
  const auto rows = export_cluster_states(m, d, gold);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].cluster, 1);
  EXPECT_EQ(rows[0].predominant_type, MentionType::kPronominal);  // I, Linda, you
  EXPECT_EQ(rows[1].predominant_type, MentionType::kNominal);     // president, him, President
  EXPECT_EQ(rows[0].h.size(), 200);
  std::ostringstream out;
  write_cluster_states(out, rows);
  std::istringstream lines(out.str());
  std::string header, row;
  std::getline(lines, header);
  EXPECT_EQ(header, "doc_id\tcluster\ttype\tstate");
  std::getline(lines, row);
  EXPECT_EQ(row.rfind("toy\t1\tpronominal\t0.000000 ", 0), 0u) << row;
}

}  // namespace
}  // namespace rnncoref
