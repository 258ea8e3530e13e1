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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rnncoref/cli.hpp"
#include "test_support.hpp"

namespace rnncoref {
namespace {

namespace fs = std::filesystem;

TrainConfig quick_config(std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  c.epochs = 3;
  c.pretrain_epochs = 1;
  c.dims = testing::small_dims();
  return c;
}

std::vector<Document> corpus() {
  SyntheticOptions o;
  o.documents = 4;
  o.seed = 11;
  return generate_synthetic(o);
}

std::string trained_bytes(std::uint64_t seed) {
  const auto docs = corpus();
  const TrainConfig c = quick_config(seed);
  return serialize_model(train(docs, build_vocabulary(docs), c).model, c);
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("rnncoref_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const std::string &path, const std::string &bytes) {
  std::ofstream(path, std::ios::binary) << bytes;
}

TEST(ModelIo, RoundTripPreservesEverything) {
  const auto docs = corpus();
  const TrainConfig c = quick_config(3);
  const Model m = train(docs, build_vocabulary(docs), c).model;
  const std::string bytes = serialize_model(m, c);
  const ModelFile back = deserialize_model(bytes);
  EXPECT_EQ(back.config, c);
  EXPECT_EQ(back.model.vocab(), m.vocab());
  const auto a = m.parameters();
  const auto b = back.model.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
  EXPECT_EQ(serialize_model(back.model, back.config), bytes);
}

TEST(ModelIo, SameSeedGivesIdenticalBytes) {
  EXPECT_EQ(trained_bytes(5), trained_bytes(5));
  EXPECT_NE(trained_bytes(5), trained_bytes(6));
}

TEST(ModelIo, CorruptedByteFailsChecksum) {
  std::string bytes = trained_bytes(1);
  bytes[bytes.size() / 2] ^= 0x20;
  try {
    deserialize_model(bytes);
    FAIL() << "expected a format error";
  } catch (const ModelFormatError &e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos) << e.what();
  }
}

TEST(ModelIo, OtherVersionRefused) {
  std::string bytes = trained_bytes(1);
  bytes[8] = 0;  // version field follows the 8-byte magic
  try {
    deserialize_model(bytes);
    FAIL() << "expected a format error";
  } catch (const ModelFormatError &e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }
}

TEST(ModelIo, TruncatedAndBadMagic) {
  const std::string bytes = trained_bytes(1);
  EXPECT_THROW(deserialize_model(bytes.substr(0, 20)), ModelFormatError);
  EXPECT_THROW(deserialize_model("NOTAMODEL"), ModelFormatError);
}

TEST_F(TempDir, SaveLoadPredictsIdentically) {
  const auto docs = corpus();
  const TrainConfig c = quick_config(2);
  const Model m = train(docs, build_vocabulary(docs), c).model;
  save_model(path("m.bin"), m, c);
  const ModelFile back = load_model(path("m.bin"));
  GreedyOptions g;
  g.record_scores = true;
  for (const Document &d : docs) {
    const GreedyResult a = greedy_cluster(m, d, InferenceMode::kRnnGH, g);
    const GreedyResult b = greedy_cluster(back.model, d, InferenceMode::kRnnGH, g);
    EXPECT_EQ(a.antecedents, b.antecedents);
    for (std::size_t n = 0; n < a.scores.size(); ++n) {
      for (std::size_t i = 0; i < a.scores[n].size(); ++i) {
        EXPECT_EQ(a.scores[n][i].score, b.scores[n][i].score);
      }
    }
  }
}

TEST(PredictionsIo, RoundTrip) {
  const auto docs = corpus();
  const Model m = testing::random_model(build_vocabulary(docs), testing::small_dims(), 4, 0.5);
  std::vector<Prediction> preds;
  for (const Document &d : docs) {
    preds.push_back(make_prediction(d, InferenceMode::kRnnGH,
                                    greedy_cluster(m, d, InferenceMode::kRnnGH)));
  }
  std::stringstream s;
  write_predictions(s, preds);
  EXPECT_EQ(read_predictions(s), preds);
}

TEST(PredictionsIo, RejectsInconsistentLog) {
  std::istringstream in(R"({"id":"d","clusters":[1,2,1],"antecedents":[0,0,2]})"
                        "\n");
  EXPECT_THROW(read_predictions(in), ParseError);
  std::istringstream gapped(R"({"id":"d","clusters":[1,3]})"
                            "\n");
  EXPECT_THROW(read_predictions(gapped), ParseError);
}

// --- Command line ------------------------------------------------------------------

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "rnncoref");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Predictions equal to gold, each mention linked to its closest preceding
// gold antecedent.
std::vector<Prediction> gold_predictions(const std::vector<Document> &docs) {
  std::vector<Prediction> out;
  for (const Document &d : docs) {
    const Clustering g = oracle_clustering(d);
    std::vector<int> ante;
    for (int n = 1; n <= d.size(); ++n) {
      int y = 0;
      for (int k = n - 1; k >= 1 && y == 0; --k) {
        if (g.coreferent(k, n)) y = k;
      }
      ante.push_back(y);
    }
    out.push_back({d.id, "gold", g, ante});
  }
  return out;
}

TEST_F(TempDir, CliGoldAgainstGoldScoresOne) {
  const auto docs = corpus();
  save_documents(path("c.jsonl"), docs);
  std::ofstream(path("p.jsonl")) << [&] {
    std::ostringstream s;
    write_predictions(s, gold_predictions(docs));
    return s.str();
  }();
  const CliRun r = run({"eval", "--gold", path("c.jsonl"), "--pred", path("p.jsonl"),
                        "--format", "tsv"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(row, "gold\t1\t1\t1\t1\t1\t1\t1\t1\t1\t1");
}

TEST_F(TempDir, CliEmptyPredictionsIsError) {
  save_documents(path("c.jsonl"), corpus());
  write_file(path("p.jsonl"), "");
  const CliRun r = run({"eval", "--gold", path("c.jsonl"), "--pred", path("p.jsonl")});
  EXPECT_EQ(r.code, kExitError);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST_F(TempDir, CliMissingRequiredOptionIsUsageError) {
  EXPECT_EQ(run({"eval", "--gold", path("c.jsonl")}).code, kExitUsage);
  EXPECT_EQ(run({"bogus"}).code, kExitUsage);
}

TEST_F(TempDir, CliPipelineMatchesInProcessScores) {
  setenv("COREF_LOG", "quiet", 1);
  ASSERT_EQ(run({"gen", "--out", path("c.jsonl"), "--docs", "4", "--seed", "11"}).code, 0);
  EXPECT_EQ(load_documents(path("c.jsonl")), corpus());
  const CliRun t = run({"train", "--corpus", path("c.jsonl"), "--out", path("m.bin"), "--seed",
                        "2", "--epochs", "3", "--pretrain-epochs", "1", "--dims-ha", "5",
                        "--dims-hp", "7", "--dims-hc", "4", "--dims-na", "6"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(read_file(path("m.bin")), trained_bytes(2));

  ASSERT_EQ(run({"predict", "--model", path("m.bin"), "--corpus", path("c.jsonl"), "--out",
                 path("p.jsonl"), "--mode", "RNN_GH"})
                .code,
            0);
  const CliRun e = run({"eval", "--gold", path("c.jsonl"), "--pred", path("p.jsonl"),
                        "--format", "tsv"});
  ASSERT_EQ(e.code, 0) << e.err;

  const ModelFile mf = load_model(path("m.bin"));
  CorpusScores scores;
  ErrorReport errors;
  for (const Document &d : corpus()) {
    const GreedyResult g = greedy_cluster(mf.model, d, InferenceMode::kRnnGH);
    scores.add(oracle_clustering(d), g.clustering);
    errors += error_report(d, oracle_clustering(d), g.antecedents);
  }
  std::ostringstream want;
  write_score_tsv(want, {{"RNN_GH", scores}});
  want << '\n';
  write_error_tsv(want, {{"RNN_GH", errors}});
  EXPECT_EQ(e.out, want.str());
}

TEST_F(TempDir, CliOracleModeWithoutGoldIsError) {
  auto docs = corpus();
  const TrainConfig c = quick_config(1);
  save_model(path("m.bin"), train(docs, build_vocabulary(docs), c).model, c);
  for (Document &d : docs) {
    for (Mention &m : d.mentions) m.gold_cluster.reset();
  }
  save_documents(path("c.jsonl"), docs);
  const CliRun r = run({"predict", "--model", path("m.bin"), "--corpus", path("c.jsonl"),
                        "--out", path("p.jsonl"), "--mode", "RNN_OH"});
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("RNN_OH"), std::string::npos) << r.err;
  EXPECT_EQ(run({"predict", "--model", path("m.bin"), "--corpus", path("c.jsonl"), "--out",
                 path("p.jsonl"), "--mode", "MR"})
                .code,
            0);
}

TEST_F(TempDir, CliInspect) {
  const auto docs = corpus();
  const TrainConfig c = quick_config(1);
  save_model(path("m.bin"), train(docs, build_vocabulary(docs), c).model, c);
  save_documents(path("c.jsonl"), docs);
  const std::string id = docs[0].id;
  const CliRun s = run({"inspect", "--model", path("m.bin"), "--corpus", path("c.jsonl"),
                        "--kind", "saliency", "--doc", id, "--mention", "10"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(s.out.rfind("cluster\tlast_mention\tgradient_norm\n", 0), 0u);
  const CliRun t = run({"inspect", "--model", path("m.bin"), "--corpus", path("c.jsonl"),
                        "--kind", "trajectory", "--doc", id, "--mention", "10", "--cluster", "1"});
  ASSERT_EQ(t.code, 0) << t.err;
  const Clustering g = oracle_clustering(docs[0]);
  EXPECT_EQ(std::count(t.out.begin(), t.out.end(), '\n'),
            static_cast<long>(g.cluster(1).size()) + 1);
  const CliRun st = run({"inspect", "--model", path("m.bin"), "--corpus", path("c.jsonl"),
                         "--kind", "states"});
  ASSERT_EQ(st.code, 0) << st.err;
  EXPECT_EQ(st.out.rfind("doc_id\tcluster\ttype\tstate\n", 0), 0u);
  EXPECT_EQ(run({"inspect", "--model", path("m.bin"), "--corpus", path("c.jsonl"), "--kind",
                 "trajectory", "--doc", "nope", "--mention", "1"})
                .code,
            kExitError);
}

}  // namespace
}  // namespace rnncoref
