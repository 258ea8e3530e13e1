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

// The `rnncoref` command line: gen, train, predict, eval, inspect.
// run_cli() takes explicit streams so tests can drive it in-process.

#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rnncoref/corpus.hpp"
#include "rnncoref/eval.hpp"
#include "rnncoref/features.hpp"
#include "rnncoref/inference.hpp"
#include "rnncoref/model_io.hpp"
#include "rnncoref/predictions.hpp"
#include "rnncoref/synthetic.hpp"
#include "rnncoref/train.hpp"

namespace rnncoref {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

// COREF_LOG: quiet|info|debug (or 0|1|2). Unset means info.
inline LogLevel log_level_from_env() {
  const char *v = std::getenv("COREF_LOG");
  if (v == nullptr) return LogLevel::kInfo;
  const std::string s = to_lower(v);
  if (s == "quiet" || s == "0" || s == "off") return LogLevel::kQuiet;
  if (s == "debug" || s == "2") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

class Logger {
 public:
  Logger(std::ostream &out, LogLevel level) : out_(out), level_(level) {}
  void info(const std::string &msg) const {
    if (level_ >= LogLevel::kInfo) out_ << msg << '\n';
  }
  void debug(const std::string &msg) const {
    if (level_ >= LogLevel::kDebug) out_ << msg << '\n';
  }

 private:
  std::ostream &out_;
  LogLevel level_;
};

namespace cli_detail {

inline std::string one_line(std::string s) {
  for (char &c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

inline std::ofstream open_out(const std::string &path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

inline const Document &find_document(const std::vector<Document> &docs, const std::string &id) {
  for (const Document &d : docs) {
    if (d.id == id) return d;
  }
  throw std::runtime_error("unknown document id " + id);
}

struct GenArgs {
  std::string out;
  SyntheticOptions opts;
};

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string mode = "RNN_GH";
  TrainConfig config;
};

struct PredictArgs {
  std::string model;
  std::string corpus;
  std::string out;
  std::string mode = "RNN_GH";
};

struct EvalArgs {
  std::string gold;
  std::string pred;
  bool keep_singletons = false;
  std::string format = "table";
};

struct InspectArgs {
  std::string model;
  std::string corpus;
  std::string doc;
  int mention = 0;
  std::string kind;
  std::string clusters = "gold";
  int cluster = 0;
};

inline int cmd_gen(const GenArgs &a, const Logger &log) {
  const std::vector<Document> docs = generate_synthetic(a.opts);
  save_documents(a.out, docs);
  const HistoryAudit audit = audit_history_dependence(docs);
  std::ostringstream msg;
  msg << "wrote " << docs.size() << " documents to " << a.out << "; history-dependent pronouns "
      << audit.history_dependent << "/" << audit.pronouns;
  log.info(msg.str());
  return kExitOk;
}

inline int cmd_train(TrainArgs a, const Logger &log) {
  const auto mode = parse_inference_mode(a.mode);
  if (!mode) throw std::invalid_argument("unknown mode " + a.mode);
  a.config.global = *mode != InferenceMode::kMR;
  if (auto v = a.config.violations(); !v.empty()) throw std::invalid_argument(v.front());

  const std::vector<Document> docs = load_documents(a.corpus);
  if (std::none_of(docs.begin(), docs.end(), [](const Document &d) { return d.has_gold(); })) {
    throw std::runtime_error("training corpus " + a.corpus + " has no gold clusters");
  }
  VocabularyOptions vopts;
  vopts.min_count = a.config.min_feature_count;
  const FeatureVocabulary vocab = build_vocabulary(docs, vopts);
  log.debug("vocabulary: " + std::to_string(vocab.anaphoricity_size()) + " anaphoricity, " +
            std::to_string(vocab.pairwise_size()) + " pairwise features");

  const TrainResult result =
      train(docs, vocab, a.config, [&](const EpochStats &e, const Model &) {
        std::ostringstream msg;
        msg << "epoch " << e.epoch << " phase " << (e.global_phase ? "global" : "local")
            << " loss " << std::setprecision(10) << e.loss;
        log.info(msg.str());
        return true;
      });
  save_model(a.out, result.model, a.config);
  log.info("saved model to " + a.out);
  return kExitOk;
}

inline int cmd_predict(const PredictArgs &a, const Logger &log) {
  const auto mode = parse_inference_mode(a.mode);
  if (!mode) throw std::invalid_argument("unknown mode " + a.mode);
  const ModelFile mf = load_model(a.model);
  const std::vector<Document> docs = load_documents(a.corpus);
  std::vector<Prediction> preds;
  for (const Document &d : docs) {
    if (needs_gold(*mode) && !d.has_gold()) {
      throw ModeError("mode " + a.mode + " needs gold clusters but document " + d.id +
                      " has none");
    }
    preds.push_back(make_prediction(d, *mode, greedy_cluster(mf.model, d, *mode)));
  }
  std::ofstream out = open_out(a.out);
  write_predictions(out, preds);
  log.info("wrote " + std::to_string(preds.size()) + " predictions to " + a.out);
  return kExitOk;
}

inline int cmd_eval(const EvalArgs &a, std::ostream &out, const Logger &log) {
  if (a.format != "table" && a.format != "tsv") {
    throw std::invalid_argument("unknown format " + a.format);
  }
  const std::vector<Document> gold = load_documents(a.gold);
  const std::vector<Prediction> preds = load_predictions(a.pred);
  if (preds.empty()) throw std::runtime_error("prediction file " + a.pred + " is empty");
  std::map<std::string, const Prediction *> by_id;
  for (const Prediction &p : preds) {
    if (!by_id.emplace(p.doc_id, &p).second) {
      throw std::runtime_error("duplicate prediction for document " + p.doc_id);
    }
  }
  if (by_id.size() != gold.size()) {
    throw std::runtime_error("prediction file covers " + std::to_string(by_id.size()) +
                             " documents, gold has " + std::to_string(gold.size()));
  }
  EvalOptions opts;
  opts.drop_singletons = !a.keep_singletons;
  CorpusScores scores;
  ErrorReport errors;
  for (const Document &d : gold) {
    auto it = by_id.find(d.id);
    if (it == by_id.end()) throw std::runtime_error("no prediction for document " + d.id);
    const Prediction &p = *it->second;
    const Clustering g = oracle_clustering(d);
    if (p.clustering.num_mentions() != g.num_mentions()) {
      throw MentionMismatchError("document " + d.id + ": gold has " +
                                 std::to_string(g.num_mentions()) + " mentions, prediction has " +
                                 std::to_string(p.clustering.num_mentions()));
    }
    if (p.antecedents.empty() && g.num_mentions() > 0) {
      throw std::runtime_error("prediction for document " + d.id + " has no decision log");
    }
    scores.add(g, p.clustering, opts);
    errors += error_report(d, g, p.antecedents);
  }
  const std::string name = preds.front().mode.empty() ? "system" : preds.front().mode;
  log.debug(opts.drop_singletons ? "singletons removed before scoring"
                                 : "singletons kept for scoring");
  if (a.format == "tsv") {
    write_score_tsv(out, {{name, scores}});
    out << '\n';
    write_error_tsv(out, {{name, errors}});
  } else {
    write_score_table(out, {{name, scores}});
    out << '\n';
    write_error_table(out, {{name, errors}});
  }
  return kExitOk;
}

inline int cmd_inspect(const InspectArgs &a, std::ostream &out) {
  const ModelFile mf = load_model(a.model);
  const Model &m = mf.model;
  const std::vector<Document> docs = load_documents(a.corpus);
  if (a.clusters != "gold" && a.clusters != "predicted") {
    throw std::invalid_argument("--clusters must be gold or predicted");
  }
  auto clustering_of = [&](const Document &d) {
    if (a.clusters == "gold") {
      if (!d.has_gold()) throw std::runtime_error("document " + d.id + " has no gold clusters");
      return oracle_clustering(d);
    }
    return greedy_cluster(m, d, InferenceMode::kRnnGH).clustering;
  };

  if (a.kind == "states") {
    std::vector<ClusterStateRow> rows;
    for (const Document &d : docs) {
      if (!a.doc.empty() && d.id != a.doc) continue;
      auto r = export_cluster_states(m, d, clustering_of(d));
      rows.insert(rows.end(), r.begin(), r.end());
    }
    if (!a.doc.empty() && rows.empty()) find_document(docs, a.doc);  // unknown id -> error
    write_cluster_states(out, rows);
    return kExitOk;
  }
  if (a.kind != "trajectory" && a.kind != "saliency") {
    throw std::invalid_argument("unknown inspect kind " + a.kind);
  }
  if (a.doc.empty()) throw std::invalid_argument("--doc is required for " + a.kind);
  const Document &d = find_document(docs, a.doc);
  if (a.mention < 1 || a.mention > d.size()) {
    throw std::out_of_range("document " + d.id + " has no mention " + std::to_string(a.mention));
  }
  const Clustering c = clustering_of(d);
  out << std::setprecision(10);
  if (a.kind == "saliency") {
    out << "cluster\tlast_mention\tgradient_norm\n";
    for (const ClusterSaliency &s : na_saliency(m, d, c, a.mention)) {
      out << s.cluster << '\t' << s.last_mention << '\t' << s.gradient_norm << '\n';
    }
    return kExitOk;
  }
  out << "cluster\tj\tmention\tscore\n";
  for (int k = 1; k <= c.num_clusters(); ++k) {
    if (a.cluster != 0 && k != a.cluster) continue;
    const std::vector<Real> s = trajectory_scores(m, d, c, a.mention, k);
    for (std::size_t j = 0; j < s.size(); ++j) {
      out << k << '\t' << j + 1 << '\t' << c.cluster(k)[j] << '\t' << s[j] << '\n';
    }
  }
  if (a.cluster != 0 && a.cluster > c.num_clusters()) {
    throw std::out_of_range("unknown cluster " + std::to_string(a.cluster));
  }
  return kExitOk;
}

}  // namespace cli_detail

// Parses argv and runs one subcommand. Errors go to `err` as a single line
// "error: <reason>" with a nonzero return.
inline int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  using namespace cli_detail;
  CLI::App app{"Coreference resolution with recurrent cluster representations", "rnncoref"};
  app.require_subcommand(1);

  GenArgs gen;
  auto *g = app.add_subcommand("gen", "Write a synthetic corpus");
  g->add_option("--out", gen.out, "Output corpus (JSON lines)")->required();
  g->add_option("--docs", gen.opts.documents, "Number of documents")->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gen.opts.seed, "Random seed");
  g->add_option("--early-singletons", gen.opts.early_singletons)->check(CLI::NonNegativeNumber);
  g->add_option("--late-singletons", gen.opts.late_singletons)->check(CLI::NonNegativeNumber);

  TrainArgs tr;
  auto *t = app.add_subcommand("train", "Train a model");
  t->add_option("--corpus", tr.corpus, "Training corpus with gold clusters")->required();
  t->add_option("--out", tr.out, "Output model file")->required();
  t->add_option("--seed", tr.config.seed);
  t->add_option("--epochs", tr.config.epochs);
  t->add_option("--mode", tr.mode, "MR trains the local model only; any RNN mode trains all");
  for (ParamGroup grp : kAllGroups) {
    t->add_option("--lr-" + std::string(to_string(grp)), tr.config.learning_rates[grp],
                  "AdaGrad learning rate for the " + std::string(to_string(grp)) + " group");
  }
  t->add_option("--dropout-concat", tr.config.dropout.concat);
  t->add_option("--dropout-state", tr.config.dropout.state);
  t->add_option("--alpha-fl", tr.config.alphas.false_link);
  t->add_option("--alpha-fn", tr.config.alphas.false_new);
  t->add_option("--alpha-wl", tr.config.alphas.wrong_link);
  t->add_option("--pretrain", tr.config.pretrain, "true/false");
  t->add_option("--pretrain-epochs", tr.config.pretrain_epochs);
  t->add_option("--dims-ha", tr.config.dims.anaphoric);
  t->add_option("--dims-hp", tr.config.dims.pairwise);
  t->add_option("--dims-hc", tr.config.dims.cluster);
  t->add_option("--dims-na", tr.config.dims.na_hidden);
  t->add_option("--clip-lo", tr.config.clip_lo);
  t->add_option("--clip-hi", tr.config.clip_hi);
  t->add_option("--min-count", tr.config.min_feature_count);

  PredictArgs pr;
  auto *p = app.add_subcommand("predict", "Cluster a corpus with a trained model");
  p->add_option("--model", pr.model)->required();
  p->add_option("--corpus", pr.corpus)->required();
  p->add_option("--out", pr.out, "Predictions (JSON lines)")->required();
  p->add_option("--mode", pr.mode, "MR, AVG_OH, RNN_GH or RNN_OH");

  EvalArgs ev;
  auto *e = app.add_subcommand("eval", "Score predictions against gold clusters");
  e->add_option("--gold", ev.gold)->required();
  e->add_option("--pred", ev.pred)->required();
  e->add_flag("--keep-singletons", ev.keep_singletons);
  e->add_option("--format", ev.format, "table or tsv");

  InspectArgs in;
  auto *i = app.add_subcommand("inspect", "Diagnostic tables for one document");
  i->add_option("--model", in.model)->required();
  i->add_option("--corpus", in.corpus)->required();
  i->add_option("--kind", in.kind, "trajectory, saliency or states")->required();
  i->add_option("--doc", in.doc);
  i->add_option("--mention", in.mention);
  i->add_option("--clusters", in.clusters, "gold or predicted (RNN_GH)");
  i->add_option("--cluster", in.cluster, "Restrict trajectory output to one cluster");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &ex) {
    err << "error: " << one_line(ex.what()) << '\n';
    return kExitUsage;
  }

  const Logger log(err, log_level_from_env());
  try {
    if (*g) return cmd_gen(gen, log);
    if (*t) return cmd_train(tr, log);
    if (*p) return cmd_predict(pr, log);
    if (*e) return cmd_eval(ev, out, log);
    if (*i) return cmd_inspect(in, out);
  } catch (const std::exception &ex) {
    err << "error: " << one_line(ex.what()) << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace rnncoref
