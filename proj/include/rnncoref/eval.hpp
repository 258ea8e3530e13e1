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

// MUC, B-cubed, entity CEAF and the CoNLL average, plus the decision-level
// error breakdown (false link / false new / wrong link by mention category).
//
// Numerators and denominators are accumulated as exact rationals and only
// converted to double at the end, so results do not depend on summation
// order.

#pragma once

#include <array>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "rnncoref/corpus.hpp"
#include "rnncoref/hungarian.hpp"

namespace rnncoref {

using Rational = boost::multiprecision::cpp_rational;

// Clusters as lists of mention ids. Need not cover every mention.
using ClusterList = std::vector<std::vector<int>>;

struct MetricResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricCounts {
  Rational recall_num = 0, recall_den = 0;
  Rational precision_num = 0, precision_den = 0;

  MetricCounts &operator+=(const MetricCounts &o) {
    recall_num += o.recall_num;
    recall_den += o.recall_den;
    precision_num += o.precision_num;
    precision_den += o.precision_den;
    return *this;
  }

  MetricResult result() const {
    const Rational r = recall_den == 0 ? Rational(0) : Rational(recall_num / recall_den);
    const Rational p = precision_den == 0 ? Rational(0) : Rational(precision_num / precision_den);
    const Rational f = (p + r) == 0 ? Rational(0) : Rational(2 * p * r / (p + r));
    return {static_cast<double>(p), static_cast<double>(r), static_cast<double>(f)};
  }
};

class MentionMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace eval_detail {

inline std::map<int, int> index_of(const ClusterList &clusters) {
  std::map<int, int> out;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (int m : clusters[c]) out[m] = static_cast<int>(c);
  }
  return out;
}

// Number of pieces `cluster` is cut into by `other`; mentions missing from
// `other` count as their own piece.
inline long partition_count(const std::vector<int> &cluster, const std::map<int, int> &other) {
  std::set<int> parts;
  long missing = 0;
  for (int m : cluster) {
    auto it = other.find(m);
    if (it == other.end()) {
      ++missing;
    } else {
      parts.insert(it->second);
    }
  }
  return static_cast<long>(parts.size()) + missing;
}

inline long overlap(const std::vector<int> &a, const std::vector<int> &b) {
  std::set<int> sa(a.begin(), a.end());
  long n = 0;
  for (int m : b) n += sa.count(m);
  return n;
}

inline Rational bcubed_side(const ClusterList &key, const ClusterList &response) {
  Rational sum = 0;
  for (const auto &k : key) {
    if (k.empty()) continue;
    Rational inner = 0;
    for (const auto &r : response) {
      const long o = overlap(k, r);
      inner += o * o;
    }
    sum += inner / static_cast<long>(k.size());
  }
  return sum;
}

inline long mention_count(const ClusterList &c) {
  long n = 0;
  for (const auto &k : c) n += static_cast<long>(k.size());
  return n;
}

}  // namespace eval_detail

inline MetricCounts muc_counts(const ClusterList &gold, const ClusterList &pred) {
  using namespace eval_detail;
  MetricCounts out;
  const auto gi = index_of(gold);
  const auto pi = index_of(pred);
  for (const auto &k : gold) {
    if (k.empty()) continue;
    out.recall_num += static_cast<long>(k.size()) - partition_count(k, pi);
    out.recall_den += static_cast<long>(k.size()) - 1;
  }
  for (const auto &r : pred) {
    if (r.empty()) continue;
    out.precision_num += static_cast<long>(r.size()) - partition_count(r, gi);
    out.precision_den += static_cast<long>(r.size()) - 1;
  }
  return out;
}

inline MetricCounts bcubed_counts(const ClusterList &gold, const ClusterList &pred) {
  using namespace eval_detail;
  MetricCounts out;
  out.recall_num = bcubed_side(gold, pred);
  out.recall_den = mention_count(gold);
  out.precision_num = bcubed_side(pred, gold);
  out.precision_den = mention_count(pred);
  return out;
}

// phi4(K, R) = 2|K n R| / (|K| + |R|)
inline Rational phi4(const std::vector<int> &k, const std::vector<int> &r) {
  if (k.empty() && r.empty()) return 0;
  return Rational(2 * eval_detail::overlap(k, r)) / static_cast<long>(k.size() + r.size());
}

inline MetricCounts ceaf_e_counts(const ClusterList &gold, const ClusterList &pred) {
  MetricCounts out;
  out.recall_den = static_cast<long>(gold.size());
  out.precision_den = static_cast<long>(pred.size());
  if (gold.empty() || pred.empty()) return out;
  std::vector<std::vector<double>> cost(gold.size(), std::vector<double>(pred.size()));
  std::vector<std::vector<Rational>> sim(gold.size(), std::vector<Rational>(pred.size()));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      sim[i][j] = phi4(gold[i], pred[j]);
      cost[i][j] = -static_cast<double>(sim[i][j]);
    }
  }
  const std::vector<int> match = min_cost_assignment(cost);
  Rational total = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (match[i] >= 0) total += sim[i][match[i]];
  }
  out.recall_num = total;
  out.precision_num = total;
  return out;
}

inline MetricResult muc(const ClusterList &gold, const ClusterList &pred) {
  return muc_counts(gold, pred).result();
}
inline MetricResult bcubed(const ClusterList &gold, const ClusterList &pred) {
  return bcubed_counts(gold, pred).result();
}
inline MetricResult ceaf_e(const ClusterList &gold, const ClusterList &pred) {
  return ceaf_e_counts(gold, pred).result();
}

inline void check_same_mentions(const Clustering &gold, const Clustering &pred) {
  if (gold.num_mentions() != pred.num_mentions()) {
    throw MentionMismatchError("gold has " + std::to_string(gold.num_mentions()) +
                               " mentions, prediction has " +
                               std::to_string(pred.num_mentions()));
  }
}

// Metrics over full clusterings of the same mentions (singletons included).
inline MetricResult muc(const Clustering &gold, const Clustering &pred) {
  check_same_mentions(gold, pred);
  return muc(gold.clusters(), pred.clusters());
}
inline MetricResult bcubed(const Clustering &gold, const Clustering &pred) {
  check_same_mentions(gold, pred);
  return bcubed(gold.clusters(), pred.clusters());
}
inline MetricResult ceaf_e(const Clustering &gold, const Clustering &pred) {
  check_same_mentions(gold, pred);
  return ceaf_e(gold.clusters(), pred.clusters());
}

inline double conll_average(const MetricResult &m, const MetricResult &b, const MetricResult &c) {
  return (m.f1 + b.f1 + c.f1) / 3.0;
}

inline ClusterList without_singletons(const ClusterList &clusters) {
  ClusterList out;
  for (const auto &c : clusters) {
    if (c.size() > 1) out.push_back(c);
  }
  return out;
}

struct EvalOptions {
  // CoNLL-2012 convention: gold has no singletons, so both sides drop them.
  bool drop_singletons = true;
};

// Corpus-level scores: counts are summed over documents before dividing.
struct CorpusScores {
  MetricCounts muc, bcubed, ceaf_e;
  int documents = 0;

  void add(const Clustering &gold, const Clustering &pred, EvalOptions opts = {}) {
    check_same_mentions(gold, pred);
    ClusterList g = gold.clusters();
    ClusterList p = pred.clusters();
    if (opts.drop_singletons) {
      g = without_singletons(g);
      p = without_singletons(p);
    }
    muc += muc_counts(g, p);
    bcubed += bcubed_counts(g, p);
    ceaf_e += ceaf_e_counts(g, p);
    ++documents;
  }

  MetricResult muc_result() const { return muc.result(); }
  MetricResult bcubed_result() const { return bcubed.result(); }
  MetricResult ceaf_e_result() const { return ceaf_e.result(); }
  double conll() const { return conll_average(muc_result(), bcubed_result(), ceaf_e_result()); }
};

// --- Error breakdown -----------------------------------------------------------

struct ErrorReport {
  // Indexed by MentionCategory.
  std::array<int, 3> false_link{};
  std::array<int, 3> false_new{};
  std::array<int, 3> wrong_link{};
  std::array<int, 3> correct{};
  std::array<int, 3> anaphoric{};
  std::array<int, 3> non_anaphoric{};

  int total_errors() const {
    int n = 0;
    for (int c = 0; c < 3; ++c) n += false_link[c] + false_new[c] + wrong_link[c];
    return n;
  }
  int total_correct() const { return correct[0] + correct[1] + correct[2]; }
  int mentions() const {
    int n = 0;
    for (int c = 0; c < 3; ++c) n += anaphoric[c] + non_anaphoric[c];
    return n;
  }

  ErrorReport &operator+=(const ErrorReport &o) {
    for (int c = 0; c < 3; ++c) {
      false_link[c] += o.false_link[c];
      false_new[c] += o.false_new[c];
      wrong_link[c] += o.wrong_link[c];
      correct[c] += o.correct[c];
      anaphoric[c] += o.anaphoric[c];
      non_anaphoric[c] += o.non_anaphoric[c];
    }
    return *this;
  }
};

// `antecedents[n-1]` is the decision made for x_n (0 = new cluster).
inline ErrorReport error_report(const Document &doc, const Clustering &gold,
                                const std::vector<int> &antecedents) {
  const int big_n = gold.num_mentions();
  if (static_cast<int>(antecedents.size()) != big_n || doc.size() != big_n) {
    throw std::invalid_argument("error_report: decision log for document " + doc.id +
                                " has " + std::to_string(antecedents.size()) +
                                " entries, expected " + std::to_string(big_n));
  }
  ErrorReport r;
  for (int n = 1; n <= big_n; ++n) {
    const int c = static_cast<int>(mention_category(doc, n));
    const int y = antecedents[n - 1];
    if (y < 0 || y >= n) {
      throw std::invalid_argument("error_report: decision " + std::to_string(y) +
                                  " invalid for mention " + std::to_string(n));
    }
    if (gold.anaphoric(n)) {
      ++r.anaphoric[c];
      if (y == 0) {
        ++r.false_new[c];
      } else if (!gold.coreferent(y, n)) {
        ++r.wrong_link[c];
      } else {
        ++r.correct[c];
      }
    } else {
      ++r.non_anaphoric[c];
      if (y != 0) {
        ++r.false_link[c];
      } else {
        ++r.correct[c];
      }
    }
  }
  return r;
}

// --- Reports ---------------------------------------------------------------------

inline std::string format_percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%6.2f", 100.0 * x);
  return buf;
}

// Aligned table: one row per system, P/R/F1 for each metric plus CoNLL.
inline void write_score_table(std::ostream &out,
                              const std::vector<std::pair<std::string, CorpusScores>> &rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-12s | %-20s | %-20s | %-20s | %6s\n", "System",
                "       MUC", "        B3", "      CEAFe", "CoNLL");
  out << line;
  std::snprintf(line, sizeof line, "%-12s | %6s %6s %6s | %6s %6s %6s | %6s %6s %6s | %6s\n", "",
                "P", "R", "F1", "P", "R", "F1", "P", "R", "F1", "");
  out << line;
  for (const auto &[name, s] : rows) {
    const MetricResult m = s.muc_result(), b = s.bcubed_result(), c = s.ceaf_e_result();
    out << (std::string(name) + std::string(12 > name.size() ? 12 - name.size() : 0, ' ')) << " |";
    for (const MetricResult *r : {&m, &b, &c}) {
      out << ' ' << format_percent(r->precision) << ' ' << format_percent(r->recall) << ' '
          << format_percent(r->f1) << " |";
    }
    out << ' ' << format_percent(s.conll()) << '\n';
  }
}

inline void write_score_tsv(std::ostream &out,
                            const std::vector<std::pair<std::string, CorpusScores>> &rows) {
  out << "system\tmuc_p\tmuc_r\tmuc_f1\tb3_p\tb3_r\tb3_f1\tceafe_p\tceafe_r\tceafe_f1\tconll\n";
  for (const auto &[name, s] : rows) {
    const MetricResult m = s.muc_result(), b = s.bcubed_result(), c = s.ceaf_e_result();
    out << name;
    for (const MetricResult *r : {&m, &b, &c}) {
      out << '\t' << r->precision << '\t' << r->recall << '\t' << r->f1;
    }
    out << '\t' << s.conll() << '\n';
  }
}

// Error grid: FL over non-anaphoric mentions, FN and WL over anaphoric
// ones, each split into Nom. HM / Nom. No HM / Pron.
inline void write_error_table(std::ostream &out,
                              const std::vector<std::pair<std::string, ErrorReport>> &rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-12s | %-26s | %-26s | %-26s\n", "",
                "Non-Anaphoric (FL)", "Anaphoric (FN)", "Anaphoric (WL)");
  out << line;
  std::snprintf(line, sizeof line,
                "%-12s | %8s %8s %8s | %8s %8s %8s | %8s %8s %8s\n", "", "NomHM", "NomNoHM",
                "Pron", "NomHM", "NomNoHM", "Pron", "NomHM", "NomNoHM", "Pron");
  out << line;
  auto row = [&](const std::string &name, const std::array<int, 3> &a,
                 const std::array<int, 3> &b, const std::array<int, 3> &c) {
    std::snprintf(line, sizeof line, "%-12s | %8d %8d %8d | %8d %8d %8d | %8d %8d %8d\n",
                  name.c_str(), a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2]);
    out << line;
  };
  for (const auto &[name, r] : rows) row(name, r.false_link, r.false_new, r.wrong_link);
  if (!rows.empty()) {
    const ErrorReport &r = rows.front().second;
    row("# Mentions", r.non_anaphoric, r.anaphoric, r.anaphoric);
  }
}

inline void write_error_tsv(std::ostream &out,
                            const std::vector<std::pair<std::string, ErrorReport>> &rows) {
  out << "system\tkind\tcategory\tcount\n";
  static const char *kCats[] = {"NomHM", "NomNoHM", "Pron"};
  for (const auto &[name, r] : rows) {
    for (int c = 0; c < 3; ++c) {
      out << name << "\tFL\t" << kCats[c] << '\t' << r.false_link[c] << '\n';
      out << name << "\tFN\t" << kCats[c] << '\t' << r.false_new[c] << '\n';
      out << name << "\tWL\t" << kCats[c] << '\t' << r.wrong_link[c] << '\n';
      out << name << "\tcorrect\t" << kCats[c] << '\t' << r.correct[c] << '\n';
      out << name << "\tanaphoric\t" << kCats[c] << '\t' << r.anaphoric[c] << '\n';
      out << name << "\tnon_anaphoric\t" << kCats[c] << '\t' << r.non_anaphoric[c] << '\n';
    }
  }
}

}  // namespace rnncoref
