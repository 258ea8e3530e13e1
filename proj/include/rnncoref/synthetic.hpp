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

// Seeded synthetic corpus with second-person pronouns whose antecedent can
// only be told apart through the rest of the cluster.
//
// Every document has four entities and a few singletons:
//   addressee  a proper name, later "you" and "yourself"
//   group      a plural nominal, later "all of you" and "you all"
//   third      a proper name of the other gender, later he/she and the name
//   thing      a singular neuter nominal, later "it" and the nominal again
// The second-person forms carry unknown number and gender and never repeat
// within a document, so their pairwise features against the addressee and
// the group look alike. Only the cluster contents differ: a singular proper
// name versus a plural nominal. Entity introductions come first, followed
// by the later mentions in random order, so distance carries no signal.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rnncoref/corpus.hpp"
#include "rnncoref/features.hpp"

namespace rnncoref {

struct SyntheticOptions {
  int documents = 20;
  std::uint64_t seed = 1;
  int early_singletons = 2;
  int late_singletons = 1;
};

namespace synthetic_detail {

inline constexpr const char *kAddresseeNames[] = {"Linda", "Maria", "Sarah", "Helen", "Anna",
                                                  "Grace", "Diana", "Laura", "Emma",  "Julia"};
inline constexpr const char *kThirdNames[] = {"Peter", "James", "Robert", "Thomas", "Daniel",
                                              "Mark",  "Paul",  "George", "Edward", "Frank"};
inline constexpr const char *kGroups[] = {"colleagues", "students", "neighbors", "voters",
                                          "viewers",    "members",  "players",   "guests"};
inline constexpr const char *kThings[] = {"company", "plan",   "report", "project",
                                          "budget",  "policy", "market", "program"};
inline constexpr const char *kSingletons[] = {"weather", "traffic", "morning", "deadline",
                                              "problem", "weekend", "moment",  "question",
                                              "river",   "window",  "letter",  "station"};
inline constexpr const char *kSpeakers[] = {"Moderator", "Host", "Anchor", "Narrator"};
inline constexpr const char *kFillers[] = {"then", "said", "and", "saw",
                                           "with", "so",   "met", "told"};

struct Spec {
  std::vector<std::string> tokens;
  int head = 0;  // offset within tokens
  MentionType type = MentionType::kNominal;
  Number number = Number::kUnknown;
  Gender gender = Gender::kUnknown;
  long cluster = 0;  // 0 = singleton (no gold label)
};

template <typename T, std::size_t N>
const char *pick(const T (&pool)[N], std::mt19937_64 &rng) {
  return pool[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

inline Document build_document(const std::string &id, std::mt19937_64 &rng,
                               const SyntheticOptions &opts) {
  const bool addressee_female = std::bernoulli_distribution(0.5)(rng);
  const Gender g_addr = addressee_female ? Gender::kFemale : Gender::kMale;
  const Gender g_third = addressee_female ? Gender::kMale : Gender::kFemale;
  // Name pools are split by role, not by gender; the gender labels are a
  // coin flip so that gender alone does not identify the addressee.
  const std::string addr_name = pick(kAddresseeNames, rng);
  const std::string third_name = pick(kThirdNames, rng);
  const std::string group = pick(kGroups, rng);
  const std::string thing = pick(kThings, rng);

  enum : long { kAddr = 1, kGroup = 2, kThird = 3, kThing = 4 };

  std::vector<Spec> early = {
      {{addr_name}, 0, MentionType::kProper, Number::kSingular, g_addr, kAddr},
      {{"the", group}, 1, MentionType::kNominal, Number::kPlural, Gender::kUnknown, kGroup},
      {{third_name}, 0, MentionType::kProper, Number::kSingular, g_third, kThird},
      {{"the", thing}, 1, MentionType::kNominal, Number::kSingular, Gender::kNeuter, kThing},
  };
  std::vector<Spec> late = {
      {{"you"}, 0, MentionType::kPronominal, Number::kUnknown, Gender::kUnknown, kAddr},
      {{"yourself"}, 0, MentionType::kPronominal, Number::kUnknown, Gender::kUnknown, kAddr},
      {{"all", "of", "you"}, 2, MentionType::kPronominal, Number::kUnknown, Gender::kUnknown,
       kGroup},
      {{"you", "all"}, 0, MentionType::kPronominal, Number::kUnknown, Gender::kUnknown, kGroup},
      {{g_third == Gender::kMale ? "he" : "she"}, 0, MentionType::kPronominal,
       Number::kSingular, g_third, kThird},
      {{third_name}, 0, MentionType::kProper, Number::kSingular, g_third, kThird},
      {{"it"}, 0, MentionType::kPronominal, Number::kSingular, Gender::kNeuter, kThing},
      {{"the", thing}, 1, MentionType::kNominal, Number::kSingular, Gender::kNeuter, kThing},
  };

  std::set<std::string> used;
  auto singleton = [&]() {
    std::string head;
    do {
      head = pick(kSingletons, rng);
    } while (!used.insert(head).second);
    return Spec{{"the", head}, 1, MentionType::kNominal, Number::kSingular, Gender::kUnknown, 0};
  };
  for (int i = 0; i < opts.early_singletons; ++i) early.push_back(singleton());
  for (int i = 0; i < opts.late_singletons; ++i) late.push_back(singleton());

  std::shuffle(early.begin(), early.end(), rng);
  std::shuffle(late.begin(), late.end(), rng);
  std::vector<Spec> order = early;
  order.insert(order.end(), late.begin(), late.end());

  Document doc;
  doc.id = id;
  doc.genre = std::string(kGenres[std::uniform_int_distribution<std::size_t>(
      0, std::size(kGenres) - 1)(rng)]);
  const std::string speaker = pick(kSpeakers, rng);

  // One or two mentions per sentence, each preceded by a filler token.
  std::size_t k = 0;
  std::uniform_int_distribution<int> per_sentence(1, 2);
  while (k < order.size()) {
    const int count = std::min<int>(per_sentence(rng), static_cast<int>(order.size() - k));
    std::vector<std::string> tokens;
    const int sentence = static_cast<int>(doc.sentences.size());
    for (int i = 0; i < count; ++i, ++k) {
      const Spec &s = order[k];
      tokens.push_back(pick(kFillers, rng));
      Mention m;
      m.sentence = sentence;
      m.start = static_cast<int>(tokens.size());
      tokens.insert(tokens.end(), s.tokens.begin(), s.tokens.end());
      m.end = static_cast<int>(tokens.size()) - 1;
      m.head = m.start + s.head;
      m.type = s.type;
      m.number = s.number;
      m.gender = s.gender;
      m.head_str = s.tokens[s.head];
      if (s.cluster != 0) m.gold_cluster = s.cluster;
      doc.mentions.push_back(m);
    }
    tokens.push_back(".");
    doc.sentences.push_back(std::move(tokens));
    doc.speakers.push_back(speaker);
  }
  normalize_mention_order(doc);
  return doc;
}

}  // namespace synthetic_detail

inline std::vector<Document> generate_synthetic(const SyntheticOptions &opts) {
  std::mt19937_64 rng(opts.seed);
  std::vector<Document> docs;
  docs.reserve(static_cast<std::size_t>(std::max(opts.documents, 0)));
  for (int i = 0; i < opts.documents; ++i) {
    docs.push_back(synthetic_detail::build_document(
        "synth-" + std::to_string(opts.seed) + "-" + std::to_string(i), rng, opts));
  }
  return docs;
}

// A pronoun is history-dependent when every gold antecedent has a wrong
// candidate with the same pairwise features once distance is ignored: no
// local scorer can prefer the right one except through distance.
inline bool history_dependent(const Document &doc, const Clustering &gold, int n) {
  if (doc.mention(n).type != MentionType::kPronominal || !gold.anaphoric(n)) return false;
  auto keys = [&](int y) {
    std::vector<std::string> out;
    for (std::string &k : pairwise_keys(doc, n, y)) {
      if (k.rfind("mdist:", 0) == 0 || k.rfind("sdist:", 0) == 0) continue;
      out.push_back(std::move(k));
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  for (int y = 1; y < n; ++y) {
    if (!gold.coreferent(y, n)) continue;
    const auto ky = keys(y);
    bool twin = false;
    for (int w = 1; w < n && !twin; ++w) {
      if (!gold.coreferent(w, n) && keys(w) == ky) twin = true;
    }
    if (!twin) return false;
  }
  return true;
}

struct HistoryAudit {
  int pronouns = 0;
  int history_dependent = 0;

  double fraction() const {
    return pronouns == 0 ? 0.0 : static_cast<double>(history_dependent) / pronouns;
  }
};

inline HistoryAudit audit_history_dependence(const std::vector<Document> &docs) {
  HistoryAudit a;
  for (const Document &d : docs) {
    const Clustering gold = oracle_clustering(d);
    for (int n = 1; n <= d.size(); ++n) {
      if (d.mention(n).type != MentionType::kPronominal) continue;
      ++a.pronouns;
      if (history_dependent(d, gold, n)) ++a.history_dependent;
    }
  }
  return a;
}

}  // namespace rnncoref
