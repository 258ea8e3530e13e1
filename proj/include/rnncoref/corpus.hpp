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

// Documents, mentions and clusterings. Mentions are inputs: this module
// never detects them, it only loads, orders and validates them.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace rnncoref {

enum class MentionType { kProper, kNominal, kPronominal };
enum class Number { kSingular, kPlural, kUnknown };
enum class Gender { kMale, kFemale, kNeuter, kUnknown };

inline constexpr std::string_view kGenres[] = {"bc", "bn", "mz", "nw",
                                               "pt", "tc", "wb"};

inline std::string_view to_string(MentionType t) {
  switch (t) {
    case MentionType::kProper: return "proper";
    case MentionType::kNominal: return "nominal";
    case MentionType::kPronominal: return "pronominal";
  }
  return "?";
}

inline std::string_view to_string(Number n) {
  switch (n) {
    case Number::kSingular: return "singular";
    case Number::kPlural: return "plural";
    case Number::kUnknown: return "unknown";
  }
  return "?";
}

inline std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::kMale: return "male";
    case Gender::kFemale: return "female";
    case Gender::kNeuter: return "neuter";
    case Gender::kUnknown: return "unknown";
  }
  return "?";
}

inline std::optional<MentionType> parse_mention_type(std::string_view s) {
  if (s == "proper") return MentionType::kProper;
  if (s == "nominal") return MentionType::kNominal;
  if (s == "pronominal") return MentionType::kPronominal;
  return std::nullopt;
}

inline std::optional<Number> parse_number(std::string_view s) {
  if (s == "singular") return Number::kSingular;
  if (s == "plural") return Number::kPlural;
  if (s == "unknown") return Number::kUnknown;
  return std::nullopt;
}

inline std::optional<Gender> parse_gender(std::string_view s) {
  if (s == "male") return Gender::kMale;
  if (s == "female") return Gender::kFemale;
  if (s == "neuter") return Gender::kNeuter;
  if (s == "unknown") return Gender::kUnknown;
  return std::nullopt;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char &c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

// A mention x_n. Offsets are token offsets inside the mention's sentence;
// `end` is inclusive.
struct Mention {
  int index = 0;  // 1-based rank in the document ordering
  int sentence = 0;
  int start = 0;
  int end = 0;
  int head = 0;
  MentionType type = MentionType::kNominal;
  Number number = Number::kUnknown;
  Gender gender = Gender::kUnknown;
  std::string head_str;
  std::optional<long> gold_cluster;

  int length() const { return end - start + 1; }
  bool operator==(const Mention &) const = default;
};

struct Document {
  std::string id;
  std::string genre;
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> speakers;
  std::vector<Mention> mentions;

  int size() const { return static_cast<int>(mentions.size()); }

  // 1-based access.
  const Mention &mention(int n) const { return mentions.at(n - 1); }

  // Offset of the first token of sentence `s` in the whole document.
  int sentence_offset(int s) const {
    int offset = 0;
    for (int i = 0; i < s; ++i) offset += static_cast<int>(sentences[i].size());
    return offset;
  }

  int head_position(int n) const {
    const Mention &m = mention(n);
    return sentence_offset(m.sentence) + m.head;
  }

  // Space-joined surface string of mention n.
  std::string mention_text(int n) const {
    const Mention &m = mention(n);
    const auto &tokens = sentences.at(m.sentence);
    std::string out;
    for (int i = m.start; i <= m.end; ++i) {
      if (i > m.start) out += ' ';
      out += tokens.at(i);
    }
    return out;
  }

  const std::string &speaker_of(int n) const {
    return speakers.at(mention(n).sentence);
  }

  bool has_gold() const {
    return std::any_of(mentions.begin(), mentions.end(),
                       [](const Mention &m) { return m.gold_cluster.has_value(); });
  }

  bool operator==(const Document &) const = default;
};

// The mention-to-cluster map z together with the induced cluster lists
// X^(m). Always canonical: cluster ids are 1..M numbered by first mention.
class Clustering {
 public:
  Clustering() = default;

  // Renumbers arbitrary labels by first appearance.
  template <typename Label>
  static Clustering from_labels(const std::vector<Label> &labels) {
    std::map<Label, int> ids;
    std::vector<int> z;
    z.reserve(labels.size());
    for (const Label &l : labels) {
      auto [it, inserted] = ids.emplace(l, static_cast<int>(ids.size()) + 1);
      z.push_back(it->second);
    }
    return Clustering(std::move(z));
  }

  // Builds from cluster lists over mentions 1..n. Throws if the lists do
  // not partition 1..n.
  static Clustering from_clusters(const std::vector<std::vector<int>> &clusters,
                                  int n) {
    std::vector<int> label(static_cast<std::size_t>(n), 0);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      for (int m : clusters[c]) {
        if (m < 1 || m > n || label[m - 1] != 0) {
          throw std::invalid_argument("cluster lists do not partition mentions");
        }
        label[m - 1] = static_cast<int>(c) + 1;
      }
    }
    if (std::find(label.begin(), label.end(), 0) != label.end()) {
      throw std::invalid_argument("cluster lists do not cover every mention");
    }
    return from_labels(label);
  }

  int num_mentions() const { return static_cast<int>(z_.size()); }
  int num_clusters() const { return static_cast<int>(clusters_.size()); }

  // 1-based mention, 1-based cluster id.
  int cluster_of(int n) const { return z_.at(n - 1); }
  const std::vector<int> &assignment() const { return z_; }
  const std::vector<int> &cluster(int m) const { return clusters_.at(m - 1); }
  const std::vector<std::vector<int>> &clusters() const { return clusters_; }

  bool coreferent(int a, int b) const { return cluster_of(a) == cluster_of(b); }

  // True iff some earlier mention shares n's cluster.
  bool anaphoric(int n) const { return cluster(cluster_of(n)).front() < n; }

  bool operator==(const Clustering &o) const { return z_ == o.z_; }

 private:
  explicit Clustering(std::vector<int> z) : z_(std::move(z)) {
    int m = 0;
    for (int id : z_) m = std::max(m, id);
    clusters_.assign(static_cast<std::size_t>(m), {});
    for (std::size_t i = 0; i < z_.size(); ++i) {
      clusters_[z_[i] - 1].push_back(static_cast<int>(i) + 1);
    }
  }

  std::vector<int> z_;
  std::vector<std::vector<int>> clusters_;
};

// Violations of the canonical-clustering invariants for a raw z vector.
inline std::vector<std::string> validate_assignment(const std::vector<int> &z) {
  std::vector<std::string> out;
  int next = 1;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] < 1) {
      out.push_back("mention " + std::to_string(i + 1) + ": cluster id < 1");
    } else if (z[i] > next) {
      out.push_back("mention " + std::to_string(i + 1) + ": cluster id " +
                    std::to_string(z[i]) + " skips " + std::to_string(next));
    } else if (z[i] == next) {
      ++next;
    }
  }
  return out;
}

struct ValidateOptions {
  // Also require gold ids to already be 1..M in first-mention order.
  bool canonical_cluster_ids = false;
};

inline std::vector<std::string> validate_document(const Document &doc,
                                                  ValidateOptions opts = {}) {
  std::vector<std::string> out;
  auto where = [&](std::size_t i) {
    return "document " + doc.id + ", mention " + std::to_string(i + 1) + ": ";
  };
  const bool genre_ok = std::find(std::begin(kGenres), std::end(kGenres),
                                  doc.genre) != std::end(kGenres);
  if (!genre_ok) out.push_back("document " + doc.id + ": unknown genre '" + doc.genre + "'");
  if (doc.speakers.size() != doc.sentences.size()) {
    out.push_back("document " + doc.id + ": " + std::to_string(doc.speakers.size()) +
                  " speakers for " + std::to_string(doc.sentences.size()) + " sentences");
  }
  bool spans_ok = true;
  for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
    const Mention &m = doc.mentions[i];
    if (m.index != static_cast<int>(i) + 1) {
      out.push_back(where(i) + "index " + std::to_string(m.index) + " != rank");
    }
    if (m.sentence < 0 || m.sentence >= static_cast<int>(doc.sentences.size())) {
      out.push_back(where(i) + "sentence out of range");
      spans_ok = false;
      continue;
    }
    const int len = static_cast<int>(doc.sentences[m.sentence].size());
    if (m.start < 0 || m.end < m.start || m.end >= len) {
      out.push_back(where(i) + "span [" + std::to_string(m.start) + "," +
                    std::to_string(m.end) + "] outside sentence of length " +
                    std::to_string(len));
      spans_ok = false;
    } else if (m.head < m.start || m.head > m.end) {
      out.push_back(where(i) + "head outside span");
      spans_ok = false;
    }
  }
  if (spans_ok) {
    for (std::size_t i = 1; i < doc.mentions.size(); ++i) {
      const Mention &a = doc.mentions[i - 1];
      const Mention &b = doc.mentions[i];
      auto key = [&](const Mention &m) {
        return std::tuple(doc.sentence_offset(m.sentence) + m.head,
                          m.start, m.end);
      };
      if (!(key(a) < key(b))) {
        out.push_back(where(i) + "not ordered after previous mention by head, then span");
      }
    }
  }
  if (opts.canonical_cluster_ids) {
    // Unlabeled mentions are singletons and do not consume ids.
    std::vector<int> labeled;
    for (const Mention &m : doc.mentions) {
      if (m.gold_cluster) labeled.push_back(static_cast<int>(*m.gold_cluster));
    }
    for (auto &v : validate_assignment(labeled)) {
      out.push_back("document " + doc.id + ": gold " + v);
    }
  }
  return out;
}

// Sorts mentions into canonical order and assigns 1-based indices.
inline void normalize_mention_order(Document &doc) {
  std::vector<int> offsets(doc.sentences.size() + 1, 0);
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    offsets[s + 1] = offsets[s] + static_cast<int>(doc.sentences[s].size());
  }
  auto key = [&](const Mention &m) {
    const int base = (m.sentence >= 0 && m.sentence < static_cast<int>(doc.sentences.size()))
                         ? offsets[m.sentence]
                         : 0;
    return std::tuple(base + m.head, m.start, m.end);
  };
  std::stable_sort(doc.mentions.begin(), doc.mentions.end(),
                   [&](const Mention &a, const Mention &b) { return key(a) < key(b); });
  for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
    doc.mentions[i].index = static_cast<int>(i) + 1;
  }
}

// z^(o): mentions sharing a gold id are co-clustered, unlabeled mentions are
// singletons, ids renumbered by first mention.
inline Clustering oracle_clustering(const Document &doc) {
  std::vector<std::pair<int, long>> labels;
  labels.reserve(doc.mentions.size());
  for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
    const auto &g = doc.mentions[i].gold_cluster;
    labels.emplace_back(g ? 0 : 1, g ? *g : static_cast<long>(i));
  }
  return Clustering::from_labels(labels);
}

enum class MentionCategory { kNomHM, kNomNoHM, kPron };

inline std::string_view to_string(MentionCategory c) {
  switch (c) {
    case MentionCategory::kNomHM: return "Nom. HM";
    case MentionCategory::kNomNoHM: return "Nom. No HM";
    case MentionCategory::kPron: return "Pron.";
  }
  return "?";
}

inline MentionCategory mention_category(const Document &doc, int n) {
  const Mention &m = doc.mention(n);
  if (m.type == MentionType::kPronominal) return MentionCategory::kPron;
  const std::string head = to_lower(m.head_str);
  for (int k = 1; k < n; ++k) {
    if (to_lower(doc.mention(k).head_str) == head) return MentionCategory::kNomHM;
  }
  return MentionCategory::kNomNoHM;
}

// --- Document line format ---------------------------------------------------

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string &what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::json document_to_json(const Document &doc) {
  nlohmann::json mentions = nlohmann::json::array();
  for (const Mention &m : doc.mentions) {
    nlohmann::json j = {{"sent", m.sentence},
                        {"start", m.start},
                        {"end", m.end},
                        {"head", m.head},
                        {"type", to_string(m.type)},
                        {"number", to_string(m.number)},
                        {"gender", to_string(m.gender)},
                        {"head_str", m.head_str}};
    if (m.gold_cluster) j["cluster"] = *m.gold_cluster;
    mentions.push_back(std::move(j));
  }
  return {{"id", doc.id},
          {"genre", doc.genre},
          {"sentences", doc.sentences},
          {"speakers", doc.speakers},
          {"mentions", std::move(mentions)}};
}

inline Document document_from_json(const nlohmann::json &j) {
  Document doc;
  doc.id = j.at("id").get<std::string>();
  doc.genre = j.at("genre").get<std::string>();
  doc.sentences = j.at("sentences").get<std::vector<std::vector<std::string>>>();
  doc.speakers = j.at("speakers").get<std::vector<std::string>>();
  for (const auto &jm : j.at("mentions")) {
    Mention m;
    m.sentence = jm.at("sent").get<int>();
    m.start = jm.at("start").get<int>();
    m.end = jm.at("end").get<int>();
    m.head = jm.at("head").get<int>();
    const auto type = parse_mention_type(jm.at("type").get<std::string>());
    const auto number = parse_number(jm.at("number").get<std::string>());
    const auto gender = parse_gender(jm.at("gender").get<std::string>());
    if (!type) throw std::invalid_argument("bad mention type");
    if (!number) throw std::invalid_argument("bad number");
    if (!gender) throw std::invalid_argument("bad gender");
    m.type = *type;
    m.number = *number;
    m.gender = *gender;
    m.head_str = jm.at("head_str").get<std::string>();
    if (jm.contains("cluster") && !jm.at("cluster").is_null()) {
      m.gold_cluster = jm.at("cluster").get<long>();
    }
    doc.mentions.push_back(std::move(m));
  }
  return doc;
}

// One JSON object per line. Blank lines are skipped.
inline std::vector<Document> read_documents(std::istream &in) {
  std::vector<Document> docs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Document doc;
    try {
      doc = document_from_json(nlohmann::json::parse(line));
    } catch (const std::exception &e) {
      throw ParseError(lineno, e.what());
    }
    normalize_mention_order(doc);
    const auto violations = validate_document(doc);
    if (!violations.empty()) throw ValidationError(violations.front());
    docs.push_back(std::move(doc));
  }
  return docs;
}

inline std::vector<Document> load_documents(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_documents(in);
}

inline void write_documents(std::ostream &out, const std::vector<Document> &docs) {
  for (const Document &d : docs) out << document_to_json(d).dump() << '\n';
}

inline void save_documents(const std::string &path, const std::vector<Document> &docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_documents(out, docs);
}

}  // namespace rnncoref
