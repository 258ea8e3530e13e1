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

// Raw indicator features. The anaphoricity space (phi_a) describes a single
// mention; the pairwise space (phi_p) describes a mention and one candidate
// antecedent. Every template is listed in docs/features.md.

#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rnncoref/corpus.hpp"

namespace rnncoref {

struct FeatureEntry {
  int index = 0;
  double value = 1.0;
  bool operator==(const FeatureEntry &) const = default;
};

// Sparse (index, value) list with strictly increasing indices.
class SparseFeatures {
 public:
  SparseFeatures() = default;

  // Sorts; throws on duplicate indices or non-finite values.
  static SparseFeatures from_entries(std::vector<FeatureEntry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const FeatureEntry &a, const FeatureEntry &b) { return a.index < b.index; });
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (!std::isfinite(entries[i].value)) {
        throw std::invalid_argument("non-finite feature value");
      }
      if (i > 0 && entries[i].index == entries[i - 1].index) {
        throw std::invalid_argument("duplicate feature index " +
                                    std::to_string(entries[i].index));
      }
    }
    SparseFeatures f;
    f.entries_ = std::move(entries);
    return f;
  }

  const std::vector<FeatureEntry> &entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool contains(int index) const {
    return std::binary_search(entries_.begin(), entries_.end(), FeatureEntry{index, 0.0},
                              [](const FeatureEntry &a, const FeatureEntry &b) {
                                return a.index < b.index;
                              });
  }

  bool valid() const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!std::isfinite(entries_[i].value)) return false;
      if (i > 0 && entries_[i].index <= entries_[i - 1].index) return false;
    }
    return true;
  }

  bool operator==(const SparseFeatures &) const = default;

 private:
  std::vector<FeatureEntry> entries_;
};

enum class FeatureSpace { kAnaphoricity, kPairwise };

// template:value -> dense index, one map per space. Built, then frozen.
class FeatureVocabulary {
 public:
  std::optional<int> lookup(FeatureSpace space, const std::string &key) const {
    const auto &m = map(space);
    auto it = m.find(key);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

  // Adds a key if unfrozen; returns its index or nullopt when frozen and
  // unseen.
  std::optional<int> intern(FeatureSpace space, const std::string &key) {
    auto &m = map(space);
    auto it = m.find(key);
    if (it != m.end()) return it->second;
    if (frozen_) return std::nullopt;
    const int idx = static_cast<int>(m.size());
    m.emplace(key, idx);
    return idx;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  int anaphoricity_size() const { return static_cast<int>(anaphoricity_.size()); }
  int pairwise_size() const { return static_cast<int>(pairwise_.size()); }

  // The real-valued document-position entry used by h_c sits in the slot
  // right after the last anaphoricity index.
  int position_index() const { return anaphoricity_size(); }
  int cluster_input_size() const { return anaphoricity_size() + 1; }

  // Sorted "template:value<TAB>index" lines, one section per space.
  void dump(std::ostream &out) const {
    out << "[anaphoricity]\n";
    dump_space(out, anaphoricity_);
    out << "[pairwise]\n";
    dump_space(out, pairwise_);
  }

  static FeatureVocabulary parse(std::istream &in) {
    FeatureVocabulary v;
    std::map<std::string, int> *target = nullptr;
    std::string line;
    while (std::getline(in, line)) {
      if (line == "[anaphoricity]") {
        target = &v.anaphoricity_;
      } else if (line == "[pairwise]") {
        target = &v.pairwise_;
      } else if (!line.empty()) {
        const auto tab = line.rfind('\t');
        if (target == nullptr || tab == std::string::npos) {
          throw std::runtime_error("malformed vocabulary line: " + line);
        }
        target->emplace(line.substr(0, tab), std::stoi(line.substr(tab + 1)));
      }
    }
    for (const auto *m : {&v.anaphoricity_, &v.pairwise_}) {
      std::vector<bool> seen(m->size(), false);
      for (const auto &[key, idx] : *m) {
        if (idx < 0 || idx >= static_cast<int>(m->size()) || seen[idx]) {
          throw std::runtime_error("vocabulary indices are not contiguous");
        }
        seen[idx] = true;
      }
    }
    v.frozen_ = true;
    return v;
  }

  bool operator==(const FeatureVocabulary &) const = default;

 private:
  const std::map<std::string, int> &map(FeatureSpace s) const {
    return s == FeatureSpace::kAnaphoricity ? anaphoricity_ : pairwise_;
  }
  std::map<std::string, int> &map(FeatureSpace s) {
    return s == FeatureSpace::kAnaphoricity ? anaphoricity_ : pairwise_;
  }

  static void dump_space(std::ostream &out, const std::map<std::string, int> &m) {
    std::vector<std::pair<int, const std::string *>> rows;
    for (const auto &[key, idx] : m) rows.emplace_back(idx, &key);
    std::sort(rows.begin(), rows.end());
    for (const auto &[idx, key] : rows) out << *key << '\t' << idx << '\n';
  }

  std::map<std::string, int> anaphoricity_;
  std::map<std::string, int> pairwise_;
  bool frozen_ = false;
};

// --- Templates -------------------------------------------------------------

namespace features_detail {

inline std::string clean(std::string_view s) {
  std::string out(s);
  for (char &c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = '_';
  }
  return out;
}

inline std::string_view length_bucket(int len) {
  if (len <= 4) {
    static constexpr std::string_view kSmall[] = {"1", "1", "2", "3", "4"};
    return kSmall[std::max(len, 1)];
  }
  return len <= 7 ? "5-7" : "8+";
}

inline std::string_view mention_distance_bucket(int d) {
  switch (d) {
    case 1: return "1";
    case 2: return "2";
    case 3: return "3";
    case 4: return "4";
  }
  if (d <= 8) return "5-8";
  return d <= 16 ? "9-16" : "17+";
}

inline std::string_view sentence_distance_bucket(int d) {
  switch (d) {
    case 0: return "0";
    case 1: return "1";
    case 2: return "2";
    case 3: return "3";
  }
  return "4+";
}

inline bool speaker_present(std::string_view speaker) {
  return !speaker.empty() && speaker != "-";
}

// Case-insensitive substring overlap between a mention and a speaker name:
// the head is inside the speaker string, or the speaker string is inside the
// mention text.
inline bool overlaps_speaker(const Document &doc, int n, std::string_view speaker) {
  if (!speaker_present(speaker)) return false;
  const std::string spk = to_lower(speaker);
  const std::string head = to_lower(doc.mention(n).head_str);
  const std::string text = to_lower(doc.mention_text(n));
  if (!head.empty() && spk.find(head) != std::string::npos) return true;
  return text.find(spk) != std::string::npos;
}

template <typename Attr>
inline std::string_view agreement(Attr a, Attr b, Attr unknown) {
  if (a == unknown || b == unknown) return "unknown";
  return a == b ? "agree" : "disagree";
}

}  // namespace features_detail

// What a pairwise template looks at. A template may read the antecedent
// alone, the current mention alone, the relation between the two, or the
// document; it never conjoins an antecedent attribute with a current-mention
// attribute.
enum class TemplateRole { kRelation, kAntecedent, kCurrent, kDocument };

struct PairwiseTemplate {
  std::string_view name;
  TemplateRole role;
};

inline constexpr PairwiseTemplate kPairwiseTemplates[] = {
    {"mdist", TemplateRole::kRelation},   {"sdist", TemplateRole::kRelation},
    {"strmatch", TemplateRole::kRelation}, {"headmatch", TemplateRole::kRelation},
    {"spkmatch", TemplateRole::kRelation}, {"gagree", TemplateRole::kRelation},
    {"nagree", TemplateRole::kRelation},  {"anttype", TemplateRole::kAntecedent},
    {"curtype", TemplateRole::kCurrent},  {"genre", TemplateRole::kDocument},
    {"antspk", TemplateRole::kAntecedent}, {"nested", TemplateRole::kRelation},
};

inline constexpr std::string_view kAnaphoricityTemplates[] = {
    "head", "type", "gender", "number", "len", "headpos",
    "docpos", "genre", "speaker", "spkoverlap", "pos"};

// Keys ("template:value") instantiated for phi_a(x_n).
inline std::vector<std::string> anaphoricity_keys(const Document &doc, int n) {
  using namespace features_detail;
  const Mention &m = doc.mention(n);
  const int sent_len = static_cast<int>(doc.sentences.at(m.sentence).size());
  const int big_n = doc.size();
  std::vector<std::string> keys;
  keys.push_back("head:" + clean(m.head_str));
  keys.push_back("type:" + std::string(to_string(m.type)));
  keys.push_back("gender:" + std::string(to_string(m.gender)));
  keys.push_back("number:" + std::string(to_string(m.number)));
  keys.push_back("len:" + std::string(length_bucket(m.length())));
  std::string_view headpos = "other";
  if (sent_len == 1) {
    headpos = "only";
  } else if (m.head == 0) {
    headpos = "first";
  } else if (m.head == sent_len - 1) {
    headpos = "last";
  }
  keys.push_back("headpos:" + std::string(headpos));
  const int decile = std::min(9, (10 * (n - 1)) / std::max(big_n, 1));
  keys.push_back("docpos:" + std::to_string(decile));
  keys.push_back("genre:" + clean(doc.genre));
  const std::string &speaker = doc.speaker_of(n);
  if (speaker_present(speaker)) keys.push_back("speaker:present");
  if (overlaps_speaker(doc, n, speaker)) keys.push_back("spkoverlap:1");
  keys.push_back("pos:" + std::string(to_string(m.type)) +
                 (m.length() == 1 ? "_len1" : "_lenN"));
  return keys;
}

// Keys instantiated for phi_p(x_n, y). Requires 1 <= y < n.
inline std::vector<std::string> pairwise_keys(const Document &doc, int n, int y) {
  using namespace features_detail;
  if (y < 1 || y >= n) {
    throw std::invalid_argument("pairwise features need an antecedent 1 <= y < n (n=" +
                                std::to_string(n) + ", y=" + std::to_string(y) + ")");
  }
  const Mention &cur = doc.mention(n);
  const Mention &ant = doc.mention(y);
  std::vector<std::string> keys;
  keys.push_back("mdist:" + std::string(mention_distance_bucket(n - y)));
  keys.push_back("sdist:" + std::string(sentence_distance_bucket(cur.sentence - ant.sentence)));
  if (to_lower(doc.mention_text(n)) == to_lower(doc.mention_text(y))) {
    keys.push_back("strmatch:1");
  }
  if (to_lower(cur.head_str) == to_lower(ant.head_str)) keys.push_back("headmatch:1");
  const std::string &cur_spk = doc.speaker_of(n);
  if (speaker_present(cur_spk) && cur_spk == doc.speaker_of(y)) {
    keys.push_back("spkmatch:1");
  }
  keys.push_back("gagree:" + std::string(agreement(cur.gender, ant.gender, Gender::kUnknown)));
  keys.push_back("nagree:" + std::string(agreement(cur.number, ant.number, Number::kUnknown)));
  keys.push_back("anttype:" + std::string(to_string(ant.type)));
  keys.push_back("curtype:" + std::string(to_string(cur.type)));
  keys.push_back("genre:" + clean(doc.genre));
  std::set<std::string> other_speakers;
  for (const std::string &s : doc.speakers) {
    if (speaker_present(s) && s != cur_spk) other_speakers.insert(s);
  }
  for (const std::string &s : other_speakers) {
    if (overlaps_speaker(doc, y, s)) {
      keys.push_back("antspk:1");
      break;
    }
  }
  if (cur.sentence == ant.sentence &&
      ((ant.start <= cur.start && cur.end <= ant.end) ||
       (cur.start <= ant.start && ant.end <= cur.end))) {
    keys.push_back("nested:1");
  }
  return keys;
}

// (2n - N - 1) / (N - 1), and 0 for a single-mention document.
inline double position_value(int n, int big_n) {
  if (n < 1 || n > big_n) throw std::out_of_range("position_value: n outside 1..N");
  if (big_n == 1) return 0.0;
  return static_cast<double>(2 * n - big_n - 1) / static_cast<double>(big_n - 1);
}

struct VocabularyOptions {
  // Keys seen fewer times than this are left out. 1 keeps everything.
  int min_count = 1;
};

// Interns every key instantiated on the corpus (sorted, so indices are
// reproducible), then freezes.
inline FeatureVocabulary build_vocabulary(const std::vector<Document> &docs,
                                          VocabularyOptions opts = {}) {
  std::map<std::string, int> a_counts, p_counts;
  for (const Document &doc : docs) {
    for (int n = 1; n <= doc.size(); ++n) {
      for (auto &k : anaphoricity_keys(doc, n)) ++a_counts[k];
      for (int y = 1; y < n; ++y) {
        for (auto &k : pairwise_keys(doc, n, y)) ++p_counts[k];
      }
    }
  }
  FeatureVocabulary vocab;
  for (const auto &[k, c] : a_counts) {
    if (c >= opts.min_count) vocab.intern(FeatureSpace::kAnaphoricity, k);
  }
  for (const auto &[k, c] : p_counts) {
    if (c >= opts.min_count) vocab.intern(FeatureSpace::kPairwise, k);
  }
  vocab.freeze();
  return vocab;
}

namespace features_detail {

inline SparseFeatures lookup_all(const FeatureVocabulary &vocab, FeatureSpace space,
                                 const std::vector<std::string> &keys) {
  std::vector<FeatureEntry> entries;
  entries.reserve(keys.size());
  for (const auto &k : keys) {
    if (auto idx = vocab.lookup(space, k)) entries.push_back({*idx, 1.0});
  }
  return SparseFeatures::from_entries(std::move(entries));
}

}  // namespace features_detail

// phi_a(x_n). Keys missing from the vocabulary are dropped.
inline SparseFeatures extract_anaphoricity(const Document &doc, int n,
                                           const FeatureVocabulary &vocab) {
  return features_detail::lookup_all(vocab, FeatureSpace::kAnaphoricity,
                                     anaphoricity_keys(doc, n));
}

// phi_p(x_n, y).
inline SparseFeatures extract_pairwise(const Document &doc, int n, int y,
                                       const FeatureVocabulary &vocab) {
  return features_detail::lookup_all(vocab, FeatureSpace::kPairwise,
                                     pairwise_keys(doc, n, y));
}

// phi_a(x_n) plus the rescaled document position at position_index().
inline SparseFeatures cluster_input_features(const Document &doc, int n,
                                             const FeatureVocabulary &vocab) {
  std::vector<FeatureEntry> entries = extract_anaphoricity(doc, n, vocab).entries();
  entries.push_back({vocab.position_index(), position_value(n, doc.size())});
  return SparseFeatures::from_entries(std::move(entries));
}

// All features of one document, extracted once.
struct DocumentFeatures {
  std::vector<SparseFeatures> anaphoricity;              // [n-1]
  std::vector<SparseFeatures> cluster_input;             // [n-1]
  std::vector<std::vector<SparseFeatures>> pairwise;     // [n-1][y-1]

  static DocumentFeatures extract(const Document &doc, const FeatureVocabulary &vocab) {
    DocumentFeatures f;
    const int big_n = doc.size();
    f.anaphoricity.reserve(big_n);
    f.cluster_input.reserve(big_n);
    f.pairwise.resize(big_n);
    for (int n = 1; n <= big_n; ++n) {
      f.anaphoricity.push_back(extract_anaphoricity(doc, n, vocab));
      std::vector<FeatureEntry> entries = f.anaphoricity.back().entries();
      entries.push_back({vocab.position_index(), position_value(n, big_n)});
      f.cluster_input.push_back(SparseFeatures::from_entries(std::move(entries)));
      f.pairwise[n - 1].reserve(n - 1);
      for (int y = 1; y < n; ++y) f.pairwise[n - 1].push_back(extract_pairwise(doc, n, y, vocab));
    }
    return f;
  }

  int size() const { return static_cast<int>(anaphoricity.size()); }
  const SparseFeatures &phi_a(int n) const { return anaphoricity.at(n - 1); }
  const SparseFeatures &phi_c(int n) const { return cluster_input.at(n - 1); }
  const SparseFeatures &phi_p(int n, int y) const { return pairwise.at(n - 1).at(y - 1); }
};

}  // namespace rnncoref
