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

#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace rnncoref {
namespace {

using testing::make_document;
using testing::toy_document;
using MT = MentionType;
using Keys = std::set<std::string>;

Keys as_set(const std::vector<std::string> &v) { return Keys(v.begin(), v.end()); }

Document john_saw_him() {
  return make_document("d", "nw", {{"John", "saw", "him"}}, {"-"},
                       {{0, 0, 0, 0, MT::kProper, Number::kSingular, Gender::kMale, 1},
                        {0, 2, 2, 2, MT::kPronominal, Number::kSingular, Gender::kMale, 1}});
}

TEST(Features, EmptyCorpusGivesEmptyVocabulary) {
  const FeatureVocabulary v = build_vocabulary({});
  EXPECT_EQ(v.anaphoricity_size(), 0);
  EXPECT_EQ(v.pairwise_size(), 0);
  EXPECT_TRUE(v.frozen());
}

TEST(Features, TwoMentionVocabularyMatchesHandEnumeration) {
  // Worked out by hand from the template list.
  const Keys anaphoricity = {
      "head:John", "type:proper",     "gender:male", "number:singular", "len:1",
      "headpos:first", "docpos:0",    "genre:nw",    "pos:proper_len1",
      "head:him",  "type:pronominal", "headpos:last", "docpos:5",       "pos:pronominal_len1"};
  const Keys pairwise = {"mdist:1",     "sdist:0",         "gagree:agree", "nagree:agree",
                         "anttype:proper", "curtype:pronominal", "genre:nw"};
  const FeatureVocabulary v = build_vocabulary({john_saw_him()});
  EXPECT_EQ(v.anaphoricity_size(), static_cast<int>(anaphoricity.size()));
  EXPECT_EQ(v.pairwise_size(), static_cast<int>(pairwise.size()));
  for (const auto &k : anaphoricity) EXPECT_TRUE(v.lookup(FeatureSpace::kAnaphoricity, k)) << k;
  for (const auto &k : pairwise) EXPECT_TRUE(v.lookup(FeatureSpace::kPairwise, k)) << k;
}

TEST(Features, RebuildIsDeterministic) {
  const std::vector<Document> docs = {toy_document(), john_saw_him()};
  EXPECT_EQ(build_vocabulary(docs), build_vocabulary(docs));
}

TEST(Features, FrozenVocabularyNeverGrows) {
  FeatureVocabulary v = build_vocabulary({john_saw_him()});
  const int before = v.anaphoricity_size();
  EXPECT_FALSE(v.intern(FeatureSpace::kAnaphoricity, "head:unseen"));
  EXPECT_FALSE(v.lookup(FeatureSpace::kAnaphoricity, "head:unseen"));
  EXPECT_EQ(v.anaphoricity_size(), before);
}

TEST(Features, MinCountPrunes) {
  VocabularyOptions o;
  o.min_count = 2;
  const FeatureVocabulary v = build_vocabulary({john_saw_him()}, o);
  EXPECT_TRUE(v.lookup(FeatureSpace::kAnaphoricity, "genre:nw"));
  EXPECT_FALSE(v.lookup(FeatureSpace::kAnaphoricity, "head:John"));
}

TEST(Features, VocabularyDumpParsesBack) {
  const FeatureVocabulary v = build_vocabulary({toy_document(), john_saw_him()});
  std::stringstream s;
  v.dump(s);
  EXPECT_EQ(FeatureVocabulary::parse(s), v);
  std::istringstream bad("[anaphoricity]\na\t0\nb\t2\n");
  EXPECT_THROW(FeatureVocabulary::parse(bad), std::runtime_error);
}

TEST(Features, AnaphoricityOfFirstPersonPronoun) {
  // "I" spoken by Linda in a broadcast conversation. The head "I" is a
  // substring of "Linda" (case-insensitively), so the overlap indicator fires.
  const Document d = toy_document();
  EXPECT_EQ(as_set(anaphoricity_keys(d, 1)),
            (Keys{"head:I", "type:pronominal", "gender:unknown", "number:singular", "len:1",
                  "headpos:first", "docpos:0", "genre:bc", "speaker:present", "spkoverlap:1",
                  "pos:pronominal_len1"}));
  const FeatureVocabulary v = build_vocabulary({d});
  const SparseFeatures f = extract_anaphoricity(d, 1, v);
  EXPECT_EQ(f.size(), 11u);
  for (const FeatureEntry &e : f) EXPECT_EQ(e.value, 1.0);
}

TEST(Features, HeadInsideSpeakerNameSetsOverlap) {
  const Document d = make_document(
      "d", "bc", {{"Smith", "spoke"}}, {"John Smith"},
      {{0, 0, 0, 0, MT::kProper, Number::kSingular, Gender::kMale, std::nullopt}});
  EXPECT_TRUE(as_set(anaphoricity_keys(d, 1)).count("spkoverlap:1"));
}

TEST(Features, UnseenHeadDroppedOthersKept) {
  const Document d = toy_document();
  FeatureVocabulary v;
  for (const auto &k : anaphoricity_keys(d, 1)) {
    if (k != "head:I") v.intern(FeatureSpace::kAnaphoricity, k);
  }
  v.freeze();
  const SparseFeatures f = extract_anaphoricity(d, 1, v);
  EXPECT_EQ(f.size(), anaphoricity_keys(d, 1).size() - 1);
}

TEST(Features, PairwiseYouAfterYou) {
  const Document d = make_document(
      "d", "bc", {{"did", "you", "go", "?"}, {"you", "said", "so"}}, {"Ann", "Ann"},
      {{0, 1, 1, 1, MT::kPronominal, Number::kUnknown, Gender::kUnknown, 1},
       {1, 0, 0, 0, MT::kPronominal, Number::kUnknown, Gender::kUnknown, 1}});
  EXPECT_EQ(as_set(pairwise_keys(d, 2, 1)),
            (Keys{"mdist:1", "sdist:1", "strmatch:1", "headmatch:1", "spkmatch:1",
                  "gagree:unknown", "nagree:unknown", "anttype:pronominal",
                  "curtype:pronominal", "genre:bc"}));
}

TEST(Features, PairwiseNeedsRealAntecedent) {
  const Document d = john_saw_him();
  EXPECT_THROW(pairwise_keys(d, 2, 0), std::invalid_argument);
  EXPECT_THROW(pairwise_keys(d, 2, 2), std::invalid_argument);
}

TEST(Features, AdjacentDisjointMentionsOnlyDistanceMatch) {
  const Document d = make_document(
      "d", "nw", {{"rain", "and", "snow"}}, {"-"},
      {{0, 0, 0, 0, MT::kNominal, Number::kUnknown, Gender::kUnknown, std::nullopt},
       {0, 2, 2, 2, MT::kNominal, Number::kUnknown, Gender::kUnknown, std::nullopt}});
  const Keys k = as_set(pairwise_keys(d, 2, 1));
  EXPECT_TRUE(k.count("mdist:1") && k.count("sdist:0"));
  for (const char *absent : {"strmatch:1", "headmatch:1", "spkmatch:1", "nested:1"}) {
    EXPECT_FALSE(k.count(absent)) << absent;
  }
}

TEST(Features, AntecedentOverlappingOtherSpeaker) {
  // "Linda" is said by Host; Linda herself speaks elsewhere in the document.
  const Document d = toy_document();
  EXPECT_TRUE(as_set(pairwise_keys(d, 4, 3)).count("antspk:1"));
}

TEST(Features, NestedSpans) {
  const Document d = make_document(
      "d", "nw", {{"the", "dog", "'s", "owner"}}, {"-"},
      {{0, 0, 3, 3, MT::kNominal, Number::kSingular, Gender::kUnknown, std::nullopt},
       {0, 0, 1, 1, MT::kNominal, Number::kSingular, Gender::kNeuter, std::nullopt}});
  // Ordered by head: "the dog" (head 1) before "the dog 's owner" (head 3).
  EXPECT_TRUE(as_set(pairwise_keys(d, 2, 1)).count("nested:1"));
}

TEST(Features, NoConjoinedTemplates) {
  // Every emitted pairwise key comes from a declared template, and no
  // template mixes an antecedent attribute with a current-mention one.
  std::set<std::string> names;
  for (const PairwiseTemplate &t : kPairwiseTemplates) names.insert(std::string(t.name));
  SyntheticOptions o;
  o.documents = 5;
  std::vector<Document> docs = generate_synthetic(o);
  docs.push_back(toy_document());
  for (const Document &d : docs) {
    for (int n = 2; n <= d.size(); ++n) {
      for (int y = 1; y < n; ++y) {
        for (const std::string &k : pairwise_keys(d, n, y)) {
          const std::string name = k.substr(0, k.find(':'));
          EXPECT_TRUE(names.count(name)) << k;
          EXPECT_EQ(k.find('&'), std::string::npos) << k;
        }
      }
    }
  }
  for (const PairwiseTemplate &t : kPairwiseTemplates) {
    EXPECT_TRUE(t.role == TemplateRole::kRelation || t.role == TemplateRole::kAntecedent ||
                t.role == TemplateRole::kCurrent || t.role == TemplateRole::kDocument);
  }
}

TEST(Features, ExtractionIsPure) {
  const Document d = toy_document();
  const FeatureVocabulary v = build_vocabulary({d});
  for (int n = 1; n <= d.size(); ++n) {
    EXPECT_EQ(extract_anaphoricity(d, n, v), extract_anaphoricity(d, n, v));
    for (int y = 1; y < n; ++y) EXPECT_EQ(extract_pairwise(d, n, y, v), extract_pairwise(d, n, y, v));
  }
}

TEST(Features, PositionValue) {
  EXPECT_EQ(position_value(1, 3), -1.0);
  EXPECT_EQ(position_value(3, 3), 1.0);
  EXPECT_EQ(position_value(2, 3), 0.0);
  EXPECT_EQ(position_value(1, 1), 0.0);
  EXPECT_THROW(position_value(0, 3), std::out_of_range);
  for (int big_n = 1; big_n <= 30; ++big_n) {
    for (int n = 1; n <= big_n; ++n) {
      EXPECT_EQ(position_value(n, big_n), -position_value(big_n + 1 - n, big_n));
    }
  }
}

TEST(Features, ClusterInputAddsPosition) {
  SyntheticOptions o;
  o.documents = 1;
  const Document d = testing::truncate_document(generate_synthetic(o)[0], 5);
  const FeatureVocabulary v = build_vocabulary({d});
  const SparseFeatures a = extract_anaphoricity(d, 1, v);
  const SparseFeatures c = cluster_input_features(d, 1, v);
  ASSERT_EQ(c.size(), a.size() + 1);
  EXPECT_TRUE(c.valid());
  EXPECT_EQ(c.entries().back().index, v.position_index());
  EXPECT_EQ(c.entries().back().value, -1.0);
  // Shared indices with phi_a.
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(c.entries()[i], a.entries()[i]);

  const Document single = testing::truncate_document(d, 1);
  EXPECT_EQ(cluster_input_features(single, 1, v).entries().back().value, 0.0);
}

TEST(Features, SparseFeaturesInvariants) {
  EXPECT_THROW(SparseFeatures::from_entries({{1, 1.0}, {1, 2.0}}), std::invalid_argument);
  EXPECT_THROW(SparseFeatures::from_entries({{1, std::nan("")}}), std::invalid_argument);
  const SparseFeatures f = SparseFeatures::from_entries({{4, 1.0}, {2, 0.5}});
  EXPECT_EQ(f.entries().front().index, 2);
  EXPECT_TRUE(f.contains(4));
  EXPECT_FALSE(f.contains(3));
}

}  // namespace
}  // namespace rnncoref
