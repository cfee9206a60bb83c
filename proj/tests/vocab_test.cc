/*
 * Copyright 2026 The vlscore Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <algorithm>
#include <cmath>
#include <set>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"
#include "vlscore/default_vocab.h"
#include "vlscore/vocab.h"

namespace vlscore {
namespace {

using ::testing::HasSubstr;
using ::vlscore::testing::F32;

constexpr char kTinyVocab[] = R"({
  "classes": ["road", "car", "truck"],
  "concepts": {"road": ["road", "street"], "car": ["car"], "truck": ["truck", "lorry"]},
  "templates": ["a photo of a {}."],
  "mergings": {"2": {"ground": ["road"], "vehicle": ["car", "truck"]}},
  "ood_prompt_sets": {"x": ["cow", "rock"]}
})";

std::set<size_t> RowsOf(const std::vector<ConceptEntry>& index,
                        const std::vector<std::string>& classes) {
  std::set<size_t> rows;
  for (size_t i = 0; i < index.size(); ++i) {
    if (std::find(classes.begin(), classes.end(), index[i].class_name) !=
        classes.end()) {
      rows.insert(i);
    }
  }
  return rows;
}

TEST(DefaultVocabTest, HasNineteenClassesAndFourteenTemplates) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, DefaultVocab());
  EXPECT_EQ(cfg.classes.size(), 19u);
  EXPECT_EQ(cfg.classes.front(), "road");
  EXPECT_EQ(cfg.classes.back(), "bicycle");
  EXPECT_EQ(cfg.templates.size(), 14u);
  for (const std::string& t : cfg.templates) {
    EXPECT_NE(t.find("{}"), std::string::npos) << t;
  }
}

TEST(DefaultVocabTest, VegetationConcepts) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, DefaultVocab());
  const auto* concepts = cfg.ConceptsOf("vegetation");
  ASSERT_NE(concepts, nullptr);
  EXPECT_EQ(*concepts, (std::vector<std::string>{"vegetation", "tree", "trees",
                                                 "palm tree", "bushes"}));
}

TEST(DefaultVocabTest, ThreeWayMergingGroupsHumans) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, DefaultVocab());
  const Merging* m = cfg.FindMerging("3");
  ASSERT_NE(m, nullptr);
  ASSERT_EQ(m->superclasses.size(), 3u);
  const auto human =
      std::find_if(m->superclasses.begin(), m->superclasses.end(),
                   [](const Superclass& s) { return s.name == "human"; });
  ASSERT_NE(human, m->superclasses.end());
  EXPECT_EQ(human->members, (std::vector<std::string>{"person", "rider"}));
}

TEST(DefaultVocabTest, EveryMergingPartitionsTheClasses) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, DefaultVocab());
  ASSERT_EQ(cfg.mergings.size(), 3u);
  for (const Merging& m : cfg.mergings) {
    std::multiset<std::string> members;
    for (const Superclass& s : m.superclasses) {
      members.insert(s.members.begin(), s.members.end());
    }
    EXPECT_EQ(members, std::multiset<std::string>(cfg.classes.begin(),
                                                  cfg.classes.end()))
        << m.name;
    EXPECT_EQ(std::to_string(m.superclasses.size()), m.name);
  }
}

TEST(DefaultVocabTest, OodPromptSets) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, DefaultVocab());
  ASSERT_NE(cfg.FindOodPromptSet("ra19"), nullptr);
  EXPECT_EQ(cfg.FindOodPromptSet("ra19")->classes.size(), 15u);
  EXPECT_EQ(cfg.FindOodPromptSet("smiyc")->classes.size(), 15u);
  EXPECT_EQ(cfg.FindOodPromptSet("rba")->classes.size(), 13u);
  EXPECT_EQ(cfg.FindOodPromptSet("nope"), nullptr);
}

TEST(VocabParseTest, DuplicateMembershipNamesTheLocation) {
  const auto r = ParseVocabConfig(R"({
    "classes": ["a", "b"], "concepts": {"a": ["a"], "b": ["b"]},
    "templates": ["{}"],
    "mergings": {"1": {"x": ["a", "b"], "y": ["a"]}}})");
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(std::string(r.status().message()), HasSubstr("mergings"));
}

TEST(VocabParseTest, IncompleteMergingIsRejected) {
  const auto r = ParseVocabConfig(R"({
    "classes": ["a", "b"], "concepts": {"a": ["a"], "b": ["b"]},
    "templates": ["{}"], "merging": {"x": ["a"]}})");
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(std::string(r.status().message()), HasSubstr("\"b\""));
}

TEST(VocabParseTest, UnknownMergingMemberIsRejected) {
  const auto r = ParseVocabConfig(R"({
    "classes": ["a"], "concepts": {"a": ["a"]},
    "templates": ["{}"], "merging": {"x": ["a", "zz"]}})");
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(std::string(r.status().message()), HasSubstr("zz"));
}

TEST(VocabParseTest, StructuralErrors) {
  EXPECT_FALSE(ParseVocabConfig("not json").ok());
  EXPECT_FALSE(ParseVocabConfig(R"({"classes": ["a", "a"],
      "concepts": {"a": ["a"]}, "templates": ["{}"]})").ok());
  EXPECT_FALSE(ParseVocabConfig(R"({"classes": ["a"],
      "concepts": {"a": []}, "templates": ["{}"]})").ok());
  EXPECT_FALSE(ParseVocabConfig(R"({"classes": ["a"],
      "concepts": {"a": ["a"]}, "templates": ["no slot"]})").ok());
  EXPECT_FALSE(ParseVocabConfig(R"({"classes": ["a"],
      "concepts": {"a": ["a"]}, "templates": ["{}"],
      "ood_classes": ["a"]})").ok());
}

TEST(VocabParseTest, SingularKeysAreAccepted) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, ParseVocabConfig(R"({
    "classes": ["a", "b"], "concepts": {"a": ["a"], "b": ["b"]},
    "templates": ["{}"], "merging": {"x": ["a", "b"]},
    "ood_classes": ["cow"]})"));
  ASSERT_NE(cfg.FindMerging("1"), nullptr);
  ASSERT_NE(cfg.FindOodPromptSet("default"), nullptr);
  EXPECT_EQ(cfg.FindOodPromptSet("default")->classes,
            std::vector<std::string>{"cow"});
}

TEST(ClassIndexTest, NoMergingGivesOneChannelPerClass) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, DefaultVocab());
  const auto index = MakeConceptIndex(cfg, {}, 1);
  ASSERT_OK_AND_ASSIGN(ClassIndex idx, BuildClassIndex(cfg, nullptr, index));
  EXPECT_EQ(idx.id_channel_count(), 19u);
  EXPECT_EQ(idx.ood_count(), 0u);
  EXPECT_EQ(idx.channel_names(), cfg.classes);
}

TEST(ClassIndexTest, ThreeWayMergingUnionsMemberRows) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, DefaultVocab());
  const auto index = MakeConceptIndex(cfg, {}, 2);
  const Merging* m = cfg.FindMerging("3");
  ASSERT_OK_AND_ASSIGN(ClassIndex idx, BuildClassIndex(cfg, m, index));
  ASSERT_EQ(idx.id_channel_count(), 3u);
  const auto& names = idx.channel_names();
  const size_t moving =
      std::find(names.begin(), names.end(), "moving objects") - names.begin();
  ASSERT_LT(moving, names.size());
  const auto& group = idx.groups()[moving];
  EXPECT_EQ(std::set<size_t>(group.begin(), group.end()),
            RowsOf(index, {"car", "truck", "bus", "train", "motorcycle",
                           "bicycle"}));
}

TEST(ClassIndexTest, MergingNeverDropsRows) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, DefaultVocab());
  const auto index = MakeConceptIndex(cfg, {}, 1);
  std::multiset<size_t> unmerged;
  ASSERT_OK_AND_ASSIGN(ClassIndex plain, BuildClassIndex(cfg, nullptr, index));
  for (const auto& g : plain.groups()) unmerged.insert(g.begin(), g.end());
  for (const Merging& m : cfg.mergings) {
    ASSERT_OK_AND_ASSIGN(ClassIndex idx, BuildClassIndex(cfg, &m, index));
    std::multiset<size_t> merged;
    for (const auto& g : idx.groups()) merged.insert(g.begin(), g.end());
    EXPECT_EQ(merged, unmerged) << m.name;
  }
}

TEST(ClassIndexTest, SingleConceptIdentity) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, ParseVocabConfig(R"({
    "classes": ["a"], "concepts": {"a": ["a"]}, "templates": ["{}"]})"));
  const auto index = MakeConceptIndex(cfg, {}, 1);
  ASSERT_OK_AND_ASSIGN(ClassIndex idx, BuildClassIndex(cfg, nullptr, index));
  ASSERT_EQ(idx.groups().size(), 1u);
  EXPECT_EQ(idx.groups()[0], std::vector<size_t>{0});
}

TEST(ClassIndexTest, OodExtensionAppendsChannels) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, DefaultVocab());
  const auto& ra19 = cfg.FindOodPromptSet("ra19")->classes;
  const auto index = MakeConceptIndex(cfg, ra19, 1);
  ASSERT_OK_AND_ASSIGN(ClassIndex idx,
                       BuildClassIndex(cfg, cfg.FindMerging("3"), index));
  ASSERT_OK_AND_ASSIGN(auto rows, ResolveOodRows(index, ra19));
  ASSERT_OK_AND_ASSIGN(ClassIndex ext, ExtendWithOod(idx, rows, ra19));
  EXPECT_EQ(ext.ood_count(), 15u);
  EXPECT_EQ(ext.id_channel_count(), 3u);
  EXPECT_EQ(ext.channel_count(), 18u);
}

TEST(ClassIndexTest, EmptyOodExtensionIsIdentity) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, ParseVocabConfig(kTinyVocab));
  const auto index = MakeConceptIndex(cfg, {}, 1);
  ASSERT_OK_AND_ASSIGN(ClassIndex idx, BuildClassIndex(cfg, nullptr, index));
  ASSERT_OK_AND_ASSIGN(ClassIndex ext, ExtendWithOod(idx, {}, {}));
  EXPECT_EQ(ext.groups(), idx.groups());
  EXPECT_EQ(ext.channel_names(), idx.channel_names());
  EXPECT_EQ(ext.id_channel_count(), idx.id_channel_count());
}

TEST(ClassIndexTest, OverlappingGroupsConflict) {
  const auto r = ClassIndex::Create({{0, 1}, {1}}, {"a", "b"}, 2);
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(std::string(r.status().message()), HasSubstr("conflict"));
  EXPECT_FALSE(ClassIndex::Create({{}}, {"a"}, 1).ok());
}

TEST(ClassIndexTest, UnknownOodClassIsRejected) {
  ASSERT_OK_AND_ASSIGN(VocabConfig cfg, ParseVocabConfig(kTinyVocab));
  const std::vector<std::string> ood = {"cow"};
  const auto index = MakeConceptIndex(cfg, ood, 1);
  const std::vector<std::string> asked = {"horse"};
  EXPECT_FALSE(ResolveOodRows(index, asked).ok());
}

std::vector<ConceptEntry> OneConcept(std::vector<uint64_t> rows) {
  return {ConceptEntry{"a", "a", std::move(rows)}};
}

TEST(AggregateTest, SingleTemplateIsNormalizedCopy) {
  ASSERT_OK_AND_ASSIGN(Tensor t,
                       AggregateTemplateEmbeddings(F32({1, 2}, {3.f, 4.f}),
                                                   OneConcept({0})));
  EXPECT_FLOAT_EQ(t.f32()[0], 0.6f);
  EXPECT_FLOAT_EQ(t.f32()[1], 0.8f);
}

TEST(AggregateTest, OrthogonalPairAveragesToDiagonal) {
  ASSERT_OK_AND_ASSIGN(Tensor t, AggregateTemplateEmbeddings(
                                     F32({2, 2}, {1.f, 0.f, 0.f, 1.f}),
                                     OneConcept({0, 1})));
  const float r = static_cast<float>(1.0 / std::sqrt(2.0));
  EXPECT_NEAR(t.f32()[0], r, 1e-7);
  EXPECT_NEAR(t.f32()[1], r, 1e-7);
}

TEST(AggregateTest, RowsAreNormalizedBeforeAveraging) {
  ASSERT_OK_AND_ASSIGN(Tensor t, AggregateTemplateEmbeddings(
                                     F32({2, 2}, {10.f, 0.f, 0.f, 1.f}),
                                     OneConcept({0, 1})));
  EXPECT_NEAR(t.f32()[0], t.f32()[1], 1e-7);
}

TEST(AggregateTest, OpposingRowsAreDegenerate) {
  const auto r = AggregateTemplateEmbeddings(
      F32({2, 3}, {1.f, -2.f, 0.5f, -1.f, 2.f, -0.5f}), OneConcept({0, 1}));
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(std::string(r.status().message()), HasSubstr("degenerate"));
}

TEST(AggregateTest, ZeroRowIsDegenerate) {
  EXPECT_FALSE(
      AggregateTemplateEmbeddings(F32({1, 2}, {0.f, 0.f}), OneConcept({0}))
          .ok());
}

}  // namespace
}  // namespace vlscore
