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


#include <cmath>
#include <filesystem>
#include <set>

#include "fixture_util.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "test_util.h"
#include "vlscore/default_vocab.h"
#include "vlscore/prng.h"
#include "vlscore/scoring.h"
#include "vlscore/synth.h"
#include "vlscore/tensor_io.h"

namespace vlscore {
namespace {

using ::vlscore::testing::FixtureIndex;
using ::vlscore::testing::TempDir;

FixtureSpec TwoBlobSpec() {
  FixtureSpec spec;
  spec.seed = 17;
  spec.n_queries = 3;
  spec.dim = 32;
  spec.height = 16;
  spec.width = 16;
  spec.classes = {{"road", {"road", "street"}}, {"car", {"car"}}};
  spec.ood_prompts = {"cow"};
  spec.blobs = {{{0, 0, 16, 16}, BlobKind::kId, 0, std::nullopt, 0.0},
                {{2, 2, 5, 5}, BlobKind::kId, 1, std::nullopt, 0.0},
                {{9, 9, 5, 5}, BlobKind::kOod, 1, std::nullopt, 0.0}};
  return spec;
}

double MeanWhere(const Tensor& u, const Tensor& labels, bool ood) {
  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    const uint8_t l = labels.u8()[i];
    if (l == kIgnoreLabel || (l == kOodLabel) != ood) continue;
    sum += u.f32()[i];
    ++n;
  }
  return sum / n;
}

TEST(SplitMix64Test, KnownSequence) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng.Next(), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(rng.Next(), 0x6E789E6AA1B965F4ull);
}

TEST(SplitMix64Test, UniformAndBelowStayInRange) {
  SplitMix64 rng(42);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.Below(7), 7u);
  }
}

TEST(SynthTest, SameSeedGivesIdenticalDirectories) {
  TempDir dir;
  ASSERT_OK_AND_ASSIGN(VocabConfig vocab, DefaultVocab());
  ASSERT_OK_AND_ASSIGN(FixtureSpec spec, DefaultFixtureSpec(vocab, 7));
  ASSERT_OK(GenFixture(spec, dir.path() / "a"));
  ASSERT_OK(GenFixture(spec, dir.path() / "b"));
  size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path() / "a")) {
    const auto name = entry.path().filename();
    EXPECT_EQ(ReadFileBytes(entry.path()).value(),
              ReadFileBytes(dir.path() / "b" / name).value())
        << name;
    ++files;
  }
  EXPECT_EQ(files, 6u);
}

TEST(SynthTest, DifferentSeedsDiffer) {
  const FixtureSpec a = RandomFixtureSpec(1, 3, 1, 4, 8, 8);
  FixtureSpec b = a;
  b.seed = 2;
  ASSERT_OK_AND_ASSIGN(InferenceBundle ba, MakeFixture(a));
  ASSERT_OK_AND_ASSIGN(InferenceBundle bb, MakeFixture(b));
  EXPECT_FALSE(BitwiseEqual(ba.vis_in, bb.vis_in));
}

TEST(SynthTest, MetaRecordsGenerator) {
  TempDir dir;
  ASSERT_OK(GenFixture(TwoBlobSpec(), dir.path()));
  const auto meta = nlohmann::json::parse(ReadFileBytes(dir / "meta.json").value());
  EXPECT_EQ(meta.at("prng"), std::string(SplitMix64::kName));
  EXPECT_EQ(meta.at("seed"), 17);
}

TEST(SynthTest, LabelsFollowBlobOwnership) {
  ASSERT_OK_AND_ASSIGN(InferenceBundle b, MakeFixture(TwoBlobSpec()));
  const auto l = b.labels->u8();
  EXPECT_EQ(l[0], 0);
  EXPECT_EQ(l[3 * 16 + 3], 1);
  EXPECT_EQ(l[10 * 16 + 10], kOodLabel);
  EXPECT_EQ(std::set<uint8_t>(l.begin(), l.end()),
            (std::set<uint8_t>{0, 1, kOodLabel}));
}

TEST(SynthTest, UncoveredPixelsAreIgnored) {
  FixtureSpec spec = TwoBlobSpec();
  spec.blobs.erase(spec.blobs.begin());
  spec.n_queries = 2;
  ASSERT_OK_AND_ASSIGN(InferenceBundle b, MakeFixture(spec));
  EXPECT_EQ(b.labels->u8()[0], kIgnoreLabel);
}

TEST(SynthTest, OodBlobIsMoreUncertainThanIdBlobs) {
  const FixtureSpec spec = TwoBlobSpec();
  ASSERT_OK_AND_ASSIGN(InferenceBundle b, MakeFixture(spec));
  for (bool with_ood : {false, true}) {
    ASSERT_OK_AND_ASSIGN(ClassIndex idx, FixtureIndex(spec, b, with_ood));
    ASSERT_OK_AND_ASSIGN(ScoreResult r, ScoreBundle(b, idx));
    EXPECT_GT(MeanWhere(r.uncertainty, *b.labels, true),
              MeanWhere(r.uncertainty, *b.labels, false));
  }
}

TEST(SynthTest, SingleClassWithoutPromptsUsesSigmoid) {
  FixtureSpec spec = TwoBlobSpec();
  spec.classes.resize(1);
  spec.ood_prompts.clear();
  spec.blobs = {{{0, 0, 16, 16}, BlobKind::kId, 0, std::nullopt, 0.0}};
  spec.n_queries = 2;
  ASSERT_OK_AND_ASSIGN(InferenceBundle b, MakeFixture(spec));
  ASSERT_OK_AND_ASSIGN(ClassIndex idx, FixtureIndex(spec, b, true));
  ASSERT_OK_AND_ASSIGN(ScoreResult r, ScoreBundle(b, idx));
  EXPECT_EQ(r.activation, Activation::kSigmoid);
}

TEST(SynthTest, DefaultSceneUsesVocabulary) {
  ASSERT_OK_AND_ASSIGN(VocabConfig vocab, DefaultVocab());
  ASSERT_OK_AND_ASSIGN(FixtureSpec spec, DefaultFixtureSpec(vocab, 3));
  ASSERT_OK_AND_ASSIGN(InferenceBundle b, MakeFixture(spec));
  EXPECT_EQ(b.class_names, vocab.classes);
  EXPECT_EQ(b.n_queries(), 8u);
  size_t ood = 0;
  for (uint8_t l : b.labels->u8()) ood += l == kOodLabel;
  EXPECT_GT(ood, 0u);
}

TEST(SynthTest, SpecValidation) {
  FixtureSpec spec = TwoBlobSpec();
  spec.blobs[1].rect = {12, 12, 8, 8};
  EXPECT_FALSE(MakeFixture(spec).ok());

  spec = TwoBlobSpec();
  spec.blobs[1].index = 5;
  EXPECT_FALSE(MakeFixture(spec).ok());

  spec = TwoBlobSpec();
  spec.n_queries = 2;
  EXPECT_FALSE(MakeFixture(spec).ok());

  spec = TwoBlobSpec();
  spec.dim = 2;
  EXPECT_FALSE(MakeFixture(spec).ok());

  spec = TwoBlobSpec();
  spec.margin = 1.9;
  EXPECT_FALSE(MakeFixture(spec).ok());
}

TEST(SynthTest, SimplexMarginSeparatesPrototypes) {
  FixtureSpec spec = TwoBlobSpec();
  spec.margin = 1.3;
  spec.concept_noise = 0.0;
  spec.template_noise = 0.0;
  ASSERT_OK_AND_ASSIGN(InferenceBundle b, MakeFixture(spec));
  const auto t = b.text_raw.f32();
  const size_t d = b.dim();
  const uint64_t road = b.concept_index[0].template_rows[0];
  const uint64_t car = b.concept_index[2].template_rows[0];
  double dot = 0.0, nr = 0.0, nc = 0.0;
  for (size_t i = 0; i < d; ++i) {
    dot += t[road * d + i] * t[car * d + i];
    nr += t[road * d + i] * t[road * d + i];
    nc += t[car * d + i] * t[car * d + i];
  }
  EXPECT_LE(dot / std::sqrt(nr * nc), 1.0 - 1.3 + 1e-6);
}

TEST(SynthTest, ParsesJsonSpec) {
  ASSERT_OK_AND_ASSIGN(FixtureSpec spec, ParseFixtureSpec(R"({
    "n_queries": 2, "dim": 16, "height": 8, "width": 8,
    "classes": ["road", {"name": "car", "concepts": ["car", "sedan"]}],
    "ood_prompts": ["cow"],
    "blobs": [{"rect": [0, 0, 8, 8], "index": 0},
              {"rect": [1, 1, 3, 3], "kind": "ood", "index": 0,
               "mix_class": 1, "mix_weight": 0.25}]})"));
  ASSERT_EQ(spec.classes.size(), 2u);
  EXPECT_EQ(spec.classes[0].concepts, std::vector<std::string>{"road"});
  EXPECT_EQ(spec.classes[1].concepts.size(), 2u);
  ASSERT_EQ(spec.blobs.size(), 2u);
  EXPECT_EQ(spec.blobs[1].kind, BlobKind::kOod);
  EXPECT_EQ(spec.blobs[1].mix_class, 1u);
  EXPECT_EQ(spec.blobs[1].mix_weight, 0.25);
  EXPECT_OK(MakeFixture(spec));
}

TEST(SynthTest, RejectsMalformedJsonSpec) {
  EXPECT_FALSE(ParseFixtureSpec("[]").ok());
  EXPECT_FALSE(ParseFixtureSpec(R"({"blobs": [{"rect": [0, 0], "index": 0}]})").ok());
  EXPECT_FALSE(
      ParseFixtureSpec(R"({"blobs": [{"rect": [0, 0, 1, 1], "kind": "x", "index": 0}]})")
          .ok());
}

}  // namespace
}  // namespace vlscore
