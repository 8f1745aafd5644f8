// Copyright 2026 The Colo Authors.
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

#include "colo/encoder.hpp"

#include <gtest/gtest.h>

#include "colo/common.hpp"
#include "test_util.hpp"

namespace colo::model {
namespace {

EncoderConfig Small() {
  EncoderConfig c;
  c.vocab_size = 300;
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 4;
  c.ffn_dim = 32;
  c.max_len = 64;
  return c;
}

TEST(EncoderTest, OutputShapes) {
  ExtractiveModel m(Small(), 1);
  auto doc = testing::MakeDoc({"a b c", "d e", "f g h i"}, "a b");
  auto out = m.Encode(m.BuildInput(doc));
  EXPECT_EQ(out.hidden.dim(0), m.BuildInput(doc).token_ids.size());
  EXPECT_EQ(out.hidden.dim(1), 16u);
  EXPECT_EQ(out.z_x.numel(), 16u);
  EXPECT_EQ(out.num_sentences(), 3u);
  EXPECT_EQ(out.probs.numel(), 3u);
  for (double p : out.probs.data()) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  const int one[] = {1};
  auto e = CandidateEmbedding(out, one);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(e.at(i), out.h.at(1, i));
  EXPECT_THROW(CandidateEmbedding(out, std::span<const int>{}), Error);
}

TEST(EncoderTest, SeedDeterminesParameters) {
  ExtractiveModel a(Small(), 3), b(Small(), 3), c(Small(), 4);
  auto doc = testing::MakeDoc({"a b", "c d"}, "a");
  auto pa = a.Encode(a.BuildInput(doc)).probs;
  auto pb = b.Encode(b.BuildInput(doc)).probs;
  auto pc = c.Encode(c.BuildInput(doc)).probs;
  EXPECT_EQ(pa.at(0), pb.at(0));
  EXPECT_NE(pa.at(0), pc.at(0));
}

TEST(EncoderTest, SaveLoadAndClone) {
  ExtractiveModel m(Small(), 5);
  testing::TempDir dir("enc");
  m.Save(dir.file("m.ckpt"), R"({"regime":"online"})");
  std::string meta;
  auto back = ExtractiveModel::Load(dir.file("m.ckpt"), &meta);
  EXPECT_NE(meta.find("online"), std::string::npos);
  EXPECT_EQ(back->config().d_model, 16);
  auto doc = testing::MakeDoc({"a b", "c d", "e"}, "a");
  auto p1 = m.Encode(m.BuildInput(doc)).probs;
  auto p2 = back->Encode(back->BuildInput(doc)).probs;
  for (std::size_t i = 0; i < p1.numel(); ++i) EXPECT_NEAR(p1.at(i), p2.at(i), 1e-4);
  auto clone = m.Clone();
  auto p3 = clone->Encode(clone->BuildInput(doc)).probs;
  for (std::size_t i = 0; i < p1.numel(); ++i) EXPECT_EQ(p1.at(i), p3.at(i));
}

TEST(EncoderTest, ConfigValidationAndJson) {
  EncoderConfig c = Small();
  c.n_heads = 3;
  EXPECT_THROW(ValidateEncoderConfig(c), Error);
  EncoderConfig d = Small();
  d.dropout = 0.25;
  auto back = EncoderConfigFromJson(EncoderConfigToJson(d));
  EXPECT_EQ(back.d_model, d.d_model);
  EXPECT_DOUBLE_EQ(back.dropout, 0.25);
}

TEST(EncoderTest, CausalMask) {
  auto m = CausalMask(3);
  EXPECT_EQ(m.at(0, 0), 0.0);
  EXPECT_EQ(m.at(0, 1), kMaskedOut);
  EXPECT_EQ(m.at(2, 1), 0.0);
}

}  // namespace
}  // namespace colo::model
