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

#include "colo/abstractive.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "colo/common.hpp"
#include "colo/gradcheck.hpp"
#include "test_util.hpp"
#include "toy_models.hpp"

namespace colo::abs {
namespace {

using testing::SmallCorpus;
using testing::TableScorer;
using testing::TinySeq2Seq;

std::set<corpus::TokenSeq> Sequences(const std::vector<DecodedCandidate>& c) {
  std::set<corpus::TokenSeq> out;
  for (const auto& x : c) out.insert(x.tokens);
  return out;
}

TEST(BeamTest, DiverseSearchReducesToBeamSearch) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TableScorer scorer(7, seed);
    for (int beam : {1, 3, 5}) {
      DecodeConfig cfg{beam, 1, 0.0, 8};
      auto diverse = DiverseBeamSearch(scorer, cfg);
      auto plain = BeamSearch(scorer, beam, 8);
      EXPECT_EQ(Sequences(diverse), Sequences(plain))
          << "seed " << seed << " beam " << beam;
      ASSERT_EQ(diverse.size(), plain.size());
      for (std::size_t i = 0; i < plain.size(); ++i) {
        EXPECT_NEAR(diverse[i].logprob, plain[i].logprob, 1e-12);
      }
    }
  }
}

TEST(BeamTest, WidthOneIsGreedy) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TableScorer scorer(6, seed);
    corpus::TokenSeq greedy;
    double lp = 0.0;
    while (static_cast<int>(greedy.size()) < 10) {
      auto out = scorer.Score(greedy);
      auto it = std::max_element(out.logprobs.begin(), out.logprobs.end());
      lp += *it;
      greedy.push_back(static_cast<TokenId>(it - out.logprobs.begin()));
      if (greedy.back() == scorer.eos()) break;
    }
    auto got = DiverseBeamSearch(scorer, {1, 1, 1.0, 10});
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].tokens, greedy);
    EXPECT_NEAR(got[0].logprob, lp, 1e-12);
  }
}

// First-step logits: B tokens close to the top, the rest far below.
class FirstStepScorer : public StepScorer {
 public:
  StepOutput Score(std::span<const TokenId> prefix) const override {
    std::vector<double> logits(10, -20.0);
    if (prefix.empty()) {
      for (int v = 0; v < 4; ++v) logits[v] = 2.0 - 0.25 * v;
    } else {
      logits[prefix.back() % 4] = 1.0;
      logits[9] = 1.5;
    }
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    StepOutput out;
    for (double l : logits) out.logprobs.push_back(l - std::log(z));
    out.state = {static_cast<double>(prefix.size())};
    return out;
  }
  TokenId eos() const override { return 9; }
};

TEST(BeamTest, LargePenaltySpreadsFirstTokens) {
  FirstStepScorer scorer;
  // Max logit gap among the four leading tokens is 0.75.
  auto out = DiverseBeamSearch(scorer, {4, 4, 10.0, 6});
  std::set<TokenId> first;
  for (const auto& c : out) first.insert(c.tokens.front());
  EXPECT_EQ(first.size(), 4u);

  auto same = DiverseBeamSearch(scorer, {4, 4, 0.0, 6});
  std::set<TokenId> first0;
  for (const auto& c : same) first0.insert(c.tokens.front());
  EXPECT_EQ(first0.size(), 1u);
}

TEST(BeamTest, ResultsSortedAndIndexed) {
  TableScorer scorer(8, 3);
  auto out = DiverseBeamSearch(scorer, {6, 3, 0.5, 7});
  ASSERT_EQ(out.size(), 6u);
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].z_index, out[i].tokens.size() - 1);
    EXPECT_LE(out[i].tokens.size(), 7u);
    if (i) EXPECT_GE(out[i - 1].logprob, out[i].logprob);
    EXPECT_GE(out[i].group, 0);
    EXPECT_LT(out[i].group, 3);
  }
}

TEST(BeamTest, InvalidConfig) {
  EXPECT_THROW(ValidateDecodeConfig({0, 1, 0.0, 4}), Error);
  EXPECT_THROW(ValidateDecodeConfig({6, 4, 0.0, 4}), Error);
  EXPECT_THROW(ValidateDecodeConfig({4, 2, -1.0, 4}), Error);
}

TEST(Seq2SeqTest, CachedStateMatchesRecomputed) {
  auto corpus = SmallCorpus(1);
  Seq2SeqModel m(TinySeq2Seq(static_cast<int>(corpus.vocab.size())), 1);
  for (const auto& doc : corpus.docs) {
    auto cands = DecodeCandidates(m, doc);
    ASSERT_FALSE(cands.empty());
    for (const auto& c : cands) {
      EXPECT_EQ(c.z_index, c.tokens.size() - 1);
      ad::NoGradGuard g;
      auto rep = ExtractRepresentations(m, doc, c.tokens);
      ASSERT_EQ(rep.z_c.numel(), c.z_c.size());
      for (std::size_t i = 0; i < c.z_c.size(); ++i) {
        EXPECT_NEAR(rep.z_c.at(i), c.z_c[i], 1e-9);
      }
    }
  }
}

TEST(Seq2SeqTest, RepresentationPositions) {
  auto corpus = SmallCorpus(2);
  Seq2SeqModel m(TinySeq2Seq(static_cast<int>(corpus.vocab.size())), 2);
  const auto& doc = corpus.docs[0];
  ad::NoGradGuard g;
  auto memory = m.EncodeSource(m.BuildInput(doc));
  const TokenId one[] = {20};
  auto r1 = ExtractRepresentations(m, memory, one);
  const TokenId bos[] = {corpus::special::kBos};
  auto states = m.DecodeStates(memory, bos);
  for (std::size_t i = 0; i < r1.z_c.numel(); ++i) {
    EXPECT_EQ(r1.z_c.at(i), states.at(0, i));
    EXPECT_EQ(r1.z_x.at(i), memory.at(0, i));
  }
  const TokenId two[] = {20, 21};
  auto r2 = ExtractRepresentations(m, memory, two);
  bool differs = false;
  for (std::size_t i = 0; i < r2.z_c.numel(); ++i) {
    differs |= r2.z_c.at(i) != r1.z_c.at(i);
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(ExtractRepresentations(m, memory, std::span<const TokenId>{}),
               Error);
}

TEST(Seq2SeqTest, UniformOutputGivesLogVocab) {
  auto corpus = SmallCorpus(3);
  const int vocab = static_cast<int>(corpus.vocab.size());
  Seq2SeqModel m(TinySeq2Seq(vocab), 3);
  for (auto& x : m.decoder_embedding().mutable_data()) x = 0.0;
  for (auto& x : m.output_bias().mutable_data()) x = 0.0;
  ad::NoGradGuard g;
  EXPECT_NEAR(NllLoss(m, corpus.docs[0]).item(), std::log(vocab), 1e-9);
}

TEST(Seq2SeqTest, NllGradientCheck) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto corpus = SmallCorpus(seed, 1);
    Seq2SeqModel m(TinySeq2Seq(static_cast<int>(corpus.vocab.size())), seed);
    auto params = m.params().tensors();
    ad::GradCheckOptions opts;
    opts.max_entries_per_tensor = 3;
    opts.seed = seed;
    auto r = ad::CheckGradients([&] { return NllLoss(m, corpus.docs[0]); },
                                params, opts);
    EXPECT_LE(r.max_rel_error, 1e-4) << "seed " << seed << " " << r.worst;
  }
}

TEST(Seq2SeqTest, DecoderTargetEndsWithEos) {
  auto corpus = SmallCorpus(4);
  auto t = DecoderTarget(corpus.docs[0], 5);
  EXPECT_EQ(t.size(), 5u);
  EXPECT_EQ(t.back(), corpus::special::kEos);
  EXPECT_EQ(ContentTokens(t).size(), 4u);
}

TEST(SelectTest, WidthOneSelectsGreedy) {
  auto corpus = SmallCorpus(5);
  auto cfg = TinySeq2Seq(static_cast<int>(corpus.vocab.size()));
  cfg.decode = {1, 1, 0.0, 10};
  Seq2SeqModel m(cfg, 5);
  for (const auto& doc : corpus.docs) {
    auto a = SelectAbs(m, doc);
    auto b = SelectMap(m, doc);
    EXPECT_EQ(a.candidate.tokens, b.candidate.tokens);
  }
}

TEST(SelectTest, CosinesIgnoreUniformScale) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<DecodedCandidate> cands(5);
  for (auto& c : cands) {
    c.z_c.resize(6);
    for (auto& x : c.z_c) x = n(rng);
  }
  std::vector<double> z(6);
  for (auto& x : z) x = n(rng);
  auto base = BeamCosines(ad::Tensor::Vector(z), cands);
  for (auto& c : cands) {
    for (auto& x : c.z_c) x *= 4.2;
  }
  auto scaled = BeamCosines(ad::Tensor::Vector(z), cands);
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_NEAR(base[i], scaled[i], 1e-12);
  }
}

TEST(TrainerTest, WarmupThenOnline) {
  auto corpus = SmallCorpus(6, 4);
  Seq2SeqModel m(TinySeq2Seq(static_cast<int>(corpus.vocab.size())), 6);
  train::TrainConfig cfg;
  cfg.seed = 6;
  cfg.warmup_steps_bce = 2;
  cfg.combined_steps = 2;
  cfg.batch_size = 1;
  cfg.rank_weight = 1.0;
  std::vector<train::StepReport> reports;
  TrainAbstractive(m, corpus.docs, cfg,
                   [&](const train::StepReport& r) { reports.push_back(r); });
  ASSERT_EQ(reports.size(), 4u);
  for (int i = 0; i < 2; ++i) {
    EXPECT_FALSE(reports[i].rank_active);
    EXPECT_EQ(reports[i].l_rank, 0.0);
  }
  for (const auto& r : reports) EXPECT_NEAR(r.total, r.l_sum + r.l_rank, 1e-9);
  EXPECT_TRUE(reports[2].rank_active);
}

TEST(CheckpointTest, SaveLoadKeepsConfigAndOutputs) {
  auto corpus = SmallCorpus(7);
  Seq2SeqModel m(TinySeq2Seq(static_cast<int>(corpus.vocab.size())), 7);
  testing::TempDir dir("s2s");
  m.Save(dir.file("m.ckpt"));
  auto back = Seq2SeqModel::Load(dir.file("m.ckpt"));
  EXPECT_EQ(back->config().decode.beam_size, 4);
  ad::NoGradGuard g;
  EXPECT_NEAR(NllLoss(m, corpus.docs[0]).item(),
              NllLoss(*back, corpus.docs[0]).item(), 1e-4);
}

}  // namespace
}  // namespace colo::abs
