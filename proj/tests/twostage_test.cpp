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

#include "colo/twostage.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>

#include "colo/common.hpp"
#include "test_util.hpp"

namespace colo::twostage {
namespace {

model::EncoderConfig TinyEncoder(int vocab, int max_len) {
  model::EncoderConfig c;
  c.vocab_size = vocab;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.ffn_dim = 16;
  c.max_len = max_len;
  return c;
}

corpus::Document LongDoc(int sentences, int len) {
  corpus::Document doc;
  doc.id = "long";
  for (int s = 0; s < sentences; ++s) {
    corpus::TokenSeq t(len);
    for (int i = 0; i < len; ++i) t[i] = 10 + (s * 7 + i) % 40;
    doc.sentences.push_back(t);
  }
  doc.reference = doc.sentences[0];
  return doc;
}

TEST(RerankTest, TokenAccountingAtFifteenCandidates) {
  // Six 160-token sentences: every pair exceeds the 300-token cap.
  auto doc = LongDoc(6, 160);
  auto enc = TinyEncoder(64, 1024);
  model::ExtractiveModel gen(enc, 1);
  Reranker rr(DefaultRerankerConfig(enc), 2);
  cand::CandidateSpec spec{{2}, 6};
  auto r = RerankTwoStage(gen, rr, doc, spec);
  const std::size_t doc_tokens = rr.DocumentInput(doc).token_ids.size();
  EXPECT_EQ(r.reranker_invocations, 16u);
  EXPECT_EQ(r.reranker_tokens, 300u * 15u + doc_tokens);
  EXPECT_EQ(r.generator_tokens, gen.BuildInput(doc).token_ids.size());
}

TEST(RerankTest, SingleCandidateStillEncodesTwice) {
  auto doc = LongDoc(2, 5);
  auto enc = TinyEncoder(64, 64);
  model::ExtractiveModel gen(enc, 1);
  Reranker rr(DefaultRerankerConfig(enc), 2);
  cand::CandidateSpec spec{{2}, 5};
  auto r = RerankTwoStage(gen, rr, doc, spec);
  EXPECT_EQ(r.chosen.indices, (std::vector<int>{0, 1}));
  EXPECT_EQ(r.reranker_invocations, 2u);
}

TEST(RerankTest, CandidateInputIsCut) {
  auto doc = LongDoc(3, 200);
  auto enc = TinyEncoder(64, 1024);
  Reranker rr(DefaultRerankerConfig(enc), 3);
  const int idx[] = {0, 2};
  auto in = rr.CandidateInput(doc, idx);
  EXPECT_EQ(in.token_ids.size(), 300u);
  const int one[] = {1};
  EXPECT_EQ(rr.CandidateInput(doc, one).token_ids.size(), 203u);
}

TEST(RerankTest, TokensGrowWithCandidateCount) {
  corpus::SynthSpec s;
  s.num_docs = 4;
  auto corpus = corpus::SynthesizeCorpus(s, 5);
  auto enc = TinyEncoder(static_cast<int>(corpus.vocab.size()), 256);
  model::ExtractiveModel gen(enc, 1);
  Reranker rr(DefaultRerankerConfig(enc), 2);
  cand::CandidateSpec spec{{2, 3}, 8};
  for (const auto& doc : corpus.docs) {
    auto small = RerankTwoStage(gen, rr, doc, spec, 4);
    auto large = RerankTwoStage(gen, rr, doc, spec, 8);
    EXPECT_LT(small.reranker_tokens, large.reranker_tokens);
    EXPECT_EQ(small.generator_tokens, large.generator_tokens);
    EXPECT_EQ(small.reranker_invocations, 5u);
    EXPECT_EQ(large.reranker_invocations, 9u);
  }
}

TEST(BenchTest, InvocationsAndCsv) {
  corpus::SynthSpec s;
  s.num_docs = 3;
  auto corpus = corpus::SynthesizeCorpus(s, 6);
  auto enc = TinyEncoder(static_cast<int>(corpus.vocab.size()), 256);
  model::ExtractiveModel gen(enc, 1);
  Reranker rr(DefaultRerankerConfig(enc), 2);
  BenchConfig cfg;
  cfg.sizes = {4, 8};
  cfg.repetitions = 1;
  cfg.warmup_docs = 1;
  auto rows = Benchmark(gen, rr, corpus.docs, cfg);
  ASSERT_EQ(rows.size(), 6u);
  std::map<std::string, std::vector<BenchRow>> by;
  for (const auto& r : rows) by[r.system].push_back(r);
  ASSERT_EQ(by["colo"].size(), 2u);
  for (const auto& r : by["colo"]) EXPECT_EQ(r.encoder_invocations_per_doc, 1.0);
  for (const auto& r : by["baseline"]) EXPECT_EQ(r.encoder_invocations_per_doc, 1.0);
  for (const auto& r : by["two-stage"]) {
    EXPECT_EQ(r.encoder_invocations_per_doc, r.candidates + 1.0);
  }
  EXPECT_EQ(by["colo"][0].tokens_per_doc, by["colo"][1].tokens_per_doc);
  EXPECT_LT(by["two-stage"][0].tokens_per_doc, by["two-stage"][1].tokens_per_doc);
  for (const auto& r : rows) EXPECT_GT(r.samples_per_second, 0.0);

  cfg.batch_mode = BatchMode::kMax;
  cfg.memory_budget_bytes = 1;
  auto max_rows = Benchmark(gen, rr, corpus.docs, cfg);
  for (const auto& r : max_rows) EXPECT_EQ(r.batch, 1);

  testing::TempDir dir("bench");
  WriteBenchCsv(dir.file("b.csv"), rows);
  std::ifstream in(dir.file("b.csv"));
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("system,C,samples_per_s,tokens_per_doc,peak_bytes,batch_mode", 0),
            0u);
}

TEST(BenchTest, ConfigValidation) {
  EXPECT_EQ(ParseBatchMode("max"), BatchMode::kMax);
  EXPECT_THROW(ParseBatchMode("huge"), Error);
  BenchConfig cfg;
  cfg.sizes = {0};
  EXPECT_THROW(ValidateBenchConfig(cfg), Error);
}

TEST(CostTest, ColoHasOneStage) {
  corpus::SynthSpec s;
  s.num_docs = 6;
  auto corpus = corpus::SynthesizeCorpus(s, 7);
  auto enc = TinyEncoder(static_cast<int>(corpus.vocab.size()), 256);
  CostConfig cfg;
  cfg.train.warmup_steps_bce = 2;
  cfg.train.combined_steps = 2;
  cfg.reranker_steps = 2;
  auto rows = TrainingCostReport(enc, corpus.docs, cfg, 3);
  int colo_nonempty = 0;
  double two_stage_sum = 0.0, two_stage_total = -1.0;
  for (const auto& r : rows) {
    if (r.system == "colo" && r.stage != "total" && r.seconds >= 0.0) ++colo_nonempty;
    if (r.system == "two-stage" && r.stage != "total") {
      EXPECT_GE(r.seconds, 0.0) << r.stage;
      two_stage_sum += r.seconds;
    }
    if (r.system == "two-stage" && r.stage == "total") two_stage_total = r.seconds;
  }
  EXPECT_EQ(colo_nonempty, 1);
  EXPECT_NEAR(two_stage_total, two_stage_sum, 1e-9);
}

TEST(RerankerTest, SaveLoadRoundTrip) {
  auto enc = TinyEncoder(64, 64);
  Reranker rr(DefaultRerankerConfig(enc), 9);
  testing::TempDir dir("rr");
  rr.Save(dir.file("r.ckpt"));
  auto back = Reranker::Load(dir.file("r.ckpt"));
  auto doc = LongDoc(3, 4);
  auto a = rr.Encode(rr.DocumentInput(doc));
  auto b = back->Encode(back->DocumentInput(doc));
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.at(i), b.at(i), 1e-4);
}

}  // namespace
}  // namespace colo::twostage
