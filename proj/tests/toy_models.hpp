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

// Small models and reference implementations shared by the unit tests and
// the acceptance run.

#ifndef COLO_TESTS_TOY_MODELS_HPP_
#define COLO_TESTS_TOY_MODELS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "colo/abstractive.hpp"
#include "colo/candidates.hpp"
#include "colo/corpus.hpp"
#include "colo/encoder.hpp"
#include "colo/training.hpp"

namespace colo::testing {

// Independent pair loop over cosines listed best first.
inline double BruteForceRankingLoss(const std::vector<double>& cos,
                                    double margin, bool normalize, bool scaled) {
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t j = 0; j < cos.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const double rho = scaled ? margin * static_cast<double>(j - i) : margin;
      sum += std::max(0.0, cos[j] - cos[i] + rho);
      ++pairs;
    }
  }
  return normalize && pairs ? sum / pairs : sum;
}

// Log-probabilities drawn from a hash of the prefix: a fixed but arbitrary
// next-token table over `vocab` tokens, with the last id as <eos>.
class TableScorer : public abs::StepScorer {
 public:
  TableScorer(int vocab, std::uint64_t seed, double eos_bias = 0.0)
      : vocab_(vocab), seed_(seed), eos_bias_(eos_bias) {}

  abs::StepOutput Score(std::span<const abs::TokenId> prefix) const override {
    std::uint64_t h = seed_;
    for (abs::TokenId t : prefix) {
      h = h * 1000003u + static_cast<std::uint64_t>(t) + 1;
    }
    std::mt19937_64 rng(h);
    std::normal_distribution<double> n(0.0, 1.5);
    std::vector<double> logits(vocab_);
    for (auto& l : logits) l = n(rng);
    logits.back() += eos_bias_ + 0.3 * static_cast<double>(prefix.size());
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    abs::StepOutput out;
    for (double l : logits) out.logprobs.push_back(l - mx - std::log(z));
    out.state = {static_cast<double>(prefix.size()),
                 prefix.empty() ? -1.0 : static_cast<double>(prefix.back()),
                 static_cast<double>(h % 97)};
    return out;
  }
  abs::TokenId eos() const override { return vocab_ - 1; }

 private:
  int vocab_;
  std::uint64_t seed_;
  double eos_bias_;
};

inline abs::Seq2SeqConfig TinySeq2Seq(int vocab) {
  abs::Seq2SeqConfig c;
  c.encoder.vocab_size = vocab;
  c.encoder.d_model = 8;
  c.encoder.n_layers = 1;
  c.encoder.n_heads = 2;
  c.encoder.ffn_dim = 16;
  c.encoder.max_len = 128;
  c.encoder.local_first_layer = false;
  c.decoder_layers = 1;
  c.decoder_heads = 2;
  c.decode = {4, 4, 1.0, 10};
  return c;
}

inline corpus::SynthCorpus SmallCorpus(std::uint64_t seed, int docs = 4) {
  corpus::SynthSpec s;
  s.num_docs = docs;
  s.vocab_size = 50;
  s.salient_words = 10;
  return corpus::SynthesizeCorpus(s, seed);
}

// A few short documents and a one-layer encoder.
class TinySetup {
 public:
  explicit TinySetup(std::uint64_t seed, int docs = 6) {
    corpus::SynthSpec s;
    s.num_docs = docs;
    s.vocab_size = 60;
    s.salient_words = 10;
    corpus = corpus::SynthesizeCorpus(s, seed);
    enc.vocab_size = static_cast<int>(corpus.vocab.size());
    enc.d_model = 8;
    enc.n_layers = 1;
    enc.n_heads = 2;
    enc.ffn_dim = 12;
    enc.max_len = 128;
    config.seed = seed;
    config.warmup_steps_bce = 2;
    config.combined_steps = 3;
    config.batch_size = 2;
  }

  corpus::SynthCorpus corpus;
  model::EncoderConfig enc;
  train::TrainConfig config;
  cand::CandidateSpec spec{{2, 3}, 5};
};

}  // namespace colo::testing

#endif  // COLO_TESTS_TOY_MODELS_HPP_
