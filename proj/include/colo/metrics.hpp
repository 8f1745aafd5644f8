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

// Lexical summary metrics: ROUGE-N, summary-level ROUGE-L, bigram JS
// divergence, and the discriminator that orders candidates.
//
// No stemming or stopword removal is applied and all F-measures use beta = 1.

#ifndef COLO_METRICS_HPP_
#define COLO_METRICS_HPP_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colo/corpus.hpp"

namespace colo::metrics {

using corpus::TokenId;

struct NgramCounts {
  int order = 1;
  std::map<std::vector<TokenId>, int> counts;

  std::size_t total() const;
};

// Multiset of n-grams. Sequences shorter than n give empty counts.
NgramCounts CountNgrams(std::span<const TokenId> tokens, int n);

struct MetricScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Precision/recall from a match count; an empty denominator yields 0.
MetricScore ScoreFromOverlap(double overlap, double cand_total,
                             double ref_total);

MetricScore RougeN(std::span<const TokenId> cand, std::span<const TokenId> ref,
                   int n);
// LCS over the whole token sequences (summary-level).
MetricScore RougeL(std::span<const TokenId> cand, std::span<const TokenId> ref);
std::size_t LcsLength(std::span<const TokenId> a, std::span<const TokenId> b);
// Jensen-Shannon divergence (log base 2) between bigram distributions.
// Returns 1 if either side has no bigrams.
double Js2Divergence(std::span<const TokenId> cand,
                     std::span<const TokenId> ref);

enum class DiscriminatorKind { kRouge12Mean, kRougeL, kJs2Complement };

std::string_view ToString(DiscriminatorKind kind);
DiscriminatorKind ParseDiscriminator(std::string_view name);

// Higher is better for every kind.
double DiscriminatorScore(std::span<const TokenId> cand,
                          std::span<const TokenId> ref, DiscriminatorKind kind);

struct ScoreRow {
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
  double js2 = 0.0;
};

// F1 of R-1/R-2/R-L plus the raw JS-2 divergence.
ScoreRow ScoreAll(std::span<const TokenId> cand, std::span<const TokenId> ref);

}  // namespace colo::metrics

#endif  // COLO_METRICS_HPP_
