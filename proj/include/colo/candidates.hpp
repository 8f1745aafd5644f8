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

// Extractive candidates: clipping, enumeration, ranking by a discriminator,
// greedy oracle labels, and the LEAD and ORACLE baselines.
//
// Ties are broken toward lexicographically smaller index lists everywhere.

#ifndef COLO_CANDIDATES_HPP_
#define COLO_CANDIDATES_HPP_

#include <span>
#include <vector>

#include "colo/corpus.hpp"
#include "colo/metrics.hpp"

namespace colo::cand {

struct CandidateSpec {
  // Allowed sentence counts per candidate.
  std::vector<int> sizes = {2, 3};
  // Clip size.
  int n_prime = 5;
};

void ValidateCandidateSpec(const CandidateSpec& spec);

struct Candidate {
  // Strictly increasing sentence indices.
  std::vector<int> indices;
  double disc_score = 0.0;
  // 1-based after ranking, 0 before.
  int rank = 0;
};

// Indices of the n_prime largest probabilities, returned in increasing order.
std::vector<int> ClipTopK(std::span<const double> probs, int n_prime);

// For each size in ascending order, all combinations of `clipped` in
// lexicographic order. If no size fits, the single candidate holding every
// clipped index.
std::vector<Candidate> EnumerateCandidates(std::span<const int> clipped,
                                           const CandidateSpec& spec);
// ClipTopK followed by EnumerateCandidates: the pool used both when training
// and when selecting.
std::vector<Candidate> CandidatePool(std::span<const double> probs,
                                     const CandidateSpec& spec);
// Sum of binomial(clipped_size, size) over the sizes that fit.
std::size_t CountCandidates(std::size_t clipped_size,
                            std::span<const int> sizes);
// True when no size fits and enumeration falls back to one candidate.
bool IsDegenerate(std::size_t clipped_size, std::span<const int> sizes);

// Concatenated tokens of the selected sentences in document order.
corpus::TokenSeq CandidateTokens(const corpus::Document& doc,
                                 std::span<const int> indices);

// Scores each candidate against the reference, sorts best first and assigns
// ranks 1..m.
void RankCandidates(std::vector<Candidate>& cands, const corpus::Document& doc,
                    metrics::DiscriminatorKind kind);

// 0/1 per sentence from greedy forward selection. At least one sentence is
// always chosen; later additions need a strict score gain.
std::vector<int> GreedyOracleLabels(const corpus::Document& doc,
                                    metrics::DiscriminatorKind kind,
                                    int max_sents);

Candidate Lead(const corpus::Document& doc, int k);

// Best candidate of `cands` by discriminator score.
Candidate OracleCandidate(std::vector<Candidate> cands,
                          const corpus::Document& doc,
                          metrics::DiscriminatorKind kind);

// Best subset of all `num_sentences` sentences whose size is in `sizes`.
Candidate ExhaustiveOracle(const corpus::Document& doc, std::size_t num_sentences,
                           std::span<const int> sizes,
                           metrics::DiscriminatorKind kind);

// The two most frequent gold summary sentence counts (ties to the smaller
// count), sorted ascending.
std::vector<int> SizesFromSummaryCounts(std::span<const corpus::Document> docs);
// Rounded mean gold summary sentence count, at least 1.
int TopKFromSummaryCounts(std::span<const corpus::Document> docs);

}  // namespace colo::cand

#endif  // COLO_CANDIDATES_HPP_
