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

#include "colo/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "colo/common.hpp"

namespace colo::cand {
namespace {

std::vector<int> SortedSizes(std::span<const int> sizes) {
  std::set<int> s(sizes.begin(), sizes.end());
  return {s.begin(), s.end()};
}

// Calls fn(combo) for every k-combination of `pool` in lexicographic order.
template <typename Fn>
void ForEachCombination(std::span<const int> pool, int k, Fn&& fn) {
  const int n = static_cast<int>(pool.size());
  if (k < 1 || k > n) return;
  std::vector<int> pos(k);
  std::iota(pos.begin(), pos.end(), 0);
  std::vector<int> combo(k);
  while (true) {
    for (int i = 0; i < k; ++i) combo[i] = pool[pos[i]];
    fn(combo);
    int i = k - 1;
    while (i >= 0 && pos[i] == n - k + i) --i;
    if (i < 0) return;
    ++pos[i];
    for (int j = i + 1; j < k; ++j) pos[j] = pos[j - 1] + 1;
  }
}

bool Better(double score, const std::vector<int>& idx, double best_score,
            const std::vector<int>& best_idx) {
  if (score != best_score) return score > best_score;
  return idx < best_idx;
}

}  // namespace

void ValidateCandidateSpec(const CandidateSpec& spec) {
  if (spec.sizes.empty()) {
    Fail(ErrorCode::kInvalidArgument, "candidate sizes must not be empty");
  }
  for (int s : spec.sizes) {
    if (s < 1) Fail(ErrorCode::kInvalidArgument, "candidate sizes must be >= 1");
  }
  int max_size = *std::max_element(spec.sizes.begin(), spec.sizes.end());
  if (spec.n_prime < max_size) {
    Fail(ErrorCode::kInvalidArgument,
         "n_prime " + std::to_string(spec.n_prime) +
             " is smaller than the largest candidate size " +
             std::to_string(max_size));
  }
}

std::vector<int> ClipTopK(std::span<const double> probs, int n_prime) {
  if (n_prime < 1) Fail(ErrorCode::kInvalidArgument, "n_prime must be >= 1");
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t keep = std::min<std::size_t>(n_prime, probs.size());
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](int a, int b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return a < b;
                    });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

std::size_t CountCandidates(std::size_t clipped_size,
                            std::span<const int> sizes) {
  std::size_t total = 0;
  for (int k : SortedSizes(sizes)) {
    if (k < 1 || static_cast<std::size_t>(k) > clipped_size) continue;
    // binomial(n, k) computed incrementally; exact for these small values.
    std::size_t c = 1;
    for (int i = 1; i <= k; ++i) c = c * (clipped_size - k + i) / i;
    total += c;
  }
  return total;
}

bool IsDegenerate(std::size_t clipped_size, std::span<const int> sizes) {
  return CountCandidates(clipped_size, sizes) == 0;
}

std::vector<Candidate> EnumerateCandidates(std::span<const int> clipped,
                                           const CandidateSpec& spec) {
  if (clipped.empty()) {
    Fail(ErrorCode::kInvalidArgument, "enumerate_candidates: empty clip set");
  }
  std::vector<int> pool(clipped.begin(), clipped.end());
  std::sort(pool.begin(), pool.end());
  std::vector<Candidate> out;
  for (int k : SortedSizes(spec.sizes)) {
    ForEachCombination(pool, k, [&](const std::vector<int>& combo) {
      out.push_back({combo, 0.0, 0});
    });
  }
  if (out.empty()) out.push_back({pool, 0.0, 0});
  return out;
}

std::vector<Candidate> CandidatePool(std::span<const double> probs,
                                     const CandidateSpec& spec) {
  std::vector<int> clipped = ClipTopK(probs, spec.n_prime);
  return EnumerateCandidates(clipped, spec);
}

corpus::TokenSeq CandidateTokens(const corpus::Document& doc,
                                 std::span<const int> indices) {
  std::vector<int> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  corpus::TokenSeq out;
  for (int i : sorted) {
    if (i < 0 || static_cast<std::size_t>(i) >= doc.sentences.size()) {
      Fail(ErrorCode::kInvalidArgument,
           "candidate index " + std::to_string(i) + " out of range");
    }
    out.insert(out.end(), doc.sentences[i].begin(), doc.sentences[i].end());
  }
  return out;
}

void RankCandidates(std::vector<Candidate>& cands, const corpus::Document& doc,
                    metrics::DiscriminatorKind kind) {
  for (auto& c : cands) {
    c.disc_score = metrics::DiscriminatorScore(CandidateTokens(doc, c.indices),
                                               doc.reference, kind);
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.disc_score != b.disc_score) {
                       return a.disc_score > b.disc_score;
                     }
                     return a.indices < b.indices;
                   });
  for (std::size_t i = 0; i < cands.size(); ++i) {
    cands[i].rank = static_cast<int>(i) + 1;
  }
}

std::vector<int> GreedyOracleLabels(const corpus::Document& doc,
                                    metrics::DiscriminatorKind kind,
                                    int max_sents) {
  if (max_sents < 1) Fail(ErrorCode::kInvalidArgument, "max_sents must be >= 1");
  const int n = static_cast<int>(doc.sentences.size());
  std::vector<int> labels(n, 0);
  std::vector<int> chosen;
  double current = 0.0;
  for (int round = 0; round < std::min(max_sents, n); ++round) {
    int best = -1;
    double best_score = 0.0;
    for (int i = 0; i < n; ++i) {
      if (labels[i]) continue;
      std::vector<int> trial = chosen;
      trial.insert(std::upper_bound(trial.begin(), trial.end(), i), i);
      double s = metrics::DiscriminatorScore(CandidateTokens(doc, trial),
                                             doc.reference, kind);
      if (best < 0 || s > best_score) {
        best = i;
        best_score = s;
      }
    }
    if (best < 0) break;
    if (!chosen.empty() && !(best_score > current)) break;
    chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), best), best);
    labels[best] = 1;
    current = best_score;
  }
  return labels;
}

Candidate Lead(const corpus::Document& doc, int k) {
  if (k < 1) Fail(ErrorCode::kInvalidArgument, "lead: k must be >= 1");
  Candidate c;
  const int n = std::min<int>(k, static_cast<int>(doc.sentences.size()));
  for (int i = 0; i < n; ++i) c.indices.push_back(i);
  return c;
}

Candidate OracleCandidate(std::vector<Candidate> cands,
                          const corpus::Document& doc,
                          metrics::DiscriminatorKind kind) {
  if (cands.empty()) {
    Fail(ErrorCode::kInvalidArgument, "oracle_candidate: empty candidate set");
  }
  RankCandidates(cands, doc, kind);
  return cands.front();
}

Candidate ExhaustiveOracle(const corpus::Document& doc,
                           std::size_t num_sentences, std::span<const int> sizes,
                           metrics::DiscriminatorKind kind) {
  num_sentences = std::min(num_sentences, doc.sentences.size());
  if (num_sentences == 0) {
    Fail(ErrorCode::kInvalidArgument, "exhaustive oracle: empty document");
  }
  std::vector<int> pool(num_sentences);
  std::iota(pool.begin(), pool.end(), 0);
  Candidate best;
  bool have = false;
  for (int k : SortedSizes(sizes)) {
    ForEachCombination(pool, k, [&](const std::vector<int>& combo) {
      double s = metrics::DiscriminatorScore(CandidateTokens(doc, combo),
                                             doc.reference, kind);
      if (!have || Better(s, combo, best.disc_score, best.indices)) {
        best.indices = combo;
        best.disc_score = s;
        have = true;
      }
    });
  }
  if (!have) {
    best.indices = pool;
    best.disc_score = metrics::DiscriminatorScore(CandidateTokens(doc, pool),
                                                  doc.reference, kind);
  }
  best.rank = 1;
  return best;
}

std::vector<int> SizesFromSummaryCounts(std::span<const corpus::Document> docs) {
  std::map<int, int> freq;
  for (const auto& d : docs) ++freq[std::max(1, d.summary_sentence_count)];
  std::vector<std::pair<int, int>> by_freq(freq.begin(), freq.end());
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<int> sizes;
  for (std::size_t i = 0; i < by_freq.size() && i < 2; ++i) {
    sizes.push_back(by_freq[i].first);
  }
  if (sizes.empty()) sizes.push_back(1);
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

int TopKFromSummaryCounts(std::span<const corpus::Document> docs) {
  if (docs.empty()) return 1;
  double sum = 0;
  for (const auto& d : docs) sum += d.summary_sentence_count;
  return std::max(1, static_cast<int>(std::lround(sum / docs.size())));
}

}  // namespace colo::cand
