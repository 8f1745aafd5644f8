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

#include "colo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "colo/common.hpp"

namespace colo::metrics {
namespace {

// Sorted packed keys for n <= 2; ids are non-negative 32-bit values.
std::vector<std::uint64_t> PackedNgrams(std::span<const TokenId> tokens,
                                        int n) {
  std::vector<std::uint64_t> keys;
  if (tokens.size() < static_cast<std::size_t>(n)) return keys;
  keys.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::uint64_t key = static_cast<std::uint32_t>(tokens[i]);
    if (n == 2) key = (key << 32) | static_cast<std::uint32_t>(tokens[i + 1]);
    keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

// Sum over distinct keys of min(count_a, count_b) for sorted inputs.
std::size_t ClippedOverlap(const std::vector<std::uint64_t>& a,
                           const std::vector<std::uint64_t>& b) {
  std::size_t i = 0, j = 0, overlap = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++overlap;
      ++i;
      ++j;
    }
  }
  return overlap;
}

}  // namespace

std::size_t NgramCounts::total() const {
  std::size_t t = 0;
  for (const auto& [gram, c] : counts) t += c;
  return t;
}

NgramCounts CountNgrams(std::span<const TokenId> tokens, int n) {
  if (n < 1) Fail(ErrorCode::kInvalidArgument, "n-gram order must be >= 1");
  NgramCounts out;
  out.order = n;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out.counts[std::vector<TokenId>(tokens.begin() + i,
                                      tokens.begin() + i + n)];
  }
  return out;
}

MetricScore ScoreFromOverlap(double overlap, double cand_total,
                             double ref_total) {
  MetricScore s;
  s.precision = cand_total > 0 ? overlap / cand_total : 0.0;
  s.recall = ref_total > 0 ? overlap / ref_total : 0.0;
  double denom = s.precision + s.recall;
  s.f1 = denom > 0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

MetricScore RougeN(std::span<const TokenId> cand, std::span<const TokenId> ref,
                   int n) {
  if (n < 1) Fail(ErrorCode::kInvalidArgument, "ROUGE order must be >= 1");
  if (n <= 2) {
    auto c = PackedNgrams(cand, n);
    auto r = PackedNgrams(ref, n);
    return ScoreFromOverlap(static_cast<double>(ClippedOverlap(c, r)),
                            static_cast<double>(c.size()),
                            static_cast<double>(r.size()));
  }
  auto c = CountNgrams(cand, n);
  auto r = CountNgrams(ref, n);
  double overlap = 0;
  for (const auto& [gram, count] : c.counts) {
    auto it = r.counts.find(gram);
    if (it != r.counts.end()) overlap += std::min(count, it->second);
  }
  return ScoreFromOverlap(overlap, static_cast<double>(c.total()),
                          static_cast<double>(r.total()));
}

std::size_t LcsLength(std::span<const TokenId> a, std::span<const TokenId> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

MetricScore RougeL(std::span<const TokenId> cand,
                   std::span<const TokenId> ref) {
  return ScoreFromOverlap(static_cast<double>(LcsLength(cand, ref)),
                          static_cast<double>(cand.size()),
                          static_cast<double>(ref.size()));
}

double Js2Divergence(std::span<const TokenId> cand,
                     std::span<const TokenId> ref) {
  auto p = PackedNgrams(cand, 2);
  auto q = PackedNgrams(ref, 2);
  if (p.empty() || q.empty()) return 1.0;
  const double np = static_cast<double>(p.size());
  const double nq = static_cast<double>(q.size());
  // Walk both sorted key lists, visiting each distinct bigram once.
  double js = 0.0;
  std::size_t i = 0, j = 0;
  while (i < p.size() || j < q.size()) {
    std::uint64_t key;
    if (j >= q.size() || (i < p.size() && p[i] <= q[j])) {
      key = p[i];
    } else {
      key = q[j];
    }
    double cp = 0, cq = 0;
    while (i < p.size() && p[i] == key) {
      ++cp;
      ++i;
    }
    while (j < q.size() && q[j] == key) {
      ++cq;
      ++j;
    }
    double pp = cp / np, qq = cq / nq, m = 0.5 * (pp + qq);
    if (pp > 0) js += 0.5 * pp * std::log2(pp / m);
    if (qq > 0) js += 0.5 * qq * std::log2(qq / m);
  }
  return std::clamp(js, 0.0, 1.0);
}

std::string_view ToString(DiscriminatorKind kind) {
  switch (kind) {
    case DiscriminatorKind::kRouge12Mean:
      return "rouge12";
    case DiscriminatorKind::kRougeL:
      return "rougeL";
    case DiscriminatorKind::kJs2Complement:
      return "js2";
  }
  return "rouge12";
}

DiscriminatorKind ParseDiscriminator(std::string_view name) {
  if (name == "rouge12" || name == "rouge-1,2") return DiscriminatorKind::kRouge12Mean;
  if (name == "rougeL" || name == "rouge-l") return DiscriminatorKind::kRougeL;
  if (name == "js2" || name == "js-2") return DiscriminatorKind::kJs2Complement;
  Fail(ErrorCode::kInvalidArgument,
       "unknown discriminator '" + std::string(name) +
           "' (expected rouge12, rougeL or js2)");
}

double DiscriminatorScore(std::span<const TokenId> cand,
                          std::span<const TokenId> ref,
                          DiscriminatorKind kind) {
  switch (kind) {
    case DiscriminatorKind::kRouge12Mean:
      return 0.5 * (RougeN(cand, ref, 1).f1 + RougeN(cand, ref, 2).f1);
    case DiscriminatorKind::kRougeL:
      return RougeL(cand, ref).f1;
    case DiscriminatorKind::kJs2Complement:
      return 1.0 - Js2Divergence(cand, ref);
  }
  return 0.0;
}

ScoreRow ScoreAll(std::span<const TokenId> cand, std::span<const TokenId> ref) {
  return {RougeN(cand, ref, 1).f1, RougeN(cand, ref, 2).f1,
          RougeL(cand, ref).f1, Js2Divergence(cand, ref)};
}

}  // namespace colo::metrics
