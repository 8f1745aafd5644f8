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

// Losses and training loops for the extractive model: BCE warmup, online
// candidate sampling with the ranking loss, and the offline-cached baseline.

#ifndef COLO_TRAINING_HPP_
#define COLO_TRAINING_HPP_

#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "colo/candidates.hpp"
#include "colo/encoder.hpp"
#include "colo/metrics.hpp"

namespace colo::train {

using ad::Tensor;

struct TrainConfig {
  double margin = 0.01;
  int warmup_steps_bce = 150;
  int combined_steps = 1500;
  int batch_size = 2;
  std::uint64_t seed = 1;
  metrics::DiscriminatorKind discriminator =
      metrics::DiscriminatorKind::kRouge12Mean;
  bool rank_loss_normalize = true;
  bool margin_scaled_by_rank_gap = false;
  // Multiplies the ranking term before it joins the BCE term.
  double rank_weight = 20.0;
  // Warmup of the inverse-square-root learning-rate schedule and a
  // multiplier on it.
  int lr_warmup = 300;
  double lr_scale = 0.3;
  // Cap on positives produced by the greedy oracle labeler.
  int label_max_sents = 3;
  // 0 disables periodic checkpoints.
  int checkpoint_every = 0;
};

void ValidateTrainConfig(const TrainConfig& config);

// Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps].
Tensor BceLoss(const Tensor& probs, std::span<const int> labels,
               double eps = 1e-7);

struct RankingLossOptions {
  double margin = 0.01;
  bool normalize = true;
  bool scaled_by_rank_gap = false;
};

struct RankingLossResult {
  Tensor loss;  // rank-0
  std::size_t pairs = 0;
  // Set when fewer than two candidates were given; `loss` is then 0.
  bool skipped = false;
};

// Pairwise hinge over cosines to the anchor. `ranked` is ordered best first.
RankingLossResult RankingLoss(const Tensor& anchor,
                              std::span<const Tensor> ranked,
                              const RankingLossOptions& options);
// Same loss given the cosines directly, as a vector [m].
RankingLossResult RankingLossFromCosines(const Tensor& cosines,
                                         const RankingLossOptions& options);

struct StepReport {
  std::int64_t step = 0;
  double l_sum = 0.0;
  double l_rank = 0.0;
  double total = 0.0;
  // Mean candidates per document in the batch (0 when ranking is off).
  double n_cands = 0.0;
  double ms = 0.0;
  // Some document in the batch had too few sentences to rank.
  bool degenerate = false;
  bool rank_active = false;
};

enum class StepMode { kBceOnly, kOnline, kOffline };

// Cached candidate pools of the offline regime: index sets with ranks,
// keyed by document id.
using CandidateCache =
    std::unordered_map<std::string, std::vector<cand::Candidate>>;

// Builds pools from the frozen `model` for every document.
CandidateCache BuildCandidateCache(const model::ExtractiveModel& model,
                                   std::span<const corpus::Document> docs,
                                   const cand::CandidateSpec& spec,
                                   metrics::DiscriminatorKind kind);

// Per-document losses of one training step, without the optimizer. Exposed
// for gradient checks.
struct DocLoss {
  Tensor total;
  Tensor l_sum;
  Tensor l_rank;
  std::size_t n_cands = 0;
  bool degenerate = false;
};

DocLoss ComputeDocLoss(const model::ExtractiveModel& model,
                       const corpus::Document& doc,
                       std::span<const int> labels, StepMode mode,
                       const TrainConfig& config,
                       const cand::CandidateSpec& spec,
                       const CandidateCache* cache);

// Adam plus schedule state for one model. Copyable so that a run can branch
// after a shared warmup.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const cand::CandidateSpec& spec,
          std::span<const corpus::Document> docs);

  StepReport Step(model::ExtractiveModel& model, StepMode mode,
                  const CandidateCache* cache = nullptr);
  // Runs `steps` steps and returns their reports.
  std::vector<StepReport> Run(model::ExtractiveModel& model, int steps,
                              StepMode mode, const CandidateCache* cache,
                              const std::function<void(const StepReport&)>& on_step = {});

  std::int64_t step() const { return step_; }
  const std::vector<int>& labels(std::size_t doc_index) const {
    return labels_[doc_index];
  }

 private:
  std::vector<std::size_t> NextBatch();

  TrainConfig config_;
  cand::CandidateSpec spec_;
  std::span<const corpus::Document> docs_;
  std::vector<std::vector<int>> labels_;
  ad::AdamState adam_;
  std::int64_t step_ = 0;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

enum class Regime { kOnline, kNaive, kBceOnly };

std::string_view ToString(Regime regime);

// Full schedule: BCE warmup, then the combined phase of the regime.
std::vector<StepReport> TrainExtractive(
    model::ExtractiveModel& model, std::span<const corpus::Document> docs,
    const TrainConfig& config, const cand::CandidateSpec& spec, Regime regime,
    const std::function<void(const StepReport&)>& on_step = {});

void WriteStepReportsCsv(const std::string& path,
                         std::span<const StepReport> reports);

}  // namespace colo::train

#endif  // COLO_TRAINING_HPP_
