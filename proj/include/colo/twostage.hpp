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

// A simulated summarize-then-rerank pipeline and the harnesses that time it
// against one-stage selection: inference throughput and training cost.

#ifndef COLO_TWOSTAGE_HPP_
#define COLO_TWOSTAGE_HPP_

#include <memory>
#include <string>
#include <vector>

#include "colo/candidates.hpp"
#include "colo/encoder.hpp"
#include "colo/training.hpp"

namespace colo::twostage {

using ad::Tensor;

struct RerankerConfig {
  model::EncoderConfig encoder;
  // Candidate inputs are cut to this many tokens.
  int cand_len_cap = 300;
};

// Default reranker config for a generator: same architecture, room for the
// capped candidate inputs.
RerankerConfig DefaultRerankerConfig(const model::EncoderConfig& generator);

// Separate encoder with its own parameters. Both documents and candidates
// are read out at position 0.
class Reranker {
 public:
  Reranker(const RerankerConfig& config, std::uint64_t seed);
  Reranker(const Reranker&) = delete;
  Reranker& operator=(const Reranker&) = delete;

  corpus::ModelInput DocumentInput(const corpus::Document& doc) const;
  // <doc> (<cls> sentence <sep>)* over the selected sentences, hard-cut at
  // cand_len_cap tokens.
  corpus::ModelInput CandidateInput(const corpus::Document& doc,
                                    std::span<const int> indices) const;
  Tensor Encode(const corpus::ModelInput& input) const;

  const RerankerConfig& config() const { return config_; }
  model::ParameterSet& params() { return params_; }

  void Save(const std::string& path) const;
  static std::unique_ptr<Reranker> Load(const std::string& path);

 private:
  RerankerConfig config_;
  std::uint64_t seed_;
  model::ParameterSet params_;
  model::Encoder encoder_;
};

struct RerankResult {
  cand::Candidate chosen;
  // Reranker forward passes (documents plus candidates).
  std::size_t reranker_invocations = 0;
  // Tokens read by the reranker.
  std::size_t reranker_tokens = 0;
  // Tokens of the generator's single pass.
  std::size_t generator_tokens = 0;
};

// The generator proposes the pool (clip and enumerate, optionally truncated
// to `max_candidates`), the reranker re-encodes the document and every
// candidate, and the highest cosine wins (ties to smaller indices).
RerankResult RerankTwoStage(const model::ExtractiveModel& generator,
                            const Reranker& reranker,
                            const corpus::Document& doc,
                            const cand::CandidateSpec& spec,
                            std::size_t max_candidates = 0);

// Ranking-loss training of the reranker on cached offline candidates.
std::vector<train::StepReport> TrainReranker(
    Reranker& reranker, std::span<const corpus::Document> docs,
    const train::CandidateCache& cache, const train::TrainConfig& config,
    int steps);

// ---------------------------------------------------------------------------
// Throughput benchmark

enum class BatchMode { kOne, kMax };

std::string_view ToString(BatchMode mode);
BatchMode ParseBatchMode(std::string_view name);

struct BenchConfig {
  std::vector<int> sizes = {4, 8, 16, 20, 32};
  BatchMode batch_mode = BatchMode::kOne;
  int repetitions = 3;
  // Documents processed untimed before each repetition.
  int warmup_docs = 2;
  // Live-tensor byte budget that sizes the batch in kMax mode.
  std::size_t memory_budget_bytes = std::size_t{256} << 20;
  // Enumeration used to draw |C| candidates.
  cand::CandidateSpec pool = {{2, 3}, 8};
  int threads = 1;
};

void ValidateBenchConfig(const BenchConfig& config);

struct BenchRow {
  std::string system;
  int candidates = 0;
  double samples_per_second = 0.0;
  double tokens_per_doc = 0.0;
  double encoder_invocations_per_doc = 0.0;
  std::size_t peak_bytes = 0;
  BatchMode batch_mode = BatchMode::kOne;
  int batch = 1;
};

// Rows for systems "baseline" (classifier only, no ranking), "colo" and
// "two-stage", for every size in config.sizes.
std::vector<BenchRow> Benchmark(const model::ExtractiveModel& generator,
                                const Reranker& reranker,
                                std::span<const corpus::Document> docs,
                                const BenchConfig& config);

void WriteBenchCsv(const std::string& path, std::span<const BenchRow> rows);

// ---------------------------------------------------------------------------
// Training cost

struct CostConfig {
  train::TrainConfig train;
  cand::CandidateSpec spec;
  int reranker_steps = 100;
};

struct CostRow {
  std::string system;
  std::string stage;
  // Negative for stages a pipeline does not have.
  double seconds = -1.0;
};

// Times the two-stage pipeline (generator training, offline preprocessing,
// reranker training) and the single CoLo run on the same data.
std::vector<CostRow> TrainingCostReport(const model::EncoderConfig& encoder,
                                        std::span<const corpus::Document> docs,
                                        const CostConfig& config,
                                        std::uint64_t seed);

// Wall time of offline preprocessing alone (pool generation, scoring and
// sorting) for `docs` under `generator`.
double PreprocessSeconds(const model::ExtractiveModel& generator,
                         std::span<const corpus::Document> docs,
                         const cand::CandidateSpec& spec,
                         metrics::DiscriminatorKind kind);

void WriteCostCsv(const std::string& path, std::span<const CostRow> rows);

}  // namespace colo::twostage

#endif  // COLO_TWOSTAGE_HPP_
