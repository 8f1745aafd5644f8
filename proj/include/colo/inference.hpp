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

// Candidate selection at inference time, the extractive baselines, corpus
// evaluation, and the candidate-embedding projection used for plots.

#ifndef COLO_INFERENCE_HPP_
#define COLO_INFERENCE_HPP_

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colo/candidates.hpp"
#include "colo/encoder.hpp"
#include "colo/metrics.hpp"

namespace colo::twostage {
class Reranker;
}  // namespace colo::twostage

namespace colo::infer {

enum class SystemKind { kColoExt, kClassifierTopK, kLead, kOracleSet, kTwoStage };

// "colo", "topk", "lead", "oracle", "twostage".
std::string_view ToString(SystemKind kind);
SystemKind ParseSystem(std::string_view name);
// Comma-separated list; duplicates are dropped, order kept.
std::vector<SystemKind> ParseSystems(std::string_view list);

// Position of the largest cosine. Ties go to the candidate with the
// lexicographically smaller index list.
std::size_t ArgmaxCosine(std::span<const double> cosines,
                         std::span<const cand::Candidate> cands);

// Cosine of each candidate's mean sentence vector to the document vector.
std::vector<double> CandidateCosines(const model::EncoderOutput& out,
                                     std::span<const cand::Candidate> cands);

// Builds the pool exactly as training does and returns the candidate whose
// vector is closest to the document vector.
cand::Candidate SelectColo(const model::ExtractiveModel& model,
                           const corpus::Document& doc,
                           const cand::CandidateSpec& spec);

// The k most probable sentences, indices ascending.
cand::Candidate SelectTopK(const model::ExtractiveModel& model,
                           const corpus::Document& doc, int k);

struct EvalConfig {
  cand::CandidateSpec spec;
  int topk_k = 3;
  int lead_k = 3;
  metrics::DiscriminatorKind discriminator =
      metrics::DiscriminatorKind::kRouge12Mean;
  // Search every subset of the document (over the candidate sizes plus the
  // sizes the other systems can emit) instead of the model's pool only.
  bool oracle_full_space = true;
  std::uint64_t seed = 1;
  // 0 uses WorkerThreads().
  int threads = 0;
};

struct EvalRow {
  std::string system;
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
  double js2 = 0.0;
  std::size_t docs = 0;
  std::uint64_t seed = 0;

  double rouge12() const { return 0.5 * (r1 + r2); }
};

// Optional per-document hook: called with (system, doc index, selection).
using SelectionSink = std::function<void(SystemKind, std::size_t,
                                         const cand::Candidate&)>;

// Corpus means per system. `model` is needed by colo, topk, twostage and
// the pool-only oracle; `reranker` by twostage.
std::vector<EvalRow> Evaluate(std::span<const corpus::Document> docs,
                              std::span<const SystemKind> systems,
                              const model::ExtractiveModel* model,
                              const twostage::Reranker* reranker,
                              const EvalConfig& config,
                              const SelectionSink& sink = {});

void WriteEvalCsv(const std::string& path, std::span<const EvalRow> rows);

// ---------------------------------------------------------------------------
// Candidate-embedding projection

struct VizRow {
  std::string doc_id;
  bool anchor = false;
  std::vector<int> indices;
  // Discriminator rank (1 = best); 0 for the anchor.
  int rank = 0;
  // Rank tercile 1 (best) .. 3; 0 for the anchor.
  int group = 0;
  double x = 0.0;
  double y = 0.0;
  // Cosine to the anchor (1 for the anchor itself).
  double cos = 1.0;
  // High-dimensional vector, filled only when requested.
  std::vector<double> raw;
};

// Anchor row first, then one row per pool candidate in rank order. Points
// are projected onto their first two principal axes.
std::vector<VizRow> ExportCandidateEmbeddings(
    const model::ExtractiveModel& model, const corpus::Document& doc,
    const cand::CandidateSpec& spec, metrics::DiscriminatorKind kind,
    bool keep_raw = false);

// Rank tercile of rank r among m candidates, 1..3.
int RankTercile(int rank, std::size_t m);

struct TercileCosines {
  double top = 0.0;
  double bottom = 0.0;
};
TercileCosines MeanTercileCosines(std::span<const VizRow> rows);

void WriteVizCsv(const std::string& path, std::span<const VizRow> rows,
                 bool with_raw = false);
// Standalone scatter plot, one color per tercile, anchors as stars.
void WriteVizSvg(const std::string& path, std::span<const VizRow> rows);

}  // namespace colo::infer

#endif  // COLO_INFERENCE_HPP_
