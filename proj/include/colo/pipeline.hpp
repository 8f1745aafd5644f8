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

// End-to-end runs behind the command-line subcommands. Each writes its
// outputs plus resolved.cfg under the output directory.

#ifndef COLO_PIPELINE_HPP_
#define COLO_PIPELINE_HPP_

#include <memory>
#include <string>
#include <vector>

#include "colo/config.hpp"
#include "colo/inference.hpp"

namespace colo::pipeline {

struct Dataset {
  corpus::Vocabulary vocab;
  std::vector<corpus::Document> train;
  std::vector<corpus::Document> test;
};

// Synthetic corpus from the [corpus] section; the last test_docs documents
// are held out.
Dataset SynthDataset(const config::RunConfig& config);
// train.jsonl and test.jsonl from `dir`, with vocab.txt if present (else a
// vocabulary is built from the training split). An empty `dir`
// synthesizes instead.
Dataset LoadDataset(const config::RunConfig& config, const std::string& dir);
void WriteDataset(const Dataset& data, const std::string& dir);

model::EncoderConfig EncoderFor(const config::RunConfig& config,
                                const corpus::Vocabulary& vocab);
// Candidate sizes with "auto" resolved against the training split.
cand::CandidateSpec ResolveSpec(const config::RunConfig& config,
                                const Dataset& data);
infer::EvalConfig ResolveEval(const config::RunConfig& config,
                              const Dataset& data);

void RunSynth(const config::ConfigValues& values, const std::string& out_dir);

// Regime online ("train-ext"), naive ("train-naive") or bce. Writes
// model.ckpt and train_log.csv.
void RunTrainExtractive(const config::ConfigValues& values,
                        const std::string& data_dir, const std::string& out_dir,
                        train::Regime regime);

// Writes eval.csv. `reranker_checkpoint` may be empty; the twostage system
// then uses a freshly initialized reranker.
std::vector<infer::EvalRow> RunEval(const config::ConfigValues& values,
                                    const std::string& checkpoint,
                                    const std::string& data_dir,
                                    const std::string& out_dir,
                                    const std::string& systems,
                                    const std::string& reranker_checkpoint = "");

// Writes abs_model.ckpt and abs_train_log.csv.
void RunTrainAbstractive(const config::ConfigValues& values,
                         const std::string& data_dir, const std::string& out_dir);
// Writes eval_abs.csv and decoded.jsonl.
std::vector<abs::AbsEvalRow> RunEvalAbstractive(const config::ConfigValues& values,
                                                const std::string& checkpoint,
                                                const std::string& data_dir,
                                                const std::string& out_dir);

// Writes bench.csv. Without a checkpoint the generator is freshly
// initialized; timing does not depend on training.
std::vector<twostage::BenchRow> RunBench(const config::ConfigValues& values,
                                         const std::string& checkpoint,
                                         const std::string& data_dir,
                                         const std::string& out_dir);

// Writes cost.csv.
std::vector<twostage::CostRow> RunCost(const config::ConfigValues& values,
                                       const std::string& data_dir,
                                       const std::string& out_dir);

struct VizSummary {
  std::size_t docs = 0;
  // Documents whose best tercile sits closer to the anchor than the worst.
  std::size_t ordered = 0;
};

// Writes viz.csv, viz_summary.csv and optionally viz.svg (first document).
VizSummary RunViz(const config::ConfigValues& values,
                  const std::string& checkpoint, const std::string& data_dir,
                  const std::string& out_dir, bool svg, bool raw);

// Line-aligned whitespace-tokenized hypothesis and reference files. Writes
// score.csv with one row per line and a final mean row.
metrics::ScoreRow RunScore(const std::string& hyp_path,
                           const std::string& ref_path,
                           const std::string& out_dir);

}  // namespace colo::pipeline

#endif  // COLO_PIPELINE_HPP_
