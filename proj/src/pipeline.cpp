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

#include "colo/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "colo/common.hpp"

namespace colo::pipeline {

namespace fs = std::filesystem;

namespace {

std::string Join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void PrepareOut(const config::ConfigValues& values, const std::string& out_dir) {
  if (out_dir.empty()) Fail(ErrorCode::kInvalidArgument, "missing output directory");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create " + out_dir + ": " + ec.message());
  config::WriteResolved(Join(out_dir, "resolved.cfg"), values);
}

void RequireCheckpoint(const std::string& path) {
  if (path.empty()) Fail(ErrorCode::kInvalidArgument, "missing --checkpoint");
}

}  // namespace

Dataset SynthDataset(const config::RunConfig& config) {
  auto corpus = corpus::SynthesizeCorpus(config.synth, config.seed);
  Dataset data;
  data.vocab = std::move(corpus.vocab);
  const std::size_t split = corpus.docs.size() - config.test_docs;
  data.train.assign(std::make_move_iterator(corpus.docs.begin()),
                    std::make_move_iterator(corpus.docs.begin() + split));
  data.test.assign(std::make_move_iterator(corpus.docs.begin() + split),
                   std::make_move_iterator(corpus.docs.end()));
  return data;
}

Dataset LoadDataset(const config::RunConfig& config, const std::string& dir) {
  if (dir.empty()) return SynthDataset(config);
  Dataset data;
  const std::string train_path = Join(dir, "train.jsonl");
  const std::string test_path = Join(dir, "test.jsonl");
  const std::string vocab_path = Join(dir, "vocab.txt");
  auto train_raw = corpus::ReadJsonl(train_path);
  if (fs::exists(vocab_path)) {
    data.vocab = corpus::ReadVocabulary(vocab_path);
  } else {
    data.vocab = corpus::BuildVocabulary(train_raw, config.max_vocab);
  }
  data.train = corpus::TokenizeRecords(train_raw, data.vocab);
  if (fs::exists(test_path)) data.test = corpus::LoadJsonl(test_path, data.vocab);
  corpus::ValidateDataset(data.train, data.vocab);
  if (!data.test.empty()) corpus::ValidateDataset(data.test, data.vocab);
  return data;
}

void WriteDataset(const Dataset& data, const std::string& dir) {
  corpus::WriteJsonl(Join(dir, "train.jsonl"), data.train);
  corpus::WriteJsonl(Join(dir, "test.jsonl"), data.test);
  corpus::WriteVocabulary(Join(dir, "vocab.txt"), data.vocab);
}

model::EncoderConfig EncoderFor(const config::RunConfig& config,
                                const corpus::Vocabulary& vocab) {
  model::EncoderConfig e = config.encoder;
  e.vocab_size = static_cast<int>(vocab.size());
  return e;
}

cand::CandidateSpec ResolveSpec(const config::RunConfig& config,
                                const Dataset& data) {
  cand::CandidateSpec spec = config.spec;
  if (config.sizes_auto) spec.sizes = cand::SizesFromSummaryCounts(data.train);
  cand::ValidateCandidateSpec(spec);
  return spec;
}

infer::EvalConfig ResolveEval(const config::RunConfig& config,
                              const Dataset& data) {
  infer::EvalConfig e;
  e.spec = ResolveSpec(config, data);
  e.topk_k = config.topk_k > 0 ? config.topk_k
                               : cand::TopKFromSummaryCounts(data.train);
  e.lead_k = config.lead_k > 0 ? config.lead_k : e.topk_k;
  e.discriminator = config.discriminator;
  e.oracle_full_space = config.oracle_full_space;
  e.seed = config.seed;
  e.threads = config.threads;
  return e;
}

void RunSynth(const config::ConfigValues& values, const std::string& out_dir) {
  auto config = config::Resolve(values);
  PrepareOut(values, out_dir);
  WriteDataset(SynthDataset(config), out_dir);
}

void RunTrainExtractive(const config::ConfigValues& values,
                        const std::string& data_dir, const std::string& out_dir,
                        train::Regime regime) {
  auto config = config::Resolve(values);
  PrepareOut(values, out_dir);
  Dataset data = LoadDataset(config, data_dir);
  auto spec = ResolveSpec(config, data);
  model::ExtractiveModel model(EncoderFor(config, data.vocab), config.seed);
  std::string meta = "{\"regime\":\"" + std::string(train::ToString(regime)) + "\"}";
  std::vector<train::StepReport> reports;
  std::ofstream log(Join(out_dir, "train_log.csv"), std::ios::trunc);
  if (!log) Fail(ErrorCode::kIo, "cannot write train_log.csv");
  log << "step,l_sum,l_rank,total,n_cands,ms\n";
  char buf[256];
  const int every = config.train.checkpoint_every;
  train::TrainExtractive(model, data.train, config.train, spec, regime,
                         [&](const train::StepReport& r) {
                           std::snprintf(buf, sizeof(buf),
                                         "%lld,%.6f,%.6f,%.6f,%.2f,%.3f\n",
                                         static_cast<long long>(r.step), r.l_sum,
                                         r.l_rank, r.total, r.n_cands, r.ms);
                           log << buf;
                           if (every > 0 && r.step % every == 0) {
                             model.Save(Join(out_dir, "model.ckpt"), meta);
                           }
                         });
  model.Save(Join(out_dir, "model.ckpt"), meta);
}

std::vector<infer::EvalRow> RunEval(const config::ConfigValues& values,
                                    const std::string& checkpoint,
                                    const std::string& data_dir,
                                    const std::string& out_dir,
                                    const std::string& systems,
                                    const std::string& reranker_checkpoint) {
  RequireCheckpoint(checkpoint);
  auto config = config::Resolve(values);
  auto kinds = infer::ParseSystems(systems);
  PrepareOut(values, out_dir);
  Dataset data = LoadDataset(config, data_dir);
  if (data.test.empty()) Fail(ErrorCode::kInvalidArgument, "no test documents");
  auto model = model::ExtractiveModel::Load(checkpoint);
  std::unique_ptr<twostage::Reranker> reranker;
  if (std::find(kinds.begin(), kinds.end(), infer::SystemKind::kTwoStage) !=
      kinds.end()) {
    if (!reranker_checkpoint.empty()) {
      reranker = twostage::Reranker::Load(reranker_checkpoint);
    } else {
      auto rc = twostage::DefaultRerankerConfig(model->config());
      rc.cand_len_cap = config.cand_len_cap;
      rc.encoder.max_len = std::max(rc.encoder.max_len, rc.cand_len_cap);
      reranker = std::make_unique<twostage::Reranker>(rc, config.seed + 1);
    }
  }
  auto rows = infer::Evaluate(data.test, kinds, model.get(), reranker.get(),
                              ResolveEval(config, data));
  infer::WriteEvalCsv(Join(out_dir, "eval.csv"), rows);
  return rows;
}

void RunTrainAbstractive(const config::ConfigValues& values,
                         const std::string& data_dir, const std::string& out_dir) {
  auto config = config::Resolve(values);
  PrepareOut(values, out_dir);
  Dataset data = LoadDataset(config, data_dir);
  abs::Seq2SeqConfig sc = config.abs;
  sc.encoder.vocab_size = static_cast<int>(data.vocab.size());
  abs::Seq2SeqModel model(sc, config.seed);
  std::vector<train::StepReport> reports = abs::TrainAbstractive(
      model, data.train, config.abs_train);
  train::WriteStepReportsCsv(Join(out_dir, "abs_train_log.csv"), reports);
  model.Save(Join(out_dir, "abs_model.ckpt"));
}

std::vector<abs::AbsEvalRow> RunEvalAbstractive(const config::ConfigValues& values,
                                                const std::string& checkpoint,
                                                const std::string& data_dir,
                                                const std::string& out_dir) {
  RequireCheckpoint(checkpoint);
  auto config = config::Resolve(values);
  PrepareOut(values, out_dir);
  Dataset data = LoadDataset(config, data_dir);
  auto model = abs::Seq2SeqModel::Load(checkpoint);
  const std::size_t n =
      std::min<std::size_t>(data.test.size(), config.abs_eval_docs);
  std::vector<abs::AbsDecoded> decoded;
  auto rows = abs::EvaluateAbstractive(
      *model, std::span(data.test).subspan(0, n), config.threads, &decoded);
  abs::WriteAbsEvalCsv(Join(out_dir, "eval_abs.csv"), rows);
  abs::WriteDecodedJsonl(Join(out_dir, "decoded.jsonl"), decoded);
  return rows;
}

namespace {

twostage::RerankerConfig RerankerConfigFor(const config::RunConfig& config,
                                           const model::EncoderConfig& encoder) {
  auto rc = twostage::DefaultRerankerConfig(encoder);
  rc.cand_len_cap = config.cand_len_cap;
  rc.encoder.max_len = std::max(encoder.max_len, config.cand_len_cap);
  return rc;
}

}  // namespace

std::vector<twostage::BenchRow> RunBench(const config::ConfigValues& values,
                                         const std::string& checkpoint,
                                         const std::string& data_dir,
                                         const std::string& out_dir) {
  auto config = config::Resolve(values);
  PrepareOut(values, out_dir);
  Dataset data = LoadDataset(config, data_dir);
  const auto& pool = data.test.empty() ? data.train : data.test;
  const std::size_t n = std::min<std::size_t>(pool.size(), config.bench_docs);
  std::unique_ptr<model::ExtractiveModel> generator;
  if (!checkpoint.empty()) {
    generator = model::ExtractiveModel::Load(checkpoint);
  } else {
    generator = std::make_unique<model::ExtractiveModel>(
        EncoderFor(config, data.vocab), config.seed);
  }
  twostage::Reranker reranker(RerankerConfigFor(config, generator->config()),
                              config.seed + 1);
  auto rows = twostage::Benchmark(*generator, reranker,
                                  std::span(pool).subspan(0, n), config.bench);
  twostage::WriteBenchCsv(Join(out_dir, "bench.csv"), rows);
  return rows;
}

std::vector<twostage::CostRow> RunCost(const config::ConfigValues& values,
                                       const std::string& data_dir,
                                       const std::string& out_dir) {
  auto config = config::Resolve(values);
  PrepareOut(values, out_dir);
  Dataset data = LoadDataset(config, data_dir);
  twostage::CostConfig cc;
  cc.train = config.train;
  cc.spec = ResolveSpec(config, data);
  cc.reranker_steps = config.reranker_steps;
  auto rows = twostage::TrainingCostReport(EncoderFor(config, data.vocab),
                                           data.train, cc, config.seed);
  twostage::WriteCostCsv(Join(out_dir, "cost.csv"), rows);
  return rows;
}

VizSummary RunViz(const config::ConfigValues& values,
                  const std::string& checkpoint, const std::string& data_dir,
                  const std::string& out_dir, bool svg, bool raw) {
  RequireCheckpoint(checkpoint);
  auto config = config::Resolve(values);
  PrepareOut(values, out_dir);
  Dataset data = LoadDataset(config, data_dir);
  auto model = model::ExtractiveModel::Load(checkpoint);
  const auto& docs = data.test.empty() ? data.train : data.test;
  const std::size_t n = std::min<std::size_t>(docs.size(), config.viz_docs);
  std::vector<infer::VizRow> all;
  std::vector<infer::VizRow> first;
  VizSummary summary;
  for (std::size_t i = 0; i < n; ++i) {
    auto rows = infer::ExportCandidateEmbeddings(*model, docs[i], config.viz_spec,
                                                 config.discriminator, raw);
    auto t = infer::MeanTercileCosines(rows);
    ++summary.docs;
    if (t.top > t.bottom) ++summary.ordered;
    if (first.empty()) first = rows;
    all.insert(all.end(), rows.begin(), rows.end());
  }
  infer::WriteVizCsv(Join(out_dir, "viz.csv"), all, raw);
  if (svg && !first.empty()) infer::WriteVizSvg(Join(out_dir, "viz.svg"), first);
  std::ofstream os(Join(out_dir, "viz_summary.csv"), std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write viz_summary.csv");
  os << "docs,ordered,fraction\n"
     << summary.docs << ',' << summary.ordered << ','
     << (summary.docs ? static_cast<double>(summary.ordered) / summary.docs : 0.0)
     << '\n';
  return summary;
}

metrics::ScoreRow RunScore(const std::string& hyp_path,
                           const std::string& ref_path,
                           const std::string& out_dir) {
  auto read_lines = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
  };
  auto hyps = read_lines(hyp_path);
  auto refs = read_lines(ref_path);
  if (hyps.size() != refs.size()) {
    Fail(ErrorCode::kInvalidArgument,
         "score: " + std::to_string(hyps.size()) + " hypotheses vs " +
             std::to_string(refs.size()) + " references");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create " + out_dir);
  // Token identity is all the metrics need, so one growing vocabulary works.
  corpus::Vocabulary vocab;
  auto ids = [&](const std::string& text) {
    corpus::TokenSeq out;
    for (const auto& tok : corpus::SplitTokens(text)) out.push_back(vocab.Add(tok));
    return out;
  };
  std::ofstream os(Join(out_dir, "score.csv"), std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write score.csv");
  os << "line,r1,r2,rl,js2\n";
  metrics::ScoreRow mean;
  char buf[160];
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    auto s = metrics::ScoreAll(ids(hyps[i]), ids(refs[i]));
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.6f\n", i + 1, s.r1,
                  s.r2, s.rl, s.js2);
    os << buf;
    mean.r1 += s.r1;
    mean.r2 += s.r2;
    mean.rl += s.rl;
    mean.js2 += s.js2;
  }
  if (!hyps.empty()) {
    const double inv = 1.0 / static_cast<double>(hyps.size());
    mean.r1 *= inv;
    mean.r2 *= inv;
    mean.rl *= inv;
    mean.js2 *= inv;
  }
  std::snprintf(buf, sizeof(buf), "mean,%.6f,%.6f,%.6f,%.6f\n", mean.r1, mean.r2,
                mean.rl, mean.js2);
  os << buf;
  return mean;
}

}  // namespace colo::pipeline
