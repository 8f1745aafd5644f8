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

#include "colo/twostage.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "colo/common.hpp"
#include "colo/inference.hpp"
#include "json.hpp"

namespace colo::twostage {

RerankerConfig DefaultRerankerConfig(const model::EncoderConfig& generator) {
  RerankerConfig c;
  c.encoder = generator;
  c.encoder.max_len = std::max(generator.max_len, c.cand_len_cap);
  return c;
}

Reranker::Reranker(const RerankerConfig& config, std::uint64_t seed)
    : config_(config),
      seed_(seed),
      params_(seed),
      encoder_(config.encoder, params_, "reranker") {
  if (config.cand_len_cap < 2) {
    Fail(ErrorCode::kInvalidArgument, "reranker: cand_len_cap must be >= 2");
  }
  if (config.cand_len_cap > config.encoder.max_len) {
    Fail(ErrorCode::kInvalidArgument,
         "reranker: cand_len_cap exceeds encoder max_len");
  }
}

corpus::ModelInput Reranker::DocumentInput(const corpus::Document& doc) const {
  return corpus::BuildModelInput(doc, config_.encoder.max_len);
}

corpus::ModelInput Reranker::CandidateInput(const corpus::Document& doc,
                                            std::span<const int> indices) const {
  const std::size_t cap = config_.cand_len_cap;
  corpus::ModelInput input;
  input.token_ids.push_back(corpus::special::kDoc);
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= doc.sentences.size()) {
      Fail(ErrorCode::kInvalidArgument, "reranker: sentence index out of range");
    }
    if (input.token_ids.size() >= cap) break;
    const int start = static_cast<int>(input.token_ids.size());
    input.cls_pos.push_back(start);
    input.token_ids.push_back(corpus::special::kCls);
    const auto& s = doc.sentences[i];
    input.token_ids.insert(input.token_ids.end(), s.begin(), s.end());
    input.token_ids.push_back(corpus::special::kSep);
    if (input.token_ids.size() > cap) input.token_ids.resize(cap);
    input.sent_spans.emplace_back(start,
                                  static_cast<int>(input.token_ids.size()));
  }
  return input;
}

Tensor Reranker::Encode(const corpus::ModelInput& input) const {
  return ad::Row(encoder_.Forward(input), 0);
}

void Reranker::Save(const std::string& path) const {
  nlohmann::json meta;
  meta["kind"] = "reranker";
  meta["seed"] = seed_;
  meta["cand_len_cap"] = config_.cand_len_cap;
  meta["encoder"] = nlohmann::json::parse(model::EncoderConfigToJson(config_.encoder));
  ad::Checkpoint ckpt;
  ckpt.meta_json = meta.dump();
  ckpt.tensors = params_.named();
  ad::SaveCheckpoint(path, ckpt);
}

std::unique_ptr<Reranker> Reranker::Load(const std::string& path) {
  ad::Checkpoint ckpt = ad::LoadCheckpoint(path);
  nlohmann::json meta = nlohmann::json::parse(ckpt.meta_json);
  if (meta.value("kind", "") != "reranker") {
    Fail(ErrorCode::kState, "checkpoint " + path + " is not a reranker");
  }
  RerankerConfig config;
  config.encoder = model::EncoderConfigFromJson(meta.at("encoder").dump());
  config.cand_len_cap = meta.value("cand_len_cap", 300);
  auto r = std::make_unique<Reranker>(config, meta.value("seed", std::uint64_t{0}));
  ad::RestoreTensors(ckpt, r->params_.named());
  return r;
}

namespace {

// Shared by selection and the benchmark. Tensors that a batched run keeps
// alive are appended to `keep` when given.
RerankResult RerankImpl(const model::ExtractiveModel& generator,
                        const Reranker& reranker, const corpus::Document& doc,
                        const cand::CandidateSpec& spec,
                        std::size_t max_candidates, std::vector<Tensor>* keep) {
  ad::NoGradGuard no_grad;
  RerankResult result;
  auto gen_input = generator.BuildInput(doc);
  result.generator_tokens = gen_input.token_ids.size();
  auto out = generator.Encode(gen_input);
  auto probs = out.probs.data();
  auto pool = cand::CandidatePool({probs.begin(), probs.end()}, spec);
  if (max_candidates > 0 && pool.size() > max_candidates) {
    pool.resize(max_candidates);
  }
  auto doc_input = reranker.DocumentInput(doc);
  result.reranker_tokens += doc_input.token_ids.size();
  Tensor z_doc = reranker.Encode(doc_input);
  ++result.reranker_invocations;
  std::vector<double> cos(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto cin = reranker.CandidateInput(doc, pool[i].indices);
    result.reranker_tokens += cin.token_ids.size();
    Tensor z_c = reranker.Encode(cin);
    ++result.reranker_invocations;
    cos[i] = ad::CosineSimilarity(z_doc, z_c).item();
    if (keep) keep->push_back(z_c);
  }
  if (keep) {
    keep->push_back(out.hidden);
    keep->push_back(z_doc);
  }
  result.chosen = pool[infer::ArgmaxCosine(cos, pool)];
  return result;
}

}  // namespace

RerankResult RerankTwoStage(const model::ExtractiveModel& generator,
                            const Reranker& reranker,
                            const corpus::Document& doc,
                            const cand::CandidateSpec& spec,
                            std::size_t max_candidates) {
  return RerankImpl(generator, reranker, doc, spec, max_candidates, nullptr);
}

std::vector<train::StepReport> TrainReranker(
    Reranker& reranker, std::span<const corpus::Document> docs,
    const train::CandidateCache& cache, const train::TrainConfig& config,
    int steps) {
  train::ValidateTrainConfig(config);
  if (docs.empty()) Fail(ErrorCode::kInvalidArgument, "training set is empty");
  std::mt19937_64 rng(config.seed ^ 0x5eedULL);
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  ad::AdamState adam;
  train::RankingLossOptions opts{config.margin, config.rank_loss_normalize,
                                 config.margin_scaled_by_rank_gap};
  std::vector<train::StepReport> reports;
  for (int s = 1; s <= steps; ++s) {
    const double start = NowMs();
    train::StepReport report;
    report.step = s;
    report.rank_active = true;
    if (cursor == order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const auto& doc = docs[order[cursor++]];
    auto it = cache.find(doc.id);
    if (it == cache.end()) {
      Fail(ErrorCode::kState, "candidate cache miss for document " + doc.id);
    }
    const auto& pool = it->second;
    report.n_cands = static_cast<double>(pool.size());
    ad::Tape::Current().Clear();
    reranker.params().ZeroGrad();
    if (pool.size() >= 2) {
      Tensor z_doc = reranker.Encode(reranker.DocumentInput(doc));
      std::vector<Tensor> ranked;
      ranked.reserve(pool.size());
      for (const auto& c : pool) {
        ranked.push_back(reranker.Encode(reranker.CandidateInput(doc, c.indices)));
      }
      auto rl = train::RankingLoss(z_doc, ranked, opts);
      report.l_rank = rl.loss.item();
      report.total = report.l_rank;
      ad::Backward(rl.loss);
      auto params = reranker.params().tensors();
      const double lr = config.lr_scale *
                        ad::TransformerLearningRate(reranker.config().encoder.d_model,
                                                    s, config.lr_warmup);
      ad::AdamStep(params, adam, lr);
    } else {
      report.degenerate = true;
    }
    report.ms = NowMs() - start;
    reports.push_back(report);
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Benchmark

std::string_view ToString(BatchMode mode) {
  return mode == BatchMode::kMax ? "max" : "one";
}

BatchMode ParseBatchMode(std::string_view name) {
  if (name == "one") return BatchMode::kOne;
  if (name == "max") return BatchMode::kMax;
  Fail(ErrorCode::kInvalidArgument,
       "unknown batch mode '" + std::string(name) + "' (expected one or max)");
}

void ValidateBenchConfig(const BenchConfig& c) {
  if (c.sizes.empty()) Fail(ErrorCode::kInvalidArgument, "bench: no sizes");
  for (int s : c.sizes) {
    if (s < 2) Fail(ErrorCode::kInvalidArgument, "bench: candidate sizes must be >= 2");
  }
  if (c.repetitions < 1) {
    Fail(ErrorCode::kInvalidArgument, "bench: repetitions must be >= 1");
  }
  if (c.warmup_docs < 0) Fail(ErrorCode::kInvalidArgument, "bench: warmup_docs < 0");
  if (c.threads < 1) Fail(ErrorCode::kInvalidArgument, "bench: threads < 1");
  cand::ValidateCandidateSpec(c.pool);
}

namespace {

struct DocCost {
  std::size_t tokens = 0;
  std::size_t invocations = 0;
};

using SystemFn = std::function<DocCost(const corpus::Document&,
                                       std::vector<Tensor>*)>;

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

BenchRow RunSystem(const std::string& name, int c,
                   std::span<const corpus::Document> docs,
                   const BenchConfig& cfg, const SystemFn& fn) {
  BenchRow row;
  row.system = name;
  row.candidates = c;
  row.batch_mode = cfg.batch_mode;

  // Exact accounting and a per-document memory probe, untimed.
  std::size_t tokens = 0, invocations = 0;
  for (const auto& d : docs) {
    DocCost dc = fn(d, nullptr);
    tokens += dc.tokens;
    invocations += dc.invocations;
  }
  row.tokens_per_doc = static_cast<double>(tokens) / docs.size();
  row.encoder_invocations_per_doc = static_cast<double>(invocations) / docs.size();

  std::size_t batch = 1;
  if (cfg.batch_mode == BatchMode::kMax) {
    std::vector<Tensor> keep;
    const std::size_t base = ad::LiveTensorBytes();
    ad::ResetPeakTensorBytes();
    fn(docs.front(), &keep);
    const std::size_t per_doc =
        std::max<std::size_t>(1, ad::PeakTensorBytes() - base);
    batch = std::clamp<std::size_t>(cfg.memory_budget_bytes / per_doc, 1,
                                    docs.size());
  }
  row.batch = static_cast<int>(batch);

  std::vector<double> rates;
  std::size_t peak = 0;
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    for (int w = 0; w < cfg.warmup_docs; ++w) {
      fn(docs[static_cast<std::size_t>(w) % docs.size()], nullptr);
    }
    const std::size_t base = ad::LiveTensorBytes();
    ad::ResetPeakTensorBytes();
    const double start = NowMs();
    for (std::size_t b = 0; b < docs.size(); b += batch) {
      const std::size_t end = std::min(docs.size(), b + batch);
      if (cfg.batch_mode == BatchMode::kMax) {
        // Outputs of the whole batch stay alive until it completes.
        std::vector<std::vector<Tensor>> keep(end - b);
        ParallelFor(end - b, cfg.threads,
                    [&](std::size_t i) { fn(docs[b + i], &keep[i]); });
      } else {
        ParallelFor(end - b, cfg.threads,
                    [&](std::size_t i) { fn(docs[b + i], nullptr); });
      }
    }
    const double secs = std::max(1e-9, (NowMs() - start) / 1000.0);
    rates.push_back(static_cast<double>(docs.size()) / secs);
    peak = std::max(peak, ad::PeakTensorBytes() - std::min(base, ad::PeakTensorBytes()));
  }
  row.samples_per_second = Median(rates);
  row.peak_bytes = peak;
  return row;
}

}  // namespace

std::vector<BenchRow> Benchmark(const model::ExtractiveModel& generator,
                                const Reranker& reranker,
                                std::span<const corpus::Document> docs,
                                const BenchConfig& config) {
  ValidateBenchConfig(config);
  if (docs.empty()) Fail(ErrorCode::kInvalidArgument, "bench: empty dataset");
  const int topk = *std::max_element(config.pool.sizes.begin(),
                                     config.pool.sizes.end());

  std::vector<BenchRow> rows;
  for (int c : config.sizes) {
    SystemFn baseline = [&](const corpus::Document& doc,
                            std::vector<Tensor>* keep) {
      ad::NoGradGuard no_grad;
      auto input = generator.BuildInput(doc);
      auto out = generator.Encode(input);
      auto probs = out.probs.data();
      auto chosen = cand::ClipTopK({probs.begin(), probs.end()}, topk);
      (void)chosen;
      if (keep) keep->push_back(out.hidden);
      return DocCost{input.token_ids.size(), 1};
    };
    SystemFn colo = [&, c](const corpus::Document& doc,
                           std::vector<Tensor>* keep) {
      ad::NoGradGuard no_grad;
      auto input = generator.BuildInput(doc);
      auto out = generator.Encode(input);
      auto probs = out.probs.data();
      auto pool = cand::CandidatePool({probs.begin(), probs.end()}, config.pool);
      if (pool.size() > static_cast<std::size_t>(c)) pool.resize(c);
      auto cos = infer::CandidateCosines(out, pool);
      auto chosen = infer::ArgmaxCosine(cos, pool);
      (void)chosen;
      if (keep) keep->push_back(out.hidden);
      return DocCost{input.token_ids.size(), 1};
    };
    SystemFn two = [&, c](const corpus::Document& doc,
                          std::vector<Tensor>* keep) {
      auto r = RerankImpl(generator, reranker, doc, config.pool,
                          static_cast<std::size_t>(c), keep);
      return DocCost{r.reranker_tokens, r.reranker_invocations};
    };
    rows.push_back(RunSystem("baseline", c, docs, config, baseline));
    rows.push_back(RunSystem("colo", c, docs, config, colo));
    rows.push_back(RunSystem("two-stage", c, docs, config, two));
  }
  return rows;
}

void WriteBenchCsv(const std::string& path, std::span<const BenchRow> rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path);
  os << "system,C,samples_per_s,tokens_per_doc,peak_bytes,batch_mode,batch,"
        "invocations_per_doc\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.3f,%.2f,%zu,%s,%d,%.2f\n",
                  r.system.c_str(), r.candidates, r.samples_per_second,
                  r.tokens_per_doc, r.peak_bytes,
                  std::string(ToString(r.batch_mode)).c_str(), r.batch,
                  r.encoder_invocations_per_doc);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Training cost

double PreprocessSeconds(const model::ExtractiveModel& generator,
                         std::span<const corpus::Document> docs,
                         const cand::CandidateSpec& spec,
                         metrics::DiscriminatorKind kind) {
  const double start = NowMs();
  auto cache = train::BuildCandidateCache(generator, docs, spec, kind);
  (void)cache;
  return (NowMs() - start) / 1000.0;
}

std::vector<CostRow> TrainingCostReport(const model::EncoderConfig& encoder,
                                        std::span<const corpus::Document> docs,
                                        const CostConfig& config,
                                        std::uint64_t seed) {
  train::TrainConfig tc = config.train;
  tc.seed = seed;
  std::vector<CostRow> rows;

  // Two-stage: summarizer with the sentence loss only, offline candidates
  // from the frozen summarizer, then a separate reranker.
  model::ExtractiveModel generator(encoder, seed);
  double start = NowMs();
  train::TrainExtractive(generator, docs, tc, config.spec,
                         train::Regime::kBceOnly);
  const double stage1 = (NowMs() - start) / 1000.0;

  start = NowMs();
  auto cache = train::BuildCandidateCache(generator, docs, config.spec,
                                          tc.discriminator);
  const double preprocess = (NowMs() - start) / 1000.0;

  Reranker reranker(DefaultRerankerConfig(encoder), seed + 1);
  start = NowMs();
  TrainReranker(reranker, docs, cache, tc, config.reranker_steps);
  const double stage2 = (NowMs() - start) / 1000.0;

  rows.push_back({"two-stage", "stage1", stage1});
  rows.push_back({"two-stage", "preprocess", preprocess});
  rows.push_back({"two-stage", "stage2", stage2});
  rows.push_back({"two-stage", "total", stage1 + preprocess + stage2});

  // One-stage: a single online run with the same schedule.
  model::ExtractiveModel colo(encoder, seed);
  start = NowMs();
  train::TrainExtractive(colo, docs, tc, config.spec, train::Regime::kOnline);
  const double single = (NowMs() - start) / 1000.0;
  rows.push_back({"colo", "stage1", single});
  rows.push_back({"colo", "preprocess", -1.0});
  rows.push_back({"colo", "stage2", -1.0});
  rows.push_back({"colo", "total", single});
  return rows;
}

void WriteCostCsv(const std::string& path, std::span<const CostRow> rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path);
  os << "system,stage,seconds\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.system << ',' << r.stage << ',';
    if (r.seconds >= 0.0) {
      std::snprintf(buf, sizeof(buf), "%.3f", r.seconds);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace colo::twostage
