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

#include "colo/training.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "colo/common.hpp"

namespace colo::train {

void ValidateTrainConfig(const TrainConfig& c) {
  auto bad = [](const std::string& what) {
    Fail(ErrorCode::kInvalidArgument, "invalid training config: " + what);
  };
  if (!(c.margin >= 0.0)) bad("margin < 0");
  if (c.warmup_steps_bce < 0 || c.combined_steps < 0) bad("steps < 0");
  if (c.batch_size < 1) bad("batch_size < 1");
  if (!(c.rank_weight >= 0.0)) bad("rank_weight < 0");
  if (c.lr_warmup < 1) bad("lr_warmup < 1");
  if (!(c.lr_scale > 0.0)) bad("lr_scale must be positive");
  if (c.label_max_sents < 1) bad("label_max_sents < 1");
  if (c.checkpoint_every < 0) bad("checkpoint_every < 0");
}

Tensor BceLoss(const Tensor& probs, std::span<const int> labels, double eps) {
  if (probs.numel() != labels.size()) {
    Fail(ErrorCode::kInvalidArgument,
         "bce_loss: " + std::to_string(probs.numel()) + " probabilities vs " +
             std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) Fail(ErrorCode::kInvalidArgument, "bce_loss: empty input");
  const std::size_t n = labels.size();
  Tensor p = ad::Clamp(ad::Reshape(probs, {n}), eps, 1.0 - eps);
  std::vector<ad::Real> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] ? 1.0 : 0.0;
  Tensor yt = Tensor::Vector(y);
  std::vector<ad::Real> one_minus_y(n);
  for (std::size_t i = 0; i < n; ++i) one_minus_y[i] = 1.0 - y[i];
  Tensor ny = Tensor::Vector(one_minus_y);
  // -(y log p + (1 - y) log(1 - p))
  Tensor log_p = ad::Log(p);
  Tensor log_q = ad::Log(ad::AddScalar(ad::Scale(p, -1.0), 1.0));
  Tensor ll = ad::Add(ad::Mul(yt, log_p), ad::Mul(ny, log_q));
  return ad::Scale(ad::Mean(ll), -1.0);
}

RankingLossResult RankingLossFromCosines(const Tensor& cosines,
                                         const RankingLossOptions& options) {
  RankingLossResult result;
  const std::size_t m = cosines.numel();
  if (m < 2) {
    result.loss = Tensor::Scalar(0.0);
    result.skipped = true;
    return result;
  }
  // Row p of `select` is +1 at the worse candidate j and -1 at the better i,
  // so select * cos + margin gives cos_j - cos_i + margin for each i < j.
  const std::size_t pairs = m * (m - 1) / 2;
  std::vector<ad::Real> select(pairs * m, 0.0), margins(pairs);
  std::size_t p = 0;
  for (std::size_t j = 1; j < m; ++j) {
    for (std::size_t i = 0; i < j; ++i, ++p) {
      select[p * m + j] = 1.0;
      select[p * m + i] = -1.0;
      margins[p] = options.scaled_by_rank_gap
                       ? options.margin * static_cast<double>(j - i)
                       : options.margin;
    }
  }
  Tensor diffs = ad::MatMul(Tensor::FromData({pairs, m}, std::move(select)),
                            ad::Reshape(cosines, {m, 1}));
  diffs = ad::Add(ad::Reshape(diffs, {pairs}), Tensor::Vector(std::move(margins)));
  Tensor loss = ad::Sum(ad::Hinge(diffs));
  if (options.normalize) loss = ad::Scale(loss, 1.0 / static_cast<double>(pairs));
  result.loss = loss;
  result.pairs = pairs;
  return result;
}

RankingLossResult RankingLoss(const Tensor& anchor,
                              std::span<const Tensor> ranked,
                              const RankingLossOptions& options) {
  if (ranked.size() < 2) {
    RankingLossResult r;
    r.loss = Tensor::Scalar(0.0);
    r.skipped = true;
    return r;
  }
  std::vector<Tensor> cos;
  cos.reserve(ranked.size());
  for (const auto& e : ranked) {
    cos.push_back(ad::Reshape(ad::CosineSimilarity(anchor, e), {1}));
  }
  return RankingLossFromCosines(ad::Concat(cos, 0), options);
}

CandidateCache BuildCandidateCache(const model::ExtractiveModel& model,
                                   std::span<const corpus::Document> docs,
                                   const cand::CandidateSpec& spec,
                                   metrics::DiscriminatorKind kind) {
  ad::NoGradGuard no_grad;
  CandidateCache cache;
  for (const auto& doc : docs) {
    auto out = model.Encode(model.BuildInput(doc));
    auto probs = out.probs.data();
    auto pool = cand::CandidatePool({probs.begin(), probs.end()}, spec);
    cand::RankCandidates(pool, doc, kind);
    cache[doc.id] = std::move(pool);
  }
  return cache;
}

DocLoss ComputeDocLoss(const model::ExtractiveModel& model,
                       const corpus::Document& doc,
                       std::span<const int> labels, StepMode mode,
                       const TrainConfig& config,
                       const cand::CandidateSpec& spec,
                       const CandidateCache* cache) {
  DocLoss out;
  auto input = model.BuildInput(doc);
  auto enc = model.Encode(input);
  const std::size_t n = enc.num_sentences();
  if (labels.size() < n) {
    Fail(ErrorCode::kInvalidArgument, "labels shorter than kept sentences");
  }
  out.l_sum = BceLoss(enc.probs, labels.subspan(0, n));
  out.l_rank = Tensor::Scalar(0.0);
  if (mode != StepMode::kBceOnly) {
    std::vector<cand::Candidate> pool;
    if (mode == StepMode::kOnline) {
      auto probs = enc.probs.data();
      pool = cand::CandidatePool({probs.begin(), probs.end()}, spec);
      cand::RankCandidates(pool, doc, config.discriminator);
    } else {
      if (!cache) Fail(ErrorCode::kState, "offline step without a candidate cache");
      auto it = cache->find(doc.id);
      if (it == cache->end()) {
        Fail(ErrorCode::kState, "candidate cache miss for document " + doc.id);
      }
      pool = it->second;
    }
    out.degenerate = cand::IsDegenerate(std::min<std::size_t>(n, spec.n_prime),
                                        spec.sizes) ||
                     pool.size() < 2;
    out.n_cands = pool.size();
    if (!out.degenerate) {
      std::vector<Tensor> embeddings;
      embeddings.reserve(pool.size());
      for (const auto& c : pool) {
        embeddings.push_back(model::CandidateEmbedding(enc, c.indices));
      }
      RankingLossOptions opts{config.margin, config.rank_loss_normalize,
                              config.margin_scaled_by_rank_gap};
      auto rl = RankingLoss(enc.z_x, embeddings, opts);
      out.l_rank = ad::Scale(rl.loss, config.rank_weight);
    }
  }
  out.total = ad::Add(out.l_sum, out.l_rank);
  return out;
}

Trainer::Trainer(const TrainConfig& config, const cand::CandidateSpec& spec,
                 std::span<const corpus::Document> docs)
    : config_(config), spec_(spec), docs_(docs), rng_(config.seed) {
  ValidateTrainConfig(config);
  cand::ValidateCandidateSpec(spec);
  if (docs.empty()) Fail(ErrorCode::kInvalidArgument, "training set is empty");
  labels_.reserve(docs.size());
  for (const auto& d : docs) {
    labels_.push_back(cand::GreedyOracleLabels(d, config.discriminator,
                                               config.label_max_sents));
  }
  order_.resize(docs.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::shuffle(order_.begin(), order_.end(), rng_);
}

std::vector<std::size_t> Trainer::NextBatch() {
  std::vector<std::size_t> batch;
  for (int b = 0; b < config_.batch_size; ++b) {
    if (cursor_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      cursor_ = 0;
    }
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

StepReport Trainer::Step(model::ExtractiveModel& model, StepMode mode,
                         const CandidateCache* cache) {
  const double start = NowMs();
  StepReport report;
  report.step = ++step_;
  report.rank_active = mode != StepMode::kBceOnly;
  auto batch = NextBatch();
  const double inv = 1.0 / static_cast<double>(batch.size());

  ad::Tape::Current().Clear();
  model.params().ZeroGrad();
  std::vector<Tensor> totals;
  for (std::size_t idx : batch) {
    DocLoss dl = ComputeDocLoss(model, docs_[idx], labels_[idx], mode, config_,
                                spec_, cache);
    report.l_sum += dl.l_sum.item() * inv;
    report.l_rank += dl.l_rank.item() * inv;
    report.n_cands += static_cast<double>(dl.n_cands) * inv;
    report.degenerate = report.degenerate || dl.degenerate;
    totals.push_back(ad::Reshape(dl.total, {1}));
  }
  Tensor loss = ad::Scale(ad::Sum(ad::Concat(totals, 0)), inv);
  report.total = loss.item();
  ad::Backward(loss);
  auto params = model.params().tensors();
  const double lr =
      config_.lr_scale * ad::TransformerLearningRate(model.config().d_model,
                                                     step_, config_.lr_warmup);
  ad::AdamStep(params, adam_, lr);
  report.ms = NowMs() - start;
  return report;
}

std::vector<StepReport> Trainer::Run(
    model::ExtractiveModel& model, int steps, StepMode mode,
    const CandidateCache* cache,
    const std::function<void(const StepReport&)>& on_step) {
  std::vector<StepReport> reports;
  reports.reserve(steps);
  for (int s = 0; s < steps; ++s) {
    reports.push_back(Step(model, mode, cache));
    if (on_step) on_step(reports.back());
  }
  return reports;
}

std::string_view ToString(Regime regime) {
  switch (regime) {
    case Regime::kOnline:
      return "online";
    case Regime::kNaive:
      return "naive";
    case Regime::kBceOnly:
      return "bce";
  }
  return "online";
}

std::vector<StepReport> TrainExtractive(
    model::ExtractiveModel& model, std::span<const corpus::Document> docs,
    const TrainConfig& config, const cand::CandidateSpec& spec, Regime regime,
    const std::function<void(const StepReport&)>& on_step) {
  Trainer trainer(config, spec, docs);
  auto reports = trainer.Run(model, config.warmup_steps_bce, StepMode::kBceOnly,
                             nullptr, on_step);
  std::vector<StepReport> combined;
  switch (regime) {
    case Regime::kOnline:
      combined = trainer.Run(model, config.combined_steps, StepMode::kOnline,
                             nullptr, on_step);
      break;
    case Regime::kNaive: {
      CandidateCache cache =
          BuildCandidateCache(model, docs, spec, config.discriminator);
      combined = trainer.Run(model, config.combined_steps, StepMode::kOffline,
                             &cache, on_step);
      break;
    }
    case Regime::kBceOnly:
      combined = trainer.Run(model, config.combined_steps, StepMode::kBceOnly,
                             nullptr, on_step);
      break;
  }
  reports.insert(reports.end(), combined.begin(), combined.end());
  return reports;
}

void WriteStepReportsCsv(const std::string& path,
                         std::span<const StepReport> reports) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path);
  os << "step,l_sum,l_rank,total,n_cands,ms\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f,%.6f,%.2f,%.3f\n",
                  static_cast<long long>(r.step), r.l_sum, r.l_rank, r.total,
                  r.n_cands, r.ms);
    os << buf;
  }
}

}  // namespace colo::train
