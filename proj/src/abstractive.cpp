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

#include "colo/abstractive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "colo/candidates.hpp"
#include "colo/common.hpp"
#include "json.hpp"

namespace colo::abs {

void ValidateDecodeConfig(const DecodeConfig& c) {
  auto bad = [](const std::string& what) {
    Fail(ErrorCode::kInvalidArgument, "invalid decode config: " + what);
  };
  if (c.beam_size < 1) bad("beam_size < 1");
  if (c.num_groups < 1) bad("num_groups < 1");
  if (c.beam_size % c.num_groups != 0) bad("num_groups must divide beam_size");
  if (!(c.diversity_penalty >= 0.0)) bad("diversity_penalty < 0");
  if (c.max_len < 1) bad("max_len < 1");
}

void ValidateSeq2SeqConfig(const Seq2SeqConfig& c) {
  model::ValidateEncoderConfig(c.encoder);
  ValidateDecodeConfig(c.decode);
  if (c.decoder_layers < 1) {
    Fail(ErrorCode::kInvalidArgument, "invalid seq2seq config: decoder_layers < 1");
  }
  if (c.decoder_heads < 1 || c.encoder.d_model % c.decoder_heads != 0) {
    Fail(ErrorCode::kInvalidArgument,
         "invalid seq2seq config: decoder_heads must divide d_model");
  }
}

std::string Seq2SeqConfigToJson(const Seq2SeqConfig& c) {
  nlohmann::json j;
  j["encoder"] = nlohmann::json::parse(model::EncoderConfigToJson(c.encoder));
  j["decoder_layers"] = c.decoder_layers;
  j["decoder_heads"] = c.decoder_heads;
  j["beam_size"] = c.decode.beam_size;
  j["num_groups"] = c.decode.num_groups;
  j["diversity_penalty"] = c.decode.diversity_penalty;
  j["max_decode_len"] = c.decode.max_len;
  return j.dump();
}

Seq2SeqConfig Seq2SeqConfigFromJson(const std::string& text) {
  Seq2SeqConfig c;
  try {
    auto j = nlohmann::json::parse(text);
    c.encoder = model::EncoderConfigFromJson(j.at("encoder").dump());
    c.decoder_layers = j.at("decoder_layers").get<int>();
    c.decoder_heads = j.at("decoder_heads").get<int>();
    c.decode.beam_size = j.at("beam_size").get<int>();
    c.decode.num_groups = j.at("num_groups").get<int>();
    c.decode.diversity_penalty = j.at("diversity_penalty").get<double>();
    c.decode.max_len = j.at("max_decode_len").get<int>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("seq2seq config: ") + e.what());
  }
  return c;
}

corpus::TokenSeq ContentTokens(const corpus::TokenSeq& tokens) {
  corpus::TokenSeq out = tokens;
  if (!out.empty() && out.back() == corpus::special::kEos) out.pop_back();
  return out;
}

// ---------------------------------------------------------------------------
// Search

namespace {

struct Hyp {
  corpus::TokenSeq tokens;
  double logprob = 0.0;
  bool done = false;
  std::vector<double> state;
};

struct Expansion {
  double score;  // selection score (penalized for diverse search)
  double logprob;
  std::size_t parent;
  TokenId token;  // -1 keeps a finished hypothesis as is
};

// Order by score, then by the resulting token list.
bool ExpansionBefore(const Expansion& a, const Expansion& b,
                     const std::vector<Hyp>& beams) {
  if (a.score != b.score) return a.score > b.score;
  const auto& ta = beams[a.parent].tokens;
  const auto& tb = beams[b.parent].tokens;
  // Compare ta+[a.token] with tb+[b.token] lexicographically.
  const std::size_t n = std::min(ta.size(), tb.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (ta[i] != tb[i]) return ta[i] < tb[i];
  }
  auto next = [](const corpus::TokenSeq& t, std::size_t i, TokenId tok) {
    return i < t.size() ? t[i] : tok;
  };
  const std::size_t la = ta.size() + (a.token >= 0 ? 1 : 0);
  const std::size_t lb = tb.size() + (b.token >= 0 ? 1 : 0);
  for (std::size_t i = n; i < std::min(la, lb); ++i) {
    TokenId x = next(ta, i, a.token), y = next(tb, i, b.token);
    if (x != y) return x < y;
  }
  return la < lb;
}

// One step of width-`width` search over `beams`; `penalty[v]` is subtracted
// from the selection score of token v. Returns the tokens emitted.
std::vector<TokenId> AdvanceGroup(const StepScorer& scorer, std::vector<Hyp>& beams,
                                  int width, int max_len,
                                  const std::vector<double>* penalty) {
  std::vector<Expansion> exps;
  std::vector<StepOutput> outs(beams.size());
  for (std::size_t b = 0; b < beams.size(); ++b) {
    const Hyp& h = beams[b];
    if (h.done) {
      exps.push_back({h.logprob, h.logprob, b, -1});
      continue;
    }
    outs[b] = scorer.Score(h.tokens);
    const auto& lp = outs[b].logprobs;
    for (std::size_t v = 0; v < lp.size(); ++v) {
      const double raw = h.logprob + lp[v];
      const double pen =
          penalty && v < penalty->size() ? (*penalty)[v] : 0.0;
      exps.push_back({raw - pen, raw, b, static_cast<TokenId>(v)});
    }
  }
  const std::size_t keep = std::min<std::size_t>(width, exps.size());
  std::partial_sort(exps.begin(), exps.begin() + keep, exps.end(),
                    [&](const Expansion& a, const Expansion& b) {
                      return ExpansionBefore(a, b, beams);
                    });
  std::vector<Hyp> next;
  std::vector<TokenId> emitted;
  for (std::size_t i = 0; i < keep; ++i) {
    const Expansion& e = exps[i];
    Hyp h = beams[e.parent];
    if (e.token >= 0) {
      h.tokens.push_back(e.token);
      h.logprob = e.logprob;
      h.state = outs[e.parent].state;
      h.done = e.token == scorer.eos() ||
               static_cast<int>(h.tokens.size()) >= max_len;
      emitted.push_back(e.token);
    }
    next.push_back(std::move(h));
  }
  beams = std::move(next);
  return emitted;
}

DecodedCandidate ToCandidate(const Hyp& h, int group) {
  DecodedCandidate c;
  c.tokens = h.tokens;
  c.logprob = h.logprob;
  c.group = group;
  c.z_c = h.state;
  c.z_index = h.tokens.empty() ? 0 : h.tokens.size() - 1;
  return c;
}

void SortCandidates(std::vector<DecodedCandidate>& cands) {
  std::stable_sort(cands.begin(), cands.end(),
                   [](const DecodedCandidate& a, const DecodedCandidate& b) {
                     if (a.logprob != b.logprob) return a.logprob > b.logprob;
                     return a.tokens < b.tokens;
                   });
}

bool AllDone(const std::vector<Hyp>& beams) {
  return std::all_of(beams.begin(), beams.end(),
                     [](const Hyp& h) { return h.done; });
}

}  // namespace

std::vector<DecodedCandidate> BeamSearch(const StepScorer& scorer, int beam,
                                         int max_len) {
  if (beam < 1 || max_len < 1) {
    Fail(ErrorCode::kInvalidArgument, "beam search: beam and max_len must be >= 1");
  }
  // Plain textbook loop, kept independent of the grouped search.
  std::vector<Hyp> beams(1);
  for (int t = 0; t < max_len; ++t) {
    if (AllDone(beams)) break;
    std::vector<Hyp> pool;
    for (const Hyp& h : beams) {
      if (h.done) {
        pool.push_back(h);
        continue;
      }
      StepOutput out = scorer.Score(h.tokens);
      for (std::size_t v = 0; v < out.logprobs.size(); ++v) {
        Hyp e = h;
        e.tokens.push_back(static_cast<TokenId>(v));
        e.logprob = h.logprob + out.logprobs[v];
        e.state = out.state;
        e.done = e.tokens.back() == scorer.eos() ||
                 static_cast<int>(e.tokens.size()) >= max_len;
        pool.push_back(std::move(e));
      }
    }
    std::stable_sort(pool.begin(), pool.end(), [](const Hyp& a, const Hyp& b) {
      if (a.logprob != b.logprob) return a.logprob > b.logprob;
      return a.tokens < b.tokens;
    });
    if (pool.size() > static_cast<std::size_t>(beam)) pool.resize(beam);
    beams = std::move(pool);
  }
  std::vector<DecodedCandidate> out;
  for (const auto& h : beams) out.push_back(ToCandidate(h, 0));
  SortCandidates(out);
  return out;
}

std::vector<DecodedCandidate> DiverseBeamSearch(const StepScorer& scorer,
                                                const DecodeConfig& config) {
  ValidateDecodeConfig(config);
  const int groups = config.num_groups;
  const int width = config.beam_size / groups;
  std::vector<std::vector<Hyp>> beams(groups, std::vector<Hyp>(1));
  std::vector<double> penalty;
  for (int t = 0; t < config.max_len; ++t) {
    bool any = false;
    penalty.clear();
    for (int g = 0; g < groups; ++g) {
      if (AllDone(beams[g])) continue;
      any = true;
      auto emitted = AdvanceGroup(scorer, beams[g], width, config.max_len,
                                  config.diversity_penalty > 0.0 ? &penalty : nullptr);
      for (TokenId v : emitted) {
        if (static_cast<std::size_t>(v) >= penalty.size()) penalty.resize(v + 1, 0.0);
        penalty[v] += config.diversity_penalty;
      }
    }
    if (!any) break;
  }
  std::vector<DecodedCandidate> out;
  for (int g = 0; g < groups; ++g) {
    for (const auto& h : beams[g]) out.push_back(ToCandidate(h, g));
  }
  SortCandidates(out);
  return out;
}

// ---------------------------------------------------------------------------
// Model

Seq2SeqModel::Seq2SeqModel(const Seq2SeqConfig& config, std::uint64_t seed)
    : config_(config),
      seed_(seed),
      params_(seed),
      encoder_((ValidateSeq2SeqConfig(config), config.encoder), params_,
               "encoder") {
  const std::size_t d = config.encoder.d_model;
  dec_embedding_ = params_.Normal("decoder.token_embedding",
                                  config.encoder.vocab_size, d, 0.3);
  dec_position_ = params_.Normal("decoder.position_embedding",
                                 config.decode.max_len, d, 0.1);
  layers_.resize(config.decoder_layers);
  for (int l = 0; l < config.decoder_layers; ++l) {
    const std::string name = "decoder.layer" + std::to_string(l);
    layers_[l].ln_self.Init(params_, name + ".ln_self", d);
    layers_[l].self_attn.Init(params_, name + ".self_attn", d);
    layers_[l].ln_cross.Init(params_, name + ".ln_cross", d);
    layers_[l].cross_attn.Init(params_, name + ".cross_attn", d);
    layers_[l].ln_ffn.Init(params_, name + ".ln_ffn", d);
    layers_[l].ffn.Init(params_, name + ".ffn", d, config.encoder.ffn_dim);
  }
  final_ln_.Init(params_, "decoder.final_ln", d);
  out_bias_ = params_.Constant("decoder.output_bias",
                               {static_cast<std::size_t>(config.encoder.vocab_size)},
                               0.0);
}

corpus::ModelInput Seq2SeqModel::BuildInput(const corpus::Document& doc) const {
  return corpus::BuildModelInput(doc, config_.encoder.max_len);
}

Tensor Seq2SeqModel::EncodeSource(const corpus::ModelInput& input) const {
  return encoder_.Forward(input);
}

Tensor Seq2SeqModel::DecodeStates(const Tensor& memory,
                                  std::span<const TokenId> inputs) const {
  const std::size_t t = inputs.size();
  if (t == 0) Fail(ErrorCode::kInvalidArgument, "decoder: empty input");
  if (t > static_cast<std::size_t>(config_.decode.max_len)) {
    Fail(ErrorCode::kInvalidArgument,
         "decoder: input of " + std::to_string(t) + " tokens exceeds max_decode_len " +
             std::to_string(config_.decode.max_len));
  }
  for (TokenId id : inputs) {
    if (id < 0 || id >= config_.encoder.vocab_size) {
      Fail(ErrorCode::kInvalidArgument, "decoder: token id out of range");
    }
  }
  std::vector<std::int32_t> pos(t);
  std::iota(pos.begin(), pos.end(), 0);
  Tensor x = ad::Add(ad::EmbeddingGather(dec_embedding_, inputs),
                     ad::EmbeddingGather(dec_position_, pos));
  Tensor causal = model::CausalMask(t);
  const int heads = config_.decoder_heads;
  for (const auto& layer : layers_) {
    Tensor a = layer.ln_self(x);
    x = ad::Add(x, model::MultiHeadAttention(layer.self_attn, a, a, heads, causal));
    Tensor c = layer.ln_cross(x);
    x = ad::Add(x, model::MultiHeadAttention(layer.cross_attn, c, memory, heads,
                                             Tensor()));
    x = ad::Add(x, layer.ffn(layer.ln_ffn(x)));
  }
  return final_ln_(x);
}

Tensor Seq2SeqModel::Logits(const Tensor& states) const {
  return ad::Add(ad::MatMulNT(states, dec_embedding_), out_bias_);
}

void Seq2SeqModel::Save(const std::string& path) const {
  nlohmann::json meta;
  meta["kind"] = "seq2seq";
  meta["seed"] = seed_;
  meta["config"] = nlohmann::json::parse(Seq2SeqConfigToJson(config_));
  ad::Checkpoint ckpt;
  ckpt.meta_json = meta.dump();
  ckpt.tensors = params_.named();
  ad::SaveCheckpoint(path, ckpt);
}

std::unique_ptr<Seq2SeqModel> Seq2SeqModel::Load(const std::string& path) {
  ad::Checkpoint ckpt = ad::LoadCheckpoint(path);
  nlohmann::json meta = nlohmann::json::parse(ckpt.meta_json);
  if (meta.value("kind", "") != "seq2seq") {
    Fail(ErrorCode::kState, "checkpoint " + path + " is not a seq2seq model");
  }
  auto m = std::make_unique<Seq2SeqModel>(
      Seq2SeqConfigFromJson(meta.at("config").dump()),
      meta.value("seed", std::uint64_t{0}));
  ad::RestoreTensors(ckpt, m->params_.named());
  return m;
}

StepOutput ModelScorer::Score(std::span<const TokenId> prefix) const {
  ad::NoGradGuard no_grad;
  corpus::TokenSeq inputs;
  inputs.reserve(prefix.size() + 1);
  inputs.push_back(corpus::special::kBos);
  inputs.insert(inputs.end(), prefix.begin(), prefix.end());
  Tensor states = model_.DecodeStates(memory_, inputs);
  Tensor last = ad::Row(states, inputs.size() - 1);
  Tensor logits = model_.Logits(ad::Reshape(last, {1, last.numel()}));
  Tensor lp = ad::LogSoftmax(logits);
  StepOutput out;
  out.logprobs.assign(lp.data().begin(), lp.data().end());
  out.state.assign(last.data().begin(), last.data().end());
  return out;
}

// ---------------------------------------------------------------------------
// Losses and representations

corpus::TokenSeq DecoderTarget(const corpus::Document& doc, int max_len) {
  if (doc.reference.empty()) {
    Fail(ErrorCode::kInvalidArgument, "nll: empty reference for " + doc.id);
  }
  const std::size_t n =
      std::min<std::size_t>(doc.reference.size(), static_cast<std::size_t>(max_len - 1));
  corpus::TokenSeq target(doc.reference.begin(), doc.reference.begin() + n);
  target.push_back(corpus::special::kEos);
  return target;
}

Tensor NllLossWithMemory(const Seq2SeqModel& model, const Tensor& memory,
                         const corpus::Document& doc) {
  corpus::TokenSeq target = DecoderTarget(doc, model.config().decode.max_len);
  corpus::TokenSeq inputs;
  inputs.push_back(corpus::special::kBos);
  inputs.insert(inputs.end(), target.begin(), target.end() - 1);
  Tensor lp = ad::LogSoftmax(model.Logits(model.DecodeStates(memory, inputs)));
  return ad::Scale(ad::Mean(ad::Pick(lp, target)), -1.0);
}

Tensor NllLoss(const Seq2SeqModel& model, const corpus::Document& doc) {
  return NllLossWithMemory(model, model.EncodeSource(model.BuildInput(doc)), doc);
}

std::vector<DecodedCandidate> DecodeCandidates(const Seq2SeqModel& model,
                                               const corpus::Document& doc) {
  ad::NoGradGuard no_grad;
  ModelScorer scorer(model, model.EncodeSource(model.BuildInput(doc)));
  return DiverseBeamSearch(scorer, model.config().decode);
}

Representations ExtractRepresentations(const Seq2SeqModel& model,
                                       const Tensor& memory,
                                       std::span<const TokenId> tokens) {
  if (tokens.empty()) {
    Fail(ErrorCode::kInvalidArgument, "representations: empty candidate");
  }
  corpus::TokenSeq inputs;
  inputs.push_back(corpus::special::kBos);
  inputs.insert(inputs.end(), tokens.begin(), tokens.end() - 1);
  Representations r;
  r.z_x = ad::Row(memory, 0);
  r.z_c = ad::Row(model.DecodeStates(memory, inputs), tokens.size() - 1);
  return r;
}

Representations ExtractRepresentations(const Seq2SeqModel& model,
                                       const corpus::Document& doc,
                                       std::span<const TokenId> tokens) {
  return ExtractRepresentations(
      model, model.EncodeSource(model.BuildInput(doc)), tokens);
}

std::vector<DecodedCandidate> Deduplicate(std::vector<DecodedCandidate> cands) {
  std::set<corpus::TokenSeq> seen;
  std::vector<DecodedCandidate> out;
  for (auto& c : cands) {
    if (seen.insert(c.tokens).second) out.push_back(std::move(c));
  }
  return out;
}

std::vector<double> BeamCosines(const Tensor& z_x,
                                std::span<const DecodedCandidate> cands) {
  ad::NoGradGuard no_grad;
  std::vector<double> cos;
  cos.reserve(cands.size());
  for (const auto& c : cands) {
    cos.push_back(ad::CosineSimilarity(z_x, Tensor::Vector(c.z_c)).item());
  }
  return cos;
}

namespace {

std::pair<std::vector<DecodedCandidate>, Tensor> DecodeWithAnchor(
    const Seq2SeqModel& model, const corpus::Document& doc) {
  ad::NoGradGuard no_grad;
  Tensor memory = model.EncodeSource(model.BuildInput(doc));
  ModelScorer scorer(model, memory);
  auto cands = DiverseBeamSearch(scorer, model.config().decode);
  return {std::move(cands), ad::Row(memory, 0)};
}

}  // namespace

Selection SelectAbs(const Seq2SeqModel& model, const corpus::Document& doc) {
  auto [cands, z_x] = DecodeWithAnchor(model, doc);
  auto cos = BeamCosines(z_x, cands);
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    if (cos[i] > cos[best] ||
        (cos[i] == cos[best] && cands[i].logprob > cands[best].logprob)) {
      best = i;
    }
  }
  return {cands[best], cos[best]};
}

Selection SelectMap(const Seq2SeqModel& model, const corpus::Document& doc) {
  auto [cands, z_x] = DecodeWithAnchor(model, doc);
  auto cos = BeamCosines(z_x, cands);
  // Candidates come sorted by log-probability.
  return {cands.front(), cos.front()};
}

// ---------------------------------------------------------------------------
// Training

AbsTrainer::AbsTrainer(const train::TrainConfig& config,
                       std::span<const corpus::Document> docs)
    : config_(config), docs_(docs), rng_(config.seed) {
  train::ValidateTrainConfig(config);
  if (docs.empty()) Fail(ErrorCode::kInvalidArgument, "training set is empty");
  order_.resize(docs.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::shuffle(order_.begin(), order_.end(), rng_);
}

std::vector<std::size_t> AbsTrainer::NextBatch() {
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

train::StepReport AbsTrainer::StepNll(Seq2SeqModel& model) {
  return Step(model, false);
}

train::StepReport AbsTrainer::StepOnline(Seq2SeqModel& model) {
  return Step(model, true);
}

train::StepReport AbsTrainer::Step(Seq2SeqModel& model, bool online) {
  const double start = NowMs();
  train::StepReport report;
  report.step = ++step_;
  report.rank_active = online;
  auto batch = NextBatch();
  const double inv = 1.0 / static_cast<double>(batch.size());
  ad::Tape::Current().Clear();
  model.params().ZeroGrad();
  train::RankingLossOptions opts{config_.margin, config_.rank_loss_normalize,
                                 config_.margin_scaled_by_rank_gap};
  std::vector<Tensor> totals;
  for (std::size_t idx : batch) {
    const auto& doc = docs_[idx];
    Tensor memory = model.EncodeSource(model.BuildInput(doc));
    Tensor nll = NllLossWithMemory(model, memory, doc);
    Tensor rank = Tensor::Scalar(0.0);
    if (online) {
      std::vector<DecodedCandidate> cands;
      {
        ad::NoGradGuard no_grad;
        ModelScorer scorer(model, memory.Detach());
        cands = DiverseBeamSearch(scorer, model.config().decode);
      }
      cands = Deduplicate(std::move(cands));
      std::vector<std::pair<double, std::size_t>> scored;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        auto content = ContentTokens(cands[i].tokens);
        if (content.empty()) continue;
        scored.push_back({metrics::DiscriminatorScore(content, doc.reference,
                                                      config_.discriminator),
                          i});
      }
      // Best first; ties to the lexicographically smaller sequence.
      std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return cands[a.second].tokens < cands[b.second].tokens;
      });
      report.n_cands += static_cast<double>(scored.size()) * inv;
      if (scored.size() < 2) {
        report.degenerate = true;
      } else {
        Tensor z_x = ad::Row(memory, 0);
        std::vector<Tensor> ranked;
        for (const auto& [score, i] : scored) {
          ranked.push_back(
              ExtractRepresentations(model, memory, cands[i].tokens).z_c);
        }
        rank = ad::Scale(train::RankingLoss(z_x, ranked, opts).loss,
                         config_.rank_weight);
      }
    }
    report.l_sum += nll.item() * inv;
    report.l_rank += rank.item() * inv;
    totals.push_back(ad::Reshape(ad::Add(nll, rank), {1}));
  }
  Tensor loss = ad::Scale(ad::Sum(ad::Concat(totals, 0)), inv);
  report.total = loss.item();
  ad::Backward(loss);
  auto params = model.params().tensors();
  const double lr = config_.lr_scale *
                    ad::TransformerLearningRate(model.config().encoder.d_model,
                                                step_, config_.lr_warmup);
  ad::AdamStep(params, adam_, lr);
  report.ms = NowMs() - start;
  return report;
}

std::vector<train::StepReport> TrainAbstractive(
    Seq2SeqModel& model, std::span<const corpus::Document> docs,
    const train::TrainConfig& config,
    const std::function<void(const train::StepReport&)>& on_step) {
  AbsTrainer trainer(config, docs);
  std::vector<train::StepReport> reports;
  for (int s = 0; s < config.warmup_steps_bce; ++s) {
    reports.push_back(trainer.StepNll(model));
    if (on_step) on_step(reports.back());
  }
  for (int s = 0; s < config.combined_steps; ++s) {
    reports.push_back(trainer.StepOnline(model));
    if (on_step) on_step(reports.back());
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<AbsEvalRow> EvaluateAbstractive(const Seq2SeqModel& model,
                                            std::span<const corpus::Document> docs,
                                            int threads,
                                            std::vector<AbsDecoded>* decoded) {
  std::vector<AbsDecoded> per_doc(docs.size());
  ParallelFor(docs.size(), threads > 0 ? threads : WorkerThreads(),
              [&](std::size_t i) {
                auto [cands, z_x] = DecodeWithAnchor(model, docs[i]);
                auto cos = BeamCosines(z_x, cands);
                std::size_t best = 0;
                for (std::size_t j = 1; j < cands.size(); ++j) {
                  if (cos[j] > cos[best] ||
                      (cos[j] == cos[best] &&
                       cands[j].logprob > cands[best].logprob)) {
                    best = j;
                  }
                }
                per_doc[i].id = docs[i].id;
                per_doc[i].cosine = cands[best];
                per_doc[i].cosine_cos = cos[best];
                per_doc[i].map = cands.front();
                per_doc[i].map_cos = cos.front();
              });
  std::vector<AbsEvalRow> rows(2);
  rows[0].selector = "cosine";
  rows[1].selector = "map";
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const DecodedCandidate* picks[2] = {&per_doc[i].cosine, &per_doc[i].map};
    for (int s = 0; s < 2; ++s) {
      auto sc = metrics::ScoreAll(ContentTokens(picks[s]->tokens), docs[i].reference);
      rows[s].r1 += sc.r1;
      rows[s].r2 += sc.r2;
      rows[s].rl += sc.rl;
      rows[s].js2 += sc.js2;
    }
  }
  for (auto& r : rows) {
    r.docs = docs.size();
    if (!docs.empty()) {
      const double inv = 1.0 / static_cast<double>(docs.size());
      r.r1 *= inv;
      r.r2 *= inv;
      r.rl *= inv;
      r.js2 *= inv;
    }
  }
  if (decoded) *decoded = std::move(per_doc);
  return rows;
}

void WriteAbsEvalCsv(const std::string& path, std::span<const AbsEvalRow> rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path);
  os << "selector,r1,r2,rl,js2,n_docs\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%zu\n",
                  r.selector.c_str(), r.r1, r.r2, r.rl, r.js2, r.docs);
    os << buf;
  }
}

void WriteDecodedJsonl(const std::string& path, std::span<const AbsDecoded> rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path);
  for (const auto& r : rows) {
    const std::pair<const char*, std::pair<const DecodedCandidate*, double>> picks[] = {
        {"cosine", {&r.cosine, r.cosine_cos}}, {"map", {&r.map, r.map_cos}}};
    for (const auto& [name, pick] : picks) {
      nlohmann::json j;
      j["id"] = r.id;
      j["selector"] = name;
      j["tokens"] = pick.first->tokens;
      j["logprob"] = pick.first->logprob;
      j["cos"] = pick.second;
      os << j.dump() << '\n';
    }
  }
}

}  // namespace colo::abs
