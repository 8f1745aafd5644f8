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

#include "colo/encoder.hpp"

#include <cmath>

#include "colo/common.hpp"
#include "json.hpp"

namespace colo::model {

// ---------------------------------------------------------------------------
// ParameterSet

Tensor ParameterSet::Matrix(const std::string& name, std::size_t rows,
                            std::size_t cols) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<ad::Real> data(rows * cols);
  for (auto& v : data) v = dist(rng_);
  Tensor t = Tensor::FromData({rows, cols}, std::move(data), true);
  named_.push_back({name, t});
  return t;
}

Tensor ParameterSet::Normal(const std::string& name, std::size_t rows,
                            std::size_t cols, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<ad::Real> data(rows * cols);
  for (auto& v : data) v = dist(rng_);
  Tensor t = Tensor::FromData({rows, cols}, std::move(data), true);
  named_.push_back({name, t});
  return t;
}

Tensor ParameterSet::Constant(const std::string& name, ad::Shape shape,
                              double value) {
  std::vector<ad::Real> data(ad::NumElements(shape), value);
  Tensor t = Tensor::FromData(std::move(shape), std::move(data), true);
  named_.push_back({name, t});
  return t;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(named_.size());
  for (const auto& nt : named_) out.push_back(nt.tensor);
  return out;
}

std::size_t ParameterSet::NumScalars() const {
  std::size_t n = 0;
  for (const auto& nt : named_) n += nt.tensor.numel();
  return n;
}

void ParameterSet::ZeroGrad() {
  for (auto& nt : named_) nt.tensor.ZeroGrad();
}

void ParameterSet::CopyValuesFrom(const ParameterSet& other) {
  if (other.named_.size() != named_.size()) {
    Fail(ErrorCode::kState, "parameter layouts differ");
  }
  for (std::size_t i = 0; i < named_.size(); ++i) {
    if (named_[i].name != other.named_[i].name ||
        named_[i].tensor.shape() != other.named_[i].tensor.shape()) {
      Fail(ErrorCode::kState, "parameter layouts differ at " + named_[i].name);
    }
    auto src = other.named_[i].tensor.data();
    auto dst = named_[i].tensor.mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

// ---------------------------------------------------------------------------
// Layers

void LayerNormParams::Init(ParameterSet& ps, const std::string& name,
                           std::size_t d) {
  gain = ps.Constant(name + ".gain", {d}, 1.0);
  bias = ps.Constant(name + ".bias", {d}, 0.0);
}

Tensor LayerNormParams::operator()(const Tensor& x) const {
  return ad::LayerNorm(x, gain, bias);
}

void LinearParams::Init(ParameterSet& ps, const std::string& name,
                        std::size_t in, std::size_t out) {
  weight = ps.Matrix(name + ".weight", in, out);
  bias = ps.Constant(name + ".bias", {out}, 0.0);
}

Tensor LinearParams::operator()(const Tensor& x) const {
  return ad::Add(ad::MatMul(x, weight), bias);
}

void AttentionParams::Init(ParameterSet& ps, const std::string& name,
                           std::size_t d) {
  query.Init(ps, name + ".query", d, d);
  key.Init(ps, name + ".key", d, d);
  value.Init(ps, name + ".value", d, d);
  output.Init(ps, name + ".output", d, d);
}

Tensor MultiHeadAttention(const AttentionParams& p, const Tensor& queries,
                          const Tensor& memory, int heads, const Tensor& mask) {
  const std::size_t d = queries.dim(1);
  if (heads < 1 || d % heads != 0) {
    Fail(ErrorCode::kInvalidArgument, "attention: width " + std::to_string(d) +
                                          " not divisible by " +
                                          std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor q = p.query(queries);
  Tensor k = p.key(memory);
  Tensor v = p.value(memory);
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tensor qh = ad::SliceCols(q, h * dh, dh);
    Tensor kh = ad::SliceCols(k, h * dh, dh);
    Tensor vh = ad::SliceCols(v, h * dh, dh);
    Tensor scores = ad::Scale(ad::MatMulNT(qh, kh), scale);
    if (mask.defined()) scores = ad::Add(scores, mask);
    outs.push_back(ad::MatMul(ad::Softmax(scores, 1), vh));
  }
  Tensor joined = heads == 1 ? outs[0] : ad::Concat(outs, 1);
  return p.output(joined);
}

void FeedForwardParams::Init(ParameterSet& ps, const std::string& name,
                             std::size_t d, std::size_t hidden) {
  in.Init(ps, name + ".in", d, hidden);
  out.Init(ps, name + ".out", hidden, d);
}

Tensor FeedForwardParams::operator()(const Tensor& x) const {
  return out(ad::Relu(in(x)));
}

Tensor CausalMask(std::size_t n) {
  std::vector<ad::Real> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m[i * n + j] = kMaskedOut;
  return Tensor::FromData({n, n}, std::move(m));
}

namespace {

// Tokens attend within their own sentence span; positions outside any span
// (the <doc> slot) attend everywhere.
Tensor SentenceLocalMask(const corpus::ModelInput& input) {
  const std::size_t n = input.token_ids.size();
  std::vector<int> owner(n, -1);
  for (std::size_t s = 0; s < input.sent_spans.size(); ++s) {
    for (int i = input.sent_spans[s].first; i < input.sent_spans[s].second; ++i)
      owner[i] = static_cast<int>(s);
  }
  std::vector<ad::Real> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (owner[i] < 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (owner[j] != owner[i]) m[i * n + j] = kMaskedOut;
    }
  }
  return Tensor::FromData({n, n}, std::move(m));
}

}  // namespace

// ---------------------------------------------------------------------------
// Encoder

void ValidateEncoderConfig(const EncoderConfig& c) {
  auto bad = [](const std::string& what) {
    Fail(ErrorCode::kInvalidArgument, "invalid encoder config: " + what);
  };
  if (c.vocab_size <= corpus::special::kCount) bad("vocab_size too small");
  if (c.d_model < 1 || c.n_heads < 1 || c.d_model % c.n_heads != 0)
    bad("d_model must be a positive multiple of n_heads");
  if (c.n_layers < 1) bad("n_layers < 1");
  if (c.ffn_dim < 1) bad("ffn_dim < 1");
  if (c.max_len < 4) bad("max_len < 4");
  if (c.dropout != 0.0) bad("dropout is not supported (must be 0)");
}

Encoder::Encoder(const EncoderConfig& config, ParameterSet& ps,
                 const std::string& prefix)
    : config_(config) {
  ValidateEncoderConfig(config);
  const std::size_t d = config.d_model;
  token_embedding_ = ps.Normal(prefix + ".token_embedding", config.vocab_size,
                               d, 0.3);
  if (config.position_embeddings) {
    position_embedding_ = ps.Normal(prefix + ".position_embedding",
                                    config.max_len, d, 0.1);
  }
  layers_.resize(config.n_layers);
  for (int l = 0; l < config.n_layers; ++l) {
    const std::string name = prefix + ".layer" + std::to_string(l);
    layers_[l].ln_attn.Init(ps, name + ".ln_attn", d);
    layers_[l].attn.Init(ps, name + ".attn", d);
    layers_[l].ln_ffn.Init(ps, name + ".ln_ffn", d);
    layers_[l].ffn.Init(ps, name + ".ffn", d, config.ffn_dim);
  }
  final_ln_.Init(ps, prefix + ".final_ln", d);
}

Tensor Encoder::Run(std::span<const corpus::TokenId> ids,
                    const Tensor& first_mask) const {
  if (ids.empty()) Fail(ErrorCode::kInvalidArgument, "encoder: empty input");
  if (ids.size() > static_cast<std::size_t>(config_.max_len)) {
    Fail(ErrorCode::kInvalidArgument,
         "encoder: input length " + std::to_string(ids.size()) +
             " exceeds max_len " + std::to_string(config_.max_len));
  }
  Tensor x = ad::EmbeddingGather(token_embedding_, ids);
  if (config_.position_embeddings) {
    std::vector<std::int32_t> pos(ids.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<std::int32_t>(i);
    x = ad::Add(x, ad::EmbeddingGather(position_embedding_, pos));
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    Tensor mask = l == 0 ? first_mask : Tensor();
    Tensor a = layer.ln_attn(x);
    x = ad::Add(x, MultiHeadAttention(layer.attn, a, a, config_.n_heads, mask));
    x = ad::Add(x, layer.ffn(layer.ln_ffn(x)));
  }
  return final_ln_(x);
}

Tensor Encoder::Forward(const corpus::ModelInput& input) const {
  Tensor mask;
  if (config_.local_first_layer && !input.sent_spans.empty()) {
    mask = SentenceLocalMask(input);
  }
  return Run(input.token_ids, mask);
}

Tensor Encoder::ForwardTokens(std::span<const corpus::TokenId> ids) const {
  return Run(ids, Tensor());
}

// ---------------------------------------------------------------------------
// Classifier and extractive model

Classifier::Classifier(ParameterSet& ps, const std::string& prefix,
                       std::size_t d) {
  layers_[0].Init(ps, prefix + ".mlp0", d, d);
  layers_[1].Init(ps, prefix + ".mlp1", d, d);
  layers_[2].Init(ps, prefix + ".mlp2", d, 1);
}

Tensor Classifier::operator()(const Tensor& h) const {
  const bool single = h.rank() == 1;
  Tensor x = single ? ad::Reshape(h, {1, h.dim(0)}) : h;
  x = ad::Relu(layers_[0](x));
  x = ad::Relu(layers_[1](x));
  x = ad::Sigmoid(layers_[2](x));
  return ad::Reshape(x, single ? ad::Shape{} : ad::Shape{x.dim(0)});
}

ExtractiveModel::ExtractiveModel(const EncoderConfig& config,
                                 std::uint64_t seed)
    : config_(config),
      seed_(seed),
      params_(seed),
      encoder_(config, params_, "encoder"),
      classifier_(params_, "classifier", config.d_model) {}

corpus::ModelInput ExtractiveModel::BuildInput(
    const corpus::Document& doc) const {
  return corpus::BuildModelInput(doc, config_.max_len);
}

EncoderOutput ExtractiveModel::Encode(const corpus::ModelInput& input) const {
  for (int p : input.cls_pos) {
    if (p < 0 || static_cast<std::size_t>(p) >= input.token_ids.size()) {
      Fail(ErrorCode::kInvalidArgument, "encode: position out of range");
    }
  }
  if (input.cls_pos.empty() || input.doc_pos < 0 ||
      static_cast<std::size_t>(input.doc_pos) >= input.token_ids.size()) {
    Fail(ErrorCode::kInvalidArgument, "encode: position out of range");
  }
  EncoderOutput out;
  out.hidden = encoder_.Forward(input);
  out.z_x = ad::Row(out.hidden, input.doc_pos);
  std::vector<std::int32_t> rows(input.cls_pos.begin(), input.cls_pos.end());
  out.h = ad::EmbeddingGather(out.hidden, rows);
  out.probs = classifier_(out.h);
  return out;
}

std::string EncoderConfigToJson(const EncoderConfig& c) {
  nlohmann::json j = {{"vocab_size", c.vocab_size},
                      {"d_model", c.d_model},
                      {"n_layers", c.n_layers},
                      {"n_heads", c.n_heads},
                      {"ffn_dim", c.ffn_dim},
                      {"max_len", c.max_len},
                      {"dropout", c.dropout},
                      {"position_embeddings", c.position_embeddings},
                      {"local_first_layer", c.local_first_layer}};
  return j.dump();
}

EncoderConfig EncoderConfigFromJson(const std::string& text) {
  EncoderConfig c;
  try {
    auto j = nlohmann::json::parse(text);
    c.vocab_size = j.at("vocab_size");
    c.d_model = j.at("d_model");
    c.n_layers = j.at("n_layers");
    c.n_heads = j.at("n_heads");
    c.ffn_dim = j.at("ffn_dim");
    c.max_len = j.at("max_len");
    c.dropout = j.value("dropout", 0.0);
    c.position_embeddings = j.value("position_embeddings", true);
    c.local_first_layer = j.value("local_first_layer", true);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("bad encoder config metadata: ") + e.what());
  }
  return c;
}

void ExtractiveModel::Save(const std::string& path,
                           const std::string& meta_json) const {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_json);
  } catch (const nlohmann::json::exception&) {
    Fail(ErrorCode::kInvalidArgument, "checkpoint metadata is not JSON");
  }
  meta["kind"] = "extractive";
  meta["seed"] = seed_;
  meta["encoder"] = nlohmann::json::parse(EncoderConfigToJson(config_));
  ad::Checkpoint ckpt;
  ckpt.meta_json = meta.dump();
  ckpt.tensors = params_.named();
  ad::SaveCheckpoint(path, ckpt);
}

std::unique_ptr<ExtractiveModel> ExtractiveModel::Load(const std::string& path,
                                                       std::string* meta_json) {
  ad::Checkpoint ckpt = ad::LoadCheckpoint(path);
  nlohmann::json meta = nlohmann::json::parse(ckpt.meta_json);
  if (meta.value("kind", "") != "extractive") {
    Fail(ErrorCode::kState, "checkpoint " + path + " is not an extractive model");
  }
  EncoderConfig config = EncoderConfigFromJson(meta.at("encoder").dump());
  auto model = std::make_unique<ExtractiveModel>(
      config, meta.value("seed", std::uint64_t{0}));
  ad::RestoreTensors(ckpt, model->params_.named());
  if (meta_json) *meta_json = ckpt.meta_json;
  return model;
}

std::unique_ptr<ExtractiveModel> ExtractiveModel::Clone() const {
  auto copy = std::make_unique<ExtractiveModel>(config_, seed_);
  copy->params_.CopyValuesFrom(params_);
  return copy;
}

Tensor CandidateEmbedding(const EncoderOutput& output,
                          std::span<const int> indices) {
  if (indices.empty()) {
    Fail(ErrorCode::kInvalidArgument, "candidate_embedding: empty indices");
  }
  return ad::MeanPool(output.h, indices);
}

}  // namespace colo::model
