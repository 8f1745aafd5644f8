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

// Transformer building blocks, the document encoder, and the extractive
// model (encoder plus sentence classifier).

#ifndef COLO_ENCODER_HPP_
#define COLO_ENCODER_HPP_

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "colo/autodiff.hpp"
#include "colo/corpus.hpp"

namespace colo::model {

using ad::Tensor;

// Owns a model's trainable tensors in registration order. Initialization
// draws from one generator, so equal seeds give equal parameters.
class ParameterSet {
 public:
  explicit ParameterSet(std::uint64_t seed) : rng_(seed) {}

  // Uniform Glorot initialization.
  Tensor Matrix(const std::string& name, std::size_t rows, std::size_t cols);
  Tensor Normal(const std::string& name, std::size_t rows, std::size_t cols,
                double stddev);
  Tensor Constant(const std::string& name, ad::Shape shape, double value);

  std::vector<ad::NamedTensor>& named() { return named_; }
  const std::vector<ad::NamedTensor>& named() const { return named_; }
  std::vector<Tensor> tensors() const;
  std::size_t NumScalars() const;
  void ZeroGrad();
  // Copies values (not gradients) from a set with identical layout.
  void CopyValuesFrom(const ParameterSet& other);

 private:
  std::mt19937_64 rng_;
  std::vector<ad::NamedTensor> named_;
};

struct LayerNormParams {
  Tensor gain;
  Tensor bias;

  void Init(ParameterSet& ps, const std::string& name, std::size_t d);
  Tensor operator()(const Tensor& x) const;
};

struct LinearParams {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]

  void Init(ParameterSet& ps, const std::string& name, std::size_t in,
            std::size_t out);
  Tensor operator()(const Tensor& x) const;
};

struct AttentionParams {
  LinearParams query;
  LinearParams key;
  LinearParams value;
  LinearParams output;

  void Init(ParameterSet& ps, const std::string& name, std::size_t d);
};

// Scaled dot-product attention of `queries` [m x d] over `memory` [n x d].
// `mask`, if defined, is an additive [m x n] matrix (0 or a large negative).
Tensor MultiHeadAttention(const AttentionParams& p, const Tensor& queries,
                          const Tensor& memory, int heads, const Tensor& mask);

struct FeedForwardParams {
  LinearParams in;
  LinearParams out;

  void Init(ParameterSet& ps, const std::string& name, std::size_t d,
            std::size_t hidden);
  Tensor operator()(const Tensor& x) const;
};

// Additive mask constants.
inline constexpr double kMaskedOut = -1e30;
// Lower-triangular causal mask of size n.
Tensor CausalMask(std::size_t n);

struct EncoderConfig {
  int vocab_size = 2000;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int ffn_dim = 128;
  int max_len = 256;
  double dropout = 0.0;
  bool position_embeddings = true;
  // The first layer attends only within each sentence span; <doc> sees all.
  bool local_first_layer = true;
};

void ValidateEncoderConfig(const EncoderConfig& config);

// Pre-LayerNorm transformer encoder with a final LayerNorm.
class Encoder {
 public:
  Encoder(const EncoderConfig& config, ParameterSet& params,
          const std::string& prefix);

  // Final hidden states [len x d_model].
  Tensor Forward(const corpus::ModelInput& input) const;
  // Same, for plain token ids with full attention in every layer.
  Tensor ForwardTokens(std::span<const corpus::TokenId> ids) const;

  const EncoderConfig& config() const { return config_; }

 private:
  struct Layer {
    LayerNormParams ln_attn;
    AttentionParams attn;
    LayerNormParams ln_ffn;
    FeedForwardParams ffn;
  };

  Tensor Run(std::span<const corpus::TokenId> ids, const Tensor& first_mask) const;

  EncoderConfig config_;
  Tensor token_embedding_;
  Tensor position_embedding_;
  std::vector<Layer> layers_;
  LayerNormParams final_ln_;
};

// Sentence classifier: d -> d -> d -> 1 with relu between and a sigmoid out.
class Classifier {
 public:
  Classifier() = default;
  Classifier(ParameterSet& params, const std::string& prefix, std::size_t d);

  // Rows of `h` [n x d] to probabilities [n]. A single vector [d] gives a
  // rank-0 probability.
  Tensor operator()(const Tensor& h) const;

  LinearParams& layer(int i) { return layers_[i]; }

 private:
  LinearParams layers_[3];
};

struct EncoderOutput {
  Tensor hidden;  // [len x d]
  Tensor z_x;     // [d], the document vector
  Tensor h;       // [n x d], one row per kept sentence
  Tensor probs;   // [n]

  std::size_t num_sentences() const { return h.defined() ? h.dim(0) : 0; }
};

class ExtractiveModel {
 public:
  ExtractiveModel(const EncoderConfig& config, std::uint64_t seed);
  ExtractiveModel(const ExtractiveModel&) = delete;
  ExtractiveModel& operator=(const ExtractiveModel&) = delete;

  EncoderOutput Encode(const corpus::ModelInput& input) const;
  corpus::ModelInput BuildInput(const corpus::Document& doc) const;

  const EncoderConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  Classifier& classifier() { return classifier_; }

  void Save(const std::string& path, const std::string& meta_json = "{}") const;
  // Loads a checkpoint written by Save; the config comes from its metadata.
  static std::unique_ptr<ExtractiveModel> Load(const std::string& path,
                                               std::string* meta_json = nullptr);
  std::unique_ptr<ExtractiveModel> Clone() const;

 private:
  EncoderConfig config_;
  std::uint64_t seed_;
  ParameterSet params_;
  Encoder encoder_;
  Classifier classifier_;
};

// Mean of the rows of `output.h` named by `indices`.
Tensor CandidateEmbedding(const EncoderOutput& output,
                          std::span<const int> indices);

// Config <-> JSON text used in checkpoint metadata.
std::string EncoderConfigToJson(const EncoderConfig& config);
EncoderConfig EncoderConfigFromJson(const std::string& json);

}  // namespace colo::model

#endif  // COLO_ENCODER_HPP_
