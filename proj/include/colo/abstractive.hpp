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

// Toy sequence-to-sequence summarizer: teacher-forced NLL, beam and diverse
// beam search, online ranking of decoded beams, and cosine beam selection.

#ifndef COLO_ABSTRACTIVE_HPP_
#define COLO_ABSTRACTIVE_HPP_

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "colo/encoder.hpp"
#include "colo/metrics.hpp"
#include "colo/training.hpp"

namespace colo::abs {

using ad::Tensor;
using corpus::TokenId;

struct DecodeConfig {
  int beam_size = 8;
  int num_groups = 8;
  double diversity_penalty = 1.0;
  // Maximum emitted tokens, <eos> included.
  int max_len = 32;
};

void ValidateDecodeConfig(const DecodeConfig& config);

struct Seq2SeqConfig {
  model::EncoderConfig encoder;
  int decoder_layers = 2;
  int decoder_heads = 4;
  DecodeConfig decode;
};

void ValidateSeq2SeqConfig(const Seq2SeqConfig& config);
std::string Seq2SeqConfigToJson(const Seq2SeqConfig& config);
Seq2SeqConfig Seq2SeqConfigFromJson(const std::string& json);

struct DecodedCandidate {
  // Emitted tokens; the last is <eos> unless max_len was reached.
  corpus::TokenSeq tokens;
  double logprob = 0.0;
  int group = 0;
  // Decoder state that emitted the last token, at position z_index.
  std::vector<double> z_c;
  std::size_t z_index = 0;
};

// Emitted tokens without a trailing <eos>.
corpus::TokenSeq ContentTokens(const corpus::TokenSeq& tokens);

// Next-token distribution for a prefix of emitted tokens (without <bos>),
// plus the decoder state at the last input position.
struct StepOutput {
  std::vector<double> logprobs;
  std::vector<double> state;
};

class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual StepOutput Score(std::span<const TokenId> prefix) const = 0;
  virtual TokenId eos() const { return corpus::special::kEos; }
};

// Width-`beam` search. Finished hypotheses stay in the beam and compete on
// log-probability. Results are sorted by log-probability, ties to the
// lexicographically smaller token list.
std::vector<DecodedCandidate> BeamSearch(const StepScorer& scorer, int beam,
                                         int max_len);

// Groups of width beam_size / num_groups decoded one after another at every
// step. A group's scores for a token drop by diversity_penalty times the
// number of earlier groups that emitted it at that step. Stored log-probs
// are the unpenalized model values.
std::vector<DecodedCandidate> DiverseBeamSearch(const StepScorer& scorer,
                                                const DecodeConfig& config);

class Seq2SeqModel {
 public:
  Seq2SeqModel(const Seq2SeqConfig& config, std::uint64_t seed);
  Seq2SeqModel(const Seq2SeqModel&) = delete;
  Seq2SeqModel& operator=(const Seq2SeqModel&) = delete;

  corpus::ModelInput BuildInput(const corpus::Document& doc) const;
  // Encoder states [len x d]; row 0 is the <doc> slot.
  Tensor EncodeSource(const corpus::ModelInput& input) const;
  // Decoder states [t x d] for `inputs`, which start with <bos>.
  Tensor DecodeStates(const Tensor& memory, std::span<const TokenId> inputs) const;
  // Output layer tied to the decoder embedding, plus a bias: [t x V].
  Tensor Logits(const Tensor& states) const;

  const Seq2SeqConfig& config() const { return config_; }
  model::ParameterSet& params() { return params_; }
  const model::ParameterSet& params() const { return params_; }
  // The decoder embedding (also the output projection).
  Tensor& decoder_embedding() { return dec_embedding_; }
  Tensor& output_bias() { return out_bias_; }

  void Save(const std::string& path) const;
  static std::unique_ptr<Seq2SeqModel> Load(const std::string& path);

 private:
  struct DecoderLayer {
    model::LayerNormParams ln_self;
    model::AttentionParams self_attn;
    model::LayerNormParams ln_cross;
    model::AttentionParams cross_attn;
    model::LayerNormParams ln_ffn;
    model::FeedForwardParams ffn;
  };

  Seq2SeqConfig config_;
  std::uint64_t seed_;
  model::ParameterSet params_;
  model::Encoder encoder_;
  Tensor dec_embedding_;
  Tensor dec_position_;
  std::vector<DecoderLayer> layers_;
  model::LayerNormParams final_ln_;
  Tensor out_bias_;
};

// Scores prefixes with a model over a fixed encoder memory.
class ModelScorer : public StepScorer {
 public:
  ModelScorer(const Seq2SeqModel& model, Tensor memory)
      : model_(model), memory_(std::move(memory)) {}
  StepOutput Score(std::span<const TokenId> prefix) const override;

 private:
  const Seq2SeqModel& model_;
  Tensor memory_;
};

// Reference truncated to max_len - 1 tokens, followed by <eos>.
corpus::TokenSeq DecoderTarget(const corpus::Document& doc, int max_len);

// Mean teacher-forced token negative log-likelihood of the reference.
Tensor NllLoss(const Seq2SeqModel& model, const corpus::Document& doc);
Tensor NllLossWithMemory(const Seq2SeqModel& model, const Tensor& memory,
                         const corpus::Document& doc);

// Diverse beam search for one document under the current parameters.
std::vector<DecodedCandidate> DecodeCandidates(const Seq2SeqModel& model,
                                               const corpus::Document& doc);

struct Representations {
  Tensor z_x;  // encoder state at position 0
  Tensor z_c;  // decoder state at position |tokens| - 1
};

// Recomputes both vectors with gradient tracking.
Representations ExtractRepresentations(const Seq2SeqModel& model,
                                       const Tensor& memory,
                                       std::span<const TokenId> tokens);
Representations ExtractRepresentations(const Seq2SeqModel& model,
                                       const corpus::Document& doc,
                                       std::span<const TokenId> tokens);

// Drops exact duplicate token sequences, keeping the first.
std::vector<DecodedCandidate> Deduplicate(std::vector<DecodedCandidate> cands);

// Cosine of each candidate's cached state to the document vector.
std::vector<double> BeamCosines(const Tensor& z_x,
                                std::span<const DecodedCandidate> cands);

struct Selection {
  DecodedCandidate candidate;
  double cos = 0.0;
};

// Highest cosine; ties to the higher log-probability.
Selection SelectAbs(const Seq2SeqModel& model, const corpus::Document& doc);
// Highest log-probability.
Selection SelectMap(const Seq2SeqModel& model, const corpus::Document& doc);

class AbsTrainer {
 public:
  // Reuses the extractive schedule fields: warmup_steps_bce counts NLL-only
  // steps here.
  AbsTrainer(const train::TrainConfig& config,
             std::span<const corpus::Document> docs);

  train::StepReport StepNll(Seq2SeqModel& model);
  // Decode, rank by the discriminator, and add the ranking loss over the
  // beam representations. Fewer than two distinct non-empty beams gives an
  // NLL-only step with `degenerate` set.
  train::StepReport StepOnline(Seq2SeqModel& model);

  std::int64_t step() const { return step_; }

 private:
  train::StepReport Step(Seq2SeqModel& model, bool online);
  std::vector<std::size_t> NextBatch();

  train::TrainConfig config_;
  std::span<const corpus::Document> docs_;
  ad::AdamState adam_;
  std::int64_t step_ = 0;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

// NLL warmup followed by online ranking steps.
std::vector<train::StepReport> TrainAbstractive(
    Seq2SeqModel& model, std::span<const corpus::Document> docs,
    const train::TrainConfig& config,
    const std::function<void(const train::StepReport&)>& on_step = {});

struct AbsEvalRow {
  std::string selector;  // "cosine" or "map"
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
  double js2 = 0.0;
  std::size_t docs = 0;

  double rouge12() const { return 0.5 * (r1 + r2); }
};

struct AbsDecoded {
  std::string id;
  DecodedCandidate cosine;
  double cosine_cos = 0.0;
  DecodedCandidate map;
  double map_cos = 0.0;
};

// Both selectors over `docs`. Per-document selections go to `decoded` when
// given.
std::vector<AbsEvalRow> EvaluateAbstractive(const Seq2SeqModel& model,
                                            std::span<const corpus::Document> docs,
                                            int threads,
                                            std::vector<AbsDecoded>* decoded = nullptr);

void WriteAbsEvalCsv(const std::string& path, std::span<const AbsEvalRow> rows);
// One JSON object per line: {id, selector, tokens, logprob, cos}.
void WriteDecodedJsonl(const std::string& path, std::span<const AbsDecoded> rows);

}  // namespace colo::abs

#endif  // COLO_ABSTRACTIVE_HPP_
