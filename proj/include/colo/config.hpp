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

// Run configuration: a sectioned key = value text format with a registry of
// known keys and their defaults.
//
//   # comment
//   [training]
//   rank_weight = 20
//
// Unknown sections or keys are errors that name the key and line.

#ifndef COLO_CONFIG_HPP_
#define COLO_CONFIG_HPP_

#include <map>
#include <string>
#include <vector>

#include "colo/abstractive.hpp"
#include "colo/candidates.hpp"
#include "colo/corpus.hpp"
#include "colo/encoder.hpp"
#include "colo/twostage.hpp"
#include "colo/training.hpp"

namespace colo::config {

struct KeySpec {
  std::string section;
  std::string key;
  std::string default_value;
  std::string help;
};

// Every accepted key, in the order the resolved config is written.
const std::vector<KeySpec>& Registry();

// Raw "section.key" -> value text, always holding every registered key.
class ConfigValues {
 public:
  // All defaults.
  ConfigValues();

  // Overlays a file. Errors carry "<path>:<line>".
  void MergeFile(const std::string& path);
  void MergeText(const std::string& text, const std::string& origin);
  // "section.key=value" override, e.g. from the command line.
  void Set(const std::string& assignment);
  void Set(const std::string& section_key, const std::string& value);

  const std::string& Get(const std::string& section_key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";

  corpus::SynthSpec synth;
  int test_docs = 100;
  std::size_t max_vocab = 30000;

  model::EncoderConfig encoder;

  cand::CandidateSpec spec;
  // Sizes derived from the training set's gold summary counts.
  bool sizes_auto = false;
  // 0 derives k from the training set.
  int topk_k = 0;
  int lead_k = 0;
  bool oracle_full_space = true;
  metrics::DiscriminatorKind discriminator =
      metrics::DiscriminatorKind::kRouge12Mean;
  cand::CandidateSpec viz_spec;
  int viz_docs = 100;

  train::TrainConfig train;

  abs::Seq2SeqConfig abs;
  train::TrainConfig abs_train;
  int abs_eval_docs = 100;

  twostage::BenchConfig bench;
  int bench_docs = 50;
  int cand_len_cap = 300;
  int reranker_steps = 100;
};

// Typed view of `values`; range errors name the key.
RunConfig Resolve(const ConfigValues& values);

// Writes every key (defaults included) as a loadable config file.
void WriteResolved(const std::string& path, const ConfigValues& values);

}  // namespace colo::config

#endif  // COLO_CONFIG_HPP_
