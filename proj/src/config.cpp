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

#include "colo/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "colo/common.hpp"

namespace colo::config {

const std::vector<KeySpec>& Registry() {
  static const std::vector<KeySpec> keys = {
      {"run", "seed", "1", "seed for every random draw"},
      {"run", "threads", "0", "worker threads; 0 = COLO_THREADS or all cores"},
      {"run", "out_dir", "out", "output directory"},

      {"corpus", "num_docs", "500", "synthetic documents (train + test)"},
      {"corpus", "test_docs", "100", "held-out documents at the end"},
      {"corpus", "min_sentences", "6", ""},
      {"corpus", "max_sentences", "10", ""},
      {"corpus", "min_sentence_len", "5", ""},
      {"corpus", "max_sentence_len", "10", ""},
      {"corpus", "vocab_size", "2000", "synthetic vocabulary size"},
      {"corpus", "min_summary_sentences", "2", ""},
      {"corpus", "max_summary_sentences", "3", ""},
      {"corpus", "noise_rate", "0.1", "token substitution rate in references"},
      {"corpus", "salient_words", "64", ""},
      {"corpus", "salient_rate", "0.5", ""},
      {"corpus", "distractor_salient_rate", "0.05", ""},
      {"corpus", "duplicate_rate", "0.5", ""},
      {"corpus", "duplicate_noise", "0.3", ""},
      {"corpus", "max_vocab", "30000", "vocabulary cap for JSONL data"},

      {"encoder", "d_model", "64", ""},
      {"encoder", "n_layers", "2", ""},
      {"encoder", "n_heads", "4", ""},
      {"encoder", "ffn_dim", "128", ""},
      {"encoder", "max_len", "256", ""},
      {"encoder", "dropout", "0", "only 0 is supported"},
      {"encoder", "position_embeddings", "true", ""},
      {"encoder", "local_first_layer", "true", ""},

      {"candidates", "sizes", "2,3", "sentence counts per candidate, or auto"},
      {"candidates", "n_prime", "5", "clip size"},
      {"candidates", "topk_k", "0", "0 = rounded mean gold count"},
      {"candidates", "lead_k", "0", "0 = same as topk_k"},
      {"candidates", "oracle_full_space", "true", ""},
      {"candidates", "discriminator", "rouge12", "rouge12, rougeL or js2"},
      {"candidates", "viz_n_prime", "5", ""},
      {"candidates", "viz_sizes", "2,3", ""},
      {"candidates", "viz_docs", "100", ""},

      {"training", "margin", "0.01", ""},
      {"training", "warmup_steps_bce", "150", ""},
      {"training", "combined_steps", "1500", ""},
      {"training", "batch_size", "2", ""},
      {"training", "rank_loss_normalize", "true", "divide the hinge sum by the pair count"},
      {"training", "margin_scaled_by_rank_gap", "false", ""},
      {"training", "rank_weight", "20", "weight of the ranking term"},
      {"training", "lr_warmup", "300", ""},
      {"training", "lr_scale", "0.3", ""},
      {"training", "label_max_sents", "3", ""},
      {"training", "checkpoint_every", "0", ""},

      {"abstractive", "decoder_layers", "2", ""},
      {"abstractive", "decoder_heads", "4", ""},
      {"abstractive", "beam_size", "8", ""},
      {"abstractive", "num_groups", "8", ""},
      {"abstractive", "diversity_penalty", "1.0", ""},
      {"abstractive", "max_decode_len", "32", ""},
      {"abstractive", "warmup_steps_nll", "2000", ""},
      {"abstractive", "combined_steps", "200", ""},
      {"abstractive", "batch_size", "2", ""},
      {"abstractive", "rank_weight", "1", ""},
      {"abstractive", "margin", "0.01", ""},
      {"abstractive", "lr_warmup", "300", ""},
      {"abstractive", "lr_scale", "1", ""},
      {"abstractive", "eval_docs", "100", ""},

      {"bench", "sizes", "4,8,16,20,32", "candidate counts to sweep"},
      {"bench", "batch_mode", "one", "one or max"},
      {"bench", "repetitions", "3", ""},
      {"bench", "warmup_docs", "2", ""},
      {"bench", "memory_budget_mb", "256", "live-tensor budget for max batches"},
      {"bench", "pool_n_prime", "8", ""},
      {"bench", "pool_sizes", "2,3", ""},
      {"bench", "threads", "1", ""},
      {"bench", "docs", "50", ""},
      {"bench", "cand_len_cap", "300", "reranker candidate length cap"},
      {"bench", "reranker_steps", "100", "stage-2 steps in the cost report"},
  };
  return keys;
}

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool Known(const std::string& section_key) {
  for (const auto& k : Registry()) {
    if (k.section + "." + k.key == section_key) return true;
  }
  return false;
}

bool KnownSection(const std::string& section) {
  for (const auto& k : Registry()) {
    if (k.section == section) return true;
  }
  return false;
}

}  // namespace

ConfigValues::ConfigValues() {
  for (const auto& k : Registry()) values_[k.section + "." + k.key] = k.default_value;
}

void ConfigValues::MergeFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kConfig, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  MergeText(ss.str(), path);
}

void ConfigValues::MergeText(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        Fail(ErrorCode::kConfig, where + ": malformed section header '" + line + "'");
      }
      section = Trim(line.substr(1, line.size() - 2));
      if (!KnownSection(section)) {
        Fail(ErrorCode::kConfig, where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorCode::kConfig, where + ": expected key = value, got '" + line + "'");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (section.empty()) {
      Fail(ErrorCode::kConfig, where + ": key '" + key + "' outside a section");
    }
    const std::string full = section + "." + key;
    if (!Known(full)) Fail(ErrorCode::kConfig, where + ": unknown key '" + full + "'");
    values_[full] = value;
  }
}

void ConfigValues::Set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    Fail(ErrorCode::kConfig, "override '" + assignment + "' is not section.key=value");
  }
  Set(Trim(assignment.substr(0, eq)), Trim(assignment.substr(eq + 1)));
}

void ConfigValues::Set(const std::string& section_key, const std::string& value) {
  if (!Known(section_key)) {
    Fail(ErrorCode::kConfig, "unknown key '" + section_key + "'");
  }
  values_[section_key] = value;
}

const std::string& ConfigValues::Get(const std::string& section_key) const {
  auto it = values_.find(section_key);
  if (it == values_.end()) {
    Fail(ErrorCode::kConfig, "unknown key '" + section_key + "'");
  }
  return it->second;
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigValues& v) : v_(v) {}

  [[noreturn]] void Bad(const std::string& key, const std::string& why) const {
    Fail(ErrorCode::kConfig,
         "invalid value for " + key + ": '" + v_.Get(key) + "' (" + why + ")");
  }

  long long Int(const std::string& key, long long lo, long long hi) const {
    const std::string& s = v_.Get(key);
    long long out = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) Bad(key, "expected an integer");
    if (out < lo || out > hi) {
      Bad(key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return out;
  }

  double Real(const std::string& key, double lo, double hi) const {
    const std::string& s = v_.Get(key);
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(s, &used);
    } catch (const std::exception&) {
      Bad(key, "expected a number");
    }
    if (used != s.size()) Bad(key, "expected a number");
    if (!(out >= lo && out <= hi)) Bad(key, "out of range");
    return out;
  }

  bool Bool(const std::string& key) const {
    const std::string& s = v_.Get(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    Bad(key, "expected true or false");
  }

  std::vector<int> IntList(const std::string& key, int lo) const {
    std::vector<int> out;
    std::stringstream ss(v_.Get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = Trim(item);
      int x = 0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
      if (item.empty() || ec != std::errc() || p != item.data() + item.size()) {
        Bad(key, "expected a comma-separated integer list");
      }
      if (x < lo) Bad(key, "entries must be >= " + std::to_string(lo));
      out.push_back(x);
    }
    if (out.empty()) Bad(key, "empty list");
    return out;
  }

  const std::string& Str(const std::string& key) const { return v_.Get(key); }

 private:
  const ConfigValues& v_;
};

constexpr long long kBig = 1LL << 40;

}  // namespace

RunConfig Resolve(const ConfigValues& values) {
  Reader r(values);
  RunConfig c;
  c.seed = static_cast<std::uint64_t>(r.Int("run.seed", 0, kBig));
  c.threads = static_cast<int>(r.Int("run.threads", 0, 1024));
  c.out_dir = r.Str("run.out_dir");

  auto& s = c.synth;
  s.num_docs = static_cast<int>(r.Int("corpus.num_docs", 1, 10000000));
  c.test_docs = static_cast<int>(r.Int("corpus.test_docs", 0, 10000000));
  if (c.test_docs >= s.num_docs) r.Bad("corpus.test_docs", "must be below num_docs");
  s.min_sentences = static_cast<int>(r.Int("corpus.min_sentences", 1, 10000));
  s.max_sentences = static_cast<int>(r.Int("corpus.max_sentences", 1, 10000));
  s.min_sentence_len = static_cast<int>(r.Int("corpus.min_sentence_len", 1, 10000));
  s.max_sentence_len = static_cast<int>(r.Int("corpus.max_sentence_len", 1, 10000));
  s.vocab_size = static_cast<int>(r.Int("corpus.vocab_size", 1, 10000000));
  s.min_summary_sentences = static_cast<int>(r.Int("corpus.min_summary_sentences", 1, 10000));
  s.max_summary_sentences = static_cast<int>(r.Int("corpus.max_summary_sentences", 1, 10000));
  s.noise_rate = r.Real("corpus.noise_rate", 0.0, 1.0);
  s.salient_words = static_cast<int>(r.Int("corpus.salient_words", 1, 10000000));
  s.salient_rate = r.Real("corpus.salient_rate", 0.0, 1.0);
  s.distractor_salient_rate = r.Real("corpus.distractor_salient_rate", 0.0, 1.0);
  s.duplicate_rate = r.Real("corpus.duplicate_rate", 0.0, 1.0);
  s.duplicate_noise = r.Real("corpus.duplicate_noise", 0.0, 1.0);
  c.max_vocab = static_cast<std::size_t>(r.Int("corpus.max_vocab", corpus::special::kCount, kBig));
  try {
    corpus::ValidateSynthSpec(s);
  } catch (const Error& e) {
    Fail(ErrorCode::kConfig, std::string("[corpus] ") + e.what());
  }

  auto& e = c.encoder;
  e.vocab_size = s.vocab_size;
  e.d_model = static_cast<int>(r.Int("encoder.d_model", 1, 65536));
  e.n_layers = static_cast<int>(r.Int("encoder.n_layers", 1, 64));
  e.n_heads = static_cast<int>(r.Int("encoder.n_heads", 1, 1024));
  e.ffn_dim = static_cast<int>(r.Int("encoder.ffn_dim", 1, 1 << 20));
  e.max_len = static_cast<int>(r.Int("encoder.max_len", 2, 1 << 20));
  e.dropout = r.Real("encoder.dropout", 0.0, 0.0);
  e.position_embeddings = r.Bool("encoder.position_embeddings");
  e.local_first_layer = r.Bool("encoder.local_first_layer");
  if (e.d_model % e.n_heads != 0) r.Bad("encoder.n_heads", "must divide d_model");

  if (r.Str("candidates.sizes") == "auto") {
    c.sizes_auto = true;
  } else {
    c.spec.sizes = r.IntList("candidates.sizes", 1);
  }
  c.spec.n_prime = static_cast<int>(r.Int("candidates.n_prime", 1, 64));
  c.topk_k = static_cast<int>(r.Int("candidates.topk_k", 0, 10000));
  c.lead_k = static_cast<int>(r.Int("candidates.lead_k", 0, 10000));
  c.oracle_full_space = r.Bool("candidates.oracle_full_space");
  try {
    c.discriminator = metrics::ParseDiscriminator(r.Str("candidates.discriminator"));
  } catch (const Error&) {
    r.Bad("candidates.discriminator", "expected rouge12, rougeL or js2");
  }
  c.viz_spec.sizes = r.IntList("candidates.viz_sizes", 1);
  c.viz_spec.n_prime = static_cast<int>(r.Int("candidates.viz_n_prime", 1, 64));
  c.viz_docs = static_cast<int>(r.Int("candidates.viz_docs", 1, 10000000));

  auto& t = c.train;
  t.seed = c.seed;
  t.discriminator = c.discriminator;
  t.margin = r.Real("training.margin", 0.0, 1e9);
  t.warmup_steps_bce = static_cast<int>(r.Int("training.warmup_steps_bce", 0, kBig));
  t.combined_steps = static_cast<int>(r.Int("training.combined_steps", 0, kBig));
  t.batch_size = static_cast<int>(r.Int("training.batch_size", 1, 1 << 20));
  t.rank_loss_normalize = r.Bool("training.rank_loss_normalize");
  t.margin_scaled_by_rank_gap = r.Bool("training.margin_scaled_by_rank_gap");
  t.rank_weight = r.Real("training.rank_weight", 0.0, 1e9);
  t.lr_warmup = static_cast<int>(r.Int("training.lr_warmup", 1, kBig));
  t.lr_scale = r.Real("training.lr_scale", 1e-12, 1e9);
  t.label_max_sents = static_cast<int>(r.Int("training.label_max_sents", 1, 10000));
  t.checkpoint_every = static_cast<int>(r.Int("training.checkpoint_every", 0, kBig));

  auto& a = c.abs;
  a.encoder = e;
  a.encoder.local_first_layer = false;
  a.decoder_layers = static_cast<int>(r.Int("abstractive.decoder_layers", 1, 64));
  a.decoder_heads = static_cast<int>(r.Int("abstractive.decoder_heads", 1, 1024));
  if (e.d_model % a.decoder_heads != 0) {
    r.Bad("abstractive.decoder_heads", "must divide d_model");
  }
  a.decode.beam_size = static_cast<int>(r.Int("abstractive.beam_size", 1, 1024));
  a.decode.num_groups = static_cast<int>(r.Int("abstractive.num_groups", 1, 1024));
  if (a.decode.beam_size % a.decode.num_groups != 0) {
    r.Bad("abstractive.num_groups", "must divide beam_size");
  }
  a.decode.diversity_penalty = r.Real("abstractive.diversity_penalty", 0.0, 1e9);
  a.decode.max_len = static_cast<int>(r.Int("abstractive.max_decode_len", 1, 4096));
  auto& at = c.abs_train;
  at = t;
  at.warmup_steps_bce = static_cast<int>(r.Int("abstractive.warmup_steps_nll", 0, kBig));
  at.combined_steps = static_cast<int>(r.Int("abstractive.combined_steps", 0, kBig));
  at.batch_size = static_cast<int>(r.Int("abstractive.batch_size", 1, 1 << 20));
  at.rank_weight = r.Real("abstractive.rank_weight", 0.0, 1e9);
  at.margin = r.Real("abstractive.margin", 0.0, 1e9);
  at.lr_warmup = static_cast<int>(r.Int("abstractive.lr_warmup", 1, kBig));
  at.lr_scale = r.Real("abstractive.lr_scale", 1e-12, 1e9);
  c.abs_eval_docs = static_cast<int>(r.Int("abstractive.eval_docs", 1, 10000000));

  auto& b = c.bench;
  b.sizes = r.IntList("bench.sizes", 2);
  try {
    b.batch_mode = twostage::ParseBatchMode(r.Str("bench.batch_mode"));
  } catch (const Error&) {
    r.Bad("bench.batch_mode", "expected one or max");
  }
  b.repetitions = static_cast<int>(r.Int("bench.repetitions", 1, 1000));
  b.warmup_docs = static_cast<int>(r.Int("bench.warmup_docs", 0, 1000000));
  b.memory_budget_bytes =
      static_cast<std::size_t>(r.Int("bench.memory_budget_mb", 1, 1 << 20)) << 20;
  b.pool.n_prime = static_cast<int>(r.Int("bench.pool_n_prime", 1, 64));
  b.pool.sizes = r.IntList("bench.pool_sizes", 1);
  b.threads = static_cast<int>(r.Int("bench.threads", 1, 1024));
  c.bench_docs = static_cast<int>(r.Int("bench.docs", 1, 10000000));
  c.cand_len_cap = static_cast<int>(r.Int("bench.cand_len_cap", 2, 1 << 20));
  c.reranker_steps = static_cast<int>(r.Int("bench.reranker_steps", 0, kBig));
  return c;
}

void WriteResolved(const std::string& path, const ConfigValues& values) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path);
  os << "# Resolved configuration, defaults included.\n";
  std::string section;
  for (const auto& k : Registry()) {
    if (k.section != section) {
      section = k.section;
      os << "\n[" << section << "]\n";
    }
    os << k.key << " = " << values.Get(k.section + "." + k.key);
    if (!k.help.empty()) os << "  # " << k.help;
    os << '\n';
  }
}

}  // namespace colo::config
