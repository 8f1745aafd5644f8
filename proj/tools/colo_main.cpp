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

// Command-line entry point. Talks to the library only through colo.h.
//
// Exit codes: 0 success, 1 runtime or config failure, 2 usage error.

#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "colo/colo.h"

namespace {

struct Common {
  std::vector<std::string> configs;
  std::vector<std::string> sets;
  std::string seed;
  std::string threads;
  std::string out;
  std::string data;
  std::string checkpoint;
};

class ConfigHandle {
 public:
  ConfigHandle() { colo_config_new(&ptr_); }
  ~ConfigHandle() { colo_config_free(ptr_); }
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;
  colo_config* get() const { return ptr_; }

 private:
  colo_config* ptr_ = nullptr;
};

int Report(colo_status status) {
  if (status == COLO_OK) return 0;
  std::fprintf(stderr, "colo: error: %s\n", colo_last_error());
  return 1;
}

// Files first, then --set, then the dedicated flags.
colo_status BuildConfig(const Common& c, ConfigHandle& cfg) {
  for (const auto& path : c.configs) {
    if (auto s = colo_config_load(cfg.get(), path.c_str()); s != COLO_OK) return s;
  }
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) return COLO_ERR_CONFIG;
    std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (auto s = colo_config_set(cfg.get(), key.c_str(), value.c_str());
        s != COLO_OK) {
      return s;
    }
  }
  if (!c.seed.empty()) {
    if (auto s = colo_config_set(cfg.get(), "run.seed", c.seed.c_str()); s != COLO_OK) {
      return s;
    }
  }
  if (!c.threads.empty()) {
    if (auto s = colo_config_set(cfg.get(), "run.threads", c.threads.c_str());
        s != COLO_OK) {
      return s;
    }
  }
  if (!c.out.empty()) {
    if (auto s = colo_config_set(cfg.get(), "run.out_dir", c.out.c_str());
        s != COLO_OK) {
      return s;
    }
  }
  return colo_config_validate(cfg.get());
}

std::string OutDir(const ConfigHandle& cfg) {
  char buf[4096];
  size_t len = 0;
  colo_config_get(cfg.get(), "run.out_dir", buf, sizeof(buf), &len);
  return buf;
}

void AddCommon(CLI::App* app, Common& c, bool data = true) {
  app->add_option("--config", c.configs, "config file (repeatable)");
  app->add_option("--set", c.sets, "override, section.key=value (repeatable)");
  app->add_option("--seed", c.seed, "seed for all randomness");
  app->add_option("--threads", c.threads, "worker threads (0 = auto)");
  app->add_option("--out", c.out, "output directory");
  if (data) {
    app->add_option("--data", c.data,
                    "directory with train.jsonl/test.jsonl (default: synthesize)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive one-stage summarization toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(colo_version()));

  Common c;
  std::string systems = "colo,topk,lead,oracle";
  std::string reranker;
  std::string batch_mode, sizes;
  std::string hyp, ref;
  bool svg = false, raw = false;
  std::function<int()> action;

  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  AddCommon(synth, c, false);

  auto* train_ext = app.add_subcommand("train-ext", "train with online candidates");
  AddCommon(train_ext, c);
  auto* train_naive =
      app.add_subcommand("train-naive", "train with candidates cached after warmup");
  AddCommon(train_naive, c);

  auto* train_abs = app.add_subcommand("train-abs", "train the seq2seq model");
  AddCommon(train_abs, c);

  auto* eval = app.add_subcommand("eval", "evaluate extractive systems");
  AddCommon(eval, c);
  eval->add_option("--checkpoint", c.checkpoint, "extractive model checkpoint");
  eval->add_option("--systems", systems, "colo,topk,lead,oracle,twostage");
  eval->add_option("--reranker", reranker, "reranker checkpoint for twostage");

  auto* eval_abs = app.add_subcommand("eval-abs", "evaluate beam selection");
  AddCommon(eval_abs, c);
  eval_abs->add_option("--checkpoint", c.checkpoint, "seq2seq checkpoint");

  auto* bench = app.add_subcommand("bench", "throughput of one- vs two-stage selection");
  AddCommon(bench, c);
  bench->add_option("--checkpoint", c.checkpoint, "generator checkpoint (optional)");
  bench->add_option("--batch", batch_mode, "one or max");
  bench->add_option("--sizes", sizes, "candidate counts, e.g. 4,8,16");

  auto* cost = app.add_subcommand("cost", "training cost per pipeline stage");
  AddCommon(cost, c);

  auto* viz = app.add_subcommand("viz", "project candidate embeddings to 2D");
  AddCommon(viz, c);
  viz->add_option("--checkpoint", c.checkpoint, "extractive model checkpoint");
  viz->add_flag("--svg", svg, "also write viz.svg");
  viz->add_flag("--raw", raw, "append the raw vectors to viz.csv");

  auto* score = app.add_subcommand("score", "score hypotheses against references");
  score->add_option("--hyp", hyp, "hypotheses, one per line")->required();
  score->add_option("--ref", ref, "references, one per line")->required();
  score->add_option("--out", c.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "colo: %s\n\n%s", e.what(), app.help().c_str());
    return 2;
  }

  if (score->parsed()) {
    colo_scores mean{};
    int rc = Report(colo_run_score(hyp.c_str(), ref.c_str(), c.out.c_str(), &mean));
    if (rc == 0) {
      std::printf("r1=%.4f r2=%.4f rl=%.4f js2=%.4f\n", mean.r1, mean.r2, mean.rl,
                  mean.js2);
    }
    return rc;
  }

  const bool needs_checkpoint = eval->parsed() || eval_abs->parsed() || viz->parsed();
  if (needs_checkpoint && c.checkpoint.empty()) {
    std::fprintf(stderr, "colo: error: missing --checkpoint\n");
    return 1;
  }
  if (bench->parsed()) {
    if (!batch_mode.empty()) c.sets.push_back("bench.batch_mode=" + batch_mode);
    if (!sizes.empty()) c.sets.push_back("bench.sizes=" + sizes);
  }

  for (const auto& kv : c.sets) {
    if (kv.find('=') == std::string::npos) {
      std::fprintf(stderr, "colo: error: --set '%s' is not section.key=value\n",
                   kv.c_str());
      return 1;
    }
  }
  ConfigHandle cfg;
  if (int rc = Report(BuildConfig(c, cfg)); rc != 0) return rc;
  const std::string out = OutDir(cfg);
  const char* data = c.data.c_str();
  const char* ckpt = c.checkpoint.c_str();

  colo_status status = COLO_OK;
  if (synth->parsed()) {
    status = colo_run_synth(cfg.get(), out.c_str());
  } else if (train_ext->parsed()) {
    status = colo_run_train_ext(cfg.get(), data, out.c_str(), COLO_REGIME_ONLINE);
  } else if (train_naive->parsed()) {
    status = colo_run_train_ext(cfg.get(), data, out.c_str(), COLO_REGIME_NAIVE);
  } else if (train_abs->parsed()) {
    status = colo_run_train_abs(cfg.get(), data, out.c_str());
  } else if (eval->parsed()) {
    status = colo_run_eval(cfg.get(), ckpt, data, out.c_str(), systems.c_str(),
                           reranker.c_str());
  } else if (eval_abs->parsed()) {
    status = colo_run_eval_abs(cfg.get(), ckpt, data, out.c_str());
  } else if (bench->parsed()) {
    status = colo_run_bench(cfg.get(), ckpt, data, out.c_str());
  } else if (cost->parsed()) {
    status = colo_run_cost(cfg.get(), data, out.c_str());
  } else if (viz->parsed()) {
    size_t docs = 0, ordered = 0;
    status = colo_run_viz(cfg.get(), ckpt, data, out.c_str(), svg, raw, &docs,
                          &ordered);
    if (status == COLO_OK) {
      std::printf("top tercile closer than bottom on %zu of %zu documents\n",
                  ordered, docs);
    }
  }
  if (int rc = Report(status); rc != 0) return rc;
  std::printf("wrote %s\n", out.c_str());
  return 0;
}
