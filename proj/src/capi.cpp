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

#include "colo/colo.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "colo/common.hpp"
#include "colo/config.hpp"
#include "colo/inference.hpp"
#include "colo/pipeline.hpp"

struct colo_config {
  colo::config::ConfigValues values;
};

struct colo_model {
  std::unique_ptr<colo::model::ExtractiveModel> model;
};

namespace {

thread_local std::string last_error;

colo_status ToStatus(colo::ErrorCode code) {
  switch (code) {
    case colo::ErrorCode::kInvalidArgument:
      return COLO_ERR_INVALID_ARGUMENT;
    case colo::ErrorCode::kIo:
      return COLO_ERR_IO;
    case colo::ErrorCode::kParse:
      return COLO_ERR_PARSE;
    case colo::ErrorCode::kConfig:
      return COLO_ERR_CONFIG;
    case colo::ErrorCode::kState:
      return COLO_ERR_STATE;
    case colo::ErrorCode::kInternal:
      return COLO_ERR_INTERNAL;
  }
  return COLO_ERR_INTERNAL;
}

template <typename F>
colo_status Guard(F&& body) {
  try {
    body();
    return COLO_OK;
  } catch (const colo::Error& e) {
    last_error = e.what();
    return ToStatus(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return COLO_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return COLO_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return COLO_ERR_INTERNAL;
  }
}

void NeedArg(const void* p, const char* name) {
  if (!p) {
    colo::Fail(colo::ErrorCode::kInvalidArgument,
               std::string(name) + " must not be NULL");
  }
}

std::string Str(const char* s) { return s ? std::string(s) : std::string(); }

}  // namespace

extern "C" {

const char* colo_version(void) { return "0.1.0"; }

const char* colo_last_error(void) { return last_error.c_str(); }

colo_status colo_config_new(colo_config** out) {
  return Guard([&] {
    NeedArg(out, "out");
    *out = new colo_config();
  });
}

void colo_config_free(colo_config* config) { delete config; }

colo_status colo_config_load(colo_config* config, const char* path) {
  return Guard([&] {
    NeedArg(config, "config");
    NeedArg(path, "path");
    config->values.MergeFile(path);
  });
}

colo_status colo_config_set(colo_config* config, const char* key,
                            const char* value) {
  return Guard([&] {
    NeedArg(config, "config");
    NeedArg(key, "key");
    NeedArg(value, "value");
    config->values.Set(key, value);
  });
}

colo_status colo_config_get(const colo_config* config, const char* key,
                            char* buf, size_t cap, size_t* len) {
  return Guard([&] {
    NeedArg(config, "config");
    NeedArg(key, "key");
    const std::string& v = config->values.Get(key);
    if (len) *len = v.size();
    if (buf && cap > 0) {
      const std::size_t n = std::min(cap - 1, v.size());
      std::memcpy(buf, v.data(), n);
      buf[n] = '\0';
    }
  });
}

colo_status colo_config_validate(const colo_config* config) {
  return Guard([&] {
    NeedArg(config, "config");
    colo::config::Resolve(config->values);
  });
}

colo_status colo_config_write(const colo_config* config, const char* path) {
  return Guard([&] {
    NeedArg(config, "config");
    NeedArg(path, "path");
    colo::config::WriteResolved(path, config->values);
  });
}

colo_status colo_run_synth(const colo_config* config, const char* out_dir) {
  return Guard([&] {
    NeedArg(config, "config");
    colo::pipeline::RunSynth(config->values, Str(out_dir));
  });
}

colo_status colo_run_train_ext(const colo_config* config, const char* data_dir,
                               const char* out_dir, colo_regime regime) {
  return Guard([&] {
    NeedArg(config, "config");
    colo::train::Regime r;
    switch (regime) {
      case COLO_REGIME_ONLINE:
        r = colo::train::Regime::kOnline;
        break;
      case COLO_REGIME_NAIVE:
        r = colo::train::Regime::kNaive;
        break;
      case COLO_REGIME_BCE:
        r = colo::train::Regime::kBceOnly;
        break;
      default:
        colo::Fail(colo::ErrorCode::kInvalidArgument, "unknown regime");
    }
    colo::pipeline::RunTrainExtractive(config->values, Str(data_dir),
                                       Str(out_dir), r);
  });
}

colo_status colo_run_eval(const colo_config* config, const char* checkpoint,
                          const char* data_dir, const char* out_dir,
                          const char* systems, const char* reranker_checkpoint) {
  return Guard([&] {
    NeedArg(config, "config");
    colo::pipeline::RunEval(config->values, Str(checkpoint), Str(data_dir),
                            Str(out_dir),
                            systems ? systems : "colo,topk,lead,oracle",
                            Str(reranker_checkpoint));
  });
}

colo_status colo_run_train_abs(const colo_config* config, const char* data_dir,
                               const char* out_dir) {
  return Guard([&] {
    NeedArg(config, "config");
    colo::pipeline::RunTrainAbstractive(config->values, Str(data_dir),
                                        Str(out_dir));
  });
}

colo_status colo_run_eval_abs(const colo_config* config, const char* checkpoint,
                              const char* data_dir, const char* out_dir) {
  return Guard([&] {
    NeedArg(config, "config");
    colo::pipeline::RunEvalAbstractive(config->values, Str(checkpoint),
                                       Str(data_dir), Str(out_dir));
  });
}

colo_status colo_run_bench(const colo_config* config, const char* checkpoint,
                           const char* data_dir, const char* out_dir) {
  return Guard([&] {
    NeedArg(config, "config");
    colo::pipeline::RunBench(config->values, Str(checkpoint), Str(data_dir),
                             Str(out_dir));
  });
}

colo_status colo_run_cost(const colo_config* config, const char* data_dir,
                          const char* out_dir) {
  return Guard([&] {
    NeedArg(config, "config");
    colo::pipeline::RunCost(config->values, Str(data_dir), Str(out_dir));
  });
}

colo_status colo_run_viz(const colo_config* config, const char* checkpoint,
                         const char* data_dir, const char* out_dir, int svg,
                         int raw, size_t* docs, size_t* ordered) {
  return Guard([&] {
    NeedArg(config, "config");
    auto s = colo::pipeline::RunViz(config->values, Str(checkpoint),
                                    Str(data_dir), Str(out_dir), svg != 0,
                                    raw != 0);
    if (docs) *docs = s.docs;
    if (ordered) *ordered = s.ordered;
  });
}

colo_status colo_run_score(const char* hyp_path, const char* ref_path,
                           const char* out_dir, colo_scores* mean) {
  return Guard([&] {
    NeedArg(hyp_path, "hyp_path");
    NeedArg(ref_path, "ref_path");
    NeedArg(out_dir, "out_dir");
    auto m = colo::pipeline::RunScore(hyp_path, ref_path, out_dir);
    if (mean) *mean = {m.r1, m.r2, m.rl, m.js2};
  });
}

colo_status colo_score_tokens(const int32_t* cand, size_t cand_len,
                              const int32_t* ref, size_t ref_len,
                              colo_scores* out) {
  return Guard([&] {
    if (cand_len) NeedArg(cand, "cand");
    if (ref_len) NeedArg(ref, "ref");
    NeedArg(out, "out");
    auto s = colo::metrics::ScoreAll({cand, cand_len}, {ref, ref_len});
    *out = {s.r1, s.r2, s.rl, s.js2};
  });
}

colo_status colo_candidate_count(size_t clipped, const int* sizes,
                                 size_t num_sizes, size_t* out) {
  return Guard([&] {
    if (num_sizes) NeedArg(sizes, "sizes");
    NeedArg(out, "out");
    *out = colo::cand::CountCandidates(clipped, {sizes, num_sizes});
  });
}

colo_status colo_model_load(const char* path, colo_model** out) {
  return Guard([&] {
    NeedArg(path, "path");
    NeedArg(out, "out");
    auto m = std::make_unique<colo_model>();
    m->model = colo::model::ExtractiveModel::Load(path);
    *out = m.release();
  });
}

void colo_model_free(colo_model* model) { delete model; }

colo_status colo_model_num_params(const colo_model* model, size_t* out) {
  return Guard([&] {
    NeedArg(model, "model");
    NeedArg(out, "out");
    *out = model->model->params().NumScalars();
  });
}

colo_status colo_model_select(const colo_model* model,
                              const int32_t* const* sentences,
                              const size_t* lengths, size_t num_sentences,
                              const int* sizes, size_t num_sizes, int n_prime,
                              int* indices, size_t cap, size_t* count) {
  return Guard([&] {
    NeedArg(model, "model");
    NeedArg(sentences, "sentences");
    NeedArg(lengths, "lengths");
    NeedArg(sizes, "sizes");
    NeedArg(count, "count");
    colo::corpus::Document doc;
    doc.id = "c-api";
    for (size_t i = 0; i < num_sentences; ++i) {
      if (lengths[i]) NeedArg(sentences[i], "sentence");
      doc.sentences.emplace_back(sentences[i], sentences[i] + lengths[i]);
    }
    colo::cand::CandidateSpec spec;
    spec.sizes.assign(sizes, sizes + num_sizes);
    spec.n_prime = n_prime;
    colo::cand::ValidateCandidateSpec(spec);
    auto c = colo::infer::SelectColo(*model->model, doc, spec);
    *count = c.indices.size();
    if (cap) NeedArg(indices, "indices");
    for (size_t i = 0; i < std::min(cap, c.indices.size()); ++i) {
      indices[i] = c.indices[i];
    }
  });
}

}  // extern "C"
