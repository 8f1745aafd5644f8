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

#include "colo/inference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "colo/common.hpp"
#include "colo/twostage.hpp"

namespace colo::infer {

std::string_view ToString(SystemKind kind) {
  switch (kind) {
    case SystemKind::kColoExt:
      return "colo";
    case SystemKind::kClassifierTopK:
      return "topk";
    case SystemKind::kLead:
      return "lead";
    case SystemKind::kOracleSet:
      return "oracle";
    case SystemKind::kTwoStage:
      return "twostage";
  }
  return "colo";
}

SystemKind ParseSystem(std::string_view name) {
  for (auto k : {SystemKind::kColoExt, SystemKind::kClassifierTopK,
                 SystemKind::kLead, SystemKind::kOracleSet,
                 SystemKind::kTwoStage}) {
    if (ToString(k) == name) return k;
  }
  Fail(ErrorCode::kInvalidArgument,
       "unknown system '" + std::string(name) +
           "' (expected colo, topk, lead, oracle or twostage)");
}

std::vector<SystemKind> ParseSystems(std::string_view list) {
  std::vector<SystemKind> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    std::string_view item = list.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      SystemKind k = ParseSystem(item);
      if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    start = end + 1;
  }
  if (out.empty()) Fail(ErrorCode::kInvalidArgument, "no systems given");
  return out;
}

std::size_t ArgmaxCosine(std::span<const double> cosines,
                         std::span<const cand::Candidate> cands) {
  if (cosines.empty() || cosines.size() != cands.size()) {
    Fail(ErrorCode::kInvalidArgument, "argmax: cosine/candidate size mismatch");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < cosines.size(); ++i) {
    if (cosines[i] > cosines[best] ||
        (cosines[i] == cosines[best] &&
         cands[i].indices < cands[best].indices)) {
      best = i;
    }
  }
  return best;
}

std::vector<double> CandidateCosines(const model::EncoderOutput& out,
                                     std::span<const cand::Candidate> cands) {
  ad::NoGradGuard no_grad;
  std::vector<double> cos;
  cos.reserve(cands.size());
  for (const auto& c : cands) {
    cos.push_back(
        ad::CosineSimilarity(out.z_x, model::CandidateEmbedding(out, c.indices))
            .item());
  }
  return cos;
}

cand::Candidate SelectColo(const model::ExtractiveModel& model,
                           const corpus::Document& doc,
                           const cand::CandidateSpec& spec) {
  ad::NoGradGuard no_grad;
  auto out = model.Encode(model.BuildInput(doc));
  auto probs = out.probs.data();
  auto pool = cand::CandidatePool({probs.begin(), probs.end()}, spec);
  if (pool.size() == 1) return pool.front();
  auto cos = CandidateCosines(out, pool);
  return pool[ArgmaxCosine(cos, pool)];
}

cand::Candidate SelectTopK(const model::ExtractiveModel& model,
                           const corpus::Document& doc, int k) {
  if (k < 1) Fail(ErrorCode::kInvalidArgument, "top-k: k must be >= 1");
  ad::NoGradGuard no_grad;
  auto out = model.Encode(model.BuildInput(doc));
  auto probs = out.probs.data();
  cand::Candidate c;
  c.indices = cand::ClipTopK({probs.begin(), probs.end()}, k);
  return c;
}

namespace {

struct DocScores {
  std::vector<metrics::ScoreRow> rows;  // one per system
};

cand::Candidate OracleFor(const corpus::Document& doc,
                          const model::ExtractiveModel* model,
                          const EvalConfig& cfg) {
  std::size_t n = doc.num_sentences();
  if (model) n = model->BuildInput(doc).num_sentences();
  if (!cfg.oracle_full_space) {
    if (!model) Fail(ErrorCode::kInvalidArgument, "pool oracle needs a model");
    ad::NoGradGuard no_grad;
    auto out = model->Encode(model->BuildInput(doc));
    auto probs = out.probs.data();
    return cand::OracleCandidate(
        cand::CandidatePool({probs.begin(), probs.end()}, cfg.spec), doc,
        cfg.discriminator);
  }
  // Every size another system can emit, so the oracle dominates them all.
  const int ni = static_cast<int>(n);
  std::set<int> sizes(cfg.spec.sizes.begin(), cfg.spec.sizes.end());
  sizes.insert(std::min(cfg.topk_k, ni));
  sizes.insert(std::min(cfg.lead_k, ni));
  sizes.insert(std::min(cfg.spec.n_prime, ni));
  std::vector<int> sz(sizes.begin(), sizes.end());
  return cand::ExhaustiveOracle(doc, n, sz, cfg.discriminator);
}

}  // namespace

std::vector<EvalRow> Evaluate(std::span<const corpus::Document> docs,
                              std::span<const SystemKind> systems,
                              const model::ExtractiveModel* model,
                              const twostage::Reranker* reranker,
                              const EvalConfig& cfg, const SelectionSink& sink) {
  if (systems.empty()) Fail(ErrorCode::kInvalidArgument, "evaluate: no systems");
  cand::ValidateCandidateSpec(cfg.spec);
  for (SystemKind s : systems) {
    const bool needs_model = s == SystemKind::kColoExt ||
                             s == SystemKind::kClassifierTopK ||
                             s == SystemKind::kTwoStage ||
                             (s == SystemKind::kOracleSet && !cfg.oracle_full_space);
    if (needs_model && !model) {
      Fail(ErrorCode::kInvalidArgument,
           "system " + std::string(ToString(s)) + " needs a model");
    }
    if (s == SystemKind::kTwoStage && !reranker) {
      Fail(ErrorCode::kInvalidArgument, "system twostage needs a reranker");
    }
  }
  std::vector<DocScores> per_doc(docs.size());
  std::vector<std::vector<cand::Candidate>> chosen(docs.size());
  const int threads = cfg.threads > 0 ? cfg.threads : WorkerThreads();
  ParallelFor(docs.size(), threads, [&](std::size_t i) {
    const auto& doc = docs[i];
    per_doc[i].rows.resize(systems.size());
    chosen[i].resize(systems.size());
    for (std::size_t s = 0; s < systems.size(); ++s) {
      cand::Candidate c;
      switch (systems[s]) {
        case SystemKind::kColoExt:
          c = SelectColo(*model, doc, cfg.spec);
          break;
        case SystemKind::kClassifierTopK:
          c = SelectTopK(*model, doc, cfg.topk_k);
          break;
        case SystemKind::kLead:
          c = cand::Lead(doc, cfg.lead_k);
          break;
        case SystemKind::kOracleSet:
          c = OracleFor(doc, model, cfg);
          break;
        case SystemKind::kTwoStage:
          c = twostage::RerankTwoStage(*model, *reranker, doc, cfg.spec).chosen;
          break;
      }
      per_doc[i].rows[s] =
          metrics::ScoreAll(cand::CandidateTokens(doc, c.indices), doc.reference);
      chosen[i][s] = std::move(c);
    }
  });
  if (sink) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      for (std::size_t s = 0; s < systems.size(); ++s) {
        sink(systems[s], i, chosen[i][s]);
      }
    }
  }
  std::vector<EvalRow> rows;
  for (std::size_t s = 0; s < systems.size(); ++s) {
    EvalRow row;
    row.system = std::string(ToString(systems[s]));
    row.docs = docs.size();
    row.seed = cfg.seed;
    for (const auto& d : per_doc) {
      row.r1 += d.rows[s].r1;
      row.r2 += d.rows[s].r2;
      row.rl += d.rows[s].rl;
      row.js2 += d.rows[s].js2;
    }
    if (!docs.empty()) {
      const double inv = 1.0 / static_cast<double>(docs.size());
      row.r1 *= inv;
      row.r2 *= inv;
      row.rl *= inv;
      row.js2 *= inv;
    }
    rows.push_back(row);
  }
  return rows;
}

void WriteEvalCsv(const std::string& path, std::span<const EvalRow> rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path);
  os << "system,r1,r2,rl,js2,n_docs,seed\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%zu,%llu\n",
                  r.system.c_str(), r.r1, r.r2, r.rl, r.js2, r.docs,
                  static_cast<unsigned long long>(r.seed));
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Projection

int RankTercile(int rank, std::size_t m) {
  if (rank < 1 || m == 0) return 0;
  return 1 + static_cast<int>((static_cast<std::size_t>(rank - 1) * 3) / m);
}

std::vector<VizRow> ExportCandidateEmbeddings(
    const model::ExtractiveModel& model, const corpus::Document& doc,
    const cand::CandidateSpec& spec, metrics::DiscriminatorKind kind,
    bool keep_raw) {
  ad::NoGradGuard no_grad;
  auto out = model.Encode(model.BuildInput(doc));
  auto probs = out.probs.data();
  auto pool = cand::CandidatePool({probs.begin(), probs.end()}, spec);
  if (pool.size() < 3) {
    Fail(ErrorCode::kInvalidArgument,
         "too few points for document " + doc.id + " (" +
             std::to_string(pool.size()) + " candidates)");
  }
  cand::RankCandidates(pool, doc, kind);
  const std::size_t m = pool.size();
  const std::size_t d = out.z_x.numel();

  Eigen::MatrixXd points(m + 1, d);
  auto zx = out.z_x.data();
  for (std::size_t j = 0; j < d; ++j) points(0, j) = zx[j];
  std::vector<double> cos(m);
  for (std::size_t i = 0; i < m; ++i) {
    ad::Tensor e = model::CandidateEmbedding(out, pool[i].indices);
    auto v = e.data();
    for (std::size_t j = 0; j < d; ++j) points(i + 1, j) = v[j];
    cos[i] = ad::CosineSimilarity(out.z_x, e).item();
  }

  Eigen::RowVectorXd mean = points.colwise().mean();
  Eigen::MatrixXd centered = points.rowwise() - mean;
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigenvalues ascend; take the last two columns. Each axis is signed so
  // that its largest-magnitude component is positive.
  Eigen::MatrixXd axes(d, 2);
  for (int a = 0; a < 2; ++a) {
    Eigen::VectorXd v = solver.eigenvectors().col(static_cast<Eigen::Index>(d) - 1 - a);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    axes.col(a) = v;
  }
  Eigen::MatrixXd proj = centered * axes;

  std::vector<VizRow> rows(m + 1);
  rows[0].doc_id = doc.id;
  rows[0].anchor = true;
  rows[0].x = proj(0, 0);
  rows[0].y = proj(0, 1);
  for (std::size_t i = 0; i < m; ++i) {
    VizRow& r = rows[i + 1];
    r.doc_id = doc.id;
    r.indices = pool[i].indices;
    r.rank = pool[i].rank;
    r.group = RankTercile(r.rank, m);
    r.x = proj(i + 1, 0);
    r.y = proj(i + 1, 1);
    r.cos = cos[i];
  }
  if (keep_raw) {
    for (std::size_t i = 0; i <= m; ++i) {
      rows[i].raw.resize(d);
      for (std::size_t j = 0; j < d; ++j) rows[i].raw[j] = points(i, j);
    }
  }
  return rows;
}

TercileCosines MeanTercileCosines(std::span<const VizRow> rows) {
  double top = 0.0, bottom = 0.0;
  int nt = 0, nb = 0;
  for (const auto& r : rows) {
    if (r.group == 1) {
      top += r.cos;
      ++nt;
    } else if (r.group == 3) {
      bottom += r.cos;
      ++nb;
    }
  }
  TercileCosines t;
  if (nt) t.top = top / nt;
  if (nb) t.bottom = bottom / nb;
  return t;
}

namespace {

std::string JoinIndices(const std::vector<int>& idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(idx[i]);
  }
  return s;
}

}  // namespace

void WriteVizCsv(const std::string& path, std::span<const VizRow> rows,
                 bool with_raw) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path);
  os << "doc_id,cand_indices,group,x,y,cos";
  if (with_raw) os << ",vector";
  os << '\n';
  char buf[128];
  for (const auto& r : rows) {
    os << r.doc_id << ',' << (r.anchor ? "anchor" : JoinIndices(r.indices))
       << ',' << r.group;
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f", r.x, r.y, r.cos);
    os << buf;
    if (with_raw) {
      os << ',';
      for (std::size_t j = 0; j < r.raw.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%s%.6g", j ? " " : "", r.raw[j]);
        os << buf;
      }
    }
    os << '\n';
  }
}

void WriteVizSvg(const std::string& path, std::span<const VizRow> rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path);
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  bool first = true;
  for (const auto& r : rows) {
    if (first) {
      x0 = x1 = r.x;
      y0 = y1 = r.y;
      first = false;
    }
    x0 = std::min(x0, r.x);
    x1 = std::max(x1, r.x);
    y0 = std::min(y0, r.y);
    y1 = std::max(y1, r.y);
  }
  const double size = 480, pad = 30;
  const double sx = (x1 > x0) ? (size - 2 * pad) / (x1 - x0) : 1.0;
  const double sy = (y1 > y0) ? (size - 2 * pad) / (y1 - y0) : 1.0;
  const char* colors[] = {"#000000", "#d62728", "#ff7f0e", "#1f77b4"};
  char buf[256];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" "
        "height=\"480\" viewBox=\"0 0 480 480\">\n"
        "<rect width=\"480\" height=\"480\" fill=\"white\"/>\n";
  // Candidates first so anchors stay on top.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& r : rows) {
      if (r.anchor != (pass == 1)) continue;
      const double px = pad + (r.x - x0) * sx;
      const double py = size - pad - (r.y - y0) * sy;
      if (r.anchor) {
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.2f\" y=\"%.2f\" font-size=\"18\" "
                      "text-anchor=\"middle\" dominant-baseline=\"middle\">"
                      "&#9733;</text>\n",
                      px, py);
      } else {
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"%s\" "
                      "fill-opacity=\"0.8\"/>\n",
                      px, py, colors[std::clamp(r.group, 0, 3)]);
      }
      os << buf;
    }
  }
  os << "</svg>\n";
}

}  // namespace colo::infer
