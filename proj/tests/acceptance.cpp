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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails. `--only 1,2,7` runs a subset.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "colo/abstractive.hpp"
#include "colo/autodiff.hpp"
#include "colo/candidates.hpp"
#include "colo/common.hpp"
#include "colo/corpus.hpp"
#include "colo/encoder.hpp"
#include "colo/gradcheck.hpp"
#include "colo/inference.hpp"
#include "colo/metrics.hpp"
#include "colo/training.hpp"
#include "colo/twostage.hpp"
#include "metric_cases.hpp"
#include "op_cases.hpp"
#include "test_util.hpp"
#include "toy_models.hpp"

namespace colo {
namespace {

// Tolerances and budgets.
constexpr double kMetricTol = 1e-6;
constexpr double kRankLossTol = 1e-6;
constexpr double kGradRelTol = 1e-4;
constexpr int kGradSeeds = 5;
constexpr int kSeeds = 3;
constexpr int kSeedVotes = 2;
constexpr double kThroughputSlack = 0.25;
constexpr double kMinSpeedup = 3.0;
constexpr double kVizFraction = 0.70;

constexpr double kBudget1 = 1.0;
constexpr double kBudget2 = 10.0;
constexpr double kBudget3 = 10.0;
constexpr double kBudget4 = 60.0;
constexpr double kBudget5 = 600.0;
constexpr double kBudget6 = 900.0;
constexpr double kBudget7 = 300.0;
constexpr double kBudget8 = 900.0;
constexpr double kBudget9 = 120.0;

// Extractive corpus: 500 documents, the last 100 held out.
constexpr int kTrainDocs = 400;
// Abstractive runs use a smaller synthetic vocabulary.
constexpr int kAbsVocab = 300;
constexpr int kAbsNllSteps = 2000;
constexpr int kAbsOnlineSteps = 200;

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Collects failures with a short reason each.
class Checker {
 public:
  void Expect(bool cond, const std::string& what) {
    ++checks_;
    if (!cond && failures_.size() < 5) failures_.push_back(what);
    if (!cond) ++failed_;
  }
  bool ok() const { return failed_ == 0; }
  std::string Summary() const {
    std::ostringstream out;
    out << checks_ - failed_ << "/" << checks_ << " checks";
    for (const auto& f : failures_) out << "; " << f;
    return out.str();
  }

 private:
  int checks_ = 0;
  int failed_ = 0;
  std::vector<std::string> failures_;
};

std::string Fmt(const char* fmt, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, a);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome CandidateCounts() {
  struct Row {
    int n_prime;
    std::vector<int> sizes;
    std::size_t expected;
  };
  const Row rows[] = {
      {5, {2, 3}, 20}, {5, {1, 2}, 15}, {8, {6}, 28}, {8, {6, 7}, 36}};
  Checker c;
  std::ostringstream got;
  for (const auto& r : rows) {
    std::vector<int> clipped(r.n_prime);
    for (int i = 0; i < r.n_prime; ++i) clipped[i] = i;
    const auto cands = cand::EnumerateCandidates(clipped, {r.sizes, r.n_prime});
    const std::size_t n = cands.size();
    got << n << " ";
    c.Expect(n == r.expected, "enumerated " + std::to_string(n));
    c.Expect(cand::CountCandidates(r.n_prime, r.sizes) == r.expected, "count");
    std::set<std::vector<int>> distinct;
    for (const auto& x : cands) distinct.insert(x.indices);
    c.Expect(distinct.size() == n, "duplicate candidates");
  }
  return {c.ok(), "counts " + got.str() + "| " + c.Summary()};
}

// ---------------------------------------------------------------------------

Outcome MetricSuite() {
  using testing::Words;
  Checker c;
  int hand = 0;
  for (const auto& r : metrics::cases::kRougeCases) {
    const auto cand = Words(r.cand);
    const auto ref = Words(r.ref);
    const auto s = r.n == 0 ? metrics::RougeL(cand, ref) : metrics::RougeN(cand, ref, r.n);
    const bool ok = std::abs(s.precision - r.p) <= kMetricTol &&
                    std::abs(s.recall - r.r) <= kMetricTol &&
                    std::abs(s.f1 - r.f) <= kMetricTol;
    c.Expect(ok, std::string("rouge '") + r.cand + "' vs '" + r.ref + "'");
    ++hand;
  }
  for (const auto& r : metrics::cases::kJs2Cases) {
    const double js = metrics::Js2Divergence(Words(r.a), Words(r.b));
    c.Expect(std::abs(js - r.js) <= kMetricTol,
             std::string("js2 '") + r.a + "' vs '" + r.b + "'");
    ++hand;
  }
  c.Expect(hand >= 20, "fewer than 20 hand cases");

  std::mt19937_64 rng(20260101);
  for (int trial = 0; trial < 1000; ++trial) {
    const int vocab = 2 + trial % 9;
    const auto a = testing::RandomTokens(rng, 12, vocab);
    const auto b = testing::RandomTokens(rng, 12, vocab);
    bool ok = true;
    for (int n : {1, 2}) {
      ok &= std::abs(metrics::RougeN(a, b, n).f1 - metrics::RougeN(b, a, n).f1) < 1e-12;
      if (a.size() >= static_cast<std::size_t>(n)) {
        ok &= std::abs(metrics::RougeN(a, a, n).f1 - 1.0) < 1e-12;
      }
    }
    ok &= std::abs(metrics::RougeL(a, b).f1 - metrics::RougeL(b, a).f1) < 1e-12;
    if (!a.empty()) ok &= std::abs(metrics::RougeL(a, a).f1 - 1.0) < 1e-12;
    ok &= std::abs(metrics::Js2Divergence(a, b) - metrics::Js2Divergence(b, a)) < 1e-12;
    c.Expect(ok, "fuzz trial " + std::to_string(trial));
  }
  return {c.ok(), std::to_string(hand) + " hand cases, 1000 fuzz pairs | " + c.Summary()};
}

// ---------------------------------------------------------------------------

Outcome RankingLossSuite() {
  Checker c;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> size(2, 12);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> cos(size(rng));
    for (auto& x : cos) x = u(rng);
    const double margin = std::abs(u(rng)) * 0.2;
    for (bool normalize : {false, true}) {
      for (bool scaled : {false, true}) {
        const auto r = train::RankingLossFromCosines(ad::Tensor::Vector(cos),
                                                     {margin, normalize, scaled});
        const double want =
            testing::BruteForceRankingLoss(cos, margin, normalize, scaled);
        worst = std::max(worst, std::abs(r.loss.item() - want));
        c.Expect(std::abs(r.loss.item() - want) <= kRankLossTol,
                 "config " + std::to_string(trial));
        c.Expect(r.loss.item() >= 0.0, "negative loss");
      }
    }
  }
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> anchor(8);
    for (auto& x : anchor) x = n(rng);
    std::vector<std::vector<double>> cands(5, std::vector<double>(8));
    for (auto& v : cands) {
      for (auto& x : v) x = n(rng);
    }
    auto eval = [&](double anchor_scale, double cand_scale) {
      std::vector<double> a = anchor;
      for (auto& x : a) x *= anchor_scale;
      std::vector<ad::Tensor> ranked;
      for (auto v : cands) {
        for (auto& x : v) x *= cand_scale;
        ranked.push_back(ad::Tensor::Vector(v));
      }
      return train::RankingLoss(ad::Tensor::Vector(a), ranked, {0.05, true, false})
          .loss.item();
    };
    const double base = eval(1.0, 1.0);
    c.Expect(base >= 0.0, "negative loss on fuzz");
    c.Expect(std::abs(eval(3.5, 1.0) - base) <= 1e-9, "anchor scale");
    c.Expect(std::abs(eval(1.0, 0.01) - base) <= 1e-9, "candidate scale");
  }
  return {c.ok(), "100 configs x 4 variants, max |diff| " + Fmt("%.2e", worst) +
                      " | " + c.Summary()};
}

// ---------------------------------------------------------------------------

Outcome GradientChecks() {
  Checker c;
  double worst = 0.0;
  std::size_t checked = 0;
  auto record = [&](const std::string& name, const ad::GradCheckResult& r) {
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    c.Expect(r.checked > 0 && r.max_rel_error <= kGradRelTol,
             name + " rel " + Fmt("%.2e", r.max_rel_error));
  };
  for (const auto& op : ad::cases::OpCases()) {
    for (int seed = 1; seed <= kGradSeeds; ++seed) {
      std::mt19937_64 rng(seed * 977 + 13);
      std::vector<ad::Tensor> inputs;
      auto fn = op.build(rng, inputs);
      record(op.name, ad::CheckGradients(fn, inputs));
    }
  }
  for (int seed = 1; seed <= kGradSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::vector<double> p(6);
    for (auto& x : p) x = u(rng);
    std::vector<ad::Tensor> in = {ad::Tensor::Vector(p)};
    const int labels[] = {1, 0, 0, 1, 1, 0};
    record("bce", ad::CheckGradients([&] { return train::BceLoss(in[0], labels); }, in));
  }
  for (int seed = 1; seed <= kGradSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<ad::Tensor> in;
    for (int k = 0; k < 5; ++k) {
      std::vector<double> v(6);
      for (auto& x : v) x = n(rng);
      in.push_back(ad::Tensor::Vector(v));
    }
    auto fn = [&] {
      std::vector<ad::Tensor> ranked(in.begin() + 1, in.end());
      return train::RankingLoss(in[0], ranked, {0.3, true, true}).loss;
    };
    record("ranking", ad::CheckGradients(fn, in));
  }
  for (int seed = 1; seed <= kGradSeeds; ++seed) {
    auto corpus = testing::SmallCorpus(seed, 1);
    abs::Seq2SeqModel m(testing::TinySeq2Seq(static_cast<int>(corpus.vocab.size())),
                        seed);
    auto params = m.params().tensors();
    ad::GradCheckOptions opts;
    opts.max_entries_per_tensor = 3;
    opts.seed = seed;
    record("nll", ad::CheckGradients([&] { return abs::NllLoss(m, corpus.docs[0]); },
                                     params, opts));
  }
  for (int seed = 1; seed <= kGradSeeds; ++seed) {
    testing::TinySetup t(seed, 2);
    model::ExtractiveModel m(t.enc, seed);
    const auto& doc = t.corpus.docs[0];
    const auto labels = cand::GreedyOracleLabels(doc, t.config.discriminator, 3);
    auto fn = [&] {
      return train::ComputeDocLoss(m, doc, labels, train::StepMode::kOnline, t.config,
                                   t.spec, nullptr)
          .total;
    };
    auto params = m.params().tensors();
    ad::GradCheckOptions opts;
    opts.max_entries_per_tensor = 4;
    opts.seed = seed;
    record("extractive step", ad::CheckGradients(fn, params, opts));
  }
  return {c.ok(), std::to_string(checked) + " entries, max rel " + Fmt("%.2e", worst) +
                      " | " + c.Summary()};
}

// ---------------------------------------------------------------------------
// Extractive training shared by the direction, naive-vs-online and
// visualization criteria.

struct SeedScores {
  double colo = 0.0;    // online-trained model, cosine selection
  double topk = 0.0;    // classifier-only model, top-k
  double lead = 0.0;
  double oracle = 0.0;
  double naive = 0.0;   // offline-cached model, cosine selection
};

struct ExtractiveRuns {
  std::vector<SeedScores> seeds;
  double seconds_direction = 0.0;  // warmup + classifier-only + online + evals
  double seconds_naive = 0.0;      // warmup + online + naive + evals
  // Seed-1 online model and its held-out documents, for the projection.
  std::unique_ptr<model::ExtractiveModel> model;
  std::vector<corpus::Document> test;
  cand::CandidateSpec spec;
};

double Rouge12Of(const std::vector<infer::EvalRow>& rows, const std::string& system) {
  for (const auto& r : rows) {
    if (r.system == system) return r.rouge12();
  }
  Fail(ErrorCode::kInternal, "missing system " + system);
}

ExtractiveRuns TrainExtractiveSeeds() {
  ExtractiveRuns runs;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    corpus::SynthSpec sp;
    auto corp = corpus::SynthesizeCorpus(sp, seed);
    std::vector<corpus::Document> train(corp.docs.begin(),
                                        corp.docs.begin() + kTrainDocs);
    std::vector<corpus::Document> test(corp.docs.begin() + kTrainDocs, corp.docs.end());
    model::EncoderConfig ec;
    ec.vocab_size = static_cast<int>(corp.vocab.size());
    train::TrainConfig tc;
    tc.seed = seed;
    cand::CandidateSpec spec;
    spec.sizes = cand::SizesFromSummaryCounts(train);
    const int k = cand::TopKFromSummaryCounts(train);

    infer::EvalConfig ev;
    ev.spec = spec;
    ev.topk_k = k;
    ev.lead_k = k;
    ev.seed = seed;

    double t0 = NowMs();
    model::ExtractiveModel online(ec, seed);
    train::Trainer trainer(tc, spec, train);
    trainer.Run(online, tc.warmup_steps_bce, train::StepMode::kBceOnly, nullptr);
    const double warm_ms = NowMs() - t0;
    auto bce = online.Clone();
    auto naive = online.Clone();
    train::Trainer bce_trainer = trainer;
    train::Trainer naive_trainer = trainer;

    t0 = NowMs();
    bce_trainer.Run(*bce, tc.combined_steps, train::StepMode::kBceOnly, nullptr);
    const infer::SystemKind topk_only[] = {infer::SystemKind::kClassifierTopK};
    const auto bce_rows = infer::Evaluate(test, topk_only, bce.get(), nullptr, ev);
    const double bce_ms = NowMs() - t0;

    t0 = NowMs();
    trainer.Run(online, tc.combined_steps, train::StepMode::kOnline, nullptr);
    const infer::SystemKind online_systems[] = {
        infer::SystemKind::kColoExt, infer::SystemKind::kLead,
        infer::SystemKind::kOracleSet};
    const auto online_rows = infer::Evaluate(test, online_systems, &online, nullptr, ev);
    const double online_ms = NowMs() - t0;

    t0 = NowMs();
    auto cache = train::BuildCandidateCache(*naive, train, spec, tc.discriminator);
    naive_trainer.Run(*naive, tc.combined_steps, train::StepMode::kOffline, &cache);
    const infer::SystemKind colo_only[] = {infer::SystemKind::kColoExt};
    const auto naive_rows = infer::Evaluate(test, colo_only, naive.get(), nullptr, ev);
    const double naive_ms = NowMs() - t0;

    SeedScores s;
    s.colo = Rouge12Of(online_rows, "colo");
    s.lead = Rouge12Of(online_rows, "lead");
    s.oracle = Rouge12Of(online_rows, "oracle");
    s.topk = Rouge12Of(bce_rows, "topk");
    s.naive = Rouge12Of(naive_rows, "colo");
    std::printf("  seed %d: oracle %.4f colo %.4f topk %.4f lead %.4f naive %.4f\n",
                seed, s.oracle, s.colo, s.topk, s.lead, s.naive);
    std::fflush(stdout);
    runs.seeds.push_back(s);
    runs.seconds_direction += (warm_ms + bce_ms + online_ms) / 1000.0;
    runs.seconds_naive += (warm_ms + online_ms + naive_ms) / 1000.0;
    if (seed == 1) {
      runs.model = online.Clone();
      runs.test = test;
      runs.spec = spec;
    }
  }
  return runs;
}

// An ordering holds when its seed majority and its mean agree with it.
struct Ordering {
  std::string name;
  std::function<double(const SeedScores&)> hi;
  std::function<double(const SeedScores&)> lo;
  bool strict;
};

void CheckOrdering(const std::vector<SeedScores>& seeds, const Ordering& o,
                   Checker& c, std::ostringstream& detail) {
  int votes = 0;
  double hi = 0.0, lo = 0.0;
  for (const auto& s : seeds) {
    const bool holds = o.strict ? o.hi(s) > o.lo(s) : o.hi(s) >= o.lo(s);
    votes += holds;
    hi += o.hi(s) / seeds.size();
    lo += o.lo(s) / seeds.size();
  }
  const bool mean_holds = o.strict ? hi > lo : hi >= lo;
  detail << o.name << " " << votes << "/" << seeds.size() << " seeds (mean "
         << Fmt("%.4f", hi) << " vs " << Fmt("%.4f", lo) << "); ";
  c.Expect(votes >= kSeedVotes, o.name + " seed votes");
  c.Expect(mean_holds, o.name + " mean");
}

Outcome DirectionCheck(const ExtractiveRuns& runs) {
  Checker c;
  std::ostringstream d;
  const Ordering orderings[] = {
      {"oracle>=colo", [](auto& s) { return s.oracle; }, [](auto& s) { return s.colo; },
       false},
      {"oracle>=topk", [](auto& s) { return s.oracle; }, [](auto& s) { return s.topk; },
       false},
      {"colo>=topk", [](auto& s) { return s.colo; }, [](auto& s) { return s.topk; },
       false},
      {"topk>lead", [](auto& s) { return s.topk; }, [](auto& s) { return s.lead; },
       true},
      {"colo>lead", [](auto& s) { return s.colo; }, [](auto& s) { return s.lead; },
       true},
  };
  for (const auto& o : orderings) CheckOrdering(runs.seeds, o, c, d);
  return {c.ok(), d.str() + "| " + c.Summary()};
}

Outcome NaiveVsOnline(const ExtractiveRuns& runs) {
  Checker c;
  std::ostringstream d;
  CheckOrdering(runs.seeds,
                {"online>=naive", [](auto& s) { return s.colo; },
                 [](auto& s) { return s.naive; }, false},
                c, d);
  return {c.ok(), d.str() + "| " + c.Summary()};
}

Outcome Visualization(const ExtractiveRuns& runs) {
  Checker c;
  int ordered = 0;
  const std::size_t n = std::min<std::size_t>(100, runs.test.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto rows = infer::ExportCandidateEmbeddings(
        *runs.model, runs.test[i], runs.spec, metrics::DiscriminatorKind::kRouge12Mean);
    const auto t = infer::MeanTercileCosines(rows);
    ordered += t.top > t.bottom;
  }
  const double frac = static_cast<double>(ordered) / static_cast<double>(n);
  c.Expect(n == 100, "need 100 documents");
  c.Expect(frac >= kVizFraction, "fraction " + Fmt("%.2f", frac));
  return {c.ok(), std::to_string(ordered) + "/" + std::to_string(n) +
                      " docs with top tercile closer | " + c.Summary()};
}

// ---------------------------------------------------------------------------

Outcome Efficiency() {
  Checker c;
  std::ostringstream d;

  // Token accounting: fifteen candidates, each longer than the cap.
  {
    corpus::Document doc;
    doc.id = "long";
    for (int s = 0; s < 6; ++s) {
      corpus::TokenSeq t(160);
      for (int i = 0; i < 160; ++i) t[i] = 10 + (s * 7 + i) % 40;
      doc.sentences.push_back(t);
    }
    doc.reference = doc.sentences[0];
    model::EncoderConfig enc;
    enc.vocab_size = 64;
    enc.max_len = 1024;
    model::ExtractiveModel gen(enc, 1);
    twostage::Reranker rr(twostage::DefaultRerankerConfig(enc), 2);
    const auto r = twostage::RerankTwoStage(gen, rr, doc, {{2}, 6});
    const std::size_t doc_tokens = rr.DocumentInput(doc).token_ids.size();
    c.Expect(r.reranker_invocations == 16, "invocations at |C|=15");
    c.Expect(r.reranker_tokens == 4500 + doc_tokens, "tokens at |C|=15");
    d << "tokens@15 " << r.reranker_tokens << " = 4500+" << doc_tokens << "; ";
  }

  corpus::SynthSpec sp;
  sp.num_docs = 40;
  auto corp = corpus::SynthesizeCorpus(sp, 1);
  model::EncoderConfig enc;
  enc.vocab_size = static_cast<int>(corp.vocab.size());
  model::ExtractiveModel gen(enc, 1);
  twostage::Reranker rr(twostage::DefaultRerankerConfig(enc), 2);
  twostage::BenchConfig bc;
  bc.sizes = {4, 8, 15, 16, 20, 32};
  bc.repetitions = 3;
  const auto rows = twostage::Benchmark(gen, rr, corp.docs, bc);
  std::map<std::pair<std::string, int>, twostage::BenchRow> by;
  for (const auto& r : rows) by[{r.system, r.candidates}] = r;
  for (int size : bc.sizes) {
    c.Expect(by.at({"colo", size}).encoder_invocations_per_doc == 1.0,
             "one-stage invocations at " + std::to_string(size));
    c.Expect(by.at({"two-stage", size}).encoder_invocations_per_doc == size + 1.0,
             "two-stage invocations at " + std::to_string(size));
  }
  const double base16 = by.at({"baseline", 16}).samples_per_second;
  const double colo16 = by.at({"colo", 16}).samples_per_second;
  const double ratio16 = colo16 / base16;
  c.Expect(ratio16 >= 1.0 - kThroughputSlack, "throughput at 16 " + Fmt("%.2f", ratio16));
  const double speedup =
      by.at({"colo", 20}).samples_per_second / by.at({"two-stage", 20}).samples_per_second;
  c.Expect(speedup >= kMinSpeedup, "speed-up at 20 " + Fmt("%.2f", speedup));
  d << "colo/baseline@16 " << Fmt("%.3f", ratio16) << "; speed-up@20 "
    << Fmt("%.2f", speedup) << "x; ";
  return {c.ok(), d.str() + "| " + c.Summary()};
}

// ---------------------------------------------------------------------------

Outcome Abstractive() {
  Checker c;
  std::ostringstream d;

  // Group count 1 with no penalty is plain beam search.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    testing::TableScorer scorer(7, seed);
    for (int beam = 1; beam <= 5; ++beam) {
      const auto diverse = abs::DiverseBeamSearch(scorer, {beam, 1, 0.0, 8});
      const auto plain = abs::BeamSearch(scorer, beam, 8);
      std::set<corpus::TokenSeq> a, b;
      for (const auto& x : diverse) a.insert(x.tokens);
      for (const auto& x : plain) b.insert(x.tokens);
      c.Expect(a == b, "beam sets differ at seed " + std::to_string(seed));
    }
  }

  std::vector<double> cosine, map;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    corpus::SynthSpec sp;
    sp.vocab_size = kAbsVocab;
    auto corp = corpus::SynthesizeCorpus(sp, seed);
    std::vector<corpus::Document> train(corp.docs.begin(),
                                        corp.docs.begin() + kTrainDocs);
    std::vector<corpus::Document> test(corp.docs.begin() + kTrainDocs, corp.docs.end());
    abs::Seq2SeqConfig sc;
    sc.encoder.vocab_size = static_cast<int>(corp.vocab.size());
    sc.encoder.local_first_layer = false;
    train::TrainConfig tc;
    tc.seed = seed;
    tc.warmup_steps_bce = kAbsNllSteps;
    tc.combined_steps = kAbsOnlineSteps;
    tc.rank_weight = 1.0;
    tc.lr_scale = 1.0;
    tc.batch_size = 2;
    abs::Seq2SeqModel m(sc, seed);
    abs::TrainAbstractive(m, train, tc);

    // Every beam's representation sits at its last emitted token.
    for (std::size_t i = 0; i < 10; ++i) {
      for (const auto& cand : abs::DecodeCandidates(m, test[i])) {
        c.Expect(!cand.tokens.empty() && cand.z_index == cand.tokens.size() - 1,
                 "z index");
      }
    }
    const auto rows = abs::EvaluateAbstractive(m, test, 0);
    double cs = 0.0, mp = 0.0;
    for (const auto& r : rows) {
      if (r.selector == "cosine") cs = r.rouge12();
      if (r.selector == "map") mp = r.rouge12();
    }
    std::printf("  seed %d: cosine %.4f map %.4f\n", seed, cs, mp);
    std::fflush(stdout);
    cosine.push_back(cs);
    map.push_back(mp);
  }
  int votes = 0;
  double cs_mean = 0.0, map_mean = 0.0;
  for (int i = 0; i < kSeeds; ++i) {
    votes += cosine[i] >= map[i];
    cs_mean += cosine[i] / kSeeds;
    map_mean += map[i] / kSeeds;
  }
  c.Expect(votes >= kSeedVotes, "cosine>=map seed votes");
  c.Expect(cs_mean >= map_mean, "cosine>=map mean");
  d << "cosine>=map " << votes << "/" << kSeeds << " seeds (mean "
    << Fmt("%.4f", cs_mean) << " vs " << Fmt("%.4f", map_mean) << "); ";
  return {c.ok(), d.str() + "| " + c.Summary()};
}

// ---------------------------------------------------------------------------

bool Report(int id, const Outcome& o, double seconds, double budget) {
  const bool in_time = seconds <= budget;
  const bool pass = o.ok && in_time;
  std::printf("criterion %d: %s  %.1fs (budget %.0fs%s)  %s\n", id,
              pass ? "PASS" : "FAIL", seconds, budget, in_time ? "" : ", over",
              o.detail.c_str());
  std::fflush(stdout);
  return pass;
}

Outcome Guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("error: ") + e.what()};
  }
}

int Run(const std::set<int>& only) {
  auto want = [&](int id) { return only.empty() || only.count(id) > 0; };
  bool all = true;
  auto timed = [&](int id, double budget, const std::function<Outcome()>& fn) {
    if (!want(id)) return;
    const double t0 = NowMs();
    const Outcome o = Guarded(fn);
    all &= Report(id, o, (NowMs() - t0) / 1000.0, budget);
  };
  timed(1, kBudget1, CandidateCounts);
  timed(2, kBudget2, MetricSuite);
  timed(3, kBudget3, RankingLossSuite);
  timed(4, kBudget4, GradientChecks);

  if (want(5) || want(6) || want(9)) {
    std::optional<ExtractiveRuns> runs;
    std::string error;
    try {
      runs = TrainExtractiveSeeds();
    } catch (const std::exception& e) {
      error = e.what();
    }
    auto shared = [&](int id, double seconds, double budget,
                      const std::function<Outcome()>& fn) {
      if (!want(id)) return;
      const Outcome o = runs ? Guarded(fn) : Outcome{false, "error: " + error};
      all &= Report(id, o, seconds, budget);
    };
    const double dir_s = runs ? runs->seconds_direction : 0.0;
    const double naive_s = runs ? runs->seconds_naive : 0.0;
    shared(5, dir_s, kBudget5, [&] { return DirectionCheck(*runs); });
    shared(6, naive_s, kBudget6, [&] { return NaiveVsOnline(*runs); });
    if (want(9)) {
      const double t0 = NowMs();
      const Outcome o = runs ? Guarded([&] { return Visualization(*runs); })
                             : Outcome{false, "error: " + error};
      all &= Report(9, o, (NowMs() - t0) / 1000.0, kBudget9);
    }
  }
  timed(7, kBudget7, Efficiency);
  timed(8, kBudget8, Abstractive);
  std::printf("%s\n", all ? "ALL PASS" : "SOME FAILED");
  return all ? 0 : 1;
}

}  // namespace
}  // namespace colo

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  app.add_option("--only", only, "criteria to run, e.g. 1,2,7")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  return colo::Run({only.begin(), only.end()});
}
