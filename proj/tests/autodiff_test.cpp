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

#include "colo/autodiff.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "colo/common.hpp"
#include "colo/gradcheck.hpp"
#include "op_cases.hpp"
#include "test_util.hpp"

namespace colo::ad {
namespace {

using cases::OpCases;
using cases::RandomTensor;

constexpr double kMaxRelError = 1e-4;

TEST(GradCheckTest, EveryOpOnFiveSeeds) {
  for (const auto& op : OpCases()) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SCOPED_TRACE(std::string(op.name) + " seed " + std::to_string(seed));
      std::mt19937_64 rng(seed * 977 + 13);
      std::vector<Tensor> inputs;
      auto fn = op.build(rng, inputs);
      auto r = CheckGradients(fn, inputs);
      EXPECT_GT(r.checked, 0u);
      EXPECT_LE(r.max_rel_error, kMaxRelError) << "worst " << r.worst;
    }
  }
}

TEST(AutodiffTest, ForwardExamples) {
  Tensor u = Tensor::Vector({1.0, -2.0, 0.5});
  EXPECT_NEAR(CosineSimilarity(u, u).item(), 1.0, 1e-12);

  Tensor x = Tensor::FromData({3, 2}, {1, 2, 3, 4, 5, 6});
  const int one[] = {1};
  Tensor pooled = MeanPool(x, one);
  EXPECT_EQ(pooled.at(0), 3.0);
  EXPECT_EQ(pooled.at(1), 4.0);

  Tensor s = Softmax(Tensor::Vector({0.0, 0.0}), 0);
  EXPECT_NEAR(s.at(0), 0.5, 1e-12);
  EXPECT_NEAR(s.at(1), 0.5, 1e-12);
}

TEST(AutodiffTest, ShapeMismatchNamesOp) {
  Tensor a = Tensor::Zeros({2, 3});
  Tensor b = Tensor::Zeros({2, 3});
  try {
    MatMul(a, b);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(AutodiffTest, BackwardBasics) {
  Tensor w = Tensor::FromData({2, 2}, {1, 2, 3, 4}, true);
  Backward(Sum(w));
  for (double g : w.grad()) EXPECT_EQ(g, 1.0);

  Tensor h = Tensor::Vector({-0.5, 0.0, 0.5}, true);
  Backward(Sum(Hinge(h)));
  EXPECT_EQ(h.grad()[0], 0.0);
  EXPECT_EQ(h.grad()[1], 0.0);  // subgradient at the kink
  EXPECT_EQ(h.grad()[2], 1.0);

  Tensor v = Tensor::Vector({1.0, 2.0}, true);
  EXPECT_THROW(Backward(v), Error);
  EXPECT_TRUE(Tape::Current().empty());
}

TEST(AutodiffTest, NoGradRecordsNothing) {
  Tensor a = Tensor::Vector({1.0, 2.0}, true);
  {
    NoGradGuard guard;
    Tensor b = Scale(a, 2.0);
    EXPECT_FALSE(b.requires_grad());
  }
  EXPECT_TRUE(Tape::Current().empty());
}

TEST(AutodiffTest, DeterministicGradients) {
  auto run = [] {
    std::mt19937_64 rng(42);
    Tensor a = RandomTensor(rng, {4, 4});
    Tensor b = RandomTensor(rng, {4, 4});
    a.set_requires_grad(true);
    Backward(Sum(Softmax(MatMul(a, b), 1)));
    return std::vector<Real>(a.grad().begin(), a.grad().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(AdamTest, ZeroGradientLeavesParameters) {
  Tensor p = Tensor::Vector({0.5, -1.0}, true);
  std::vector<Tensor> params = {p};
  AdamState state;
  for (int i = 0; i < 5; ++i) {
    p.ZeroGrad();
    Backward(Scale(Sum(p), 0.0));
    AdamStep(params, state, 0.1);
  }
  EXPECT_EQ(p.at(0), 0.5);
  EXPECT_EQ(p.at(1), -1.0);
  EXPECT_EQ(state.t, 5);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  Tensor p = Tensor::Scalar(1.0, true);
  std::vector<Tensor> params = {p};
  AdamState state;
  Backward(p);  // gradient 1
  AdamStep(params, state, 0.01);
  // m_hat = 1, v_hat = 1: the step is lr / (1 + eps).
  EXPECT_NEAR(p.item(), 1.0 - 0.01 / (1.0 + 1e-8), 1e-12);
}

TEST(ScheduleTest, CornerContinuity) {
  const double at = TransformerLearningRate(64, 300, 300);
  EXPECT_NEAR(at, std::pow(64.0, -0.5) * std::pow(300.0, -0.5), 1e-12);
  EXPECT_LT(TransformerLearningRate(64, 10, 300), at);
  EXPECT_LT(TransformerLearningRate(64, 1000, 300), at);
}

TEST(CheckpointTest, RoundTripAndShapeCheck) {
  testing::TempDir dir("ckpt");
  Checkpoint c;
  c.meta_json = R"({"kind":"test"})";
  c.tensors.push_back({"w", Tensor::FromData({2, 2}, {1, 2, 3, 4})});
  c.tensors.push_back({"b", Tensor::Vector({0.25})});
  SaveCheckpoint(dir.file("c.ckpt"), c);
  Checkpoint back = LoadCheckpoint(dir.file("c.ckpt"));
  ASSERT_EQ(back.tensors.size(), 2u);
  EXPECT_EQ(back.tensors[0].name, "w");
  EXPECT_EQ(back.tensors[0].tensor.at(1, 1), 4.0);
  EXPECT_NE(back.meta_json.find("test"), std::string::npos);

  std::vector<NamedTensor> targets = {{"w", Tensor::Zeros({2, 2})},
                                      {"b", Tensor::Zeros({1})}};
  RestoreTensors(back, targets);
  EXPECT_EQ(targets[0].tensor.at(0, 1), 2.0);
  EXPECT_EQ(targets[1].tensor.at(0), 0.25);

  std::vector<NamedTensor> wrong = {{"w", Tensor::Zeros({4})}};
  EXPECT_THROW(RestoreTensors(back, wrong), Error);
}

TEST(MemoryTest, LiveBytesTrackAllocations) {
  const std::size_t before = LiveTensorBytes();
  {
    Tensor big = Tensor::Zeros({100, 100});
    EXPECT_GE(LiveTensorBytes(), before + 100 * 100 * sizeof(Real));
    EXPECT_GE(PeakTensorBytes(), LiveTensorBytes());
  }
  EXPECT_EQ(LiveTensorBytes(), before);
}

}  // namespace
}  // namespace colo::ad
