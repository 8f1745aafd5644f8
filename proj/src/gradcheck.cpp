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

#include "colo/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "colo/common.hpp"

namespace colo::ad {

GradCheckResult CheckGradients(const std::function<Tensor()>& loss,
                               std::span<Tensor> inputs,
                               const GradCheckOptions& options) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.ZeroGrad();
  }
  Tape::Current().Clear();
  Tensor out = loss();
  if (out.numel() != 1) {
    Fail(ErrorCode::kInvalidArgument, "gradient check needs a scalar loss");
  }
  Backward(out);

  std::vector<std::vector<Real>> analytic;
  for (const auto& t : inputs) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.numel(), 0.0);
    }
  }

  auto eval = [&] {
    NoGradGuard guard;
    return loss().item();
  };

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<std::size_t> entries(inputs[k].numel());
    std::iota(entries.begin(), entries.end(), 0);
    if (options.max_entries_per_tensor > 0 &&
        entries.size() > options.max_entries_per_tensor) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.max_entries_per_tensor);
    }
    auto values = inputs[k].mutable_data();
    for (std::size_t i : entries) {
      const Real saved = values[i];
      values[i] = saved + options.step;
      const double up = eval();
      values[i] = saved - options.step;
      const double down = eval();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[k][i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (rel >= result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = std::to_string(k) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace colo::ad
