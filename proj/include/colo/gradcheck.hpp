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

// Central finite-difference checks of tape gradients.

#ifndef COLO_GRADCHECK_HPP_
#define COLO_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "colo/autodiff.hpp"

namespace colo::ad {

struct GradCheckOptions {
  double step = 1e-6;
  // Denominator floor of the relative error, so that entries whose true
  // gradient is ~0 are judged on absolute error.
  double floor = 1e-4;
  // 0 checks every entry; otherwise this many entries sampled per tensor.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 1;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // "<tensor index>[<entry>]" of the worst entry.
  std::string worst;
};

// `loss` rebuilds a scalar from the current values of `inputs`. Analytic
// gradients come from one Backward; each checked entry is then perturbed by
// +-step.
GradCheckResult CheckGradients(const std::function<Tensor()>& loss,
                               std::span<Tensor> inputs,
                               const GradCheckOptions& options = {});

}  // namespace colo::ad

#endif  // COLO_GRADCHECK_HPP_
