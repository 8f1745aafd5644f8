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

// Hand-counted metric values, shared by the unit tests and the acceptance
// run.

#ifndef COLO_TESTS_METRIC_CASES_HPP_
#define COLO_TESTS_METRIC_CASES_HPP_

namespace colo::metrics::cases {

struct RougeCase {
  const char* cand;
  const char* ref;
  int n;  // 0 means ROUGE-L
  double p;
  double r;
  double f;
};

// Values counted by hand.
inline const RougeCase kRougeCases[] = {
    {"the cat sat", "the cat sat on the mat", 1, 1.0, 0.5, 2.0 / 3.0},
    {"the cat sat", "the cat sat on the mat", 2, 1.0, 0.4, 4.0 / 7.0},
    {"cat the mat", "the cat sat on the mat", 0, 1.0, 0.5, 2.0 / 3.0},
    {"the cat sat", "the cat sat", 1, 1.0, 1.0, 1.0},
    {"the cat sat", "the cat sat", 2, 1.0, 1.0, 1.0},
    {"the cat sat", "the cat sat", 0, 1.0, 1.0, 1.0},
    {"a b", "c d", 1, 0.0, 0.0, 0.0},
    {"a b", "c d", 0, 0.0, 0.0, 0.0},
    {"the the the", "the cat", 1, 1.0 / 3.0, 0.5, 0.4},
    {"the the the", "the the", 2, 0.5, 1.0, 2.0 / 3.0},
    {"a b c d", "b d a c", 0, 0.5, 0.5, 0.5},
    {"a", "a b", 2, 0.0, 0.0, 0.0},
    {"a", "a b c d", 0, 1.0, 0.25, 0.4},
    {"a b c d", "a b", 1, 0.5, 1.0, 2.0 / 3.0},
    {"a b c", "b c d", 2, 0.5, 0.5, 0.5},
    {"the cat sat on the mat", "the mat the cat", 0, 1.0 / 3.0, 0.5, 0.4},
    {"a a b", "a b b", 1, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0},
    {"", "a b", 1, 0.0, 0.0, 0.0},
};

struct Js2Case {
  const char* a;
  const char* b;
  double js;
};

// Base-2 divergence of the bigram distributions.
inline const Js2Case kJs2Cases[] = {
    // (1, 0) against (1/2, 1/2).
    {"a b", "a b c", 0.311278124459},
    {"a b c", "b c d", 0.5},
    {"x y z", "x y z", 0.0},
    {"a b", "c d", 1.0},
    // No bigrams on one side.
    {"a", "a b", 1.0},
    {"", "", 1.0},
};

}  // namespace colo::metrics::cases

#endif  // COLO_TESTS_METRIC_CASES_HPP_
