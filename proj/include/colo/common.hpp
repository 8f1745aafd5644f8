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

#ifndef COLO_COMMON_HPP_
#define COLO_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace colo {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo = 2,
  kParse = 3,
  kConfig = 4,
  kState = 5,
  kInternal = 6,
};

// The single exception type thrown by the library. The C API maps `code()`
// onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

// Number of worker threads for parallel sections: COLO_THREADS if set and
// positive, otherwise the hardware concurrency (at least 1).
int WorkerThreads();

// Runs body(i) for i in [0, n) on up to `threads` workers. Items are
// statically sharded so results written by index are deterministic.
void ParallelFor(std::size_t n, int threads,
                 const std::function<void(std::size_t)>& body);

// Monotonic wall clock in milliseconds.
double NowMs();

}  // namespace colo

#endif  // COLO_COMMON_HPP_
