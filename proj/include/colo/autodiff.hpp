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

// A small tape-based reverse-mode differentiation engine.
//
// Tensors are reference-counted handles to dense row-major storage. Every op
// whose inputs require gradients appends a backward closure to the calling
// thread's tape; Backward() replays the tape in reverse once and clears it.
// Tapes are thread-local, so a model replica and its graph must stay on one
// thread.
//
// Shapes are explicit. The only broadcast is the bias-add in Add().
// Scalars have rank 0.

#ifndef COLO_AUTODIFF_HPP_
#define COLO_AUTODIFF_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace colo::ad {

using Real = double;
using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape& shape);
std::size_t NumElements(const Shape& shape);

namespace detail {
struct TensorImpl;
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor FromData(Shape shape, std::vector<Real> data,
                         bool requires_grad = false);
  static Tensor Scalar(Real value, bool requires_grad = false);
  static Tensor Vector(std::vector<Real> values, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const Real> data() const;
  std::span<Real> mutable_data();
  // Empty until a gradient has been accumulated.
  std::span<const Real> grad() const;
  std::span<Real> mutable_grad();
  bool has_grad() const;
  void ZeroGrad();

  bool requires_grad() const;
  void set_requires_grad(bool value);

  Real item() const;
  Real at(std::size_t i) const;
  Real at(std::size_t row, std::size_t col) const;

  // Copy of the values with no gradient tracking.
  Tensor Detach() const;
  bool SameStorage(const Tensor& other) const { return impl_ == other.impl_; }

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  static Tensor Wrap(std::shared_ptr<detail::TensorImpl> impl);

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

class Tape {
 public:
  using BackwardFn = std::function<void()>;

  // The calling thread's tape.
  static Tape& Current();

  void Record(BackwardFn fn) { nodes_.push_back(std::move(fn)); }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  void Clear() { nodes_.clear(); }
  // Runs every recorded closure once, newest first, then clears.
  void Replay();

 private:
  std::vector<BackwardFn> nodes_;
};

bool GradEnabled();

// Disables recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Seeds d(loss)/d(loss) = 1, replays the tape, and clears it. Gradients
// accumulate into every tensor that requires them.
void Backward(const Tensor& loss);

// Bytes of live tensor storage (values and gradients) across all threads,
// and the high-water mark since the last reset.
std::size_t LiveTensorBytes();
std::size_t PeakTensorBytes();
void ResetPeakTensorBytes();

// ---------------------------------------------------------------------------
// Ops

Tensor MatMul(const Tensor& a, const Tensor& b);
// a [m x k] times b[n x k] transposed.
Tensor MatMulNT(const Tensor& a, const Tensor& b);
// Same shapes, or a [m x n] plus a bias b of shape [n].
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& x, Real factor);
Tensor AddScalar(const Tensor& x, Real value);
Tensor Relu(const Tensor& x);
// max(0, x). The subgradient at 0 is 0.
Tensor Hinge(const Tensor& x);
Tensor Sigmoid(const Tensor& x);
Tensor Log(const Tensor& x);
// Gradient passes only strictly inside (lo, hi).
Tensor Clamp(const Tensor& x, Real lo, Real hi);
// axis 0 or 1 for matrices, 0 for vectors.
Tensor Softmax(const Tensor& x, int axis);
// Along the last axis.
Tensor LogSoftmax(const Tensor& x);
// Normalizes each row (last axis) then applies gain and bias of shape [n].
Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 Real eps = 1e-5);
Tensor EmbeddingGather(const Tensor& table, std::span<const std::int32_t> ids);
// Mean of the selected rows of x [n x d]; result has shape [d].
Tensor MeanPool(const Tensor& x, std::span<const int> indices);
Tensor Row(const Tensor& x, std::size_t index);
// Stacks vectors of equal length into a matrix.
Tensor Stack(std::span<const Tensor> rows);
Tensor Concat(std::span<const Tensor> parts, int axis);
Tensor SliceCols(const Tensor& x, std::size_t start, std::size_t len);
Tensor Transpose(const Tensor& x);
Tensor Reshape(const Tensor& x, Shape shape);
Tensor CosineSimilarity(const Tensor& u, const Tensor& v);
Tensor Sum(const Tensor& x);
Tensor Mean(const Tensor& x);
// out[i] = x[i, targets[i]] for x of shape [m x v].
Tensor Pick(const Tensor& x, std::span<const std::int32_t> targets);

// ---------------------------------------------------------------------------
// Optimization

struct AdamOptions {
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;
  std::int64_t t = 0;
};

// One bias-corrected Adam update of every tensor in `params` from its
// accumulated gradient (missing gradients count as zero). Increments t.
void AdamStep(std::span<Tensor> params, AdamState& state, Real lr,
              const AdamOptions& options = {});

// d_model^-0.5 * min(step^-0.5, step * warmup^-1.5), step counted from 1.
Real TransformerLearningRate(int d_model, std::int64_t step,
                             std::int64_t warmup);

// ---------------------------------------------------------------------------
// Checkpoints: "COLOCKPT", a little-endian u64 header length, a JSON header
// (format version, dtype, tensor names and shapes, caller metadata), then
// little-endian float32 arrays in header order.

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct Checkpoint {
  // Caller-defined JSON object stored under "meta".
  std::string meta_json = "{}";
  std::vector<NamedTensor> tensors;
};

inline constexpr int kCheckpointVersion = 1;

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::string& path);
// Copies values from `source` into `targets` by name; every target must be
// present with a matching shape.
void RestoreTensors(const Checkpoint& source, std::span<NamedTensor> targets);

}  // namespace colo::ad

#endif  // COLO_AUTODIFF_HPP_
