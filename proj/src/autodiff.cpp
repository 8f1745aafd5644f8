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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <Eigen/Core>

#include "colo/common.hpp"

namespace colo::ad {
namespace detail {
namespace {

std::atomic<std::size_t> g_live_bytes{0};
std::atomic<std::size_t> g_peak_bytes{0};

void TrackAlloc(std::size_t bytes) {
  std::size_t now = g_live_bytes.fetch_add(bytes) + bytes;
  std::size_t peak = g_peak_bytes.load();
  while (now > peak && !g_peak_bytes.compare_exchange_weak(peak, now)) {
  }
}

void TrackFree(std::size_t bytes) { g_live_bytes.fetch_sub(bytes); }

}  // namespace

struct TensorImpl {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;
  bool requires_grad = false;

  TensorImpl(Shape s, std::vector<Real> d, bool rg)
      : shape(std::move(s)), data(std::move(d)), requires_grad(rg) {
    TrackAlloc(data.size() * sizeof(Real));
  }
  ~TensorImpl() { TrackFree((data.size() + grad.size()) * sizeof(Real)); }
  TensorImpl(const TensorImpl&) = delete;
  TensorImpl& operator=(const TensorImpl&) = delete;

  std::vector<Real>& EnsureGrad() {
    if (grad.size() != data.size()) {
      grad.assign(data.size(), 0.0);
      TrackAlloc(grad.size() * sizeof(Real));
    }
    return grad;
  }
};

}  // namespace detail

namespace {

using Impl = detail::TensorImpl;
using ImplPtr = std::shared_ptr<Impl>;

thread_local bool t_grad_enabled = true;

void CheckDefined(const Tensor& t, const char* op) {
  if (!t.defined()) {
    Fail(ErrorCode::kInvalidArgument, std::string(op) + ": undefined tensor");
  }
}

[[noreturn]] void ShapeError(const char* op, const Shape& a, const Shape& b) {
  Fail(ErrorCode::kInvalidArgument, std::string(op) + ": shape mismatch " +
                                        ShapeString(a) + " vs " +
                                        ShapeString(b));
}

[[noreturn]] void ShapeError(const char* op, const Shape& a) {
  Fail(ErrorCode::kInvalidArgument,
       std::string(op) + ": unsupported shape " + ShapeString(a));
}

bool Tracks(std::initializer_list<const Tensor*> inputs) {
  if (!t_grad_enabled) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor Make(Shape shape, std::vector<Real> data, bool track) {
  return Tensor::Wrap(
      std::make_shared<Impl>(std::move(shape), std::move(data), track));
}

// Whether backward should push into `in`.
bool Wants(const ImplPtr& out, const ImplPtr& in) {
  return !out->grad.empty() && in->requires_grad;
}

using RowMajor =
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<RowMajor> View(std::vector<Real>& v, std::size_t r, std::size_t c) {
  return Eigen::Map<RowMajor>(v.data(), static_cast<Eigen::Index>(r),
                              static_cast<Eigen::Index>(c));
}

Eigen::Map<const RowMajor> CView(const std::vector<Real>& v, std::size_t r,
                                 std::size_t c) {
  return Eigen::Map<const RowMajor>(v.data(), static_cast<Eigen::Index>(r),
                                    static_cast<Eigen::Index>(c));
}

std::size_t Rows(const Shape& s) { return s.size() == 2 ? s[0] : 1; }
std::size_t Cols(const Shape& s) { return s.empty() ? 1 : s.back(); }

void RequireMatrix(const Tensor& t, const char* op) {
  CheckDefined(t, op);
  if (t.rank() != 2) ShapeError(op, t.shape());
}

void RequireRowwise(const Tensor& t, const char* op) {
  CheckDefined(t, op);
  if (t.rank() != 1 && t.rank() != 2) ShapeError(op, t.shape());
}

template <typename Fwd, typename Deriv>
Tensor Unary(const Tensor& x, const char* op, Fwd fwd, Deriv deriv) {
  CheckDefined(x, op);
  const auto& xd = x.impl()->data;
  std::vector<Real> y(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) y[i] = fwd(xd[i]);
  Tensor out = Make(x.shape(), std::move(y), Tracks({&x}));
  if (out.requires_grad()) {
    Tape::Current().Record([xi = x.impl(), oi = out.impl(), deriv] {
      if (!Wants(oi, xi)) return;
      auto& g = xi->EnsureGrad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += oi->grad[i] * deriv(xi->data[i], oi->data[i]);
      }
    });
  }
  return out;
}

}  // namespace

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::Wrap(std::shared_ptr<detail::TensorImpl> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  std::size_t n = NumElements(shape);
  return Make(std::move(shape), std::vector<Real>(n, 0.0), requires_grad);
}

Tensor Tensor::FromData(Shape shape, std::vector<Real> data,
                        bool requires_grad) {
  if (NumElements(shape) != data.size()) {
    Fail(ErrorCode::kInvalidArgument,
         "tensor: " + std::to_string(data.size()) +
             " values do not fill shape " + ShapeString(shape));
  }
  return Make(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::Scalar(Real value, bool requires_grad) {
  return Make({}, {value}, requires_grad);
}

Tensor Tensor::Vector(std::vector<Real> values, bool requires_grad) {
  Shape shape{values.size()};
  return Make(std::move(shape), std::move(values), requires_grad);
}

const Shape& Tensor::shape() const {
  CheckDefined(*this, "shape");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    Fail(ErrorCode::kInvalidArgument, "dim: axis out of range for " +
                                          ShapeString(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return defined() ? impl_->data.size() : 0; }

std::span<const Real> Tensor::data() const {
  CheckDefined(*this, "data");
  return impl_->data;
}

std::span<Real> Tensor::mutable_data() {
  CheckDefined(*this, "data");
  return impl_->data;
}

std::span<const Real> Tensor::grad() const {
  CheckDefined(*this, "grad");
  return impl_->grad;
}

std::span<Real> Tensor::mutable_grad() {
  CheckDefined(*this, "grad");
  return impl_->EnsureGrad();
}

bool Tensor::has_grad() const {
  return defined() && !impl_->grad.empty();
}

void Tensor::ZeroGrad() {
  if (defined() && !impl_->grad.empty()) {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
  }
}

bool Tensor::requires_grad() const {
  return defined() && impl_->requires_grad;
}

void Tensor::set_requires_grad(bool value) {
  CheckDefined(*this, "set_requires_grad");
  impl_->requires_grad = value;
}

Real Tensor::item() const {
  if (numel() != 1) {
    Fail(ErrorCode::kInvalidArgument,
         "item: tensor of shape " + ShapeString(shape()) + " is not a scalar");
  }
  return impl_->data[0];
}

Real Tensor::at(std::size_t i) const {
  if (i >= numel()) Fail(ErrorCode::kInvalidArgument, "at: index out of range");
  return impl_->data[i];
}

Real Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2 || row >= dim(0) || col >= dim(1)) {
    Fail(ErrorCode::kInvalidArgument, "at: index out of range");
  }
  return impl_->data[row * dim(1) + col];
}

Tensor Tensor::Detach() const {
  CheckDefined(*this, "detach");
  return Make(impl_->shape, impl_->data, false);
}

// ---------------------------------------------------------------------------
// Tape

Tape& Tape::Current() {
  thread_local Tape tape;
  return tape;
}

void Tape::Replay() {
  // Closures hold the graph alive; move them out so a throwing closure still
  // leaves the tape empty.
  std::vector<BackwardFn> nodes;
  nodes.swap(nodes_);
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) (*it)();
}

bool GradEnabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) {
  t_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

void Backward(const Tensor& loss) {
  CheckDefined(loss, "backward");
  if (loss.numel() != 1) {
    Fail(ErrorCode::kInvalidArgument,
         "backward: loss must be a scalar, got shape " +
             ShapeString(loss.shape()));
  }
  if (!loss.requires_grad()) {
    Fail(ErrorCode::kState,
         "backward: loss does not depend on any tensor that requires grad");
  }
  auto& g = loss.impl()->EnsureGrad();
  g[0] = 1.0;
  Tape::Current().Replay();
}

std::size_t LiveTensorBytes() { return detail::g_live_bytes.load(); }
std::size_t PeakTensorBytes() { return detail::g_peak_bytes.load(); }
void ResetPeakTensorBytes() {
  detail::g_peak_bytes.store(detail::g_live_bytes.load());
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor MatMul(const Tensor& a, const Tensor& b) {
  RequireMatrix(a, "matmul");
  RequireMatrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) ShapeError("matmul", a.shape(), b.shape());
  std::vector<Real> C(m * n);
  View(C, m, n).noalias() = CView(a.impl()->data, m, k) * CView(b.impl()->data, k, n);
  Tensor out = Make({m, n}, std::move(C), Tracks({&a, &b}));
  if (out.requires_grad()) {
    Tape::Current().Record([ai = a.impl(), bi = b.impl(), oi = out.impl(), m,
                            k, n] {
      if (oi->grad.empty()) return;
      auto G = CView(oi->grad, m, n);
      if (ai->requires_grad) {
        View(ai->EnsureGrad(), m, k).noalias() +=
            G * CView(bi->data, k, n).transpose();
      }
      if (bi->requires_grad) {
        View(bi->EnsureGrad(), k, n).noalias() +=
            CView(ai->data, m, k).transpose() * G;
      }
    });
  }
  return out;
}

Tensor MatMulNT(const Tensor& a, const Tensor& b) {
  RequireMatrix(a, "matmul_nt");
  RequireMatrix(b, "matmul_nt");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) ShapeError("matmul_nt", a.shape(), b.shape());
  std::vector<Real> C(m * n);
  View(C, m, n).noalias() =
      CView(a.impl()->data, m, k) * CView(b.impl()->data, n, k).transpose();
  Tensor out = Make({m, n}, std::move(C), Tracks({&a, &b}));
  if (out.requires_grad()) {
    Tape::Current().Record([ai = a.impl(), bi = b.impl(), oi = out.impl(), m,
                            k, n] {
      if (oi->grad.empty()) return;
      auto G = CView(oi->grad, m, n);
      if (ai->requires_grad) {
        View(ai->EnsureGrad(), m, k).noalias() += G * CView(bi->data, n, k);
      }
      if (bi->requires_grad) {
        View(bi->EnsureGrad(), n, k).noalias() +=
            G.transpose() * CView(ai->data, m, k);
      }
    });
  }
  return out;
}

Tensor Transpose(const Tensor& x) {
  RequireMatrix(x, "transpose");
  const std::size_t m = x.dim(0), n = x.dim(1);
  const auto& X = x.impl()->data;
  std::vector<Real> Y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) Y[j * m + i] = X[i * n + j];
  Tensor out = Make({n, m}, std::move(Y), Tracks({&x}));
  if (out.requires_grad()) {
    Tape::Current().Record([xi = x.impl(), oi = out.impl(), m, n] {
      if (!Wants(oi, xi)) return;
      auto& g = xi->EnsureGrad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += oi->grad[j * m + i];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor Add(const Tensor& a, const Tensor& b) {
  CheckDefined(a, "add");
  CheckDefined(b, "add");
  const bool bias = a.rank() == 2 && b.rank() == 1 && b.dim(0) == a.dim(1);
  if (!bias && a.shape() != b.shape()) ShapeError("add", a.shape(), b.shape());
  const auto& A = a.impl()->data;
  const auto& B = b.impl()->data;
  std::vector<Real> C(A.size());
  const std::size_t nb = B.size();
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] + B[bias ? i % nb : i];
  Tensor out = Make(a.shape(), std::move(C), Tracks({&a, &b}));
  if (out.requires_grad()) {
    Tape::Current().Record([ai = a.impl(), bi = b.impl(), oi = out.impl(),
                            bias] {
      const auto& G = oi->grad;
      if (G.empty()) return;
      if (ai->requires_grad) {
        auto& g = ai->EnsureGrad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += G[i];
      }
      if (bi->requires_grad) {
        auto& g = bi->EnsureGrad();
        const std::size_t nb = g.size();
        for (std::size_t i = 0; i < G.size(); ++i) g[bias ? i % nb : i] += G[i];
      }
    });
  }
  return out;
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  CheckDefined(a, "sub");
  CheckDefined(b, "sub");
  if (a.shape() != b.shape()) ShapeError("sub", a.shape(), b.shape());
  const auto& A = a.impl()->data;
  const auto& B = b.impl()->data;
  std::vector<Real> C(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] - B[i];
  Tensor out = Make(a.shape(), std::move(C), Tracks({&a, &b}));
  if (out.requires_grad()) {
    Tape::Current().Record([ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      const auto& G = oi->grad;
      if (G.empty()) return;
      if (ai->requires_grad) {
        auto& g = ai->EnsureGrad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += G[i];
      }
      if (bi->requires_grad) {
        auto& g = bi->EnsureGrad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= G[i];
      }
    });
  }
  return out;
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  CheckDefined(a, "mul");
  CheckDefined(b, "mul");
  if (a.shape() != b.shape()) ShapeError("mul", a.shape(), b.shape());
  const auto& A = a.impl()->data;
  const auto& B = b.impl()->data;
  std::vector<Real> C(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] * B[i];
  Tensor out = Make(a.shape(), std::move(C), Tracks({&a, &b}));
  if (out.requires_grad()) {
    Tape::Current().Record([ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      const auto& G = oi->grad;
      if (G.empty()) return;
      if (ai->requires_grad) {
        auto& g = ai->EnsureGrad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += G[i] * bi->data[i];
      }
      if (bi->requires_grad) {
        auto& g = bi->EnsureGrad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += G[i] * ai->data[i];
      }
    });
  }
  return out;
}

Tensor Scale(const Tensor& x, Real factor) {
  return Unary(
      x, "scale", [factor](Real v) { return v * factor; },
      [factor](Real, Real) { return factor; });
}

Tensor AddScalar(const Tensor& x, Real value) {
  return Unary(
      x, "add_scalar", [value](Real v) { return v + value; },
      [](Real, Real) { return 1.0; });
}

Tensor Relu(const Tensor& x) {
  return Unary(
      x, "relu", [](Real v) { return v > 0.0 ? v : 0.0; },
      [](Real v, Real) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor Hinge(const Tensor& x) {
  return Unary(
      x, "hinge", [](Real v) { return v > 0.0 ? v : 0.0; },
      [](Real v, Real) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor Sigmoid(const Tensor& x) {
  return Unary(
      x, "sigmoid",
      [](Real v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        Real e = std::exp(v);
        return e / (1.0 + e);
      },
      [](Real, Real y) { return y * (1.0 - y); });
}

Tensor Log(const Tensor& x) {
  return Unary(
      x, "log", [](Real v) { return std::log(v); },
      [](Real v, Real) { return 1.0 / v; });
}

Tensor Clamp(const Tensor& x, Real lo, Real hi) {
  return Unary(
      x, "clamp", [lo, hi](Real v) { return std::clamp(v, lo, hi); },
      [lo, hi](Real v, Real) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Normalizations

Tensor Softmax(const Tensor& x, int axis) {
  RequireRowwise(x, "softmax");
  if (axis < 0 || axis >= static_cast<int>(x.rank())) {
    Fail(ErrorCode::kInvalidArgument,
         "softmax: axis " + std::to_string(axis) + " invalid for " +
             ShapeString(x.shape()));
  }
  const std::size_t rows = Rows(x.shape()), cols = Cols(x.shape());
  // A group is one softmax slice: `len` entries spaced `stride` apart.
  const bool by_col = x.rank() == 2 && axis == 0;
  const std::size_t groups = by_col ? cols : rows;
  const std::size_t len = by_col ? rows : cols;
  const std::size_t stride = by_col ? cols : 1;
  const std::size_t step = by_col ? 1 : cols;
  const auto& X = x.impl()->data;
  std::vector<Real> Y(X.size());
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t base = g * step;
    Real mx = -std::numeric_limits<Real>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, X[base + i * stride]);
    Real sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      Real e = std::exp(X[base + i * stride] - mx);
      Y[base + i * stride] = e;
      sum += e;
    }
    for (std::size_t i = 0; i < len; ++i) Y[base + i * stride] /= sum;
  }
  Tensor out = Make(x.shape(), std::move(Y), Tracks({&x}));
  if (out.requires_grad()) {
    Tape::Current().Record([xi = x.impl(), oi = out.impl(), groups, len,
                            stride, step] {
      if (!Wants(oi, xi)) return;
      auto& g = xi->EnsureGrad();
      const auto& G = oi->grad;
      const auto& Y = oi->data;
      for (std::size_t grp = 0; grp < groups; ++grp) {
        const std::size_t base = grp * step;
        Real dot = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
          dot += G[base + i * stride] * Y[base + i * stride];
        }
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t at = base + i * stride;
          g[at] += Y[at] * (G[at] - dot);
        }
      }
    });
  }
  return out;
}

Tensor LogSoftmax(const Tensor& x) {
  RequireRowwise(x, "log_softmax");
  const std::size_t rows = Rows(x.shape()), cols = Cols(x.shape());
  const auto& X = x.impl()->data;
  std::vector<Real> Y(X.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* xr = &X[r * cols];
    Real mx = *std::max_element(xr, xr + cols);
    Real sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) sum += std::exp(xr[j] - mx);
    const Real lse = mx + std::log(sum);
    for (std::size_t j = 0; j < cols; ++j) Y[r * cols + j] = xr[j] - lse;
  }
  Tensor out = Make(x.shape(), std::move(Y), Tracks({&x}));
  if (out.requires_grad()) {
    Tape::Current().Record([xi = x.impl(), oi = out.impl(), rows, cols] {
      if (!Wants(oi, xi)) return;
      auto& g = xi->EnsureGrad();
      const auto& G = oi->grad;
      const auto& Y = oi->data;
      for (std::size_t r = 0; r < rows; ++r) {
        Real gsum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) gsum += G[r * cols + j];
        for (std::size_t j = 0; j < cols; ++j) {
          const std::size_t at = r * cols + j;
          g[at] += G[at] - std::exp(Y[at]) * gsum;
        }
      }
    });
  }
  return out;
}

Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 Real eps) {
  RequireRowwise(x, "layer_norm");
  const std::size_t rows = Rows(x.shape()), cols = Cols(x.shape());
  if (gain.shape() != Shape{cols}) ShapeError("layer_norm", x.shape(), gain.shape());
  if (bias.shape() != Shape{cols}) ShapeError("layer_norm", x.shape(), bias.shape());
  const auto& X = x.impl()->data;
  const auto& W = gain.impl()->data;
  const auto& B = bias.impl()->data;
  std::vector<Real> Y(X.size()), xhat(X.size()), inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* xr = &X[r * cols];
    Real mean = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mean += xr[j];
    mean /= static_cast<Real>(cols);
    Real var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<Real>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t at = r * cols + j;
      xhat[at] = (xr[j] - mean) * inv_std[r];
      Y[at] = W[j] * xhat[at] + B[j];
    }
  }
  Tensor out = Make(x.shape(), std::move(Y), Tracks({&x, &gain, &bias}));
  if (out.requires_grad()) {
    Tape::Current().Record([xi = x.impl(), wi = gain.impl(), bi = bias.impl(),
                            oi = out.impl(), xhat = std::move(xhat),
                            inv_std = std::move(inv_std), rows, cols] {
      const auto& G = oi->grad;
      if (G.empty()) return;
      if (wi->requires_grad) {
        auto& g = wi->EnsureGrad();
        for (std::size_t at = 0; at < G.size(); ++at) g[at % cols] += G[at] * xhat[at];
      }
      if (bi->requires_grad) {
        auto& g = bi->EnsureGrad();
        for (std::size_t at = 0; at < G.size(); ++at) g[at % cols] += G[at];
      }
      if (xi->requires_grad) {
        auto& g = xi->EnsureGrad();
        const auto& W = wi->data;
        const Real n = static_cast<Real>(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          Real mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t at = r * cols + j;
            const Real d = G[at] * W[j];
            mean_d += d;
            mean_dx += d * xhat[at];
          }
          mean_d /= n;
          mean_dx /= n;
          for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t at = r * cols + j;
            const Real d = G[at] * W[j];
            g[at] += inv_std[r] * (d - mean_d - xhat[at] * mean_dx);
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Indexing and layout

Tensor EmbeddingGather(const Tensor& table, std::span<const std::int32_t> ids) {
  RequireMatrix(table, "embedding_gather");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  const auto& T = table.impl()->data;
  std::vector<Real> Y(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      Fail(ErrorCode::kInvalidArgument,
           "embedding_gather: id " + std::to_string(ids[i]) +
               " outside table " + ShapeString(table.shape()));
    }
    std::copy_n(&T[ids[i] * d], d, &Y[i * d]);
  }
  Tensor out = Make({ids.size(), d}, std::move(Y), Tracks({&table}));
  if (out.requires_grad()) {
    Tape::Current().Record([ti = table.impl(), oi = out.impl(),
                            ids = std::vector<std::int32_t>(ids.begin(), ids.end()),
                            d] {
      if (!Wants(oi, ti)) return;
      auto& g = ti->EnsureGrad();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) g[ids[i] * d + j] += oi->grad[i * d + j];
      }
    });
  }
  return out;
}

Tensor MeanPool(const Tensor& x, std::span<const int> indices) {
  RequireMatrix(x, "mean_pool");
  if (indices.empty()) {
    Fail(ErrorCode::kInvalidArgument, "mean_pool: empty index set");
  }
  const std::size_t n = x.dim(0), d = x.dim(1);
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= n) {
      Fail(ErrorCode::kInvalidArgument,
           "mean_pool: index " + std::to_string(i) + " outside " +
               ShapeString(x.shape()));
    }
  }
  const auto& X = x.impl()->data;
  std::vector<Real> Y(d, 0.0);
  for (int i : indices)
    for (std::size_t j = 0; j < d; ++j) Y[j] += X[i * d + j];
  const Real inv = 1.0 / static_cast<Real>(indices.size());
  for (auto& v : Y) v *= inv;
  Tensor out = Make({d}, std::move(Y), Tracks({&x}));
  if (out.requires_grad()) {
    Tape::Current().Record([xi = x.impl(), oi = out.impl(),
                            idx = std::vector<int>(indices.begin(), indices.end()),
                            d, inv] {
      if (!Wants(oi, xi)) return;
      auto& g = xi->EnsureGrad();
      for (int i : idx)
        for (std::size_t j = 0; j < d; ++j) g[i * d + j] += oi->grad[j] * inv;
    });
  }
  return out;
}

Tensor Row(const Tensor& x, std::size_t index) {
  RequireMatrix(x, "row");
  if (index >= x.dim(0)) {
    Fail(ErrorCode::kInvalidArgument, "row: index " + std::to_string(index) +
                                          " outside " + ShapeString(x.shape()));
  }
  const std::size_t d = x.dim(1);
  const auto& X = x.impl()->data;
  std::vector<Real> Y(X.begin() + index * d, X.begin() + (index + 1) * d);
  Tensor out = Make({d}, std::move(Y), Tracks({&x}));
  if (out.requires_grad()) {
    Tape::Current().Record([xi = x.impl(), oi = out.impl(), index, d] {
      if (!Wants(oi, xi)) return;
      auto& g = xi->EnsureGrad();
      for (std::size_t j = 0; j < d; ++j) g[index * d + j] += oi->grad[j];
    });
  }
  return out;
}

Tensor Stack(std::span<const Tensor> rows) {
  if (rows.empty()) Fail(ErrorCode::kInvalidArgument, "stack: no inputs");
  std::vector<Tensor> parts;
  parts.reserve(rows.size());
  for (const auto& r : rows) {
    CheckDefined(r, "stack");
    if (r.rank() != 1) ShapeError("stack", r.shape());
    parts.push_back(Reshape(r, {1, r.dim(0)}));
  }
  return Concat(parts, 0);
}

Tensor Concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) Fail(ErrorCode::kInvalidArgument, "concat: no inputs");
  const Tensor& first = parts.front();
  CheckDefined(first, "concat");
  const std::size_t rank = first.rank();
  if (rank < 1 || rank > 2 || axis < 0 || axis >= static_cast<int>(rank)) {
    Fail(ErrorCode::kInvalidArgument,
         "concat: axis " + std::to_string(axis) + " invalid for " +
             ShapeString(first.shape()));
  }
  bool track = false;
  for (const auto& p : parts) {
    CheckDefined(p, "concat");
    if (p.rank() != rank) ShapeError("concat", first.shape(), p.shape());
    if (rank == 2 && axis == 0 && p.dim(1) != first.dim(1))
      ShapeError("concat", first.shape(), p.shape());
    if (rank == 2 && axis == 1 && p.dim(0) != first.dim(0))
      ShapeError("concat", first.shape(), p.shape());
    track = track || Tracks({&p});
  }
  // Row-major layout means axis-0 concat (and rank-1) is a plain append.
  const bool append = axis == 0;
  Shape shape = first.shape();
  shape[axis] = 0;
  for (const auto& p : parts) shape[axis] += p.dim(axis);
  const std::size_t rows = rank == 2 ? shape[0] : 1;
  const std::size_t cols = rank == 2 ? shape[1] : shape[0];
  std::vector<Real> Y(rows * cols);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const auto& P = p.impl()->data;
    if (append) {
      std::copy(P.begin(), P.end(), Y.begin() + offset);
      offset += P.size();
    } else {
      const std::size_t pc = p.dim(1);
      for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(&P[r * pc], pc, &Y[r * cols + offset]);
      offset += pc;
    }
  }
  Tensor out = Make(std::move(shape), std::move(Y), track);
  if (out.requires_grad()) {
    std::vector<ImplPtr> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    Tape::Current().Record([impls = std::move(impls), oi = out.impl(),
                            offsets = std::move(offsets), append, rows, cols] {
      if (oi->grad.empty()) return;
      for (std::size_t k = 0; k < impls.size(); ++k) {
        const auto& in = impls[k];
        if (!in->requires_grad) continue;
        auto& g = in->EnsureGrad();
        if (append) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += oi->grad[offsets[k] + i];
        } else {
          const std::size_t pc = g.size() / rows;
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < pc; ++j)
              g[r * pc + j] += oi->grad[r * cols + offsets[k] + j];
        }
      }
    });
  }
  return out;
}

Tensor SliceCols(const Tensor& x, std::size_t start, std::size_t len) {
  RequireMatrix(x, "slice_cols");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (start + len > n) {
    Fail(ErrorCode::kInvalidArgument, "slice_cols: columns [" +
                                          std::to_string(start) + ", " +
                                          std::to_string(start + len) +
                                          ") outside " + ShapeString(x.shape()));
  }
  const auto& X = x.impl()->data;
  std::vector<Real> Y(m * len);
  for (std::size_t r = 0; r < m; ++r) std::copy_n(&X[r * n + start], len, &Y[r * len]);
  Tensor out = Make({m, len}, std::move(Y), Tracks({&x}));
  if (out.requires_grad()) {
    Tape::Current().Record([xi = x.impl(), oi = out.impl(), m, n, start, len] {
      if (!Wants(oi, xi)) return;
      auto& g = xi->EnsureGrad();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < len; ++j) g[r * n + start + j] += oi->grad[r * len + j];
    });
  }
  return out;
}

Tensor Reshape(const Tensor& x, Shape shape) {
  CheckDefined(x, "reshape");
  if (NumElements(shape) != x.numel()) ShapeError("reshape", x.shape(), shape);
  Tensor out = Make(std::move(shape), x.impl()->data, Tracks({&x}));
  if (out.requires_grad()) {
    Tape::Current().Record([xi = x.impl(), oi = out.impl()] {
      if (!Wants(oi, xi)) return;
      auto& g = xi->EnsureGrad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += oi->grad[i];
    });
  }
  return out;
}

Tensor Pick(const Tensor& x, std::span<const std::int32_t> targets) {
  RequireMatrix(x, "pick");
  const std::size_t m = x.dim(0), v = x.dim(1);
  if (targets.size() != m) {
    Fail(ErrorCode::kInvalidArgument,
         "pick: " + std::to_string(targets.size()) + " targets for " +
             ShapeString(x.shape()));
  }
  const auto& X = x.impl()->data;
  std::vector<Real> Y(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= v) {
      Fail(ErrorCode::kInvalidArgument,
           "pick: target " + std::to_string(targets[i]) + " out of range");
    }
    Y[i] = X[i * v + targets[i]];
  }
  Tensor out = Make({m}, std::move(Y), Tracks({&x}));
  if (out.requires_grad()) {
    Tape::Current().Record([xi = x.impl(), oi = out.impl(),
                            t = std::vector<std::int32_t>(targets.begin(), targets.end()),
                            v] {
      if (!Wants(oi, xi)) return;
      auto& g = xi->EnsureGrad();
      for (std::size_t i = 0; i < t.size(); ++i) g[i * v + t[i]] += oi->grad[i];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reductions

Tensor CosineSimilarity(const Tensor& u, const Tensor& v) {
  CheckDefined(u, "cosine_similarity");
  CheckDefined(v, "cosine_similarity");
  if (u.rank() != 1 || u.shape() != v.shape()) {
    ShapeError("cosine_similarity", u.shape(), v.shape());
  }
  constexpr Real kEps = 1e-12;
  const auto& U = u.impl()->data;
  const auto& V = v.impl()->data;
  Real dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < U.size(); ++i) {
    dot += U[i] * V[i];
    uu += U[i] * U[i];
    vv += V[i] * V[i];
  }
  const Real nu = std::max(std::sqrt(uu), kEps);
  const Real nv = std::max(std::sqrt(vv), kEps);
  const Real cos = dot / (nu * nv);
  Tensor out = Make({}, {cos}, Tracks({&u, &v}));
  if (out.requires_grad()) {
    const bool u_clamped = std::sqrt(uu) <= kEps;
    const bool v_clamped = std::sqrt(vv) <= kEps;
    Tape::Current().Record([ui = u.impl(), vi = v.impl(), oi = out.impl(), nu,
                            nv, cos, u_clamped, v_clamped] {
      if (oi->grad.empty()) return;
      const Real g = oi->grad[0];
      const auto& U = ui->data;
      const auto& V = vi->data;
      if (ui->requires_grad) {
        auto& gu = ui->EnsureGrad();
        for (std::size_t i = 0; i < U.size(); ++i) {
          Real d = V[i] / (nu * nv);
          if (!u_clamped) d -= cos * U[i] / (nu * nu);
          gu[i] += g * d;
        }
      }
      if (vi->requires_grad) {
        auto& gv = vi->EnsureGrad();
        for (std::size_t i = 0; i < V.size(); ++i) {
          Real d = U[i] / (nu * nv);
          if (!v_clamped) d -= cos * V[i] / (nv * nv);
          gv[i] += g * d;
        }
      }
    });
  }
  return out;
}

Tensor Sum(const Tensor& x) {
  CheckDefined(x, "sum");
  Real acc = 0.0;
  for (Real v : x.impl()->data) acc += v;
  Tensor out = Make({}, {acc}, Tracks({&x}));
  if (out.requires_grad()) {
    Tape::Current().Record([xi = x.impl(), oi = out.impl()] {
      if (!Wants(oi, xi)) return;
      auto& g = xi->EnsureGrad();
      for (auto& gv : g) gv += oi->grad[0];
    });
  }
  return out;
}

Tensor Mean(const Tensor& x) {
  CheckDefined(x, "mean");
  if (x.numel() == 0) Fail(ErrorCode::kInvalidArgument, "mean: empty tensor");
  return Scale(Sum(x), 1.0 / static_cast<Real>(x.numel()));
}

// ---------------------------------------------------------------------------
// Optimization

void AdamStep(std::span<Tensor> params, AdamState& state, Real lr,
              const AdamOptions& options) {
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    state.t = 0;
  }
  ++state.t;
  const Real bc1 = 1.0 - std::pow(options.beta1, static_cast<Real>(state.t));
  const Real bc2 = 1.0 - std::pow(options.beta2, static_cast<Real>(state.t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto w = params[p].mutable_data();
    auto& m = state.m[p];
    auto& v = state.v[p];
    if (m.size() != w.size()) {
      m.assign(w.size(), 0.0);
      v.assign(w.size(), 0.0);
    }
    std::span<const Real> g = params[p].grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Real gi = g.empty() ? 0.0 : g[i];
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * gi;
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * gi * gi;
      const Real mhat = m[i] / bc1;
      const Real vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + options.eps);
    }
  }
}

Real TransformerLearningRate(int d_model, std::int64_t step,
                             std::int64_t warmup) {
  if (d_model < 1 || step < 1 || warmup < 1) {
    Fail(ErrorCode::kInvalidArgument,
         "learning rate schedule needs d_model, step and warmup >= 1");
  }
  const Real t = static_cast<Real>(step);
  const Real w = static_cast<Real>(warmup);
  return std::pow(static_cast<Real>(d_model), -0.5) *
         std::min(std::pow(t, -0.5), t * std::pow(w, -1.5));
}

}  // namespace colo::ad
