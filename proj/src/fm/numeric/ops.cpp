// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/numeric/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace fm::nc {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const RowMat<T>>;
template <typename T>
using MapM = Eigen::Map<RowMat<T>>;

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

template <typename T>
Tape<T>& same_tape(const char* op, Var<T> a, Var<T> b) {
  if (!a.valid() || !b.valid()) throw ShapeError(std::string(op) + ": invalid operand");
  if (a.tape != b.tape) throw ShapeError(std::string(op) + ": operands on different tapes");
  return *a.tape;
}

// Number of times b repeats inside a, or -1 when b is not a trailing suffix of a.
int64_t expansion(const Shape& a, const Shape& b) {
  if (b.size() > a.size()) return -1;
  for (size_t i = 0; i < b.size(); ++i)
    if (a[a.size() - b.size() + i] != b[i]) return -1;
  int64_t nb = numel(b);
  return nb == 0 ? 0 : numel(a) / nb;
}

size_t axis_index(const char* op, const Shape& s, int axis) {
  int r = static_cast<int>(s.size());
  int ax = axis < 0 ? axis + r : axis;
  if (ax < 0 || ax >= r) throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  return static_cast<size_t>(ax);
}

template <typename T>
void require_even_cols(const char* op, const Shape& s) {
  if (s.empty() || s.back() % 2 != 0) throw ShapeError(std::string(op) + ": last dimension must be even, got " + shape_str(s));
}

enum class BinKind { Add, Sub, Mul };

template <typename T>
Var<T> binary(const char* op, BinKind kind, Var<T> a, Var<T> b) {
  Tape<T>& tape = same_tape(op, a, b);
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  int64_t reps = expansion(av.shape, bv.shape);
  if (reps < 0) mismatch(op, av.shape, bv.shape);
  const int64_t nb = bv.size();
  Tensor<T> out(av.shape);
  for (int64_t r = 0; r < reps; ++r) {
    const T* pa = av.data.data() + r * nb;
    T* po = out.data.data() + r * nb;
    for (int64_t k = 0; k < nb; ++k) {
      switch (kind) {
        case BinKind::Add: po[k] = pa[k] + bv[k]; break;
        case BinKind::Sub: po[k] = pa[k] - bv[k]; break;
        case BinKind::Mul: po[k] = pa[k] * bv[k]; break;
      }
    }
  }
  const int32_t ia = a.id, ib = b.id;
  Var<T> inputs[] = {a, b};
  return tape.record(op, std::move(out), inputs, [ia, ib, reps, nb, kind](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto ga = t.grad(ia);
      if (kind == BinKind::Mul) {
        const auto& bv = t.value(ib);
        for (int64_t r = 0; r < reps; ++r)
          for (int64_t k = 0; k < nb; ++k) ga[r * nb + k] += g[r * nb + k] * bv[k];
      } else {
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
    }
    if (t.requires_grad(ib)) {
      auto gb = t.grad(ib);
      const T sign = kind == BinKind::Sub ? T(-1) : T(1);
      if (kind == BinKind::Mul) {
        const auto& av = t.value(ia);
        for (int64_t r = 0; r < reps; ++r)
          for (int64_t k = 0; k < nb; ++k) gb[k] += g[r * nb + k] * av[r * nb + k];
      } else {
        for (int64_t r = 0; r < reps; ++r)
          for (int64_t k = 0; k < nb; ++k) gb[k] += sign * g[r * nb + k];
      }
    }
  });
}

template <typename T>
Var<T> unary(const char* op, Var<T> a, T (*f)(T), T (*df)(T)) {
  Tape<T>& tape = *a.tape;
  const Tensor<T>& av = a.value();
  Tensor<T> out(av.shape);
  for (int64_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return tape.record(op, std::move(out), inputs, [ia, df](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    const auto& av = t.value(ia);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(av.data[i]);
  });
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}
template <typename T>
T silu_f(T x) {
  return x * sigmoid(x);
}
template <typename T>
T silu_df(T x) {
  T s = sigmoid(x);
  return s * (T(1) + x * (T(1) - s));
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <typename T>
T gelu_f(T x) {
  T u = T(kGeluC) * (x + T(kGeluA) * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(u));
}
template <typename T>
T gelu_df(T x) {
  T u = T(kGeluC) * (x + T(kGeluA) * x * x * x);
  T th = std::tanh(u);
  T du = T(kGeluC) * (T(1) + T(3 * kGeluA) * x * x);
  return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * du;
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b, bool transpose_b) {
  Tape<T>& tape = same_tape("matmul", a, b);
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.rank() < 2 || bv.rank() != 2) mismatch("matmul", av.shape, bv.shape);
  const int64_t k = av.cols();
  const int64_t m = av.rows();
  const int64_t bk = transpose_b ? bv.shape[1] : bv.shape[0];
  const int64_t n = transpose_b ? bv.shape[0] : bv.shape[1];
  if (bk != k) mismatch("matmul", av.shape, bv.shape);

  Shape out_shape(av.shape.begin(), av.shape.end() - 1);
  out_shape.push_back(n);
  Tensor<T> out(out_shape);
  MapC<T> A(av.data.data(), m, k);
  MapM<T> C(out.data.data(), m, n);
  if (transpose_b) {
    MapC<T> B(bv.data.data(), n, k);
    C.noalias() = A * B.transpose();
  } else {
    MapC<T> B(bv.data.data(), k, n);
    C.noalias() = A * B;
  }

  const int32_t ia = a.id, ib = b.id;
  Var<T> inputs[] = {a, b};
  return tape.record("matmul", std::move(out), inputs, [ia, ib, m, k, n, transpose_b](Tape<T>& t, int32_t self) {
    MapC<T> G(t.grad(self).data(), m, n);
    const auto& av = t.value(ia);
    const auto& bv = t.value(ib);
    MapC<T> A(av.data.data(), m, k);
    if (t.requires_grad(ia)) {
      MapM<T> GA(t.grad(ia).data(), m, k);
      if (transpose_b) {
        GA.noalias() += G * MapC<T>(bv.data.data(), n, k);
      } else {
        GA.noalias() += G * MapC<T>(bv.data.data(), k, n).transpose();
      }
    }
    if (t.requires_grad(ib)) {
      if (transpose_b) {
        MapM<T> GB(t.grad(ib).data(), n, k);
        GB.noalias() += G.transpose() * A;
      } else {
        MapM<T> GB(t.grad(ib).data(), k, n);
        GB.noalias() += A.transpose() * G;
      }
    }
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  return binary("add", BinKind::Add, a, b);
}
template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  return binary("sub", BinKind::Sub, a, b);
}
template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  return binary("mul", BinKind::Mul, a, b);
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
  Tape<T>& tape = *a.tape;
  const Tensor<T>& av = a.value();
  Tensor<T> out(av.shape);
  for (int64_t i = 0; i < av.size(); ++i) out[i] = av[i] * s;
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return tape.record("scale", std::move(out), inputs, [ia, s](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  });
}

template <typename T>
Var<T> add_scalar(Var<T> a, T s) {
  Tape<T>& tape = *a.tape;
  const Tensor<T>& av = a.value();
  Tensor<T> out(av.shape);
  for (int64_t i = 0; i < av.size(); ++i) out[i] = av[i] + s;
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return tape.record("add_scalar", std::move(out), inputs, [ia](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

template <typename T>
Var<T> concat(std::span<const Var<T>> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Tape<T>& tape = *parts[0].tape;
  const Shape& s0 = parts[0].shape();
  const size_t ax = axis_index("concat", s0, axis);
  int64_t outer = 1, inner = 1;
  for (size_t i = 0; i < ax; ++i) outer *= s0[i];
  for (size_t i = ax + 1; i < s0.size(); ++i) inner *= s0[i];

  std::vector<int64_t> extents;
  int64_t total = 0;
  for (const auto& p : parts) {
    if (p.tape != &tape) throw ShapeError("concat: operands on different tapes");
    const Shape& s = p.shape();
    if (s.size() != s0.size()) mismatch("concat", s0, s);
    for (size_t i = 0; i < s.size(); ++i)
      if (i != ax && s[i] != s0[i]) mismatch("concat", s0, s);
    extents.push_back(s[ax]);
    total += s[ax];
  }
  Shape out_shape = s0;
  out_shape[ax] = total;
  Tensor<T> out(out_shape);
  int64_t offset = 0;
  for (size_t p = 0; p < parts.size(); ++p) {
    const auto& v = parts[p].value();
    const int64_t chunk = extents[p] * inner;
    for (int64_t o = 0; o < outer; ++o)
      std::copy_n(v.data.data() + o * chunk, chunk, out.data.data() + o * total * inner + offset * inner);
    offset += extents[p];
  }
  std::vector<int32_t> ids;
  for (const auto& p : parts) ids.push_back(p.id);
  return tape.record("concat", std::move(out), parts, [ids, extents, outer, inner, total](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    int64_t offset = 0;
    for (size_t p = 0; p < ids.size(); ++p) {
      const int64_t chunk = extents[p] * inner;
      if (t.requires_grad(ids[p])) {
        auto gp = t.grad(ids[p]);
        for (int64_t o = 0; o < outer; ++o) {
          const T* src = g.data() + o * total * inner + offset * inner;
          T* dst = gp.data() + o * chunk;
          for (int64_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
      offset += extents[p];
    }
  });
}

template <typename T>
Var<T> slice(Var<T> a, int axis, int64_t start, int64_t length) {
  Tape<T>& tape = *a.tape;
  const Shape& s = a.shape();
  const size_t ax = axis_index("slice", s, axis);
  if (start < 0 || length < 0 || start + length > s[ax])
    throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) + ") outside " + shape_str(s));
  int64_t outer = 1, inner = 1;
  for (size_t i = 0; i < ax; ++i) outer *= s[i];
  for (size_t i = ax + 1; i < s.size(); ++i) inner *= s[i];
  const int64_t full = s[ax];
  Shape out_shape = s;
  out_shape[ax] = length;
  Tensor<T> out(out_shape);
  const auto& av = a.value();
  for (int64_t o = 0; o < outer; ++o)
    std::copy_n(av.data.data() + (o * full + start) * inner, length * inner, out.data.data() + o * length * inner);
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return tape.record("slice", std::move(out), inputs, [ia, outer, inner, full, start, length](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (int64_t o = 0; o < outer; ++o) {
      const T* src = g.data() + o * length * inner;
      T* dst = ga.data() + (o * full + start) * inner;
      for (int64_t i = 0; i < length * inner; ++i) dst[i] += src[i];
    }
  });
}

template <typename T>
std::vector<Var<T>> split(Var<T> a, int axis, int64_t pieces) {
  const Shape& s = a.shape();
  const size_t ax = axis_index("split", s, axis);
  if (pieces <= 0 || s[ax] % pieces != 0)
    throw ShapeError("split: cannot split " + shape_str(s) + " into " + std::to_string(pieces) + " pieces");
  const int64_t len = s[ax] / pieces;
  std::vector<Var<T>> out;
  for (int64_t p = 0; p < pieces; ++p) out.push_back(slice(a, static_cast<int>(ax), p * len, len));
  return out;
}

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  if (numel(shape) != numel(a.shape())) mismatch("reshape", a.shape(), shape);
  Tensor<T> out(std::move(shape), a.value().data);
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return a.tape->record("reshape", std::move(out), inputs, [ia](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  const auto& av = a.value();
  if (av.rank() != 2) throw ShapeError("transpose: expected rank 2, got " + shape_str(av.shape));
  const int64_t r = av.shape[0], c = av.shape[1];
  Tensor<T> out(Shape{c, r});
  MapM<T>(out.data.data(), c, r) = MapC<T>(av.data.data(), r, c).transpose();
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return a.tape->record("transpose", std::move(out), inputs, [ia, r, c](Tape<T>& t, int32_t self) {
    MapM<T>(t.grad(ia).data(), r, c) += MapC<T>(t.grad(self).data(), c, r).transpose();
  });
}

template <typename T>
Var<T> layer_norm(Var<T> a, T eps) {
  const auto& av = a.value();
  if (av.rank() < 1) throw ShapeError("layer_norm: scalar input");
  const int64_t rows = av.rows(), cols = av.cols();
  Tensor<T> out(av.shape);
  std::vector<T> rstd(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const T* x = av.data.data() + r * cols;
    T mu = 0;
    for (int64_t c = 0; c < cols; ++c) mu += x[c];
    mu /= T(cols);
    T var = 0;
    for (int64_t c = 0; c < cols; ++c) var += (x[c] - mu) * (x[c] - mu);
    var /= T(cols);
    const T rs = T(1) / std::sqrt(var + eps);
    rstd[static_cast<size_t>(r)] = rs;
    T* y = out.data.data() + r * cols;
    for (int64_t c = 0; c < cols; ++c) y[c] = (x[c] - mu) * rs;
  }
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return a.tape->record("layer_norm", std::move(out), inputs, [ia, rows, cols, rstd = std::move(rstd)](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    const auto& y = t.value(self);
    for (int64_t r = 0; r < rows; ++r) {
      const T* gy = g.data() + r * cols;
      const T* yy = y.data.data() + r * cols;
      T mg = 0, mgy = 0;
      for (int64_t c = 0; c < cols; ++c) {
        mg += gy[c];
        mgy += gy[c] * yy[c];
      }
      mg /= T(cols);
      mgy /= T(cols);
      const T rs = rstd[static_cast<size_t>(r)];
      T* gx = ga.data() + r * cols;
      for (int64_t c = 0; c < cols; ++c) gx[c] += rs * (gy[c] - mg - yy[c] * mgy);
    }
  });
}

template <typename T>
Var<T> softmax(Var<T> a) {
  const auto& av = a.value();
  if (av.rank() < 1) throw ShapeError("softmax: scalar input");
  const int64_t rows = av.rows(), cols = av.cols();
  Tensor<T> out(av.shape);
  for (int64_t r = 0; r < rows; ++r) {
    const T* x = av.data.data() + r * cols;
    T* y = out.data.data() + r * cols;
    T mx = *std::max_element(x, x + cols);
    T z = 0;
    for (int64_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      z += y[c];
    }
    for (int64_t c = 0; c < cols; ++c) y[c] /= z;
  }
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return a.tape->record("softmax", std::move(out), inputs, [ia, rows, cols](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    const auto& y = t.value(self);
    for (int64_t r = 0; r < rows; ++r) {
      const T* gy = g.data() + r * cols;
      const T* yy = y.data.data() + r * cols;
      T dot = 0;
      for (int64_t c = 0; c < cols; ++c) dot += gy[c] * yy[c];
      T* gx = ga.data() + r * cols;
      for (int64_t c = 0; c < cols; ++c) gx[c] += yy[c] * (gy[c] - dot);
    }
  });
}

template <typename T>
Var<T> silu(Var<T> a) {
  return unary<T>("silu", a, &silu_f<T>, &silu_df<T>);
}

template <typename T>
Var<T> gelu(Var<T> a) {
  return unary<T>("gelu", a, &gelu_f<T>, &gelu_df<T>);
}

template <typename T>
Var<T> sinusoidal_embedding(Var<T> t, int64_t dim, T max_period) {
  const auto& tv = t.value();
  if (tv.rank() > 1) throw ShapeError("sinusoidal_embedding: expected scalar or [n], got " + shape_str(tv.shape));
  if (dim <= 0 || dim % 2 != 0) throw ShapeError("sinusoidal_embedding: dim must be positive and even, got " + std::to_string(dim));
  const int64_t n = tv.size(), half = dim / 2;
  std::vector<T> freqs(static_cast<size_t>(half));
  for (int64_t k = 0; k < half; ++k) freqs[static_cast<size_t>(k)] = std::exp(-std::log(max_period) * T(k) / T(half));
  Tensor<T> out(Shape{n, dim});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t k = 0; k < half; ++k) {
      const T arg = tv[i] * freqs[static_cast<size_t>(k)];
      out.at(i, k) = std::cos(arg);
      out.at(i, half + k) = std::sin(arg);
    }
  const int32_t it = t.id;
  Var<T> inputs[] = {t};
  return t.tape->record("sinusoidal_embedding", std::move(out), inputs, [it, n, half, freqs](Tape<T>& tp, int32_t self) {
    auto g = tp.grad(self);
    auto gt = tp.grad(it);
    const auto& tv = tp.value(it);
    for (int64_t i = 0; i < n; ++i) {
      T acc = 0;
      for (int64_t k = 0; k < half; ++k) {
        const T w = freqs[static_cast<size_t>(k)];
        const T arg = tv[i] * w;
        acc += -std::sin(arg) * w * g[static_cast<size_t>(i * 2 * half + k)];
        acc += std::cos(arg) * w * g[static_cast<size_t>(i * 2 * half + half + k)];
      }
      gt[static_cast<size_t>(i)] += acc;
    }
  });
}

template <typename T>
Var<T> gather(Var<T> table, std::span<const int64_t> ids) {
  const auto& tv = table.value();
  if (tv.rank() != 2) throw ShapeError("gather: table must be rank 2, got " + shape_str(tv.shape));
  const int64_t v = tv.shape[0], c = tv.shape[1];
  const auto n = static_cast<int64_t>(ids.size());
  Tensor<T> out(Shape{n, c});
  for (int64_t i = 0; i < n; ++i) {
    const int64_t id = ids[static_cast<size_t>(i)];
    if (id < 0 || id >= v) throw ShapeError("gather: index " + std::to_string(id) + " outside table " + shape_str(tv.shape));
    std::copy_n(tv.data.data() + id * c, c, out.data.data() + i * c);
  }
  const int32_t itab = table.id;
  std::vector<int64_t> idx(ids.begin(), ids.end());
  Var<T> inputs[] = {table};
  return table.tape->record("gather", std::move(out), inputs, [itab, idx = std::move(idx), c](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    auto gt = t.grad(itab);
    for (size_t i = 0; i < idx.size(); ++i)
      for (int64_t k = 0; k < c; ++k) gt[static_cast<size_t>(idx[i] * c + k)] += g[i * static_cast<size_t>(c) + static_cast<size_t>(k)];
  });
}

template <typename T>
Var<T> masked_fill(Var<T> a, std::span<const uint8_t> mask, T value) {
  const auto& av = a.value();
  if (static_cast<int64_t>(mask.size()) != av.size())
    throw ShapeError("masked_fill: mask of " + std::to_string(mask.size()) + " entries for shape " + shape_str(av.shape));
  Tensor<T> out = av;
  for (int64_t i = 0; i < av.size(); ++i)
    if (mask[static_cast<size_t>(i)]) out[i] = value;
  std::vector<uint8_t> m(mask.begin(), mask.end());
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return a.tape->record("masked_fill", std::move(out), inputs, [ia, m = std::move(m)](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (size_t i = 0; i < g.size(); ++i)
      if (!m[i]) ga[i] += g[i];
  });
}

template <typename T>
Var<T> sum(Var<T> a) {
  const auto& av = a.value();
  T s = std::accumulate(av.data.begin(), av.data.end(), T(0));
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return a.tape->record("sum", Tensor<T>::scalar(s), inputs, [ia](Tape<T>& t, int32_t self) {
    const T g = t.grad(self)[0];
    for (auto& x : t.grad(ia)) x += g;
  });
}

template <typename T>
Var<T> mean(Var<T> a) {
  const auto& av = a.value();
  if (av.size() == 0) throw ShapeError("mean: empty input");
  const T n = T(av.size());
  T s = std::accumulate(av.data.begin(), av.data.end(), T(0)) / n;
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return a.tape->record("mean", Tensor<T>::scalar(s), inputs, [ia, n](Tape<T>& t, int32_t self) {
    const T g = t.grad(self)[0] / n;
    for (auto& x : t.grad(ia)) x += g;
  });
}

template <typename T>
Var<T> rotary(Var<T> a, const Tensor<T>& angles) {
  const auto& av = a.value();
  require_even_cols<T>("rotary", av.shape);
  const int64_t rows = av.rows(), pairs = av.cols() / 2;
  if (angles.rank() != 2 || angles.shape[0] != rows || angles.shape[1] != pairs)
    throw ShapeError("rotary: angles " + shape_str(angles.shape) + " do not match input " + shape_str(av.shape));
  std::vector<T> cs(static_cast<size_t>(rows * pairs)), sn(static_cast<size_t>(rows * pairs));
  for (int64_t i = 0; i < rows * pairs; ++i) {
    cs[static_cast<size_t>(i)] = std::cos(angles[i]);
    sn[static_cast<size_t>(i)] = std::sin(angles[i]);
  }
  Tensor<T> out(av.shape);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t p = 0; p < pairs; ++p) {
      const size_t q = static_cast<size_t>(r * pairs + p);
      const T x0 = av[r * 2 * pairs + 2 * p], x1 = av[r * 2 * pairs + 2 * p + 1];
      out[r * 2 * pairs + 2 * p] = x0 * cs[q] - x1 * sn[q];
      out[r * 2 * pairs + 2 * p + 1] = x0 * sn[q] + x1 * cs[q];
    }
  const int32_t ia = a.id;
  Var<T> inputs[] = {a};
  return a.tape->record("rotary", std::move(out), inputs, [ia, rows, pairs, cs = std::move(cs), sn = std::move(sn)](Tape<T>& t, int32_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t p = 0; p < pairs; ++p) {
        const size_t q = static_cast<size_t>(r * pairs + p);
        const size_t i0 = static_cast<size_t>(r * 2 * pairs + 2 * p);
        ga[i0] += g[i0] * cs[q] + g[i0 + 1] * sn[q];
        ga[i0 + 1] += -g[i0] * sn[q] + g[i0 + 1] * cs[q];
      }
  });
}

#define FM_INSTANTIATE_OPS(T)                                                        \
  template Var<T> matmul<T>(Var<T>, Var<T>, bool);                                   \
  template Var<T> add<T>(Var<T>, Var<T>);                                            \
  template Var<T> sub<T>(Var<T>, Var<T>);                                            \
  template Var<T> mul<T>(Var<T>, Var<T>);                                            \
  template Var<T> scale<T>(Var<T>, T);                                               \
  template Var<T> add_scalar<T>(Var<T>, T);                                          \
  template Var<T> concat<T>(std::span<const Var<T>>, int);                           \
  template Var<T> slice<T>(Var<T>, int, int64_t, int64_t);                           \
  template std::vector<Var<T>> split<T>(Var<T>, int, int64_t);                       \
  template Var<T> reshape<T>(Var<T>, Shape);                                         \
  template Var<T> transpose<T>(Var<T>);                                              \
  template Var<T> layer_norm<T>(Var<T>, T);                                          \
  template Var<T> softmax<T>(Var<T>);                                                \
  template Var<T> silu<T>(Var<T>);                                                   \
  template Var<T> gelu<T>(Var<T>);                                                   \
  template Var<T> sinusoidal_embedding<T>(Var<T>, int64_t, T);                       \
  template Var<T> gather<T>(Var<T>, std::span<const int64_t>);                       \
  template Var<T> masked_fill<T>(Var<T>, std::span<const uint8_t>, T);               \
  template Var<T> sum<T>(Var<T>);                                                    \
  template Var<T> mean<T>(Var<T>);                                                   \
  template Var<T> rotary<T>(Var<T>, const Tensor<T>&);

FM_INSTANTIATE_OPS(float)
FM_INSTANTIATE_OPS(double)

}  // namespace fm::nc
