// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fm/numeric/ops.hpp"
#include "fm/util/errors.hpp"
#include "fm/util/rng.hpp"

// Rectified flow: x_t = (1 - t) x0 + t x1 with data x0 and noise x1, and the
// constant velocity v = x1 - x0 along each path.
namespace fm::flow {

inline constexpr int kTrainTimesteps = 1000;
inline constexpr int kDefaultSteps = 50;

template <typename T>
std::vector<T> interpolate(std::span<const T> x0, std::span<const T> x1, double t) {
  if (x0.size() != x1.size())
    throw nc::ShapeError("interpolate: size mismatch " + std::to_string(x0.size()) + " vs " + std::to_string(x1.size()));
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("interpolate: t must lie in [0, 1]");
  std::vector<T> out(x0.size());
  const T a = static_cast<T>(1.0 - t), b = static_cast<T>(t);
  for (size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * x1[i];
  // Exact endpoints regardless of rounding in a*x0 + b*x1.
  if (t == 0.0) out.assign(x0.begin(), x0.end());
  if (t == 1.0) out.assign(x1.begin(), x1.end());
  return out;
}

template <typename T>
std::vector<T> velocity_target(std::span<const T> x0, std::span<const T> x1) {
  if (x0.size() != x1.size())
    throw nc::ShapeError("velocity_target: size mismatch " + std::to_string(x0.size()) + " vs " + std::to_string(x1.size()));
  std::vector<T> v(x0.size());
  for (size_t i = 0; i < x0.size(); ++i) v[i] = x1[i] - x0[i];
  return v;
}

/// Mean of squared residuals over every element of every batch entry
/// (entries may have different frame counts). Throws NumericError naming the
/// first batch index with a non-finite prediction.
template <typename T>
nc::Var<T> rf_loss(nc::Tape<T>& tape, std::span<const nc::Var<T>> v_pred, std::span<const nc::Tensor<T>> v_target) {
  if (v_pred.size() != v_target.size() || v_pred.empty()) throw nc::ShapeError("rf_loss: prediction and target batches differ in size or are empty");
  int64_t total = 0;
  for (size_t b = 0; b < v_pred.size(); ++b) {
    for (T x : v_pred[b].value().data)
      if (!std::isfinite(static_cast<double>(x))) throw NumericError("rf_loss: non-finite prediction in batch entry " + std::to_string(b));
    total += v_target[b].size();
  }
  nc::Var<T> acc;
  for (size_t b = 0; b < v_pred.size(); ++b) {
    auto d = nc::sub(v_pred[b], tape.constant(v_target[b]));
    auto s = nc::sum(nc::mul(d, d));
    acc = acc.valid() ? nc::add(acc, s) : s;
  }
  return nc::scale(acc, static_cast<T>(1.0 / static_cast<double>(total)));
}

/// Plain-value form of rf_loss.
template <typename T>
double rf_loss_value(std::span<const T> v_pred, std::span<const T> x0, std::span<const T> x1) {
  if (v_pred.size() != x0.size() || x0.size() != x1.size()) throw nc::ShapeError("rf_loss: size mismatch");
  double s = 0.0;
  for (size_t i = 0; i < v_pred.size(); ++i) {
    if (!std::isfinite(static_cast<double>(v_pred[i]))) throw NumericError("rf_loss: non-finite prediction in batch entry 0");
    const double r = static_cast<double>(v_pred[i]) - (static_cast<double>(x1[i]) - static_cast<double>(x0[i]));
    s += r * r;
  }
  return v_pred.empty() ? 0.0 : s / static_cast<double>(v_pred.size());
}

/// Uniform over the bin centres (k + 0.5) / 1000.
inline double sample_timestep(Rng& rng) { return (static_cast<double>(rng.index(kTrainTimesteps)) + 0.5) / kTrainTimesteps; }

enum class Integrator { Euler, Midpoint };

template <typename T>
using VelocityFn = std::function<std::vector<T>(double t, const std::vector<T>& x)>;

/// Integrates from t = 1 (noise) down to t = 0 with `steps` uniform steps:
/// x <- x - (1/N) v(t, x). Throws NumericError naming the step on non-finite state.
template <typename T>
std::vector<T> sample_ode(const VelocityFn<T>& v, std::vector<T> x, int steps, Integrator integrator = Integrator::Euler) {
  if (steps < 1) throw std::invalid_argument("sample_ode: steps must be at least 1");
  const double h = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = 1.0 - k * h;
    std::vector<T> vel = v(t, x);
    if (vel.size() != x.size()) throw nc::ShapeError("sample_ode: velocity size " + std::to_string(vel.size()) + " differs from state size " + std::to_string(x.size()));
    if (integrator == Integrator::Midpoint) {
      std::vector<T> mid(x.size());
      for (size_t i = 0; i < x.size(); ++i) mid[i] = x[i] - static_cast<T>(0.5 * h) * vel[i];
      vel = v(t - 0.5 * h, mid);
    }
    for (size_t i = 0; i < x.size(); ++i) {
      x[i] -= static_cast<T>(h) * vel[i];
      if (!std::isfinite(static_cast<double>(x[i]))) throw NumericError("sample_ode: non-finite state at step " + std::to_string(k));
    }
  }
  return x;
}

/// Standard-normal noise of the given size.
template <typename T>
std::vector<T> gaussian_noise(size_t n, Rng& rng) {
  std::vector<T> x(n);
  for (auto& v : x) v = static_cast<T>(rng.normal());
  return x;
}

}  // namespace fm::flow
