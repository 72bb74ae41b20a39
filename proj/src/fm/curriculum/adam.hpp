// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fm/numeric/tape.hpp"

namespace fm::curriculum {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled: p -= lr * wd * p
};

/// Adam with bias correction and decoupled weight decay.
template <typename T>
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  int64_t steps() const { return t_; }
  std::vector<nc::Tensor<T>>& first_moments() { return m_; }
  std::vector<nc::Tensor<T>>& second_moments() { return v_; }
  void restore(int64_t t, std::vector<nc::Tensor<T>> m, std::vector<nc::Tensor<T>> v) {
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
  }

  void step(const std::vector<nc::Parameter<T>*>& params, double lr_scale = 1.0) {
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->value.shape);
        v_.emplace_back(p->value.shape);
      }
    }
    if (m_.size() != params.size()) throw std::logic_error("Adam: parameter list changed between steps");
    ++t_;
    const double lr = cfg_.lr * lr_scale;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      auto& m = m_[i].data;
      auto& v = v_[i].data;
      if (m.size() != p.value.data.size()) throw std::logic_error("Adam: moment shape mismatch for " + p.name);
      for (size_t j = 0; j < m.size(); ++j) {
        const double g = p.grad.data[j];
        m[j] = static_cast<T>(cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g);
        v[j] = static_cast<T>(cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g);
        const double update = (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.eps);
        p.value.data[j] = static_cast<T>(p.value.data[j] - lr * (update + cfg_.weight_decay * p.value.data[j]));
      }
    }
  }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<nc::Tensor<T>> m_, v_;
};

/// Scales gradients so their global L2 norm is at most `max_norm`; returns the norm before scaling.
template <typename T>
double clip_grad_norm(const std::vector<nc::Parameter<T>*>& params, double max_norm) {
  double s = 0.0;
  for (auto* p : params)
    for (T g : p->grad.data) s += static_cast<double>(g) * g;
  const double norm = std::sqrt(s);
  if (max_norm > 0.0 && norm > max_norm) {
    const T f = static_cast<T>(max_norm / norm);
    for (auto* p : params)
      for (T& g : p->grad.data) g *= f;
  }
  return norm;
}

}  // namespace fm::curriculum
