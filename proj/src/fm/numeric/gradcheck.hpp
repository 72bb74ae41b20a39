// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fm/numeric/tape.hpp"

namespace fm::nc {

struct GradCheckOptions {
  double step = 1e-5;
  // Denominator floor of the relative error.
  double eps = 1e-6;
  // Entries probed per parameter; 0 probes all of them.
  int64_t max_entries = 0;
  uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  int64_t probed = 0;
  // False when the loss, an analytic or a numeric gradient was non-finite.
  bool finite = true;
  std::string note;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.finite ? e.max_rel_error : std::numeric_limits<double>::infinity());
    return m;
  }
  bool all_finite() const {
    for (const auto& e : entries)
      if (!e.finite) return false;
    return true;
  }
  bool passed(double tol) const { return all_finite() && max_rel_error() < tol; }
  std::string summary() const;
};

/// Scalar function recorded on the given tape from the current parameter values.
template <typename T>
using LossFn = std::function<Var<T>(Tape<T>&)>;

/// Compares reverse-mode gradients with central differences. Per parameter,
/// reports max |analytic - numeric| / max(|analytic|, |numeric|, eps).
/// Parameter values are restored before returning.
template <typename T>
GradCheckReport check_gradients(const LossFn<T>& fn, const std::vector<Parameter<T>*>& params,
                                const GradCheckOptions& options = {});

}  // namespace fm::nc
