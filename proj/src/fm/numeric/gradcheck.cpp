// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/numeric/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fm/util/rng.hpp"

namespace fm::nc {

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << e.name << ": ";
    if (!e.finite)
      os << "non-finite (" << e.note << ")";
    else
      os << "max rel " << e.max_rel_error << ", max abs " << e.max_abs_error;
    os << " over " << e.probed << " entries\n";
  }
  return os.str();
}

template <typename T>
GradCheckReport check_gradients(const LossFn<T>& fn, const std::vector<Parameter<T>*>& params,
                                const GradCheckOptions& options) {
  for (auto* p : params) p->zero_grad();
  double base_loss = 0.0;
  {
    Tape<T> tape(true);
    Var<T> loss = fn(tape);
    base_loss = static_cast<double>(loss.value()[0]);
    tape.backward(loss);
  }

  auto eval = [&]() {
    Tape<T> tape(false);
    return static_cast<double>(fn(tape).value()[0]);
  };

  Rng rng(options.seed);
  GradCheckReport report;
  for (auto* p : params) {
    GradCheckEntry entry;
    entry.name = p->name;
    if (!std::isfinite(base_loss)) {
      entry.finite = false;
      entry.note = "loss is non-finite";
    }
    const int64_t n = p->value.size();
    std::vector<int> probe;
    if (options.max_entries <= 0 || options.max_entries >= n) {
      for (int64_t i = 0; i < n; ++i) probe.push_back(static_cast<int>(i));
    } else {
      probe = rng.choose(static_cast<int>(n), static_cast<int>(options.max_entries));
    }
    for (int i : probe) {
      const T saved = p->value[i];
      p->value[i] = static_cast<T>(static_cast<double>(saved) + options.step);
      const double up = eval();
      p->value[i] = static_cast<T>(static_cast<double>(saved) - options.step);
      const double down = eval();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = static_cast<double>(p->grad[i]);
      ++entry.probed;
      if (!std::isfinite(numeric) || !std::isfinite(analytic)) {
        entry.finite = false;
        entry.note = "entry " + std::to_string(i) + ": analytic " + std::to_string(analytic) + ", numeric " + std::to_string(numeric);
        continue;
      }
      const double abs_err = std::abs(analytic - numeric);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.eps});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

template GradCheckReport check_gradients<float>(const LossFn<float>&, const std::vector<Parameter<float>*>&, const GradCheckOptions&);
template GradCheckReport check_gradients<double>(const LossFn<double>&, const std::vector<Parameter<double>*>&, const GradCheckOptions&);

}  // namespace fm::nc
