// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/model/embeddings.hpp"

#include <cmath>

#include "fm/model/config.hpp"
#include "fm/util/rng.hpp"

namespace fm::model {

std::vector<float> instruction_vector(const std::string& text, const std::map<std::string, std::vector<float>>& overrides) {
  if (auto it = overrides.find(text); it != overrides.end()) return it->second;
  Rng rng(fnv1a(text));
  std::vector<double> v(kInstructionDim);
  double norm = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(kInstructionDim);
  for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

std::vector<float> instruction_vector(TaskKind k, const std::map<std::string, std::vector<float>>& overrides) {
  return instruction_vector(instruction_text(k), overrides);
}

const std::vector<float>& text_token_table() {
  static const std::vector<float> table = [] {
    const auto& vocab = vocabulary();
    std::vector<float> t(vocab.size() * kTextDim, 0.0f);
    const double s = 1.0 / std::sqrt(static_cast<double>(kTextDim));
    for (size_t v = 1; v < vocab.size(); ++v) {
      Rng rng(fnv1a("token:" + vocab[v]));
      for (int c = 0; c < kTextDim; ++c) t[v * kTextDim + static_cast<size_t>(c)] = static_cast<float>(s * rng.normal());
    }
    return t;
  }();
  return table;
}

}  // namespace fm::model
