// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "fm/motion/task.hpp"

namespace fm::model {

/// Frozen 768-dim unit vector for an instruction sentence: the override when
/// one is given for that exact string, otherwise a pseudo-random vector
/// seeded by the string's FNV-1a hash.
std::vector<float> instruction_vector(const std::string& text, const std::map<std::string, std::vector<float>>& overrides = {});
std::vector<float> instruction_vector(TaskKind k, const std::map<std::string, std::vector<float>>& overrides = {});

/// Frozen [vocabulary, kTextDim] token table, row v seeded by the word's hash.
const std::vector<float>& text_token_table();

}  // namespace fm::model
