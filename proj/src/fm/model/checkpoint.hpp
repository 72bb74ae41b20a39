// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>

#include "fm/model/mft.hpp"

namespace fm::model {

/// Optimizer moments and loop position stored next to the parameters.
struct TrainingSnapshot {
  int64_t optimizer_steps = 0;
  std::vector<nc::Tensor<float>> first_moments, second_moments;
  json state = json::object();  // trainer-defined loop state
};

struct Checkpoint {
  std::unique_ptr<Mft<float>> model;
  std::optional<TrainingSnapshot> training;
  json header;
};

/// JSON manifest (config, normaliser, parameter names and shapes, dtype)
/// followed by little-endian float32 payloads in manifest order; optimizer
/// moments follow when a snapshot is given. Written atomically.
void save_checkpoint(const std::filesystem::path& path, const Mft<float>& m, const TrainingSnapshot* training = nullptr,
                     const json& extra = json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fm::model
