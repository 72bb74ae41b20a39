// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fm/motion/layout.hpp"

namespace fm::model {

using json = nlohmann::json;

enum class PositionEncoding { Aligned1dRope, Learnable1d, Learnable3d, Rope3d };
const char* position_encoding_name(PositionEncoding p);
PositionEncoding parse_position_encoding(const std::string& s);
inline bool is_rope(PositionEncoding p) { return p == PositionEncoding::Aligned1dRope || p == PositionEncoding::Rope3d; }

/// Token streams in joint-attention concatenation order.
enum class Modality { Source, Target, Text, Trajectory, Style };
inline constexpr int kModalityCount = 5;
const char* modality_name(Modality m);

inline constexpr int kInstructionDim = 768;
inline constexpr int kStyleDim = 512;
inline constexpr int kTextDim = 64;
inline constexpr int kTimeFeatures = 128;

struct ModelConfig {
  int width = 128;
  int heads = 4;
  int blocks = 4;
  int ffn_mult = 4;
  int max_frames = 128;
  PositionEncoding position = PositionEncoding::Aligned1dRope;
  bool instruction_modulation = true;
  double rope_base = 10000.0;
  uint64_t init_seed = 0;
  FeatureLayout layout = FeatureLayout::toy();
  /// Instruction string -> 768-vector overriding the hashed stand-in.
  std::map<std::string, std::vector<float>> instruction_overrides;

  int head_dim() const { return width / heads; }
  int source_dim() const { return layout.features + 1; }
  int trajectory_dim() const { return 4 * layout.joints; }
  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
};

json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const json& j);
/// Reads {"<instruction string>": [768 floats], ...}.
std::map<std::string, std::vector<float>> load_instruction_overrides(const std::string& path);

}  // namespace fm::model
