// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/model/config.hpp"

#include <cmath>
#include <fstream>

#include "fm/util/errors.hpp"

namespace fm::model {

namespace {
const char* const kPositionNames[] = {"aligned-1d-rope", "1d-learnable", "3d-learnable", "3d-rope"};
const char* const kModalityNames[] = {"source", "target", "text", "trajectory", "style"};
}  // namespace

const char* position_encoding_name(PositionEncoding p) { return kPositionNames[static_cast<int>(p)]; }
const char* modality_name(Modality m) { return kModalityNames[static_cast<int>(m)]; }

PositionEncoding parse_position_encoding(const std::string& s) {
  for (int i = 0; i < 4; ++i)
    if (s == kPositionNames[i]) return static_cast<PositionEncoding>(i);
  throw ConfigError("unknown position encoding '" + s + "'; valid: aligned-1d-rope, 1d-learnable, 3d-learnable, 3d-rope");
}

void ModelConfig::validate() const {
  if (width <= 0 || heads <= 0 || blocks < 0 || ffn_mult <= 0) throw ConfigError("model: width, heads and ffn_mult must be positive, blocks non-negative");
  if (width % (2 * heads) != 0) throw ConfigError("model: width " + std::to_string(width) + " must be divisible by 2 * heads");
  if (position == PositionEncoding::Rope3d && head_dim() / 2 < 3) throw ConfigError("model: 3d-rope needs at least 3 rotary pairs per head");
  if (max_frames < 1) throw ConfigError("model: max_frames must be positive");
  if (!(rope_base > 1.0)) throw ConfigError("model: rope_base must exceed 1");
  for (const auto& [text, v] : instruction_overrides) {
    if (static_cast<int>(v.size()) != kInstructionDim)
      throw ConfigError("instruction override for '" + text + "' has " + std::to_string(v.size()) + " values, expected 768");
    for (float x : v)
      if (!std::isfinite(x)) throw ConfigError("instruction override for '" + text + "' is not finite");
  }
  try {
    layout.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json to_json(const ModelConfig& c) {
  json j = {{"width", c.width},
            {"heads", c.heads},
            {"blocks", c.blocks},
            {"ffn_mult", c.ffn_mult},
            {"max_frames", c.max_frames},
            {"position", position_encoding_name(c.position)},
            {"instruction_modulation", c.instruction_modulation},
            {"rope_base", c.rope_base},
            {"init_seed", c.init_seed},
            {"layout", {{"name", c.layout.name}, {"joints", c.layout.joints}, {"features", c.layout.features}, {"fps", c.layout.fps}}}};
  if (!c.instruction_overrides.empty()) j["instruction_overrides"] = c.instruction_overrides;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  try {
    c.width = j.value("width", c.width);
    c.heads = j.value("heads", c.heads);
    c.blocks = j.value("blocks", c.blocks);
    c.ffn_mult = j.value("ffn_mult", c.ffn_mult);
    c.max_frames = j.value("max_frames", c.max_frames);
    c.position = parse_position_encoding(j.value("position", std::string(position_encoding_name(c.position))));
    c.instruction_modulation = j.value("instruction_modulation", c.instruction_modulation);
    c.rope_base = j.value("rope_base", c.rope_base);
    c.init_seed = j.value("init_seed", c.init_seed);
    if (j.contains("layout")) {
      const auto& l = j.at("layout");
      c.layout = FeatureLayout::from_header(l.at("name").get<std::string>(), l.at("joints").get<int>(), l.at("features").get<int>(), l.at("fps").get<double>());
    }
    if (j.contains("instruction_overrides")) c.instruction_overrides = j.at("instruction_overrides").get<std::map<std::string, std::vector<float>>>();
    if (j.contains("instruction_file")) {
      for (auto& [k, v] : load_instruction_overrides(j.at("instruction_file").get<std::string>())) c.instruction_overrides[k] = std::move(v);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::map<std::string, std::vector<float>> load_instruction_overrides(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instruction file '" + path + "'");
  try {
    return json::parse(in).get<std::map<std::string, std::vector<float>>>();
  } catch (const json::exception& e) {
    throw ConfigError("instruction file '" + path + "': " + e.what());
  }
}

}  // namespace fm::model
