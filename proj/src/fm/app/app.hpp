// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fm/curriculum/trainer.hpp"
#include "fm/guidance/guidance.hpp"
#include "fm/metrics/evaluate.hpp"
#include "fm/model/checkpoint.hpp"

namespace fm::app {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct RunConfig {
  model::ModelConfig model;
  curriculum::TrainConfig train;
  DataConfig data;
  guidance::GuidanceOverrides guidance;
  uint64_t seed = 0;  // training seed and parameter-initialisation seed
  std::string output_dir;  // empty: $FM_OUTPUT_ROOT/<hash> or runs/<hash>
  std::string dataset_dir; // empty: <output_dir>/data
  std::string precision = "float32";
};

/// Canonical JSON; `output_dir` is omitted when `with_output` is false.
json to_json(const RunConfig& c, bool with_output = true);
RunConfig run_config_from_json(const json& j, const fs::path& base_dir = {});
RunConfig load_run_config(const fs::path& path);
/// FNV-1a of the canonical JSON without output paths, as 16 hex digits.
std::string config_hash(const RunConfig& c);

fs::path output_dir(const RunConfig& c);
fs::path dataset_dir(const RunConfig& c);

json guidance_to_json(const guidance::GuidanceOverrides& g);
guidance::GuidanceOverrides guidance_from_json(const json& j);

/// Writes the corpus and manifest; returns the dataset directory.
fs::path make_data(const RunConfig& c, const fs::path& out = {});

struct TrainOptions {
  std::string resume;
  std::string stage;  // overrides train.stage when non-empty
  fs::path out;
  int stop_after_epochs = -1;
};
curriculum::TrainResult train(RunConfig c, const TrainOptions& opt);

/// Parsed condition file. Relative paths resolve against the file's directory.
struct ConditionFile {
  std::optional<TaskKind> task;
  std::optional<int> frames;
  Conditions cond;
};
ConditionFile load_conditions(const fs::path& path, const FeatureLayout& layout);

struct SampleRequest {
  std::string task;
  std::string condition;  // condition file; may be empty for unconditional generation
  std::string source;     // source motion overriding the condition file's
  int steps = flow::kDefaultSteps;
  uint64_t seed = 0;
  int frames = 0;         // 0: condition file, then source, then trajectory frames
  bool midpoint = false;
  bool require_source = false;
};

struct SampleResult {
  MotionTensor motion;
  json metadata;
};
SampleResult sample(const model::Checkpoint& ck, const SampleRequest& req);

struct EvalRequest {
  std::string checkpoint;
  std::string dataset;
  std::vector<std::string> tasks;  // empty: every task with a guidance row
  std::string split = "heldout";   // heldout, train or both
  int steps = flow::kDefaultSteps;
  int max_samples = 0;
  uint64_t seed = 0;
  fs::path out;
};
/// Writes report.json and report.csv; returns the JSON report.
json evaluate(const EvalRequest& req);

struct AblateRequest {
  std::string config;
  std::vector<std::string> variants;
  int seeds = 1;
  int eval_steps = 20;
  int eval_samples = 0;
  fs::path out;
};
/// Names: aligned-1d-rope, 1d-learnable, 3d-learnable, 3d-rope,
/// no-instruction-modulation, no-curriculum.
json ablate(const AblateRequest& req);
void apply_variant(RunConfig& c, const std::string& variant);
const std::vector<std::string>& variant_names();

std::vector<std::string> split_list(const std::string& s);

}  // namespace fm::app
