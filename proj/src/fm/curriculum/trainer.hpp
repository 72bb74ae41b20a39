// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "fm/curriculum/adam.hpp"
#include "fm/curriculum/curriculum.hpp"
#include "fm/model/mft.hpp"

namespace fm::curriculum {

using json = nlohmann::json;

enum class StageSelect { All, Pretrain, Finetune };
StageSelect parse_stage_select(const std::string& s);
const char* stage_select_name(StageSelect s);

struct TrainConfig {
  uint64_t seed = 0;
  int batch = 16;
  AdamConfig adam;
  double grad_clip = 1.0;  // global gradient-norm limit; 0 disables
  std::string lr_schedule = "constant";  // constant or cosine (over the whole run)
  double lr_min_ratio = 0.1;             // cosine floor as a fraction of lr
  int warmup_steps = 0;
  CurriculumConfig curriculum;
  StageSelect stage = StageSelect::All;
  int eval_samples = 16;    // held-out instances per task at each evaluation
  int eval_steps = 10;      // sampling steps used by training-time evaluation
  int checkpoint_every = 5; // epochs between last-good checkpoints
  int validation_per_task = 2;

  void validate() const;
};

json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const json& j);

struct TrainResult {
  std::filesystem::path final_checkpoint, best_checkpoint, last_checkpoint, log;
  int64_t steps = 0;
  int epochs = 0;
  double last_loss = 0.0;
  double best_validation = 0.0;
};

/// Runs pre-training then fine-tuning on the dataset's training split.
/// Outputs in `out_dir`: train.jsonl, eval.csv, last.ckpt, best.ckpt, final.ckpt.
class Trainer {
 public:
  Trainer(model::Mft<float>& model, const Dataset& data, TrainConfig cfg, std::filesystem::path out_dir, json header_extra = json::object());

  /// Restores parameters, optimizer moments and loop position.
  void resume(const std::filesystem::path& checkpoint);
  TrainResult run();

  /// Stops (with a last-good checkpoint) once this many epochs have run in total; -1 = no limit.
  int stop_after_epochs = -1;
  /// Observer of per-step log records.
  std::function<void(const json&)> on_record;

 private:
  struct Phase {
    std::string name;  // pretrain, finetune or uniform
    int epochs = 0;
  };
  std::vector<Phase> phases() const;
  double train_step(const std::string& phase, int phase_epoch, const std::vector<int>& clips, std::string& task_label);
  void evaluate(int global_epoch);
  double validation_loss() const;
  int64_t total_steps() const;
  double lr_scale() const;
  /// `phase_epoch` is the next epoch of the current phase.
  void checkpoint(const std::filesystem::path& path, int phase_epoch) const;
  void log(const json& record);
  json loop_state(int phase_epoch) const;

  model::Mft<float>& model_;
  const Dataset& data_;
  TrainConfig cfg_;
  std::filesystem::path out_;
  json header_extra_;
  Adam<float> adam_;
  CurriculumState state_;
  std::vector<int> train_clips_;
  std::vector<TaskSample> validation_;

  size_t phase_index_ = 0;
  int phase_epoch_ = 0;
  int global_epoch_ = 0;
  int64_t step_ = 0;
  double best_val_ = 0.0;
  bool has_best_ = false;
  double last_loss_ = 0.0;
};

}  // namespace fm::curriculum
