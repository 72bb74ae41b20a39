// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <vector>

#include "fm/motion/generator.hpp"
#include "fm/motion/task.hpp"
#include "fm/util/rng.hpp"

namespace fm::curriculum {

enum class Stage { Pretrain, Finetune };
const char* stage_name(Stage s);

/// Self-supervised pre-training recipes.
enum class Recipe { MaskedReconstruction, TrajectoryGeneration, InBetween };
const char* recipe_name(Recipe r);

struct PretrainDraw {
  Recipe recipe = Recipe::MaskedReconstruction;
  double mask_ratio = 0.0;  // masked-reconstruction only
};

/// Uniform over the three recipes; mask ratio uniform in [0, 1].
PretrainDraw pretrain_task_sampler(Rng& rng);

/// Builds a training instance for `draw`. Full masking yields an
/// unconditional sample, no masking a reconstruction sample.
TaskSample make_pretrain_instance(const PretrainDraw& draw, const Clip& clip, Rng& rng);

/// Fresh instance of task `k` on `clip`: trajectory hints, masks, edits and
/// styles are redrawn from `rng`.
TaskSample make_instance(TaskKind k, const Clip& clip, Rng& rng);

/// Fine-tuning entries in introduction order; the sixth holds two tasks.
const std::vector<std::vector<TaskKind>>& finetune_order();

struct ScheduleEntry {
  std::vector<TaskKind> tasks;
  int introduced = 0;  // fine-tuning epoch
};

struct CurriculumConfig {
  bool enabled = true;
  double epoch_scale = 0.05;     // multiplies the reference epoch counts below
  int reference_pretrain_epochs = 1000;
  int reference_window = 200;    // epochs between task introductions
  int finetune_tail_epochs = -1; // epochs after the last introduction; -1 = one window
  double replay_floor = 0.05;
  std::array<double, 4> mixture = {0.05, 0.05, 0.45, 0.45};  // unconditional, reconstruction, previous, new

  int pretrain_epochs() const;
  int window() const;
  int finetune_epochs() const;
  void validate() const;
};

/// Entries with introduction epochs `window * i`.
std::vector<ScheduleEntry> build_schedule(int window);
/// Tasks introduced at or before `epoch`, in introduction order.
std::vector<TaskKind> finetune_schedule(int epoch, int window);

struct EvalRecord {
  TaskKind task = TaskKind::TextGeneration;
  int epoch = 0;
  double fid = 0.0;
};

/// Last evaluations per task, oldest first.
using FidHistory = std::map<TaskKind, std::vector<double>>;

/// Weight_i proportional to max(floor, relative FID change); uniform when a
/// previous task has fewer than two evaluations.
std::map<TaskKind, double> replay_probabilities(const std::vector<TaskKind>& previous, const FidHistory& history, double floor = 0.05);

struct CurriculumState {
  Stage stage = Stage::Pretrain;
  int epoch = 0;  // within the current stage
  std::vector<ScheduleEntry> schedule;
  FidHistory history;
  std::map<TaskKind, double> replay;

  /// Tasks of the newest introduced entry.
  std::vector<TaskKind> newest() const;
  /// Tasks introduced before the newest entry.
  std::vector<TaskKind> previous() const;
  std::vector<TaskKind> active() const;
  void record(const EvalRecord& r);
  void refresh_replay(double floor);
};

/// 5/5/45/45 mixture; the previous-task mass moves to the new task while
/// there are no previous tasks.
TaskKind sample_training_task(const CurriculumState& state, Rng& rng, const std::array<double, 4>& mixture = {0.05, 0.05, 0.45, 0.45});

/// Uniform over every task kind; the curriculum-off ablation.
TaskKind sample_uniform_task(Rng& rng);

}  // namespace fm::curriculum
