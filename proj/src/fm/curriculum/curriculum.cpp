// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/curriculum/curriculum.hpp"

#include <algorithm>
#include <cmath>

#include "fm/util/errors.hpp"

namespace fm::curriculum {

const char* stage_name(Stage s) { return s == Stage::Pretrain ? "pretrain" : "finetune"; }

const char* recipe_name(Recipe r) {
  switch (r) {
    case Recipe::MaskedReconstruction: return "masked-reconstruction";
    case Recipe::TrajectoryGeneration: return "traj-gen";
    case Recipe::InBetween: return "inbetween";
  }
  return "?";
}

PretrainDraw pretrain_task_sampler(Rng& rng) {
  PretrainDraw d;
  d.recipe = static_cast<Recipe>(rng.index(3));
  if (d.recipe == Recipe::MaskedReconstruction) d.mask_ratio = rng.uniform();
  return d;
}

namespace {

TaskSample skeleton(TaskKind k, const Clip& clip) {
  TaskSample s;
  s.kind = k;
  s.clip = clip.index;
  s.family = family_name(clip.params.family);
  s.target = clip.base;
  return s;
}

TrajectoryHint joint_hint(const MotionTensor& m, Rng& rng) {
  auto joints = sample_joint_subset(m.layout.joints, rng);
  return extract_trajectory(m, joints, all_frames(m.frames));
}

TrajectoryHint keyframe_hint(const MotionTensor& m, Rng& rng) {
  auto frames = sample_keyframes(m.frames, rng);
  return extract_trajectory(m, all_joints(m.layout), frames);
}

}  // namespace

TaskSample make_pretrain_instance(const PretrainDraw& draw, const Clip& clip, Rng& rng) {
  const auto& base = *clip.base;
  switch (draw.recipe) {
    case Recipe::MaskedReconstruction: {
      const int masked = masked_frame_count(draw.mask_ratio, base.frames);
      if (masked == base.frames) return skeleton(TaskKind::Unconditional, clip);
      TaskSample s = skeleton(masked == 0 ? TaskKind::Reconstruction : TaskKind::MaskedReconstruction, clip);
      s.cond.source = clip.base;
      if (masked > 0) s.cond.source_keep = mask_frames(base, draw.mask_ratio, rng).keep;
      return s;
    }
    case Recipe::TrajectoryGeneration: {
      TaskSample s = skeleton(TaskKind::TrajectoryGeneration, clip);
      s.cond.trajectory = joint_hint(base, rng);
      return s;
    }
    case Recipe::InBetween: {
      TaskSample s = skeleton(TaskKind::InBetween, clip);
      s.cond.trajectory = keyframe_hint(base, rng);
      return s;
    }
  }
  throw std::logic_error("unknown pre-training recipe");
}

TaskSample make_instance(TaskKind k, const Clip& clip, Rng& rng) {
  TaskSample s = skeleton(k, clip);
  const auto& base = *clip.base;
  auto& c = s.cond;
  switch (k) {
    case TaskKind::Unconditional:
      break;
    case TaskKind::MaskedReconstruction: {
      c.source = clip.base;
      const double ratio = rng.uniform(1.0 / base.frames, 1.0 - 1.0 / base.frames);
      c.source_keep = mask_frames(base, ratio, rng).keep;
      break;
    }
    case TaskKind::Reconstruction:
      c.source = clip.base;
      break;
    case TaskKind::TrajectoryGenerationText:
      c.text = clip.text;
      [[fallthrough]];
    case TaskKind::TrajectoryGeneration:
      c.trajectory = joint_hint(base, rng);
      break;
    case TaskKind::InBetweenText:
      c.text = clip.text;
      [[fallthrough]];
    case TaskKind::InBetween:
      c.trajectory = keyframe_hint(base, rng);
      break;
    case TaskKind::TextGeneration:
      c.text = clip.text;
      break;
    case TaskKind::StyleGeneration:
    case TaskKind::StyleTransfer: {
      const StyleCode style = sample_style(rng);
      c.style = style;
      s.target = std::make_shared<const MotionTensor>(apply_style(base, style));
      if (k == TaskKind::StyleTransfer) c.source = clip.base;
      break;
    }
    case TaskKind::TextEditing:
    case TaskKind::TrajectoryEditing:
    case TaskKind::TrajectoryEditingText: {
      EditPair pair = make_edit_pair(base, sample_edit(rng));
      auto target = std::make_shared<const MotionTensor>(std::move(pair.target));
      c.source = clip.base;
      if (k != TaskKind::TrajectoryEditing) c.text = pair.text;
      if (k != TaskKind::TextEditing) c.trajectory = joint_hint(*target, rng);
      s.target = target;
      break;
    }
  }
  return s;
}

const std::vector<std::vector<TaskKind>>& finetune_order() {
  static const std::vector<std::vector<TaskKind>> order = {
      {TaskKind::TextGeneration},
      {TaskKind::StyleGeneration},
      {TaskKind::TrajectoryEditing},
      {TaskKind::TextEditing},
      {TaskKind::StyleTransfer},
      {TaskKind::InBetweenText, TaskKind::TrajectoryGenerationText},
      {TaskKind::TrajectoryEditingText},
  };
  return order;
}

int CurriculumConfig::pretrain_epochs() const { return static_cast<int>(std::lround(reference_pretrain_epochs * epoch_scale)); }
int CurriculumConfig::window() const { return std::max(1, static_cast<int>(std::lround(reference_window * epoch_scale))); }
int CurriculumConfig::finetune_epochs() const {
  const int tail = finetune_tail_epochs < 0 ? window() : finetune_tail_epochs;
  return window() * static_cast<int>(finetune_order().size() - 1) + tail;
}

void CurriculumConfig::validate() const {
  if (!(epoch_scale > 0.0) || !std::isfinite(epoch_scale)) throw ConfigError("curriculum.epoch_scale must be positive");
  if (reference_pretrain_epochs < 0 || reference_window < 1) throw ConfigError("curriculum reference epochs must be non-negative");
  if (!(replay_floor > 0.0)) throw ConfigError("curriculum.replay_floor must be positive");
  double s = 0.0;
  for (double m : mixture) {
    if (m < 0.0) throw ConfigError("curriculum.mixture entries must be non-negative");
    s += m;
  }
  if (std::abs(s - 1.0) > 1e-9) throw ConfigError("curriculum.mixture must sum to 1");
}

std::vector<ScheduleEntry> build_schedule(int window) {
  if (window < 1) throw std::invalid_argument("schedule window must be positive");
  std::vector<ScheduleEntry> out;
  int i = 0;
  for (const auto& tasks : finetune_order()) out.push_back({tasks, window * i++});
  return out;
}

std::vector<TaskKind> finetune_schedule(int epoch, int window) {
  std::vector<TaskKind> out;
  for (const auto& e : build_schedule(window))
    if (e.introduced <= epoch) out.insert(out.end(), e.tasks.begin(), e.tasks.end());
  return out;
}

std::map<TaskKind, double> replay_probabilities(const std::vector<TaskKind>& previous, const FidHistory& history, double floor) {
  std::map<TaskKind, double> w;
  if (previous.empty()) return w;
  bool complete = true;
  for (TaskKind k : previous) {
    auto it = history.find(k);
    if (it == history.end() || it->second.size() < 2) complete = false;
  }
  double total = 0.0;
  for (TaskKind k : previous) {
    double v = 1.0;
    if (complete) {
      const auto& h = history.at(k);
      const double prev = h[h.size() - 2], now = h.back();
      const double change = prev > 0.0 ? (now - prev) / prev : floor;
      v = std::max(floor, std::isfinite(change) ? change : floor);
    }
    w[k] = v;
    total += v;
  }
  for (auto& [k, v] : w) v /= total;
  return w;
}

std::vector<TaskKind> CurriculumState::newest() const {
  const ScheduleEntry* last = nullptr;
  for (const auto& e : schedule)
    if (e.introduced <= epoch) last = &e;
  return last ? last->tasks : std::vector<TaskKind>{};
}

std::vector<TaskKind> CurriculumState::previous() const {
  std::vector<TaskKind> out;
  const ScheduleEntry* last = nullptr;
  for (const auto& e : schedule)
    if (e.introduced <= epoch) last = &e;
  for (const auto& e : schedule) {
    if (&e == last || e.introduced > epoch) break;
    out.insert(out.end(), e.tasks.begin(), e.tasks.end());
  }
  return out;
}

std::vector<TaskKind> CurriculumState::active() const {
  std::vector<TaskKind> out;
  for (const auto& e : schedule)
    if (e.introduced <= epoch) out.insert(out.end(), e.tasks.begin(), e.tasks.end());
  return out;
}

void CurriculumState::record(const EvalRecord& r) {
  if (!(r.fid >= 0.0)) throw NumericError(std::string("FID for '") + task_name(r.task) + "' must be non-negative");
  auto& h = history[r.task];
  h.push_back(r.fid);
  if (h.size() > 2) h.erase(h.begin());
}

void CurriculumState::refresh_replay(double floor) { replay = replay_probabilities(previous(), history, floor); }

namespace {

TaskKind draw_weighted(const std::map<TaskKind, double>& w, Rng& rng) {
  double u = rng.uniform(), acc = 0.0;
  for (const auto& [k, p] : w) {
    acc += p;
    if (u < acc) return k;
  }
  return w.rbegin()->first;
}

}  // namespace

TaskKind sample_training_task(const CurriculumState& state, Rng& rng, const std::array<double, 4>& mixture) {
  const auto fresh = state.newest();
  if (fresh.empty()) throw std::logic_error("sample_training_task: no task has been introduced");
  const auto prev = state.previous();
  const double u = rng.uniform();
  if (u < mixture[0]) return TaskKind::Unconditional;
  if (u < mixture[0] + mixture[1]) return TaskKind::Reconstruction;
  if (!prev.empty() && u < mixture[0] + mixture[1] + mixture[2]) {
    auto w = state.replay;
    if (w.empty()) w = replay_probabilities(prev, {}, 1.0);
    return draw_weighted(w, rng);
  }
  return fresh[static_cast<size_t>(rng.index(static_cast<int64_t>(fresh.size())))];
}

TaskKind sample_uniform_task(Rng& rng) { return all_tasks()[static_cast<size_t>(rng.index(kTaskCount))]; }

}  // namespace fm::curriculum
