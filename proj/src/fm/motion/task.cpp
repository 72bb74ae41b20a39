// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/motion/task.hpp"

#include <stdexcept>

#include "fm/util/errors.hpp"

namespace fm {

namespace {

struct TaskRow {
  TaskKind kind;
  const char* name;
  const char* instruction;
  TaskRequirements needs;
};

constexpr Need F = Need::Forbidden;
constexpr Need R = Need::Required;

// needs: source, text, trajectory, style
const TaskRow kRows[kTaskCount] = {
    {TaskKind::Unconditional, "unconditional", "reconstruct given masked source motion.", {F, F, F, F}},
    {TaskKind::MaskedReconstruction, "masked-reconstruction", "reconstruct given masked source motion.", {R, F, F, F}},
    {TaskKind::Reconstruction, "reconstruction", "reconstruct given masked source motion.", {R, F, F, F}},
    {TaskKind::TrajectoryGeneration, "traj-gen", "generate motion by given trajectory.", {F, F, R, F}},
    {TaskKind::TrajectoryGenerationText, "traj-gen-text", "generate motion by given text and trajectory.", {F, R, R, F}},
    {TaskKind::InBetween, "inbetween", "generate motion by given key frames.", {F, F, R, F}},
    {TaskKind::InBetweenText, "inbetween-text", "generate motion by given text and key frames.", {F, R, R, F}},
    {TaskKind::StyleGeneration, "style-gen", "generate motion by given style.", {F, F, F, R}},
    {TaskKind::TextGeneration, "text-gen", "generate motion by given text.", {F, R, F, F}},
    {TaskKind::TextEditing, "text-edit", "edit source motion by given text.", {R, R, F, F}},
    {TaskKind::TrajectoryEditing, "traj-edit", "edit source motion by given trajectory.", {R, F, R, F}},
    {TaskKind::TrajectoryEditingText, "traj-edit-text", "edit source motion by given text and trajectory.", {R, R, R, F}},
    {TaskKind::StyleTransfer, "style-transfer", "generate motion by the given style and content.", {R, F, F, R}},
};

const TaskRow& row(TaskKind k) { return kRows[static_cast<int>(k)]; }

const char* const kStyleNames[kStyleCount] = {"amplitude-scale", "tempo-scale", "lean", "limp"};

}  // namespace

const std::array<TaskKind, kTaskCount>& all_tasks() {
  static const std::array<TaskKind, kTaskCount> tasks = [] {
    std::array<TaskKind, kTaskCount> t{};
    for (int i = 0; i < kTaskCount; ++i) t[static_cast<size_t>(i)] = static_cast<TaskKind>(i);
    return t;
  }();
  return tasks;
}

const char* task_name(TaskKind k) { return row(k).name; }
const char* instruction_text(TaskKind k) { return row(k).instruction; }
TaskRequirements requirements(TaskKind k) { return row(k).needs; }

std::string task_names_joined() {
  std::string s;
  for (const auto& r : kRows) {
    if (!s.empty()) s += ", ";
    s += r.name;
  }
  return s;
}

TaskKind parse_task(std::string_view name) {
  for (const auto& r : kRows)
    if (name == r.name) return r.kind;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'; valid tasks: " + task_names_joined());
}

bool is_editing(TaskKind k) {
  switch (k) {
    case TaskKind::TextEditing:
    case TaskKind::TrajectoryEditing:
    case TaskKind::TrajectoryEditingText:
    case TaskKind::StyleTransfer:
      return true;
    default:
      return false;
  }
}

bool uses_trajectory(TaskKind k) { return row(k).needs.trajectory == Need::Required; }

const char* style_name(StyleLabel s) { return kStyleNames[static_cast<int>(s)]; }

StyleLabel parse_style(std::string_view name) {
  for (int i = 0; i < kStyleCount; ++i)
    if (name == kStyleNames[i]) return static_cast<StyleLabel>(i);
  throw std::invalid_argument("unknown style '" + std::string(name) + "'; valid styles: amplitude-scale, tempo-scale, lean, limp");
}

void check_legality(TaskKind k, const Conditions& c) {
  const auto needs = requirements(k);
  auto check = [&](Need n, bool present, const char* what) {
    if (n == Need::Required && !present) throw LegalityError(std::string("task '") + task_name(k) + "' requires a " + what + " condition");
    if (n == Need::Forbidden && present) throw LegalityError(std::string("task '") + task_name(k) + "' does not accept a " + what + " condition");
  };
  check(needs.source, c.source != nullptr, "source motion");
  check(needs.text, c.text.has_value(), "text");
  check(needs.trajectory, c.trajectory.has_value(), "trajectory");
  check(needs.style, c.style.has_value(), "style");
  if (!c.source && !c.source_keep.empty()) throw LegalityError(std::string("task '") + task_name(k) + "' has a keep-mask without a source motion");
}

void check_legality(TaskKind k, const Conditions& c, int target_frames, const FeatureLayout& layout) {
  check_legality(k, c);
  if (c.source) {
    if (!(c.source->layout == layout)) throw MotionError("source motion layout '" + c.source->layout.name + "' differs from model layout '" + layout.name + "'");
    if (!c.source_keep.empty() && static_cast<int>(c.source_keep.size()) != c.source->frames)
      throw MotionError("source keep-mask has " + std::to_string(c.source_keep.size()) + " entries for " + std::to_string(c.source->frames) + " frames");
  }
  if (c.trajectory) {
    c.trajectory->validate();
    if (c.trajectory->frames != target_frames)
      throw MotionError("trajectory hint has " + std::to_string(c.trajectory->frames) + " frames, target has " + std::to_string(target_frames));
    if (c.trajectory->joints != layout.joints)
      throw MotionError("trajectory hint has " + std::to_string(c.trajectory->joints) + " joints, layout has " + std::to_string(layout.joints));
  }
}

}  // namespace fm
