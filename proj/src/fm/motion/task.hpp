// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fm/motion/motion.hpp"
#include "fm/motion/text.hpp"

namespace fm {

enum class TaskKind {
  Unconditional,
  MaskedReconstruction,
  Reconstruction,
  TrajectoryGeneration,
  TrajectoryGenerationText,
  InBetween,
  InBetweenText,
  StyleGeneration,
  TextGeneration,
  TextEditing,
  TrajectoryEditing,
  TrajectoryEditingText,
  StyleTransfer,
};

inline constexpr int kTaskCount = 13;
const std::array<TaskKind, kTaskCount>& all_tasks();

/// CLI / manifest name, e.g. "text-gen".
const char* task_name(TaskKind k);
/// Throws std::invalid_argument listing the valid names.
TaskKind parse_task(std::string_view name);
std::string task_names_joined();

/// Instruction sentence fed to the instruction embedder.
const char* instruction_text(TaskKind k);

enum class Need { Forbidden, Required };

struct TaskRequirements {
  Need source, text, trajectory, style;
};
TaskRequirements requirements(TaskKind k);

bool is_editing(TaskKind k);  // source motion present, a condition edits it
bool uses_trajectory(TaskKind k);

enum class StyleLabel { AmplitudeScale, TempoScale, Lean, Limp };
inline constexpr int kStyleCount = 4;
const char* style_name(StyleLabel s);
StyleLabel parse_style(std::string_view name);

struct StyleCode {
  StyleLabel label = StyleLabel::AmplitudeScale;
  float intensity = 0.0f;
  bool operator==(const StyleCode&) const = default;
};

/// Conditions of one instance. `source_keep` holds one entry per source
/// frame (1 = kept); empty means every frame is kept.
struct Conditions {
  std::shared_ptr<const MotionTensor> source;
  std::vector<uint8_t> source_keep;
  std::optional<TrajectoryHint> trajectory;
  std::optional<TextPrompt> text;
  std::optional<StyleCode> style;
};

struct TaskSample {
  TaskKind kind = TaskKind::Unconditional;
  Conditions cond;
  std::shared_ptr<const MotionTensor> target;
  int clip = -1;
  std::string family;
};

/// Throws LegalityError when present/absent conditions do not match the
/// task's row, and MotionError when shapes disagree with the target frames.
void check_legality(TaskKind k, const Conditions& c);
void check_legality(TaskKind k, const Conditions& c, int target_frames, const FeatureLayout& layout);

}  // namespace fm
