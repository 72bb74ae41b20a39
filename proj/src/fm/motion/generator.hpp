// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "fm/motion/task.hpp"

namespace fm {

enum class Family { WalkLine, WalkCircle, Jump, ArmWave };
inline constexpr int kFamilyCount = 4;
const char* family_name(Family f);
Family parse_family(std::string_view name);

/// Parameters of one procedural clip; the clip is a pure function of them.
struct ClipParams {
  Family family = Family::WalkLine;
  int frames = 48;
  double phase = 0.0;       // gait / wave phase in radians
  double heading = 0.0;     // radians, walking direction in the xz plane
  double origin_x = 0.0, origin_z = 0.0;
  double speed = 1.0;       // walk speed (m/s) or wave frequency (Hz)
  double radius = 1.5;      // walk-circle
  int turn = 1;             // walk-circle: +1 left, -1 right
  int jumps = 1;            // jump count
  int side = 1;             // arm-wave: +1 left hand, -1 right hand
};

ClipParams sample_clip_params(Family f, int frames, Rng& rng);
MotionTensor render_clip(const ClipParams& p, const FeatureLayout& layout);
TextPrompt describe_clip(const ClipParams& p);

enum class EditOp { Mirror, Speed, Amplitude, RaiseArm };
inline constexpr int kEditCount = 4;
const char* edit_name(EditOp e);

struct EditSpec {
  EditOp op = EditOp::Mirror;
  double factor = 1.0;  // speed / amplitude multiplier, raise-arm offset
  int side = 1;         // raise-arm: +1 left hand, -1 right hand
};

// Closed-form transforms on toy-layout motions. Velocities are recomputed
// from the transformed positions.
MotionTensor mirror_motion(const MotionTensor& m);
/// Resamples positions at times i*k; N_out = floor((N-1)/k) + 1.
MotionTensor speed_motion(const MotionTensor& m, double k);
/// Scales non-pelvis joints' pelvis-relative offsets about their temporal mean.
MotionTensor amplitude_motion(const MotionTensor& m, double k);
MotionTensor raise_arm_motion(const MotionTensor& m, int side, double offset);

MotionTensor apply_edit(const MotionTensor& m, const EditSpec& e);
TextPrompt describe_edit(const EditSpec& e);
EditSpec sample_edit(Rng& rng);

struct EditPair {
  MotionTensor source;
  MotionTensor target;
  EditSpec edit;
  TextPrompt text;
};
/// Throws MotionError when the edit produces non-finite values.
EditPair make_edit_pair(const MotionTensor& source, const EditSpec& e);

MotionTensor apply_style(const MotionTensor& m, const StyleCode& s);
StyleCode sample_style(Rng& rng);

struct DataConfig {
  uint64_t seed = 7;
  std::map<std::string, int> family_counts = {{"walk-line", 40}, {"walk-circle", 40}, {"jump", 40}, {"arm-wave", 40}};
  int min_frames = 32;
  int max_frames = 64;
  double heldout_fraction = 0.2;
};

struct Clip {
  int index = 0;
  ClipParams params;
  bool heldout = false;
  std::shared_ptr<const MotionTensor> base;
  std::shared_ptr<const MotionTensor> edited;
  std::shared_ptr<const MotionTensor> styled;
  TextPrompt text;
  EditSpec edit;
  TextPrompt edit_text;
  StyleCode style;
  std::vector<uint8_t> keep;               // masked-reconstruction keep-mask
  std::vector<int> traj_joints;            // trajectory tasks, all frames
  std::vector<int> keyframes;              // in-between tasks, all joints
  std::vector<int> edit_joints;            // trajectory editing, from the edited motion
};

struct Dataset {
  FeatureLayout layout;
  DataConfig config;
  std::vector<Clip> clips;
  std::vector<TaskSample> samples;  // kTaskCount per clip, clip-major

  std::vector<const TaskSample*> split(bool heldout) const;
  std::vector<const TaskSample*> of_task(TaskKind k, bool heldout) const;
};

/// Builds the 13 task samples of a clip from its stored motions and choices.
std::vector<TaskSample> clip_samples(const Clip& c);

/// Deterministic in (config, seed). Families with count 0 are absent.
Dataset generate_toy_dataset(const DataConfig& cfg);

/// Pelvis / hand / foot joint subsets used for trajectory hints.
std::vector<int> sample_joint_subset(int joints, Rng& rng);
std::vector<int> sample_keyframes(int frames, Rng& rng);

}  // namespace fm
