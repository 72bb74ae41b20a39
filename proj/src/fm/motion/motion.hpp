// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fm/motion/layout.hpp"
#include "fm/util/rng.hpp"

namespace fm {

/// Thrown when a motion or hint violates its invariants.
class MotionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// N frames x D features in layout order, row-major by frame.
struct MotionTensor {
  FeatureLayout layout;
  int frames = 0;
  std::vector<float> values;

  MotionTensor() = default;
  MotionTensor(FeatureLayout l, int n);
  MotionTensor(FeatureLayout l, int n, std::vector<float> v);

  int features() const { return layout.features; }
  float& at(int frame, int feature) { return values[static_cast<size_t>(frame * layout.features + feature)]; }
  float at(int frame, int feature) const { return values[static_cast<size_t>(frame * layout.features + feature)]; }
  std::span<const float> frame(int f) const { return {values.data() + static_cast<size_t>(f * layout.features), static_cast<size_t>(layout.features)}; }

  std::array<float, 3> position(int frame, int joint) const;
  void set_position(int frame, int joint, std::array<float, 3> p);

  /// Throws MotionError unless N >= 1, the payload size matches and all values are finite.
  void validate() const;
  bool all_finite() const;

  bool operator==(const MotionTensor&) const = default;
};

/// Per-frame, per-joint coordinate targets; mask 1 marks a constrained entry.
struct TrajectoryHint {
  int frames = 0;
  int joints = 0;
  std::vector<float> coords;  // frames x joints x 3
  std::vector<uint8_t> mask;  // frames x joints

  TrajectoryHint() = default;
  TrajectoryHint(int n, int j);

  bool constrained(int frame, int joint) const { return mask[static_cast<size_t>(frame * joints + joint)] != 0; }
  std::array<float, 3> coord(int frame, int joint) const;
  int count() const;
  void validate() const;
};

/// Rewrites every velocity channel as fps * forward difference of positions;
/// the final frame repeats the previous velocity.
void recompute_velocities(MotionTensor& m);

/// Copies position channels at every (frame, joint) in frames x joints.
TrajectoryHint extract_trajectory(const MotionTensor& m, std::span<const int> joints, std::span<const int> frames);

std::vector<int> all_frames(int n);
std::vector<int> all_joints(const FeatureLayout& l);

struct MaskedMotion {
  MotionTensor motion;
  std::vector<uint8_t> keep;  // per frame; 1 = kept
};

/// Number of frames masked for a ratio: round(ratio * n), half away from zero.
int masked_frame_count(double ratio, int n);

/// Zeroes round(ratio * N) frames chosen uniformly without replacement.
MaskedMotion mask_frames(const MotionTensor& m, double ratio, Rng& rng);

/// Applies a fixed keep-mask (zero-filling masked frames).
MotionTensor apply_keep_mask(const MotionTensor& m, std::span<const uint8_t> keep);

/// Linear interpolation of a motion's positions at fractional frame `time`.
std::array<float, 3> interpolate_position(const MotionTensor& m, int joint, double time);

}  // namespace fm
