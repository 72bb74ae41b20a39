// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fm {

enum class Channel { PosX, PosY, PosZ, VelX, VelY, VelZ, Other };

/// Maps flat per-frame feature indices to (joint, channel).
///
/// `position_offset[j]` is the first of three consecutive x/y/z position
/// features of joint j, or -1 when the layout stores no coordinates for it.
/// `velocity_offset` works the same way for velocities. All other features
/// are `Channel::Other`.
struct FeatureLayout {
  std::string name;
  int joints = 0;
  int features = 0;
  double fps = 20.0;
  std::vector<int> foot_joints;
  int pelvis_joint = 0;
  int up_axis = 1;
  std::vector<int> position_offset;
  std::vector<int> velocity_offset;

  bool has_position(int joint) const;
  bool has_velocity(int joint) const;
  Channel channel_of(int feature) const;
  /// Joint owning a position/velocity feature, or -1 for Channel::Other.
  int joint_of(int feature) const;

  /// Throws std::invalid_argument when ranges overlap or leave [0, features).
  void validate() const;

  /// Stable identity of the layout, used to match checkpoints with datasets.
  std::string hash() const;

  bool operator==(const FeatureLayout&) const = default;

  /// Global positions of every joint followed by their velocities (D = 6J).
  static FeatureLayout toy(int joints = 5, double fps = 20.0);
  /// 22-joint, 263-feature layout at 20 fps. Only root-relative joint
  /// coordinates (joints 1..21) and local velocities are addressable.
  static FeatureLayout humanml3d();
  /// Resolves a container header; throws when the triple is unknown.
  static FeatureLayout from_header(const std::string& name, int joints, int features, double fps);
};

// Joint indices of the toy skeleton.
namespace toy_joint {
inline constexpr int kPelvis = 0;
inline constexpr int kLeftFoot = 1;
inline constexpr int kRightFoot = 2;
inline constexpr int kLeftHand = 3;
inline constexpr int kRightHand = 4;
}  // namespace toy_joint

}  // namespace fm
