// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/motion/layout.hpp"

#include <cstdio>
#include <stdexcept>

#include "fm/util/rng.hpp"

namespace fm {

bool FeatureLayout::has_position(int joint) const {
  return joint >= 0 && joint < joints && position_offset[static_cast<size_t>(joint)] >= 0;
}

bool FeatureLayout::has_velocity(int joint) const {
  return joint >= 0 && joint < joints && velocity_offset[static_cast<size_t>(joint)] >= 0;
}

Channel FeatureLayout::channel_of(int feature) const {
  for (int j = 0; j < joints; ++j) {
    const int p = position_offset[static_cast<size_t>(j)];
    if (p >= 0 && feature >= p && feature < p + 3) return static_cast<Channel>(feature - p);
    const int v = velocity_offset[static_cast<size_t>(j)];
    if (v >= 0 && feature >= v && feature < v + 3) return static_cast<Channel>(3 + feature - v);
  }
  return Channel::Other;
}

int FeatureLayout::joint_of(int feature) const {
  for (int j = 0; j < joints; ++j) {
    const int p = position_offset[static_cast<size_t>(j)];
    const int v = velocity_offset[static_cast<size_t>(j)];
    if ((p >= 0 && feature >= p && feature < p + 3) || (v >= 0 && feature >= v && feature < v + 3)) return j;
  }
  return -1;
}

void FeatureLayout::validate() const {
  if (joints <= 0 || features <= 0) throw std::invalid_argument("layout '" + name + "': joints and features must be positive");
  if (static_cast<int>(position_offset.size()) != joints || static_cast<int>(velocity_offset.size()) != joints)
    throw std::invalid_argument("layout '" + name + "': offset tables must have one entry per joint");
  if (!(fps > 0)) throw std::invalid_argument("layout '" + name + "': fps must be positive");
  std::vector<int> owner(static_cast<size_t>(features), 0);
  auto claim = [&](int start) {
    if (start < 0) return;
    if (start + 3 > features) throw std::invalid_argument("layout '" + name + "': channel range leaves [0, D)");
    for (int k = start; k < start + 3; ++k) {
      if (owner[static_cast<size_t>(k)]++) throw std::invalid_argument("layout '" + name + "': overlapping channel ranges at feature " + std::to_string(k));
    }
  };
  for (int j = 0; j < joints; ++j) {
    claim(position_offset[static_cast<size_t>(j)]);
    claim(velocity_offset[static_cast<size_t>(j)]);
  }
  for (int f : foot_joints)
    if (f < 0 || f >= joints) throw std::invalid_argument("layout '" + name + "': foot joint out of range");
  if (pelvis_joint < 0 || pelvis_joint >= joints) throw std::invalid_argument("layout '" + name + "': pelvis joint out of range");
  if (up_axis < 0 || up_axis > 2) throw std::invalid_argument("layout '" + name + "': up axis must be 0, 1 or 2");
}

std::string FeatureLayout::hash() const {
  std::string key = name + "|" + std::to_string(joints) + "|" + std::to_string(features) + "|" + std::to_string(fps);
  for (int p : position_offset) key += "," + std::to_string(p);
  for (int v : velocity_offset) key += ";" + std::to_string(v);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(key)));
  return buf;
}

FeatureLayout FeatureLayout::toy(int joints, double fps) {
  FeatureLayout l;
  l.name = "toy";
  l.joints = joints;
  l.features = 6 * joints;
  l.fps = fps;
  l.pelvis_joint = toy_joint::kPelvis;
  l.foot_joints = {toy_joint::kLeftFoot, toy_joint::kRightFoot};
  for (int j = 0; j < joints; ++j) {
    l.position_offset.push_back(3 * j);
    l.velocity_offset.push_back(3 * joints + 3 * j);
  }
  l.validate();
  return l;
}

FeatureLayout FeatureLayout::humanml3d() {
  // root angular velocity (1), root linear velocity xz (2), root height (1),
  // root-relative joint positions (21 x 3), 6D rotations (21 x 6),
  // local velocities (22 x 3), foot contacts (4).
  FeatureLayout l;
  l.name = "humanml3d";
  l.joints = 22;
  l.features = 263;
  l.fps = 20.0;
  l.pelvis_joint = 0;
  l.foot_joints = {7, 10, 8, 11};
  l.position_offset.assign(22, -1);
  l.velocity_offset.assign(22, -1);
  for (int j = 1; j < 22; ++j) l.position_offset[static_cast<size_t>(j)] = 4 + 3 * (j - 1);
  for (int j = 0; j < 22; ++j) l.velocity_offset[static_cast<size_t>(j)] = 193 + 3 * j;
  l.validate();
  return l;
}

FeatureLayout FeatureLayout::from_header(const std::string& name, int joints, int features, double fps) {
  if (name == "humanml3d") {
    FeatureLayout l = humanml3d();
    if (joints != l.joints || features != l.features || fps != l.fps)
      throw std::invalid_argument("humanml3d layout requires J=22, D=263, fps=20; header has J=" + std::to_string(joints) +
                                  ", D=" + std::to_string(features) + ", fps=" + std::to_string(fps));
    return l;
  }
  if (name == "toy") {
    if (joints <= 0 || features != 6 * joints)
      throw std::invalid_argument("toy layout requires D = 6J; header has J=" + std::to_string(joints) + ", D=" + std::to_string(features));
    return toy(joints, fps);
  }
  throw std::invalid_argument("unknown layout '" + name + "'");
}

}  // namespace fm
