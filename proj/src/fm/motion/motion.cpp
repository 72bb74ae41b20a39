// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/motion/motion.hpp"

#include <cmath>
#include <string>

namespace fm {

MotionTensor::MotionTensor(FeatureLayout l, int n) : layout(std::move(l)), frames(n) {
  values.assign(static_cast<size_t>(n) * static_cast<size_t>(layout.features), 0.0f);
}

MotionTensor::MotionTensor(FeatureLayout l, int n, std::vector<float> v) : layout(std::move(l)), frames(n), values(std::move(v)) {
  validate();
}

std::array<float, 3> MotionTensor::position(int frame, int joint) const {
  if (!layout.has_position(joint)) throw MotionError("layout '" + layout.name + "' has no position channels for joint " + std::to_string(joint));
  const int o = layout.position_offset[static_cast<size_t>(joint)];
  return {at(frame, o), at(frame, o + 1), at(frame, o + 2)};
}

void MotionTensor::set_position(int frame, int joint, std::array<float, 3> p) {
  if (!layout.has_position(joint)) throw MotionError("layout '" + layout.name + "' has no position channels for joint " + std::to_string(joint));
  const int o = layout.position_offset[static_cast<size_t>(joint)];
  for (int a = 0; a < 3; ++a) at(frame, o + a) = p[static_cast<size_t>(a)];
}

bool MotionTensor::all_finite() const {
  for (float v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

void MotionTensor::validate() const {
  if (frames < 1) throw MotionError("motion must have at least one frame");
  const size_t expected = static_cast<size_t>(frames) * static_cast<size_t>(layout.features);
  if (values.size() != expected)
    throw MotionError("motion payload has " + std::to_string(values.size()) + " values, expected " + std::to_string(expected));
  for (size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw MotionError("non-finite value at frame " + std::to_string(i / static_cast<size_t>(layout.features)) + ", feature " +
                        std::to_string(i % static_cast<size_t>(layout.features)));
}

TrajectoryHint::TrajectoryHint(int n, int j)
    : frames(n), joints(j), coords(static_cast<size_t>(n * j * 3), 0.0f), mask(static_cast<size_t>(n * j), 0) {}

std::array<float, 3> TrajectoryHint::coord(int frame, int joint) const {
  const size_t o = static_cast<size_t>((frame * joints + joint) * 3);
  return {coords[o], coords[o + 1], coords[o + 2]};
}

int TrajectoryHint::count() const {
  int c = 0;
  for (auto m : mask) c += m != 0;
  return c;
}

void TrajectoryHint::validate() const {
  if (coords.size() != static_cast<size_t>(frames * joints * 3) || mask.size() != static_cast<size_t>(frames * joints))
    throw MotionError("trajectory hint: coords/mask sizes do not match (" + std::to_string(frames) + ", " + std::to_string(joints) + ")");
  for (int f = 0; f < frames; ++f)
    for (int j = 0; j < joints; ++j) {
      auto c = coord(f, j);
      if (!constrained(f, j) && (c[0] != 0.0f || c[1] != 0.0f || c[2] != 0.0f))
        throw MotionError("trajectory hint: unconstrained entry (" + std::to_string(f) + ", " + std::to_string(j) + ") is non-zero");
      for (float v : c)
        if (!std::isfinite(v)) throw MotionError("trajectory hint: non-finite coordinate");
    }
}

void recompute_velocities(MotionTensor& m) {
  const auto& l = m.layout;
  const float fps = static_cast<float>(l.fps);
  for (int j = 0; j < l.joints; ++j) {
    if (!l.has_velocity(j) || !l.has_position(j)) continue;
    const int po = l.position_offset[static_cast<size_t>(j)];
    const int vo = l.velocity_offset[static_cast<size_t>(j)];
    for (int f = 0; f < m.frames; ++f) {
      for (int a = 0; a < 3; ++a) {
        float v = 0.0f;
        if (m.frames > 1) {
          const int f0 = f + 1 < m.frames ? f : f - 1;
          v = fps * (m.at(f0 + 1, po + a) - m.at(f0, po + a));
        }
        m.at(f, vo + a) = v;
      }
    }
  }
}

TrajectoryHint extract_trajectory(const MotionTensor& m, std::span<const int> joints, std::span<const int> frames) {
  TrajectoryHint h(m.frames, m.layout.joints);
  for (int j : joints) {
    if (j < 0 || j >= m.layout.joints) throw MotionError("extract_trajectory: joint " + std::to_string(j) + " outside layout");
    if (!m.layout.has_position(j))
      throw MotionError("extract_trajectory: layout '" + m.layout.name + "' has no position channels for joint " + std::to_string(j));
  }
  for (int f : frames)
    if (f < 0 || f >= m.frames) throw MotionError("extract_trajectory: frame " + std::to_string(f) + " outside [0, " + std::to_string(m.frames) + ")");
  for (int f : frames)
    for (int j : joints) {
      auto p = m.position(f, j);
      const size_t o = static_cast<size_t>(f * h.joints + j);
      h.mask[o] = 1;
      for (int a = 0; a < 3; ++a) h.coords[o * 3 + static_cast<size_t>(a)] = p[static_cast<size_t>(a)];
    }
  return h;
}

std::vector<int> all_frames(int n) {
  std::vector<int> f(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) f[static_cast<size_t>(i)] = i;
  return f;
}

std::vector<int> all_joints(const FeatureLayout& l) {
  std::vector<int> j;
  for (int i = 0; i < l.joints; ++i)
    if (l.has_position(i)) j.push_back(i);
  return j;
}

int masked_frame_count(double ratio, int n) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw MotionError("mask ratio must lie in [0, 1], got " + std::to_string(ratio));
  return static_cast<int>(std::lround(ratio * n));
}

MotionTensor apply_keep_mask(const MotionTensor& m, std::span<const uint8_t> keep) {
  if (static_cast<int>(keep.size()) != m.frames) throw MotionError("keep mask length does not match frame count");
  MotionTensor out = m;
  for (int f = 0; f < m.frames; ++f)
    if (!keep[static_cast<size_t>(f)])
      for (int k = 0; k < m.features(); ++k) out.at(f, k) = 0.0f;
  return out;
}

MaskedMotion mask_frames(const MotionTensor& m, double ratio, Rng& rng) {
  const int count = masked_frame_count(ratio, m.frames);
  std::vector<uint8_t> keep(static_cast<size_t>(m.frames), 1);
  for (int f : rng.choose(m.frames, count)) keep[static_cast<size_t>(f)] = 0;
  return {apply_keep_mask(m, keep), std::move(keep)};
}

std::array<float, 3> interpolate_position(const MotionTensor& m, int joint, double time) {
  const double t = std::clamp(time, 0.0, static_cast<double>(m.frames - 1));
  const int f0 = static_cast<int>(std::floor(t));
  const int f1 = std::min(f0 + 1, m.frames - 1);
  const double w = t - f0;
  auto a = m.position(f0, joint);
  auto b = m.position(f1, joint);
  std::array<float, 3> out{};
  for (int i = 0; i < 3; ++i)
    out[static_cast<size_t>(i)] = static_cast<float>((1.0 - w) * a[static_cast<size_t>(i)] + w * b[static_cast<size_t>(i)]);
  return out;
}

}  // namespace fm
