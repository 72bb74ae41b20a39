// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/motion/generator.hpp"

#include <cmath>
#include <numbers>

namespace fm {

namespace {

using Vec3 = std::array<double, 3>;
constexpr double kPi = std::numbers::pi;

const char* const kFamilyNames[kFamilyCount] = {"walk-line", "walk-circle", "jump", "arm-wave"};
const char* const kEditNames[kEditCount] = {"mirror", "speed", "amplitude", "raise-arm"};

Vec3 axpy(Vec3 base, double a, Vec3 dir) { return {base[0] + a * dir[0], base[1] + a * dir[1], base[2] + a * dir[2]}; }

struct Pose {
  Vec3 joint[5];
};

// Forward and left unit vectors for a heading angle in the xz plane.
Vec3 forward_of(double h) { return {std::cos(h), 0.0, std::sin(h)}; }
Vec3 left_of(double h) { return {-std::sin(h), 0.0, std::cos(h)}; }

Pose walk_pose(Vec3 pelvis_xz, double heading, double gait) {
  const Vec3 fwd = forward_of(heading), lft = left_of(heading);
  Pose p;
  p.joint[toy_joint::kPelvis] = {pelvis_xz[0], 0.9 + 0.02 * std::cos(2.0 * gait), pelvis_xz[2]};
  Vec3 lf = axpy(axpy(pelvis_xz, 0.1, lft), 0.2 * std::sin(gait), fwd);
  Vec3 rf = axpy(axpy(pelvis_xz, -0.1, lft), -0.2 * std::sin(gait), fwd);
  lf[1] = 0.06 * std::max(0.0, std::cos(gait));
  rf[1] = 0.06 * std::max(0.0, -std::cos(gait));
  Vec3 lh = axpy(axpy(pelvis_xz, 0.22, lft), -0.15 * std::sin(gait), fwd);
  Vec3 rh = axpy(axpy(pelvis_xz, -0.22, lft), 0.15 * std::sin(gait), fwd);
  lh[1] = rh[1] = 0.85;
  p.joint[toy_joint::kLeftFoot] = lf;
  p.joint[toy_joint::kRightFoot] = rf;
  p.joint[toy_joint::kLeftHand] = lh;
  p.joint[toy_joint::kRightHand] = rh;
  return p;
}

Pose clip_pose(const ClipParams& c, double t, double duration) {
  const Vec3 origin{c.origin_x, 0.0, c.origin_z};
  switch (c.family) {
    case Family::WalkLine: {
      const Vec3 pos = axpy(origin, c.speed * t, forward_of(c.heading));
      return walk_pose(pos, c.heading, 2.0 * kPi * 0.9 * c.speed * t + c.phase);
    }
    case Family::WalkCircle: {
      // The circle passes through the origin at t = 0.
      const double a0 = c.heading;
      const Vec3 center = axpy(origin, -c.radius, {std::cos(a0), 0.0, std::sin(a0)});
      const double a = a0 + c.turn * (c.speed / c.radius) * t;
      const Vec3 pos = axpy(center, c.radius, {std::cos(a), 0.0, std::sin(a)});
      return walk_pose(pos, a + c.turn * kPi / 2.0, 2.0 * kPi * 0.9 * c.speed * t + c.phase);
    }
    case Family::Jump: {
      const double s = std::abs(std::sin(kPi * c.jumps * t / duration));
      const Vec3 lft = left_of(c.heading);
      Pose p;
      p.joint[toy_joint::kPelvis] = {origin[0], 0.9 + 0.25 * s, origin[2]};
      p.joint[toy_joint::kLeftFoot] = axpy(origin, 0.1, lft);
      p.joint[toy_joint::kRightFoot] = axpy(origin, -0.1, lft);
      p.joint[toy_joint::kLeftFoot][1] = p.joint[toy_joint::kRightFoot][1] = 0.22 * s;
      p.joint[toy_joint::kLeftHand] = axpy(origin, 0.25, lft);
      p.joint[toy_joint::kRightHand] = axpy(origin, -0.25, lft);
      p.joint[toy_joint::kLeftHand][1] = p.joint[toy_joint::kRightHand][1] = 0.85 + 0.6 * s;
      return p;
    }
    case Family::ArmWave: {
      const Vec3 lft = left_of(c.heading);
      const double w = 2.0 * kPi * c.speed * t + c.phase;
      Pose p;
      p.joint[toy_joint::kPelvis] = {origin[0], 0.9, origin[2]};
      p.joint[toy_joint::kLeftFoot] = axpy(origin, 0.1, lft);
      p.joint[toy_joint::kRightFoot] = axpy(origin, -0.1, lft);
      p.joint[toy_joint::kLeftHand] = axpy(origin, 0.22, lft);
      p.joint[toy_joint::kRightHand] = axpy(origin, -0.22, lft);
      p.joint[toy_joint::kLeftHand][1] = p.joint[toy_joint::kRightHand][1] = 0.85;
      const int hand = c.side > 0 ? toy_joint::kLeftHand : toy_joint::kRightHand;
      Vec3 h = axpy(origin, c.side * (0.3 + 0.12 * std::cos(w)), lft);
      h[1] = 1.45 + 0.15 * std::sin(w);
      p.joint[hand] = h;
      return p;
    }
  }
  return {};
}

std::vector<int> sorted_choice(int n, int k, Rng& rng) { return rng.choose(n, k); }

}  // namespace

const char* family_name(Family f) { return kFamilyNames[static_cast<int>(f)]; }

Family parse_family(std::string_view name) {
  for (int i = 0; i < kFamilyCount; ++i)
    if (name == kFamilyNames[i]) return static_cast<Family>(i);
  throw std::invalid_argument("unknown motion family '" + std::string(name) + "'; valid families: walk-line, walk-circle, jump, arm-wave");
}

const char* edit_name(EditOp e) { return kEditNames[static_cast<int>(e)]; }

ClipParams sample_clip_params(Family f, int frames, Rng& rng) {
  ClipParams p;
  p.family = f;
  p.frames = frames;
  p.phase = rng.uniform(0.0, 2.0 * kPi);
  p.heading = rng.uniform(0.0, 2.0 * kPi);
  p.origin_x = rng.uniform(-1.0, 1.0);
  p.origin_z = rng.uniform(-1.0, 1.0);
  switch (f) {
    case Family::WalkLine:
      p.speed = rng.uniform(0.8, 1.6);
      break;
    case Family::WalkCircle:
      p.speed = rng.uniform(0.8, 1.6);
      p.radius = rng.uniform(1.0, 2.5);
      p.turn = rng.bernoulli(0.5) ? 1 : -1;
      break;
    case Family::Jump:
      p.jumps = 1 + static_cast<int>(rng.index(3));
      break;
    case Family::ArmWave:
      p.speed = rng.uniform(0.8, 2.0);
      p.side = rng.bernoulli(0.5) ? 1 : -1;
      break;
  }
  return p;
}

MotionTensor render_clip(const ClipParams& p, const FeatureLayout& layout) {
  if (layout.joints != 5 || layout.name != "toy") throw MotionError("procedural clips require the 5-joint toy layout");
  if (p.frames < 2) throw MotionError("procedural clips need at least two frames");
  MotionTensor m(layout, p.frames);
  const double duration = (p.frames - 1) / layout.fps;
  for (int f = 0; f < p.frames; ++f) {
    const Pose pose = clip_pose(p, f / layout.fps, duration);
    for (int j = 0; j < 5; ++j)
      m.set_position(f, j, {static_cast<float>(pose.joint[j][0]), static_cast<float>(pose.joint[j][1]), static_cast<float>(pose.joint[j][2])});
  }
  recompute_velocities(m);
  return m;
}

TextPrompt describe_clip(const ClipParams& p) {
  switch (p.family) {
    case Family::WalkLine:
      return TextPrompt::render(TextTemplate::WalkLine, {p.speed < 1.2 ? "slowly" : "quickly"});
    case Family::WalkCircle:
      return TextPrompt::render(TextTemplate::WalkCircle, {p.radius < 1.75 ? "small" : "large", p.turn > 0 ? "left" : "right"});
    case Family::Jump:
      return TextPrompt::render(TextTemplate::Jump, {p.jumps == 1 ? "once" : p.jumps == 2 ? "twice" : "three times"});
    case Family::ArmWave:
      return TextPrompt::render(TextTemplate::ArmWave, {p.side > 0 ? "left" : "right", p.speed < 1.4 ? "slowly" : "quickly"});
  }
  return {};
}

MotionTensor mirror_motion(const MotionTensor& m) {
  static constexpr int kSwap[5] = {0, 2, 1, 4, 3};
  MotionTensor out(m.layout, m.frames);
  for (int f = 0; f < m.frames; ++f)
    for (int j = 0; j < m.layout.joints; ++j) {
      auto p = m.position(f, j);
      p[0] = -p[0];
      out.set_position(f, j < 5 ? kSwap[j] : j, p);
    }
  recompute_velocities(out);
  return out;
}

MotionTensor speed_motion(const MotionTensor& m, double k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw MotionError("speed factor must be positive and finite");
  const int n = static_cast<int>(std::floor((m.frames - 1) / k + 1e-9)) + 1;
  MotionTensor out(m.layout, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m.layout.joints; ++j) out.set_position(i, j, interpolate_position(m, j, i * k));
  recompute_velocities(out);
  return out;
}

MotionTensor amplitude_motion(const MotionTensor& m, double k) {
  const int pelvis = m.layout.pelvis_joint;
  MotionTensor out = m;
  for (int j = 0; j < m.layout.joints; ++j) {
    if (j == pelvis) continue;
    double mean[3] = {0, 0, 0};
    for (int f = 0; f < m.frames; ++f) {
      auto p = m.position(f, j), q = m.position(f, pelvis);
      for (int a = 0; a < 3; ++a) mean[a] += p[static_cast<size_t>(a)] - q[static_cast<size_t>(a)];
    }
    for (double& v : mean) v /= m.frames;
    for (int f = 0; f < m.frames; ++f) {
      auto p = m.position(f, j), q = m.position(f, pelvis);
      std::array<float, 3> r{};
      for (int a = 0; a < 3; ++a) {
        const double off = p[static_cast<size_t>(a)] - q[static_cast<size_t>(a)];
        r[static_cast<size_t>(a)] = static_cast<float>(q[static_cast<size_t>(a)] + mean[a] + k * (off - mean[a]));
      }
      out.set_position(f, j, r);
    }
  }
  recompute_velocities(out);
  return out;
}

MotionTensor raise_arm_motion(const MotionTensor& m, int side, double offset) {
  const int hand = side > 0 ? toy_joint::kLeftHand : toy_joint::kRightHand;
  MotionTensor out = m;
  for (int f = 0; f < m.frames; ++f) {
    auto p = m.position(f, hand);
    p[static_cast<size_t>(m.layout.up_axis)] += static_cast<float>(offset);
    out.set_position(f, hand, p);
  }
  recompute_velocities(out);
  return out;
}

MotionTensor apply_edit(const MotionTensor& m, const EditSpec& e) {
  switch (e.op) {
    case EditOp::Mirror:
      return mirror_motion(m);
    case EditOp::Speed:
      return speed_motion(m, e.factor);
    case EditOp::Amplitude:
      return amplitude_motion(m, e.factor);
    case EditOp::RaiseArm:
      return raise_arm_motion(m, e.side, e.factor);
  }
  return m;
}

TextPrompt describe_edit(const EditSpec& e) {
  switch (e.op) {
    case EditOp::Mirror:
      return TextPrompt::render(TextTemplate::EditMirror, {});
    case EditOp::Speed:
      return TextPrompt::render(TextTemplate::EditSpeed, {e.factor > 1.0 ? "faster" : "slower"});
    case EditOp::Amplitude:
      return TextPrompt::render(TextTemplate::EditAmplitude, {e.factor > 1.0 ? "bigger" : "smaller"});
    case EditOp::RaiseArm:
      return TextPrompt::render(TextTemplate::EditRaiseArm, {e.side > 0 ? "left" : "right"});
  }
  return {};
}

EditSpec sample_edit(Rng& rng) {
  EditSpec e;
  e.op = static_cast<EditOp>(rng.index(kEditCount));
  switch (e.op) {
    case EditOp::Mirror:
      break;
    case EditOp::Speed:
      e.factor = rng.bernoulli(0.5) ? 1.5 : 0.8;
      break;
    case EditOp::Amplitude:
      e.factor = rng.bernoulli(0.5) ? 1.3 : 0.7;
      break;
    case EditOp::RaiseArm:
      e.factor = 0.25;
      e.side = rng.bernoulli(0.5) ? 1 : -1;
      break;
  }
  return e;
}

EditPair make_edit_pair(const MotionTensor& source, const EditSpec& e) {
  MotionTensor target = apply_edit(source, e);
  if (!target.all_finite()) throw MotionError(std::string("edit '") + edit_name(e.op) + "' produced non-finite values");
  return {source, std::move(target), e, describe_edit(e)};
}

MotionTensor apply_style(const MotionTensor& m, const StyleCode& s) {
  const double i = s.intensity;
  switch (s.label) {
    case StyleLabel::AmplitudeScale:
      return amplitude_motion(m, 1.0 + 0.5 * i);
    case StyleLabel::TempoScale:
      return speed_motion(m, 1.0 + 0.5 * i);
    case StyleLabel::Lean: {
      MotionTensor out = m;
      for (int f = 0; f < m.frames; ++f)
        for (int j = 0; j < m.layout.joints; ++j) {
          auto p = m.position(f, j);
          p[2] += static_cast<float>(0.25 * i * p[1] / 1.5);
          out.set_position(f, j, p);
        }
      recompute_velocities(out);
      return out;
    }
    case StyleLabel::Limp: {
      MotionTensor out = m;
      for (int f = 0; f < m.frames; ++f) {
        auto foot = m.position(f, toy_joint::kLeftFoot);
        foot[1] = static_cast<float>(foot[1] * (1.0 - 0.8 * i));
        out.set_position(f, toy_joint::kLeftFoot, foot);
        auto pelvis = m.position(f, toy_joint::kPelvis);
        pelvis[1] -= static_cast<float>(0.04 * i);
        out.set_position(f, toy_joint::kPelvis, pelvis);
      }
      recompute_velocities(out);
      return out;
    }
  }
  return m;
}

StyleCode sample_style(Rng& rng) {
  StyleCode s;
  s.label = static_cast<StyleLabel>(rng.index(kStyleCount));
  s.intensity = static_cast<float>(rng.uniform(0.3, 1.0));
  return s;
}

std::vector<int> sample_joint_subset(int joints, Rng& rng) {
  const int k = 1 + static_cast<int>(rng.index(joints));
  return sorted_choice(joints, k, rng);
}

std::vector<int> sample_keyframes(int frames, Rng& rng) {
  const int hi = std::max(2, frames / 8);
  const int k = 2 + static_cast<int>(rng.index(hi - 1));
  return sorted_choice(frames, std::min(k, frames), rng);
}

std::vector<TaskSample> clip_samples(const Clip& c) {
  std::vector<TaskSample> out;
  out.reserve(kTaskCount);
  const auto& base = c.base;
  const auto family = std::string(family_name(c.params.family));
  for (TaskKind k : all_tasks()) {
    TaskSample s;
    s.kind = k;
    s.clip = c.index;
    s.family = family;
    s.target = base;
    auto& cond = s.cond;
    switch (k) {
      case TaskKind::Unconditional:
        break;
      case TaskKind::MaskedReconstruction:
        cond.source = base;
        cond.source_keep = c.keep;
        break;
      case TaskKind::Reconstruction:
        cond.source = base;
        break;
      case TaskKind::TrajectoryGenerationText:
        cond.text = c.text;
        [[fallthrough]];
      case TaskKind::TrajectoryGeneration:
        cond.trajectory = extract_trajectory(*base, c.traj_joints, all_frames(base->frames));
        break;
      case TaskKind::InBetweenText:
        cond.text = c.text;
        [[fallthrough]];
      case TaskKind::InBetween:
        cond.trajectory = extract_trajectory(*base, all_joints(base->layout), c.keyframes);
        break;
      case TaskKind::StyleGeneration:
        cond.style = c.style;
        s.target = c.styled;
        break;
      case TaskKind::TextGeneration:
        cond.text = c.text;
        break;
      case TaskKind::TextEditing:
        cond.source = base;
        cond.text = c.edit_text;
        s.target = c.edited;
        break;
      case TaskKind::TrajectoryEditingText:
        cond.text = c.edit_text;
        [[fallthrough]];
      case TaskKind::TrajectoryEditing:
        cond.source = base;
        cond.trajectory = extract_trajectory(*c.edited, c.edit_joints, all_frames(c.edited->frames));
        s.target = c.edited;
        break;
      case TaskKind::StyleTransfer:
        cond.source = base;
        cond.style = c.style;
        s.target = c.styled;
        break;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<const TaskSample*> Dataset::split(bool heldout) const {
  std::vector<const TaskSample*> out;
  for (const auto& s : samples)
    if (clips[static_cast<size_t>(s.clip)].heldout == heldout) out.push_back(&s);
  return out;
}

std::vector<const TaskSample*> Dataset::of_task(TaskKind k, bool heldout) const {
  std::vector<const TaskSample*> out;
  for (const auto& s : samples)
    if (s.kind == k && clips[static_cast<size_t>(s.clip)].heldout == heldout) out.push_back(&s);
  return out;
}

Dataset generate_toy_dataset(const DataConfig& cfg) {
  if (cfg.min_frames < 2 || cfg.max_frames < cfg.min_frames) throw std::invalid_argument("frame range must satisfy 2 <= min_frames <= max_frames");
  if (!(cfg.heldout_fraction >= 0.0 && cfg.heldout_fraction < 1.0)) throw std::invalid_argument("heldout_fraction must lie in [0, 1)");
  for (const auto& [name, count] : cfg.family_counts) {
    parse_family(name);
    if (count < 0) throw std::invalid_argument("family '" + name + "' has a negative sample count");
  }
  Dataset ds;
  ds.layout = FeatureLayout::toy();
  ds.config = cfg;
  int index = 0;
  for (int fi = 0; fi < kFamilyCount; ++fi) {
    const Family fam = static_cast<Family>(fi);
    auto it = cfg.family_counts.find(family_name(fam));
    const int count = it == cfg.family_counts.end() ? 0 : it->second;
    for (int n = 0; n < count; ++n, ++index) {
      Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(index), static_cast<uint64_t>(fi)));
      Clip c;
      c.index = index;
      c.heldout = std::floor((index + 1) * cfg.heldout_fraction) > std::floor(index * cfg.heldout_fraction);
      const int frames = cfg.min_frames + static_cast<int>(rng.index(cfg.max_frames - cfg.min_frames + 1));
      c.params = sample_clip_params(fam, frames, rng);
      auto base = std::make_shared<MotionTensor>(render_clip(c.params, ds.layout));
      c.text = describe_clip(c.params);
      c.edit = sample_edit(rng);
      auto pair = make_edit_pair(*base, c.edit);
      c.edit_text = pair.text;
      c.edited = std::make_shared<MotionTensor>(std::move(pair.target));
      c.style = sample_style(rng);
      c.styled = std::make_shared<MotionTensor>(apply_style(*base, c.style));
      c.keep = mask_frames(*base, rng.uniform(0.1, 0.9), rng).keep;
      c.traj_joints = sample_joint_subset(ds.layout.joints, rng);
      c.keyframes = sample_keyframes(frames, rng);
      c.edit_joints = sample_joint_subset(ds.layout.joints, rng);
      c.base = std::move(base);
      ds.clips.push_back(std::move(c));
    }
  }
  for (const auto& c : ds.clips)
    for (auto& s : clip_samples(c)) ds.samples.push_back(std::move(s));
  return ds;
}

}  // namespace fm
