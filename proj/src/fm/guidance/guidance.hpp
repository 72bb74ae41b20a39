// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fm/flow/rectified_flow.hpp"
#include "fm/model/mft.hpp"

namespace fm::guidance {

struct GuidanceSpec {
  TaskKind task = TaskKind::TextGeneration;
  std::optional<double> lambda_s;  // present only for tasks with a source motion
  double lambda_c = 1.0;
};

/// Default strengths per task; throws std::invalid_argument for tasks
/// without a guidance row (unconditional generation and the reconstructions).
GuidanceSpec guidance_strengths(TaskKind k);
bool has_guidance(TaskKind k);

/// Config overrides replace the defaults task by task.
using GuidanceOverrides = std::map<TaskKind, GuidanceSpec>;
GuidanceSpec resolve_strengths(TaskKind k, const GuidanceOverrides& overrides);

/// Velocity of any task/condition pair; the model or a mock.
template <typename T>
using ConditionalVelocity = std::function<std::vector<T>(TaskKind, const Conditions&, std::span<const T> x, int frames, double t)>;

template <typename T>
ConditionalVelocity<T> model_velocity(const model::Mft<T>& m) {
  return [&m](TaskKind k, const Conditions& c, std::span<const T> x, int frames, double t) { return m.velocity(k, c, x, frames, t); };
}

/// v(null) + lambda_c [v(C) - v(null)]; v(null) is the unconditional task.
template <typename T>
std::vector<T> guided_velocity_gen(const ConditionalVelocity<T>& v, TaskKind k, const Conditions& c, std::span<const T> x, int frames, double t,
                                   double lambda_c);

/// v(null,null) + lambda_s [v(S,null) - v(null,null)] + lambda_c [v(S,C) - v(S,null)];
/// v(S,null) is the reconstruction task on the source. Without a source
/// motion v(S,null) = v(null,null) and the generation formula results.
template <typename T>
std::vector<T> guided_velocity_edit(const ConditionalVelocity<T>& v, TaskKind k, const Conditions& c, std::span<const T> x, int frames, double t,
                                    double lambda_s, double lambda_c);

/// Task-appropriate guided velocity; tasks without a row use the plain velocity.
template <typename T>
std::vector<T> guided_velocity(const ConditionalVelocity<T>& v, TaskKind k, const Conditions& c, std::span<const T> x, int frames, double t,
                               const GuidanceOverrides& overrides = {});

struct SampleOptions {
  int steps = flow::kDefaultSteps;
  uint64_t seed = 0;
  flow::Integrator integrator = flow::Integrator::Euler;
  GuidanceOverrides overrides;
};

/// Euler integration from N(0, I) noise (seeded) with the guided velocity;
/// returns a denormalised motion of `frames` frames.
MotionTensor cfg_sample(const model::Mft<float>& m, TaskKind k, const Conditions& c, int frames, const SampleOptions& opt);
/// Same, with an arbitrary velocity source; values stay in model units.
template <typename T>
std::vector<T> cfg_sample_values(const ConditionalVelocity<T>& v, TaskKind k, const Conditions& c, int frames, int features, const SampleOptions& opt);

}  // namespace fm::guidance
