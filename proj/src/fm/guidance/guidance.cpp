// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/guidance/guidance.hpp"

#include <stdexcept>

namespace fm::guidance {

GuidanceSpec guidance_strengths(TaskKind k) {
  switch (k) {
    case TaskKind::TrajectoryGeneration: return {k, std::nullopt, 1.5};
    case TaskKind::InBetween: return {k, std::nullopt, 1.5};
    case TaskKind::TextGeneration: return {k, std::nullopt, 5.75};
    case TaskKind::StyleGeneration: return {k, std::nullopt, 1.5};
    case TaskKind::TrajectoryEditing: return {k, 2.25, 2.25};
    case TaskKind::TextEditing: return {k, 2.25, 2.25};
    case TaskKind::StyleTransfer: return {k, 1.5, 1.5};
    case TaskKind::InBetweenText: return {k, std::nullopt, 1.75};
    case TaskKind::TrajectoryGenerationText: return {k, std::nullopt, 1.75};
    case TaskKind::TrajectoryEditingText: return {k, 2.0, 2.0};
    default:
      throw std::invalid_argument(std::string("task '") + task_name(k) + "' has no guidance strengths");
  }
}

bool has_guidance(TaskKind k) {
  return !(k == TaskKind::Unconditional || k == TaskKind::MaskedReconstruction || k == TaskKind::Reconstruction);
}

GuidanceSpec resolve_strengths(TaskKind k, const GuidanceOverrides& overrides) {
  if (auto it = overrides.find(k); it != overrides.end()) return it->second;
  return guidance_strengths(k);
}

namespace {

template <typename T>
void check_size(const std::vector<T>& v, size_t n) {
  if (v.size() != n) throw nc::ShapeError("guidance: velocity has " + std::to_string(v.size()) + " values, expected " + std::to_string(n));
}

}  // namespace

template <typename T>
std::vector<T> guided_velocity_gen(const ConditionalVelocity<T>& v, TaskKind k, const Conditions& c, std::span<const T> x, int frames, double t,
                                   double lambda_c) {
  std::vector<T> v0 = v(TaskKind::Unconditional, Conditions{}, x, frames, t);
  check_size(v0, x.size());
  std::vector<T> vc = v(k, c, x, frames, t);
  check_size(vc, x.size());
  const T l = static_cast<T>(lambda_c);
  for (size_t i = 0; i < v0.size(); ++i) v0[i] += l * (vc[i] - v0[i]);
  return v0;
}

template <typename T>
std::vector<T> guided_velocity_edit(const ConditionalVelocity<T>& v, TaskKind k, const Conditions& c, std::span<const T> x, int frames, double t,
                                    double lambda_s, double lambda_c) {
  std::vector<T> vnn = v(TaskKind::Unconditional, Conditions{}, x, frames, t);
  check_size(vnn, x.size());
  std::vector<T> vs;
  if (c.source) {
    Conditions sc;
    sc.source = c.source;
    vs = v(TaskKind::Reconstruction, sc, x, frames, t);
    check_size(vs, x.size());
  } else {
    vs = vnn;
  }
  std::vector<T> vsc = v(k, c, x, frames, t);
  check_size(vsc, x.size());
  const T ls = static_cast<T>(lambda_s), lc = static_cast<T>(lambda_c);
  std::vector<T> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = vnn[i] + ls * (vs[i] - vnn[i]) + lc * (vsc[i] - vs[i]);
  return out;
}

template <typename T>
std::vector<T> guided_velocity(const ConditionalVelocity<T>& v, TaskKind k, const Conditions& c, std::span<const T> x, int frames, double t,
                               const GuidanceOverrides& overrides) {
  if (!has_guidance(k)) return v(k, c, x, frames, t);
  const GuidanceSpec g = resolve_strengths(k, overrides);
  if (requirements(k).source == Need::Required) return guided_velocity_edit(v, k, c, x, frames, t, g.lambda_s.value_or(1.0), g.lambda_c);
  return guided_velocity_gen(v, k, c, x, frames, t, g.lambda_c);
}

template <typename T>
std::vector<T> cfg_sample_values(const ConditionalVelocity<T>& v, TaskKind k, const Conditions& c, int frames, int features, const SampleOptions& opt) {
  check_legality(k, c);
  Rng rng(opt.seed);
  auto x1 = flow::gaussian_noise<T>(static_cast<size_t>(frames) * static_cast<size_t>(features), rng);
  flow::VelocityFn<T> field = [&](double t, const std::vector<T>& x) { return guided_velocity<T>(v, k, c, x, frames, t, opt.overrides); };
  return flow::sample_ode<T>(field, std::move(x1), opt.steps, opt.integrator);
}

MotionTensor cfg_sample(const model::Mft<float>& m, TaskKind k, const Conditions& c, int frames, const SampleOptions& opt) {
  const auto& layout = m.config().layout;
  check_legality(k, c, frames, layout);
  auto values = cfg_sample_values<float>(model_velocity(m), k, c, frames, layout.features, opt);
  return m.normalizer.denormalize<float>(values, frames, layout);
}

#define FM_INSTANTIATE_GUIDANCE(T)                                                                                                              \
  template std::vector<T> guided_velocity_gen<T>(const ConditionalVelocity<T>&, TaskKind, const Conditions&, std::span<const T>, int, double, \
                                                 double);                                                                                      \
  template std::vector<T> guided_velocity_edit<T>(const ConditionalVelocity<T>&, TaskKind, const Conditions&, std::span<const T>, int,        \
                                                  double, double, double);                                                                     \
  template std::vector<T> guided_velocity<T>(const ConditionalVelocity<T>&, TaskKind, const Conditions&, std::span<const T>, int, double,     \
                                             const GuidanceOverrides&);                                                                        \
  template std::vector<T> cfg_sample_values<T>(const ConditionalVelocity<T>&, TaskKind, const Conditions&, int, int, const SampleOptions&);

FM_INSTANTIATE_GUIDANCE(float)
FM_INSTANTIATE_GUIDANCE(double)

}  // namespace fm::guidance
