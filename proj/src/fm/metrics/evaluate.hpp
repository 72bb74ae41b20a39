// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fm/guidance/guidance.hpp"
#include "fm/metrics/metrics.hpp"
#include "fm/motion/generator.hpp"

namespace fm::metrics {

struct EvalOptions {
  int steps = flow::kDefaultSteps;
  uint64_t seed = 0;
  int max_samples = 0;  // 0 = every sample of the slice
  guidance::GuidanceOverrides overrides;
  flow::Integrator integrator = flow::Integrator::Euler;
};

/// Sampling seed of one evaluation instance.
uint64_t instance_seed(uint64_t seed, const TaskSample& s);

/// Guided sample for a dataset instance, with the instance's target frame count.
MotionTensor generate(const model::Mft<float>& m, const TaskSample& s, const EvalOptions& opt);

struct TaskReport {
  TaskKind task = TaskKind::TextGeneration;
  std::string split;
  int samples = 0;
  std::optional<double> fid;
  std::optional<double> avg_err;
  std::optional<double> diversity;
  double foot_skate = 0.0;
  std::optional<RetrievalResult> retrieval;
  std::optional<double> tsi;
  std::optional<double> toy_sra;  // style recognition accuracy analog
  std::optional<double> toy_cra;  // content recognition accuracy analog
};

/// Generates the first `max_samples` instances of `slice` and scores them;
/// FID references the targets of `reference`.
TaskReport evaluate_task(const model::Mft<float>& m, TaskKind k, const std::vector<const TaskSample*>& slice,
                         const std::vector<const TaskSample*>& reference, const FeatureExtractor& fx, const EvalOptions& opt,
                         const std::string& split_name);

/// FID between target features of two slices.
double reference_fid(const std::vector<const TaskSample*>& a, const std::vector<const TaskSample*>& b, const FeatureExtractor& fx);

nlohmann::json to_json(const TaskReport& r);
/// Flat metric/value rows of a report.
std::vector<std::pair<std::string, double>> metric_rows(const TaskReport& r);

}  // namespace fm::metrics
