// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/metrics/evaluate.hpp"

#include <algorithm>

namespace fm::metrics {

uint64_t instance_seed(uint64_t seed, const TaskSample& s) {
  return derive_seed(seed, static_cast<uint64_t>(s.clip), static_cast<uint64_t>(s.kind) + 1);
}

MotionTensor generate(const model::Mft<float>& m, const TaskSample& s, const EvalOptions& opt) {
  guidance::SampleOptions so;
  so.steps = opt.steps;
  so.seed = instance_seed(opt.seed, s);
  so.integrator = opt.integrator;
  so.overrides = opt.overrides;
  return guidance::cfg_sample(m, s.kind, s.cond, s.target->frames, so);
}

namespace {

std::vector<Feature> target_features(const std::vector<const TaskSample*>& xs, const FeatureExtractor& fx) {
  std::vector<Feature> out;
  out.reserve(xs.size());
  for (const auto* s : xs) out.push_back(fx.extract(*s->target));
  return out;
}

int family_label(const TaskSample& s) { return static_cast<int>(parse_family(s.family)); }

}  // namespace

double reference_fid(const std::vector<const TaskSample*>& a, const std::vector<const TaskSample*>& b, const FeatureExtractor& fx) {
  return fid(target_features(a, fx), target_features(b, fx));
}

TaskReport evaluate_task(const model::Mft<float>& m, TaskKind k, const std::vector<const TaskSample*>& slice,
                         const std::vector<const TaskSample*>& reference, const FeatureExtractor& fx, const EvalOptions& opt,
                         const std::string& split_name) {
  std::vector<const TaskSample*> xs;
  for (const auto* s : slice)
    if (s->kind == k) xs.push_back(s);
  if (opt.max_samples > 0 && static_cast<int>(xs.size()) > opt.max_samples) xs.resize(static_cast<size_t>(opt.max_samples));
  if (xs.empty()) throw std::invalid_argument(std::string("evaluate: no '") + task_name(k) + "' samples in the " + split_name + " slice");

  TaskReport r;
  r.task = k;
  r.split = split_name;
  r.samples = static_cast<int>(xs.size());
  std::vector<MotionTensor> gen;
  gen.reserve(xs.size());
  for (const auto* s : xs) gen.push_back(generate(m, *s, opt));

  std::vector<Feature> gf;
  for (const auto& g : gen) gf.push_back(fx.extract(g));
  std::vector<const TaskSample*> ref;
  for (const auto* s : reference)
    if (s->kind == k) ref.push_back(s);
  if (gf.size() >= 2 && ref.size() >= 2) r.fid = fid(gf, target_features(ref, fx));
  if (gf.size() >= 2) r.diversity = diversity(gf, 0, opt.seed);

  for (const auto& g : gen) r.foot_skate += foot_skate_ratio(g);
  r.foot_skate /= static_cast<double>(gen.size());

  if (uses_trajectory(k)) {
    double e = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) e += average_error(gen[i], *xs[i]->cond.trajectory);
    r.avg_err = e / static_cast<double>(xs.size());
  }
  if (is_editing(k)) {
    double t = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) t += tsi(*xs[i]->cond.source, gen[i]);
    r.tsi = t / static_cast<double>(xs.size());
    if (xs.size() >= 2) r.retrieval = retrieval_metrics(gf, target_features(xs, fx));
  }
  if (k == TaskKind::StyleTransfer || k == TaskKind::StyleGeneration) {
    CentroidClassifier style, content;
    std::vector<int> sl, cl;
    for (const auto* s : ref) {
      sl.push_back(static_cast<int>(s->cond.style->label));
      cl.push_back(family_label(*s));
    }
    const auto rf = target_features(ref, fx);
    style.fit(rf, sl);
    content.fit(rf, cl);
    std::vector<int> want_s, want_c;
    for (const auto* s : xs) {
      want_s.push_back(static_cast<int>(s->cond.style->label));
      want_c.push_back(family_label(*s));
    }
    r.toy_sra = style.accuracy(gf, want_s);
    r.toy_cra = content.accuracy(gf, want_c);
  }
  return r;
}

nlohmann::json to_json(const TaskReport& r) {
  nlohmann::json j;
  j["task"] = task_name(r.task);
  j["split"] = r.split;
  j["samples"] = r.samples;
  for (const auto& [name, value] : metric_rows(r)) j["metrics"][name] = value;
  if (r.retrieval) j["retrieval_ranks"] = r.retrieval->ranks;
  return j;
}

std::vector<std::pair<std::string, double>> metric_rows(const TaskReport& r) {
  std::vector<std::pair<std::string, double>> rows;
  if (r.fid) rows.emplace_back("fid", *r.fid);
  if (r.avg_err) rows.emplace_back("avg_err", *r.avg_err);
  if (r.diversity) rows.emplace_back("diversity", *r.diversity);
  rows.emplace_back("foot_skate", r.foot_skate);
  if (r.retrieval) {
    for (size_t i = 0; i < r.retrieval->ks.size(); ++i) rows.emplace_back("R@" + std::to_string(r.retrieval->ks[i]), r.retrieval->recall[i]);
    rows.emplace_back("avg_rank", r.retrieval->avg_rank);
  }
  if (r.tsi) rows.emplace_back("tsi", *r.tsi);
  if (r.toy_sra) rows.emplace_back("toy_sra", *r.toy_sra);
  if (r.toy_cra) rows.emplace_back("toy_cra", *r.toy_cra);
  return rows;
}

}  // namespace fm::metrics
