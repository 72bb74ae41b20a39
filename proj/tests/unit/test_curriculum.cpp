// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fm/curriculum/trainer.hpp"
#include "fm/model/checkpoint.hpp"
#include "fm/util/errors.hpp"

using namespace fm;
using namespace fm::curriculum;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fm_test_curriculum_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

CurriculumState state_at(int epoch, int window) {
  CurriculumState s;
  s.stage = Stage::Finetune;
  s.schedule = build_schedule(window);
  s.epoch = epoch;
  return s;
}

std::map<TaskKind, double> frequencies(const CurriculumState& s, int n, uint64_t seed) {
  Rng rng(seed);
  std::map<TaskKind, double> f;
  for (int i = 0; i < n; ++i) f[sample_training_task(s, rng)] += 1.0 / n;
  return f;
}

}  // namespace

TEST_CASE("default epoch counts follow the reference schedule") {
  CurriculumConfig c;
  CHECK(c.pretrain_epochs() == 50);
  CHECK(c.window() == 10);
  CHECK(c.finetune_epochs() == 70);
  c.epoch_scale = 1.0;
  CHECK(c.pretrain_epochs() == 1000);
  CHECK(c.window() == 200);
  CHECK(c.finetune_epochs() == 1400);
  c.epoch_scale = 1e-4;
  CHECK(c.window() == 1);

  CurriculumConfig bad;
  bad.mixture = {0.1, 0.1, 0.4, 0.3};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.epoch_scale = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("schedule introduces tasks every window") {
  const auto sched = build_schedule(200);
  REQUIRE(sched.size() == 7);
  for (size_t i = 0; i < sched.size(); ++i) CHECK(sched[i].introduced == 200 * static_cast<int>(i));
  CHECK(sched[5].tasks == std::vector<TaskKind>{TaskKind::InBetweenText, TaskKind::TrajectoryGenerationText});

  CHECK(finetune_schedule(0, 200) == std::vector<TaskKind>{TaskKind::TextGeneration});
  CHECK(finetune_schedule(199, 200) == std::vector<TaskKind>{TaskKind::TextGeneration});
  CHECK(finetune_schedule(450, 200) ==
        std::vector<TaskKind>{TaskKind::TextGeneration, TaskKind::StyleGeneration, TaskKind::TrajectoryEditing});
  const auto all = finetune_schedule(1300, 200);
  CHECK(all.size() == 8);
  CHECK(all.back() == TaskKind::TrajectoryEditingText);
  CHECK_THROWS_AS(build_schedule(0), std::invalid_argument);

  auto s = state_at(450, 200);
  CHECK(s.newest() == std::vector<TaskKind>{TaskKind::TrajectoryEditing});
  CHECK(s.previous() == std::vector<TaskKind>{TaskKind::TextGeneration, TaskKind::StyleGeneration});
  CHECK(s.active().size() == 3);
}

TEST_CASE("pre-training recipes are uniform and mask ratios span [0, 1]") {
  Rng rng(3);
  const int n = 30000;
  std::array<int, 3> counts{};
  double ratio_sum = 0;
  int masked = 0;
  for (int i = 0; i < n; ++i) {
    const auto d = pretrain_task_sampler(rng);
    ++counts[static_cast<size_t>(d.recipe)];
    if (d.recipe == Recipe::MaskedReconstruction) {
      CHECK(d.mask_ratio >= 0.0);
      CHECK(d.mask_ratio <= 1.0);
      ratio_sum += d.mask_ratio;
      ++masked;
    } else {
      CHECK(d.mask_ratio == 0.0);
    }
  }
  for (int c : counts) CHECK(std::abs(static_cast<double>(c) / n - 1.0 / 3.0) < 0.01);
  CHECK(std::abs(ratio_sum / masked - 0.5) < 0.01);

  DataConfig dc;
  dc.family_counts = {{"jump", 2}};
  const auto data = generate_toy_dataset(dc);
  const Clip& clip = data.clips[0];
  Rng r(4);
  CHECK(make_pretrain_instance({Recipe::MaskedReconstruction, 1.0}, clip, r).kind == TaskKind::Unconditional);
  auto recon = make_pretrain_instance({Recipe::MaskedReconstruction, 0.0}, clip, r);
  CHECK(recon.kind == TaskKind::Reconstruction);
  CHECK(recon.cond.source_keep.empty());
  auto half = make_pretrain_instance({Recipe::MaskedReconstruction, 0.5}, clip, r);
  CHECK(half.kind == TaskKind::MaskedReconstruction);
  for (Recipe rec : {Recipe::MaskedReconstruction, Recipe::TrajectoryGeneration, Recipe::InBetween}) {
    for (int i = 0; i < 20; ++i) {
      auto s = make_pretrain_instance({rec, r.uniform()}, clip, r);
      CHECK_NOTHROW(check_legality(s.kind, s.cond, s.target->frames, s.target->layout));
    }
  }
}

TEST_CASE("fresh instances are legal for every task") {
  DataConfig dc;
  dc.family_counts = {{"walk-line", 2}, {"walk-circle", 2}, {"jump", 2}, {"arm-wave", 2}};
  const auto data = generate_toy_dataset(dc);
  Rng rng(5);
  for (TaskKind k : all_tasks())
    for (const auto& clip : data.clips) {
      auto s = make_instance(k, clip, rng);
      CHECK(s.kind == k);
      CHECK_NOTHROW(check_legality(k, s.cond, s.target->frames, s.target->layout));
    }
}

TEST_CASE("training-task mixture matches its weights") {
  const int n = 100000;
  auto f0 = frequencies(state_at(0, 200), n, 1);
  CHECK(std::abs(f0[TaskKind::Unconditional] - 0.05) < 0.01);
  CHECK(std::abs(f0[TaskKind::Reconstruction] - 0.05) < 0.01);
  CHECK(std::abs(f0[TaskKind::TextGeneration] - 0.90) < 0.01);
  CHECK(f0.size() == 3);

  auto f1 = frequencies(state_at(450, 200), n, 2);
  CHECK(std::abs(f1[TaskKind::TrajectoryEditing] - 0.45) < 0.01);
  CHECK(std::abs(f1[TaskKind::TextGeneration] - 0.225) < 0.01);
  CHECK(std::abs(f1[TaskKind::StyleGeneration] - 0.225) < 0.01);

  auto s = state_at(1000, 200);
  s.replay = {{TaskKind::TextGeneration, 0.6}, {TaskKind::StyleGeneration, 0.1}, {TaskKind::TrajectoryEditing, 0.1},
              {TaskKind::TextEditing, 0.1}, {TaskKind::StyleTransfer, 0.1}};
  auto f2 = frequencies(s, n, 3);
  CHECK(std::abs(f2[TaskKind::InBetweenText] - 0.225) < 0.01);
  CHECK(std::abs(f2[TaskKind::TrajectoryGenerationText] - 0.225) < 0.01);
  CHECK(std::abs(f2[TaskKind::TextGeneration] - 0.27) < 0.01);
  CHECK(std::abs(f2[TaskKind::StyleTransfer] - 0.045) < 0.01);
  CHECK(f2.count(TaskKind::TrajectoryEditingText) == 0);

  Rng rng(6);
  CurriculumState empty;
  CHECK_THROWS_AS(sample_training_task(empty, rng), std::logic_error);
}

TEST_CASE("replay weights follow relative FID change with a floor") {
  const std::vector<TaskKind> prev = {TaskKind::TextGeneration, TaskKind::StyleGeneration, TaskKind::TrajectoryEditing};
  FidHistory h = {{TaskKind::TextGeneration, {10.0, 8.0}}, {TaskKind::StyleGeneration, {10.0, 15.0}}, {TaskKind::TrajectoryEditing, {4.0, 5.0}}};
  auto w = replay_probabilities(prev, h, 0.05);
  // Raw weights: max(0.05, -0.2), 0.5, 0.25.
  CHECK(w[TaskKind::TextGeneration] == doctest::Approx(0.05 / 0.8));
  CHECK(w[TaskKind::StyleGeneration] == doctest::Approx(0.5 / 0.8));
  CHECK(w[TaskKind::TrajectoryEditing] == doctest::Approx(0.25 / 0.8));

  FidHistory scaled = h;
  for (auto& [k, v] : scaled)
    for (double& x : v) x *= 37.5;
  auto ws = replay_probabilities(prev, scaled, 0.05);
  for (TaskKind k : prev) CHECK(ws[k] == doctest::Approx(w[k]).epsilon(1e-12));

  FidHistory flat = {{TaskKind::TextGeneration, {3.0, 1.0}}, {TaskKind::StyleGeneration, {2.0, 2.0}}, {TaskKind::TrajectoryEditing, {9.0, 9.0}}};
  for (const auto& [k, p] : replay_probabilities(prev, flat, 0.05)) CHECK(p == doctest::Approx(1.0 / 3.0));

  FidHistory partial = h;
  partial[TaskKind::TrajectoryEditing] = {4.0};
  for (const auto& [k, p] : replay_probabilities(prev, partial, 0.05)) CHECK(p == doctest::Approx(1.0 / 3.0));
  CHECK(replay_probabilities({}, h).empty());

  CurriculumState st = state_at(650, 200);
  st.record({TaskKind::TextGeneration, 1, 1.0});
  st.record({TaskKind::TextGeneration, 2, 2.0});
  st.record({TaskKind::TextGeneration, 3, 3.0});
  CHECK(st.history[TaskKind::TextGeneration] == std::vector<double>{2.0, 3.0});
  CHECK_THROWS_AS(st.record({TaskKind::TextGeneration, 4, std::nan("")}), NumericError);
}

TEST_CASE("Adam leaves parameters alone under zero gradient and takes lr-sized first steps") {
  nc::Parameter<double> p("p", nc::Tensor<double>({4}, {1.0, -2.0, 0.5, 3.0}));
  AdamConfig c;
  c.lr = 0.1;
  Adam<double> adam(c);
  p.zero_grad();
  adam.step({&p});
  CHECK(p.value.data == std::vector<double>{1.0, -2.0, 0.5, 3.0});
  CHECK(adam.steps() == 1);

  Adam<double> fresh(c);
  p.grad.data = {2.0, -0.5, 1e-3, 0.0};
  fresh.step({&p});
  // Bias-corrected first step is lr * g / (|g| + eps).
  CHECK(p.value.data[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p.value.data[1] == doctest::Approx(-1.9).epsilon(1e-6));
  CHECK(p.value.data[2] == doctest::Approx(0.4).epsilon(1e-4));
  CHECK(p.value.data[3] == 3.0);

  nc::Parameter<double> q("q", nc::Tensor<double>({2}));
  CHECK_THROWS_AS(fresh.step({&p, &q}), std::logic_error);

  q.grad.data = {3.0, 4.0};
  CHECK(clip_grad_norm<double>({&q}, 1.0) == doctest::Approx(5.0));
  CHECK(q.grad.data[0] == doctest::Approx(0.6));
  CHECK(q.grad.data[1] == doctest::Approx(0.8));
  CHECK(clip_grad_norm<double>({&q}, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("train config parses, validates and rejects unknown keys") {
  TrainConfig c;
  c.seed = 9;
  c.curriculum.epoch_scale = 0.01;
  auto back = train_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK_THROWS_AS(train_config_from_json({{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"curriculum", {{"bogus", 1}}}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"batch", 0}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"stage", "warmup"}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"lr", "fast"}}), ConfigError);
}

TEST_CASE("an interrupted run resumes to the same parameters") {
  DataConfig dc;
  dc.family_counts = {{"walk-line", 2}, {"jump", 2}, {"arm-wave", 2}};
  dc.min_frames = 16;
  dc.max_frames = 20;
  dc.heldout_fraction = 0.34;
  const auto data = generate_toy_dataset(dc);
  model::ModelConfig mc;
  mc.width = 16;
  mc.heads = 2;
  mc.blocks = 1;
  mc.max_frames = 24;
  TrainConfig tc;
  tc.seed = 5;
  tc.batch = 3;
  tc.adam.lr = 1e-3;
  tc.eval_samples = 2;
  tc.eval_steps = 2;
  tc.checkpoint_every = 2;
  tc.validation_per_task = 1;
  tc.curriculum.epoch_scale = 1.0;
  tc.curriculum.reference_pretrain_epochs = 2;
  tc.curriculum.reference_window = 1;
  tc.curriculum.finetune_tail_epochs = 1;

  model::Mft<float> a(mc);
  const auto dir_a = scratch("full");
  std::vector<json> records;
  Trainer ta(a, data, tc, dir_a);
  ta.on_record = [&](const json& r) { records.push_back(r); };
  const auto ra = ta.run();
  CHECK(ra.epochs == 9);
  CHECK(fs::exists(ra.final_checkpoint));
  CHECK(fs::exists(ra.best_checkpoint));
  int introductions = 0, evals = 0;
  for (const auto& r : records) {
    if (r.value("type", "") == "introduce") ++introductions;
    if (r.value("type", "") == "eval") ++evals;
  }
  CHECK(introductions == 7);
  CHECK(evals > 0);

  model::Mft<float> b(mc);
  const auto dir_b = scratch("split");
  {
    Trainer tb(b, data, tc, dir_b);
    tb.stop_after_epochs = 4;
    CHECK(tb.run().epochs == 4);
  }
  model::Mft<float> c(mc);
  Trainer tc2(c, data, tc, dir_b);
  tc2.resume(dir_b / "last.ckpt");
  const auto rc = tc2.run();
  CHECK(rc.steps == ra.steps);
  const auto& pa = a.params().all();
  const auto& pc = c.params().all();
  REQUIRE(pa.size() == pc.size());
  bool same = true;
  for (size_t i = 0; i < pa.size(); ++i) same = same && pa[i]->value.data == pc[i]->value.data;
  CHECK(same);

  auto loaded = model::load_checkpoint(ra.final_checkpoint);
  CHECK(loaded.model->params().all()[0]->value.data == pa[0]->value.data);
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}
