// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "flowmotion/flowmotion.h"

namespace {

int exit_code(fm_status s) {
  switch (s) {
    case FM_OK: return 0;
    case FM_ERR_CONFIG:
    case FM_ERR_ARGUMENT: return 2;
    case FM_ERR_LEGALITY: return 3;
    case FM_ERR_NUMERIC: return 4;
    case FM_ERR_IO: return 5;
    default: return 1;
  }
}

int report(fm_status s, const char* what) {
  if (s != FM_OK) std::fprintf(stderr, "flowmotion %s: %s\n", what, fm_last_error());
  return exit_code(s);
}

const char* opt_str(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

struct SampleArgs {
  std::string checkpoint, task, condition, source, out;
  int steps = 50;
  uint64_t seed = 0;
  int frames = 0;
  bool midpoint = false;
};

void add_sample_options(CLI::App* cmd, SampleArgs& a, bool edit) {
  cmd->add_option("--checkpoint", a.checkpoint, "model checkpoint")->required();
  cmd->add_option("--task", a.task, "task name (see `flowmotion tasks`)")->required();
  cmd->add_option("--condition", a.condition, "condition file (JSON)");
  if (edit) cmd->add_option("--source", a.source, "source motion file")->required();
  cmd->add_option("--steps", a.steps, "Euler steps")->capture_default_str();
  cmd->add_option("--seed", a.seed, "noise seed")->capture_default_str();
  cmd->add_option("--frames", a.frames, "frames to generate (default: from the conditions)");
  cmd->add_flag("--midpoint", a.midpoint, "use the midpoint integrator");
  cmd->add_option("--out", a.out, "output motion file")->required();
}

int run_sample(const SampleArgs& a, bool edit) {
  const char* what = edit ? "edit" : "sample";
  fm_model* model = nullptr;
  if (fm_status s = fm_model_load(a.checkpoint.c_str(), &model); s != FM_OK) return report(s, what);
  fm_sample_options o = fm_sample_defaults();
  o.steps = a.steps;
  o.seed = a.seed;
  o.frames = a.frames;
  o.midpoint = a.midpoint ? 1 : 0;
  fm_motion* m = nullptr;
  fm_status s = edit ? fm_edit(model, a.task.c_str(), a.source.c_str(), opt_str(a.condition), &o, &m)
                     : fm_sample(model, a.task.c_str(), opt_str(a.condition), &o, &m);
  if (s == FM_OK) s = fm_motion_save(m, a.out.c_str());
  if (s == FM_OK) {
    const char* md = nullptr;
    fm_motion_metadata(m, &md);
    std::printf("%s\n", md);
  }
  fm_motion_free(m);
  fm_model_free(model);
  return report(s, what);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowmotion: rectified-flow motion generation and editing"};
  app.require_subcommand(1);

  std::string config, out, resume, stage;
  auto* make = app.add_subcommand("make-data", "generate the toy corpus and manifest");
  make->add_option("--config", config, "run config (JSON)")->required();
  make->add_option("--out", out, "dataset directory (default: from the config)");

  auto* train = app.add_subcommand("train", "pre-train and fine-tune a model");
  train->add_option("--config", config, "run config (JSON)")->required();
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_option("--stage", stage, "all, pretrain or finetune");
  train->add_option("--out", out, "run directory (default: from the config)");

  SampleArgs sa, ea;
  auto* sample = app.add_subcommand("sample", "generate a motion");
  add_sample_options(sample, sa, false);
  auto* edit = app.add_subcommand("edit", "edit a source motion");
  add_sample_options(edit, ea, true);

  std::string ev_ck, ev_data, ev_tasks, ev_split = "heldout", ev_out;
  int ev_steps = 50, ev_max = 0;
  uint64_t ev_seed = 0;
  auto* eval = app.add_subcommand("eval", "score a checkpoint on a dataset");
  eval->add_option("--checkpoint", ev_ck, "model checkpoint")->required();
  eval->add_option("--dataset", ev_data, "dataset directory")->required();
  eval->add_option("--tasks", ev_tasks, "comma-separated task names (default: every guided task)");
  eval->add_option("--split", ev_split, "heldout, train or both")->capture_default_str();
  eval->add_option("--steps", ev_steps, "Euler steps")->capture_default_str();
  eval->add_option("--max-samples", ev_max, "instances per task (0: all)")->capture_default_str();
  eval->add_option("--seed", ev_seed, "sampling seed")->capture_default_str();
  eval->add_option("--out", ev_out, "report directory")->required();

  std::string ab_variants = "aligned-1d-rope,1d-learnable";
  int ab_seeds = 1, ab_steps = 20, ab_samples = 0;
  auto* ablate = app.add_subcommand("ablate", "train and compare ablation variants");
  ablate->add_option("--config", config, "run config (JSON)")->required();
  ablate->add_option("--variants", ab_variants, "comma-separated variants")->capture_default_str();
  ablate->add_option("--seeds", ab_seeds, "seeds per variant")->capture_default_str();
  ablate->add_option("--eval-steps", ab_steps, "Euler steps for evaluation")->capture_default_str();
  ablate->add_option("--eval-samples", ab_samples, "instances per task (0: all)")->capture_default_str();
  ablate->add_option("--out", out, "report directory");

  auto* tasks = app.add_subcommand("tasks", "list task names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int r = app.exit(e);
    return r == 0 ? 0 : 2;
  }

  if (*make) return report(fm_make_data(config.c_str(), opt_str(out)), "make-data");
  if (*train) return report(fm_train(config.c_str(), opt_str(resume), opt_str(stage), opt_str(out)), "train");
  if (*sample) return run_sample(sa, false);
  if (*edit) return run_sample(ea, true);
  if (*eval)
    return report(fm_eval(ev_ck.c_str(), ev_data.c_str(), opt_str(ev_tasks), ev_split.c_str(), ev_steps, ev_max, ev_seed, ev_out.c_str()), "eval");
  if (*ablate) return report(fm_ablate(config.c_str(), ab_variants.c_str(), ab_seeds, ab_steps, ab_samples, opt_str(out)), "ablate");
  if (*tasks) {
    std::string names = fm_task_names();
    for (char& c : names)
      if (c == ',') c = '\n';
    std::printf("%s\n", names.c_str());
    return 0;
  }
  return 2;
}
