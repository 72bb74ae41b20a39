// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowmotion/flowmotion.h"

#include <string>

#include "fm/app/app.hpp"
#include "fm/motion/io.hpp"
#include "fm/util/errors.hpp"

struct fm_motion {
  fm::MotionTensor motion;
  std::string metadata;
};

struct fm_model {
  fm::model::Checkpoint checkpoint;
  std::string header;
};

namespace {

thread_local std::string g_error;

fm_status fail(fm_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

template <typename F>
fm_status guarded(F&& f) {
  try {
    g_error.clear();
    f();
    return FM_OK;
  } catch (const fm::ConfigError& e) {
    return fail(FM_ERR_CONFIG, e.what());
  } catch (const fm::LegalityError& e) {
    return fail(FM_ERR_LEGALITY, e.what());
  } catch (const fm::MotionError& e) {
    return fail(FM_ERR_LEGALITY, e.what());
  } catch (const fm::NumericError& e) {
    return fail(FM_ERR_NUMERIC, e.what());
  } catch (const fm::IoError& e) {
    return fail(FM_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(FM_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(FM_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(FM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FM_ERR_INTERNAL, "unknown error");
  }
}

std::string str(const char* s) { return s ? std::string(s) : std::string(); }

fm::app::SampleRequest request(const char* task, const char* condition, const fm_sample_options* opt) {
  const fm_sample_options o = opt ? *opt : fm_sample_defaults();
  fm::app::SampleRequest r;
  r.task = str(task);
  r.condition = str(condition);
  r.steps = o.steps;
  r.seed = o.seed;
  r.frames = o.frames;
  r.midpoint = o.midpoint != 0;
  return r;
}

fm_status run_sample(const fm_model* m, const fm::app::SampleRequest& r, fm_motion** out) {
  if (!m || !out) return fail(FM_ERR_ARGUMENT, "null model or output handle");
  *out = nullptr;
  return guarded([&] {
    auto res = fm::app::sample(m->checkpoint, r);
    *out = new fm_motion{std::move(res.motion), res.metadata.dump()};
  });
}

}  // namespace

extern "C" {

const char* fm_last_error(void) { return g_error.c_str(); }
const char* fm_version(void) { return "0.1.0"; }

const char* fm_task_names(void) {
  static const std::string names = [] {
    std::string s;
    for (fm::TaskKind k : fm::all_tasks()) s += (s.empty() ? "" : ",") + std::string(fm::task_name(k));
    return s;
  }();
  return names.c_str();
}

fm_status fm_motion_load(const char* path, fm_motion** out) {
  if (!path || !out) return fail(FM_ERR_ARGUMENT, "null path or output handle");
  *out = nullptr;
  return guarded([&] {
    auto m = fm::load_motion(path);
    *out = new fm_motion{std::move(m), fm::load_motion_metadata(path).dump()};
  });
}

fm_status fm_motion_save(const fm_motion* m, const char* path) {
  if (!m || !path) return fail(FM_ERR_ARGUMENT, "null motion or path");
  return guarded([&] { fm::save_motion(m->motion, path, m->metadata.empty() ? fm::json::object() : fm::json::parse(m->metadata)); });
}

fm_status fm_motion_shape(const fm_motion* m, int* frames, int* features) {
  if (!m || !frames || !features) return fail(FM_ERR_ARGUMENT, "null argument");
  *frames = m->motion.frames;
  *features = m->motion.features();
  return FM_OK;
}

fm_status fm_motion_data(const fm_motion* m, const float** values) {
  if (!m || !values) return fail(FM_ERR_ARGUMENT, "null argument");
  *values = m->motion.values.data();
  return FM_OK;
}

fm_status fm_motion_metadata(const fm_motion* m, const char** json) {
  if (!m || !json) return fail(FM_ERR_ARGUMENT, "null argument");
  *json = m->metadata.c_str();
  return FM_OK;
}

void fm_motion_free(fm_motion* m) { delete m; }

fm_status fm_model_load(const char* checkpoint, fm_model** out) {
  if (!checkpoint || !out) return fail(FM_ERR_ARGUMENT, "null path or output handle");
  *out = nullptr;
  return guarded([&] {
    auto ck = fm::model::load_checkpoint(checkpoint);
    auto header = ck.header.dump();
    *out = new fm_model{std::move(ck), std::move(header)};
  });
}

fm_status fm_model_param_count(const fm_model* m, int64_t* count) {
  if (!m || !count) return fail(FM_ERR_ARGUMENT, "null argument");
  *count = m->checkpoint.model->params().count();
  return FM_OK;
}

fm_status fm_model_header(const fm_model* m, const char** json) {
  if (!m || !json) return fail(FM_ERR_ARGUMENT, "null argument");
  *json = m->header.c_str();
  return FM_OK;
}

void fm_model_free(fm_model* m) { delete m; }

fm_status fm_make_data(const char* config_path, const char* out_dir) {
  if (!config_path) return fail(FM_ERR_ARGUMENT, "null config path");
  return guarded([&] { fm::app::make_data(fm::app::load_run_config(config_path), str(out_dir)); });
}

fm_status fm_train(const char* config_path, const char* resume_checkpoint, const char* stage, const char* out_dir) {
  if (!config_path) return fail(FM_ERR_ARGUMENT, "null config path");
  return guarded([&] {
    fm::app::TrainOptions o;
    o.resume = str(resume_checkpoint);
    o.stage = str(stage);
    o.out = str(out_dir);
    fm::app::train(fm::app::load_run_config(config_path), o);
  });
}

fm_sample_options fm_sample_defaults(void) { return fm_sample_options{fm::flow::kDefaultSteps, 0, 0, 0}; }

fm_status fm_sample(const fm_model* m, const char* task, const char* condition_path, const fm_sample_options* opt, fm_motion** out) {
  return run_sample(m, request(task, condition_path, opt), out);
}

fm_status fm_edit(const fm_model* m, const char* task, const char* source_path, const char* condition_path, const fm_sample_options* opt,
                  fm_motion** out) {
  auto r = request(task, condition_path, opt);
  r.source = str(source_path);
  r.require_source = true;
  return run_sample(m, r, out);
}

fm_status fm_eval(const char* checkpoint, const char* dataset_dir, const char* tasks, const char* split, int steps, int max_samples, uint64_t seed,
                  const char* out_dir) {
  if (!checkpoint || !dataset_dir) return fail(FM_ERR_ARGUMENT, "null checkpoint or dataset path");
  return guarded([&] {
    fm::app::EvalRequest r;
    r.checkpoint = checkpoint;
    r.dataset = dataset_dir;
    r.tasks = fm::app::split_list(str(tasks));
    if (split && *split) r.split = split;
    r.steps = steps;
    r.max_samples = max_samples;
    r.seed = seed;
    r.out = str(out_dir);
    fm::app::evaluate(r);
  });
}

fm_status fm_ablate(const char* config_path, const char* variants, int seeds, int eval_steps, int eval_samples, const char* out_dir) {
  if (!config_path) return fail(FM_ERR_ARGUMENT, "null config path");
  return guarded([&] {
    fm::app::AblateRequest r;
    r.config = config_path;
    r.variants = fm::app::split_list(str(variants));
    r.seeds = seeds;
    r.eval_steps = eval_steps;
    r.eval_samples = eval_samples;
    r.out = str(out_dir);
    fm::app::ablate(r);
  });
}

}  // extern "C"
