// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/app/app.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fm/motion/io.hpp"
#include "fm/util/errors.hpp"

namespace fm::app {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t"), b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

json guidance_to_json(const guidance::GuidanceOverrides& g) {
  json j = json::object();
  for (const auto& [k, s] : g) {
    json e = {{"lambda_c", s.lambda_c}};
    if (s.lambda_s) e["lambda_s"] = *s.lambda_s;
    j[task_name(k)] = e;
  }
  return j;
}

guidance::GuidanceOverrides guidance_from_json(const json& j) {
  guidance::GuidanceOverrides g;
  if (!j.is_object()) throw ConfigError("guidance overrides must be an object keyed by task name");
  for (auto it = j.begin(); it != j.end(); ++it) {
    TaskKind k;
    try {
      k = parse_task(it.key());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("guidance: ") + e.what());
    }
    if (!guidance::has_guidance(k)) throw ConfigError(std::string("guidance: task '") + task_name(k) + "' takes no guidance strengths");
    guidance::GuidanceSpec s = guidance::guidance_strengths(k);
    const auto& v = it.value();
    try {
      if (v.contains("lambda_c")) s.lambda_c = v.at("lambda_c").get<double>();
      if (v.contains("lambda_s")) {
        if (requirements(k).source != Need::Required) throw ConfigError(std::string("guidance: task '") + task_name(k) + "' has no source strength");
        s.lambda_s = v.at("lambda_s").get<double>();
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("guidance: ") + e.what());
    }
    if (!std::isfinite(s.lambda_c) || (s.lambda_s && !std::isfinite(*s.lambda_s))) throw ConfigError("guidance strengths must be finite");
    g[k] = s;
  }
  return g;
}

json to_json(const RunConfig& c, bool with_output) {
  json j = {{"seed", c.seed},
            {"precision", c.precision},
            {"data", fm::to_json(c.data)},
            {"model", model::to_json(c.model)},
            {"train", curriculum::to_json(c.train)},
            {"guidance", guidance_to_json(c.guidance)}};
  if (with_output) {
    j["output_dir"] = c.output_dir;
    j["dataset_dir"] = c.dataset_dir;
  }
  return j;
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  static const std::vector<std::string> known = {"seed", "precision", "data", "model", "train", "guidance", "output_dir", "dataset_dir"};
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) throw ConfigError("unknown run config key '" + it.key() + "'");
  RunConfig c;
  try {
    c.seed = j.value("seed", uint64_t{0});
    c.precision = j.value("precision", c.precision);
    c.output_dir = j.value("output_dir", std::string());
    c.dataset_dir = j.value("dataset_dir", std::string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (c.precision != "float32") throw ConfigError("precision '" + c.precision + "' is not supported for training (float32 only)");
  auto resolve = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative() && !base_dir.empty()) p = (base_dir / p).lexically_normal().string();
  };
  resolve(c.output_dir);
  resolve(c.dataset_dir);
  if (j.contains("data")) c.data = data_config_from_json(j["data"]);
  json mj = j.value("model", json::object());
  if (mj.contains("instruction_file")) {
    std::string f = mj["instruction_file"].get<std::string>();
    resolve(f);
    mj["instruction_file"] = f;
  }
  c.model = model::model_config_from_json(mj);
  c.train = curriculum::train_config_from_json(j.value("train", json::object()));
  if (j.contains("guidance")) c.guidance = guidance_from_json(j["guidance"]);
  c.model.init_seed = c.seed;
  c.train.seed = c.seed;
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

std::string config_hash(const RunConfig& c) { return hex_hash(to_json(c, false).dump()); }

fs::path output_dir(const RunConfig& c) {
  if (!c.output_dir.empty()) return c.output_dir;
  const char* root = std::getenv("FM_OUTPUT_ROOT");
  return fs::path(root && *root ? root : "runs") / config_hash(c);
}

fs::path dataset_dir(const RunConfig& c) { return c.dataset_dir.empty() ? output_dir(c) / "data" : fs::path(c.dataset_dir); }

fs::path make_data(const RunConfig& c, const fs::path& out) {
  const fs::path dir = out.empty() ? dataset_dir(c) : out;
  const Dataset ds = generate_toy_dataset(c.data);
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    throw IoError("cannot create dataset directory '" + dir.string() + "': " + e.what());
  }
  save_dataset(ds, dir, {{"config_hash", config_hash(c)}});
  return dir;
}

curriculum::TrainResult train(RunConfig c, const TrainOptions& opt) {
  if (!opt.stage.empty()) c.train.stage = curriculum::parse_stage_select(opt.stage);
  const fs::path out = opt.out.empty() ? output_dir(c) : opt.out;
  const fs::path data = dataset_dir(c);
  if (!fs::exists(data / "manifest.json")) throw IoError("dataset '" + data.string() + "' not found; run make-data first");
  const Dataset ds = load_dataset(data);
  if (fm::to_json(ds.config) != fm::to_json(c.data)) throw ConfigError("dataset '" + data.string() + "' was generated with a different data config");
  fs::create_directories(out);
  const std::string hash = config_hash(c);
  json saved = to_json(c, false);
  saved["config_hash"] = hash;
  write_text_atomic(out / "config.json", saved.dump(2) + "\n");

  model::Mft<float> m(c.model);
  json extra = {{"config_hash", hash}, {"dataset_hash", dataset_hash(data)}, {"guidance", guidance_to_json(c.guidance)}, {"seed", c.seed}};
  curriculum::Trainer trainer(m, ds, c.train, out, extra);
  trainer.stop_after_epochs = opt.stop_after_epochs;
  if (!opt.resume.empty()) trainer.resume(opt.resume);
  return trainer.run();
}

namespace {

TrajectoryHint hint_from_json(const json& j, const fs::path& base, const FeatureLayout& layout) {
  if (j.contains("motion")) {
    const MotionTensor m = load_motion(base / j["motion"].get<std::string>(), layout);
    std::vector<int> joints = j.contains("joints") ? j["joints"].get<std::vector<int>>() : all_joints(layout);
    std::vector<int> frames;
    if (!j.contains("frames") || j["frames"].is_string())
      frames = all_frames(m.frames);
    else
      frames = j["frames"].get<std::vector<int>>();
    for (int f : frames)
      if (f < 0 || f >= m.frames) throw MotionError("trajectory frame " + std::to_string(f) + " outside [0, " + std::to_string(m.frames) + ")");
    for (int q : joints)
      if (q < 0 || q >= layout.joints) throw MotionError("trajectory joint " + std::to_string(q) + " outside the layout");
    return extract_trajectory(m, joints, frames);
  }
  TrajectoryHint h(j.at("frames").get<int>(), j.at("joints").get<int>());
  h.coords = j.at("coords").get<std::vector<float>>();
  h.mask = j.at("mask").get<std::vector<uint8_t>>();
  h.validate();
  return h;
}

}  // namespace

ConditionFile load_conditions(const fs::path& path, const FeatureLayout& layout) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open condition file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("condition file '" + path.string() + "': " + e.what());
  }
  static const std::vector<std::string> known = {"task", "frames", "text", "style", "source", "source_keep", "trajectory"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) throw ConfigError("unknown condition key '" + it.key() + "'");
  const fs::path base = path.parent_path();
  ConditionFile c;
  try {
    if (j.contains("task")) c.task = parse_task(j["task"].get<std::string>());
    if (j.contains("frames")) c.frames = j["frames"].get<int>();
    if (j.contains("text")) c.cond.text = TextPrompt::free(j["text"].get<std::string>());
    if (j.contains("style")) {
      StyleCode s;
      s.label = parse_style(j["style"].at("label").get<std::string>());
      s.intensity = j["style"].value("intensity", 1.0f);
      c.cond.style = s;
    }
    if (j.contains("source")) c.cond.source = std::make_shared<const MotionTensor>(load_motion(base / j["source"].get<std::string>(), layout));
    if (j.contains("source_keep")) c.cond.source_keep = j["source_keep"].get<std::vector<uint8_t>>();
    if (j.contains("trajectory")) c.cond.trajectory = hint_from_json(j["trajectory"], base, layout);
  } catch (const json::exception& e) {
    throw ConfigError("condition file '" + path.string() + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("condition file '" + path.string() + "': " + e.what());
  }
  return c;
}

SampleResult sample(const model::Checkpoint& ck, const SampleRequest& req) {
  const auto& m = *ck.model;
  const auto& layout = m.config().layout;
  const TaskKind k = parse_task(req.task);
  ConditionFile cf;
  if (!req.condition.empty()) cf = load_conditions(req.condition, layout);
  if (cf.task && *cf.task != k)
    throw LegalityError(std::string("condition file is for task '") + task_name(*cf.task) + "', not '" + task_name(k) + "'");
  if (!req.source.empty()) cf.cond.source = std::make_shared<const MotionTensor>(load_motion(req.source, layout));
  if (req.require_source) {
    if (requirements(k).source != Need::Required) throw LegalityError(std::string("task '") + task_name(k) + "' does not edit a source motion");
    if (!cf.cond.source) throw LegalityError(std::string("task '") + task_name(k) + "' requires a source motion");
  }
  int frames = req.frames;
  if (frames <= 0 && cf.frames) frames = *cf.frames;
  if (frames <= 0 && cf.cond.trajectory) frames = cf.cond.trajectory->frames;
  if (frames <= 0 && cf.cond.source) frames = cf.cond.source->frames;
  if (frames <= 0) throw ConfigError("the number of frames to generate is not given (use --frames or a 'frames' condition entry)");
  check_legality(k, cf.cond, frames, layout);
  if (req.steps < 1) throw ConfigError("--steps must be at least 1");

  guidance::SampleOptions so;
  so.steps = req.steps;
  so.seed = req.seed;
  so.integrator = req.midpoint ? flow::Integrator::Midpoint : flow::Integrator::Euler;
  if (ck.header.contains("guidance")) so.overrides = guidance_from_json(ck.header["guidance"]);

  SampleResult r{guidance::cfg_sample(m, k, cf.cond, frames, so), json::object()};
  json& md = r.metadata;
  md["task"] = task_name(k);
  md["steps"] = req.steps;
  md["seed"] = req.seed;
  md["integrator"] = req.midpoint ? "midpoint" : "euler";
  md["config_hash"] = ck.header.value("config_hash", std::string());
  if (guidance::has_guidance(k)) {
    const auto g = guidance::resolve_strengths(k, so.overrides);
    md["lambda_c"] = g.lambda_c;
    md["lambda_s"] = g.lambda_s ? json(*g.lambda_s) : json(nullptr);
  } else {
    md["lambda_c"] = nullptr;
    md["lambda_s"] = nullptr;
  }
  if (cf.cond.text) md["text"] = cf.cond.text->text;
  if (cf.cond.style) md["style"] = {{"label", style_name(cf.cond.style->label)}, {"intensity", cf.cond.style->intensity}};
  return r;
}

namespace {

std::vector<const TaskSample*> slice_of(const Dataset& ds, TaskKind k, bool heldout) { return ds.of_task(k, heldout); }

}  // namespace

json evaluate(const EvalRequest& req) {
  const auto ck = model::load_checkpoint(req.checkpoint);
  const Dataset ds = load_dataset(req.dataset);
  const std::string ck_layout = ck.header.value("layout_hash", std::string());
  if (ck_layout != ds.layout.hash())
    throw ConfigError("checkpoint layout hash " + ck_layout + " does not match dataset layout hash " + ds.layout.hash());
  std::vector<TaskKind> tasks;
  if (req.tasks.empty()) {
    for (TaskKind k : all_tasks())
      if (guidance::has_guidance(k)) tasks.push_back(k);
  } else {
    for (const auto& t : req.tasks) tasks.push_back(parse_task(t));
  }
  std::vector<std::pair<std::string, bool>> splits;
  if (req.split == "heldout" || req.split == "both") splits.emplace_back("heldout", true);
  if (req.split == "train" || req.split == "both") splits.emplace_back("train", false);
  if (splits.empty()) throw ConfigError("unknown split '" + req.split + "' (expected heldout, train or both)");

  metrics::FeatureExtractor fx(ds.layout);
  metrics::EvalOptions opt;
  opt.steps = req.steps;
  opt.seed = req.seed;
  opt.max_samples = req.max_samples;
  if (ck.header.contains("guidance")) opt.overrides = guidance_from_json(ck.header["guidance"]);
  const std::string hash = ck.header.value("config_hash", std::string());

  json report = {{"config_hash", hash}, {"seed", req.seed}, {"steps", req.steps}, {"feature_extractor", fx.version()}};
  json tasks_json = json::array(), records = json::array();
  std::ostringstream csv;
  csv << "task,split,metric,value\n";
  for (TaskKind k : tasks) {
    for (const auto& [name, heldout] : splits) {
      auto slice = slice_of(ds, k, heldout);
      if (slice.empty()) continue;
      auto r = metrics::evaluate_task(*ck.model, k, slice, slice, fx, opt, name);
      json tj = metrics::to_json(r);
      auto rows = metrics::metric_rows(r);
      // Reference gaps: held-out halves, and training targets against held-out ones.
      const auto held = slice_of(ds, k, true);
      if (heldout && held.size() >= 4) {
        std::vector<const TaskSample*> a(held.begin(), held.begin() + static_cast<std::ptrdiff_t>(held.size() / 2)),
            b(held.begin() + static_cast<std::ptrdiff_t>(held.size() / 2), held.end());
        rows.emplace_back("fid_split_half", metrics::reference_fid(a, b, fx));
        auto train = slice_of(ds, k, false);
        if (train.size() > held.size()) train.resize(held.size());
        if (train.size() >= 2) rows.emplace_back("fid_train_reference", metrics::reference_fid(train, held, fx));
      }
      for (const auto& [metric, value] : rows) {
        tj["metrics"][metric] = value;
        records.push_back({{"metric", metric}, {"value", value}, {"task", task_name(k)}, {"split", name}, {"config_hash", hash}, {"seed", req.seed}});
        csv << task_name(k) << ',' << name << ',' << metric << ',' << value << '\n';
      }
      tasks_json.push_back(tj);
    }
  }
  report["tasks"] = tasks_json;
  report["records"] = records;
  if (!req.out.empty()) {
    fs::create_directories(req.out);
    write_text_atomic(req.out / "report.json", report.dump(2) + "\n");
    write_text_atomic(req.out / "report.csv", csv.str());
  }
  return report;
}

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names = {"aligned-1d-rope", "1d-learnable", "3d-learnable", "3d-rope", "no-instruction-modulation", "no-curriculum"};
  return names;
}

void apply_variant(RunConfig& c, const std::string& v) {
  if (v == "no-instruction-modulation") {
    c.model.instruction_modulation = false;
  } else if (v == "no-curriculum") {
    c.train.curriculum.enabled = false;
  } else {
    try {
      c.model.position = model::parse_position_encoding(v);
    } catch (const std::exception&) {
      std::string all;
      for (const auto& n : variant_names()) all += (all.empty() ? "" : ", ") + n;
      throw ConfigError("unknown ablation variant '" + v + "' (valid: " + all + ")");
    }
  }
}

json ablate(const AblateRequest& req) {
  const RunConfig base = load_run_config(req.config);
  if (req.variants.empty()) throw ConfigError("ablate: no variants given");
  if (req.seeds < 1) throw ConfigError("ablate: --seeds must be at least 1");
  for (const auto& v : req.variants) {
    RunConfig probe = base;
    apply_variant(probe, v);
  }
  const fs::path out = req.out.empty() ? output_dir(base) / "ablate" : req.out;
  RunConfig data_cfg = base;
  data_cfg.dataset_dir = (out / "data").string();
  const fs::path data = make_data(data_cfg);
  static const std::vector<TaskKind> eval_tasks = {TaskKind::TrajectoryGeneration, TaskKind::InBetween, TaskKind::TextGeneration};

  json rows = json::array();
  std::ostringstream csv;
  csv << "variant,seed,task,metric,value\n";
  for (const auto& v : req.variants) {
    for (int s = 0; s < req.seeds; ++s) {
      RunConfig c = base;
      apply_variant(c, v);
      c.seed = base.seed + static_cast<uint64_t>(s);
      c.model.init_seed = c.seed;
      c.train.seed = c.seed;
      c.dataset_dir = data.string();
      const fs::path run = out / v / ("seed" + std::to_string(s));
      c.output_dir = run.string();
      const auto tr = train(c, {});
      EvalRequest er;
      er.checkpoint = tr.final_checkpoint.string();
      er.dataset = data.string();
      for (TaskKind k : eval_tasks) er.tasks.emplace_back(task_name(k));
      er.steps = req.eval_steps;
      er.max_samples = req.eval_samples;
      er.seed = c.seed;
      er.out = run / "eval";
      const json rep = evaluate(er);
      json row = {{"variant", v}, {"seed", c.seed}, {"final_loss", tr.last_loss}, {"best_validation", tr.best_validation}};
      for (const auto& t : rep["tasks"]) {
        for (auto it = t["metrics"].begin(); it != t["metrics"].end(); ++it) {
          row["metrics"][t["task"].get<std::string>()][it.key()] = it.value();
          csv << v << ',' << c.seed << ',' << t["task"].get<std::string>() << ',' << it.key() << ',' << it.value().get<double>() << '\n';
        }
      }
      rows.push_back(row);
    }
  }
  json report = {{"config_hash", config_hash(base)}, {"seeds", req.seeds}, {"rows", rows}};
  write_text_atomic(out / "ablation.json", report.dump(2) + "\n");
  write_text_atomic(out / "ablation.csv", csv.str());
  return report;
}

}  // namespace fm::app
