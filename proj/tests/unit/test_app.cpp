// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "fm/app/app.hpp"
#include "fm/motion/io.hpp"
#include "fm/util/errors.hpp"

using namespace fm;
using namespace fm::app;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fm_test_app_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json tiny_config(const fs::path& dir) {
  return {{"seed", 3},
          {"output_dir", (dir / "run").string()},
          {"dataset_dir", (dir / "data").string()},
          {"data", {{"seed", 5}, {"family_counts", {{"walk-line", 3}, {"jump", 3}, {"arm-wave", 3}, {"walk-circle", 3}}}, {"min_frames", 16}, {"max_frames", 20}, {"heldout_fraction", 0.34}}},
          {"model", {{"width", 16}, {"heads", 2}, {"blocks", 1}, {"max_frames", 40}}},
          {"train",
           {{"batch", 4},
            {"lr", 0.001},
            {"eval_samples", 2},
            {"eval_steps", 2},
            {"validation_per_task", 1},
            {"curriculum", {{"epoch_scale", 1.0}, {"reference_pretrain_epochs", 1}, {"reference_window", 1}, {"finetune_tail_epochs", 1}}}}}};
}

fs::path write_config(const fs::path& dir, const json& j) {
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::ifstream in(p);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(json::parse(line));
  return out;
}

// Trained once and shared by the sampling and evaluation cases.
struct TinyRun {
  fs::path dir, config, data;
  curriculum::TrainResult result;
  TinyRun() {
    dir = scratch("shared");
    config = write_config(dir, tiny_config(dir));
    const auto c = load_run_config(config);
    data = make_data(c);
    result = train(c, {});
  }
  static const TinyRun& get() {
    static TinyRun r;
    return r;
  }
};

}  // namespace

TEST_CASE("run config round-trips and hashes without output paths") {
  const auto dir = scratch("config");
  const auto c = run_config_from_json(tiny_config(dir));
  const auto back = run_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(config_hash(c).size() == 16);
  auto moved = c;
  moved.output_dir = "/elsewhere";
  CHECK(config_hash(moved) == config_hash(c));
  auto reseeded = c;
  reseeded.seed = 4;
  CHECK(config_hash(reseeded) != config_hash(c));
  CHECK(c.model.init_seed == 3);
  CHECK(c.train.seed == 3);

  auto j = tiny_config(dir);
  j["bogus"] = 1;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = tiny_config(dir);
  j["precision"] = "float16";
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = tiny_config(dir);
  j["guidance"] = {{"text-gen", {{"lambda_c", 3.0}}}};
  CHECK(run_config_from_json(j).guidance.at(TaskKind::TextGeneration).lambda_c == 3.0);
  j["guidance"] = {{"text-gen", {{"lambda_s", 3.0}}}};
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j["guidance"] = {{"reconstruction", {{"lambda_c", 3.0}}}};
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), ConfigError);
  std::ofstream(dir / "broken.json") << "{\"seed\": ";
  CHECK_THROWS_AS(load_run_config(dir / "broken.json"), ConfigError);

  // Relative paths resolve against the config file.
  j = tiny_config(dir);
  j["output_dir"] = "out";
  const auto p = write_config(dir, j);
  CHECK(fs::path(load_run_config(p).output_dir) == (dir / "out").lexically_normal());
  fs::remove_all(dir);
}

TEST_CASE("make-data writes every task kind and is idempotent") {
  const auto dir = scratch("data");
  auto c = run_config_from_json(tiny_config(dir));
  const auto out = make_data(c);
  const auto manifest = json::parse(slurp(out / "manifest.json"));
  std::set<std::string> tasks;
  for (const auto& s : manifest["samples"]) tasks.insert(s["task"].get<std::string>());
  CHECK(tasks.size() == static_cast<size_t>(kTaskCount));
  CHECK(manifest["config_hash"] == config_hash(c));
  const auto first = slurp(out / "manifest.json");
  make_data(c);
  CHECK(slurp(out / "manifest.json") == first);

  c.data.family_counts["jump"] = 0;
  const auto other = make_data(c, dir / "nojump");
  const auto m2 = json::parse(slurp(other / "manifest.json"));
  for (const auto& clip : m2["clips"]) CHECK(clip["params"]["family"] != "jump");
  CHECK(m2["clips"].size() == 9);
  fs::remove_all(dir);
}

TEST_CASE("training logs stages, evaluations and checkpoints") {
  const auto& run = TinyRun::get();
  const auto log = read_jsonl(run.result.log);
  REQUIRE_FALSE(log.empty());
  std::vector<std::string> stages;
  int evals = 0;
  for (const auto& r : log) {
    if (r.value("type", "") == "stage") stages.push_back(r["stage"]);
    if (r.value("type", "") == "eval") ++evals;
  }
  CHECK(stages == std::vector<std::string>{"pretrain", "finetune"});
  CHECK(evals > 0);
  CHECK(fs::exists(run.result.final_checkpoint));
  CHECK(fs::exists(run.result.best_checkpoint));
  const auto ck = model::load_checkpoint(run.result.final_checkpoint);
  CHECK(ck.header["config_hash"] == config_hash(load_run_config(run.config)));
  CHECK(json::parse(slurp(run.dir / "run" / "config.json"))["config_hash"] == ck.header["config_hash"]);
}

TEST_CASE("pre-training alone uses only the three recipes") {
  const auto dir = scratch("pretrain");
  auto j = tiny_config(dir);
  j["train"]["curriculum"]["reference_pretrain_epochs"] = 3;
  const auto c = load_run_config(write_config(dir, j));
  make_data(c);
  TrainOptions o;
  o.stage = "pretrain";
  const auto r = train(c, o);
  CHECK(r.epochs == 3);
  std::set<std::string> tasks;
  for (const auto& rec : read_jsonl(r.log))
    if (rec.contains("loss") && !rec.contains("type")) tasks.insert(rec["task"].get<std::string>());
  CHECK(tasks == std::set<std::string>{"masked-reconstruction", "traj-gen", "inbetween"});

  // Resuming continues the epoch counter.
  o.stage = "finetune";
  o.resume = r.last_checkpoint.string();
  const auto r2 = train(c, o);
  CHECK(r2.epochs == 3 + 7);
  CHECK(r2.steps > r.steps);
  o.stage = "sideways";
  CHECK_THROWS_AS(train(c, o), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("training without a dataset is an I/O error") {
  const auto dir = scratch("nodata");
  CHECK_THROWS_AS(train(run_config_from_json(tiny_config(dir)), {}), IoError);
  fs::remove_all(dir);
}

TEST_CASE("sampling records guidance strengths and is repeatable") {
  const auto& run = TinyRun::get();
  const auto ck = model::load_checkpoint(run.result.final_checkpoint);
  const auto dir = scratch("sample");
  std::ofstream(dir / "text.json") << R"({"task": "text-gen", "text": "a person jumps twice", "frames": 18})";
  SampleRequest req;
  req.task = "text-gen";
  req.condition = (dir / "text.json").string();
  req.seed = 11;
  req.steps = 4;
  const auto a = sample(ck, req), b = sample(ck, req);
  CHECK(a.motion == b.motion);
  CHECK(a.motion.frames == 18);
  CHECK(a.metadata["lambda_c"] == 5.75);
  CHECK(a.metadata["lambda_s"].is_null());
  CHECK(a.metadata["steps"] == 4);
  CHECK(a.metadata["seed"] == 11);
  req.steps = 1;
  CHECK(sample(ck, req).motion.all_finite());
  req.steps = 0;
  CHECK_THROWS_AS(sample(ck, req), ConfigError);
  req.steps = 4;
  req.task = "inbetween";
  CHECK_THROWS_AS(sample(ck, req), LegalityError);

  // Editing: source from the dataset, text from the condition file.
  const auto src = dir / "source.fmm";
  const auto ds = load_dataset(run.data);
  save_motion(*ds.clips[0].base, src);
  std::ofstream(dir / "edit.json") << R"({"text": "do it faster"})";
  SampleRequest e;
  e.task = "text-edit";
  e.condition = (dir / "edit.json").string();
  e.source = src.string();
  e.require_source = true;
  e.steps = 3;
  const auto ed = sample(ck, e);
  CHECK(ed.metadata["lambda_c"] == 2.25);
  CHECK(ed.metadata["lambda_s"] == 2.25);
  CHECK(ed.motion.frames == ds.clips[0].base->frames);

  e.source.clear();
  CHECK_THROWS_AS(sample(ck, e), LegalityError);
  e.source = src.string();
  e.task = "style-transfer";
  CHECK_THROWS_AS(sample(ck, e), LegalityError);
  e.task = "text-gen";
  CHECK_THROWS_AS(sample(ck, e), LegalityError);

  std::ofstream(dir / "traj.json") << R"({"trajectory": {"motion": "source.fmm", "joints": [0], "frames": "all"}})";
  SampleRequest t;
  t.task = "traj-gen";
  t.condition = (dir / "traj.json").string();
  t.steps = 2;
  const auto tr = sample(ck, t);
  CHECK(tr.motion.frames == ds.clips[0].base->frames);
  CHECK(tr.metadata["lambda_c"] == 1.5);

  std::ofstream(dir / "bad.json") << R"({"txt": "typo"})";
  t.condition = (dir / "bad.json").string();
  CHECK_THROWS_AS(sample(ck, t), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("evaluation reports both splits and rejects unknown tasks") {
  const auto& run = TinyRun::get();
  const auto dir = scratch("eval");
  EvalRequest r;
  r.checkpoint = run.result.final_checkpoint.string();
  r.dataset = run.data.string();
  r.tasks = {"traj-gen", "text-edit"};
  r.split = "both";
  r.steps = 2;
  r.max_samples = 3;
  r.out = dir;
  const auto rep = evaluate(r);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : rep["tasks"]) seen.insert({t["task"].get<std::string>(), t["split"].get<std::string>()});
  CHECK(seen.size() == 4);
  CHECK(seen.count({"traj-gen", "train"}) == 1);
  CHECK(seen.count({"text-edit", "heldout"}) == 1);
  CHECK(fs::exists(dir / "report.json"));
  const auto csv = slurp(dir / "report.csv");
  CHECK(csv.rfind("task,split,metric,value\n", 0) == 0);
  CHECK(csv.find("traj-gen,heldout,avg_err,") != std::string::npos);
  CHECK(csv.find("text-edit,train,R@1,") != std::string::npos);
  CHECK(evaluate(r) == rep);

  r.tasks = {"dance"};
  try {
    evaluate(r);
    FAIL("expected an unknown-task error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("text-gen") != std::string::npos);
  }
  r.tasks = {"traj-gen"};
  r.split = "validation";
  CHECK_THROWS_AS(evaluate(r), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("ablation variants are validated and train side by side") {
  RunConfig c;
  for (const auto& v : variant_names()) CHECK_NOTHROW(apply_variant(c, v));
  CHECK_FALSE(c.train.curriculum.enabled);
  CHECK_FALSE(c.model.instruction_modulation);
  CHECK_THROWS_AS(apply_variant(c, "no-rectified-flow"), ConfigError);

  const auto dir = scratch("ablate");
  AblateRequest r;
  r.config = write_config(dir, tiny_config(dir)).string();
  r.variants = {"aligned-1d-rope", "1d-learnable"};
  r.eval_steps = 2;
  r.eval_samples = 2;
  r.out = dir / "out";
  const auto rep = ablate(r);
  REQUIRE(rep["rows"].size() == 2);
  CHECK(rep["rows"][0]["variant"] == "aligned-1d-rope");
  CHECK(rep["rows"][1]["variant"] == "1d-learnable");
  CHECK(rep["rows"][0]["seed"] == rep["rows"][1]["seed"]);
  CHECK(rep["rows"][0]["metrics"]["traj-gen"].contains("avg_err"));

  r.variants = {"no-curriculum"};
  r.out = dir / "uniform";
  ablate(r);
  std::set<std::string> stages;
  std::set<std::string> tasks;
  for (const auto& rec : read_jsonl(dir / "uniform" / "no-curriculum" / "seed0" / "train.jsonl")) {
    if (rec.value("type", "") == "stage") stages.insert(rec["stage"].get<std::string>());
    if (!rec.contains("type")) tasks.insert(rec["task"].get<std::string>());
  }
  CHECK(stages == std::set<std::string>{"uniform"});
  CHECK(tasks.size() > 3);

  r.variants = {"1d-learnable", "bogus"};
  CHECK_THROWS_AS(ablate(r), ConfigError);
  fs::remove_all(dir);
}
