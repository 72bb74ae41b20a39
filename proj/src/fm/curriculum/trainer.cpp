// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/curriculum/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fm/flow/rectified_flow.hpp"
#include "fm/metrics/evaluate.hpp"
#include "fm/model/checkpoint.hpp"
#include "fm/util/errors.hpp"

namespace fm::curriculum {

namespace fs = std::filesystem;

StageSelect parse_stage_select(const std::string& s) {
  if (s == "all") return StageSelect::All;
  if (s == "pretrain") return StageSelect::Pretrain;
  if (s == "finetune") return StageSelect::Finetune;
  throw ConfigError("unknown stage '" + s + "' (expected all, pretrain or finetune)");
}

const char* stage_select_name(StageSelect s) {
  switch (s) {
    case StageSelect::All: return "all";
    case StageSelect::Pretrain: return "pretrain";
    case StageSelect::Finetune: return "finetune";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (batch < 1) throw ConfigError("train.batch must be at least 1");
  if (!(adam.lr > 0.0) || !std::isfinite(adam.lr)) throw ConfigError("train.lr must be positive");
  if (adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0) throw ConfigError("train betas must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("train.eps must be positive");
  if (adam.weight_decay < 0.0) throw ConfigError("train.weight_decay must be non-negative");
  if (grad_clip < 0.0) throw ConfigError("train.grad_clip must be non-negative");
  if (lr_schedule != "constant" && lr_schedule != "cosine") throw ConfigError("train.lr_schedule must be constant or cosine");
  if (!(lr_min_ratio >= 0.0 && lr_min_ratio <= 1.0)) throw ConfigError("train.lr_min_ratio must lie in [0, 1]");
  if (warmup_steps < 0) throw ConfigError("train.warmup_steps must be non-negative");
  if (eval_samples < 2) throw ConfigError("train.eval_samples must be at least 2");
  if (eval_steps < 1) throw ConfigError("train.eval_steps must be at least 1");
  if (checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be at least 1");
  if (validation_per_task < 1) throw ConfigError("train.validation_per_task must be at least 1");
  curriculum.validate();
}

json to_json(const TrainConfig& c) {
  return {
      {"seed", c.seed},
      {"batch", c.batch},
      {"lr", c.adam.lr},
      {"beta1", c.adam.beta1},
      {"beta2", c.adam.beta2},
      {"eps", c.adam.eps},
      {"weight_decay", c.adam.weight_decay},
      {"grad_clip", c.grad_clip},
      {"lr_schedule", c.lr_schedule},
      {"lr_min_ratio", c.lr_min_ratio},
      {"warmup_steps", c.warmup_steps},
      {"stage", stage_select_name(c.stage)},
      {"eval_samples", c.eval_samples},
      {"eval_steps", c.eval_steps},
      {"checkpoint_every", c.checkpoint_every},
      {"validation_per_task", c.validation_per_task},
      {"curriculum",
       {{"enabled", c.curriculum.enabled},
        {"epoch_scale", c.curriculum.epoch_scale},
        {"reference_pretrain_epochs", c.curriculum.reference_pretrain_epochs},
        {"reference_window", c.curriculum.reference_window},
        {"finetune_tail_epochs", c.curriculum.finetune_tail_epochs},
        {"replay_floor", c.curriculum.replay_floor},
        {"mixture", c.curriculum.mixture}}},
  };
}

TrainConfig train_config_from_json(const json& j) {
  static const std::vector<std::string> known = {"seed", "batch", "lr", "beta1", "beta2", "eps", "weight_decay", "grad_clip", "lr_schedule", "lr_min_ratio", "warmup_steps", "stage",
                                                 "eval_samples", "eval_steps", "checkpoint_every", "validation_per_task", "curriculum"};
  static const std::vector<std::string> known_cur = {"enabled", "epoch_scale", "reference_pretrain_epochs", "reference_window",
                                                     "finetune_tail_epochs", "replay_floor", "mixture"};
  if (!j.is_object()) throw ConfigError("train config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) throw ConfigError("unknown train config key '" + it.key() + "'");
  TrainConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.batch = j.value("batch", c.batch);
    c.adam.lr = j.value("lr", c.adam.lr);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.eps = j.value("eps", c.adam.eps);
    c.adam.weight_decay = j.value("weight_decay", c.adam.weight_decay);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.lr_schedule = j.value("lr_schedule", c.lr_schedule);
    c.lr_min_ratio = j.value("lr_min_ratio", c.lr_min_ratio);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.stage = parse_stage_select(j.value("stage", std::string("all")));
    c.eval_samples = j.value("eval_samples", c.eval_samples);
    c.eval_steps = j.value("eval_steps", c.eval_steps);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.validation_per_task = j.value("validation_per_task", c.validation_per_task);
    if (j.contains("curriculum")) {
      const auto& k = j["curriculum"];
      if (!k.is_object()) throw ConfigError("train.curriculum must be an object");
      for (auto it = k.begin(); it != k.end(); ++it)
        if (std::find(known_cur.begin(), known_cur.end(), it.key()) == known_cur.end())
          throw ConfigError("unknown curriculum config key '" + it.key() + "'");
      auto& cc = c.curriculum;
      cc.enabled = k.value("enabled", cc.enabled);
      cc.epoch_scale = k.value("epoch_scale", cc.epoch_scale);
      cc.reference_pretrain_epochs = k.value("reference_pretrain_epochs", cc.reference_pretrain_epochs);
      cc.reference_window = k.value("reference_window", cc.reference_window);
      cc.finetune_tail_epochs = k.value("finetune_tail_epochs", cc.finetune_tail_epochs);
      cc.replay_floor = k.value("replay_floor", cc.replay_floor);
      if (k.contains("mixture")) cc.mixture = k["mixture"].get<std::array<double, 4>>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Trainer::Trainer(model::Mft<float>& model, const Dataset& data, TrainConfig cfg, fs::path out_dir, json header_extra)
    : model_(model), data_(data), cfg_(std::move(cfg)), out_(std::move(out_dir)), header_extra_(std::move(header_extra)), adam_(cfg_.adam) {
  cfg_.validate();
  if (!(data_.layout == model_.config().layout)) throw ConfigError("dataset layout '" + data_.layout.name + "' differs from the model layout");
  std::vector<const MotionTensor*> fit;
  for (const auto& c : data_.clips) {
    if (c.heldout) continue;
    train_clips_.push_back(c.index);
    fit.push_back(c.base.get());
    fit.push_back(c.edited.get());
    fit.push_back(c.styled.get());
  }
  if (train_clips_.empty()) throw ConfigError("dataset has no training clips");
  model_.normalizer = model::Normalizer::fit(fit);

  std::vector<const Clip*> held;
  for (const auto& c : data_.clips)
    if (c.heldout) held.push_back(&c);
  if (held.empty())
    for (int i : train_clips_) held.push_back(&data_.clips[static_cast<size_t>(i)]);
  for (TaskKind k : all_tasks())
    for (int i = 0; i < cfg_.validation_per_task; ++i) {
      const Clip& c = *held[static_cast<size_t>(i) % held.size()];
      Rng rng(derive_seed(cfg_.seed ^ 0xA11DA7E5ull, static_cast<uint64_t>(c.index), static_cast<uint64_t>(k)));
      validation_.push_back(make_instance(k, c, rng));
    }

  state_.schedule = build_schedule(cfg_.curriculum.window());
  state_.stage = Stage::Pretrain;
  fs::create_directories(out_);
}

std::vector<Trainer::Phase> Trainer::phases() const {
  const auto& c = cfg_.curriculum;
  if (!c.enabled) return {{"uniform", c.pretrain_epochs() + c.finetune_epochs()}};
  std::vector<Phase> out;
  if (cfg_.stage != StageSelect::Finetune) out.push_back({"pretrain", c.pretrain_epochs()});
  if (cfg_.stage != StageSelect::Pretrain) out.push_back({"finetune", c.finetune_epochs()});
  return out;
}

json Trainer::loop_state(int phase_epoch) const {
  json h = json::object();
  for (const auto& [k, v] : state_.history) h[task_name(k)] = v;
  const auto ph = phases();
  const bool done = phase_index_ >= ph.size();
  return {{"phase", done ? std::string("done") : ph[phase_index_].name},
          {"completed", done && !ph.empty() ? ph.back().name : std::string()},
          {"phase_epoch", phase_epoch},
          {"epoch", global_epoch_},
          {"step", step_},
          {"best_validation", best_val_},
          {"has_best", has_best_},
          {"last_loss", last_loss_},
          {"fid_history", h}};
}

void Trainer::checkpoint(const fs::path& path, int phase_epoch) const {
  model::TrainingSnapshot snap;
  snap.optimizer_steps = adam_.steps();
  auto& self = const_cast<Adam<float>&>(adam_);
  if (self.first_moments().empty()) {
    for (const auto* p : model_.params().all()) {
      snap.first_moments.emplace_back(p->value.shape);
      snap.second_moments.emplace_back(p->value.shape);
    }
  } else {
    snap.first_moments = self.first_moments();
    snap.second_moments = self.second_moments();
  }
  snap.state = loop_state(phase_epoch);
  json extra = header_extra_;
  extra["train_config"] = to_json(cfg_);
  save_checkpoint(path, model_, &snap, extra);
}

void Trainer::resume(const fs::path& path) {
  auto ck = model::load_checkpoint(path);
  if (!ck.training) throw ConfigError("checkpoint '" + path.string() + "' has no training state to resume from");
  if (!(ck.model->config().layout == model_.config().layout)) throw ConfigError("checkpoint layout differs from the model layout");
  const auto& src = ck.model->params().all();
  const auto& dst = model_.params().all();
  if (src.size() != dst.size()) throw ConfigError("checkpoint parameters do not match the configured model");
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i]->name != dst[i]->name || src[i]->value.shape != dst[i]->value.shape)
      throw ConfigError("checkpoint parameter '" + src[i]->name + "' does not match the configured model");
    dst[i]->value = src[i]->value;
  }
  model_.normalizer = ck.model->normalizer;
  adam_.restore(ck.training->optimizer_steps, ck.training->first_moments, ck.training->second_moments);
  const json& s = ck.training->state;
  step_ = s.at("step").get<int64_t>();
  global_epoch_ = s.at("epoch").get<int>();
  best_val_ = s.value("best_validation", 0.0);
  has_best_ = s.value("has_best", false);
  last_loss_ = s.value("last_loss", 0.0);
  state_.history.clear();
  for (auto it = s["fid_history"].begin(); it != s["fid_history"].end(); ++it) state_.history[parse_task(it.key())] = it.value().get<std::vector<double>>();
  const auto ph = phases();
  const std::string name = s.at("phase").get<std::string>();
  phase_index_ = ph.size();
  phase_epoch_ = 0;
  for (size_t i = 0; i < ph.size(); ++i)
    if (ph[i].name == name) {
      phase_index_ = i;
      phase_epoch_ = s.at("phase_epoch").get<int>();
    }
  if (phase_index_ == ph.size()) {
    // Finished runs continue after their last phase; a phase that is not part
    // of this run (a pre-training checkpoint resumed with --stage finetune)
    // restarts the first phase.
    phase_index_ = 0;
    if (name == "done") {
      const std::string last = s.value("completed", std::string());
      for (size_t i = 0; i < ph.size(); ++i)
        if (ph[i].name == last) phase_index_ = i + 1;
    }
  }
}

void Trainer::log(const json& record) {
  std::ofstream f(out_ / "train.jsonl", std::ios::app);
  f << record.dump() << '\n';
  if (!f) throw IoError("cannot append to '" + (out_ / "train.jsonl").string() + "'");
  if (on_record) on_record(record);
}

int64_t Trainer::total_steps() const {
  const int64_t per_epoch = (static_cast<int64_t>(train_clips_.size()) + cfg_.batch - 1) / cfg_.batch;
  int64_t epochs = 0;
  for (const auto& p : phases()) epochs += p.epochs;
  return per_epoch * epochs;
}

double Trainer::lr_scale() const {
  double s = 1.0;
  if (cfg_.lr_schedule == "cosine") {
    const double total = static_cast<double>(std::max<int64_t>(1, total_steps()));
    const double x = std::min(1.0, static_cast<double>(step_) / total);
    s = cfg_.lr_min_ratio + (1.0 - cfg_.lr_min_ratio) * 0.5 * (1.0 + std::cos(M_PI * x));
  }
  if (step_ < cfg_.warmup_steps) s *= static_cast<double>(step_ + 1) / cfg_.warmup_steps;
  return s;
}

double Trainer::train_step(const std::string& phase, int phase_epoch, const std::vector<int>& clips, std::string& task_label) {
  Rng rng(derive_seed(cfg_.seed, static_cast<uint64_t>(step_), 0x57E9ull));
  std::vector<TaskSample> batch;
  if (phase == "pretrain") {
    PretrainDraw draw = pretrain_task_sampler(rng);
    task_label = recipe_name(draw.recipe);
    for (int ci : clips) {
      if (draw.recipe == Recipe::MaskedReconstruction) draw.mask_ratio = rng.uniform();
      batch.push_back(make_pretrain_instance(draw, data_.clips[static_cast<size_t>(ci)], rng));
    }
  } else {
    TaskKind k;
    if (phase == "uniform") {
      k = sample_uniform_task(rng);
    } else {
      state_.epoch = phase_epoch;
      k = sample_training_task(state_, rng, cfg_.curriculum.mixture);
    }
    task_label = task_name(k);
    for (int ci : clips) batch.push_back(make_instance(k, data_.clips[static_cast<size_t>(ci)], rng));
  }

  nc::Tape<float> tape;
  std::vector<nc::Var<float>> preds;
  std::vector<nc::Tensor<float>> targets;
  for (const auto& s : batch) {
    const auto x0 = model_.normalizer.normalize<float>(*s.target);
    const auto x1 = flow::gaussian_noise<float>(x0.size(), rng);
    const double t = flow::sample_timestep(rng);
    const auto xt = flow::interpolate<float>(x0, x1, t);
    const int D = s.target->features();
    preds.push_back(model_.forward(tape, s.kind, s.cond, xt, s.target->frames, t));
    targets.emplace_back(nc::Shape{s.target->frames, D}, flow::velocity_target<float>(x0, x1));
  }
  auto loss = flow::rf_loss<float>(tape, preds, targets);
  const double value = loss.value()[0];
  if (!std::isfinite(value)) throw NumericError("non-finite loss");
  model_.params().zero_grad();
  tape.backward(loss);
  clip_grad_norm(model_.params().all(), cfg_.grad_clip);
  adam_.step(model_.params().all(), lr_scale());
  return value;
}

double Trainer::validation_loss() const {
  double total = 0.0;
  int64_t count = 0;
  for (size_t i = 0; i < validation_.size(); ++i) {
    const auto& s = validation_[i];
    Rng rng(derive_seed(cfg_.seed ^ 0x7A11D5ull, i));
    const auto x0 = model_.normalizer.normalize<float>(*s.target);
    const auto x1 = flow::gaussian_noise<float>(x0.size(), rng);
    const double t = flow::sample_timestep(rng);
    const auto xt = flow::interpolate<float>(x0, x1, t);
    const auto v = model_.velocity(s.kind, s.cond, xt, s.target->frames, t);
    total += flow::rf_loss_value<float>(v, x0, x1) * static_cast<double>(v.size());
    count += static_cast<int64_t>(v.size());
  }
  return total / static_cast<double>(count);
}

void Trainer::evaluate(int global_epoch) {
  // Active tasks plus the entry introduced next, so every task has a
  // baseline evaluation by the time it joins the replay pool.
  std::vector<TaskKind> tasks;
  for (const auto& e : state_.schedule)
    if (e.introduced <= state_.epoch + cfg_.curriculum.window()) tasks.insert(tasks.end(), e.tasks.begin(), e.tasks.end());
  metrics::FeatureExtractor fx(data_.layout);
  metrics::EvalOptions opt;
  opt.steps = cfg_.eval_steps;
  opt.seed = derive_seed(cfg_.seed, 0xE7A1ull);
  opt.max_samples = cfg_.eval_samples;
  std::ofstream csv(out_ / "eval.csv", std::ios::app);
  for (TaskKind k : tasks) {
    auto held = data_.of_task(k, true);
    if (held.size() < 2) held = data_.of_task(k, false);
    const auto r = metrics::evaluate_task(model_, k, held, held, fx, opt, "heldout");
    json rec = {{"type", "eval"}, {"epoch", global_epoch}, {"task", task_name(k)}, {"fid", r.fid.value_or(0.0)}};
    rec["avg_err"] = r.avg_err ? json(*r.avg_err) : json(nullptr);
    log(rec);
    for (const auto& [name, value] : metrics::metric_rows(r)) csv << global_epoch << ',' << task_name(k) << ',' << name << ',' << value << '\n';
    state_.record({k, global_epoch, r.fid.value_or(0.0)});
  }
}

TrainResult Trainer::run() {
  TrainResult res;
  res.log = out_ / "train.jsonl";
  res.last_checkpoint = out_ / "last.ckpt";
  res.best_checkpoint = out_ / "best.ckpt";
  res.final_checkpoint = out_ / "final.ckpt";
  if (step_ == 0 && global_epoch_ == 0) {
    std::ofstream(out_ / "train.jsonl", std::ios::trunc);
    std::ofstream(out_ / "eval.csv", std::ios::trunc) << "epoch,task,metric,value\n";
    checkpoint(res.last_checkpoint, 0);
  }
  const auto ph = phases();
  const int B = cfg_.batch;
  const int window = cfg_.curriculum.window();
  for (; phase_index_ < ph.size(); ++phase_index_, phase_epoch_ = 0) {
    const Phase& phase = ph[phase_index_];
    state_.stage = phase.name == "pretrain" ? Stage::Pretrain : Stage::Finetune;
    if (phase_epoch_ == 0) log({{"type", "stage"}, {"stage", phase.name}, {"epoch", global_epoch_}, {"epochs", phase.epochs}});
    for (; phase_epoch_ < phase.epochs; ++phase_epoch_) {
      if (stop_after_epochs >= 0 && global_epoch_ >= stop_after_epochs) {
        checkpoint(res.last_checkpoint, phase_epoch_);
        res.steps = step_;
        res.epochs = global_epoch_;
        res.last_loss = last_loss_;
        res.best_validation = best_val_;
        return res;
      }
      if (phase.name == "finetune") {
        state_.epoch = phase_epoch_;
        state_.refresh_replay(cfg_.curriculum.replay_floor);
        if (phase_epoch_ % window == 0 && phase_epoch_ / window < static_cast<int>(state_.schedule.size())) {
          json names = json::array();
          for (TaskKind k : state_.newest()) names.push_back(task_name(k));
          json replay = json::object();
          for (const auto& [k, w] : state_.replay) replay[task_name(k)] = w;
          log({{"type", "introduce"}, {"epoch", global_epoch_}, {"tasks", names}, {"replay", replay}});
        }
      }
      std::vector<int> perm = train_clips_;
      Rng prng(derive_seed(cfg_.seed, static_cast<uint64_t>(global_epoch_), 0xE90Cull));
      std::shuffle(perm.begin(), perm.end(), prng.engine());
      for (size_t start = 0; start < perm.size(); start += static_cast<size_t>(B)) {
        std::vector<int> clips(perm.begin() + static_cast<std::ptrdiff_t>(start),
                               perm.begin() + static_cast<std::ptrdiff_t>(std::min(perm.size(), start + static_cast<size_t>(B))));
        std::string label;
        double loss;
        try {
          loss = train_step(phase.name, phase_epoch_, clips, label);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(global_epoch_) + ", step " + std::to_string(step_) +
                             "; last good checkpoint: " + res.last_checkpoint.string());
        }
        last_loss_ = loss;
        log({{"epoch", global_epoch_}, {"step", step_}, {"stage", phase.name}, {"task", label}, {"loss", loss}});
        ++step_;
      }
      ++global_epoch_;
      const int done = phase_epoch_ + 1;
      if (phase.name == "finetune" && (done % window == 0 || done == phase.epochs)) {
        state_.epoch = phase_epoch_;
        evaluate(global_epoch_);
      }
      const double val = validation_loss();
      log({{"type", "validation"}, {"epoch", global_epoch_}, {"loss", val}});
      if (!has_best_ || val < best_val_) {
        best_val_ = val;
        has_best_ = true;
        checkpoint(res.best_checkpoint, done);
      }
      if (global_epoch_ % cfg_.checkpoint_every == 0 || done == phase.epochs) checkpoint(res.last_checkpoint, done);
    }
  }
  checkpoint(res.final_checkpoint, 0);
  checkpoint(res.last_checkpoint, 0);
  res.steps = step_;
  res.epochs = global_epoch_;
  res.last_loss = last_loss_;
  res.best_validation = best_val_;
  return res;
}

}  // namespace fm::curriculum
