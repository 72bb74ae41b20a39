// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/model/checkpoint.hpp"

#include "fm/motion/io.hpp"
#include "fm/util/errors.hpp"

namespace fm::model {

namespace {

constexpr const char* kFormat = "flowmotion-checkpoint";
constexpr int kVersion = 1;

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Mft<float>& m, const TrainingSnapshot* training, const json& extra) {
  json h;
  h["format"] = kFormat;
  h["version"] = kVersion;
  h["dtype"] = "float32";
  h["endianness"] = "little";
  h["config"] = to_json(m.config());
  h["layout_hash"] = m.config().layout.hash();
  h["normalizer"] = {{"mean", m.normalizer.mean}, {"stddev", m.normalizer.stddev}};
  json params = json::array();
  std::vector<char> payload;
  for (const auto* p : m.params().all()) {
    if (!std::all_of(p->value.data.begin(), p->value.data.end(), [](float v) { return std::isfinite(v); }))
      throw NumericError("checkpoint: parameter '" + p->name + "' holds non-finite values");
    params.push_back({{"name", p->name}, {"shape", p->value.shape}});
    append_floats(payload, p->value.data);
  }
  h["params"] = params;
  if (training) {
    if (training->first_moments.size() != m.params().all().size() || training->second_moments.size() != m.params().all().size())
      throw std::invalid_argument("checkpoint: optimizer moments do not match the parameter list");
    for (const auto& t : training->first_moments) append_floats(payload, t.data);
    for (const auto& t : training->second_moments) append_floats(payload, t.data);
    h["optimizer"] = {{"kind", "adam"}, {"steps", training->optimizer_steps}, {"moments", true}};
    h["training"] = training->state;
  }
  for (auto it = extra.begin(); it != extra.end(); ++it) h[it.key()] = it.value();
  write_framed(path, h, payload);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Framed f = read_framed(path);
  const json& h = f.header;
  const std::string where = "checkpoint '" + path.string() + "'";
  if (h.value("format", "") != kFormat) throw IoError(where + ": not a flowmotion checkpoint");
  if (h.value("version", 0) != kVersion) throw IoError(where + ": unsupported version " + h.value("version", json(0)).dump());
  if (h.value("dtype", "") != "float32") throw IoError(where + ": unsupported dtype");
  Checkpoint ck;
  ck.header = h;
  ModelConfig cfg;
  try {
    cfg = model_config_from_json(h.at("config"));
  } catch (const json::exception& e) {
    throw IoError(where + ": bad config: " + e.what());
  }
  if (h.contains("layout_hash") && h["layout_hash"].get<std::string>() != cfg.layout.hash()) throw IoError(where + ": layout hash mismatch");
  ck.model = std::make_unique<Mft<float>>(cfg);
  auto& m = *ck.model;
  try {
    m.normalizer.mean = h.at("normalizer").at("mean").get<std::vector<double>>();
    m.normalizer.stddev = h.at("normalizer").at("stddev").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw IoError(where + ": bad normalizer: " + e.what());
  }
  if (static_cast<int>(m.normalizer.mean.size()) != cfg.layout.features || m.normalizer.stddev.size() != m.normalizer.mean.size())
    throw IoError(where + ": normalizer size does not match the layout");
  const auto& list = h.at("params");
  const auto& params = m.params().all();
  if (list.size() != params.size())
    throw IoError(where + ": " + std::to_string(list.size()) + " parameters stored, model has " + std::to_string(params.size()));
  size_t offset = 0;
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    const auto name = list[i].at("name").get<std::string>();
    const auto shape = list[i].at("shape").get<nc::Shape>();
    if (name != p.name || shape != p.value.shape)
      throw IoError(where + ": parameter " + std::to_string(i) + " is '" + name + "' " + nc::shape_str(shape) + ", model expects '" + p.name + "' " +
                    nc::shape_str(p.value.shape));
    p.value.data = read_floats(f, offset, p.value.data.size(), where);
    offset += p.value.data.size() * 4;
  }
  if (h.contains("optimizer")) {
    TrainingSnapshot s;
    s.optimizer_steps = h["optimizer"].at("steps").get<int64_t>();
    for (auto* moments : {&s.first_moments, &s.second_moments})
      for (const auto* p : params) {
        nc::Tensor<float> t(p->value.shape);
        t.data = read_floats(f, offset, t.data.size(), where);
        offset += t.data.size() * 4;
        moments->push_back(std::move(t));
      }
    s.state = h.value("training", json::object());
    ck.training = std::move(s);
  }
  if (offset != f.payload.size())
    throw IoError(where + ": payload has " + std::to_string(f.payload.size()) + " bytes, manifest describes " + std::to_string(offset));
  return ck;
}

}  // namespace fm::model
