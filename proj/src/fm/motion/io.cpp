// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/motion/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fm/util/errors.hpp"

namespace fm {

namespace fs = std::filesystem;

namespace {

uint32_t to_le(uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
  return v;
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json motion_header(const MotionTensor& m, const json& metadata) {
  json h = {
      {"format", "flowmotion-motion"},
      {"layout", m.layout.name},
      {"joints", m.layout.joints},
      {"features", m.layout.features},
      {"frames", m.frames},
      {"fps", m.layout.fps},
      {"dtype", "float32"},
      {"endianness", "little"},
  };
  if (!metadata.empty()) h["metadata"] = metadata;
  return h;
}

template <typename T>
T header_field(const json& h, const char* key, const fs::path& path) {
  if (!h.contains(key)) throw IoError("'" + path.string() + "': header lacks field '" + key + "'");
  try {
    return h.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "': header field '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string hex_hash(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

Framed read_framed(const fs::path& path) {
  const std::string bytes = read_all(path);
  const size_t nl = bytes.find('\n');
  if (nl == std::string::npos) throw IoError("'" + path.string() + "': missing header terminator (no newline in " + std::to_string(bytes.size()) + " bytes)");
  Framed f;
  try {
    f.header = json::parse(bytes.substr(0, nl));
  } catch (const json::parse_error& e) {
    throw IoError("'" + path.string() + "': malformed header at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  f.header_bytes = nl + 1;
  f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(nl + 1), bytes.end());
  return f;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

void write_framed(const fs::path& path, const json& header, const std::vector<char>& payload) {
  std::string text = header.dump();
  text.push_back('\n');
  text.append(payload.begin(), payload.end());
  write_text_atomic(path, text);
}

void append_floats(std::vector<char>& out, std::span<const float> values) {
  const size_t start = out.size();
  out.resize(start + values.size() * 4);
  for (size_t i = 0; i < values.size(); ++i) {
    const uint32_t v = to_le(std::bit_cast<uint32_t>(values[i]));
    std::memcpy(out.data() + start + i * 4, &v, 4);
  }
}

std::vector<float> read_floats(const Framed& f, size_t offset, size_t count, const std::string& what) {
  const size_t need = offset + count * 4;
  if (f.payload.size() < need)
    throw IoError(what + ": truncated payload, expected " + std::to_string(need) + " bytes, found " + std::to_string(f.payload.size()));
  std::vector<float> out(count);
  for (size_t i = 0; i < count; ++i) {
    uint32_t v;
    std::memcpy(&v, f.payload.data() + offset + i * 4, 4);
    out[i] = std::bit_cast<float>(to_le(v));
    if (!std::isfinite(out[i]))
      throw IoError(what + ": non-finite value at byte offset " + std::to_string(f.header_bytes + offset + i * 4));
  }
  return out;
}

void save_motion(const MotionTensor& m, const fs::path& path, const json& metadata) {
  m.validate();
  std::vector<char> payload;
  append_floats(payload, m.values);
  write_framed(path, motion_header(m, metadata), payload);
}

MotionTensor load_motion(const fs::path& path) {
  const Framed f = read_framed(path);
  const auto& h = f.header;
  const auto dtype = header_field<std::string>(h, "dtype", path);
  const auto endian = header_field<std::string>(h, "endianness", path);
  if (dtype != "float32") throw IoError("'" + path.string() + "': unsupported dtype '" + dtype + "'");
  if (endian != "little") throw IoError("'" + path.string() + "': unsupported endianness '" + endian + "'");
  const auto name = header_field<std::string>(h, "layout", path);
  const int joints = header_field<int>(h, "joints", path);
  const int features = header_field<int>(h, "features", path);
  const int frames = header_field<int>(h, "frames", path);
  const double fps = header_field<double>(h, "fps", path);
  if (frames < 1) throw IoError("'" + path.string() + "': header declares " + std::to_string(frames) + " frames");
  FeatureLayout layout;
  try {
    layout = FeatureLayout::from_header(name, joints, features, fps);
  } catch (const std::invalid_argument& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
  const size_t count = static_cast<size_t>(frames) * static_cast<size_t>(features);
  if (f.payload.size() != count * 4)
    throw IoError("'" + path.string() + "': expected " + std::to_string(count * 4) + " payload bytes (" + std::to_string(frames) + " x " +
                  std::to_string(features) + " float32), found " + std::to_string(f.payload.size()));
  return MotionTensor(std::move(layout), frames, read_floats(f, 0, count, "'" + path.string() + "'"));
}

MotionTensor load_motion(const fs::path& path, const FeatureLayout& expected) {
  MotionTensor m = load_motion(path);
  if (!(m.layout == expected))
    throw IoError("'" + path.string() + "': layout '" + m.layout.name + "' (D=" + std::to_string(m.layout.features) + ") does not match expected '" +
                  expected.name + "' (D=" + std::to_string(expected.features) + ")");
  return m;
}

json load_motion_metadata(const fs::path& path) {
  const Framed f = read_framed(path);
  return f.header.value("metadata", json::object());
}

json to_json(const DataConfig& c) {
  return {{"seed", c.seed},
          {"family_counts", c.family_counts},
          {"min_frames", c.min_frames},
          {"max_frames", c.max_frames},
          {"heldout_fraction", c.heldout_fraction}};
}

DataConfig data_config_from_json(const json& j) {
  DataConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("family_counts")) c.family_counts = j.at("family_counts").get<std::map<std::string, int>>();
    c.min_frames = j.value("min_frames", c.min_frames);
    c.max_frames = j.value("max_frames", c.max_frames);
    c.heldout_fraction = j.value("heldout_fraction", c.heldout_fraction);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("data config: ") + e.what());
  }
  for (const auto& [name, count] : c.family_counts) {
    try {
      parse_family(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return c;
}

namespace {

json params_json(const ClipParams& p) {
  return {{"family", family_name(p.family)}, {"frames", p.frames}, {"phase", p.phase}, {"heading", p.heading},
          {"origin", {p.origin_x, p.origin_z}}, {"speed", p.speed}, {"radius", p.radius}, {"turn", p.turn},
          {"jumps", p.jumps}, {"side", p.side}};
}

ClipParams params_from_json(const json& j) {
  ClipParams p;
  p.family = parse_family(j.at("family").get<std::string>());
  p.frames = j.at("frames").get<int>();
  p.phase = j.at("phase").get<double>();
  p.heading = j.at("heading").get<double>();
  p.origin_x = j.at("origin").at(0).get<double>();
  p.origin_z = j.at("origin").at(1).get<double>();
  p.speed = j.at("speed").get<double>();
  p.radius = j.at("radius").get<double>();
  p.turn = j.at("turn").get<int>();
  p.jumps = j.at("jumps").get<int>();
  p.side = j.at("side").get<int>();
  return p;
}

json text_json(const TextPrompt& t) { return {{"template", template_name(t.template_id)}, {"slots", t.slots}, {"text", t.text}, {"tokens", t.tokens}}; }

TextPrompt text_from_json(const json& j) {
  const auto name = j.at("template").get<std::string>();
  for (int i = 0; i <= static_cast<int>(TextTemplate::Free); ++i) {
    const auto id = static_cast<TextTemplate>(i);
    if (name == template_name(id))
      return id == TextTemplate::Free ? TextPrompt::free(j.at("text").get<std::string>())
                                      : TextPrompt::render(id, j.at("slots").get<std::vector<std::string>>());
  }
  throw IoError("unknown text template '" + name + "'");
}

std::string motion_file(int clip, const char* role) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "motions/clip%05d_%s.motion", clip, role);
  return buf;
}

}  // namespace

void save_dataset(const Dataset& ds, const fs::path& dir, const json& extra) {
  fs::create_directories(dir / "motions");
  json clips = json::array();
  for (const auto& c : ds.clips) {
    const auto base = motion_file(c.index, "base"), edited = motion_file(c.index, "edited"), styled = motion_file(c.index, "styled");
    save_motion(*c.base, dir / base);
    save_motion(*c.edited, dir / edited);
    save_motion(*c.styled, dir / styled);
    clips.push_back({{"index", c.index},
                     {"heldout", c.heldout},
                     {"params", params_json(c.params)},
                     {"text", text_json(c.text)},
                     {"edit", {{"op", edit_name(c.edit.op)}, {"factor", c.edit.factor}, {"side", c.edit.side}, {"text", text_json(c.edit_text)}}},
                     {"style", {{"label", style_name(c.style.label)}, {"intensity", c.style.intensity}}},
                     {"keep", c.keep},
                     {"traj_joints", c.traj_joints},
                     {"keyframes", c.keyframes},
                     {"edit_joints", c.edit_joints},
                     {"files", {{"base", base}, {"edited", edited}, {"styled", styled}}}});
  }
  json samples = json::array();
  for (const auto& c : ds.clips) {
    const auto base = motion_file(c.index, "base"), edited = motion_file(c.index, "edited"), styled = motion_file(c.index, "styled");
    for (const auto& s : clip_samples(c)) {
      json r = {{"task", task_name(s.kind)}, {"clip", c.index}, {"split", c.heldout ? "heldout" : "train"}};
      r["target"] = s.target == c.base ? base : s.target == c.edited ? edited : styled;
      if (s.cond.source) r["source"] = base;
      if (!s.cond.source_keep.empty()) r["source_keep"] = "clip.keep";
      if (s.cond.text) r["text"] = s.cond.text->text;
      if (s.cond.style) r["style"] = {{"label", style_name(s.cond.style->label)}, {"intensity", s.cond.style->intensity}};
      if (s.cond.trajectory) {
        const bool inbetween = s.kind == TaskKind::InBetween || s.kind == TaskKind::InBetweenText;
        const bool editing = s.kind == TaskKind::TrajectoryEditing || s.kind == TaskKind::TrajectoryEditingText;
        r["trajectory"] = {{"motion", editing ? edited : base},
                           {"joints", inbetween ? all_joints(ds.layout) : editing ? c.edit_joints : c.traj_joints},
                           {"frames", inbetween ? json(c.keyframes) : json("all")}};
      }
      samples.push_back(std::move(r));
    }
  }
  json manifest = {{"format", "flowmotion-dataset"},
                   {"version", 1},
                   {"layout", {{"name", ds.layout.name}, {"joints", ds.layout.joints}, {"features", ds.layout.features}, {"fps", ds.layout.fps}, {"hash", ds.layout.hash()}}},
                   {"config", to_json(ds.config)},
                   {"tasks", [] {
                      json t = json::array();
                      for (TaskKind k : all_tasks()) t.push_back(task_name(k));
                      return t;
                    }()},
                   {"clips", std::move(clips)},
                   {"samples", std::move(samples)}};
  for (auto it = extra.begin(); it != extra.end(); ++it) manifest[it.key()] = it.value();
  write_text_atomic(dir / "manifest.json", manifest.dump(1) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  json m;
  try {
    m = json::parse(read_all(mpath));
  } catch (const json::parse_error& e) {
    throw IoError("'" + mpath.string() + "': malformed manifest at byte " + std::to_string(e.byte));
  }
  Dataset ds;
  try {
    if (m.value("format", "") != "flowmotion-dataset") throw IoError("'" + mpath.string() + "' is not a flowmotion dataset manifest");
    const auto& l = m.at("layout");
    ds.layout = FeatureLayout::from_header(l.at("name").get<std::string>(), l.at("joints").get<int>(), l.at("features").get<int>(), l.at("fps").get<double>());
    ds.config = data_config_from_json(m.at("config"));
    for (const auto& jc : m.at("clips")) {
      Clip c;
      c.index = jc.at("index").get<int>();
      if (c.index != static_cast<int>(ds.clips.size())) throw IoError("'" + mpath.string() + "': clips are not stored in index order");
      c.heldout = jc.at("heldout").get<bool>();
      c.params = params_from_json(jc.at("params"));
      c.text = text_from_json(jc.at("text"));
      const auto& je = jc.at("edit");
      const auto op = je.at("op").get<std::string>();
      bool found = false;
      for (int i = 0; i < kEditCount; ++i)
        if (op == edit_name(static_cast<EditOp>(i))) c.edit.op = static_cast<EditOp>(i), found = true;
      if (!found) throw IoError("unknown edit op '" + op + "'");
      c.edit.factor = je.at("factor").get<double>();
      c.edit.side = je.at("side").get<int>();
      c.edit_text = text_from_json(je.at("text"));
      c.style.label = parse_style(jc.at("style").at("label").get<std::string>());
      c.style.intensity = jc.at("style").at("intensity").get<float>();
      c.keep = jc.at("keep").get<std::vector<uint8_t>>();
      c.traj_joints = jc.at("traj_joints").get<std::vector<int>>();
      c.keyframes = jc.at("keyframes").get<std::vector<int>>();
      c.edit_joints = jc.at("edit_joints").get<std::vector<int>>();
      const auto& files = jc.at("files");
      c.base = std::make_shared<MotionTensor>(load_motion(dir / files.at("base").get<std::string>(), ds.layout));
      c.edited = std::make_shared<MotionTensor>(load_motion(dir / files.at("edited").get<std::string>(), ds.layout));
      c.styled = std::make_shared<MotionTensor>(load_motion(dir / files.at("styled").get<std::string>(), ds.layout));
      ds.clips.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw IoError("'" + mpath.string() + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError("'" + mpath.string() + "': " + e.what());
  }
  for (const auto& c : ds.clips)
    for (auto& s : clip_samples(c)) ds.samples.push_back(std::move(s));
  return ds;
}

std::string dataset_hash(const fs::path& dir) { return hex_hash(read_all(dir / "manifest.json")); }

}  // namespace fm
