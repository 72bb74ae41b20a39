// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "fm/motion/generator.hpp"
#include "fm/motion/io.hpp"
#include "fm/util/errors.hpp"

using namespace fm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fm_test_motion_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

MotionTensor clip(Family f, uint64_t seed, int frames = 48) {
  Rng rng(seed);
  return render_clip(sample_clip_params(f, frames, rng), FeatureLayout::toy());
}

MotionTensor random_motion(int n, uint64_t seed) {
  Rng rng(seed);
  MotionTensor m(FeatureLayout::toy(), n);
  for (auto& v : m.values) v = static_cast<float>(rng.normal());
  return m;
}

// Kasa least-squares circle: x^2 + z^2 + a x + b z + c = 0.
void fit_circle(const std::vector<double>& x, const std::vector<double>& z, double& cx, double& cz, double& r, double& rms) {
  double m[3][4] = {};
  for (size_t i = 0; i < x.size(); ++i) {
    const double row[3] = {x[i], z[i], 1.0};
    const double rhs = -(x[i] * x[i] + z[i] * z[i]);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) m[a][b] += row[a] * row[b];
      m[a][3] += row[a] * rhs;
    }
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r2 = c + 1; r2 < 3; ++r2)
      if (std::abs(m[r2][c]) > std::abs(m[piv][c])) piv = r2;
    for (int k = 0; k < 4; ++k) std::swap(m[c][k], m[piv][k]);
    for (int r2 = 0; r2 < 3; ++r2) {
      if (r2 == c) continue;
      const double f = m[r2][c] / m[c][c];
      for (int k = 0; k < 4; ++k) m[r2][k] -= f * m[c][k];
    }
  }
  const double a = m[0][3] / m[0][0], b = m[1][3] / m[1][1], c = m[2][3] / m[2][2];
  cx = -a / 2;
  cz = -b / 2;
  r = std::sqrt(cx * cx + cz * cz - c);
  double s = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = std::hypot(x[i] - cx, z[i] - cz) - r;
    s += d * d;
  }
  rms = std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace

TEST_CASE("toy layout has disjoint in-range channels") {
  auto l = FeatureLayout::toy();
  CHECK(l.joints == 5);
  CHECK(l.features == 30);
  CHECK(l.fps == 20.0);
  l.validate();
  std::set<int> seen;
  for (int j = 0; j < l.joints; ++j)
    for (int a = 0; a < 3; ++a) {
      CHECK(seen.insert(l.position_offset[static_cast<size_t>(j)] + a).second);
      CHECK(seen.insert(l.velocity_offset[static_cast<size_t>(j)] + a).second);
    }
  CHECK(*seen.rbegin() == 29);
  CHECK(l.channel_of(l.position_offset[2] + 1) == Channel::PosY);
  CHECK(l.channel_of(l.velocity_offset[3] + 2) == Channel::VelZ);
  CHECK(l.joint_of(l.velocity_offset[4]) == 4);

  auto bad = l;
  bad.velocity_offset[0] = bad.position_offset[1];
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("humanml3d header resolves to the 263-feature layout") {
  auto h = FeatureLayout::from_header("humanml3d", 22, 263, 20.0);
  CHECK(h.joints == 22);
  CHECK(h.features == 263);
  CHECK(h.fps == 20.0);
  h.validate();
  CHECK_FALSE(h.has_position(0));
  CHECK(h.has_position(21));
  CHECK_THROWS(FeatureLayout::from_header("humanml3d", 22, 262, 20.0));
  CHECK_THROWS(FeatureLayout::from_header("nope", 5, 30, 20.0));
}

TEST_CASE("generated clips are kinematically consistent") {
  for (int f = 0; f < kFamilyCount; ++f)
    for (uint64_t s = 0; s < 5; ++s) {
      auto m = clip(static_cast<Family>(f), s, 32 + static_cast<int>(s) * 8);
      m.validate();
      const auto& l = m.layout;
      double worst = 0;
      for (int i = 0; i + 1 < m.frames; ++i)
        for (int j = 0; j < l.joints; ++j)
          for (int a = 0; a < 3; ++a) {
            const double d = l.fps * (static_cast<double>(m.position(i + 1, j)[static_cast<size_t>(a)]) - m.position(i, j)[static_cast<size_t>(a)]);
            worst = std::max(worst, std::abs(d - m.at(i, l.velocity_offset[static_cast<size_t>(j)] + a)));
          }
      CHECK(worst < 1e-5 * std::max(1.0, l.fps));
    }
}

TEST_CASE("walk-circle pelvis traces a circle") {
  for (uint64_t s = 0; s < 10; ++s) {
    auto m = clip(Family::WalkCircle, 100 + s, 64);
    std::vector<double> x, z;
    for (int f = 0; f < m.frames; ++f) {
      auto p = m.position(f, toy_joint::kPelvis);
      x.push_back(p[0]);
      z.push_back(p[2]);
    }
    double cx, cz, r, rms;
    fit_circle(x, z, cx, cz, r, rms);
    CHECK(rms < 0.05 * r);
  }
}

TEST_CASE("dataset generation is a pure function of config and seed") {
  DataConfig c;
  c.family_counts = {{"walk-line", 100}, {"walk-circle", 0}, {"jump", 0}, {"arm-wave", 0}};
  c.seed = 7;
  auto a = generate_toy_dataset(c);
  auto b = generate_toy_dataset(c);
  REQUIRE(a.clips.size() == 100);
  for (size_t i = 0; i < a.clips.size(); ++i) {
    CHECK(*a.clips[i].base == *b.clips[i].base);
    CHECK(*a.clips[i].edited == *b.clips[i].edited);
    CHECK(a.clips[i].text == b.clips[i].text);
    CHECK_FALSE(a.clips[i].text.text.empty());
  }
  auto da = scratch("ds_a"), db = scratch("ds_b");
  save_dataset(a, da);
  save_dataset(b, db);
  CHECK(dataset_hash(da) == dataset_hash(db));

  c.seed = 8;
  auto other = generate_toy_dataset(c);
  CHECK_FALSE(*other.clips[0].base == *a.clips[0].base);

  c.family_counts = {{"walk-line", 0}, {"walk-circle", 0}, {"jump", 0}, {"arm-wave", 0}};
  CHECK(generate_toy_dataset(c).clips.empty());
}

TEST_CASE("saved datasets load back unchanged") {
  DataConfig c;
  c.family_counts = {{"walk-line", 3}, {"walk-circle", 3}, {"jump", 3}, {"arm-wave", 3}};
  auto ds = generate_toy_dataset(c);
  auto dir = scratch("ds_rt");
  save_dataset(ds, dir);
  auto back = load_dataset(dir);
  REQUIRE(back.clips.size() == ds.clips.size());
  REQUIRE(back.samples.size() == ds.samples.size());
  for (size_t i = 0; i < ds.clips.size(); ++i) {
    CHECK(*back.clips[i].base == *ds.clips[i].base);
    CHECK(*back.clips[i].styled == *ds.clips[i].styled);
    CHECK(back.clips[i].keep == ds.clips[i].keep);
    CHECK(back.clips[i].heldout == ds.clips[i].heldout);
  }
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].kind == ds.samples[i].kind);
    CHECK(*back.samples[i].target == *ds.samples[i].target);
  }
}

TEST_CASE("every task sample satisfies its legality row") {
  DataConfig c;
  c.family_counts = {{"walk-line", 2}, {"walk-circle", 2}, {"jump", 2}, {"arm-wave", 2}};
  auto ds = generate_toy_dataset(c);
  REQUIRE(ds.samples.size() == ds.clips.size() * kTaskCount);
  for (const auto& s : ds.samples) {
    CHECK_NOTHROW(check_legality(s.kind, s.cond, s.target->frames, ds.layout));
    const auto r = requirements(s.kind);
    CHECK((s.cond.source != nullptr) == (r.source == Need::Required));
    CHECK(s.cond.text.has_value() == (r.text == Need::Required));
    CHECK(s.cond.trajectory.has_value() == (r.trajectory == Need::Required));
    CHECK(s.cond.style.has_value() == (r.style == Need::Required));
  }
}

TEST_CASE("legality rejects missing and surplus conditions") {
  auto m = std::make_shared<const MotionTensor>(clip(Family::Jump, 3));
  Conditions c;
  c.source = m;
  CHECK_THROWS_AS(check_legality(TaskKind::TextGeneration, c), LegalityError);
  Conditions text;
  text.text = TextPrompt::free("a person jumps");
  CHECK_NOTHROW(check_legality(TaskKind::TextGeneration, text));
  CHECK_THROWS_AS(check_legality(TaskKind::TextEditing, text), LegalityError);
  CHECK_THROWS_AS(check_legality(TaskKind::StyleTransfer, c), LegalityError);

  Conditions traj;
  traj.trajectory = extract_trajectory(*m, std::vector<int>{0}, all_frames(m->frames));
  CHECK_NOTHROW(check_legality(TaskKind::TrajectoryGeneration, traj, m->frames, m->layout));
  CHECK_THROWS_AS(check_legality(TaskKind::TrajectoryGeneration, traj, m->frames + 1, m->layout), MotionError);
}

TEST_CASE("task table has unique names and the listed instructions") {
  std::set<std::string> names;
  for (TaskKind k : all_tasks()) {
    CHECK(names.insert(task_name(k)).second);
    CHECK(parse_task(task_name(k)) == k);
  }
  CHECK(names.size() == 13);
  CHECK_THROWS_AS(parse_task("dance"), std::invalid_argument);
  CHECK(std::string(instruction_text(TaskKind::Unconditional)) == "reconstruct given masked source motion.");
  CHECK(std::string(instruction_text(TaskKind::TextGeneration)) == "generate motion by given text.");
  CHECK(std::string(instruction_text(TaskKind::InBetweenText)) == "generate motion by given text and key frames.");
  CHECK(std::string(instruction_text(TaskKind::StyleTransfer)) == "generate motion by the given style and content.");
  CHECK(std::string(instruction_text(TaskKind::TrajectoryEditing)) == "edit source motion by given trajectory.");
}

TEST_CASE("extract_trajectory copies positions at the selected entries") {
  auto m = clip(Family::WalkLine, 11, 40);
  auto dense = extract_trajectory(m, all_joints(m.layout), all_frames(m.frames));
  CHECK(dense.count() == m.frames * m.layout.joints);
  for (int f = 0; f < m.frames; ++f)
    for (int j = 0; j < m.layout.joints; ++j) CHECK(dense.coord(f, j) == m.position(f, j));

  auto pelvis = extract_trajectory(m, std::vector<int>{toy_joint::kPelvis}, all_frames(m.frames));
  for (int f = 0; f < m.frames; ++f)
    for (int j = 0; j < m.layout.joints; ++j) {
      CHECK(pelvis.constrained(f, j) == (j == toy_joint::kPelvis));
      if (j != toy_joint::kPelvis) CHECK(pelvis.coord(f, j) == std::array<float, 3>{0, 0, 0});
    }

  auto keys = extract_trajectory(m, all_joints(m.layout), std::vector<int>{0, m.frames - 1});
  CHECK(keys.count() == 2 * m.layout.joints);

  CHECK_THROWS(extract_trajectory(m, std::vector<int>{7}, all_frames(m.frames)));
  CHECK_THROWS(extract_trajectory(m, std::vector<int>{0}, std::vector<int>{m.frames}));
  auto h = FeatureLayout::humanml3d();
  MotionTensor hm(h, 4);
  CHECK_THROWS(extract_trajectory(hm, std::vector<int>{0}, all_frames(4)));
}

TEST_CASE("frame masking counts are exact") {
  auto m = random_motion(32, 5);
  Rng rng(1);
  auto none = mask_frames(m, 0.0, rng);
  CHECK(none.motion == m);
  CHECK(std::count(none.keep.begin(), none.keep.end(), 1) == 32);

  auto all = mask_frames(m, 1.0, rng);
  CHECK(std::all_of(all.motion.values.begin(), all.motion.values.end(), [](float v) { return v == 0.0f; }));
  CHECK(std::count(all.keep.begin(), all.keep.end(), 0) == 32);

  auto half = mask_frames(m, 0.5, rng);
  CHECK(std::count(half.keep.begin(), half.keep.end(), 0) == 16);
  for (int f = 0; f < m.frames; ++f)
    for (int k = 0; k < m.features(); ++k) CHECK(half.motion.at(f, k) == (half.keep[static_cast<size_t>(f)] ? m.at(f, k) : 0.0f));

  for (int n = 1; n < 70; n += 7)
    for (double r : {0.1, 0.25, 0.33, 0.5, 0.9}) {
      auto mm = random_motion(n, static_cast<uint64_t>(n));
      auto out = mask_frames(mm, r, rng);
      CHECK(std::count(out.keep.begin(), out.keep.end(), 0) == masked_frame_count(r, n));
      CHECK(masked_frame_count(r, n) == static_cast<int>(std::lround(r * n)));
    }
}

TEST_CASE("mirror is an involution") {
  for (int f = 0; f < kFamilyCount; ++f) {
    auto m = clip(static_cast<Family>(f), 21);
    auto twice = mirror_motion(mirror_motion(m));
    for (size_t i = 0; i < m.values.size(); ++i) CHECK(std::abs(twice.values[i] - m.values[i]) < 1e-6);
  }
}

TEST_CASE("speed edits resample positions in time") {
  auto m = clip(Family::WalkLine, 31, 48);
  auto same = speed_motion(m, 1.0);
  for (size_t i = 0; i < m.values.size(); ++i) CHECK(std::abs(same.values[i] - m.values[i]) < 1e-6);

  for (double k : {1.5, 0.8}) {
    auto out = speed_motion(m, k);
    CHECK(out.frames == static_cast<int>(std::floor((m.frames - 1) / k + 1e-9)) + 1);
    for (int i = 0; i < out.frames; ++i) {
      const double t = i * k;
      const int lo = std::min(static_cast<int>(std::floor(t)), m.frames - 1);
      const int hi = std::min(lo + 1, m.frames - 1);
      const double w = t - lo;
      for (int j = 0; j < m.layout.joints; ++j)
        for (size_t a = 0; a < 3; ++a) {
          const double want = (1 - w) * m.position(lo, j)[a] + w * m.position(hi, j)[a];
          CHECK(std::abs(out.position(i, j)[a] - want) < 1e-5);
        }
    }
  }
  CHECK_THROWS_AS(speed_motion(m, 0.0), MotionError);
}

TEST_CASE("amplitude edit scales the waving arm's vertical range") {
  for (uint64_t s = 0; s < 8; ++s) {
    Rng rng(s);
    auto p = sample_clip_params(Family::ArmWave, 60, rng);
    auto m = render_clip(p, FeatureLayout::toy());
    auto pair = make_edit_pair(m, {EditOp::Amplitude, 1.3, 1});
    const int hand = p.side > 0 ? toy_joint::kLeftHand : toy_joint::kRightHand;
    auto range = [&](const MotionTensor& x) {
      double lo = 1e9, hi = -1e9;
      for (int f = 0; f < x.frames; ++f) {
        lo = std::min(lo, static_cast<double>(x.position(f, hand)[1]));
        hi = std::max(hi, static_cast<double>(x.position(f, hand)[1]));
      }
      return hi - lo;
    };
    CHECK(range(pair.target) / range(m) == doctest::Approx(1.3).epsilon(0.02 / 1.3));
  }
}

TEST_CASE("stored edit targets match an independent closed form") {
  DataConfig c;
  c.family_counts = {{"walk-line", 4}, {"walk-circle", 4}, {"jump", 4}, {"arm-wave", 4}};
  auto ds = generate_toy_dataset(c);
  for (const auto& cl : ds.clips) {
    const auto& src = *cl.base;
    const auto& e = cl.edit;
    MotionTensor want = src;
    switch (e.op) {
      case EditOp::Mirror: {
        const int swap[5] = {0, 2, 1, 4, 3};
        for (int f = 0; f < src.frames; ++f)
          for (int j = 0; j < 5; ++j) {
            auto p = src.position(f, j);
            want.set_position(f, swap[j], {-p[0], p[1], p[2]});
          }
        recompute_velocities(want);
        break;
      }
      case EditOp::RaiseArm: {
        const int hand = e.side > 0 ? toy_joint::kLeftHand : toy_joint::kRightHand;
        for (int f = 0; f < src.frames; ++f) {
          auto p = src.position(f, hand);
          p[1] += static_cast<float>(e.factor);
          want.set_position(f, hand, p);
        }
        recompute_velocities(want);
        break;
      }
      default:
        want = apply_edit(src, e);
        break;
    }
    REQUIRE(want.frames == cl.edited->frames);
    for (size_t i = 0; i < want.values.size(); ++i) CHECK(want.values[i] == cl.edited->values[i]);
  }
}

TEST_CASE("edit text comes from the edit template") {
  auto m = clip(Family::ArmWave, 2);
  auto pair = make_edit_pair(m, {EditOp::Mirror, 1.0, 1});
  CHECK(pair.text.template_id == TextTemplate::EditMirror);
  CHECK(pair.text.tokens == tokenize(pair.text.text));
  MotionTensor bad = m;
  bad.values[0] = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(make_edit_pair(bad, {EditOp::Amplitude, 1.3, 1}), MotionError);
}

TEST_CASE("tokenizer is deterministic and bounded") {
  auto a = TextPrompt::render(TextTemplate::WalkLine, {"slowly"});
  CHECK(a.tokens == tokenize(a.text));
  CHECK(static_cast<int>(a.tokens.size()) <= kMaxTextTokens);
  CHECK(vocabulary_size() <= 64);
  CHECK(tokenize("Walk, FORWARD!") == tokenize("walk forward"));
  CHECK(token_id("zzzz") == 1);
  CHECK_THROWS_AS(tokenize(""), std::invalid_argument);
  CHECK_THROWS_AS(tokenize("a b c d e f g h i j k l m n o p q"), std::invalid_argument);
}

TEST_CASE("motion files round-trip bitwise") {
  auto dir = scratch("io");
  auto m = random_motion(37, 9);
  save_motion(m, dir / "m.fmm");
  CHECK(load_motion(dir / "m.fmm") == m);
  CHECK(load_motion(dir / "m.fmm", FeatureLayout::toy()) == m);

  MotionTensor h(FeatureLayout::humanml3d(), 3);
  for (size_t i = 0; i < h.values.size(); ++i) h.values[i] = static_cast<float>(i) * 0.5f;
  save_motion(h, dir / "h.fmm");
  auto hb = load_motion(dir / "h.fmm");
  CHECK(hb == h);
  CHECK(hb.layout.features == 263);
  CHECK_THROWS_AS(load_motion(dir / "h.fmm", FeatureLayout::toy()), IoError);
}

TEST_CASE("truncated and corrupt motion files are rejected") {
  auto dir = scratch("io_bad");
  auto m = random_motion(8, 3);
  save_motion(m, dir / "m.fmm");
  const auto size = fs::file_size(dir / "m.fmm");
  fs::resize_file(dir / "m.fmm", size - 4);
  try {
    load_motion(dir / "m.fmm");
    FAIL("expected an error");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(std::to_string(8 * 30 * 4)) != std::string::npos);
    CHECK(msg.find(std::to_string(8 * 30 * 4 - 4)) != std::string::npos);
  }

  MotionTensor nan = m;
  save_motion(nan, dir / "n.fmm");
  {
    auto f = read_framed(dir / "n.fmm");
    std::fstream io(dir / "n.fmm", std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(static_cast<std::streamoff>(f.header_bytes + 4 * 5));
    const float bad = std::numeric_limits<float>::quiet_NaN();
    io.write(reinterpret_cast<const char*>(&bad), 4);
  }
  try {
    load_motion(dir / "n.fmm");
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
  CHECK_THROWS_AS(load_motion(dir / "missing.fmm"), IoError);
}
