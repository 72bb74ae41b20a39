// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/model/mft.hpp"

#include <cmath>
#include <stdexcept>

#include "fm/model/embeddings.hpp"
#include "fm/util/errors.hpp"
#include "fm/util/rng.hpp"

namespace fm::model {

using nc::Shape;
using nc::Tape;
using nc::Tensor;
using nc::Var;

// ---------------------------------------------------------------- Normalizer

Normalizer Normalizer::identity(int features) {
  Normalizer n;
  n.mean.assign(static_cast<size_t>(features), 0.0);
  n.stddev.assign(static_cast<size_t>(features), 1.0);
  return n;
}

Normalizer Normalizer::fit(const std::vector<const MotionTensor*>& motions) {
  if (motions.empty()) throw std::invalid_argument("Normalizer::fit: no motions");
  const int d = motions[0]->features();
  std::vector<double> sum(static_cast<size_t>(d), 0.0), sq(static_cast<size_t>(d), 0.0);
  double count = 0.0;
  for (const auto* m : motions) {
    if (m->features() != d) throw std::invalid_argument("Normalizer::fit: motions differ in feature count");
    for (int f = 0; f < m->frames; ++f)
      for (int k = 0; k < d; ++k) {
        const double v = m->at(f, k);
        sum[static_cast<size_t>(k)] += v;
        sq[static_cast<size_t>(k)] += v * v;
      }
    count += m->frames;
  }
  Normalizer n;
  n.mean.resize(static_cast<size_t>(d));
  n.stddev.resize(static_cast<size_t>(d));
  for (size_t k = 0; k < static_cast<size_t>(d); ++k) {
    n.mean[k] = sum[k] / count;
    n.stddev[k] = std::max(1e-3, std::sqrt(std::max(0.0, sq[k] / count - n.mean[k] * n.mean[k])));
  }
  return n;
}

template <typename T>
std::vector<T> Normalizer::normalize(const MotionTensor& m) const {
  if (static_cast<int>(mean.size()) != m.features()) throw MotionError("normalizer has " + std::to_string(mean.size()) + " features, motion has " + std::to_string(m.features()));
  std::vector<T> out(m.values.size());
  const auto d = static_cast<size_t>(m.features());
  for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>((m.values[i] - mean[i % d]) / stddev[i % d]);
  return out;
}

template <typename T>
MotionTensor Normalizer::denormalize(std::span<const T> values, int frames, const FeatureLayout& layout) const {
  const auto d = static_cast<size_t>(layout.features);
  if (values.size() != static_cast<size_t>(frames) * d) throw MotionError("denormalize: value count does not match frames x features");
  std::vector<float> out(values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(static_cast<double>(values[i]) * stddev[i % d] + mean[i % d]);
  return MotionTensor(layout, frames, std::move(out));
}

double Normalizer::normalize_position(int joint, int axis, double v, const FeatureLayout& layout) const {
  if (!layout.has_position(joint)) return v;
  const auto k = static_cast<size_t>(layout.position_offset[static_cast<size_t>(joint)] + axis);
  return (v - mean[k]) / stddev[k];
}

template std::vector<float> Normalizer::normalize<float>(const MotionTensor&) const;
template std::vector<double> Normalizer::normalize<double>(const MotionTensor&) const;
template MotionTensor Normalizer::denormalize<float>(std::span<const float>, int, const FeatureLayout&) const;
template MotionTensor Normalizer::denormalize<double>(std::span<const double>, int, const FeatureLayout&) const;

// ---------------------------------------------------------------- ParamStore

template <typename T>
nc::Parameter<T>& ParamStore<T>::add(const std::string& name, Shape shape, Init init, uint64_t seed) {
  if (index_.count(name)) throw std::logic_error("duplicate parameter '" + name + "'");
  Tensor<T> v(shape);
  if (init != Init::Zero) {
    Rng rng(derive_seed(seed, fnv1a(name)));
    const double fan_in = shape.size() >= 2 ? static_cast<double>(shape[0]) : 1.0;
    const double fan_out = static_cast<double>(shape.back());
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& x : v.data) x = static_cast<T>(init == Init::Xavier ? rng.uniform(-a, a) : 0.02 * rng.normal());
  }
  owned_.push_back(std::make_unique<nc::Parameter<T>>(name, std::move(v)));
  order_.push_back(owned_.back().get());
  index_.emplace(name, owned_.back().get());
  return *owned_.back();
}

template <typename T>
nc::Parameter<T>& ParamStore<T>::get(const std::string& name) const {
  if (auto it = index_.find(name); it != index_.end()) return *it->second;
  throw std::out_of_range("no parameter named '" + name + "'");
}

template <typename T>
int64_t ParamStore<T>::count() const {
  int64_t n = 0;
  for (const auto* p : order_) n += p->value.size();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto* p : order_) p->zero_grad();
}

template <typename T>
void ParamStore<T>::randomize(uint64_t seed, double stddev) {
  for (auto* p : order_) {
    Rng rng(derive_seed(seed, fnv1a(p->name)));
    for (auto& x : p->value.data) x = static_cast<T>(stddev * rng.normal());
  }
}

// ---------------------------------------------------------------- Mft

namespace {

std::string blk(int b, Modality m, const char* what) { return "block" + std::to_string(b) + "." + modality_name(m) + "." + what; }

constexpr Modality kAll[kModalityCount] = {Modality::Source, Modality::Target, Modality::Text, Modality::Trajectory, Modality::Style};

int stream_id(Modality m) {
  switch (m) {
    case Modality::Source: return 0;
    case Modality::Target: return 1;
    case Modality::Trajectory: return 2;
    default: return -1;
  }
}

}  // namespace

template <typename T>
void Mft<T>::add_linear(const std::string& name, int in, int out, typename ParamStore<T>::Init init) {
  params_.add(name + ".w", Shape{in, out}, init, cfg_.init_seed);
  params_.add(name + ".b", Shape{out}, ParamStore<T>::Init::Zero, cfg_.init_seed);
}

template <typename T>
Mft<T>::Mft(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  using Init = typename ParamStore<T>::Init;
  const int d = cfg_.width, D = cfg_.layout.features;
  normalizer = Normalizer::identity(D);
  add_linear("in.source", cfg_.source_dim(), d, Init::Xavier);
  add_linear("in.target", D, d, Init::Xavier);
  add_linear("in.text", kTextDim, d, Init::Xavier);
  add_linear("in.trajectory", cfg_.trajectory_dim(), d, Init::Xavier);
  add_linear("in.style", kStyleDim, d, Init::Xavier);
  params_.add("source.null", Shape{1, d}, Init::Normal02, cfg_.init_seed);
  params_.add("text.position", Shape{kMaxTextTokens, d}, Init::Normal02, cfg_.init_seed);
  params_.add("style.labels", Shape{kStyleCount, kStyleDim}, Init::Normal02, cfg_.init_seed);
  params_.add("style.intensity", Shape{1, kStyleDim}, Init::Normal02, cfg_.init_seed);
  add_linear("time.fc1", kTimeFeatures, d, Init::Xavier);
  add_linear("time.fc2", d, d, Init::Xavier);
  add_linear("instruction.proj", kInstructionDim, d, Init::Xavier);
  if (cfg_.position == PositionEncoding::Learnable1d || cfg_.position == PositionEncoding::Learnable3d)
    params_.add("position.frame", Shape{cfg_.max_frames, d}, Init::Normal02, cfg_.init_seed);
  if (cfg_.position == PositionEncoding::Learnable3d) params_.add("position.stream", Shape{3, d}, Init::Normal02, cfg_.init_seed);
  for (int b = 0; b < cfg_.blocks; ++b)
    for (Modality m : kAll) {
      add_linear(blk(b, m, "modulation"), d, 6 * d, Init::Zero);
      add_linear(blk(b, m, "qkv"), d, 3 * d, Init::Xavier);
      add_linear(blk(b, m, "out"), d, d, Init::Xavier);
      add_linear(blk(b, m, "ffn1"), d, cfg_.ffn_mult * d, Init::Xavier);
      add_linear(blk(b, m, "ffn2"), cfg_.ffn_mult * d, d, Init::Xavier);
    }
  add_linear("final.modulation", d, 2 * d, Init::Zero);
  add_linear("final.head", d, D, Init::Zero);

  text_table_ = nc::cast<T>(Tensor<float>(Shape{vocabulary_size(), kTextDim}, text_token_table()));
  for (TaskKind k : all_tasks()) {
    auto v = instruction_vector(k, cfg_.instruction_overrides);
    instructions_[static_cast<size_t>(k)] = nc::cast<T>(Tensor<float>(Shape{1, kInstructionDim}, std::move(v)));
  }
}

template <typename T>
Var<T> Mft<T>::linear(Tape<T>& tape, const std::string& name, Var<T> x) const {
  auto y = nc::matmul(x, tape.parameter(params_.get(name + ".w")));
  return nc::add(y, tape.parameter(params_.get(name + ".b")));
}

template <typename T>
Var<T> Mft<T>::conditioning(Tape<T>& tape, TaskKind k, Var<T> t) const {
  auto e = nc::sinusoidal_embedding(nc::scale(t, T(1000)), kTimeFeatures);
  auto c = linear(tape, "time.fc2", nc::silu(linear(tape, "time.fc1", e)));
  if (cfg_.instruction_modulation) c = nc::add(c, linear(tape, "instruction.proj", tape.constant(instructions_[static_cast<size_t>(k)])));
  return c;
}

template <typename T>
Tensor<T> Mft<T>::rope_angles(Modality m, const std::vector<int>& frames, int position_offset) const {
  const int pairs = cfg_.head_dim() / 2;
  Tensor<T> a(Shape{static_cast<int64_t>(frames.size()), pairs});
  const double base = cfg_.rope_base;
  for (size_t i = 0; i < frames.size(); ++i) {
    if (frames[i] == kNonTemporal) continue;
    const double f = frames[i] + position_offset;
    if (cfg_.position == PositionEncoding::Aligned1dRope) {
      for (int p = 0; p < pairs; ++p) a.at(static_cast<int64_t>(i), p) = static_cast<T>(f * std::pow(base, -static_cast<double>(p) / pairs));
    } else if (cfg_.position == PositionEncoding::Rope3d) {
      // Pair thirds: stream id, frame, unused.
      const int third = pairs / 3;
      const double sid = stream_id(m);
      for (int p = 0; p < third; ++p) {
        const double w = std::pow(base, -static_cast<double>(p) / third);
        a.at(static_cast<int64_t>(i), p) = static_cast<T>(sid * w);
        a.at(static_cast<int64_t>(i), third + p) = static_cast<T>(f * w);
      }
    }
  }
  return a;
}

template <typename T>
Streams<T> Mft<T>::embed(Tape<T>& tape, const StreamInputs<T>& in, int position_offset) const {
  const int n_t = static_cast<int>(in.target.shape[0]);
  Streams<T> s;
  auto frames = [](int n) {
    std::vector<int> f(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) f[static_cast<size_t>(i)] = i;
    return f;
  };
  if (in.source_null) {
    s[0] = Stream<T>{tape.parameter(params_.get("source.null")), {kNonTemporal}};
  } else if (in.source && in.source->shape[0] > 0) {
    s[0] = Stream<T>{linear(tape, "in.source", tape.constant(*in.source)), frames(static_cast<int>(in.source->shape[0]))};
  }
  s[1] = Stream<T>{linear(tape, "in.target", tape.constant(in.target)), frames(n_t)};
  if (in.text && !in.text->empty()) {
    const auto n = static_cast<int64_t>(in.text->size());
    if (n > kMaxTextTokens) throw LegalityError("text has " + std::to_string(n) + " tokens, at most 16 are supported");
    std::vector<int64_t> pos(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) pos[static_cast<size_t>(i)] = i;
    auto x = linear(tape, "in.text", nc::gather(tape.constant(text_table_), *in.text));
    x = nc::add(x, nc::gather(tape.parameter(params_.get("text.position")), pos));
    s[2] = Stream<T>{x, std::vector<int>(static_cast<size_t>(n), kNonTemporal)};
  }
  if (in.trajectory && in.trajectory->shape[0] > 0)
    s[3] = Stream<T>{linear(tape, "in.trajectory", tape.constant(*in.trajectory)), frames(static_cast<int>(in.trajectory->shape[0]))};
  if (in.style) {
    const int64_t label = static_cast<int64_t>(in.style->label);
    auto code = nc::add(nc::gather(tape.parameter(params_.get("style.labels")), std::span<const int64_t>(&label, 1)),
                        nc::scale(tape.parameter(params_.get("style.intensity")), static_cast<T>(in.style->intensity)));
    s[4] = Stream<T>{linear(tape, "in.style", code), {kNonTemporal}};
  }
  for (Modality m : kAll) {
    auto& st = s[static_cast<size_t>(m)];
    if (!st) continue;
    for (int f : st->frame)
      if (f != kNonTemporal && (f + position_offset < 0 || f + position_offset >= cfg_.max_frames))
        throw MotionError(std::string(modality_name(m)) + " frame position " + std::to_string(f + position_offset) + " outside [0, max_frames=" +
                          std::to_string(cfg_.max_frames) + ")");
    if (cfg_.position == PositionEncoding::Learnable1d || cfg_.position == PositionEncoding::Learnable3d) {
      if (st->frame[0] == kNonTemporal) continue;
      std::vector<int64_t> ids(st->frame.size());
      for (size_t i = 0; i < ids.size(); ++i) ids[i] = st->frame[i] + position_offset;
      st->x = nc::add(st->x, nc::gather(tape.parameter(params_.get("position.frame")), ids));
      if (cfg_.position == PositionEncoding::Learnable3d) {
        const int64_t sid = stream_id(m);
        st->x = nc::add(st->x, nc::reshape(nc::gather(tape.parameter(params_.get("position.stream")), std::span<const int64_t>(&sid, 1)),
                                           Shape{cfg_.width}));
      }
    }
  }
  return s;
}

template <typename T>
Streams<T> Mft<T>::joint_attention(Tape<T>& tape, int b, const Streams<T>& h, ForwardTrace<T>* trace, int position_offset) const {
  const int d = cfg_.width, H = cfg_.heads, dh = cfg_.head_dim();
  std::vector<Var<T>> qkv_parts;
  std::vector<Modality> order;
  std::vector<int64_t> lengths;
  std::vector<uint8_t> temporal;
  std::vector<Tensor<T>> angle_parts;
  for (Modality m : kAll) {
    const auto& st = h[static_cast<size_t>(m)];
    if (!st) continue;
    qkv_parts.push_back(linear(tape, blk(b, m, "qkv"), st->x));
    order.push_back(m);
    lengths.push_back(static_cast<int64_t>(st->frame.size()));
    for (int f : st->frame) temporal.push_back(f != kNonTemporal);
    if (is_rope(cfg_.position)) angle_parts.push_back(rope_angles(m, st->frame, position_offset));
  }
  if (order.empty()) throw MotionError("joint attention: no tokens");
  const auto L = static_cast<int64_t>(temporal.size());
  auto qkv = qkv_parts.size() == 1 ? qkv_parts[0] : nc::concat<T>(qkv_parts, 0);
  auto q = nc::slice(qkv, 1, 0, d), k = nc::slice(qkv, 1, d, d), v = nc::slice(qkv, 1, 2 * d, d);

  Tensor<T> angles;
  std::vector<uint8_t> both, not_both;
  bool mixed = false;
  if (is_rope(cfg_.position)) {
    angles = Tensor<T>(Shape{L, dh / 2});
    int64_t row = 0;
    for (const auto& a : angle_parts) {
      std::copy(a.data.begin(), a.data.end(), angles.data.begin() + row * (dh / 2));
      row += a.shape[0];
    }
    // Logits between two temporal tokens use rotated q/k; any pair involving a
    // non-temporal token uses the unrotated vectors, so such tokens carry no
    // position at all.
    both.resize(static_cast<size_t>(L * L));
    int64_t n_temporal = 0;
    for (auto x : temporal) n_temporal += x;
    mixed = n_temporal > 0 && n_temporal < L;
    if (mixed) {
      not_both.resize(both.size());
      for (int64_t i = 0; i < L; ++i)
        for (int64_t j = 0; j < L; ++j) {
          const bool bt = temporal[static_cast<size_t>(i)] && temporal[static_cast<size_t>(j)];
          both[static_cast<size_t>(i * L + j)] = bt;
          not_both[static_cast<size_t>(i * L + j)] = !bt;
        }
    }
  }
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  std::vector<Var<T>> heads;
  heads.reserve(static_cast<size_t>(H));
  for (int hh = 0; hh < H; ++hh) {
    auto qh = nc::slice(q, 1, hh * dh, dh), kh = nc::slice(k, 1, hh * dh, dh), vh = nc::slice(v, 1, hh * dh, dh);
    Var<T> logits;
    if (is_rope(cfg_.position)) {
      auto rot = nc::matmul(nc::rotary(qh, angles), nc::rotary(kh, angles), true);
      if (mixed) {
        auto plain = nc::matmul(qh, kh, true);
        logits = nc::add(nc::masked_fill(rot, std::span<const uint8_t>(not_both), T(0)), nc::masked_fill(plain, std::span<const uint8_t>(both), T(0)));
      } else {
        logits = rot;
      }
    } else {
      logits = nc::matmul(qh, kh, true);
    }
    logits = nc::scale(logits, inv_sqrt);
    if (trace) trace->logits.push_back(logits.value());
    heads.push_back(nc::matmul(nc::softmax(logits), vh));
  }
  if (trace && trace->order.empty()) trace->order = order;
  auto att = H == 1 ? heads[0] : nc::concat<T>(heads, 1);
  Streams<T> out;
  int64_t row = 0;
  for (size_t i = 0; i < order.size(); ++i) {
    const Modality m = order[i];
    auto part = order.size() == 1 ? att : nc::slice(att, 0, row, lengths[i]);
    row += lengths[i];
    out[static_cast<size_t>(m)] = Stream<T>{linear(tape, blk(b, m, "out"), part), h[static_cast<size_t>(m)]->frame};
  }
  return out;
}

template <typename T>
Streams<T> Mft<T>::block(Tape<T>& tape, int b, const Streams<T>& s, Var<T> c, ForwardTrace<T>* trace, int position_offset) const {
  const int d = cfg_.width;
  auto sc = nc::silu(c);
  std::array<std::vector<Var<T>>, kModalityCount> mods;
  Streams<T> normed;
  for (Modality m : kAll) {
    const auto i = static_cast<size_t>(m);
    if (!s[i]) continue;
    mods[i] = nc::split(nc::reshape(linear(tape, blk(b, m, "modulation"), sc), Shape{6 * d}), 0, 6);
    auto& md = mods[i];
    auto hn = nc::add(nc::mul(nc::layer_norm(s[i]->x), nc::add_scalar(md[1], T(1))), md[0]);
    normed[i] = Stream<T>{hn, s[i]->frame};
  }
  auto att = joint_attention(tape, b, normed, trace, position_offset);
  Streams<T> out;
  for (Modality m : kAll) {
    const auto i = static_cast<size_t>(m);
    if (!s[i]) continue;
    auto& md = mods[i];
    auto x = nc::add(s[i]->x, nc::mul(att[i]->x, md[2]));
    auto hn = nc::add(nc::mul(nc::layer_norm(x), nc::add_scalar(md[4], T(1))), md[3]);
    auto ffn = linear(tape, blk(b, m, "ffn2"), nc::gelu(linear(tape, blk(b, m, "ffn1"), hn)));
    x = nc::add(x, nc::mul(ffn, md[5]));
    out[i] = Stream<T>{x, s[i]->frame};
  }
  return out;
}

template <typename T>
Var<T> Mft<T>::head(Tape<T>& tape, Var<T> target_tokens, Var<T> c) const {
  const int d = cfg_.width;
  auto md = nc::split(nc::reshape(linear(tape, "final.modulation", nc::silu(c)), Shape{2 * d}), 0, 2);
  auto hn = nc::add(nc::mul(nc::layer_norm(target_tokens), nc::add_scalar(md[1], T(1))), md[0]);
  return linear(tape, "final.head", hn);
}

template <typename T>
Var<T> Mft<T>::forward_streams(Tape<T>& tape, const StreamInputs<T>& in, const ForwardOptions<T>& opt) const {
  if (in.target.rank() != 2 || in.target.shape[1] != cfg_.layout.features)
    throw nc::ShapeError("mft: target must be [frames, " + std::to_string(cfg_.layout.features) + "], got " + nc::shape_str(in.target.shape));
  if (in.source && (in.source->rank() != 2 || in.source->shape[1] != cfg_.source_dim()))
    throw nc::ShapeError("mft: source must be [frames, " + std::to_string(cfg_.source_dim()) + "], got " + nc::shape_str(in.source->shape));
  if (in.trajectory && (in.trajectory->rank() != 2 || in.trajectory->shape[1] != cfg_.trajectory_dim() || in.trajectory->shape[0] != in.target.shape[0]))
    throw nc::ShapeError("mft: trajectory must be [target frames, " + std::to_string(cfg_.trajectory_dim()) + "], got " + nc::shape_str(in.trajectory->shape));
  auto c = conditioning(tape, in.task, tape.constant(Tensor<T>::scalar(static_cast<T>(in.t))));
  Streams<T> s = embed(tape, in, opt.position_offset);
  if (opt.trace)
    for (size_t i = 0; i < s.size(); ++i)
      if (s[i]) opt.trace->tokens_in[i] = s[i]->x.value();
  for (int b = 0; b < cfg_.blocks; ++b) s = block(tape, b, s, c, opt.trace, opt.position_offset);
  if (opt.trace)
    for (size_t i = 0; i < s.size(); ++i)
      if (s[i]) opt.trace->tokens_out[i] = s[i]->x.value();
  return head(tape, s[1]->x, c);
}

template <typename T>
StreamInputs<T> Mft<T>::prepare(TaskKind k, const Conditions& c, std::span<const T> x_t, int frames, double t) const {
  const auto& layout = cfg_.layout;
  const int D = layout.features, J = layout.joints;
  check_legality(k, c, frames, layout);
  if (static_cast<int64_t>(x_t.size()) != static_cast<int64_t>(frames) * D)
    throw nc::ShapeError("mft: x_t has " + std::to_string(x_t.size()) + " values for " + std::to_string(frames) + " frames");
  if (frames > cfg_.max_frames) throw MotionError("target has " + std::to_string(frames) + " frames, max_frames is " + std::to_string(cfg_.max_frames));
  StreamInputs<T> in;
  in.task = k;
  in.t = t;
  in.target = Tensor<T>(Shape{frames, D}, std::vector<T>(x_t.begin(), x_t.end()));
  if (k == TaskKind::Unconditional) in.source_null = true;
  if (c.source) {
    const auto& src = *c.source;
    if (src.frames > cfg_.max_frames) throw MotionError("source has " + std::to_string(src.frames) + " frames, max_frames is " + std::to_string(cfg_.max_frames));
    auto norm = normalizer.normalize<T>(src);
    Tensor<T> s(Shape{src.frames, D + 1});
    for (int f = 0; f < src.frames; ++f) {
      const bool keep = c.source_keep.empty() || c.source_keep[static_cast<size_t>(f)];
      for (int j = 0; j < D; ++j) s.at(f, j) = keep ? norm[static_cast<size_t>(f * D + j)] : T(0);
      s.at(f, D) = keep ? T(1) : T(0);
    }
    in.source = std::move(s);
  }
  if (c.text) in.text = c.text->tokens;
  if (c.trajectory) {
    const auto& h = *c.trajectory;
    Tensor<T> tr(Shape{frames, 4 * J});
    for (int f = 0; f < frames; ++f)
      for (int j = 0; j < J; ++j) {
        if (!h.constrained(f, j)) continue;
        auto p = h.coord(f, j);
        for (int a = 0; a < 3; ++a) tr.at(f, 3 * j + a) = static_cast<T>(normalizer.normalize_position(j, a, p[static_cast<size_t>(a)], layout));
        tr.at(f, 3 * J + j) = T(1);
      }
    in.trajectory = std::move(tr);
  }
  if (c.style) in.style = *c.style;
  return in;
}

template <typename T>
Var<T> Mft<T>::forward(Tape<T>& tape, TaskKind k, const Conditions& c, std::span<const T> x_t, int frames, double t) const {
  return forward_streams(tape, prepare(k, c, x_t, frames, t));
}

template <typename T>
std::vector<T> Mft<T>::velocity(TaskKind k, const Conditions& c, std::span<const T> x_t, int frames, double t) const {
  Tape<T> tape(false);
  return forward(tape, k, c, x_t, frames, t).value().data;
}

template class ParamStore<float>;
template class ParamStore<double>;
template class Mft<float>;
template class Mft<double>;

}  // namespace fm::model
