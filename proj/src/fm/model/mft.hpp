// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fm/model/config.hpp"
#include "fm/motion/task.hpp"
#include "fm/numeric/ops.hpp"

namespace fm::model {

/// Per-feature affine normalisation of motions; identity by default.
struct Normalizer {
  std::vector<double> mean, stddev;

  static Normalizer identity(int features);
  /// Statistics over every frame of the given motions; stddev floored at 1e-3.
  static Normalizer fit(const std::vector<const MotionTensor*>& motions);

  template <typename T>
  std::vector<T> normalize(const MotionTensor& m) const;
  template <typename T>
  MotionTensor denormalize(std::span<const T> values, int frames, const FeatureLayout& layout) const;
  /// Normalises coordinate `axis` of `joint` with its position-channel statistics.
  double normalize_position(int joint, int axis, double v, const FeatureLayout& layout) const;
};

/// Name-ordered trainable parameters.
template <typename T>
class ParamStore {
 public:
  enum class Init { Zero, Xavier, Normal02 };
  nc::Parameter<T>& add(const std::string& name, nc::Shape shape, Init init, uint64_t seed);
  nc::Parameter<T>& get(const std::string& name) const;
  const std::vector<nc::Parameter<T>*>& all() const { return order_; }
  int64_t count() const;
  void zero_grad();
  /// Overwrites every parameter with N(0, stddev^2); used by tests to leave
  /// the zero-initialised regime.
  void randomize(uint64_t seed, double stddev);

 private:
  std::vector<std::unique_ptr<nc::Parameter<T>>> owned_;
  std::vector<nc::Parameter<T>*> order_;
  std::unordered_map<std::string, nc::Parameter<T>*> index_;
};

/// Frame position of a token, or kNonTemporal.
inline constexpr int kNonTemporal = -1;

template <typename T>
struct Stream {
  nc::Var<T> x;            // [tokens, width]
  std::vector<int> frame;  // per token
};

template <typename T>
using Streams = std::array<std::optional<Stream<T>>, kModalityCount>;

/// Numeric stream inputs, already normalised.
template <typename T>
struct StreamInputs {
  TaskKind task = TaskKind::Unconditional;
  double t = 0.0;
  nc::Tensor<T> target;                    // [N_T, D]
  bool source_null = false;                // single learned source token
  std::optional<nc::Tensor<T>> source;     // [N_S, D + 1]: features then keep flag
  std::optional<std::vector<int64_t>> text;
  std::optional<nc::Tensor<T>> trajectory;  // [N_T, 4J]: coords then mask
  std::optional<StyleCode> style;
};

template <typename T>
struct ForwardTrace {
  std::vector<nc::Tensor<T>> logits;  // block-major, then head; scaled, before softmax
  std::vector<Modality> order;        // modalities in concatenation order
  std::array<std::optional<nc::Tensor<T>>, kModalityCount> tokens_in, tokens_out;
};

template <typename T>
struct ForwardOptions {
  int position_offset = 0;  // added to every temporal frame position
  ForwardTrace<T>* trace = nullptr;
};

template <typename T>
class Mft {
 public:
  explicit Mft(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }
  Normalizer normalizer;

  /// Legality check, normalisation of conditions, and stream assembly.
  StreamInputs<T> prepare(TaskKind k, const Conditions& c, std::span<const T> x_t, int frames, double t) const;

  /// v_pred [N_T, D] in normalised units.
  nc::Var<T> forward_streams(nc::Tape<T>& tape, const StreamInputs<T>& in, const ForwardOptions<T>& opt = {}) const;
  nc::Var<T> forward(nc::Tape<T>& tape, TaskKind k, const Conditions& c, std::span<const T> x_t, int frames, double t) const;
  /// Gradient-free evaluation.
  std::vector<T> velocity(TaskKind k, const Conditions& c, std::span<const T> x_t, int frames, double t) const;

  // Building blocks, exposed for tests.
  nc::Var<T> conditioning(nc::Tape<T>& tape, TaskKind k, nc::Var<T> t) const;
  Streams<T> embed(nc::Tape<T>& tape, const StreamInputs<T>& in, int position_offset) const;
  Streams<T> block(nc::Tape<T>& tape, int b, const Streams<T>& s, nc::Var<T> c, ForwardTrace<T>* trace, int position_offset) const;
  /// Joint attention with the given per-modality normalised inputs.
  Streams<T> joint_attention(nc::Tape<T>& tape, int b, const Streams<T>& h, ForwardTrace<T>* trace, int position_offset) const;
  nc::Var<T> head(nc::Tape<T>& tape, nc::Var<T> target_tokens, nc::Var<T> c) const;

  /// Rotation angles [tokens, head_dim / 2] of the rope variants.
  nc::Tensor<T> rope_angles(Modality m, const std::vector<int>& frames, int position_offset) const;

 private:
  nc::Var<T> linear(nc::Tape<T>& tape, const std::string& name, nc::Var<T> x) const;
  void add_linear(const std::string& name, int in, int out, typename ParamStore<T>::Init init);

  ModelConfig cfg_;
  ParamStore<T> params_;
  nc::Tensor<T> text_table_;
  std::array<nc::Tensor<T>, kTaskCount> instructions_;
};

extern template class Mft<float>;
extern template class Mft<double>;
extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace fm::model
