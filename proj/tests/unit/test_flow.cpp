// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "fm/curriculum/adam.hpp"
#include "fm/flow/rectified_flow.hpp"
#include "fm/model/mft.hpp"

using namespace fm;
using namespace fm::flow;

namespace {

std::vector<double> randn(size_t n, uint64_t seed) {
  Rng rng(seed);
  return gaussian_noise<double>(n, rng);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double l2_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("interpolate hits both endpoints exactly") {
  auto x0 = randn(50, 1), x1 = randn(50, 2);
  CHECK(interpolate<double>(x0, x1, 0.0) == x0);
  CHECK(interpolate<double>(x0, x1, 1.0) == x1);
  std::vector<float> f0(7, 0.3f), f1(7, -1.1f);
  CHECK(interpolate<float>(f0, f1, 0.0) == f0);
  CHECK(interpolate<float>(f0, f1, 1.0) == f1);

  std::vector<double> zero(50, 0.0);
  auto q = interpolate<double>(zero, x1, 0.25);
  for (size_t i = 0; i < q.size(); ++i) CHECK(q[i] == doctest::Approx(0.25 * x1[i]).epsilon(1e-15));

  CHECK_THROWS_AS(interpolate<double>(x0, std::vector<double>(3), 0.5), nc::ShapeError);
  CHECK_THROWS_AS(interpolate<double>(x0, x1, 1.5), std::invalid_argument);
}

TEST_CASE("velocity target is the time derivative of the interpolant") {
  auto x0 = randn(40, 3), x1 = randn(40, 4);
  CHECK(velocity_target<double>(x0, x0) == std::vector<double>(40, 0.0));
  CHECK(velocity_target<double>(std::vector<double>(40, 0.0), x1) == x1);
  auto v = velocity_target<double>(x0, x1);
  const double h = 1e-4;
  for (double t : {0.1, 0.5, 0.9}) {
    auto a = interpolate<double>(x0, x1, t + h), b = interpolate<double>(x0, x1, t - h);
    for (size_t i = 0; i < v.size(); ++i) CHECK(std::abs((a[i] - b[i]) / (2 * h) - v[i]) < 1e-6);
  }
  CHECK_THROWS_AS(velocity_target<double>(x0, std::vector<double>(2)), nc::ShapeError);
}

TEST_CASE("rf_loss is the mean of squared residuals") {
  auto x0 = randn(24, 5), x1 = randn(24, 6);
  auto v = velocity_target<double>(x0, x1);
  CHECK(rf_loss_value<double>(v, x0, x1) == 0.0);

  std::vector<double> zeros(8, 0.0), ones(8, 1.0);
  CHECK(rf_loss_value<double>(zeros, zeros, ones) == 1.0);

  auto pred = randn(24, 7);
  double want = 0;
  for (size_t i = 0; i < pred.size(); ++i) want += std::pow(pred[i] - (x1[i] - x0[i]), 2);
  want /= 24;
  CHECK(rf_loss_value<double>(pred, x0, x1) == doctest::Approx(want).epsilon(1e-14));

  // Tape form over a ragged batch.
  nc::Tape<double> tape;
  auto p2 = randn(10, 8);
  std::vector<nc::Var<double>> preds = {tape.constant(nc::Tensor<double>({4, 6}, pred)), tape.constant(nc::Tensor<double>({2, 5}, p2))};
  auto t2 = randn(10, 9);
  std::vector<nc::Tensor<double>> targets = {nc::Tensor<double>({4, 6}, v), nc::Tensor<double>({2, 5}, t2)};
  double s = 0;
  for (size_t i = 0; i < 24; ++i) s += std::pow(pred[i] - v[i], 2);
  for (size_t i = 0; i < 10; ++i) s += std::pow(p2[i] - t2[i], 2);
  CHECK(rf_loss<double>(tape, preds, targets).value()[0] == doctest::Approx(s / 34).epsilon(1e-14));

  auto bad = p2;
  bad[3] = std::nan("");
  std::vector<nc::Var<double>> bad_preds = {preds[0], tape.constant(nc::Tensor<double>({2, 5}, bad))};
  try {
    rf_loss<double>(tape, bad_preds, targets);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("batch entry 1") != std::string::npos);
  }
}

TEST_CASE("timesteps are uniform over the bin centres") {
  Rng rng(11);
  double sum = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double t = sample_timestep(rng);
    REQUIRE(t > 0.0);
    REQUIRE(t < 1.0);
    sum += t;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.002);

  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(sample_timestep(a) == sample_timestep(b));
  Rng c(5);
  const double t = sample_timestep(c);
  CHECK(std::abs(t * kTrainTimesteps - 0.5 - std::round(t * kTrainTimesteps - 0.5)) < 1e-9);
}

TEST_CASE("Euler integration of constant and zero fields") {
  auto x1 = randn(64, 12), c = randn(64, 13);
  auto out = sample_ode<double>([&](double, const std::vector<double>&) { return c; }, x1, 50);
  for (size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out[i] - (x1[i] - c[i])) < 1e-5);

  std::vector<float> f1(64), fc(64);
  for (size_t i = 0; i < 64; ++i) {
    f1[i] = static_cast<float>(x1[i]);
    fc[i] = static_cast<float>(c[i]);
  }
  auto fout = sample_ode<float>([&](double, const std::vector<float>&) { return fc; }, f1, kDefaultSteps);
  for (size_t i = 0; i < fout.size(); ++i) CHECK(std::abs(fout[i] - (f1[i] - fc[i])) < 1e-5);

  auto same = sample_ode<double>([&](double, const std::vector<double>& x) { return std::vector<double>(x.size(), 0.0); }, x1, 50);
  CHECK(same == x1);
}

TEST_CASE("Euler error on an affine-in-t field matches its closed form") {
  auto x1 = randn(16, 14), a = randn(16, 15), b = randn(16, 16);
  for (int n : {1, 7, 50, 200}) {
    auto out = sample_ode<double>(
        [&](double t, const std::vector<double>&) {
          std::vector<double> v(a.size());
          for (size_t i = 0; i < v.size(); ++i) v[i] = a[i] + b[i] * t;
          return v;
        },
        x1, n);
    const double h = 1.0 / n;
    for (size_t i = 0; i < out.size(); ++i) {
      const double exact = x1[i] - a[i] - b[i] / 2;
      const double err = out[i] - exact;
      // Euler samples the left end of each interval going down in t.
      CHECK(std::abs(err + b[i] * h / 2) < 1e-12);
      CHECK(std::abs(err) <= std::abs(b[i]) * h / 2 + 1e-12);
    }
    auto mid = sample_ode<double>(
        [&](double t, const std::vector<double>&) {
          std::vector<double> v(a.size());
          for (size_t i = 0; i < v.size(); ++i) v[i] = a[i] + b[i] * t;
          return v;
        },
        x1, n, Integrator::Midpoint);
    for (size_t i = 0; i < mid.size(); ++i) CHECK(std::abs(mid[i] - (x1[i] - a[i] - b[i] / 2)) < 1e-12);
  }
}

TEST_CASE("sample_ode rejects bad input and reports the failing step") {
  auto x1 = randn(4, 1);
  CHECK_THROWS_AS(sample_ode<double>([](double, const std::vector<double>& x) { return x; }, x1, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_ode<double>([](double, const std::vector<double>&) { return std::vector<double>(3); }, x1, 5), nc::ShapeError);
  try {
    sample_ode<double>(
        [](double t, const std::vector<double>& x) {
          std::vector<double> v(x.size(), 0.0);
          if (t < 0.5) v[0] = std::numeric_limits<double>::infinity();
          return v;
        },
        x1, 10);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("step 6") != std::string::npos);
  }
}

TEST_CASE("refining the step count of a smooth field converges") {
  model::ModelConfig mc;
  mc.width = 32;
  mc.heads = 2;
  mc.blocks = 2;
  mc.max_frames = 16;
  model::Mft<double> m(mc);
  m.params().randomize(21, 0.05);
  const int frames = 6, D = mc.layout.features;
  Conditions cond;
  auto field = [&](double t, const std::vector<double>& x) { return m.velocity(TaskKind::Unconditional, cond, x, frames, t); };
  int ok = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    auto x1 = randn(static_cast<size_t>(frames * D), 100 + static_cast<uint64_t>(s));
    auto a = sample_ode<double>(field, x1, 10), b = sample_ode<double>(field, x1, 20), c = sample_ode<double>(field, x1, 40);
    if (l2_diff(a, b) >= l2_diff(b, c)) ++ok;
    if (s == 0) CHECK(sample_ode<double>(field, x1, 10) == a);
  }
  CHECK(ok >= (seeds * 9) / 10);
}

TEST_CASE("training on a one-point dataset recovers the point") {
  // Data-prediction parameterisation v = (x_t - theta) / t: the family holds
  // the exact optimum theta = x0 of the point-mass objective.
  const size_t n = 4 * 30;
  const auto x0 = randn(n, 77);
  nc::Parameter<double> theta("theta", nc::Tensor<double>({static_cast<int64_t>(n)}));
  curriculum::AdamConfig ac;
  ac.lr = 0.02;
  ac.beta2 = 0.9;  // 1/t^2 weighting gives rare huge gradients
  curriculum::Adam<double> adam(ac);
  Rng rng(78);
  const int steps = 2000, batch = 4;
  for (int s = 0; s < steps; ++s) {
    nc::Tape<double> tape;
    auto th = tape.parameter(theta);
    std::vector<nc::Var<double>> preds;
    std::vector<nc::Tensor<double>> targets;
    for (int b = 0; b < batch; ++b) {
      const auto x1 = gaussian_noise<double>(n, rng);
      const double t = sample_timestep(rng);
      auto xt = tape.constant(nc::Tensor<double>({static_cast<int64_t>(n)}, interpolate<double>(x0, x1, t)));
      preds.push_back(nc::scale(nc::sub(xt, th), 1.0 / t));
      targets.emplace_back(nc::Shape{static_cast<int64_t>(n)}, velocity_target<double>(x0, x1));
    }
    auto loss = rf_loss<double>(tape, preds, targets);
    theta.zero_grad();
    tape.backward(loss);
    adam.step({&theta}, 0.5 * (1.0 + std::cos(M_PI * s / steps)));
  }
  auto field = [&](double t, const std::vector<double>& x) {
    std::vector<double> v(x.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = (x[i] - theta.value.data[i]) / t;
    return v;
  };
  for (uint64_t s = 0; s < 5; ++s) {
    auto out = sample_ode<double>(field, randn(n, 500 + s), kDefaultSteps);
    CHECK(max_abs_diff(out, x0) < 1e-2);
  }
}
