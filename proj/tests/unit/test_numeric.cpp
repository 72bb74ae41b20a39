// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <functional>
#include <memory>

#include "fm/numeric/gradcheck.hpp"
#include "fm/numeric/ops.hpp"
#include "fm/util/rng.hpp"

using namespace fm;
using namespace fm::nc;

namespace {

Tensor<double> random_tensor(Shape s, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(s));
  for (auto& v : t.data) v = scale * rng.normal();
  return t;
}

// Contracts `out` with fixed random weights so every output entry matters.
Var<double> probe(Var<double> out, uint64_t seed) {
  Rng rng(seed ^ 0xABCDull);
  auto w = random_tensor(out.shape(), rng);
  return sum(mul(out, out.tape->constant(std::move(w))));
}

using OpFn = std::function<Var<double>(Tape<double>&, std::vector<Var<double>>&)>;

double op_error(const std::vector<Shape>& shapes, const OpFn& op, uint64_t seed, double input_scale = 1.0) {
  Rng rng(seed);
  std::vector<std::unique_ptr<Parameter<double>>> owned;
  std::vector<Parameter<double>*> ptrs;
  for (size_t i = 0; i < shapes.size(); ++i) {
    owned.push_back(std::make_unique<Parameter<double>>("p" + std::to_string(i), random_tensor(shapes[i], rng, input_scale)));
    ptrs.push_back(owned.back().get());
  }
  LossFn<double> fn = [&](Tape<double>& t) {
    std::vector<Var<double>> vars;
    for (auto* p : ptrs) vars.push_back(t.parameter(*p));
    return probe(op(t, vars), seed);
  };
  auto rep = check_gradients<double>(fn, ptrs);
  REQUIRE(rep.all_finite());
  return rep.max_rel_error();
}

int dim(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.index(hi - lo + 1)); }

}  // namespace

TEST_CASE("matmul with the identity returns the operand") {
  Tape<double> t;
  Rng rng(1);
  auto a = random_tensor({3, 3}, rng);
  Tensor<double> eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  auto y = matmul(t.constant(eye), t.constant(a));
  CHECK(y.value().data == a.data);
}

TEST_CASE("softmax of equal logits is uniform") {
  Tape<double> t;
  auto y = softmax(t.constant(Tensor<double>({1, 3}, {0.0, 0.0, 0.0})));
  for (double v : y.value().data) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("softmax is stable at large logits") {
  Tape<double> t;
  auto y = softmax(t.constant(Tensor<double>({1, 2}, {1000.0, 1000.0})));
  CHECK(y.value().data[0] == doctest::Approx(0.5));
}

TEST_CASE("layer norm of a constant row is zero") {
  Tape<double> t;
  auto y = layer_norm(t.constant(Tensor<double>({2, 4}, std::vector<double>(8, 3.25))));
  for (double v : y.value().data) CHECK(v == 0.0);
}

TEST_CASE("shape mismatches name the op and shapes") {
  Tape<double> t;
  auto a = t.constant(Tensor<double>({2, 3}));
  auto b = t.constant(Tensor<double>({2, 2}));
  try {
    matmul(a, b);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2, 3]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(concat<double>(std::vector<Var<double>>{a, b}, 0), ShapeError);
}

TEST_CASE("gradient of the sum of squares is 2x") {
  Parameter<double> p("x", Tensor<double>({3}, {1.0, -2.0, 0.5}));
  Tape<double> t;
  auto x = t.parameter(p);
  t.backward(sum(mul(x, x)));
  CHECK(p.grad.data == std::vector<double>{2.0, -4.0, 1.0});
}

TEST_CASE("gradient of the sum of a softmax vanishes") {
  Parameter<double> p("x", Tensor<double>({2, 3}, {0.1, 2.0, -1.0, 3.0, 0.0, 0.5}));
  Tape<double> t;
  t.backward(sum(softmax(t.parameter(p))));
  for (double g : p.grad.data) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("backward rejects non-scalar losses and repeated replays") {
  Parameter<double> p("x", Tensor<double>({2}, {1.0, 2.0}));
  Tape<double> t;
  auto x = t.parameter(p);
  CHECK_THROWS_AS(t.backward(x), ShapeError);
  auto l = sum(x);
  t.backward(l);
  CHECK_THROWS_AS(t.backward(l), std::logic_error);
}

TEST_CASE("a shared operand accumulates gradients from every consumer") {
  Parameter<double> p("x", Tensor<double>({2}, {3.0, -1.0}));
  Tape<double> t;
  auto x = t.parameter(p);
  auto y = add(mul(x, x), scale(x, 4.0));  // x^2 + 4x
  t.backward(sum(mul(y, x)));              // x^3 + 4x^2 -> 3x^2 + 8x
  CHECK(p.grad.data[0] == doctest::Approx(27.0 + 24.0));
  CHECK(p.grad.data[1] == doctest::Approx(3.0 - 8.0));
}

TEST_CASE("each tape node is replayed once, after its consumers") {
  Parameter<double> p("x", Tensor<double>({1}, {2.0}));
  Tape<double> t;
  auto x = t.parameter(p);
  std::vector<int32_t> order;
  auto counted = [&](Var<double> in) {
    Var<double> inputs[] = {in};
    const int32_t src = in.id;
    return t.record("counted", in.value(), inputs, [&order, src](Tape<double>& tape, int32_t self) {
      order.push_back(self);
      auto g = tape.grad(self);
      auto gi = tape.grad(src);
      for (size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    });
  };
  auto a = counted(x);
  auto b = counted(a);
  auto c = counted(a);
  t.backward(sum(add(b, c)));
  REQUIRE(order.size() == 3);
  CHECK(order[0] == c.id);
  CHECK(order[1] == b.id);
  CHECK(order[2] == a.id);
  CHECK(p.grad.data[0] == doctest::Approx(2.0));
}

TEST_CASE("gradient check of a quadratic reports no error") {
  Parameter<double> p("x", Tensor<double>({2}, {1.0, 2.0}));
  auto rep = check_gradients<double>([&](Tape<double>& t) { auto x = t.parameter(p); return sum(mul(x, x)); }, {&p});
  CHECK(rep.max_rel_error() < 1e-8);
  CHECK(p.value.data == std::vector<double>{1.0, 2.0});
}

TEST_CASE("gradient check flags a wrong backward rule") {
  Parameter<double> p("x", Tensor<double>({3}, {0.3, -0.7, 1.1}));
  auto rep = check_gradients<double>(
      [&](Tape<double>& t) {
        auto x = t.parameter(p);
        Var<double> inputs[] = {x};
        Tensor<double> v = x.value();
        for (auto& e : v.data) e = e * e;
        auto y = t.record("bad_square", std::move(v), inputs, [id = x.id](Tape<double>& tape, int32_t self) {
          auto g = tape.grad(self);
          auto gx = tape.grad(id);
          for (size_t i = 0; i < g.size(); ++i) gx[i] += 3.0 * g[i];  // wrong on purpose
        });
        return sum(y);
      },
      {&p});
  CHECK(rep.max_rel_error() > 1e-2);
}

TEST_CASE("gradient check reports non-finite values") {
  Parameter<double> p("x", Tensor<double>({1}, {1.0}));
  auto rep = check_gradients<double>(
      [&](Tape<double>& t) { return scale(sum(t.parameter(p)), std::numeric_limits<double>::infinity()); }, {&p});
  CHECK_FALSE(rep.all_finite());
  CHECK_FALSE(rep.passed(1e-4));
}

TEST_CASE("rotary rotation preserves row norms") {
  Rng rng(3);
  Tape<double> t;
  auto x = random_tensor({5, 8}, rng);
  auto ang = random_tensor({5, 4}, rng, 10.0);
  auto y = rotary(t.constant(x), ang);
  for (int r = 0; r < 5; ++r) {
    double a = 0, b = 0;
    for (int c = 0; c < 8; ++c) {
      a += x.at(r, c) * x.at(r, c);
      b += y.value().at(r, c) * y.value().at(r, c);
    }
    CHECK(std::abs(std::sqrt(a) - std::sqrt(b)) < 1e-6);
  }
}

TEST_CASE("forward results are bitwise deterministic") {
  auto run = [] {
    Rng rng(11);
    Tape<double> t;
    auto a = t.constant(random_tensor({4, 6}, rng));
    auto b = t.constant(random_tensor({6, 5}, rng));
    return gelu(layer_norm(softmax(matmul(a, b)))).value().data;
  };
  CHECK(run() == run());
}

TEST_CASE("every op agrees with central differences over 50 random cases") {
  const std::vector<std::pair<std::string, std::function<double(uint64_t)>>> ops = {
      {"matmul", [](uint64_t s) {
         Rng r(s);
         int m = dim(r, 1, 4), k = dim(r, 1, 4), n = dim(r, 1, 4);
         return op_error({{m, k}, {k, n}}, [](Tape<double>&, auto& v) { return matmul(v[0], v[1]); }, s);
       }},
      {"matmul_t", [](uint64_t s) {
         Rng r(s);
         int b = dim(r, 1, 2), m = dim(r, 1, 3), k = dim(r, 1, 4), n = dim(r, 1, 3);
         return op_error({{b, m, k}, {n, k}}, [](Tape<double>&, auto& v) { return matmul(v[0], v[1], true); }, s);
       }},
      {"add", [](uint64_t s) {
         Rng r(s);
         int m = dim(r, 1, 4), n = dim(r, 1, 4);
         return op_error({{m, n}, {n}}, [](Tape<double>&, auto& v) { return add(v[0], v[1]); }, s);
       }},
      {"sub", [](uint64_t s) {
         Rng r(s);
         int m = dim(r, 1, 4), n = dim(r, 1, 4);
         return op_error({{m, n}, {m, n}}, [](Tape<double>&, auto& v) { return sub(v[0], v[1]); }, s);
       }},
      {"mul", [](uint64_t s) {
         Rng r(s);
         int m = dim(r, 1, 4), n = dim(r, 1, 4);
         return op_error({{m, n}, {n}}, [](Tape<double>&, auto& v) { return mul(v[0], v[1]); }, s);
       }},
      {"scale", [](uint64_t s) {
         Rng r(s);
         int n = dim(r, 1, 6);
         return op_error({{n}}, [](Tape<double>&, auto& v) { return add_scalar(scale(v[0], -1.7), 0.3); }, s);
       }},
      {"concat_split", [](uint64_t s) {
         Rng r(s);
         int m = dim(r, 1, 3), a = dim(r, 1, 3), b = dim(r, 1, 3);
         return op_error({{m, a}, {m, b}},
                         [](Tape<double>&, auto& v) {
                           auto c = concat<double>(std::vector<Var<double>>{v[0], v[1]}, 1);
                           auto c0 = concat<double>(std::vector<Var<double>>{c, c}, 0);
                           auto parts = split(c0, 0, 2);
                           return mul(parts[0], parts[1]);
                         },
                         s);
       }},
      {"slice_reshape_transpose", [](uint64_t s) {
         Rng r(s);
         int m = dim(r, 2, 4), n = dim(r, 2, 4);
         return op_error({{m, n}},
                         [m, n](Tape<double>&, auto& v) {
                           auto t = transpose(reshape(v[0], {n, m}));
                           return slice(t, 0, 1, m - 1);
                         },
                         s);
       }},
      {"layer_norm", [](uint64_t s) {
         Rng r(s);
         int m = dim(r, 1, 3), n = dim(r, 2, 6);
         return op_error({{m, n}}, [](Tape<double>&, auto& v) { return layer_norm(v[0]); }, s);
       }},
      {"softmax", [](uint64_t s) {
         Rng r(s);
         int m = dim(r, 1, 3), n = dim(r, 1, 6);
         return op_error({{m, n}}, [](Tape<double>&, auto& v) { return softmax(v[0]); }, s, 2.0);
       }},
      {"silu", [](uint64_t s) {
         Rng r(s);
         return op_error({{dim(r, 1, 8)}}, [](Tape<double>&, auto& v) { return silu(v[0]); }, s, 2.0);
       }},
      {"gelu", [](uint64_t s) {
         Rng r(s);
         return op_error({{dim(r, 1, 8)}}, [](Tape<double>&, auto& v) { return gelu(v[0]); }, s, 2.0);
       }},
      {"sinusoidal", [](uint64_t s) {
         Rng r(s);
         int n = dim(r, 1, 3);
         return op_error({{n}}, [](Tape<double>&, auto& v) { return sinusoidal_embedding(v[0], 8); }, s);
       }},
      {"gather", [](uint64_t s) {
         Rng r(s);
         int rows = dim(r, 2, 5), c = dim(r, 1, 4);
         std::vector<int64_t> ids;
         for (int i = 0; i < 4; ++i) ids.push_back(r.index(rows));
         return op_error({{rows, c}}, [ids](Tape<double>&, auto& v) { return gather(v[0], std::span<const int64_t>(ids)); }, s);
       }},
      {"masked_fill", [](uint64_t s) {
         Rng r(s);
         int n = dim(r, 2, 8);
         std::vector<uint8_t> mask;
         for (int i = 0; i < n; ++i) mask.push_back(r.bernoulli(0.5));
         return op_error({{n}}, [mask](Tape<double>&, auto& v) { return masked_fill(v[0], std::span<const uint8_t>(mask), -2.0); }, s);
       }},
      {"sum_mean", [](uint64_t s) {
         Rng r(s);
         int n = dim(r, 1, 6);
         return op_error({{n}}, [](Tape<double>&, auto& v) { return mul(mean(v[0]), sum(mul(v[0], v[0]))); }, s);
       }},
      {"rotary", [](uint64_t s) {
         Rng r(s);
         int m = dim(r, 1, 4), half = dim(r, 1, 3);
         auto ang = random_tensor({m, half}, r, 3.0);
         return op_error({{m, 2 * half}}, [ang](Tape<double>&, auto& v) { return rotary(v[0], ang); }, s);
       }},
  };
  for (const auto& [name, fn] : ops) {
    double worst = 0.0;
    for (uint64_t seed = 0; seed < 50; ++seed) worst = std::max(worst, fn(seed + 1));
    INFO(name);
    CHECK(worst < 1e-4);
  }
}
