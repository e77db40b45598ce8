#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "nesy/error.hpp"
#include "nesy/optim.hpp"
#include "nesy/rng.hpp"
#include "nesy/tensor.hpp"

using namespace nesy;
using nesy::testing::check_gradients;

TEST_SUITE_BEGIN("tensor");

TEST_CASE("elementwise arithmetic") {
  Tensor a = Tensor::vector({1, 2});
  Tensor b = Tensor::vector({3, 4});
  Tensor c = add(a, b);
  CHECK(c.values() == std::vector<double>{4, 6});
  CHECK(sub(b, a).values() == std::vector<double>{2, 2});
  CHECK(mul(a, b).values() == std::vector<double>{3, 8});
  CHECK(div(b, a).values() == std::vector<double>{3, 2});
}

TEST_CASE("sigmoid midpoint and tanh") {
  CHECK(sigmoid(Tensor::vector({0})).values()[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(tanh(Tensor::vector({0})).values()[0] == doctest::Approx(0.0));
  CHECK(sigmoid(Tensor::vector({100})).values()[0] == doctest::Approx(1.0));
}

TEST_CASE("shape errors carry both shapes") {
  Tensor a = Tensor::vector({1, 2, 3});
  Tensor b = Tensor::vector({1, 2});
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("[3]"), ValidationError);
  CHECK_THROWS_WITH_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})),
                       doctest::Contains("[2,3]"), ValidationError);
  CHECK_THROWS_AS(Tensor::from({1, 2, 3}, {2, 2}), ValidationError);
}

TEST_CASE("broadcasting column against matrix") {
  Tensor m = Tensor::from({1, 2, 3, 4, 5, 6}, {2, 3});
  Tensor col = Tensor::from({10, 100}, {2, 1});
  Tensor row = Tensor::from({1, 2, 3}, {3});
  CHECK(mul(m, col).values() == std::vector<double>{10, 20, 30, 400, 500, 600});
  CHECK(add(m, row).values() == std::vector<double>{2, 4, 6, 5, 7, 9});
  CHECK(add(m, Tensor::scalar(1)).values() == std::vector<double>{2, 3, 4, 5, 6, 7});
}

TEST_CASE("matmul forward") {
  Tensor a = Tensor::from({1, 2, 3, 4}, {2, 2});
  Tensor b = Tensor::from({5, 6, 7, 8}, {2, 2});
  CHECK(matmul(a, b).values() == std::vector<double>{19, 22, 43, 50});
}

TEST_CASE("gradient of mean of squares") {
  // d/dx mean(x^2) at [1,2,3] = [2/3, 4/3, 2]
  Tensor x = Tensor::vector({1, 2, 3}, true);
  Tensor loss = mean(mul(x, x));
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(4.0 / 3).epsilon(1e-12));
  CHECK(x.grad()[2] == doctest::Approx(2.0).epsilon(1e-12));

  Tensor y = Tensor::vector({1, 2, 3}, true);
  auto rep = check_gradients([&] { return mean(mul(y, y)); }, {y});
  CHECK_MESSAGE(rep.pass, rep.worst_detail);
}

TEST_CASE("backward basics") {
  SUBCASE("identity gradient of sum") {
    Tensor w = Tensor::vector({1, 1}, true);
    backward(sum(w));
    CHECK(w.grad() == std::vector<double>{1, 1});
  }
  SUBCASE("power rule") {
    Tensor w = Tensor::vector({3}, true);
    backward(sum(mul(w, w)));
    CHECK(w.grad()[0] == doctest::Approx(6.0).epsilon(1e-15));
  }
  SUBCASE("non-scalar loss rejected") {
    Tensor w = Tensor::vector({1, 2}, true);
    CHECK_THROWS_AS(backward(mul(w, w)), ValidationError);
  }
  SUBCASE("repeated backward accumulates") {
    Tensor w = Tensor::vector({2}, true);
    Tensor loss = sum(mul(w, w));
    backward(loss);
    backward(loss);
    CHECK(w.grad()[0] == doctest::Approx(8.0));  // 2 * dw(w^2)
  }
}

TEST_CASE("clamp semantics") {
  Tensor x = Tensor::vector({-1.0, 0.5, 2.0}, true);
  Tensor c = clamp(x, 0.0, 1.0);
  CHECK(c.values() == std::vector<double>{0.0, 0.5, 1.0});
  backward(sum(c));
  // zero outside the active band, identity strictly inside
  CHECK(x.grad() == std::vector<double>{0.0, 1.0, 0.0});
  CHECK_THROWS_AS(clamp(x, 1.0, 1.0), ValidationError);
}

TEST_CASE("finite-difference battery over primitives") {
  Rng rng(7);
  auto randvec = [&](std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
  };

  for (int rep = 0; rep < 5; ++rep) {
    Tensor a = Tensor::from(randvec(6, 0.2, 0.9), {2, 3}, true);
    Tensor b = Tensor::from(randvec(6, 0.2, 0.9), {2, 3}, true);
    Tensor col = Tensor::from(randvec(2, 0.3, 0.8), {2, 1}, true);
    Tensor m2 = Tensor::from(randvec(6, -0.8, 0.8), {3, 2}, true);

    auto run = [&](const char* name, std::function<Tensor()> f,
                   std::vector<Tensor> leaves) {
      auto r = check_gradients(f, std::move(leaves));
      CHECK_MESSAGE(r.pass, name << ": " << r.worst_detail);
    };

    run("add", [&] { return sum(add(a, b)); }, {a, b});
    run("sub-bcast", [&] { return sum(sub(a, col)); }, {a, col});
    run("mul-bcast", [&] { return sum(mul(a, col)); }, {a, col});
    run("div", [&] { return sum(div(a, b)); }, {a, b});
    run("pow", [&] { return sum(pow(a, 2.7)); }, {a});
    run("exp", [&] { return sum(exp(m2)); }, {m2});
    run("log", [&] { return sum(log(a)); }, {a});
    run("sigmoid", [&] { return sum(sigmoid(m2)); }, {m2});
    run("tanh", [&] { return sum(tanh(m2)); }, {m2});
    run("matmul", [&] { return sum(matmul(a, m2)); }, {a, m2});
    run("mean", [&] { return mean(mul(a, a)); }, {a});
    run("clamp-inside", [&] { return sum(clamp(a, 0.05, 0.95)); }, {a});
    run("concat0", [&] { return sum(concat({a, b}, 0)); }, {a, b});
    run("concat1", [&] { return sum(mul(concat({a, b}, 1), concat({b, a}, 1))); }, {a, b});
    run("slice", [&] { return sum(slice(a, 1, 1, 2)); }, {a});
    run("index_rows", [&] { return sum(index_rows(a, {1, 0, 1})); }, {a});
    run("reshape", [&] { return sum(mul(reshape(a, {6}), reshape(b, {6}))); }, {a, b});
    run("broadcast_to", [&] { return sum(mul(broadcast_to(col, {2, 3}), a)); }, {col, a});
    run("minimum", [&] { return sum(minimum(a, b)); }, {a, b});
    run("maximum", [&] { return sum(maximum(a, b)); }, {a, b});
  }
}

TEST_CASE("backward is deterministic") {
  auto run = [] {
    Rng rng(11);
    std::vector<double> vals(12);
    for (auto& v : vals) v = rng.uniform(-1, 1);
    Tensor w = Tensor::from(vals, {3, 4}, true);
    Tensor x = Tensor::from({1, 2, 3}, {1, 3});
    Tensor loss = mean(sigmoid(matmul(x, w)));
    backward(loss);
    return w.grad();
  };
  auto g1 = run();
  auto g2 = run();
  CHECK(g1 == g2);  // bit-identical
}

TEST_CASE("adam") {
  SUBCASE("zero gradient is a fixed point") {
    std::vector<Tensor> params{Tensor::vector({1.5, -2.5}, true)};
    params[0].zero_grad();
    AdamState state;
    adam_step(params, state, {});
    CHECK(params[0].values() == std::vector<double>{1.5, -2.5});
    CHECK(state.step == 1);
  }
  SUBCASE("first bias-corrected step with unit gradient") {
    std::vector<Tensor> params{Tensor::vector({0.7}, true)};
    backward(sum(params[0]));  // gradient 1
    AdamState state;
    AdamConfig cfg;  // lr = 1e-3
    adam_step(params, state, cfg);
    // hand evaluation: m_hat = 1, v_hat = 1 -> delta = lr / (1 + eps)
    const double expected = 0.7 - 1e-3 / (1.0 + 1e-8);
    CHECK(params[0].values()[0] == doctest::Approx(expected).epsilon(1e-15));
  }
  SUBCASE("identical params and grads move identically") {
    std::vector<Tensor> params{Tensor::vector({0.3}, true), Tensor::vector({0.3}, true)};
    backward(sum(mul(params[0], params[0])));
    backward(sum(mul(params[1], params[1])));
    AdamState state;
    adam_step(params, state, {});
    CHECK(params[0].values() == params[1].values());
  }
}

TEST_SUITE_END();
