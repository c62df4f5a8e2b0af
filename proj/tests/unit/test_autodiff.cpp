#include "doctest.h"

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "supplycast/autodiff/ops.hpp"
#include "supplycast/errors.hpp"

using namespace supplycast;
using namespace supplycast::ad;
using testutil::gradcheck;
using testutil::random_tensor;

TEST_CASE("elementwise values") {
    Tape tape;
    auto x = tape.constant(Tensor::row({0.0, -1.0, 2.0}));
    CHECK(sigmoid(x).value()[0] == doctest::Approx(0.5));
    CHECK(leaky_relu(x).value()[1] == doctest::Approx(-0.01));
    CHECK(leaky_relu(x).value()[2] == doctest::Approx(2.0));
    CHECK(sigmoid(tape.constant(Tensor::scalar(-800))).value().item() == doctest::Approx(0.0));
    CHECK(sigmoid(tape.constant(Tensor::scalar(800))).value().item() == doctest::Approx(1.0));
}

TEST_CASE("square gradient and constants") {
    Tape tape;
    auto x = tape.variable(Tensor::scalar(3.0));
    auto c = tape.constant(Tensor::scalar(5.0));
    auto y = add(mul(x, x), c);
    tape.backward(y);
    CHECK(tape.grad(x).item() == doctest::Approx(6.0));
    CHECK(tape.grad(c).item() == 0.0);
}

TEST_CASE("backward requires a scalar") {
    Tape tape;
    auto x = tape.variable(Tensor::row({1.0, 2.0}));
    CHECK_THROWS_AS(tape.backward(x), ShapeError);
}

TEST_CASE("shape mismatches name both shapes") {
    Tape tape;
    auto a = tape.variable(Tensor(2, 3));
    auto b = tape.variable(Tensor(2, 3));
    try {
        matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string what = e.what();
        CHECK(what.find("[2, 3]") != std::string::npos);
    }
    CHECK_THROWS_AS(add(a, tape.constant(Tensor(3, 2))), ShapeError);
}

TEST_CASE("primitive gradients match central differences") {
    std::mt19937_64 rng(11);
    const double tol = 1e-4;
    auto A = random_tensor(3, 4, rng);
    auto B = random_tensor(4, 2, rng);
    auto C = random_tensor(3, 4, rng);
    auto r = random_tensor(1, 4, rng);
    auto s = random_tensor(3, 1, rng);

    CHECK(gradcheck([](Tape&, const std::vector<Var>& v) { return sum(matmul(v[0], v[1])); }, {A, B}) < tol);
    CHECK(gradcheck([](Tape&, const std::vector<Var>& v) { return sum(mul(v[0], sub(v[1], v[0]))); }, {A, C}) <
          tol);
    CHECK(gradcheck([](Tape&, const std::vector<Var>& v) { return squared_error(add_row(v[0], v[1]), v[2]); },
                    {A, r, C}) < tol);
    CHECK(gradcheck([](Tape&, const std::vector<Var>& v) { return squared_error(mul_rows(v[0], v[1]), v[2]); },
                    {A, s, C}) < tol);
    CHECK(gradcheck(
              [](Tape& t, const std::vector<Var>& v) {
                  return sum(mul(sigmoid(v[0]), t.constant(Tensor(3, 4, 0.7))));
              },
              {A}) < tol);
    CHECK(gradcheck([](Tape&, const std::vector<Var>& v) { return squared_error(leaky_relu(v[0]), v[1]); },
                    {A, C}) < tol);
    CHECK(gradcheck(
              [](Tape&, const std::vector<Var>& v) {
                  return squared_error(softmax(v[0], 1), scale(v[1], 0.1));
              },
              {A, C}) < tol);
    CHECK(gradcheck(
              [](Tape&, const std::vector<Var>& v) {
                  return squared_error(softmax(v[0], 0), scale(v[1], 0.1));
              },
              {A, C}) < tol);
    CHECK(gradcheck(
              [](Tape&, const std::vector<Var>& v) {
                  auto c = concat_cols({v[0], slice_cols(v[1], 1, 3)});
                  auto rws = concat_rows({v[0], v[1]});
                  return add(sum(mul(c, c)), squared_error(rws, scale(rws, 0.5)));
              },
              {A, C}) < tol);
    const std::vector<std::size_t> idx{2, 0, 2, 1};
    CHECK(gradcheck(
              [&](Tape&, const std::vector<Var>& v) {
                  auto g = gather_rows(v[0], idx);
                  auto back = scatter_add_rows(g, idx, 3);
                  return squared_error(back, v[1]);
              },
              {A, C}) < tol);
    auto col = random_tensor(5, 1, rng);
    const std::vector<std::size_t> seg{0, 1, 0, 2, 1};
    CHECK(gradcheck(
              [&](Tape& t, const std::vector<Var>& v) {
                  auto w = t.constant(Tensor::column({1, 2, 3, 4, 5}));
                  return sum(mul(segment_softmax(v[0], seg, 3), w));
              },
              {col}) < tol);
    CHECK(gradcheck(
              [](Tape&, const std::vector<Var>& v) {
                  return sum(mul_scalar(v[0], v[1]));
              },
              {A, Tensor::scalar(0.3)}) < tol);
}

TEST_CASE("segment softmax normalizes each group") {
    Tape tape;
    auto s = tape.constant(Tensor::column({0.1, 2.0, -1.0, 3.0, 0.5}));
    const std::vector<std::size_t> seg{0, 1, 0, 2, 1};
    auto a = segment_softmax(s, seg, 3).value();
    CHECK(a[0] + a[2] == doctest::Approx(1.0));
    CHECK(a[1] + a[4] == doctest::Approx(1.0));
    CHECK(a[3] == doctest::Approx(1.0));
}

TEST_CASE("gumbel softmax") {
    std::mt19937_64 rng(5);
    Tape tape;
    auto logits = tape.constant(random_tensor(6, 15, rng, -3, 3));

    SUBCASE("soft rows sum to one and are positive") {
        for (int k = 0; k < 20; ++k) {
            auto p = gumbel_softmax(logits, 0.5 + 0.1 * k, false, rng).value();
            for (std::size_t r = 0; r < p.rows(); ++r) {
                double total = 0.0;
                for (double x : p.row_span(r)) {
                    CHECK(x > 0.0);
                    total += x;
                }
                CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
    SUBCASE("hard rows are one-hot") {
        for (int k = 0; k < 20; ++k) {
            auto p = gumbel_softmax(logits, 1.0, true, rng).value();
            for (std::size_t r = 0; r < p.rows(); ++r) {
                int ones = 0;
                for (double x : p.row_span(r)) {
                    CHECK((x == 0.0 || x == 1.0));
                    ones += x == 1.0;
                }
                CHECK(ones == 1);
            }
        }
    }
    SUBCASE("temperature must be positive") {
        CHECK_THROWS_AS(gumbel_softmax(logits, 0.0, false, rng), std::invalid_argument);
        CHECK_THROWS_AS(gumbel_softmax(logits, -1.0, true, rng), std::invalid_argument);
    }
    SUBCASE("dominant logit wins hard samples") {
        auto l = tape.constant(Tensor::row({100.0, 0.0, 0.0}));
        int first = 0;
        const int n = 2000;
        for (int k = 0; k < n; ++k) first += gumbel_softmax(l, 1.0, true, rng).value()[0] == 1.0;
        CHECK(static_cast<double>(first) / n >= 0.99);
    }
    SUBCASE("hard sample frequencies follow softmax") {
        auto l = tape.constant(Tensor::row({std::log(0.6), std::log(0.3), std::log(0.1)}));
        std::array<int, 3> counts{};
        const int n = 20000;
        for (int k = 0; k < n; ++k) {
            auto p = gumbel_softmax(l, 1.0, true, rng).value();
            for (int j = 0; j < 3; ++j) counts[j] += p[j] == 1.0;
        }
        CHECK(counts[0] / double(n) == doctest::Approx(0.6).epsilon(0.03));
        CHECK(counts[1] / double(n) == doctest::Approx(0.3).epsilon(0.05));
    }
}

TEST_CASE("gumbel softmax gradients with fixed noise") {
    std::mt19937_64 rng(3);
    auto logits = random_tensor(2, 5, rng);
    auto noise = gumbel_noise(2, 5, rng);
    auto w = random_tensor(2, 5, rng);
    auto soft = [&](Tape& t, const std::vector<Var>& v) {
        return sum(mul(gumbel_softmax(v[0], noise, 0.7, false), t.constant(w)));
    };
    CHECK(gradcheck(soft, {logits}) < 1e-4);

    // Straight-through: the hard sample's gradient equals the soft one.
    Tape t1, t2;
    auto x1 = t1.variable(logits);
    auto x2 = t2.variable(logits);
    t1.backward(sum(mul(gumbel_softmax(x1, noise, 0.7, false), t1.constant(w))));
    t2.backward(sum(mul(gumbel_softmax(x2, noise, 0.7, true), t2.constant(w))));
    auto g1 = t1.grad(x1), g2 = t2.grad(x2);
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == doctest::Approx(g2[i]));
}

TEST_CASE("zero_grad clears accumulators") {
    Tape tape;
    auto x = tape.variable(Tensor::scalar(2.0));
    auto y = mul(x, x);
    tape.backward(y);
    CHECK(tape.grad(x).item() == doctest::Approx(4.0));
    tape.zero_grad();
    CHECK(tape.grad(x).item() == 0.0);
}
