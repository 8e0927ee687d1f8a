#include <doctest.h>

#include <cstring>
#include <functional>
#include <vector>

#include <latsep/autodiff.hpp>

#include "test_util.hpp"

using namespace latsep;
using namespace latsep::ad;
using latsep::testutil::max_fd_error;
using latsep::testutil::random_mat;
using latsep::testutil::random_mat_off_zero;

namespace {

using Build = std::function<Var(Tape&, const std::vector<Var>&)>;

// analytic gradient of every input vs central finite differences
void check_gradients(std::vector<Mat> inputs, const Build& build, double tol = 1e-4) {
  Tape tape;
  std::vector<Var> leaves;
  for (const Mat& m : inputs) leaves.push_back(tape.leaf(m));
  Var root = build(tape, leaves);
  tape.backward(root.id());

  auto eval = [&]() {
    Tape fresh;
    std::vector<Var> fresh_leaves;
    for (const Mat& m : inputs) fresh_leaves.push_back(fresh.leaf(m));
    return build(fresh, fresh_leaves).value()(0, 0);
  };
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const Mat analytic = leaves[i].grad();
    CHECK(max_fd_error(inputs[i], analytic, eval) < tol);
  }
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("matmul by identity is a no-op") {
  Mat a(2, 2);
  a << 1, 2, 3, 4;
  CHECK(ops::matmul(a, Mat::Identity(2, 2)) == a);
}

TEST_CASE("tanh fixes zero") {
  Mat z = Mat::Zero(1, 1);
  CHECK(ops::tanh(z)(0, 0) == 0.0);
}

TEST_CASE("leaky_relu hand case") {
  Mat x(1, 2);
  x << -1.0, 2.0;
  const Mat y = ops::leaky_relu(x, 0.01);
  CHECK(y(0, 0) == doctest::Approx(-0.01));
  CHECK(y(0, 1) == 2.0);
}

TEST_CASE("sum_all backward is all-ones") {
  Tape tape;
  Var x = tape.leaf(random_mat(3, 4, 42));
  Var root = sum_all(x);
  tape.backward(root.id());
  CHECK(x.grad() == Mat::Ones(3, 4));
}

TEST_CASE("d(x^2)/dx = 2x") {
  Tape tape;
  Mat v(1, 1);
  v << 3.0;
  Var x = tape.leaf(v);
  Var root = sum_all(hadamard(x, x));
  tape.backward(root.id());
  CHECK(x.grad()(0, 0) == 6.0);
}

TEST_CASE("random five-parameter graph matches finite differences") {
  std::vector<Mat> inputs = {random_mat(2, 3, 1), random_mat(3, 2, 2), random_mat(2, 2, 3),
                             random_mat(1, 2, 4), random_mat_off_zero(2, 2, 5)};
  check_gradients(inputs, [](Tape&, const std::vector<Var>& p) {
    Var h = tanh(matmul(p[0], p[1]));
    Var z = add(hadamard(h, p[2]), p[3]);  // row-broadcast bias
    Var w = sigmoid(add(z, abs(p[4])));
    return sum_all(hadamard(w, exp(scale(p[2], 0.3))));
  });
}

TEST_CASE("every op kind matches finite differences on 50 seeded inputs") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Mat w23 = random_mat(2, 3, 1000 + seed);
    const Mat w21 = random_mat(2, 1, 2000 + seed);
    const Mat w25 = random_mat(2, 5, 3000 + seed);

    // matmul
    check_gradients({random_mat(2, 4, seed), random_mat(4, 3, 60 + seed)},
                    [&](Tape& t, const std::vector<Var>& p) {
                      return sum_all(hadamard(matmul(p[0], p[1]), t.leaf(w23)));
                    });
    // add, same shape and row-vector bias broadcast
    check_gradients({random_mat(2, 3, seed), random_mat(2, 3, 70 + seed)},
                    [&](Tape& t, const std::vector<Var>& p) {
                      return sum_all(hadamard(add(p[0], p[1]), t.leaf(w23)));
                    });
    check_gradients({random_mat(2, 3, seed), random_mat(1, 3, 80 + seed)},
                    [&](Tape& t, const std::vector<Var>& p) {
                      return sum_all(hadamard(add(p[0], p[1]), t.leaf(w23)));
                    });
    // sub
    check_gradients({random_mat(2, 3, seed), random_mat(2, 3, 90 + seed)},
                    [&](Tape& t, const std::vector<Var>& p) {
                      return sum_all(hadamard(sub(p[0], p[1]), t.leaf(w23)));
                    });
    // hadamard
    check_gradients({random_mat(2, 3, seed), random_mat(2, 3, 100 + seed)},
                    [&](Tape& t, const std::vector<Var>& p) {
                      return sum_all(hadamard(hadamard(p[0], p[1]), t.leaf(w23)));
                    });
    // scale
    check_gradients({random_mat(2, 3, seed)}, [&](Tape& t, const std::vector<Var>& p) {
      return sum_all(hadamard(scale(p[0], -1.7), t.leaf(w23)));
    });
    // leaky_relu and abs: inputs kept away from the kink
    check_gradients({random_mat_off_zero(2, 3, seed)}, [&](Tape& t, const std::vector<Var>& p) {
      return sum_all(hadamard(leaky_relu(p[0], 0.01), t.leaf(w23)));
    });
    check_gradients({random_mat_off_zero(2, 3, seed)}, [&](Tape& t, const std::vector<Var>& p) {
      return sum_all(hadamard(abs(p[0]), t.leaf(w23)));
    });
    // tanh, sigmoid, exp
    check_gradients({random_mat(2, 3, seed)}, [&](Tape& t, const std::vector<Var>& p) {
      return sum_all(hadamard(tanh(p[0]), t.leaf(w23)));
    });
    check_gradients({random_mat(2, 3, seed)}, [&](Tape& t, const std::vector<Var>& p) {
      return sum_all(hadamard(sigmoid(p[0]), t.leaf(w23)));
    });
    check_gradients({random_mat(2, 3, seed)}, [&](Tape& t, const std::vector<Var>& p) {
      return sum_all(hadamard(exp(p[0]), t.leaf(w23)));
    });
    // log needs positive entries
    Mat positive = random_mat(2, 3, seed).array().abs() + 0.5;
    check_gradients({positive}, [&](Tape& t, const std::vector<Var>& p) {
      return sum_all(hadamard(log(p[0]), t.leaf(w23)));
    });
    // sum_all / sum_rows
    check_gradients({random_mat(2, 3, seed)},
                    [&](Tape&, const std::vector<Var>& p) { return tanh(sum_all(p[0])); });
    check_gradients({random_mat(2, 3, seed)}, [&](Tape& t, const std::vector<Var>& p) {
      return sum_all(hadamard(sum_rows(p[0]), t.leaf(w21)));
    });
    // concat_cols / split_cols
    check_gradients({random_mat(2, 3, seed), random_mat(2, 2, 110 + seed)},
                    [&](Tape& t, const std::vector<Var>& p) {
                      return sum_all(hadamard(concat_cols(p[0], p[1]), t.leaf(w25)));
                    });
    check_gradients({random_mat(2, 5, seed)}, [&](Tape& t, const std::vector<Var>& p) {
      return sum_all(hadamard(split_cols(p[0], 1, 3), t.leaf(w23)));
    });
  }
}

TEST_CASE("identical tapes give bitwise-identical gradients") {
  auto run = [](std::vector<Mat>& grads) {
    Tape tape;
    Var a = tape.leaf(random_mat(3, 4, 7));
    Var b = tape.leaf(random_mat(4, 2, 8));
    Var root = sum_all(sigmoid(matmul(leaky_relu(a, 0.01), b)));
    tape.backward(root.id());
    grads = {a.grad(), b.grad()};
  };
  std::vector<Mat> first, second;
  run(first);
  run(second);
  for (std::size_t i = 0; i < first.size(); ++i) {
    REQUIRE(first[i].size() == second[i].size());
    CHECK(std::memcmp(first[i].data(), second[i].data(),
                      sizeof(double) * static_cast<std::size_t>(first[i].size())) == 0);
  }
}

TEST_CASE("taped forward equals untaped forward entry for entry") {
  const Mat a = random_mat(3, 4, 11);
  const Mat b = random_mat(4, 4, 12);
  Tape tape;
  Var va = tape.leaf(a);
  Var vb = tape.leaf(b);
  CHECK(matmul(va, vb).value() == ops::matmul(a, b));
  CHECK(tanh(va).value() == ops::tanh(a));
  CHECK(sigmoid(va).value() == ops::sigmoid(a));
  CHECK(leaky_relu(va, 0.01).value() == ops::leaky_relu(a, 0.01));
  CHECK(sum_rows(va).value() == ops::sum_rows(a));
  CHECK(split_cols(va, 1, 2).value() == ops::split_cols(a, 1, 2));
}

TEST_CASE("shape and domain errors") {
  CHECK_THROWS_AS((void)ops::matmul(Mat::Zero(2, 3), Mat::Zero(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS((void)ops::add(Mat::Zero(2, 3), Mat::Zero(3, 3)), std::invalid_argument);
  CHECK_THROWS_AS((void)ops::hadamard(Mat::Zero(2, 3), Mat::Zero(1, 3)), std::invalid_argument);
  CHECK_THROWS_AS((void)ops::log(Mat::Zero(2, 2)), std::domain_error);
  CHECK_THROWS_AS((void)ops::split_cols(Mat::Zero(2, 3), 2, 2), std::invalid_argument);

  Tape tape;
  Var nonscalar = tape.leaf(Mat::Zero(2, 2));
  CHECK_THROWS_AS(tape.backward(nonscalar.id()), std::logic_error);
}

}  // TEST_SUITE
