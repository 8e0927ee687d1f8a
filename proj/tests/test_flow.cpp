#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include <latsep/flow.hpp>

#include "test_util.hpp"

using namespace latsep;
using latsep::testutil::max_fd_error;
using latsep::testutil::random_mat;
using latsep::testutil::rel_error;

namespace {

void randomize(FlowModel& model, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  model.visit_parameters([&](Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = gauss(rng);
  });
}

// one-layer model whose scale net outputs a constant s and translation net a
// constant t, regardless of input
FlowModel constant_coupling(double s, double t) {
  FlowModel model = init_flow(2, 1, 4, 0);
  model.layers()[0].scale_net.l3.bias(0, 0) = std::atanh(s);
  model.layers()[0].translation_net.l3.bias(0, 0) = t;
  return model;
}

Mat numerical_jacobian(const FlowModel& model, const Mat& row, double h = 1e-6) {
  const int dim = model.dim();
  Mat jac(dim, dim);
  for (int j = 0; j < dim; ++j) {
    Mat up = row, down = row;
    up(0, j) += h;
    down(0, j) -= h;
    const Mat fu = model.forward(up);
    const Mat fd = model.forward(down);
    for (int i = 0; i < dim; ++i) jac(i, j) = (fu(0, i) - fd(0, i)) / (2.0 * h);
  }
  return jac;
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("fresh flow is exactly the identity") {
  const FlowModel model = init_flow(8, 3, 8, 123);
  const Mat w = random_mat(5, 8, 9);
  Vec logdet;
  const Mat out = model.forward(w, &logdet);
  CHECK(out == w);
  CHECK(logdet == Vec::Zero(5));
  CHECK(model.inverse(w) == w);
}

TEST_CASE("hand-evaluated affine coupling") {
  // s = 0.5, t = 1, passive first coordinate: (3, 2) -> (3, 2 e^0.5 + 1)
  const FlowModel model = constant_coupling(0.5, 1.0);
  Mat w(1, 2);
  w << 3.0, 2.0;
  Vec logdet;
  const Mat out = model.forward(w, &logdet);
  CHECK(out(0, 0) == 3.0);
  CHECK(out(0, 1) == doctest::Approx(2.0 * std::exp(0.5) + 1.0).epsilon(1e-12));
  CHECK(logdet(0) == doctest::Approx(0.5).epsilon(1e-12));

  Mat y(1, 2);
  y << 3.0, 2.0 * std::exp(0.5) + 1.0;
  const Mat back = model.inverse(y);
  CHECK(back(0, 0) == 3.0);
  CHECK(back(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("same seed gives bitwise-identical parameters") {
  const FlowModel a = init_flow(16, 3, 16, 77);
  const FlowModel b = init_flow(16, 3, 16, 77);
  std::vector<const Mat*> pa, pb;
  a.visit_parameters([&pa](const Mat& m) { pa.push_back(&m); });
  b.visit_parameters([&pb](const Mat& m) { pb.push_back(&m); });
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    CHECK(std::memcmp(pa[i]->data(), pb[i]->data(),
                      sizeof(double) * static_cast<std::size_t>(pa[i]->size())) == 0);
}

TEST_CASE("parameter count matches the per-layer shape formula") {
  const int dim = 32, layers = 3, hidden = 32;
  const FlowModel model = init_flow(dim, layers, hidden, 5);
  const int half = dim / 2;
  const std::size_t per_subnet = static_cast<std::size_t>(half * hidden + hidden) +
                                 static_cast<std::size_t>(hidden * hidden + hidden) +
                                 static_cast<std::size_t>(hidden * half + half);
  CHECK(model.parameter_count() == static_cast<std::size_t>(layers) * 2 * per_subnet);
  CHECK(model.parameter_count() == 12768);
}

TEST_CASE("bijectivity on seeded random models") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    FlowModel model = init_flow(32, 3, 32, seed);
    randomize(model, seed + 100);
    const Mat w = random_mat(6, 32, seed + 200, 2.0);
    const Mat round_trip = model.inverse(model.forward(w));
    CHECK((round_trip - w).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("inverse-pass log-determinant negates the forward one") {
  FlowModel model = init_flow(12, 4, 12, 3);
  randomize(model, 31);
  const Mat w = random_mat(7, 12, 32);
  Vec fwd_logdet, inv_logdet;
  const Mat wstar = model.forward(w, &fwd_logdet);
  model.inverse(wstar, &inv_logdet);
  CHECK((fwd_logdet + inv_logdet).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("log-determinant matches the numerical Jacobian") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    FlowModel model = init_flow(6, 3, 6, seed);
    randomize(model, seed + 50);
    const Mat w = random_mat(1, 6, seed + 60);
    Vec logdet;
    model.forward(w, &logdet);
    const Mat jac = numerical_jacobian(model, w);
    const double reference = std::log(std::abs(jac.determinant()));
    CHECK(rel_error(logdet(0), reference) < 1e-3);
  }
}

TEST_CASE("taped forward and inverse equal the untaped ones bitwise") {
  FlowModel model = init_flow(10, 3, 10, 21);
  randomize(model, 22);
  const Mat w = random_mat(4, 10, 23);
  Vec logdet;
  const Mat fwd = model.forward(w, &logdet);

  ad::Tape tape;
  const FlowBinding binding = bind_flow(tape, model);
  ad::Var logdet_node;
  ad::Var out = taped_forward(model, binding, tape.leaf(w), &logdet_node);
  CHECK(out.value() == fwd);
  CHECK(Vec(logdet_node.value().col(0)) == logdet);
  CHECK(taped_inverse(model, binding, tape.leaf(fwd)).value() == model.inverse(fwd));
}

TEST_CASE("gradient of a scalar of the forward pass matches finite differences") {
  FlowModel model = init_flow(6, 2, 6, 41);
  randomize(model, 42, 0.3);
  const Mat w = random_mat(3, 6, 43);

  ad::Tape tape;
  const FlowBinding binding = bind_flow(tape, model);
  ad::Var input = tape.leaf(w);
  ad::Var root = ad::sum_all(ad::tanh(taped_forward(model, binding, input)));
  tape.backward(root.id());

  auto eval = [&]() {
    return ad::ops::sum_all(ad::ops::tanh(model.forward(w)))(0, 0);
  };
  std::vector<Mat*> params;
  model.visit_parameters([&params](Mat& m) { params.push_back(&m); });
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(max_fd_error(*params[i], binding.params[i].grad(), eval) < 1e-4);
  }
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(init_flow(7, 3, 8, 0), std::invalid_argument);   // odd dimension
  CHECK_THROWS_AS(init_flow(8, 0, 8, 0), std::invalid_argument);   // no layers
  const FlowModel model = init_flow(8, 1, 8, 0);
  CHECK_THROWS_AS(model.forward(Mat::Zero(2, 6)), std::invalid_argument);  // width mismatch
}

}  // TEST_SUITE
