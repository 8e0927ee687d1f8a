#include <latsep/flow.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace latsep {

namespace {

Mat eval_subnet(const SubNet& net, const Mat& x) {
  using namespace ad::ops;
  Mat h1 = leaky_relu(add(matmul(x, net.l1.weight), net.l1.bias), kLeakyReluSlope);
  Mat h2 = leaky_relu(add(matmul(h1, net.l2.weight), net.l2.bias), kLeakyReluSlope);
  Mat out = add(matmul(h2, net.l3.weight), net.l3.bias);
  return net.tanh_output ? tanh(out) : out;
}

// Parameter handles of one subnet within a FlowBinding, laid out as
// [w1 b1 w2 b2 w3 b3].
ad::Var eval_subnet_taped(const FlowBinding& binding, int base, bool tanh_output, ad::Var x) {
  const auto& p = binding.params;
  ad::Var h1 = ad::leaky_relu(ad::add(ad::matmul(x, p[base + 0]), p[base + 1]), kLeakyReluSlope);
  ad::Var h2 = ad::leaky_relu(ad::add(ad::matmul(h1, p[base + 2]), p[base + 3]), kLeakyReluSlope);
  ad::Var out = ad::add(ad::matmul(h2, p[base + 4]), p[base + 5]);
  return tanh_output ? ad::tanh(out) : out;
}

void check_width(const Mat& m, int dim, const char* what) {
  if (m.cols() != dim)
    throw std::invalid_argument(std::string(what) + ": batch width " + std::to_string(m.cols()) +
                                " does not match flow dimension " + std::to_string(dim));
}

}  // namespace

FlowModel::FlowModel(int dim, int hidden, std::vector<CouplingLayer> layers)
    : dim_(dim), hidden_(hidden), layers_(std::move(layers)) {
  if (dim < 2 || dim % 2 != 0)
    throw std::invalid_argument("flow dimension must be even and >= 2, got " + std::to_string(dim));
}

Mat FlowModel::forward(const Mat& w, Vec* logdet) const {
  using namespace ad::ops;
  check_width(w, dim_, "flow forward");
  if (logdet) *logdet = Vec::Zero(w.rows());
  const int half = dim_ / 2;
  Mat x = w;
  for (const CouplingLayer& layer : layers_) {
    Mat passive = split_cols(x, layer.parity == 0 ? 0 : half, half);
    Mat active = split_cols(x, layer.parity == 0 ? half : 0, half);
    Mat s = eval_subnet(layer.scale_net, passive);
    Mat t = eval_subnet(layer.translation_net, passive);
    Mat ya = add(hadamard(active, exp(s)), t);
    x = layer.parity == 0 ? concat_cols(passive, ya) : concat_cols(ya, passive);
    if (logdet) *logdet += s.rowwise().sum();
  }
  return x;
}

Mat FlowModel::inverse(const Mat& wstar, Vec* logdet) const {
  using namespace ad::ops;
  check_width(wstar, dim_, "flow inverse");
  if (logdet) *logdet = Vec::Zero(wstar.rows());
  const int half = dim_ / 2;
  Mat y = wstar;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    const CouplingLayer& layer = *it;
    Mat passive = split_cols(y, layer.parity == 0 ? 0 : half, half);
    Mat active = split_cols(y, layer.parity == 0 ? half : 0, half);
    Mat s = eval_subnet(layer.scale_net, passive);
    Mat t = eval_subnet(layer.translation_net, passive);
    Mat xa = hadamard(sub(active, t), exp(scale(s, -1.0)));
    y = layer.parity == 0 ? concat_cols(passive, xa) : concat_cols(xa, passive);
    if (logdet) *logdet -= s.rowwise().sum();
  }
  return y;
}

std::size_t FlowModel::parameter_count() const {
  std::size_t n = 0;
  visit_parameters([&n](const Mat& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

void FlowModel::visit_parameters(const std::function<void(Mat&)>& fn) {
  for (CouplingLayer& layer : layers_)
    for (SubNet* net : {&layer.scale_net, &layer.translation_net})
      for (AffineLayer* a : {&net->l1, &net->l2, &net->l3}) {
        fn(a->weight);
        fn(a->bias);
      }
}

void FlowModel::visit_parameters(const std::function<void(const Mat&)>& fn) const {
  for (const CouplingLayer& layer : layers_)
    for (const SubNet* net : {&layer.scale_net, &layer.translation_net})
      for (const AffineLayer* a : {&net->l1, &net->l2, &net->l3}) {
        fn(a->weight);
        fn(a->bias);
      }
}

FlowModel init_flow(int dim, int num_layers, int hidden, std::uint64_t seed) {
  if (dim < 2 || dim % 2 != 0)
    throw std::invalid_argument("flow dimension must be even and >= 2, got " + std::to_string(dim));
  if (num_layers < 1)
    throw std::invalid_argument("flow needs at least one coupling layer");
  if (hidden <= 0) hidden = dim;

  std::mt19937_64 rng(seed);
  const int half = dim / 2;

  auto uniform_fill = [&rng](Mat& m, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
  };

  auto make_subnet = [&](bool tanh_output) {
    SubNet net;
    net.tanh_output = tanh_output;
    net.l1.weight.resize(half, hidden);
    uniform_fill(net.l1.weight, half);
    net.l1.bias = Mat::Zero(1, hidden);
    net.l2.weight.resize(hidden, hidden);
    uniform_fill(net.l2.weight, hidden);
    net.l2.bias = Mat::Zero(1, hidden);
    // zero final layer: the fresh flow is the identity map
    net.l3.weight = Mat::Zero(hidden, half);
    net.l3.bias = Mat::Zero(1, half);
    return net;
  };

  std::vector<CouplingLayer> layers(static_cast<std::size_t>(num_layers));
  for (int i = 0; i < num_layers; ++i) {
    layers[i].parity = i % 2;
    layers[i].scale_net = make_subnet(true);
    layers[i].translation_net = make_subnet(false);
  }
  return FlowModel(dim, hidden, std::move(layers));
}

FlowBinding bind_flow(ad::Tape& tape, const FlowModel& model) {
  FlowBinding binding;
  binding.params.reserve(model.parameter_count());
  model.visit_parameters([&](const Mat& m) { binding.params.push_back(tape.leaf(m)); });
  return binding;
}

ad::Var taped_forward(const FlowModel& model, const FlowBinding& binding, ad::Var input,
                      ad::Var* logdet_rows) {
  const int half = model.dim() / 2;
  ad::Var x = input;
  ad::Var logdet;
  bool have_logdet = false;
  int base = 0;
  for (const CouplingLayer& layer : model.layers()) {
    ad::Var passive = ad::split_cols(x, layer.parity == 0 ? 0 : half, half);
    ad::Var active = ad::split_cols(x, layer.parity == 0 ? half : 0, half);
    ad::Var s = eval_subnet_taped(binding, base, true, passive);
    ad::Var t = eval_subnet_taped(binding, base + 6, false, passive);
    ad::Var ya = ad::add(ad::hadamard(active, ad::exp(s)), t);
    x = layer.parity == 0 ? ad::concat_cols(passive, ya) : ad::concat_cols(ya, passive);
    if (logdet_rows) {
      ad::Var ld = ad::sum_rows(s);
      logdet = have_logdet ? ad::add(logdet, ld) : ld;
      have_logdet = true;
    }
    base += 12;
  }
  if (logdet_rows) {
    if (!have_logdet) logdet = input.tape()->leaf(Mat::Zero(input.value().rows(), 1));
    *logdet_rows = logdet;
  }
  return x;
}

ad::Var taped_inverse(const FlowModel& model, const FlowBinding& binding, ad::Var input) {
  const int half = model.dim() / 2;
  ad::Var y = input;
  for (int i = model.num_layers() - 1; i >= 0; --i) {
    const CouplingLayer& layer = model.layers()[static_cast<std::size_t>(i)];
    const int base = i * 12;
    ad::Var passive = ad::split_cols(y, layer.parity == 0 ? 0 : half, half);
    ad::Var active = ad::split_cols(y, layer.parity == 0 ? half : 0, half);
    ad::Var s = eval_subnet_taped(binding, base, true, passive);
    ad::Var t = eval_subnet_taped(binding, base + 6, false, passive);
    ad::Var xa = ad::hadamard(ad::sub(active, t), ad::exp(ad::scale(s, -1.0)));
    y = layer.parity == 0 ? ad::concat_cols(passive, xa) : ad::concat_cols(xa, passive);
  }
  return y;
}

}  // namespace latsep
