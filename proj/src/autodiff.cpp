#include <latsep/autodiff.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace latsep::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const Mat& a, const Mat& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " and " +
                              std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

bool is_row_bias(const Mat& a, const Mat& b) {
  return b.rows() == 1 && a.rows() != 1 && b.cols() == a.cols();
}

}  // namespace

namespace ops {

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  return a * b;
}

Mat add(const Mat& a, const Mat& b) {
  if (is_row_bias(a, b)) return a.rowwise() + b.row(0);
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("add", a, b);
  return a + b;
}

Mat sub(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("sub", a, b);
  return a - b;
}

Mat hadamard(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("hadamard", a, b);
  return a.cwiseProduct(b);
}

Mat scale(const Mat& a, double factor) { return factor * a; }

Mat leaky_relu(const Mat& a, double slope) {
  return a.unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
}

Mat tanh(const Mat& a) { return a.array().tanh(); }

Mat sigmoid(const Mat& a) {
  return a.unaryExpr([](double x) { return latsep::sigmoid(x); });
}

Mat exp(const Mat& a) { return a.array().exp(); }

Mat log(const Mat& a) {
  if ((a.array() <= 0.0).any()) throw std::domain_error("log: non-positive entry");
  return a.array().log();
}

Mat abs(const Mat& a) { return a.cwiseAbs(); }

Mat sum_all(const Mat& a) {
  Mat out(1, 1);
  out(0, 0) = a.sum();
  return out;
}

Mat sum_rows(const Mat& a) {
  Mat out(a.rows(), 1);
  out.col(0) = a.rowwise().sum();
  return out;
}

Mat concat_cols(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) shape_error("concat_cols", a, b);
  Mat out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

Mat split_cols(const Mat& a, int begin, int count) {
  if (begin < 0 || count <= 0 || begin + count > a.cols())
    throw std::invalid_argument("split_cols: slice [" + std::to_string(begin) + ", " +
                                std::to_string(begin + count) + ") out of range for " +
                                std::to_string(a.cols()) + " columns");
  return a.middleCols(begin, count);
}

}  // namespace ops

const Mat& Var::value() const { return tape_->value(id_); }
const Mat& Var::grad() const { return tape_->grad(id_); }

Var Tape::push(Op op, int a, int b, double attr, int col_begin, int col_count, Mat value) {
  Node node;
  node.op = op;
  node.a = a;
  node.b = b;
  node.attr = attr;
  node.col_begin = col_begin;
  node.col_count = col_count;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::leaf(Mat value) { return push(Op::kLeaf, -1, -1, 0.0, 0, 0, std::move(value)); }

void Tape::backward(int root_id) {
  if (root_id < 0 || root_id >= size()) throw std::logic_error("backward: root id out of range");
  if (nodes_[root_id].value.size() != 1) throw std::logic_error("backward: root is not a scalar");

  for (Node& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  nodes_[root_id].grad(0, 0) = 1.0;

  for (int id = root_id; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (n.op == Op::kLeaf) continue;
    const Mat& g = n.grad;
    Mat& ga = nodes_[n.a].grad;
    const Mat& va = nodes_[n.a].value;
    switch (n.op) {
      case Op::kMatMul: {
        const Mat& vb = nodes_[n.b].value;
        ga.noalias() += g * vb.transpose();
        nodes_[n.b].grad.noalias() += va.transpose() * g;
        break;
      }
      case Op::kAdd: {
        ga += g;
        Mat& gb = nodes_[n.b].grad;
        if (is_row_bias(va, nodes_[n.b].value))
          gb.row(0) += g.colwise().sum();
        else
          gb += g;
        break;
      }
      case Op::kSub:
        ga += g;
        nodes_[n.b].grad -= g;
        break;
      case Op::kHadamard:
        ga += g.cwiseProduct(nodes_[n.b].value);
        nodes_[n.b].grad += g.cwiseProduct(va);
        break;
      case Op::kScale:
        ga += n.attr * g;
        break;
      case Op::kLeakyRelu:
        // derivative at exactly zero is the negative-side slope
        ga += g.cwiseProduct(
            va.unaryExpr([s = n.attr](double x) { return x > 0.0 ? 1.0 : s; }));
        break;
      case Op::kTanh:
        ga.array() += g.array() * (1.0 - n.value.array().square());
        break;
      case Op::kSigmoid:
        ga.array() += g.array() * n.value.array() * (1.0 - n.value.array());
        break;
      case Op::kExp:
        ga += g.cwiseProduct(n.value);
        break;
      case Op::kLog:
        ga += g.cwiseQuotient(va);
        break;
      case Op::kAbs:
        // subgradient 0 at exactly zero
        ga += g.cwiseProduct(va.unaryExpr(
            [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }));
        break;
      case Op::kSumAll:
        ga.array() += g(0, 0);
        break;
      case Op::kSumRows:
        ga.colwise() += g.col(0);
        break;
      case Op::kConcatCols: {
        const Mat& vb = nodes_[n.b].value;
        ga += g.leftCols(va.cols());
        nodes_[n.b].grad += g.rightCols(vb.cols());
        break;
      }
      case Op::kSplitCols:
        ga.middleCols(n.col_begin, n.col_count) += g;
        break;
      case Op::kLeaf:
        break;
    }
  }
}

namespace {

Tape* same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::logic_error("operands live on different tapes");
  return a.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape* t = same_tape(a, b);
  return t->push(Op::kMatMul, a.id(), b.id(), 0.0, 0, 0, ops::matmul(a.value(), b.value()));
}

Var add(Var a, Var b) {
  Tape* t = same_tape(a, b);
  return t->push(Op::kAdd, a.id(), b.id(), 0.0, 0, 0, ops::add(a.value(), b.value()));
}

Var sub(Var a, Var b) {
  Tape* t = same_tape(a, b);
  return t->push(Op::kSub, a.id(), b.id(), 0.0, 0, 0, ops::sub(a.value(), b.value()));
}

Var hadamard(Var a, Var b) {
  Tape* t = same_tape(a, b);
  return t->push(Op::kHadamard, a.id(), b.id(), 0.0, 0, 0, ops::hadamard(a.value(), b.value()));
}

Var scale(Var a, double factor) {
  return a.tape()->push(Op::kScale, a.id(), -1, factor, 0, 0, ops::scale(a.value(), factor));
}

Var leaky_relu(Var a, double slope) {
  return a.tape()->push(Op::kLeakyRelu, a.id(), -1, slope, 0, 0, ops::leaky_relu(a.value(), slope));
}

Var tanh(Var a) { return a.tape()->push(Op::kTanh, a.id(), -1, 0.0, 0, 0, ops::tanh(a.value())); }

Var sigmoid(Var a) {
  return a.tape()->push(Op::kSigmoid, a.id(), -1, 0.0, 0, 0, ops::sigmoid(a.value()));
}

Var exp(Var a) { return a.tape()->push(Op::kExp, a.id(), -1, 0.0, 0, 0, ops::exp(a.value())); }

Var log(Var a) { return a.tape()->push(Op::kLog, a.id(), -1, 0.0, 0, 0, ops::log(a.value())); }

Var abs(Var a) { return a.tape()->push(Op::kAbs, a.id(), -1, 0.0, 0, 0, ops::abs(a.value())); }

Var sum_all(Var a) {
  return a.tape()->push(Op::kSumAll, a.id(), -1, 0.0, 0, 0, ops::sum_all(a.value()));
}

Var sum_rows(Var a) {
  return a.tape()->push(Op::kSumRows, a.id(), -1, 0.0, 0, 0, ops::sum_rows(a.value()));
}

Var concat_cols(Var a, Var b) {
  Tape* t = same_tape(a, b);
  return t->push(Op::kConcatCols, a.id(), b.id(), 0.0, 0, 0,
                 ops::concat_cols(a.value(), b.value()));
}

Var split_cols(Var a, int begin, int count) {
  return a.tape()->push(Op::kSplitCols, a.id(), -1, 0.0, begin, count,
                        ops::split_cols(a.value(), begin, count));
}

}  // namespace latsep::ad
