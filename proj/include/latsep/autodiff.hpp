#pragma once

#include <vector>

#include <latsep/types.hpp>

namespace latsep::ad {

enum class Op {
  kLeaf,
  kMatMul,
  kAdd,
  kSub,
  kHadamard,
  kScale,
  kLeakyRelu,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kAbs,
  kSumAll,
  kSumRows,
  kConcatCols,
  kSplitCols,
};

// Untaped forward kernels. The taped ops call exactly these, so recording a
// node never changes a forward value.
namespace ops {

Mat matmul(const Mat& a, const Mat& b);
// Elementwise sum; b may also be a 1 x cols row vector added to every row of
// a (bias broadcast). No other broadcasting exists.
Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat hadamard(const Mat& a, const Mat& b);
Mat scale(const Mat& a, double factor);
Mat leaky_relu(const Mat& a, double slope);
Mat tanh(const Mat& a);
Mat sigmoid(const Mat& a);
Mat exp(const Mat& a);
Mat log(const Mat& a);  // throws std::domain_error on non-positive entries
Mat abs(const Mat& a);
Mat sum_all(const Mat& a);   // 1 x 1
Mat sum_rows(const Mat& a);  // rows x 1, each entry the sum of one row
Mat concat_cols(const Mat& a, const Mat& b);
Mat split_cols(const Mat& a, int begin, int count);

}  // namespace ops

class Tape;

// Handle to one node of a tape. Cheap to copy, valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  const Mat& value() const;
  const Mat& grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Record of a single forward evaluation. Nodes are appended in evaluation
// order, which is therefore a topological order of the graph; backward walks
// it in reverse. One tape is single-threaded; independent tapes share nothing.
class Tape {
 public:
  Var leaf(Mat value);

  int size() const { return static_cast<int>(nodes_.size()); }
  const Mat& value(int id) const { return nodes_.at(id).value; }
  const Mat& grad(int id) const { return nodes_.at(id).grad; }

  // Seeds the (1 x 1) root with gradient one and accumulates d(root)/d(node)
  // into every node's gradient. All accumulators are zeroed first.
  void backward(int root_id);

 private:
  struct Node {
    Op op = Op::kLeaf;
    int a = -1;
    int b = -1;
    double attr = 0.0;  // slope for kLeakyRelu, factor for kScale
    int col_begin = 0;  // kSplitCols only
    int col_count = 0;
    Mat value;
    Mat grad;
  };

  Var push(Op op, int a, int b, double attr, int col_begin, int col_count, Mat value);

  std::vector<Node> nodes_;

  friend Var matmul(Var, Var);
  friend Var add(Var, Var);
  friend Var sub(Var, Var);
  friend Var hadamard(Var, Var);
  friend Var scale(Var, double);
  friend Var leaky_relu(Var, double);
  friend Var tanh(Var);
  friend Var sigmoid(Var);
  friend Var exp(Var);
  friend Var log(Var);
  friend Var abs(Var);
  friend Var sum_all(Var);
  friend Var sum_rows(Var);
  friend Var concat_cols(Var, Var);
  friend Var split_cols(Var, int, int);
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double factor);
Var leaky_relu(Var a, double slope);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var abs(Var a);
Var sum_all(Var a);
Var sum_rows(Var a);
Var concat_cols(Var a, Var b);
Var split_cols(Var a, int begin, int count);

inline void backward(Var root) { root.tape()->backward(root.id()); }

}  // namespace latsep::ad
