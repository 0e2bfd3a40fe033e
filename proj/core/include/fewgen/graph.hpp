#pragma once

#include <Eigen/Core>
#include <string>
#include <unordered_map>
#include <vector>

#include "fewgen/util.hpp"

namespace fewgen {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// One trainable tensor. Gradients accumulate across all graph uses within a
// step; `touched` records whether any backward pass reached it, which is what
// lets the optimizer skip parameter groups a training direction excludes.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m;
  Mat adam_v;
  long adam_t = 0;
  bool touched = false;

  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Mat::Zero(rows, cols)),
        grad(Mat::Zero(rows, cols)),
        adam_m(Mat::Zero(rows, cols)),
        adam_v(Mat::Zero(rows, cols)) {}

  std::size_t size() const { return static_cast<std::size_t>(value.size()); }
  void zero_grad() {
    grad.setZero();
    touched = false;
  }
};

// Immediate-mode reverse-mode tape. Values are computed at node creation;
// backward() walks the tape in reverse and accumulates into node grads and,
// for Param/Lookup leaves, into Parameter::grad.
class Graph {
 public:
  explicit Graph(bool training = false) : training_(training) {}

  bool training() const { return training_; }

  int input(Mat value);
  int param(Parameter* p);
  // Embedding lookup: table (E x V), output (E x n); column j = table.col(ids[j]).
  int lookup(Parameter* table, std::vector<int> ids);

  int matmul(int a, int b);
  int matmul_trans_a(int a, int b);  // value = a^T * b
  int add(int a, int b);
  int sub(int a, int b);
  int cmult(int a, int b);
  int add_colvec(int a, int b);  // a (r x c) + broadcast of b (r x 1)
  int colscale(int a, int r);    // a (r x c) scaled per column by row vector r (1 x c)
  int coldot(int a, int b);      // (1 x c): column-wise dot of a and b
  int sigmoid(int a);
  int tanh(int a);
  int rows(int a, int r0, int n);
  int vconcat(int a, int b);
  int softmax_cols(int a);
  int scalar_scale(int a, double s);
  // Inverted dropout; identity when the graph is not in training mode.
  int dropout(int a, double p, Rng& rng);
  // Sum over columns j of weight[j] * (-log softmax(logits.col(j))[targets[j]]),
  // skipping columns with target < 0. Returns a 1x1 node.
  int cross_entropy_cols(int logits, std::vector<int> targets, Vec weights);

  const Mat& value(int node) const { return nodes_[node].value; }
  double scalar_value(int node) const { return nodes_[node].value(0, 0); }
  std::size_t size() const { return nodes_.size(); }

  void backward(int loss_node);

 private:
  enum class Op {
    kInput,
    kParam,
    kLookup,
    kMatmul,
    kMatmulTransA,
    kAdd,
    kSub,
    kCMult,
    kAddColvec,
    kColScale,
    kColDot,
    kSigmoid,
    kTanh,
    kRows,
    kVConcat,
    kSoftmaxCols,
    kScalarScale,
    kDropout,
    kCrossEntropyCols,
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    Mat value;
    Mat grad;
    bool grad_alloc = false;
    Parameter* parameter = nullptr;
    std::vector<int> ids;  // lookup ids / cross-entropy targets
    Mat aux;               // dropout mask / softmax cache
    Vec weights;           // cross-entropy column weights
    int r0 = 0;
    double scalar = 0.0;
  };

  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size() - 1);
  }
  Mat& grad_of(int idx);

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> param_nodes_;  // one node per parameter
  bool training_ = false;
};

}  // namespace fewgen
