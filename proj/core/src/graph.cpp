#include "fewgen/graph.hpp"

#include <cmath>

namespace fewgen {

namespace {

void check(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(std::string("graph: ") + what);
}

}  // namespace

int Graph::input(Mat value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

int Graph::param(Parameter* p) {
  auto it = param_nodes_.find(p);
  if (it != param_nodes_.end()) return it->second;
  Node n;
  n.op = Op::kParam;
  n.parameter = p;
  n.value = p->value;
  int idx = push(std::move(n));
  param_nodes_[p] = idx;
  return idx;
}

int Graph::lookup(Parameter* table, std::vector<int> ids) {
  Node n;
  n.op = Op::kLookup;
  n.parameter = table;
  n.value.resize(table->value.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    check(ids[j] >= 0 && ids[j] < table->value.cols(), "lookup id out of range");
    n.value.col(static_cast<Eigen::Index>(j)) = table->value.col(ids[j]);
  }
  n.ids = std::move(ids);
  return push(std::move(n));
}

int Graph::matmul(int a, int b) {
  check(nodes_[a].value.cols() == nodes_[b].value.rows(), "matmul shape mismatch");
  Node n;
  n.op = Op::kMatmul;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value * nodes_[b].value;
  return push(std::move(n));
}

int Graph::matmul_trans_a(int a, int b) {
  check(nodes_[a].value.rows() == nodes_[b].value.rows(), "matmul_trans_a shape mismatch");
  Node n;
  n.op = Op::kMatmulTransA;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value.transpose() * nodes_[b].value;
  return push(std::move(n));
}

int Graph::add(int a, int b) {
  check(nodes_[a].value.rows() == nodes_[b].value.rows() &&
            nodes_[a].value.cols() == nodes_[b].value.cols(),
        "add shape mismatch");
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value + nodes_[b].value;
  return push(std::move(n));
}

int Graph::sub(int a, int b) {
  check(nodes_[a].value.rows() == nodes_[b].value.rows() &&
            nodes_[a].value.cols() == nodes_[b].value.cols(),
        "sub shape mismatch");
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value - nodes_[b].value;
  return push(std::move(n));
}

int Graph::cmult(int a, int b) {
  check(nodes_[a].value.rows() == nodes_[b].value.rows() &&
            nodes_[a].value.cols() == nodes_[b].value.cols(),
        "cmult shape mismatch");
  Node n;
  n.op = Op::kCMult;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value.cwiseProduct(nodes_[b].value);
  return push(std::move(n));
}

int Graph::add_colvec(int a, int b) {
  check(nodes_[b].value.cols() == 1 && nodes_[a].value.rows() == nodes_[b].value.rows(),
        "add_colvec shape mismatch");
  Node n;
  n.op = Op::kAddColvec;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value.colwise() + Vec(nodes_[b].value.col(0));
  return push(std::move(n));
}

int Graph::colscale(int a, int r) {
  check(nodes_[r].value.rows() == 1 && nodes_[a].value.cols() == nodes_[r].value.cols(),
        "colscale shape mismatch");
  Node n;
  n.op = Op::kColScale;
  n.a = a;
  n.b = r;
  n.value = nodes_[a].value.array().rowwise() * nodes_[r].value.row(0).array();
  return push(std::move(n));
}

int Graph::coldot(int a, int b) {
  check(nodes_[a].value.rows() == nodes_[b].value.rows() &&
            nodes_[a].value.cols() == nodes_[b].value.cols(),
        "coldot shape mismatch");
  Node n;
  n.op = Op::kColDot;
  n.a = a;
  n.b = b;
  n.value = (nodes_[a].value.array() * nodes_[b].value.array()).colwise().sum().matrix();
  return push(std::move(n));
}

int Graph::sigmoid(int a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a;
  n.value = nodes_[a].value.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return push(std::move(n));
}

int Graph::tanh(int a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a;
  n.value = nodes_[a].value.array().tanh().matrix();
  return push(std::move(n));
}

int Graph::rows(int a, int r0, int nr) {
  check(r0 >= 0 && r0 + nr <= nodes_[a].value.rows(), "rows slice out of range");
  Node n;
  n.op = Op::kRows;
  n.a = a;
  n.r0 = r0;
  n.value = nodes_[a].value.middleRows(r0, nr);
  return push(std::move(n));
}

int Graph::vconcat(int a, int b) {
  check(nodes_[a].value.cols() == nodes_[b].value.cols(), "vconcat shape mismatch");
  Node n;
  n.op = Op::kVConcat;
  n.a = a;
  n.b = b;
  n.value.resize(nodes_[a].value.rows() + nodes_[b].value.rows(), nodes_[a].value.cols());
  n.value << nodes_[a].value, nodes_[b].value;
  return push(std::move(n));
}

int Graph::softmax_cols(int a) {
  Node n;
  n.op = Op::kSoftmaxCols;
  n.a = a;
  const Mat& x = nodes_[a].value;
  n.value.resizeLike(x);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double m = x.col(j).maxCoeff();
    Vec e = (x.col(j).array() - m).exp();
    n.value.col(j) = e / e.sum();
  }
  return push(std::move(n));
}

int Graph::scalar_scale(int a, double s) {
  Node n;
  n.op = Op::kScalarScale;
  n.a = a;
  n.scalar = s;
  n.value = nodes_[a].value * s;
  return push(std::move(n));
}

int Graph::dropout(int a, double p, Rng& rng) {
  if (!training_ || p <= 0.0) return a;
  Node n;
  n.op = Op::kDropout;
  n.a = a;
  const Mat& x = nodes_[a].value;
  std::bernoulli_distribution keep(1.0 - p);
  n.aux.resizeLike(x);
  double scale = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) n.aux(i, j) = keep(rng) ? scale : 0.0;
  n.value = x.cwiseProduct(n.aux);
  return push(std::move(n));
}

int Graph::cross_entropy_cols(int logits, std::vector<int> targets, Vec weights) {
  const Mat& x = nodes_[logits].value;
  check(static_cast<Eigen::Index>(targets.size()) == x.cols(), "cross_entropy targets size");
  check(weights.size() == x.cols(), "cross_entropy weights size");
  Node n;
  n.op = Op::kCrossEntropyCols;
  n.a = logits;
  n.aux.resizeLike(x);  // softmax cache
  double loss = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double m = x.col(j).maxCoeff();
    Vec e = (x.col(j).array() - m).exp();
    double z = e.sum();
    n.aux.col(j) = e / z;
    int t = targets[j];
    if (t < 0) continue;
    check(t < x.rows(), "cross_entropy target out of range");
    loss += weights(j) * (std::log(z) + m - x(t, j));
  }
  n.ids = std::move(targets);
  n.weights = std::move(weights);
  n.value = Mat::Constant(1, 1, loss);
  return push(std::move(n));
}

Mat& Graph::grad_of(int idx) {
  Node& n = nodes_[idx];
  if (!n.grad_alloc) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.grad_alloc = true;
  }
  return n.grad;
}

void Graph::backward(int loss_node) {
  check(nodes_[loss_node].value.size() == 1, "backward needs a scalar node");
  grad_of(loss_node)(0, 0) = 1.0;
  for (int idx = loss_node; idx >= 0; --idx) {
    Node& n = nodes_[idx];
    if (!n.grad_alloc) continue;
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kParam:
        n.parameter->grad += g;
        n.parameter->touched = true;
        break;
      case Op::kLookup:
        for (std::size_t j = 0; j < n.ids.size(); ++j)
          n.parameter->grad.col(n.ids[j]) += g.col(static_cast<Eigen::Index>(j));
        n.parameter->touched = true;
        break;
      case Op::kMatmul:
        grad_of(n.a).noalias() += g * nodes_[n.b].value.transpose();
        grad_of(n.b).noalias() += nodes_[n.a].value.transpose() * g;
        break;
      case Op::kMatmulTransA:
        grad_of(n.a).noalias() += nodes_[n.b].value * g.transpose();
        grad_of(n.b).noalias() += nodes_[n.a].value * g;
        break;
      case Op::kAdd:
        grad_of(n.a) += g;
        grad_of(n.b) += g;
        break;
      case Op::kSub:
        grad_of(n.a) += g;
        grad_of(n.b) -= g;
        break;
      case Op::kCMult:
        grad_of(n.a) += g.cwiseProduct(nodes_[n.b].value);
        grad_of(n.b) += g.cwiseProduct(nodes_[n.a].value);
        break;
      case Op::kAddColvec:
        grad_of(n.a) += g;
        grad_of(n.b) += g.rowwise().sum();
        break;
      case Op::kColScale:
        grad_of(n.a).array() += g.array().rowwise() * nodes_[n.b].value.row(0).array();
        grad_of(n.b).row(0).array() +=
            (g.array() * nodes_[n.a].value.array()).colwise().sum();
        break;
      case Op::kColDot:
        grad_of(n.a).array() += nodes_[n.b].value.array().rowwise() * g.row(0).array();
        grad_of(n.b).array() += nodes_[n.a].value.array().rowwise() * g.row(0).array();
        break;
      case Op::kSigmoid:
        grad_of(n.a).array() += g.array() * n.value.array() * (1.0 - n.value.array());
        break;
      case Op::kTanh:
        grad_of(n.a).array() += g.array() * (1.0 - n.value.array().square());
        break;
      case Op::kRows:
        grad_of(n.a).middleRows(n.r0, n.value.rows()) += g;
        break;
      case Op::kVConcat: {
        Eigen::Index ra = nodes_[n.a].value.rows();
        grad_of(n.a) += g.topRows(ra);
        grad_of(n.b) += g.bottomRows(n.value.rows() - ra);
        break;
      }
      case Op::kSoftmaxCols: {
        Mat& da = grad_of(n.a);
        for (Eigen::Index j = 0; j < n.value.cols(); ++j) {
          double dot = g.col(j).dot(n.value.col(j));
          da.col(j).array() += (g.col(j).array() - dot) * n.value.col(j).array();
        }
        break;
      }
      case Op::kScalarScale:
        grad_of(n.a) += g * n.scalar;
        break;
      case Op::kDropout:
        grad_of(n.a) += g.cwiseProduct(n.aux);
        break;
      case Op::kCrossEntropyCols: {
        double gs = g(0, 0);
        Mat& da = grad_of(n.a);
        for (std::size_t j = 0; j < n.ids.size(); ++j) {
          int t = n.ids[j];
          if (t < 0) continue;
          Eigen::Index jj = static_cast<Eigen::Index>(j);
          da.col(jj) += gs * n.weights(jj) * n.aux.col(jj);
          da(t, jj) -= gs * n.weights(jj);
        }
        break;
      }
    }
  }
}

}  // namespace fewgen
