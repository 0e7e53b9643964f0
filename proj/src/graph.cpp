#include "protojoint/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace protojoint::diff {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kInput: return "input";
    case OpKind::kParam: return "parameter";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kConcatRows: return "concat_rows";
    case OpKind::kRowSoftmax: return "row_softmax";
    case OpKind::kRowLogSoftmax: return "row_log_softmax";
    case OpKind::kMeanRows: return "mean_rows";
    case OpKind::kMeanCols: return "mean_cols";
    case OpKind::kAddN: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSquaredDistance: return "squared_distance";
    case OpKind::kDot: return "dot";
    case OpKind::kScale: return "scale";
    case OpKind::kGatherRows: return "gather_rows";
  }
  return "?";
}

void Graph::fail(const Node& n, const std::string& what) const {
  throw std::runtime_error(std::string(op_name(n.op)) + ": " + what +
                           " (node " + std::to_string(nodes_.size()) + ")");
}

const Tensor& Graph::in_value(const Node& n, int i) const {
  return nodes_[static_cast<size_t>(n.in[static_cast<size_t>(i)])].value;
}

NodeRef Graph::push(Node&& node) {
  compute(node);
  nodes_.push_back(std::move(node));
  return static_cast<NodeRef>(nodes_.size() - 1);
}

NodeRef Graph::input(Tensor t) {
  Node n;
  n.op = OpKind::kInput;
  n.value = std::move(t);
  if (!n.value.all_finite()) fail(n, "non-finite input values");
  nodes_.push_back(std::move(n));
  return static_cast<NodeRef>(nodes_.size() - 1);
}

NodeRef Graph::parameter(const std::string& name, Tensor t) {
  auto it = params_.find(name);
  if (it != params_.end()) {
    throw std::runtime_error("parameter: duplicate registration of '" + name +
                             "'");
  }
  Node n;
  n.op = OpKind::kParam;
  n.name = name;
  n.value = std::move(t);
  if (!n.value.all_finite()) fail(n, "non-finite values in '" + name + "'");
  nodes_.push_back(std::move(n));
  NodeRef ref = static_cast<NodeRef>(nodes_.size() - 1);
  params_[name] = ref;
  return ref;
}

bool Graph::has_parameter(const std::string& name) const {
  return params_.count(name) > 0;
}

NodeRef Graph::parameter_node(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::runtime_error("parameter: no node named '" + name + "'");
  }
  return it->second;
}

const Tensor& Graph::value(NodeRef n) const {
  return nodes_.at(static_cast<size_t>(n)).value;
}

double Graph::scalar_value(NodeRef n) const {
  const Tensor& t = value(n);
  if (t.rows != 1 || t.cols != 1) {
    throw std::runtime_error("scalar_value: node is " + t.shape_str() +
                             ", expected 1x1");
  }
  return t.v[0];
}

void Graph::compute(Node& n) const {
  switch (n.op) {
    case OpKind::kInput:
    case OpKind::kParam:
      break;

    case OpKind::kMatmul: {
      const Tensor& a = in_value(n, 0);
      const Tensor& b = in_value(n, 1);
      if (a.cols != b.rows) {
        fail(n, "shape mismatch " + a.shape_str() + " * " + b.shape_str());
      }
      Tensor y(a.rows, b.cols);
      for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
          double aik = a.at(i, k);
          if (aik == 0.0) continue;
          const double* brow = &b.v[static_cast<size_t>(k) *
                                    static_cast<size_t>(b.cols)];
          double* yrow = &y.v[static_cast<size_t>(i) *
                              static_cast<size_t>(y.cols)];
          for (int j = 0; j < b.cols; ++j) yrow[j] += aik * brow[j];
        }
      }
      n.value = std::move(y);
      break;
    }

    case OpKind::kTranspose: {
      const Tensor& a = in_value(n, 0);
      Tensor y(a.cols, a.rows);
      for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) y.at(j, i) = a.at(i, j);
      n.value = std::move(y);
      break;
    }

    case OpKind::kConcatCols: {
      int rows = in_value(n, 0).rows;
      int cols = 0;
      for (size_t i = 0; i < n.in.size(); ++i) {
        const Tensor& t = in_value(n, static_cast<int>(i));
        if (t.rows != rows) {
          fail(n, "row mismatch " + t.shape_str() + " vs " +
                      std::to_string(rows) + " rows");
        }
        cols += t.cols;
      }
      Tensor y(rows, cols);
      int off = 0;
      for (size_t i = 0; i < n.in.size(); ++i) {
        const Tensor& t = in_value(n, static_cast<int>(i));
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < t.cols; ++c) y.at(r, off + c) = t.at(r, c);
        off += t.cols;
      }
      n.value = std::move(y);
      break;
    }

    case OpKind::kConcatRows: {
      int cols = in_value(n, 0).cols;
      int rows = 0;
      for (size_t i = 0; i < n.in.size(); ++i) {
        const Tensor& t = in_value(n, static_cast<int>(i));
        if (t.cols != cols) {
          fail(n, "column mismatch " + t.shape_str() + " vs " +
                      std::to_string(cols) + " cols");
        }
        rows += t.rows;
      }
      Tensor y(rows, cols);
      int off = 0;
      for (size_t i = 0; i < n.in.size(); ++i) {
        const Tensor& t = in_value(n, static_cast<int>(i));
        std::copy(t.v.begin(), t.v.end(),
                  y.v.begin() + static_cast<size_t>(off) *
                                    static_cast<size_t>(cols));
        off += t.rows;
      }
      n.value = std::move(y);
      break;
    }

    case OpKind::kRowSoftmax:
    case OpKind::kRowLogSoftmax: {
      const Tensor& a = in_value(n, 0);
      Tensor y(a.rows, a.cols);
      for (int i = 0; i < a.rows; ++i) {
        double m = a.at(i, 0);
        for (int j = 1; j < a.cols; ++j) m = std::max(m, a.at(i, j));
        double z = 0.0;
        for (int j = 0; j < a.cols; ++j) z += std::exp(a.at(i, j) - m);
        if (n.op == OpKind::kRowSoftmax) {
          for (int j = 0; j < a.cols; ++j)
            y.at(i, j) = std::exp(a.at(i, j) - m) / z;
        } else {
          double lz = std::log(z);
          for (int j = 0; j < a.cols; ++j) y.at(i, j) = a.at(i, j) - m - lz;
        }
      }
      n.value = std::move(y);
      break;
    }

    case OpKind::kMeanRows: {
      const Tensor& a = in_value(n, 0);
      Tensor y(1, a.cols);
      for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) y.at(0, j) += a.at(i, j);
      for (int j = 0; j < a.cols; ++j) y.at(0, j) /= a.rows;
      n.value = std::move(y);
      break;
    }

    case OpKind::kMeanCols: {
      const Tensor& a = in_value(n, 0);
      Tensor y(a.rows, 1);
      for (int i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols; ++j) s += a.at(i, j);
        y.at(i, 0) = s / a.cols;
      }
      n.value = std::move(y);
      break;
    }

    case OpKind::kAddN: {
      const Tensor& first = in_value(n, 0);
      Tensor y = first;
      for (size_t i = 1; i < n.in.size(); ++i) {
        const Tensor& t = in_value(n, static_cast<int>(i));
        if (!t.same_shape(first)) {
          fail(n, "shape mismatch " + first.shape_str() + " vs " +
                      t.shape_str());
        }
        for (int k = 0; k < t.size(); ++k) y.v[static_cast<size_t>(k)] +=
            t.v[static_cast<size_t>(k)];
      }
      n.value = std::move(y);
      break;
    }

    case OpKind::kMul: {
      const Tensor& a = in_value(n, 0);
      const Tensor& b = in_value(n, 1);
      if (!a.same_shape(b)) {
        fail(n, "shape mismatch " + a.shape_str() + " vs " + b.shape_str());
      }
      Tensor y = a;
      for (int k = 0; k < a.size(); ++k) y.v[static_cast<size_t>(k)] *=
          b.v[static_cast<size_t>(k)];
      n.value = std::move(y);
      break;
    }

    case OpKind::kExp:
    case OpKind::kLog:
    case OpKind::kTanh:
    case OpKind::kSigmoid: {
      const Tensor& a = in_value(n, 0);
      Tensor y = a;
      for (double& x : y.v) {
        switch (n.op) {
          case OpKind::kExp: x = std::exp(x); break;
          case OpKind::kLog:
            if (x <= 0.0) fail(n, "nonpositive input to log");
            x = std::log(x);
            break;
          case OpKind::kTanh: x = std::tanh(x); break;
          default: x = 1.0 / (1.0 + std::exp(-x)); break;
        }
      }
      n.value = std::move(y);
      break;
    }

    case OpKind::kSquaredDistance: {
      const Tensor& a = in_value(n, 0);
      const Tensor& b = in_value(n, 1);
      if (!a.same_shape(b)) {
        fail(n, "shape mismatch " + a.shape_str() + " vs " + b.shape_str());
      }
      double s = 0.0;
      for (int k = 0; k < a.size(); ++k) {
        double d = a.v[static_cast<size_t>(k)] - b.v[static_cast<size_t>(k)];
        s += d * d;
      }
      n.value = Tensor::scalar(s);
      break;
    }

    case OpKind::kDot: {
      const Tensor& a = in_value(n, 0);
      const Tensor& b = in_value(n, 1);
      if (!a.same_shape(b)) {
        fail(n, "shape mismatch " + a.shape_str() + " vs " + b.shape_str());
      }
      double s = 0.0;
      for (int k = 0; k < a.size(); ++k)
        s += a.v[static_cast<size_t>(k)] * b.v[static_cast<size_t>(k)];
      n.value = Tensor::scalar(s);
      break;
    }

    case OpKind::kScale: {
      Tensor y = in_value(n, 0);
      for (double& x : y.v) x *= n.factor;
      n.value = std::move(y);
      break;
    }

    case OpKind::kGatherRows: {
      const Tensor& a = in_value(n, 0);
      Tensor y(static_cast<int>(n.indices.size()), a.cols);
      for (size_t r = 0; r < n.indices.size(); ++r) {
        int src = n.indices[r];
        if (src < 0 || src >= a.rows) {
          fail(n, "row index " + std::to_string(src) + " out of range for " +
                      a.shape_str());
        }
        for (int j = 0; j < a.cols; ++j)
          y.at(static_cast<int>(r), j) = a.at(src, j);
      }
      n.value = std::move(y);
      break;
    }
  }
}

NodeRef Graph::matmul(NodeRef a, NodeRef b) {
  Node n;
  n.op = OpKind::kMatmul;
  n.in = {a, b};
  return push(std::move(n));
}

NodeRef Graph::transpose(NodeRef a) {
  Node n;
  n.op = OpKind::kTranspose;
  n.in = {a};
  return push(std::move(n));
}

NodeRef Graph::concat_cols(std::span<const NodeRef> parts) {
  if (parts.empty()) throw std::runtime_error("concat_cols: no inputs");
  Node n;
  n.op = OpKind::kConcatCols;
  n.in.assign(parts.begin(), parts.end());
  return push(std::move(n));
}

NodeRef Graph::concat_rows(std::span<const NodeRef> parts) {
  if (parts.empty()) throw std::runtime_error("concat_rows: no inputs");
  Node n;
  n.op = OpKind::kConcatRows;
  n.in.assign(parts.begin(), parts.end());
  return push(std::move(n));
}

NodeRef Graph::row_softmax(NodeRef a) {
  Node n;
  n.op = OpKind::kRowSoftmax;
  n.in = {a};
  return push(std::move(n));
}

NodeRef Graph::row_log_softmax(NodeRef a) {
  Node n;
  n.op = OpKind::kRowLogSoftmax;
  n.in = {a};
  return push(std::move(n));
}

NodeRef Graph::mean_rows(NodeRef a) {
  Node n;
  n.op = OpKind::kMeanRows;
  n.in = {a};
  return push(std::move(n));
}

NodeRef Graph::mean_cols(NodeRef a) {
  Node n;
  n.op = OpKind::kMeanCols;
  n.in = {a};
  return push(std::move(n));
}

NodeRef Graph::add(NodeRef a, NodeRef b) {
  Node n;
  n.op = OpKind::kAddN;
  n.in = {a, b};
  return push(std::move(n));
}

NodeRef Graph::add_n(std::span<const NodeRef> parts) {
  if (parts.empty()) throw std::runtime_error("add: no inputs");
  Node n;
  n.op = OpKind::kAddN;
  n.in.assign(parts.begin(), parts.end());
  return push(std::move(n));
}

NodeRef Graph::mul(NodeRef a, NodeRef b) {
  Node n;
  n.op = OpKind::kMul;
  n.in = {a, b};
  return push(std::move(n));
}

NodeRef Graph::exp(NodeRef a) {
  Node n;
  n.op = OpKind::kExp;
  n.in = {a};
  return push(std::move(n));
}

NodeRef Graph::log(NodeRef a) {
  Node n;
  n.op = OpKind::kLog;
  n.in = {a};
  return push(std::move(n));
}

NodeRef Graph::tanh(NodeRef a) {
  Node n;
  n.op = OpKind::kTanh;
  n.in = {a};
  return push(std::move(n));
}

NodeRef Graph::sigmoid(NodeRef a) {
  Node n;
  n.op = OpKind::kSigmoid;
  n.in = {a};
  return push(std::move(n));
}

NodeRef Graph::squared_distance(NodeRef a, NodeRef b) {
  Node n;
  n.op = OpKind::kSquaredDistance;
  n.in = {a, b};
  return push(std::move(n));
}

NodeRef Graph::dot(NodeRef a, NodeRef b) {
  Node n;
  n.op = OpKind::kDot;
  n.in = {a, b};
  return push(std::move(n));
}

NodeRef Graph::scale(NodeRef a, double k) {
  Node n;
  n.op = OpKind::kScale;
  n.in = {a};
  n.factor = k;
  return push(std::move(n));
}

NodeRef Graph::gather_rows(NodeRef a, std::vector<int> rows) {
  if (rows.empty()) throw std::runtime_error("gather_rows: no indices");
  Node n;
  n.op = OpKind::kGatherRows;
  n.in = {a};
  n.indices = std::move(rows);
  return push(std::move(n));
}

std::map<std::string, Tensor> Graph::gradients(NodeRef loss) const {
  const Tensor& lt = value(loss);
  if (lt.rows != 1 || lt.cols != 1) {
    throw std::runtime_error("gradients: loss is " + lt.shape_str() +
                             ", expected 1x1 scalar");
  }

  std::vector<Tensor> grad(nodes_.size());
  auto touch = [&](NodeRef r) -> Tensor& {
    Tensor& g = grad[static_cast<size_t>(r)];
    if (g.v.empty()) {
      const Tensor& v = nodes_[static_cast<size_t>(r)].value;
      g = Tensor(v.rows, v.cols);
    }
    return g;
  };
  touch(loss).v[0] = 1.0;

  for (NodeRef idx = loss; idx >= 0; --idx) {
    const Node& n = nodes_[static_cast<size_t>(idx)];
    const Tensor& g = grad[static_cast<size_t>(idx)];
    if (g.v.empty()) continue;

    switch (n.op) {
      case OpKind::kInput:
      case OpKind::kParam:
        break;

      case OpKind::kMatmul: {
        const Tensor& a = in_value(n, 0);
        const Tensor& b = in_value(n, 1);
        Tensor& ga = touch(n.in[0]);
        Tensor& gb = touch(n.in[1]);
        // ga += g * b^T
        for (int i = 0; i < a.rows; ++i)
          for (int k = 0; k < a.cols; ++k) {
            double s = 0.0;
            for (int j = 0; j < b.cols; ++j) s += g.at(i, j) * b.at(k, j);
            ga.at(i, k) += s;
          }
        // gb += a^T * g
        for (int k = 0; k < a.cols; ++k)
          for (int i = 0; i < a.rows; ++i) {
            double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) gb.at(k, j) += aik * g.at(i, j);
          }
        break;
      }

      case OpKind::kTranspose: {
        Tensor& ga = touch(n.in[0]);
        for (int i = 0; i < g.rows; ++i)
          for (int j = 0; j < g.cols; ++j) ga.at(j, i) += g.at(i, j);
        break;
      }

      case OpKind::kConcatCols: {
        int off = 0;
        for (size_t p = 0; p < n.in.size(); ++p) {
          const Tensor& t = in_value(n, static_cast<int>(p));
          Tensor& gp = touch(n.in[p]);
          for (int r = 0; r < t.rows; ++r)
            for (int c = 0; c < t.cols; ++c) gp.at(r, c) += g.at(r, off + c);
          off += t.cols;
        }
        break;
      }

      case OpKind::kConcatRows: {
        int off = 0;
        for (size_t p = 0; p < n.in.size(); ++p) {
          const Tensor& t = in_value(n, static_cast<int>(p));
          Tensor& gp = touch(n.in[p]);
          for (int r = 0; r < t.rows; ++r)
            for (int c = 0; c < t.cols; ++c) gp.at(r, c) += g.at(off + r, c);
          off += t.rows;
        }
        break;
      }

      case OpKind::kRowSoftmax: {
        const Tensor& y = n.value;
        Tensor& ga = touch(n.in[0]);
        for (int i = 0; i < y.rows; ++i) {
          double s = 0.0;
          for (int j = 0; j < y.cols; ++j) s += g.at(i, j) * y.at(i, j);
          for (int j = 0; j < y.cols; ++j)
            ga.at(i, j) += y.at(i, j) * (g.at(i, j) - s);
        }
        break;
      }

      case OpKind::kRowLogSoftmax: {
        const Tensor& y = n.value;
        Tensor& ga = touch(n.in[0]);
        for (int i = 0; i < y.rows; ++i) {
          double s = 0.0;
          for (int j = 0; j < y.cols; ++j) s += g.at(i, j);
          for (int j = 0; j < y.cols; ++j)
            ga.at(i, j) += g.at(i, j) - std::exp(y.at(i, j)) * s;
        }
        break;
      }

      case OpKind::kMeanRows: {
        const Tensor& a = in_value(n, 0);
        Tensor& ga = touch(n.in[0]);
        for (int i = 0; i < a.rows; ++i)
          for (int j = 0; j < a.cols; ++j) ga.at(i, j) += g.at(0, j) / a.rows;
        break;
      }

      case OpKind::kMeanCols: {
        const Tensor& a = in_value(n, 0);
        Tensor& ga = touch(n.in[0]);
        for (int i = 0; i < a.rows; ++i)
          for (int j = 0; j < a.cols; ++j) ga.at(i, j) += g.at(i, 0) / a.cols;
        break;
      }

      case OpKind::kAddN: {
        for (NodeRef src : n.in) {
          Tensor& gp = touch(src);
          for (int k = 0; k < g.size(); ++k)
            gp.v[static_cast<size_t>(k)] += g.v[static_cast<size_t>(k)];
        }
        break;
      }

      case OpKind::kMul: {
        const Tensor& a = in_value(n, 0);
        const Tensor& b = in_value(n, 1);
        Tensor& ga = touch(n.in[0]);
        Tensor& gb = touch(n.in[1]);
        for (int k = 0; k < g.size(); ++k) {
          ga.v[static_cast<size_t>(k)] +=
              g.v[static_cast<size_t>(k)] * b.v[static_cast<size_t>(k)];
          gb.v[static_cast<size_t>(k)] +=
              g.v[static_cast<size_t>(k)] * a.v[static_cast<size_t>(k)];
        }
        break;
      }

      case OpKind::kExp: {
        const Tensor& y = n.value;
        Tensor& ga = touch(n.in[0]);
        for (int k = 0; k < g.size(); ++k)
          ga.v[static_cast<size_t>(k)] +=
              g.v[static_cast<size_t>(k)] * y.v[static_cast<size_t>(k)];
        break;
      }

      case OpKind::kLog: {
        const Tensor& a = in_value(n, 0);
        Tensor& ga = touch(n.in[0]);
        for (int k = 0; k < g.size(); ++k)
          ga.v[static_cast<size_t>(k)] +=
              g.v[static_cast<size_t>(k)] / a.v[static_cast<size_t>(k)];
        break;
      }

      case OpKind::kTanh: {
        const Tensor& y = n.value;
        Tensor& ga = touch(n.in[0]);
        for (int k = 0; k < g.size(); ++k) {
          double yk = y.v[static_cast<size_t>(k)];
          ga.v[static_cast<size_t>(k)] +=
              g.v[static_cast<size_t>(k)] * (1.0 - yk * yk);
        }
        break;
      }

      case OpKind::kSigmoid: {
        const Tensor& y = n.value;
        Tensor& ga = touch(n.in[0]);
        for (int k = 0; k < g.size(); ++k) {
          double yk = y.v[static_cast<size_t>(k)];
          ga.v[static_cast<size_t>(k)] +=
              g.v[static_cast<size_t>(k)] * yk * (1.0 - yk);
        }
        break;
      }

      case OpKind::kSquaredDistance: {
        const Tensor& a = in_value(n, 0);
        const Tensor& b = in_value(n, 1);
        Tensor& ga = touch(n.in[0]);
        Tensor& gb = touch(n.in[1]);
        double g0 = g.v[0];
        for (int k = 0; k < a.size(); ++k) {
          double d = a.v[static_cast<size_t>(k)] - b.v[static_cast<size_t>(k)];
          ga.v[static_cast<size_t>(k)] += 2.0 * g0 * d;
          gb.v[static_cast<size_t>(k)] -= 2.0 * g0 * d;
        }
        break;
      }

      case OpKind::kDot: {
        const Tensor& a = in_value(n, 0);
        const Tensor& b = in_value(n, 1);
        Tensor& ga = touch(n.in[0]);
        Tensor& gb = touch(n.in[1]);
        double g0 = g.v[0];
        for (int k = 0; k < a.size(); ++k) {
          ga.v[static_cast<size_t>(k)] += g0 * b.v[static_cast<size_t>(k)];
          gb.v[static_cast<size_t>(k)] += g0 * a.v[static_cast<size_t>(k)];
        }
        break;
      }

      case OpKind::kScale: {
        Tensor& ga = touch(n.in[0]);
        for (int k = 0; k < g.size(); ++k)
          ga.v[static_cast<size_t>(k)] += n.factor * g.v[static_cast<size_t>(k)];
        break;
      }

      case OpKind::kGatherRows: {
        Tensor& ga = touch(n.in[0]);
        for (size_t r = 0; r < n.indices.size(); ++r)
          for (int j = 0; j < g.cols; ++j)
            ga.at(n.indices[r], j) += g.at(static_cast<int>(r), j);
        break;
      }
    }
  }

  std::map<std::string, Tensor> out;
  for (const auto& [name, ref] : params_) {
    Tensor& g = grad[static_cast<size_t>(ref)];
    if (g.v.empty()) {
      const Tensor& v = nodes_[static_cast<size_t>(ref)].value;
      out[name] = Tensor(v.rows, v.cols);
    } else {
      out[name] = std::move(g);
    }
  }
  return out;
}

double check_gradients(const LossBuilder& build, ParamMap params,
                       double epsilon) {
  Graph g;
  NodeRef loss = build(g, params);
  auto analytic = g.gradients(loss);

  double max_rel = 0.0;
  for (auto& [name, tensor] : params) {
    const Tensor* an = nullptr;
    auto it = analytic.find(name);
    if (it != analytic.end()) an = &it->second;
    for (int k = 0; k < tensor.size(); ++k) {
      double orig = tensor.v[static_cast<size_t>(k)];

      tensor.v[static_cast<size_t>(k)] = orig + epsilon;
      Graph gp;
      double fp = gp.scalar_value(build(gp, params));

      tensor.v[static_cast<size_t>(k)] = orig - epsilon;
      Graph gm;
      double fm = gm.scalar_value(build(gm, params));

      tensor.v[static_cast<size_t>(k)] = orig;

      double numeric = (fp - fm) / (2.0 * epsilon);
      double a = an ? an->v[static_cast<size_t>(k)] : 0.0;
      double rel = std::abs(a - numeric) /
                   std::max(1e-8, std::abs(a) + std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace protojoint::diff
