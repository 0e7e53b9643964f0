#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protojoint/tensor.hpp"

namespace protojoint::diff {

// Index of a node inside its Graph. Nodes are append-only, so a NodeRef
// always points behind the current frontier.
using NodeRef = int;

enum class OpKind {
  kInput,
  kParam,
  kMatmul,
  kTranspose,
  kConcatCols,
  kConcatRows,
  kRowSoftmax,
  kRowLogSoftmax,
  kMeanRows,
  kMeanCols,
  kAddN,
  kMul,
  kExp,
  kLog,
  kTanh,
  kSigmoid,
  kSquaredDistance,
  kDot,
  kScale,
  kGatherRows,
};

const char* op_name(OpKind op);

struct Node {
  OpKind op;
  std::vector<NodeRef> in;
  Tensor value;
  double factor = 0.0;        // kScale
  std::vector<int> indices;   // kGatherRows
  std::string name;           // kParam
};

// Reverse-mode differentiable computation over dense matrices. Forward
// values are computed eagerly at node construction, exactly once. A graph
// is confined to one thread; evaluated tensors are immutable afterwards.
class Graph {
 public:
  NodeRef input(Tensor t);
  NodeRef parameter(const std::string& name, Tensor t);
  bool has_parameter(const std::string& name) const;
  NodeRef parameter_node(const std::string& name) const;

  NodeRef matmul(NodeRef a, NodeRef b);
  NodeRef transpose(NodeRef a);
  NodeRef concat_cols(std::span<const NodeRef> parts);
  NodeRef concat_rows(std::span<const NodeRef> parts);
  NodeRef row_softmax(NodeRef a);
  NodeRef row_log_softmax(NodeRef a);
  NodeRef mean_rows(NodeRef a);
  NodeRef mean_cols(NodeRef a);
  NodeRef add(NodeRef a, NodeRef b);
  NodeRef add_n(std::span<const NodeRef> parts);
  NodeRef mul(NodeRef a, NodeRef b);
  NodeRef exp(NodeRef a);
  NodeRef log(NodeRef a);
  NodeRef tanh(NodeRef a);
  NodeRef sigmoid(NodeRef a);
  NodeRef squared_distance(NodeRef a, NodeRef b);
  NodeRef dot(NodeRef a, NodeRef b);
  NodeRef scale(NodeRef a, double k);
  NodeRef gather_rows(NodeRef a, std::vector<int> rows);

  NodeRef sub(NodeRef a, NodeRef b) { return add(a, scale(b, -1.0)); }

  const Tensor& value(NodeRef n) const;
  double scalar_value(NodeRef n) const;
  size_t node_count() const { return nodes_.size(); }

  // Reverse accumulation from a scalar loss. Parameters that do not reach
  // the loss get zero gradients.
  std::map<std::string, Tensor> gradients(NodeRef loss) const;

 private:
  NodeRef push(Node&& node);
  const Tensor& in_value(const Node& n, int i) const;
  void compute(Node& n) const;
  [[noreturn]] void fail(const Node& n, const std::string& what) const;

  std::vector<Node> nodes_;
  std::map<std::string, NodeRef> params_;
};

// Central finite differences over every coordinate of every entry in
// `params`. The builder must construct the loss graph from the given
// values; it is re-invoked for each perturbed coordinate. Returns the
// maximum over coordinates of |analytic - numeric| divided by
// max(1e-8, |analytic| + |numeric|).
using ParamMap = std::map<std::string, Tensor>;
using LossBuilder = std::function<NodeRef(Graph&, const ParamMap&)>;

double check_gradients(const LossBuilder& build, ParamMap params,
                       double epsilon = 1e-5);

}  // namespace protojoint::diff
