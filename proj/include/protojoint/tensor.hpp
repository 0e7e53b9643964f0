#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace protojoint::diff {

// Dense row-major matrix of doubles. Row vectors are 1xN, scalars 1x1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c)
      : rows(r), cols(c), v(static_cast<size_t>(r) * static_cast<size_t>(c)) {}
  Tensor(int r, int c, std::vector<double> values)
      : rows(r), cols(c), v(std::move(values)) {
    if (v.size() != static_cast<size_t>(r) * static_cast<size_t>(c)) {
      throw std::invalid_argument("tensor of shape " + shape_str() + " got " +
                                  std::to_string(v.size()) + " values");
    }
  }

  static Tensor scalar(double x) { return Tensor(1, 1, {x}); }

  static Tensor full(int r, int c, double x) {
    Tensor t(r, c);
    for (double& e : t.v) e = x;
    return t;
  }

  double& at(int r, int c) {
    return v[static_cast<size_t>(r) * static_cast<size_t>(cols) +
             static_cast<size_t>(c)];
  }
  double at(int r, int c) const {
    return v[static_cast<size_t>(r) * static_cast<size_t>(cols) +
             static_cast<size_t>(c)];
  }

  int size() const { return rows * cols; }

  bool same_shape(const Tensor& o) const {
    return rows == o.rows && cols == o.cols;
  }

  bool all_finite() const {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

  std::string shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
  }
};

}  // namespace protojoint::diff
