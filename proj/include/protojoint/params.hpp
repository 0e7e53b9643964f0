#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "protojoint/tensor.hpp"

namespace protojoint {

// Named persistent parameter tensors: encoder weights and the global
// label-embedding store. Mutated only by the optimizer between episodes.
class ParamStore {
 public:
  bool has(const std::string& name) const { return values_.count(name) > 0; }

  diff::Tensor& value(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) {
      throw std::runtime_error("no parameter named '" + name + "'");
    }
    return it->second;
  }

  const diff::Tensor& value(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) {
      throw std::runtime_error("no parameter named '" + name + "'");
    }
    return it->second;
  }

  diff::Tensor& create(const std::string& name, diff::Tensor init) {
    auto [it, inserted] = values_.emplace(name, std::move(init));
    if (!inserted) {
      throw std::runtime_error("parameter '" + name + "' already exists");
    }
    return it->second;
  }

  const std::map<std::string, diff::Tensor>& all() const { return values_; }
  std::map<std::string, diff::Tensor>& all_mutable() { return values_; }

 private:
  std::map<std::string, diff::Tensor> values_;
};

}  // namespace protojoint
