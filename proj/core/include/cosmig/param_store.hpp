#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "cosmig/tensor.hpp"

namespace cosmig {

// Named trainable tensors. Iteration order is sorted by name, which makes
// checkpoints and optimizer updates deterministic.
class ParamStore {
 public:
  using Map = std::map<std::string, Tensor>;

  // Registers `value` as a parameter (requires_grad is switched on).
  // Throws Error when the name is taken.
  Tensor& add(const std::string& name, Tensor value);

  bool contains(const std::string& name) const {
    return params_.contains(name);
  }
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::string> names() const;

  void zero_grad();

  // Deep copy: same names and values, fresh storage, no grads.
  ParamStore clone() const;
  // Copies values from `other`, which must have identical names and shapes.
  void assign_values(const ParamStore& other);

  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }

  bool operator==(const ParamStore& other) const;

 private:
  Map params_;
};

}  // namespace cosmig
