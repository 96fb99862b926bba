#include "cosmig/param_store.hpp"

#include <algorithm>

#include "cosmig/error.hpp"

namespace cosmig {

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  if (!value.defined()) throw Error("parameter '" + name + "' is undefined");
  value.set_requires_grad(true);
  auto [it, inserted] = params_.emplace(name, std::move(value));
  if (!inserted) throw Error("duplicate parameter name '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(name);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

ParamStore ParamStore::clone() const {
  ParamStore copy;
  for (const auto& [name, t] : params_) copy.add(name, t.clone());
  return copy;
}

void ParamStore::assign_values(const ParamStore& other) {
  if (other.size() != size()) throw Error("assign_values: parameter sets differ");
  for (auto& [name, t] : params_) {
    const Tensor& src = other.get(name);
    if (src.rows() != t.rows() || src.cols() != t.cols()) {
      throw DimensionError("assign_values: shape mismatch for '" + name + "'");
    }
    std::copy(src.values().begin(), src.values().end(),
              t.mutable_values().begin());
  }
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (size() != other.size()) return false;
  auto a = params_.begin();
  auto b = other.params_.begin();
  for (; a != params_.end(); ++a, ++b) {
    if (a->first != b->first) return false;
    if (a->second.rows() != b->second.rows() ||
        a->second.cols() != b->second.cols()) {
      return false;
    }
    if (!std::equal(a->second.values().begin(), a->second.values().end(),
                    b->second.values().begin())) {
      return false;
    }
  }
  return true;
}

}  // namespace cosmig
