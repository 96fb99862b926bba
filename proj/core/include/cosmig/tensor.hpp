#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cosmig {

namespace detail {

// One value in the differentiation graph. Ops create a node per result and
// record the parents plus a closure that pushes the node's gradient into them.
struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first needed
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::span<double> ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

// Dense row-major 2-D array that can take part in reverse-mode
// differentiation. Tensor is a cheap shared handle: copies alias the same
// storage, use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, bool requires_grad = false);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values,
         bool requires_grad = false);

  static Tensor zeros(std::size_t rows, std::size_t cols) {
    return Tensor(rows, cols);
  }
  static Tensor full(std::size_t rows, std::size_t cols, double value);
  static Tensor identity(std::size_t n);
  static Tensor from_rows(
      std::initializer_list<std::initializer_list<double>> rows);
  static Tensor scalar(double value) {
    return Tensor(1, 1, std::vector<double>{value});
  }

  bool defined() const noexcept { return node_ != nullptr; }
  std::size_t rows() const noexcept { return node_ ? node_->rows : 0; }
  std::size_t cols() const noexcept { return node_ ? node_->cols : 0; }
  std::size_t size() const noexcept { return rows() * cols(); }
  std::string shape_string() const;

  std::span<const double> values() const { return node_->value; }
  // Writable view, intended for leaves (parameters, inputs).
  std::span<double> mutable_values() { return node_->value; }
  double at(std::size_t r, std::size_t c) const {
    return node_->value[r * node_->cols + c];
  }
  double item() const;

  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  bool is_leaf() const noexcept { return node_ && !node_->backward; }

  bool has_grad() const noexcept {
    return node_ && node_->grad.size() == node_->value.size() &&
           !node_->grad.empty();
  }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  // Deep copy of values (and requires_grad), detached from any graph.
  Tensor clone() const;
  // Same values, no graph history, requires_grad = false.
  Tensor detach() const;

  // Reverse sweep from this scalar. Leaf tensors that require grad accumulate
  // into their grad buffers; intermediate buffers are reset on every call.
  void backward() const;

  bool same_node(const Tensor& other) const noexcept {
    return node_ == other.node_;
  }

  const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Ops skip graph recording while a guard is alive on the current thread.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

}  // namespace cosmig
