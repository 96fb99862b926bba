#include "cosmig/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "cosmig/error.hpp"

namespace cosmig {

namespace {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const std::vector<double>& v, std::size_t r, std::size_t c) {
  return ConstMap(v.data(), static_cast<Eigen::Index>(r),
                  static_cast<Eigen::Index>(c));
}
MutMap view(std::span<double> v, std::size_t r, std::size_t c) {
  return MutMap(v.data(), static_cast<Eigen::Index>(r),
                static_cast<Eigen::Index>(c));
}

void check_finite(const std::vector<double>& values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
}

// Wraps a freshly computed value in a graph node. The backward closure is only
// attached when recording is on and some input needs a gradient.
Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> value,
                   std::initializer_list<const Tensor*> inputs,
                   std::function<void(detail::Node&)> backward, const char* op) {
  check_finite(value, op);
  auto node = std::make_shared<detail::Node>();
  node->rows = rows;
  node->cols = cols;
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled()) {
    for (const Tensor* t : inputs) needs = needs || t->requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const Tensor* t : inputs) node->parents.push_back(t->node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tensor make_result_n(std::size_t rows, std::size_t cols,
                     std::vector<double> value, std::span<const Tensor> inputs,
                     std::function<void(detail::Node&)> backward,
                     const char* op) {
  check_finite(value, op);
  auto node = std::make_shared<detail::Node>();
  node->rows = rows;
  node->cols = cols;
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled()) {
    for (const Tensor& t : inputs) needs = needs || t.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const Tensor& t : inputs) node->parents.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw DimensionError(std::string(op) + ": undefined tensor");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace

const char* to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kRelu:
      return "relu";
    case ActivationKind::kLeakyRelu:
      return "leaky_relu";
    case ActivationKind::kSigmoid:
      return "sigmoid";
    case ActivationKind::kTanh:
      return "tanh";
  }
  return "?";
}

ActivationKind parse_activation(const std::string& name) {
  if (name == "relu") return ActivationKind::kRelu;
  if (name == "leaky_relu") return ActivationKind::kLeakyRelu;
  if (name == "sigmoid") return ActivationKind::kSigmoid;
  if (name == "tanh") return ActivationKind::kTanh;
  throw Error("unknown activation '" + name + "'");
}

BinaryMatrix::BinaryMatrix(
    std::size_t rows, std::size_t cols,
    const std::vector<std::vector<std::uint32_t>>& column_rows)
    : rows_(rows), cols_(cols) {
  if (column_rows.size() != cols) {
    throw DimensionError("BinaryMatrix: expected " + std::to_string(cols) +
                         " columns, got " + std::to_string(column_rows.size()));
  }
  col_start_.reserve(cols + 1);
  for (const auto& col : column_rows) {
    for (std::uint32_t r : col) {
      if (r >= rows) throw DimensionError("BinaryMatrix: row index out of range");
      row_index_.push_back(r);
    }
    col_start_.push_back(row_index_.size());
  }
}

std::vector<std::size_t> BinaryMatrix::row_sums() const {
  std::vector<std::size_t> sums(rows_, 0);
  for (std::uint32_t r : row_index_) ++sums[r];
  return sums;
}

bool BinaryMatrix::at(std::size_t r, std::size_t c) const {
  const auto col = column(c);
  return std::find(col.begin(), col.end(), r) != col.end();
}

Tensor BinaryMatrix::to_dense() const {
  Tensor t(rows_, cols_);
  auto v = t.mutable_values();
  for (std::size_t c = 0; c < cols_; ++c) {
    for (std::uint32_t r : column(c)) v[r * cols_ + c] = 1.0;
  }
  return t;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + a.shape_string() +
                         " * " + b.shape_string());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  if (m * k * n != 0) {
    view(std::span<double>(out), m, n).noalias() =
        view(a.node()->value, m, k) * view(b.node()->value, k, n);
  }
  return make_result(
      m, n, std::move(out), {&a, &b},
      [m, k, n](detail::Node& self) {
        const auto grad = view(self.grad, m, n);
        detail::Node& pa = *self.parents[0];
        detail::Node& pb = *self.parents[1];
        if (pa.requires_grad) {
          view(pa.ensure_grad(), m, k).noalias() +=
              grad * view(pb.value, k, n).transpose();
        }
        if (pb.requires_grad) {
          view(pb.ensure_grad(), k, n).noalias() +=
              view(pa.value, m, k).transpose() * grad;
        }
      },
      "matmul");
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result(
      a.rows(), a.cols(), std::move(out), {&a, &b},
      [](detail::Node& self) {
        for (auto& parent : self.parents) {
          if (!parent->requires_grad) continue;
          auto g = parent->ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
      },
      "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result(
      a.rows(), a.cols(), std::move(out), {&a, &b},
      [](detail::Node& self) {
        const double sign[2] = {1.0, -1.0};
        for (std::size_t p = 0; p < 2; ++p) {
          auto& parent = self.parents[p];
          if (!parent->requires_grad) continue;
          auto g = parent->ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign[p] * self.grad[i];
        }
      },
      "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result(
      a.rows(), a.cols(), std::move(out), {&a, &b},
      [](detail::Node& self) {
        detail::Node& pa = *self.parents[0];
        detail::Node& pb = *self.parents[1];
        if (pa.requires_grad) {
          auto g = pa.ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
        }
        if (pb.requires_grad) {
          auto g = pb.ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
        }
      },
      "mul");
}

Tensor scale(const Tensor& a, double factor) {
  require_defined(a, "scale");
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& v : out) v *= factor;
  return make_result(
      a.rows(), a.cols(), std::move(out), {&a},
      [factor](detail::Node& self) {
        auto g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
      },
      "scale");
}

namespace {
thread_local KinkProbe* g_kink_probe = nullptr;
}  // namespace

KinkProbe::KinkProbe() : previous_(g_kink_probe) { g_kink_probe = this; }
KinkProbe::~KinkProbe() { g_kink_probe = previous_; }

Tensor activate(const Tensor& x, ActivationKind kind, double leaky_slope) {
  require_defined(x, "activate");
  const auto in = x.values();
  if (g_kink_probe && (kind == ActivationKind::kRelu || kind == ActivationKind::kLeakyRelu)) {
    for (double v : in) g_kink_probe->record(v > 0.0);
  }
  std::vector<double> out(in.size());
  switch (kind) {
    case ActivationKind::kRelu:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case ActivationKind::kLeakyRelu:
      for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = in[i] > 0.0 ? in[i] : leaky_slope * in[i];
      }
      break;
    case ActivationKind::kSigmoid:
      for (std::size_t i = 0; i < in.size(); ++i) {
        // Split by sign so exp never overflows.
        if (in[i] >= 0.0) {
          out[i] = 1.0 / (1.0 + std::exp(-in[i]));
        } else {
          const double e = std::exp(in[i]);
          out[i] = e / (1.0 + e);
        }
      }
      break;
    case ActivationKind::kTanh:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
      break;
  }
  return make_result(
      x.rows(), x.cols(), std::move(out), {&x},
      [kind, leaky_slope](detail::Node& self) {
        detail::Node& p = *self.parents[0];
        auto g = p.ensure_grad();
        const auto& xin = p.value;
        const auto& y = self.value;
        for (std::size_t i = 0; i < g.size(); ++i) {
          double d = 0.0;
          switch (kind) {
            case ActivationKind::kRelu:
              d = xin[i] > 0.0 ? 1.0 : 0.0;
              break;
            case ActivationKind::kLeakyRelu:
              d = xin[i] > 0.0 ? 1.0 : leaky_slope;
              break;
            case ActivationKind::kSigmoid:
              d = y[i] * (1.0 - y[i]);
              break;
            case ActivationKind::kTanh:
              d = 1.0 - y[i] * y[i];
              break;
          }
          g[i] += d * self.grad[i];
        }
      },
      "activate");
}

Tensor scale_rows(const Tensor& x, const Tensor& weights) {
  require_defined(x, "scale_rows");
  require_defined(weights, "scale_rows");
  if (weights.cols() != 1 || weights.rows() != x.rows()) {
    throw DimensionError("scale_rows: weights " + weights.shape_string() +
                         " do not match rows of " + x.shape_string());
  }
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> out(r * c);
  const auto xv = x.values(), wv = weights.values();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] * wv[i];
  }
  return make_result(
      r, c, std::move(out), {&x, &weights},
      [r, c](detail::Node& self) {
        detail::Node& px = *self.parents[0];
        detail::Node& pw = *self.parents[1];
        if (px.requires_grad) {
          auto g = px.ensure_grad();
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
              g[i * c + j] += self.grad[i * c + j] * pw.value[i];
            }
          }
        }
        if (pw.requires_grad) {
          auto g = pw.ensure_grad();
          for (std::size_t i = 0; i < r; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              acc += self.grad[i * c + j] * px.value[i * c + j];
            }
            g[i] += acc;
          }
        }
      },
      "scale_rows");
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_defined(p, "concat_cols");
    if (p.rows() != r) {
      throw DimensionError("concat_cols: row mismatch " + parts[0].shape_string() +
                           " vs " + p.shape_string());
    }
    offsets.push_back(total);
    total += p.cols();
  }
  std::vector<double> out(r * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto v = parts[k].values();
    const std::size_t c = parts[k].cols();
    for (std::size_t i = 0; i < r; ++i) {
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * c), c,
                  out.begin() + static_cast<std::ptrdiff_t>(i * total + offsets[k]));
    }
  }
  return make_result_n(
      r, total, std::move(out), parts,
      [r, total, offsets](detail::Node& self) {
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
          detail::Node& p = *self.parents[k];
          if (!p.requires_grad) continue;
          auto g = p.ensure_grad();
          const std::size_t c = p.cols;
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
              g[i * c + j] += self.grad[i * total + offsets[k] + j];
            }
          }
        }
      },
      "concat_cols");
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t total = 0;
  std::vector<std::size_t> offsets;
  for (const Tensor& p : parts) {
    require_defined(p, "concat_rows");
    if (p.cols() != c) {
      throw DimensionError("concat_rows: column mismatch " +
                           parts[0].shape_string() + " vs " + p.shape_string());
    }
    offsets.push_back(total);
    total += p.rows();
  }
  std::vector<double> out;
  out.reserve(total * c);
  for (const Tensor& p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return make_result_n(
      total, c, std::move(out), parts,
      [c, offsets](detail::Node& self) {
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
          detail::Node& p = *self.parents[k];
          if (!p.requires_grad) continue;
          auto g = p.ensure_grad();
          const std::size_t base = offsets[k] * c;
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[base + i];
        }
      },
      "concat_rows");
}

Tensor gather_rows(const Tensor& x, std::span<const std::uint32_t> index) {
  require_defined(x, "gather_rows");
  const std::size_t c = x.cols();
  std::vector<double> out(index.size() * c);
  const auto xv = x.values();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= x.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(index[i]) +
                           " out of range for " + x.shape_string());
    }
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(index[i] * c), c,
                out.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return make_result(
      index.size(), c, std::move(out), {&x},
      [c, idx = std::move(idx)](detail::Node& self) {
        auto g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < idx.size(); ++i) {
          for (std::size_t j = 0; j < c; ++j) g[idx[i] * c + j] += self.grad[i * c + j];
        }
      },
      "gather_rows");
}

namespace {

// out[rows(a) x n] += a * x
void spmm_accumulate(const BinaryMatrix& a, std::span<const double> x,
                     std::span<double> out, std::size_t n) {
  for (std::size_t col = 0; col < a.cols(); ++col) {
    const double* src = x.data() + col * n;
    for (std::uint32_t r : a.column(col)) {
      double* dst = out.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
    }
  }
}

// out[cols(a) x n] += a^T * x
void spmm_t_accumulate(const BinaryMatrix& a, std::span<const double> x,
                       std::span<double> out, std::size_t n) {
  for (std::size_t col = 0; col < a.cols(); ++col) {
    double* dst = out.data() + col * n;
    for (std::uint32_t r : a.column(col)) {
      const double* src = x.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
    }
  }
}

}  // namespace

Tensor spmm(const BinaryMatrix& a, const Tensor& x) {
  require_defined(x, "spmm");
  if (a.cols() != x.rows()) {
    throw DimensionError("spmm: [" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + "] * " + x.shape_string());
  }
  const std::size_t n = x.cols();
  std::vector<double> out(a.rows() * n, 0.0);
  spmm_accumulate(a, x.values(), out, n);
  return make_result(
      a.rows(), n, std::move(out), {&x},
      [a, n](detail::Node& self) {
        spmm_t_accumulate(a, self.grad, self.parents[0]->ensure_grad(), n);
      },
      "spmm");
}

Tensor spmm_transposed(const BinaryMatrix& a, const Tensor& x) {
  require_defined(x, "spmm_transposed");
  if (a.rows() != x.rows()) {
    throw DimensionError("spmm_transposed: [" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + "]^T * " + x.shape_string());
  }
  const std::size_t n = x.cols();
  std::vector<double> out(a.cols() * n, 0.0);
  spmm_t_accumulate(a, x.values(), out, n);
  return make_result(
      a.cols(), n, std::move(out), {&x},
      [a, n](detail::Node& self) {
        spmm_accumulate(a, self.grad, self.parents[0]->ensure_grad(), n);
      },
      "spmm_transposed");
}

Tensor sum(const Tensor& x) {
  require_defined(x, "sum");
  double s = 0.0;
  for (double v : x.values()) s += v;
  return make_result(
      1, 1, {s}, {&x},
      [](detail::Node& self) {
        auto g = self.parents[0]->ensure_grad();
        for (double& v : g) v += self.grad[0];
      },
      "sum");
}

Tensor mean(const Tensor& x) {
  require_defined(x, "mean");
  if (x.size() == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor sum_rows(const Tensor& x) {
  require_defined(x, "sum_rows");
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> out(c, 0.0);
  const auto xv = x.values();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j] += xv[i * c + j];
  }
  return make_result(
      1, c, std::move(out), {&x},
      [r, c](detail::Node& self) {
        auto g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j];
        }
      },
      "sum_rows");
}

Tensor mean_rows(const Tensor& x) {
  if (x.rows() == 0) throw DimensionError("mean_rows of a tensor with no rows");
  return scale(sum_rows(x), 1.0 / static_cast<double>(x.rows()));
}

Tensor one_hot(std::span<const std::uint32_t> index, std::size_t width) {
  Tensor t(index.size(), width);
  auto v = t.mutable_values();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= width) {
      throw DimensionError("one_hot: index " + std::to_string(index[i]) +
                           " >= width " + std::to_string(width));
    }
    v[i * width + index[i]] = 1.0;
  }
  return t;
}

}  // namespace cosmig
