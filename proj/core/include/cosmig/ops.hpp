#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cosmig/tensor.hpp"

namespace cosmig {

enum class ActivationKind { kRelu, kLeakyRelu, kSigmoid, kTanh };

const char* to_string(ActivationKind kind);
ActivationKind parse_activation(const std::string& name);

// Sparse 0/1 matrix stored column-wise. Used for the node-to-edge and
// relation-to-edge incidence structures; products against it are exactly the
// dense products with the 0/1 matrix.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(std::size_t rows, std::size_t cols,
               const std::vector<std::vector<std::uint32_t>>& column_rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const std::uint32_t> column(std::size_t c) const {
    return {row_index_.data() + col_start_[c],
            col_start_[c + 1] - col_start_[c]};
  }
  std::size_t column_sum(std::size_t c) const {
    return col_start_[c + 1] - col_start_[c];
  }
  std::vector<std::size_t> row_sums() const;
  bool at(std::size_t r, std::size_t c) const;
  Tensor to_dense() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> col_start_{0};
  std::vector<std::uint32_t> row_index_;
};

// a[m x k] * b[k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// Elementwise product.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor activate(const Tensor& x, ActivationKind kind, double leaky_slope = 0.01);
inline Tensor relu(const Tensor& x) { return activate(x, ActivationKind::kRelu); }
inline Tensor sigmoid(const Tensor& x) {
  return activate(x, ActivationKind::kSigmoid);
}

// Row i of x multiplied by weights[i, 0].
Tensor scale_rows(const Tensor& x, const Tensor& weights);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
// out[i] = x[index[i]]
Tensor gather_rows(const Tensor& x, std::span<const std::uint32_t> index);

// a * x and a^T * x for a 0/1 matrix a.
Tensor spmm(const BinaryMatrix& a, const Tensor& x);
Tensor spmm_transposed(const BinaryMatrix& a, const Tensor& x);

Tensor sum(const Tensor& x);        // 1 x 1
Tensor mean(const Tensor& x);       // 1 x 1
Tensor sum_rows(const Tensor& x);   // 1 x cols
Tensor mean_rows(const Tensor& x);  // 1 x cols

// While alive, records on which side of the kink every relu / leaky-relu
// input on the current thread falls. Finite-difference checks compare
// signatures to spot steps that cross a kink.
class KinkProbe {
 public:
  KinkProbe();
  ~KinkProbe();
  KinkProbe(const KinkProbe&) = delete;
  KinkProbe& operator=(const KinkProbe&) = delete;

  std::uint64_t signature() const noexcept { return hash_; }
  void reset() noexcept { hash_ = kOffset; }
  void record(bool positive) noexcept { hash_ = (hash_ ^ (positive ? 1u : 2u)) * kPrime; }

 private:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t hash_ = kOffset;
  KinkProbe* previous_;
};

// Constant one-hot rows; throws DimensionError when an index >= width.
Tensor one_hot(std::span<const std::uint32_t> index, std::size_t width);

}  // namespace cosmig
