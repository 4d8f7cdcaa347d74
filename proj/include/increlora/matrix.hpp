#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "increlora/rng.hpp"

namespace increlora {

// Row-major dense matrix of doubles. Vectors are 1 x n (row) or n x 1 (column).
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix row_vector(std::span<const double> v);
  static DenseMatrix column_vector(std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::string shape_string() const;
  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& m);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& m, double s);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
double frobenius_norm_sq(const DenseMatrix& m);

// b a^T for a column factor b (length out) and a row factor a (length in): out x in.
DenseMatrix outer_product(std::span<const double> b, std::span<const double> a);

// i.i.d. normal(0, std^2) entries; std must be positive.
DenseMatrix gaussian_fill(Rng& rng, std::size_t rows, std::size_t cols, double std);
std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double std);

double dot(std::span<const double> x, std::span<const double> y);

}  // namespace increlora
