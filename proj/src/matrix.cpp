#include "increlora/matrix.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "increlora/kernels.hpp"

namespace increlora {
namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() +
                                " vs " + b.shape_string());
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : DenseMatrix(rows, cols, std::vector<double>(rows * cols, 0.0)) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("DenseMatrix: dimensions must be positive, got " +
                                shape_string());
  }
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("DenseMatrix: data length " + std::to_string(data_.size()) +
                                " does not match " + shape_string());
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  if (rows_ == 0 || cols_ == 0) throw std::invalid_argument("DenseMatrix: empty initializer");
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::row_vector(std::span<const double> v) {
  return DenseMatrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

DenseMatrix DenseMatrix::column_vector(std::span<const double> v) {
  return DenseMatrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

std::string DenseMatrix::shape_string() const {
  std::ostringstream os;
  os << '[' << rows_ << 'x' << cols_ << ']';
  return os.str();
}

bool DenseMatrix::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: dimension mismatch " + a.shape_string() + " x " +
                                b.shape_string());
  }
  DenseMatrix c(a.rows(), b.cols());
  kernels::matmul_parallel(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  }
  return t;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "add");
  DenseMatrix out(a.rows(), a.cols());
  kernels::axpby_parallel(a.data(), 1.0, b.data(), 1.0, out.data());
  return out;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "subtract");
  DenseMatrix out(a.rows(), a.cols());
  kernels::axpby_parallel(a.data(), 1.0, b.data(), -1.0, out.data());
  return out;
}

DenseMatrix scale(const DenseMatrix& m, double s) {
  DenseMatrix out = m;
  for (double& v : out.data()) v *= s;
  return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "hadamard");
  DenseMatrix out(a.rows(), a.cols());
  kernels::hadamard_parallel(a.data(), b.data(), out.data());
  return out;
}

double frobenius_norm_sq(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return s;
}

DenseMatrix outer_product(std::span<const double> b, std::span<const double> a) {
  DenseMatrix out(b.size(), a.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < a.size(); ++j) row[j] = b[i] * a[j];
  }
  return out;
}

DenseMatrix gaussian_fill(Rng& rng, std::size_t rows, std::size_t cols, double std) {
  if (!(std > 0.0)) throw std::invalid_argument("gaussian_fill: std must be positive");
  DenseMatrix out(rows, cols);
  for (double& v : out.data()) v = std * rng.normal();
  return out;
}

std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double std) {
  if (!(std > 0.0)) throw std::invalid_argument("gaussian_vector: std must be positive");
  std::vector<double> v(n);
  for (double& x : v) x = std * rng.normal();
  return v;
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace increlora
