#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tla {

// Dense row-major matrix of doubles. Rows are samples, columns are
// features or classes throughout the library.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  // Rows [first, first + count) as a new matrix.
  Matrix slice_rows(std::size_t first, std::size_t count) const;
  // Rows at the given indices, in order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;
  void append_row(std::span<const double> values);

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Row-wise vertical concatenation; column counts must agree.
Matrix vstack(const Matrix& top, const Matrix& bottom);

}  // namespace tla
