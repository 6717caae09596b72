#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sefar {

/// Dense row-major f64 matrix. The only tensor type in the project.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row_ptr(std::size_t r) { return data.data() + r * cols; }
  const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

/// Throws std::invalid_argument naming `where` if shapes disagree.
void check_same_shape(const Matrix& a, const Matrix& b, const std::string& where);

/// Throws std::runtime_error naming `where` if any entry is NaN/Inf.
void check_finite(const Matrix& m, const std::string& where);

bool all_finite(const Matrix& m);

/// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);

/// c = a^T * b without materializing the transpose.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

/// c = a * b^T without materializing the transpose.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

/// Adds `row` (1 x cols) to every row of m in place.
void add_row_vector(Matrix& m, const Matrix& row);

/// 1 x cols matrix holding per-column sums.
Matrix column_sums(const Matrix& m);

Matrix hconcat(const std::vector<const Matrix*>& parts);

void scale_in_place(Matrix& m, double s);

/// a += s * b
void axpy(Matrix& a, double s, const Matrix& b);

}  // namespace sefar
