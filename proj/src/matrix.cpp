#include "sefar/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace sefar {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != rows * cols) {
    throw std::invalid_argument("Matrix: data length " + std::to_string(data.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

void check_same_shape(const Matrix& a, const Matrix& b, const std::string& where) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(where + ": shape mismatch (" + std::to_string(a.rows) + "x" +
                                std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                                std::to_string(b.cols) + ")");
  }
}

bool all_finite(const Matrix& m) {
  for (double v : m.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void check_finite(const Matrix& m, const std::string& where) {
  if (!all_finite(m)) {
    throw std::runtime_error(where + ": non-finite entry");
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw std::invalid_argument("matmul: inner dimensions disagree (" + std::to_string(a.cols) +
                                " vs " + std::to_string(b.rows) + ")");
  }
  Matrix c(a.rows, b.cols);
  // i-k-j order keeps the inner loop contiguous for row-major data.
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) {
    throw std::invalid_argument("matmul_at_b: row counts disagree");
  }
  Matrix c(a.cols, b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* arow = a.row_ptr(r);
    const double* brow = b.row_ptr(r);
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double ari = arow[i];
      if (ari == 0.0) continue;
      double* crow = c.row_ptr(i);
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += ari * brow[j];
    }
  }
  return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) {
    throw std::invalid_argument("matmul_a_bt: col counts disagree");
  }
  Matrix c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.row_ptr(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      crow[j] = s;
    }
  }
  return c;
}

void add_row_vector(Matrix& m, const Matrix& row) {
  if (row.rows != 1 || row.cols != m.cols) {
    throw std::invalid_argument("add_row_vector: expected 1x" + std::to_string(m.cols));
  }
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* p = m.row_ptr(i);
    for (std::size_t j = 0; j < m.cols; ++j) p[j] += row.data[j];
  }
}

Matrix column_sums(const Matrix& m) {
  Matrix s(1, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* p = m.row_ptr(i);
    for (std::size_t j = 0; j < m.cols; ++j) s.data[j] += p[j];
  }
  return s;
}

Matrix hconcat(const std::vector<const Matrix*>& parts) {
  if (parts.empty()) throw std::invalid_argument("hconcat: no parts");
  const std::size_t rows = parts.front()->rows;
  std::size_t cols = 0;
  for (const Matrix* p : parts) {
    if (p->rows != rows) throw std::invalid_argument("hconcat: row counts disagree");
    cols += p->cols;
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double* dst = out.row_ptr(i);
    for (const Matrix* p : parts) {
      const double* src = p->row_ptr(i);
      for (std::size_t j = 0; j < p->cols; ++j) *dst++ = src[j];
    }
  }
  return out;
}

void scale_in_place(Matrix& m, double s) {
  for (double& v : m.data) v *= s;
}

void axpy(Matrix& a, double s, const Matrix& b) {
  check_same_shape(a, b, "axpy");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += s * b.data[i];
}

}  // namespace sefar
