#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "pano/error.hpp"

namespace pano {

// Dense row-major matrix of doubles; vectors are 1 x n.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
    if (rows < 0 || cols < 0) throw DomainError("Matrix: negative size");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Y = X W^T (+ bias). X is n x k, W is m x k.
Matrix matmul_nt(const Matrix& x, const Matrix& w);
// Y = A B. A is n x k, B is k x m.
Matrix matmul_nn(const Matrix& a, const Matrix& b);
// Y = A^T B. A is k x n, B is k x m.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

void add_row_bias(Matrix& y, const Matrix& bias);
void add_inplace(Matrix& y, const Matrix& x);
// Column sums of x as a 1 x cols matrix, accumulated into `out`.
void accumulate_col_sums(Matrix& out, const Matrix& x);

void fill_normal(Matrix& m, std::mt19937_64& rng, double stddev);

// Scaled dot-product attention over independent sequences. Q has
// groups * q_len rows and heads * head_dim columns; K and V have
// groups * kv_len rows. Row i of a group attends to every key row of the
// same group.
struct AttentionDims {
  int groups;
  int q_len;
  int kv_len;
  int heads;
  int head_dim;
};

struct AttentionCache {
  AttentionDims dims;
  // groups x heads x q_len x kv_len softmax weights.
  std::vector<double> probs;
};

Matrix attention_forward(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionDims& dims,
                         AttentionCache* cache);

struct AttentionGrads {
  Matrix dq;
  Matrix dk;
  Matrix dv;
};

AttentionGrads attention_backward(const Matrix& dout, const Matrix& q, const Matrix& k, const Matrix& v,
                                  const AttentionCache& cache);

namespace serial {
Matrix matmul_nt(const Matrix& x, const Matrix& w);
Matrix attention_forward(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionDims& dims);
}  // namespace serial

}  // namespace pano
