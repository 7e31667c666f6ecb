#include "pano/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace pano {

namespace {

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void nt_row(const Matrix& x, const Matrix& w, Matrix& y, int r) {
  const double* xr = x.row(r);
  double* yr = y.row(r);
  for (int j = 0; j < w.rows(); ++j) yr[j] = dot(xr, w.row(j), x.cols());
}

// Softmax attention for one (group, head); writes output columns of that head.
// Copies one head of rows [row0, row0 + n) into a head_dim x n buffer so
// the inner loops below run over key positions with unit stride.
void pack_transposed(const Matrix& m, int row0, int n, int col, int head_dim, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(head_dim) * n);
  for (int j = 0; j < n; ++j) {
    const double* r = m.row(row0 + j) + col;
    for (int c = 0; c < head_dim; ++c) out[static_cast<std::size_t>(c) * n + j] = r[c];
  }
}

void attend_one(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionDims& d, int g, int h,
                Matrix& out, double* probs) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
  const int col = h * d.head_dim;
  const int n = d.kv_len;
  std::vector<double> kt, vt;
  pack_transposed(k, g * n, n, col, d.head_dim, kt);
  pack_transposed(v, g * n, n, col, d.head_dim, vt);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < d.q_len; ++i) {
    const double* qi = q.row(g * d.q_len + i) + col;
    std::fill(w.begin(), w.end(), 0.0);
    for (int c = 0; c < d.head_dim; ++c) {
      const double qc = qi[c] * scale;
      const double* kc = kt.data() + static_cast<std::size_t>(c) * n;
      for (int j = 0; j < n; ++j) w[static_cast<std::size_t>(j)] += qc * kc[j];
    }
    const double mx = *std::max_element(w.begin(), w.end());
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      w[static_cast<std::size_t>(j)] = std::exp(w[static_cast<std::size_t>(j)] - mx);
      denom += w[static_cast<std::size_t>(j)];
    }
    const double inv = 1.0 / denom;
    for (int j = 0; j < n; ++j) w[static_cast<std::size_t>(j)] *= inv;
    if (probs) std::copy(w.begin(), w.end(), probs + static_cast<std::size_t>(i) * n);
    double* oi = out.row(g * d.q_len + i) + col;
    for (int c = 0; c < d.head_dim; ++c) {
      const double* vc = vt.data() + static_cast<std::size_t>(c) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += w[static_cast<std::size_t>(j)] * vc[j];
      oi[c] = acc;
    }
  }
}

void check_attention_shapes(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionDims& d) {
  const int width = d.heads * d.head_dim;
  if (q.rows() != d.groups * d.q_len || k.rows() != d.groups * d.kv_len || v.rows() != k.rows() ||
      q.cols() != width || k.cols() != width || v.cols() != width)
    throw DomainError("attention: inconsistent Q/K/V shapes");
}

}  // namespace

Matrix matmul_nt(const Matrix& x, const Matrix& w) {
  if (x.cols() != w.cols()) throw DomainError("matmul_nt: inner dimension mismatch");
  Matrix y(x.rows(), w.rows());
#pragma omp parallel for schedule(static)
  for (int r = 0; r < x.rows(); ++r) nt_row(x, w, y, r);
  return y;
}

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DomainError("matmul_nn: inner dimension mismatch");
  Matrix y(a.rows(), b.cols());
#pragma omp parallel for schedule(static)
  for (int r = 0; r < a.rows(); ++r) {
    double* yr = y.row(r);
    const double* ar = a.row(r);
    for (int k = 0; k < a.cols(); ++k) {
      const double s = ar[k];
      const double* br = b.row(k);
      for (int j = 0; j < b.cols(); ++j) yr[j] += s * br[j];
    }
  }
  return y;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DomainError("matmul_tn: inner dimension mismatch");
  Matrix y(a.cols(), b.cols());
#pragma omp parallel for schedule(static)
  for (int r = 0; r < a.cols(); ++r) {
    double* yr = y.row(r);
    for (int k = 0; k < a.rows(); ++k) {
      const double s = a(k, r);
      const double* br = b.row(k);
      for (int j = 0; j < b.cols(); ++j) yr[j] += s * br[j];
    }
  }
  return y;
}

void add_row_bias(Matrix& y, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != y.cols()) throw DomainError("add_row_bias: shape mismatch");
  for (int r = 0; r < y.rows(); ++r) {
    double* yr = y.row(r);
    for (int c = 0; c < y.cols(); ++c) yr[c] += bias(0, c);
  }
}

void add_inplace(Matrix& y, const Matrix& x) {
  if (!y.same_shape(x)) throw DomainError("add_inplace: shape mismatch");
  auto yd = y.data();
  auto xd = x.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += xd[i];
}

void accumulate_col_sums(Matrix& out, const Matrix& x) {
  if (out.rows() != 1 || out.cols() != x.cols()) throw DomainError("accumulate_col_sums: shape mismatch");
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c) out(0, c) += x(r, c);
}

void fill_normal(Matrix& m, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : m.data()) v = dist(rng);
}

Matrix attention_forward(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionDims& d,
                         AttentionCache* cache) {
  check_attention_shapes(q, k, v, d);
  Matrix out(q.rows(), q.cols());
  const std::size_t block = static_cast<std::size_t>(d.q_len) * d.kv_len;
  if (cache) {
    cache->dims = d;
    cache->probs.assign(static_cast<std::size_t>(d.groups) * d.heads * block, 0.0);
  }
  const int tasks = d.groups * d.heads;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < tasks; ++t) {
    const int g = t / d.heads;
    const int h = t % d.heads;
    attend_one(q, k, v, d, g, h, out, cache ? cache->probs.data() + static_cast<std::size_t>(t) * block : nullptr);
  }
  return out;
}

AttentionGrads attention_backward(const Matrix& dout, const Matrix& q, const Matrix& k, const Matrix& v,
                                  const AttentionCache& cache) {
  const AttentionDims& d = cache.dims;
  check_attention_shapes(q, k, v, d);
  AttentionGrads g{Matrix(q.rows(), q.cols()), Matrix(k.rows(), k.cols()), Matrix(v.rows(), v.cols())};
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
  const std::size_t block = static_cast<std::size_t>(d.q_len) * d.kv_len;
  const int tasks = d.groups * d.heads;
  const int n = d.kv_len;
  const int hd = d.head_dim;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < tasks; ++t) {
    const int grp = t / d.heads;
    const int col = (t % d.heads) * hd;
    const double* p = cache.probs.data() + static_cast<std::size_t>(t) * block;
    std::vector<double> kt, vt;
    pack_transposed(k, grp * n, n, col, hd, kt);
    pack_transposed(v, grp * n, n, col, hd, vt);
    std::vector<double> dkt(static_cast<std::size_t>(hd) * n, 0.0), dvt(static_cast<std::size_t>(hd) * n, 0.0);
    std::vector<double> ds(static_cast<std::size_t>(n));
    for (int i = 0; i < d.q_len; ++i) {
      const int qi = grp * d.q_len + i;
      const double* doi = dout.row(qi) + col;
      const double* pi = p + static_cast<std::size_t>(i) * n;
      // ds = dL/dlogits before the softmax Jacobian: dp_j = dout_i . v_j
      std::fill(ds.begin(), ds.end(), 0.0);
      for (int c = 0; c < hd; ++c) {
        const double dc = doi[c];
        const double* vc = vt.data() + static_cast<std::size_t>(c) * n;
        double* dvc = dvt.data() + static_cast<std::size_t>(c) * n;
        for (int j = 0; j < n; ++j) {
          ds[static_cast<std::size_t>(j)] += dc * vc[j];
          dvc[j] += pi[j] * dc;
        }
      }
      double weighted = 0.0;
      for (int j = 0; j < n; ++j) weighted += ds[static_cast<std::size_t>(j)] * pi[j];
      for (int j = 0; j < n; ++j) ds[static_cast<std::size_t>(j)] = pi[j] * (ds[static_cast<std::size_t>(j)] - weighted) * scale;
      double* dqi = g.dq.row(qi) + col;
      const double* qrow = q.row(qi) + col;
      for (int c = 0; c < hd; ++c) {
        const double* kc = kt.data() + static_cast<std::size_t>(c) * n;
        double* dkc = dkt.data() + static_cast<std::size_t>(c) * n;
        const double qc = qrow[c];
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
          acc += ds[static_cast<std::size_t>(j)] * kc[j];
          dkc[j] += ds[static_cast<std::size_t>(j)] * qc;
        }
        dqi[c] = acc;
      }
    }
    for (int j = 0; j < n; ++j) {
      double* dkj = g.dk.row(grp * n + j) + col;
      double* dvj = g.dv.row(grp * n + j) + col;
      for (int c = 0; c < hd; ++c) {
        dkj[c] = dkt[static_cast<std::size_t>(c) * n + j];
        dvj[c] = dvt[static_cast<std::size_t>(c) * n + j];
      }
    }
  }
  return g;
}

namespace serial {

Matrix matmul_nt(const Matrix& x, const Matrix& w) {
  if (x.cols() != w.cols()) throw DomainError("matmul_nt: inner dimension mismatch");
  Matrix y(x.rows(), w.rows());
  for (int r = 0; r < x.rows(); ++r) nt_row(x, w, y, r);
  return y;
}

Matrix attention_forward(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionDims& d) {
  check_attention_shapes(q, k, v, d);
  Matrix out(q.rows(), q.cols());
  for (int g = 0; g < d.groups; ++g)
    for (int h = 0; h < d.heads; ++h) attend_one(q, k, v, d, g, h, out, nullptr);
  return out;
}

}  // namespace serial

}  // namespace pano
