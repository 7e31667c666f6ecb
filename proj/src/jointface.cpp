#include "pano/jointface.hpp"

#include <cmath>
#include <string>

namespace pano {

TokenTensor joint_reshape(const TokenTensor& z) {
  if (z.groups % kNumFaces != 0 || z.groups == 0)
    throw DomainError("joint_reshape: leading dimension " + std::to_string(z.groups) + " not a multiple of 6");
  if (z.values.rows() != z.groups * z.tokens) throw DomainError("joint_reshape: inconsistent token tensor");
  return {z.groups / kNumFaces, z.tokens * kNumFaces, z.values};
}

TokenTensor split_faces(const TokenTensor& zhat) {
  if (zhat.tokens % kNumFaces != 0 || zhat.tokens == 0)
    throw DomainError("split_faces: sequence length not a multiple of 6");
  if (zhat.values.rows() != zhat.groups * zhat.tokens) throw DomainError("split_faces: inconsistent token tensor");
  return {zhat.groups * kNumFaces, zhat.tokens / kNumFaces, zhat.values};
}

std::vector<Direction3> token_directions(int grid) {
  if (grid < 1) throw DomainError("token_directions: grid must be >= 1");
  std::vector<Direction3> dirs;
  dirs.reserve(static_cast<std::size_t>(kNumFaces) * grid * grid);
  for (FaceId f : kAllFaces)
    for (int gy = 0; gy < grid; ++gy)
      for (int gx = 0; gx < grid; ++gx) dirs.push_back(dir_from_face_pixel(f, gx, gy, grid));
  return dirs;
}

Matrix layer_norm(const Matrix& x, LayerNormCache* cache) {
  const int n = x.rows();
  const int c = x.cols();
  Matrix y(n, c);
  std::vector<double> inv_std(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    const double* xr = x.row(r);
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += xr[j];
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= c;
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[static_cast<std::size_t>(r)] = is;
    double* yr = y.row(r);
    for (int j = 0; j < c; ++j) yr[j] = (xr[j] - mean) * is;
  }
  if (cache) {
    cache->normalized = y;
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache) {
  const Matrix& y = cache.normalized;
  const int n = y.rows();
  const int c = y.cols();
  Matrix dx(n, c);
  for (int r = 0; r < n; ++r) {
    const double* dyr = dy.row(r);
    const double* yr = y.row(r);
    double mean_dy = 0.0, mean_dyy = 0.0;
    for (int j = 0; j < c; ++j) {
      mean_dy += dyr[j];
      mean_dyy += dyr[j] * yr[j];
    }
    mean_dy /= c;
    mean_dyy /= c;
    const double is = cache.inv_std[static_cast<std::size_t>(r)];
    double* dxr = dx.row(r);
    for (int j = 0; j < c; ++j) dxr[j] = is * (dyr[j] - mean_dy - yr[j] * mean_dyy);
  }
  return dx;
}

Matrix shared_layer_norm(const TokenTensor& zhat, const Matrix& scale, const Matrix& shift, LayerNormCache* cache) {
  const int c = zhat.channels();
  if (scale.rows() != 1 || scale.cols() != c || !scale.same_shape(shift))
    throw DomainError("shared_layer_norm: affine parameters must be 1 x C");
  Matrix y = layer_norm(zhat.values, cache);
  for (int r = 0; r < y.rows(); ++r) {
    double* yr = y.row(r);
    for (int j = 0; j < c; ++j) yr[j] = yr[j] * scale(0, j) + shift(0, j);
  }
  return y;
}

namespace {

void rope_impl(std::span<double> head, const Direction3& dir, double base, double sign) {
  const std::size_t d = head.size();
  if (d == 0 || d % 6 != 0) throw ConfigError("spherical_rope: head dimension must be a positive multiple of 6");
  const std::size_t third = d / 3;
  const double coords[3] = {dir.x, dir.y, dir.z};
  for (std::size_t axis = 0; axis < 3; ++axis) {
    double* g = head.data() + axis * third;
    for (std::size_t m = 0; m < third / 2; ++m) {
      const double theta = std::pow(base, -2.0 * static_cast<double>(m) / static_cast<double>(third));
      const double angle = sign * theta * coords[axis];
      const double cs = std::cos(angle);
      const double sn = std::sin(angle);
      const double a = g[2 * m];
      const double b = g[2 * m + 1];
      g[2 * m] = a * cs - b * sn;
      g[2 * m + 1] = a * sn + b * cs;
    }
  }
}

}  // namespace

void spherical_rope(std::span<double> head, const Direction3& dir, double base) { rope_impl(head, dir, base, 1.0); }

void spherical_rope_inverse(std::span<double> head, const Direction3& dir, double base) {
  rope_impl(head, dir, base, -1.0);
}

void apply_rope(Matrix& m, std::span<const Direction3> dirs, int heads, double base, bool inverse) {
  if (heads < 1 || m.cols() % heads != 0) throw ConfigError("apply_rope: channels not divisible by heads");
  if (dirs.empty()) throw DomainError("apply_rope: no directions");
  const int d = m.cols() / heads;
  const double sign = inverse ? -1.0 : 1.0;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < m.rows(); ++r) {
    const Direction3& dir = dirs[static_cast<std::size_t>(r) % dirs.size()];
    for (int h = 0; h < heads; ++h)
      rope_impl(std::span<double>(m.row(r) + h * d, static_cast<std::size_t>(d)), dir, base, sign);
  }
}

Matrix full_attention(const Matrix& q, const Matrix& k, const Matrix& v, int batch, int seq_len, int heads,
                      AttentionCache* cache) {
  if (heads < 1 || q.cols() % heads != 0) throw ConfigError("full_attention: channels not divisible by heads");
  return attention_forward(q, k, v, {batch, seq_len, seq_len, heads, q.cols() / heads}, cache);
}

AdapterParams AdapterParams::init(int channels, int heads, double rope_base, std::mt19937_64& rng) {
  AdapterParams p;
  p.heads = heads;
  p.rope_base = rope_base;
  p.ln_scale = Matrix(1, channels, 1.0);
  p.ln_shift = Matrix(1, channels, 0.0);
  p.wq = Matrix(channels, channels);
  p.wk = Matrix(channels, channels);
  p.wv = Matrix(channels, channels);
  p.wo = Matrix(channels, channels, 0.0);
  const double sd = 1.0 / std::sqrt(static_cast<double>(channels));
  fill_normal(p.wq, rng, sd);
  fill_normal(p.wk, rng, sd);
  fill_normal(p.wv, rng, sd);
  p.validate();
  return p;
}

void AdapterParams::validate() const {
  const int c = wq.rows();
  if (c < 1 || heads < 1 || c % heads != 0)
    throw ConfigError("adapter: channels " + std::to_string(c) + " not divisible by heads " + std::to_string(heads));
  if ((c / heads) % 6 != 0)
    throw ConfigError("adapter: head dimension " + std::to_string(c / heads) + " not divisible by 6");
  for (const Matrix* m : {&wq, &wk, &wv, &wo})
    if (m->rows() != c || m->cols() != c) throw ConfigError("adapter: projection matrices must be C x C");
  if (ln_scale.rows() != 1 || ln_scale.cols() != c || !ln_scale.same_shape(ln_shift))
    throw ConfigError("adapter: LayerNorm affine must be 1 x C");
}

AdapterGrads AdapterGrads::zeros_like(const AdapterParams& p) {
  const int c = p.channels();
  return {Matrix(1, c), Matrix(1, c), Matrix(c, c), Matrix(c, c), Matrix(c, c), Matrix(c, c)};
}

TokenTensor adapter_forward(const TokenTensor& z, std::span<const Direction3> dirs, const AdapterParams& p,
                            AdapterCache* cache) {
  p.validate();
  if (z.channels() != p.channels()) throw DomainError("adapter_forward: channel mismatch");
  const TokenTensor zhat = joint_reshape(z);
  if (dirs.size() != static_cast<std::size_t>(zhat.tokens))
    throw DomainError("adapter_forward: need one direction per token of a panorama");

  LayerNormCache ln;
  Matrix y = shared_layer_norm(zhat, p.ln_scale, p.ln_shift, &ln);
  Matrix q = matmul_nt(y, p.wq);
  Matrix k = matmul_nt(y, p.wk);
  Matrix v = matmul_nt(y, p.wv);
  apply_rope(q, dirs, p.heads, p.rope_base);
  apply_rope(k, dirs, p.heads, p.rope_base);
  AttentionCache attn;
  Matrix o = full_attention(q, k, v, zhat.groups, zhat.tokens, p.heads, cache ? &attn : nullptr);

  TokenTensor out = z;
  add_inplace(out.values, matmul_nt(o, p.wo));
  if (cache) {
    cache->ln = std::move(ln);
    cache->y = std::move(y);
    cache->q_rot = std::move(q);
    cache->k_rot = std::move(k);
    cache->v = std::move(v);
    cache->attn = std::move(attn);
    cache->attn_out = std::move(o);
  }
  return out;
}

Matrix adapter_backward(const Matrix& dout, std::span<const Direction3> dirs, const AdapterParams& p,
                        const AdapterCache& cache, AdapterGrads& grads) {
  add_inplace(grads.wo, matmul_tn(dout, cache.attn_out));
  const Matrix d_attn = matmul_nn(dout, p.wo);
  AttentionGrads ag = attention_backward(d_attn, cache.q_rot, cache.k_rot, cache.v, cache.attn);
  apply_rope(ag.dq, dirs, p.heads, p.rope_base, true);
  apply_rope(ag.dk, dirs, p.heads, p.rope_base, true);

  add_inplace(grads.wq, matmul_tn(ag.dq, cache.y));
  add_inplace(grads.wk, matmul_tn(ag.dk, cache.y));
  add_inplace(grads.wv, matmul_tn(ag.dv, cache.y));
  Matrix dy = matmul_nn(ag.dq, p.wq);
  add_inplace(dy, matmul_nn(ag.dk, p.wk));
  add_inplace(dy, matmul_nn(ag.dv, p.wv));

  const Matrix& yn = cache.ln.normalized;
  const int c = p.channels();
  for (int r = 0; r < dy.rows(); ++r) {
    double* dyr = dy.row(r);
    const double* ynr = yn.row(r);
    for (int j = 0; j < c; ++j) {
      grads.ln_scale(0, j) += dyr[j] * ynr[j];
      grads.ln_shift(0, j) += dyr[j];
      dyr[j] *= p.ln_scale(0, j);
    }
  }
  Matrix dz = layer_norm_backward(dy, cache.ln);
  add_inplace(dz, dout);
  return dz;
}

}  // namespace pano
