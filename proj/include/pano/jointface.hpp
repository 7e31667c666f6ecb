#pragma once

#include <random>
#include <span>
#include <vector>

#include "pano/geometry.hpp"
#include "pano/tensor.hpp"

namespace pano {

// Tokens laid out as `groups` sequences of `tokens` rows each. Per-face
// layout is (B*6, N, C); the joint layout is (B, 6N, C) over the same memory.
struct TokenTensor {
  int groups = 0;
  int tokens = 0;
  Matrix values;

  int channels() const { return values.cols(); }
  bool operator==(const TokenTensor&) const = default;
};

// (B*6, N, C) -> (B, 6N, C); face f of panorama b occupies slots [fN, (f+1)N) of row b.
TokenTensor joint_reshape(const TokenTensor& z);
// (B, 6N, C) -> (B*6, N, C)
TokenTensor split_faces(const TokenTensor& zhat);

// Unit direction through each token's patch center for a g x g token grid,
// ordered face-major (6 * g * g entries).
std::vector<Direction3> token_directions(int grid);

struct LayerNormCache {
  Matrix normalized;
  std::vector<double> inv_std;
};

inline constexpr double kLayerNormEps = 1e-6;

// Per-row normalization over channels, no affine.
Matrix layer_norm(const Matrix& x, LayerNormCache* cache = nullptr);
Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache);

// One scale/shift pair shared by every token of every face.
Matrix shared_layer_norm(const TokenTensor& zhat, const Matrix& scale, const Matrix& shift,
                         LayerNormCache* cache = nullptr);

// Rotary embedding of one head vector: channels split into x/y/z thirds and
// each consecutive pair in a third rotated by base^(-2m/(d/3)) * coordinate.
void spherical_rope(std::span<double> head, const Direction3& dir, double base);
void spherical_rope_inverse(std::span<double> head, const Direction3& dir, double base);

// Applies spherical_rope to every head of every row; row r uses dirs[r % dirs.size()].
void apply_rope(Matrix& m, std::span<const Direction3> dirs, int heads, double base, bool inverse = false);

// softmax(Q K^T / sqrt(d)) V over all positions of each sequence.
Matrix full_attention(const Matrix& q, const Matrix& k, const Matrix& v, int batch, int seq_len, int heads,
                      AttentionCache* cache = nullptr);

struct AdapterParams {
  Matrix ln_scale;  // 1 x C
  Matrix ln_shift;  // 1 x C
  Matrix wq, wk, wv, wo;  // C x C, applied as y W^T
  int heads = 1;
  double rope_base = 10000.0;

  int channels() const { return wq.rows(); }
  int head_dim() const { return channels() / heads; }

  // Random Q/K/V, unit LN affine and an all-zero output projection.
  static AdapterParams init(int channels, int heads, double rope_base, std::mt19937_64& rng);
  void validate() const;
};

struct AdapterGrads {
  Matrix ln_scale, ln_shift, wq, wk, wv, wo;
  static AdapterGrads zeros_like(const AdapterParams& p);
};

struct AdapterCache {
  LayerNormCache ln;
  Matrix y;  // after affine
  Matrix q_rot, k_rot, v;
  AttentionCache attn;
  Matrix attn_out;
};

// z' = z + W_O * attention(RoPE(W_Q y), RoPE(W_K y), W_V y) with y the shared
// LayerNorm of the joint sequence.
TokenTensor adapter_forward(const TokenTensor& z, std::span<const Direction3> dirs, const AdapterParams& p,
                            AdapterCache* cache = nullptr);

// Returns dL/dz and accumulates parameter gradients into `grads`.
Matrix adapter_backward(const Matrix& dout, std::span<const Direction3> dirs, const AdapterParams& p,
                        const AdapterCache& cache, AdapterGrads& grads);

}  // namespace pano
