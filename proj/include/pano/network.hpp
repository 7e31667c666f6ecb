#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pano/geometry.hpp"
#include "pano/jointface.hpp"

namespace pano {

struct ModelConfig {
  int depth = 4;
  int channels = 24;
  int heads = 2;
  int face_size = 16;  // latent face resolution
  int patch = 2;
  int latent_channels = 3;
  int vocab = 8;
  int cond_tokens = 4;
  int mlp_ratio = 4;
  double rope_base = 10000.0;
  std::uint64_t init_seed = 0;

  int grid() const { return face_size / patch; }
  int tokens_per_face() const { return grid() * grid(); }
  int patch_dim() const { return patch * patch * latent_channels; }
  int head_dim() const { return channels / heads; }
  void validate() const;
};

// Frozen stand-in for a pretrained DiT block.
struct BackboneBlock {
  Matrix sa_wq, sa_wk, sa_wv, sa_wo;  // per-face self-attention
  Matrix ca_wq, ca_wk, ca_wv, ca_wo;  // cross-attention to condition tokens
  Matrix mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

struct NamedTensor {
  std::string name;
  Matrix* value;
  bool trainable;
};

struct BlockTrace {
  LayerNormCache ln_self;
  Matrix sa_q, sa_k, sa_v, sa_out;
  AttentionCache sa_attn;
  AdapterCache adapter;
  LayerNormCache ln_cross;
  Matrix ca_q, ca_k, ca_v, ca_out;
  AttentionCache ca_attn;
  LayerNormCache ln_mlp;
  Matrix mlp_pre, mlp_act;
};

struct NetworkTrace {
  int batch = 0;
  bool adapters_bypassed = false;
  std::vector<Direction3> dirs;
  std::vector<BlockTrace> blocks;
  LayerNormCache ln_final;
};

struct ForwardOptions {
  // Skip every adapter; gives the frozen-backbone-only forward.
  bool bypass_adapters = false;
  // Per-token directions (6N entries); defaults to token_directions(grid).
  const std::vector<Direction3>* dirs = nullptr;
};

class JointFaceNetwork {
 public:
  explicit JointFaceNetwork(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  // Velocity prediction for a batch of latent cubemaps. t in [0,1] and one
  // condition id per panorama.
  std::vector<Cubemap> forward(const std::vector<Cubemap>& x, std::span<const double> t,
                               std::span<const int> cond, const ForwardOptions& opts = {},
                               NetworkTrace* trace = nullptr) const;

  // Gradients of a scalar loss w.r.t. every adapter, given dL/d(output).
  std::vector<AdapterGrads> backward(const std::vector<Cubemap>& dout, const NetworkTrace& trace) const;

  std::vector<AdapterParams>& adapters() { return adapters_; }
  const std::vector<AdapterParams>& adapters() const { return adapters_; }
  const std::vector<BackboneBlock>& backbone() const { return blocks_; }

  // Every tensor with a stable name; only adapter tensors are trainable.
  std::vector<NamedTensor> parameters();
  std::vector<std::pair<std::string, const Matrix*>> parameters() const;

 private:
  ModelConfig cfg_;
  Matrix patch_w_, patch_b_;
  Matrix time_w_, time_b_;
  Matrix cond_table_;
  std::vector<BackboneBlock> blocks_;
  std::vector<AdapterParams> adapters_;
  Matrix final_w_, final_b_;
  std::vector<Direction3> dirs_;
};

// Sinusoidal features of t (dim even).
std::vector<double> timestep_features(double t, int dim);

// Face latents -> (B*6*N) x patch_dim rows, and back.
Matrix patchify(const std::vector<Cubemap>& x, int patch);
std::vector<Cubemap> unpatchify(const Matrix& rows, int batch, int face_size, int channels, int patch);

}  // namespace pano
