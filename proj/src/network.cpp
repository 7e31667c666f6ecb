#include "pano/network.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace pano {

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("model config: " + m); };
  if (depth < 1) fail("depth must be >= 1");
  if (channels < 2 || channels % 2 != 0) fail("channels must be a positive even number");
  if (heads < 1 || channels % heads != 0) fail("channels must be divisible by heads");
  if (head_dim() % 6 != 0) fail("head dimension (channels / heads) must be divisible by 6");
  if (patch < 1 || face_size < patch || face_size % patch != 0) fail("face_size must be a multiple of patch");
  if (latent_channels < 1) fail("latent_channels must be >= 1");
  if (vocab < 1) fail("vocab must be >= 1");
  if (cond_tokens < 1) fail("cond_tokens must be >= 1");
  if (mlp_ratio < 1) fail("mlp_ratio must be >= 1");
  if (!(rope_base > 1.0)) fail("rope_base must be > 1");
}

namespace {

Matrix normal_matrix(int rows, int cols, std::mt19937_64& rng, double sd) {
  Matrix m(rows, cols);
  fill_normal(m, rng, sd);
  return m;
}

double inv_sqrt(int n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

constexpr double kGeluK = 0.7978845608028654;  // sqrt(2/pi)

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluK * (x + 0.044715 * x * x * x))); }

double gelu_grad(double x) {
  const double th = std::tanh(kGeluK * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * kGeluK * (1.0 + 3.0 * 0.044715 * x * x);
}

}  // namespace

std::vector<double> timestep_features(double t, int dim) {
  const int half = dim / 2;
  std::vector<double> f(static_cast<std::size_t>(dim), 0.0);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    f[static_cast<std::size_t>(i)] = std::cos(1000.0 * t * freq);
    f[static_cast<std::size_t>(half + i)] = std::sin(1000.0 * t * freq);
  }
  return f;
}

Matrix patchify(const std::vector<Cubemap>& x, int patch) {
  if (x.empty()) throw DomainError("patchify: empty batch");
  const int s = x.front().face_size();
  const int ch = x.front().channels();
  if (s % patch != 0) throw DomainError("patchify: face size not divisible by patch");
  const int g = s / patch;
  const int n = g * g;
  Matrix rows(static_cast<int>(x.size()) * kNumFaces * n, patch * patch * ch);
  for (std::size_t b = 0; b < x.size(); ++b) {
    if (x[b].face_size() != s || x[b].channels() != ch) throw DomainError("patchify: inconsistent batch");
    for (int f = 0; f < kNumFaces; ++f) {
      const Image& face = x[b].face(f);
      for (int gy = 0; gy < g; ++gy)
        for (int gx = 0; gx < g; ++gx) {
          double* r = rows.row((static_cast<int>(b) * kNumFaces + f) * n + gy * g + gx);
          for (int py = 0; py < patch; ++py)
            for (int px = 0; px < patch; ++px)
              for (int c = 0; c < ch; ++c) *r++ = face.at(gx * patch + px, gy * patch + py, c);
        }
    }
  }
  return rows;
}

std::vector<Cubemap> unpatchify(const Matrix& rows, int batch, int face_size, int channels, int patch) {
  const int g = face_size / patch;
  const int n = g * g;
  if (rows.rows() != batch * kNumFaces * n || rows.cols() != patch * patch * channels)
    throw DomainError("unpatchify: shape mismatch");
  std::vector<Cubemap> out(static_cast<std::size_t>(batch), Cubemap(face_size, channels));
  for (int b = 0; b < batch; ++b)
    for (int f = 0; f < kNumFaces; ++f) {
      Image& face = out[static_cast<std::size_t>(b)].face(f);
      for (int gy = 0; gy < g; ++gy)
        for (int gx = 0; gx < g; ++gx) {
          const double* r = rows.row((b * kNumFaces + f) * n + gy * g + gx);
          for (int py = 0; py < patch; ++py)
            for (int px = 0; px < patch; ++px)
              for (int c = 0; c < channels; ++c) face.at(gx * patch + px, gy * patch + py, c) = *r++;
        }
    }
  return out;
}

JointFaceNetwork::JointFaceNetwork(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.init_seed);
  const int c = cfg_.channels;
  const int p = cfg_.patch_dim();
  const int hidden = cfg_.mlp_ratio * c;
  patch_w_ = normal_matrix(c, p, rng, inv_sqrt(p));
  patch_b_ = Matrix(1, c);
  time_w_ = normal_matrix(c, c, rng, inv_sqrt(c));
  time_b_ = Matrix(1, c);
  cond_table_ = normal_matrix(cfg_.vocab, cfg_.cond_tokens * c, rng, 1.0);
  for (int i = 0; i < cfg_.depth; ++i) {
    BackboneBlock b;
    b.sa_wq = normal_matrix(c, c, rng, inv_sqrt(c));
    b.sa_wk = normal_matrix(c, c, rng, inv_sqrt(c));
    b.sa_wv = normal_matrix(c, c, rng, inv_sqrt(c));
    b.sa_wo = normal_matrix(c, c, rng, inv_sqrt(c));
    b.ca_wq = normal_matrix(c, c, rng, inv_sqrt(c));
    b.ca_wk = normal_matrix(c, c, rng, inv_sqrt(c));
    b.ca_wv = normal_matrix(c, c, rng, inv_sqrt(c));
    b.ca_wo = normal_matrix(c, c, rng, inv_sqrt(c));
    b.mlp_w1 = normal_matrix(hidden, c, rng, inv_sqrt(c));
    b.mlp_b1 = Matrix(1, hidden);
    b.mlp_w2 = normal_matrix(c, hidden, rng, inv_sqrt(hidden));
    b.mlp_b2 = Matrix(1, c);
    blocks_.push_back(std::move(b));
    adapters_.push_back(AdapterParams::init(c, cfg_.heads, cfg_.rope_base, rng));
  }
  final_w_ = normal_matrix(p, c, rng, inv_sqrt(c));
  final_b_ = Matrix(1, p);
  dirs_ = token_directions(cfg_.grid());
}

std::vector<Cubemap> JointFaceNetwork::forward(const std::vector<Cubemap>& x, std::span<const double> t,
                                               std::span<const int> cond, const ForwardOptions& opts,
                                               NetworkTrace* trace) const {
  const int batch = static_cast<int>(x.size());
  if (batch == 0) throw DomainError("network forward: empty batch");
  if (t.size() != x.size() || cond.size() != x.size())
    throw DomainError("network forward: need one timestep and one condition per panorama");
  for (int b = 0; b < batch; ++b) {
    const double tb = t[static_cast<std::size_t>(b)];
    if (!std::isfinite(tb) || tb < 0.0 || tb > 1.0)
      throw DomainError("network forward: timestep " + std::to_string(tb) + " outside [0,1]");
    const int cb = cond[static_cast<std::size_t>(b)];
    if (cb < 0 || cb >= cfg_.vocab) throw DomainError("network forward: condition id out of range");
    if (x[static_cast<std::size_t>(b)].face_size() != cfg_.face_size ||
        x[static_cast<std::size_t>(b)].channels() != cfg_.latent_channels)
      throw DomainError("network forward: latent shape does not match the model config");
  }
  const std::vector<Direction3>& dirs = opts.dirs ? *opts.dirs : dirs_;
  const int c = cfg_.channels;
  const int n = cfg_.tokens_per_face();
  const int ct = cfg_.cond_tokens;
  if (dirs.size() != static_cast<std::size_t>(kNumFaces * n))
    throw DomainError("network forward: need 6N token directions");

  TokenTensor h{batch * kNumFaces, n, matmul_nt(patchify(x, cfg_.patch), patch_w_)};
  add_row_bias(h.values, patch_b_);
  for (int b = 0; b < batch; ++b) {
    const auto feats = timestep_features(t[static_cast<std::size_t>(b)], c);
    Matrix fm(1, c);
    for (int j = 0; j < c; ++j) fm(0, j) = feats[static_cast<std::size_t>(j)];
    Matrix temb = matmul_nt(fm, time_w_);
    add_inplace(temb, time_b_);
    for (int r = b * kNumFaces * n; r < (b + 1) * kNumFaces * n; ++r)
      for (int j = 0; j < c; ++j) h.values(r, j) += temb(0, j);
  }
  // Condition tokens replicated per face so cross-attention runs per face group.
  Matrix cond_rows(batch * kNumFaces * ct, c);
  for (int b = 0; b < batch; ++b)
    for (int f = 0; f < kNumFaces; ++f)
      for (int k = 0; k < ct; ++k)
        for (int j = 0; j < c; ++j)
          cond_rows((b * kNumFaces + f) * ct + k, j) = cond_table_(cond[static_cast<std::size_t>(b)], k * c + j);

  if (trace) {
    trace->batch = batch;
    trace->adapters_bypassed = opts.bypass_adapters;
    trace->dirs = dirs;
    trace->blocks.assign(blocks_.size(), BlockTrace{});
  }

  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const BackboneBlock& bb = blocks_[i];
    BlockTrace local;
    BlockTrace& bt = trace ? trace->blocks[i] : local;

    Matrix a = layer_norm(h.values, &bt.ln_self);
    bt.sa_q = matmul_nt(a, bb.sa_wq);
    bt.sa_k = matmul_nt(a, bb.sa_wk);
    bt.sa_v = matmul_nt(a, bb.sa_wv);
    bt.sa_out = attention_forward(bt.sa_q, bt.sa_k, bt.sa_v, {batch * kNumFaces, n, n, cfg_.heads, cfg_.head_dim()},
                                  &bt.sa_attn);
    add_inplace(h.values, matmul_nt(bt.sa_out, bb.sa_wo));

    if (!opts.bypass_adapters) h = adapter_forward(h, dirs, adapters_[i], &bt.adapter);

    a = layer_norm(h.values, &bt.ln_cross);
    bt.ca_q = matmul_nt(a, bb.ca_wq);
    bt.ca_k = matmul_nt(cond_rows, bb.ca_wk);
    bt.ca_v = matmul_nt(cond_rows, bb.ca_wv);
    bt.ca_out = attention_forward(bt.ca_q, bt.ca_k, bt.ca_v,
                                  {batch * kNumFaces, n, ct, cfg_.heads, cfg_.head_dim()}, &bt.ca_attn);
    add_inplace(h.values, matmul_nt(bt.ca_out, bb.ca_wo));

    a = layer_norm(h.values, &bt.ln_mlp);
    bt.mlp_pre = matmul_nt(a, bb.mlp_w1);
    add_row_bias(bt.mlp_pre, bb.mlp_b1);
    bt.mlp_act = bt.mlp_pre;
    for (double& v : bt.mlp_act.data()) v = gelu(v);
    Matrix m = matmul_nt(bt.mlp_act, bb.mlp_w2);
    add_row_bias(m, bb.mlp_b2);
    add_inplace(h.values, m);
  }

  LayerNormCache lnf;
  Matrix out_rows = matmul_nt(layer_norm(h.values, trace ? &trace->ln_final : &lnf), final_w_);
  add_row_bias(out_rows, final_b_);
  return unpatchify(out_rows, batch, cfg_.face_size, cfg_.latent_channels, cfg_.patch);
}

std::vector<AdapterGrads> JointFaceNetwork::backward(const std::vector<Cubemap>& dout,
                                                     const NetworkTrace& trace) const {
  if (static_cast<int>(dout.size()) != trace.batch) throw DomainError("network backward: batch mismatch");
  std::vector<AdapterGrads> grads;
  for (const auto& a : adapters_) grads.push_back(AdapterGrads::zeros_like(a));

  const Matrix d_rows = patchify(dout, cfg_.patch);
  Matrix dh = layer_norm_backward(matmul_nn(d_rows, final_w_), trace.ln_final);

  for (std::size_t ii = blocks_.size(); ii-- > 0;) {
    const BackboneBlock& bb = blocks_[ii];
    const BlockTrace& bt = trace.blocks[ii];

    // MLP
    Matrix d_act = matmul_nn(dh, bb.mlp_w2);
    auto pre = bt.mlp_pre.data();
    auto da = d_act.data();
    for (std::size_t k = 0; k < da.size(); ++k) da[k] *= gelu_grad(pre[k]);
    add_inplace(dh, layer_norm_backward(matmul_nn(d_act, bb.mlp_w1), bt.ln_mlp));

    // Cross-attention; keys and values come from frozen condition tokens.
    const AttentionGrads ca = attention_backward(matmul_nn(dh, bb.ca_wo), bt.ca_q, bt.ca_k, bt.ca_v, bt.ca_attn);
    add_inplace(dh, layer_norm_backward(matmul_nn(ca.dq, bb.ca_wq), bt.ln_cross));

    if (!trace.adapters_bypassed) dh = adapter_backward(dh, trace.dirs, adapters_[ii], bt.adapter, grads[ii]);

    const AttentionGrads sa = attention_backward(matmul_nn(dh, bb.sa_wo), bt.sa_q, bt.sa_k, bt.sa_v, bt.sa_attn);
    Matrix d_a = matmul_nn(sa.dq, bb.sa_wq);
    add_inplace(d_a, matmul_nn(sa.dk, bb.sa_wk));
    add_inplace(d_a, matmul_nn(sa.dv, bb.sa_wv));
    add_inplace(dh, layer_norm_backward(d_a, bt.ln_self));
  }
  return grads;
}

std::vector<NamedTensor> JointFaceNetwork::parameters() {
  std::vector<NamedTensor> out = {
      {"patch_embed.weight", &patch_w_, false}, {"patch_embed.bias", &patch_b_, false},
      {"time_embed.weight", &time_w_, false},   {"time_embed.bias", &time_b_, false},
      {"cond_embed.table", &cond_table_, false},
  };
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    BackboneBlock& b = blocks_[i];
    AdapterParams& a = adapters_[i];
    out.insert(out.end(), {
                              {p + "self_attn.wq", &b.sa_wq, false},
                              {p + "self_attn.wk", &b.sa_wk, false},
                              {p + "self_attn.wv", &b.sa_wv, false},
                              {p + "self_attn.wo", &b.sa_wo, false},
                              {p + "adapter.ln_scale", &a.ln_scale, true},
                              {p + "adapter.ln_shift", &a.ln_shift, true},
                              {p + "adapter.wq", &a.wq, true},
                              {p + "adapter.wk", &a.wk, true},
                              {p + "adapter.wv", &a.wv, true},
                              {p + "adapter.wo", &a.wo, true},
                              {p + "cross_attn.wq", &b.ca_wq, false},
                              {p + "cross_attn.wk", &b.ca_wk, false},
                              {p + "cross_attn.wv", &b.ca_wv, false},
                              {p + "cross_attn.wo", &b.ca_wo, false},
                              {p + "mlp.w1", &b.mlp_w1, false},
                              {p + "mlp.b1", &b.mlp_b1, false},
                              {p + "mlp.w2", &b.mlp_w2, false},
                              {p + "mlp.b2", &b.mlp_b2, false},
                          });
  }
  out.insert(out.end(), {{"final.weight", &final_w_, false}, {"final.bias", &final_b_, false}});
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> JointFaceNetwork::parameters() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (const NamedTensor& t : const_cast<JointFaceNetwork*>(this)->parameters()) out.emplace_back(t.name, t.value);
  return out;
}

}  // namespace pano
