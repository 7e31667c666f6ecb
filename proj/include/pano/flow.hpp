#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "pano/geometry.hpp"
#include "pano/network.hpp"

namespace pano {

// (1 - t) f + t eps
Image noisify(const Image& f, const Image& eps, double t);
Cubemap noisify(const Cubemap& f, const Cubemap& eps, double t);

// eps - f
Image target_velocity(const Image& f, const Image& eps);

// 0 (text-to-panorama) or 1 (view-to-panorama) with equal probability.
int sample_switch(std::mt19937_64& rng);

Cubemap standard_normal_cubemap(int face_size, int channels, std::mt19937_64& rng);

struct FlowSample {
  Cubemap clean;
  Cubemap noise;
  Cubemap noisy;  // slot 0 holds the clean face when gamma == 1
  double t = 0.5;
  int gamma = 0;
  int cond = 0;
  std::array<bool, kNumFaces> supervised{};
};

using FlowBatch = std::vector<FlowSample>;

FlowSample make_flow_sample(Cubemap clean, Cubemap noise, double t, int gamma, int cond);

// Per-sample (1/(6-gamma)) sum over supervised faces of the per-face mean
// squared error, averaged over the batch.
double flow_loss(const std::vector<Cubemap>& pred, const FlowBatch& batch);
// dL/d(pred) for the same loss; zero on unsupervised faces.
std::vector<Cubemap> flow_loss_grad(const std::vector<Cubemap>& pred, const FlowBatch& batch);

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  int steps = 2000;
  int batch_size = 4;
  double lr = 0.05;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 7;
  int dataset_scenes = 256;

  void validate() const;
};

// Owns optimizer state for the adapter tensors of one network.
class AdapterTrainer {
 public:
  AdapterTrainer(JointFaceNetwork& net, const TrainConfig& cfg);

  // One step on the adapters only; returns the loss before the update.
  // Throws TrainingError (and leaves parameters untouched) on a non-finite loss.
  double step(const FlowBatch& batch);

 private:
  JointFaceNetwork& net_;
  TrainConfig cfg_;
  long step_count_ = 0;
  std::vector<std::array<Matrix, 6>> m_, v_;
};

struct ToyScene {
  Cubemap cube;  // values in [0,1]
  int cond = 0;
};

// Smooth low-frequency sphere functions rendered to cubemaps; the condition
// id is the index of each scene's dominant basis component, assigned
// round-robin (scene i -> i % vocab) so ids are balanced.
std::vector<ToyScene> make_toy_dataset(int n_scenes, int face_size, std::uint64_t seed, int vocab = 8,
                                       int channels = 3);

// Images in [0,1] map to latents in [-1,1].
Cubemap encode_latent(const Cubemap& image);
Cubemap decode_latent(const Cubemap& latent);

// Draws a training batch: scene indices, timesteps, switches and noise each
// come from their own stream.
class BatchSampler {
 public:
  BatchSampler(const std::vector<ToyScene>& scenes, std::uint64_t seed);
  FlowBatch next(int batch_size);

 private:
  const std::vector<ToyScene>& scenes_;
  std::vector<Cubemap> latents_;
  std::mt19937_64 index_rng_, time_rng_, switch_rng_, noise_rng_;
};

struct TrainReport {
  std::vector<double> losses;
};

TrainReport train_adapters(JointFaceNetwork& net, const std::vector<ToyScene>& scenes, const TrainConfig& cfg,
                           const std::function<void(int, double)>& on_step = {});

// Velocity field interface for the sampler.
class VelocityModel {
 public:
  virtual ~VelocityModel() = default;
  virtual Cubemap velocity(const Cubemap& x, double t, int cond) const = 0;
};

class NetworkVelocity : public VelocityModel {
 public:
  explicit NetworkVelocity(const JointFaceNetwork& net) : net_(net) {}
  Cubemap velocity(const Cubemap& x, double t, int cond) const override;

 private:
  const JointFaceNetwork& net_;
};

enum class GenerationMode { T2P, V2P };

struct SamplerConfig {
  int steps = 50;
  std::uint64_t seed = 7;
  GenerationMode mode = GenerationMode::T2P;

  void validate() const;
};

// Euler integration from t = 1 to t = 0 on a uniform grid. In V2P mode face
// 0 is pinned to `view_face` before every model call and in the output.
Cubemap euler_sample(const VelocityModel& model, int cond, const SamplerConfig& cfg, int face_size, int channels,
                     const Image* view_face = nullptr);

}  // namespace pano
