#include "pano/flow.hpp"

#include <cmath>
#include <string>

#include "pano/rng.hpp"
#include "pano/synth.hpp"

namespace pano {

namespace {

void require_same(const Image& a, const Image& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels())
    throw DomainError(std::string(what) + ": shape mismatch");
}

std::array<Matrix*, 6> adapter_tensors(AdapterParams& p) {
  return {&p.ln_scale, &p.ln_shift, &p.wq, &p.wk, &p.wv, &p.wo};
}

std::array<const Matrix*, 6> grad_tensors(const AdapterGrads& g) {
  return {&g.ln_scale, &g.ln_shift, &g.wq, &g.wk, &g.wv, &g.wo};
}

}  // namespace

Image noisify(const Image& f, const Image& eps, double t) {
  require_same(f, eps, "noisify");
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("noisify: t must lie in [0,1]");
  Image out(f.width(), f.height(), f.channels());
  auto fd = f.data();
  auto ed = eps.data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = (1.0 - t) * fd[i] + t * ed[i];
  return out;
}

Cubemap noisify(const Cubemap& f, const Cubemap& eps, double t) {
  Cubemap out(f.face_size(), f.channels());
  for (int i = 0; i < kNumFaces; ++i) out.face(i) = noisify(f.face(i), eps.face(i), t);
  return out;
}

Image target_velocity(const Image& f, const Image& eps) {
  require_same(f, eps, "target_velocity");
  Image out(f.width(), f.height(), f.channels());
  auto fd = f.data();
  auto ed = eps.data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = ed[i] - fd[i];
  return out;
}

int sample_switch(std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  return coin(rng) ? 1 : 0;
}

Cubemap standard_normal_cubemap(int face_size, int channels, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Cubemap c(face_size, channels);
  for (int i = 0; i < kNumFaces; ++i)
    for (double& v : c.face(i).data()) v = normal(rng);
  return c;
}

FlowSample make_flow_sample(Cubemap clean, Cubemap noise, double t, int gamma, int cond) {
  if (gamma != 0 && gamma != 1) throw DomainError("make_flow_sample: gamma must be 0 or 1");
  FlowSample s;
  s.noisy = noisify(clean, noise, t);
  if (gamma == 1) s.noisy.face(FaceId::Front) = clean.face(FaceId::Front);
  s.clean = std::move(clean);
  s.noise = std::move(noise);
  s.t = t;
  s.gamma = gamma;
  s.cond = cond;
  for (int i = 0; i < kNumFaces; ++i) s.supervised[static_cast<std::size_t>(i)] = i >= gamma;
  return s;
}

double flow_loss(const std::vector<Cubemap>& pred, const FlowBatch& batch) {
  if (pred.size() != batch.size() || batch.empty()) throw DomainError("flow_loss: batch size mismatch");
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const FlowSample& s = batch[b];
    double sample = 0.0;
    for (int i = s.gamma; i < kNumFaces; ++i) {
      const Image target = target_velocity(s.clean.face(i), s.noise.face(i));
      require_same(pred[b].face(i), target, "flow_loss");
      auto pd = pred[b].face(i).data();
      auto td = target.data();
      double se = 0.0;
      for (std::size_t k = 0; k < td.size(); ++k) se += (pd[k] - td[k]) * (pd[k] - td[k]);
      sample += se / static_cast<double>(td.size());
    }
    total += sample / (kNumFaces - s.gamma);
  }
  return total / static_cast<double>(batch.size());
}

std::vector<Cubemap> flow_loss_grad(const std::vector<Cubemap>& pred, const FlowBatch& batch) {
  if (pred.size() != batch.size() || batch.empty()) throw DomainError("flow_loss_grad: batch size mismatch");
  std::vector<Cubemap> grad;
  grad.reserve(pred.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const FlowSample& s = batch[b];
    Cubemap g(pred[b].face_size(), pred[b].channels());
    for (int i = s.gamma; i < kNumFaces; ++i) {
      const Image target = target_velocity(s.clean.face(i), s.noise.face(i));
      auto pd = pred[b].face(i).data();
      auto td = target.data();
      auto gd = g.face(i).data();
      const double scale =
          2.0 / (static_cast<double>(td.size()) * (kNumFaces - s.gamma) * static_cast<double>(batch.size()));
      for (std::size_t k = 0; k < td.size(); ++k) gd[k] = scale * (pd[k] - td[k]);
    }
    grad.push_back(std::move(g));
  }
  return grad;
}

void TrainConfig::validate() const {
  if (steps < 0) throw ConfigError("train steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a finite value >= 0");
  if (dataset_scenes < 1) throw ConfigError("dataset_scenes must be >= 1");
}

AdapterTrainer::AdapterTrainer(JointFaceNetwork& net, const TrainConfig& cfg) : net_(net), cfg_(cfg) {
  cfg_.validate();
  for (AdapterParams& a : net_.adapters()) {
    std::array<Matrix, 6> zm, zv;
    const auto ts = adapter_tensors(a);
    for (std::size_t k = 0; k < ts.size(); ++k) {
      zm[k] = Matrix(ts[k]->rows(), ts[k]->cols());
      zv[k] = Matrix(ts[k]->rows(), ts[k]->cols());
    }
    m_.push_back(std::move(zm));
    v_.push_back(std::move(zv));
  }
}

double AdapterTrainer::step(const FlowBatch& batch) {
  std::vector<Cubemap> x;
  std::vector<double> t;
  std::vector<int> cond;
  for (const FlowSample& s : batch) {
    x.push_back(s.noisy);
    t.push_back(s.t);
    cond.push_back(s.cond);
  }
  NetworkTrace trace;
  const std::vector<Cubemap> pred = net_.forward(x, t, cond, {}, &trace);
  const double loss = flow_loss(pred, batch);
  if (!std::isfinite(loss)) throw TrainingError("non-finite loss at step " + std::to_string(step_count_));
  const std::vector<AdapterGrads> grads = net_.backward(flow_loss_grad(pred, batch), trace);
  for (const AdapterGrads& g : grads)
    for (const Matrix* m : grad_tensors(g))
      for (double v : m->data())
        if (!std::isfinite(v)) throw TrainingError("non-finite gradient at step " + std::to_string(step_count_));

  ++step_count_;
  const double lr = cfg_.lr;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const auto params = adapter_tensors(net_.adapters()[i]);
    const auto gs = grad_tensors(grads[i]);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto p = params[k]->data();
      auto g = gs[k]->data();
      if (cfg_.optimizer == OptimizerKind::Sgd) {
        for (std::size_t e = 0; e < p.size(); ++e) p[e] -= lr * g[e];
      } else {
        auto m = m_[i][k].data();
        auto v = v_[i][k].data();
        const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
        for (std::size_t e = 0; e < p.size(); ++e) {
          m[e] = b1 * m[e] + (1.0 - b1) * g[e];
          v[e] = b2 * v[e] + (1.0 - b2) * g[e] * g[e];
          p[e] -= lr * (m[e] / c1) / (std::sqrt(v[e] / c2) + cfg_.adam_eps);
        }
      }
    }
  }
  return loss;
}

std::vector<ToyScene> make_toy_dataset(int n_scenes, int face_size, std::uint64_t seed, int vocab, int channels) {
  if (n_scenes < 0) throw DomainError("make_toy_dataset: n_scenes must be >= 0");
  if (vocab < 1 || vocab > kSmoothBasisSize) throw DomainError("make_toy_dataset: vocab must be in [1, 8]");
  std::vector<ToyScene> scenes(static_cast<std::size_t>(n_scenes));
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n_scenes; ++i) {
    const SmoothSceneSpec spec = random_smooth_scene(seed, static_cast<int>(Stream::Scene) + i, i % vocab);
    scenes[static_cast<std::size_t>(i)] = {render_cubemap(smooth_scene_function(spec, channels), face_size, channels),
                                           spec.dominant};
  }
  return scenes;
}

Cubemap encode_latent(const Cubemap& image) {
  Cubemap out = image;
  for (int i = 0; i < kNumFaces; ++i)
    for (double& v : out.face(i).data()) v = 2.0 * v - 1.0;
  return out;
}

Cubemap decode_latent(const Cubemap& latent) {
  Cubemap out = latent;
  for (int i = 0; i < kNumFaces; ++i)
    for (double& v : out.face(i).data()) v = 0.5 * (v + 1.0);
  return out;
}

BatchSampler::BatchSampler(const std::vector<ToyScene>& scenes, std::uint64_t seed)
    : scenes_(scenes),
      index_rng_(make_stream(seed, Stream::SceneIndex)),
      time_rng_(make_stream(seed, Stream::Timestep)),
      switch_rng_(make_stream(seed, Stream::Switch)),
      noise_rng_(make_stream(seed, Stream::Noise)) {
  if (scenes.empty()) throw DomainError("BatchSampler: empty dataset");
  for (const ToyScene& s : scenes) latents_.push_back(encode_latent(s.cube));
}

FlowBatch BatchSampler::next(int batch_size) {
  std::uniform_int_distribution<std::size_t> pick(0, scenes_.size() - 1);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  FlowBatch batch;
  for (int b = 0; b < batch_size; ++b) {
    const std::size_t idx = pick(index_rng_);
    const double t = uniform(time_rng_);
    const int gamma = sample_switch(switch_rng_);
    const Cubemap& clean = latents_[idx];
    Cubemap noise = standard_normal_cubemap(clean.face_size(), clean.channels(), noise_rng_);
    batch.push_back(make_flow_sample(clean, std::move(noise), t, gamma, scenes_[idx].cond));
  }
  return batch;
}

TrainReport train_adapters(JointFaceNetwork& net, const std::vector<ToyScene>& scenes, const TrainConfig& cfg,
                           const std::function<void(int, double)>& on_step) {
  cfg.validate();
  AdapterTrainer trainer(net, cfg);
  BatchSampler sampler(scenes, cfg.seed);
  TrainReport report;
  report.losses.reserve(static_cast<std::size_t>(cfg.steps));
  for (int s = 0; s < cfg.steps; ++s) {
    const double loss = trainer.step(sampler.next(cfg.batch_size));
    report.losses.push_back(loss);
    if (on_step) on_step(s, loss);
  }
  return report;
}

Cubemap NetworkVelocity::velocity(const Cubemap& x, double t, int cond) const {
  const std::vector<Cubemap> batch{x};
  const double ts[1] = {t};
  const int cs[1] = {cond};
  return net_.forward(batch, ts, cs).front();
}

void SamplerConfig::validate() const {
  if (steps < 1) throw ConfigError("sampler steps must be >= 1");
}

Cubemap euler_sample(const VelocityModel& model, int cond, const SamplerConfig& cfg, int face_size, int channels,
                     const Image* view_face) {
  cfg.validate();
  const bool v2p = cfg.mode == GenerationMode::V2P;
  if (v2p && !view_face) throw UsageError("V2P sampling requires a view face");
  if (v2p && (view_face->width() != face_size || view_face->height() != face_size ||
              view_face->channels() != channels))
    throw DomainError("euler_sample: view face does not match the latent shape");

  auto rng = make_stream(cfg.seed, Stream::SampleNoise);
  Cubemap x = standard_normal_cubemap(face_size, channels, rng);
  const double dt = 1.0 / cfg.steps;
  for (int k = 0; k < cfg.steps; ++k) {
    const double t = 1.0 - static_cast<double>(k) / cfg.steps;
    if (v2p) x.face(FaceId::Front) = *view_face;
    const Cubemap v = model.velocity(x, t, cond);
    for (int i = v2p ? 1 : 0; i < kNumFaces; ++i) {
      auto xd = x.face(i).data();
      auto vd = v.face(i).data();
      for (std::size_t e = 0; e < xd.size(); ++e) xd[e] -= dt * vd[e];
    }
  }
  if (v2p) x.face(FaceId::Front) = *view_face;
  return x;
}

}  // namespace pano
