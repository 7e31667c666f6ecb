// Acceptance checks: one PASS/FAIL line per criterion, exit status 0 only if
// every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "helpers.hpp"
#include "pano/blend.hpp"
#include "pano/config.hpp"
#include "pano/flow.hpp"
#include "pano/network.hpp"
#include "pano/rng.hpp"
#include "pano/seams.hpp"
#include "pano/synth.hpp"

using namespace pano;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome edge_topology() {
  constexpr int kSamples = 64;
  double worst = 0.0;
  auto boundary = [](FaceId f, Side s, double p) {
    switch (s) {
      case Side::N: return dir_from_face_coords(f, p, -1.0);
      case Side::S: return dir_from_face_coords(f, p, 1.0);
      case Side::W: return dir_from_face_coords(f, -1.0, p);
      case Side::E: return dir_from_face_coords(f, 1.0, p);
    }
    return Direction3{};
  };
  for (const EdgeSpec& e : edge_table())
    for (int k = 0; k < kSamples; ++k) {
      const double s = -1.0 + 2.0 * k / (kSamples - 1);
      const Direction3 a = boundary(e.left_face, e.left_side, s);
      const Direction3 b = boundary(e.right_face, e.right_side, e.reversed ? -s : s);
      worst = std::max({worst, std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
    }
  return {edge_table().size() == 12 && worst <= 1e-6,
          fmt("12 edges x %d samples, max direction error %.2e (tol 1e-6)", kSamples, worst)};
}

Outcome projection_fidelity() {
  const auto fn = analytic_test_function(3);
  const ErpImage ref = render_erp(fn, 1024, 512, 3);
  const ErpImage back = cubemap_to_erp(erp_to_cubemap(ref, 256), 1024, 512);
  const int skip = static_cast<int>(std::lround(0.05 * 512));
  const double psnr = testing::psnr(ref.image(), back.image(), skip, 512 - skip);
  return {psnr >= 35.0, fmt("ERP 1024x512 -> cube 256 -> ERP PSNR %.2f dB (need >= 35, rows %d..%d)", psnr, skip,
                            511 - skip)};
}

Outcome poisson_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_plane = [&](int n) {
    Plane p(n, n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) p(x, y) = u(rng);
    return p;
  };
  BlendConfig cfg;
  cfg.iterations = 2000;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Plane g = random_plane(8);
    const PoissonProblem p{laplacian5(g), random_plane(8)};
    const Plane gs = gauss_seidel_solve(p, g, cfg);
    const Plane exact = dense_poisson_oracle(p);
    for (std::size_t k = 0; k < gs.data().size(); ++k) worst = std::max(worst, std::abs(gs.data()[k] - exact.data()[k]));
  }
  double fixed = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Plane g = random_plane(8);
    const Plane f = gauss_seidel_solve({laplacian5(g), g}, g, cfg);
    for (std::size_t k = 0; k < f.data().size(); ++k) fixed = std::max(fixed, std::abs(f.data()[k] - g.data()[k]));
  }
  return {worst <= 1e-4 && fixed <= 1e-9,
          fmt("GS vs dense max-abs %.2e (tol 1e-4); consistent-input drift %.2e (tol 1e-9)", worst, fixed)};
}

Cubemap smooth_scene_cubemap(std::uint64_t seed, int face_size) {
  const SmoothSceneSpec spec = random_smooth_scene(seed, static_cast<int>(Stream::Scene), static_cast<int>(seed % 8));
  return render_cubemap(smooth_scene_function(spec, 3), face_size, 3);
}

Outcome seam_ordering() {
  constexpr int kFace = 512;
  bool ok = true;
  double noise_ssim = 0, noise_sobel = 0, gt_ssim = 0, gt_sobel = 0;
  double worst_noise_ssim = -1, worst_noise_sobel = 1e9, worst_gt_ssim = 2, worst_gt_sobel = -1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SeamReport n = seam_report(testing::noise_cubemap(kFace, 3, 100 + seed));
    const SeamReport g = seam_report(smooth_scene_cubemap(seed, kFace));
    ok = ok && n.seam_ssim < 0.05 && n.seam_sobel > 100.0 && g.seam_ssim > 0.8 && g.seam_sobel < 15.0 &&
         n.seam_ssim < g.seam_ssim && n.seam_sobel > g.seam_sobel;
    noise_ssim += n.seam_ssim / 10, noise_sobel += n.seam_sobel / 10;
    gt_ssim += g.seam_ssim / 10, gt_sobel += g.seam_sobel / 10;
    worst_noise_ssim = std::max(worst_noise_ssim, n.seam_ssim);
    worst_noise_sobel = std::min(worst_noise_sobel, n.seam_sobel);
    worst_gt_ssim = std::min(worst_gt_ssim, g.seam_ssim);
    worst_gt_sobel = std::max(worst_gt_sobel, g.seam_sobel);
  }
  return {ok, fmt("10 seeds @512: noise SSIM %.4f (max %.4f < 0.05) Sobel %.2f (min %.2f > 100); "
                  "smooth SSIM %.4f (min %.4f > 0.8) Sobel %.2f (max %.2f < 15)",
                  noise_ssim, worst_noise_ssim, noise_sobel, worst_noise_sobel, gt_ssim, worst_gt_ssim, gt_sobel,
                  worst_gt_sobel)};
}

Outcome blend_efficacy() {
  Cubemap c = render_cubemap(analytic_test_function(3), 512, 3);
  for (FaceId f : {FaceId::Front, FaceId::Right, FaceId::Up})
    for (double& v : c.face(f).data()) v += 0.04;
  const SeamReport before = seam_report(c);
  const Cubemap out = cross_face_blend(c);
  const SeamReport after = seam_report(out);
  double band = 0.0;
  for (const EdgeSpec& e : edge_table())
    band = std::max(band, mean_abs_diff(extract_edge_band(out, e, 1, BandSide::Left),
                                        extract_edge_band(out, e, 1, BandSide::Right)));
  const double reduction = 1.0 - after.seam_sobel / before.seam_sobel;
  return {reduction >= 0.5 && after.seam_ssim > before.seam_ssim && band <= 0.01,
          fmt("Sobel %.2f -> %.2f (-%.1f%%, need >= 50%%); SSIM %.4f -> %.4f; worst 1-px band gap %.2e (tol 0.01)",
              before.seam_sobel, after.seam_sobel, 100 * reduction, before.seam_ssim, after.seam_ssim, band)};
}

std::vector<Cubemap> random_latents(int batch, int face_size, int channels, std::uint64_t seed) {
  std::vector<Cubemap> x;
  for (int b = 0; b < batch; ++b) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(b));
    x.push_back(standard_normal_cubemap(face_size, channels, rng));
  }
  return x;
}

Outcome zero_init_identity(const ModelConfig& mc) {
  const JointFaceNetwork net(mc);
  const auto x = random_latents(2, mc.face_size, mc.latent_channels, 1);
  const std::vector<double> t = {0.2, 0.8};
  const std::vector<int> cond = {0, mc.vocab - 1};
  const auto full = net.forward(x, t, cond);
  ForwardOptions bypass;
  bypass.bypass_adapters = true;
  const auto frozen = net.forward(x, t, cond, bypass);
  double worst = 0.0;
  for (std::size_t b = 0; b < 2; ++b)
    for (int f = 0; f < kNumFaces; ++f) worst = std::max(worst, max_abs_diff(full[b].face(f), frozen[b].face(f)));
  return {worst <= 1e-6, fmt("fresh adapters vs frozen backbone max-abs %.2e (tol 1e-6)", worst)};
}

Outcome gradient_check() {
  ModelConfig cfg;
  cfg.depth = 2;
  cfg.channels = 12;
  cfg.heads = 2;
  cfg.face_size = 4;
  cfg.patch = 2;
  cfg.vocab = 3;
  JointFaceNetwork net(cfg);
  std::mt19937_64 rng(77);
  for (AdapterParams& a : net.adapters()) {
    fill_normal(a.wo, rng, 0.3);
    fill_normal(a.ln_shift, rng, 0.2);
  }
  const auto x = random_latents(2, cfg.face_size, cfg.latent_channels, 2);
  const auto w = random_latents(2, cfg.face_size, cfg.latent_channels, 3);
  const std::vector<double> t = {0.3, 0.6};
  const std::vector<int> cond = {1, 2};
  auto loss = [&] {
    const auto out = net.forward(x, t, cond);
    double s = 0.0;
    for (std::size_t b = 0; b < 2; ++b)
      for (int f = 0; f < kNumFaces; ++f)
        for (std::size_t k = 0; k < out[b].face(f).data().size(); ++k)
          s += out[b].face(f).data()[k] * w[b].face(f).data()[k];
    return s;
  };
  NetworkTrace trace;
  net.forward(x, t, cond, {}, &trace);
  const auto grads = net.backward(w, trace);
  const double h = 1e-4;
  double worst = 0.0;
  int tensors = 0;
  for (std::size_t blk = 0; blk < grads.size(); ++blk) {
    AdapterParams& p = net.adapters()[blk];
    const AdapterGrads& g = grads[blk];
    const std::vector<std::pair<Matrix*, const Matrix*>> pairs = {
        {&p.ln_scale, &g.ln_scale}, {&p.ln_shift, &g.ln_shift}, {&p.wq, &g.wq},
        {&p.wk, &g.wk},             {&p.wv, &g.wv},             {&p.wo, &g.wo}};
    for (const auto& [param, analytic] : pairs) {
      double diff = 0.0, na = 0.0, nn = 0.0;
      for (std::size_t i = 0; i < param->size(); ++i) {
        const double keep = param->data()[i];
        param->data()[i] = keep + h;
        const double lp = loss();
        param->data()[i] = keep - h;
        const double lm = loss();
        param->data()[i] = keep;
        const double num = (lp - lm) / (2 * h);
        diff += std::pow(num - analytic->data()[i], 2);
        na += std::pow(analytic->data()[i], 2);
        nn += num * num;
      }
      worst = std::max(worst, std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-300}));
      ++tensors;
    }
  }
  return {worst < 1e-4, fmt("%d adapter tensors, N=4 C=12 H=2 depth=2, worst relative error %.2e (tol 1e-4)", tensors,
                            worst)};
}

class OracleVelocity : public VelocityModel {
 public:
  OracleVelocity(Cubemap clean, std::uint64_t seed) : clean_(std::move(clean)) {
    auto rng = make_stream(seed, Stream::SampleNoise);
    eps_ = standard_normal_cubemap(clean_.face_size(), clean_.channels(), rng);
  }
  Cubemap velocity(const Cubemap&, double, int) const override {
    Cubemap v(clean_.face_size(), clean_.channels());
    for (int i = 0; i < kNumFaces; ++i) v.face(i) = target_velocity(clean_.face(i), eps_.face(i));
    return v;
  }

 private:
  Cubemap clean_, eps_;
};

Outcome flow_identities() {
  const Cubemap f = encode_latent(testing::noise_cubemap(8, 3, 5));
  auto rng = make_stream(5, Stream::Noise);
  const Cubemap eps = standard_normal_cubemap(8, 3, rng);
  const bool endpoints = noisify(f, eps, 0.0) == f && noisify(f, eps, 1.0) == eps;

  const FlowBatch batch = {make_flow_sample(f, eps, 0.37, 1, 0)};
  Cubemap pred = testing::noise_cubemap(8, 3, 6);
  const double base = flow_loss({pred}, batch);
  bool invariant = true;
  for (double junk : {-1e9, 0.0, 3.5, std::numeric_limits<double>::max()}) {
    for (double& v : pred.face(0).data()) v = junk;
    invariant = invariant && flow_loss({pred}, batch) == base;
  }

  SamplerConfig cfg;
  cfg.steps = 1;
  cfg.seed = 11;
  const Cubemap x = euler_sample(OracleVelocity(f, 11), 0, cfg, 8, 3);
  double err = 0.0;
  for (int i = 0; i < kNumFaces; ++i) err = std::max(err, max_abs_diff(x.face(i), f.face(i)));
  return {endpoints && invariant && err <= 1e-6,
          fmt("noisify endpoints exact: %s; face-0 loss invariance (gamma=1) exact: %s; one-step oracle error %.2e "
              "(tol 1e-6)",
              endpoints ? "yes" : "no", invariant ? "yes" : "no", err)};
}

double eval_loss(const JointFaceNetwork& net, const std::vector<FlowBatch>& batches) {
  double total = 0.0;
  for (const FlowBatch& b : batches) {
    std::vector<Cubemap> x;
    std::vector<double> t;
    std::vector<int> c;
    for (const FlowSample& s : b) {
      x.push_back(s.noisy);
      t.push_back(s.t);
      c.push_back(s.cond);
    }
    total += flow_loss(net.forward(x, t, c), b);
  }
  return total / static_cast<double>(batches.size());
}

std::vector<std::pair<std::string, Matrix>> frozen_tensors(JointFaceNetwork& net) {
  std::vector<std::pair<std::string, Matrix>> out;
  for (const NamedTensor& t : net.parameters())
    if (!t.trainable) out.emplace_back(t.name, *t.value);
  return out;
}

Outcome toy_training(const RunConfig& rc) {
  const ModelConfig& mc = rc.model;
  JointFaceNetwork untrained(mc);
  JointFaceNetwork net(mc);
  const auto frozen_before = frozen_tensors(net);
  const auto scenes = make_toy_dataset(rc.train.dataset_scenes, mc.face_size, rc.train.seed, mc.vocab,
                                       mc.latent_channels);

  // Held-out evaluation batches from a sampler seed training never uses.
  BatchSampler eval_sampler(scenes, rc.train.seed + 1000003);
  std::vector<FlowBatch> eval;
  for (int i = 0; i < 16; ++i) eval.push_back(eval_sampler.next(rc.train.batch_size));
  const double initial = eval_loss(untrained, eval);

  const TrainReport report = train_adapters(net, scenes, rc.train, [](int step, double loss) {
    if ((step + 1) % 250 == 0) std::fprintf(stderr, "  [9] step %d loss %.4f\n", step + 1, loss);
  });
  const double final_loss = eval_loss(net, eval);
  const double ratio = final_loss / initial;
  const std::size_t n = report.losses.size();
  const std::size_t w = std::min<std::size_t>(100, n);
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < w; ++i) head += report.losses[i] / static_cast<double>(w);
  for (std::size_t i = n - w; i < n; ++i) tail += report.losses[i] / static_cast<double>(w);

  const bool frozen_ok = frozen_tensors(net) == frozen_before;

  // V2P: face 0 of the sample is the given view, bit for bit.
  const Image view = encode_latent(scenes[3].cube).face(FaceId::Front);
  SamplerConfig v2p;
  v2p.mode = GenerationMode::V2P;
  v2p.steps = rc.sample_steps;
  const Cubemap vs = euler_sample(NetworkVelocity(net), scenes[3].cond, v2p, mc.face_size, mc.latent_channels, &view);
  const bool pinned = vs.face(FaceId::Front) == view;

  // T2P seam quality, trained vs untrained, same noise seed and condition.
  int wins = 0;
  double sobel_trained = 0.0, sobel_untrained = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SamplerConfig t2p;
    t2p.steps = rc.sample_steps;
    t2p.seed = seed;
    const int cond = static_cast<int>(seed % static_cast<std::uint64_t>(mc.vocab));
    const double a =
        seam_sobel(decode_latent(euler_sample(NetworkVelocity(net), cond, t2p, mc.face_size, mc.latent_channels)))
            .seam_sobel;
    const double b = seam_sobel(decode_latent(
                                    euler_sample(NetworkVelocity(untrained), cond, t2p, mc.face_size, mc.latent_channels)))
                         .seam_sobel;
    wins += a < b;
    sobel_trained += a / 10;
    sobel_untrained += b / 10;
  }

  return {ratio <= 0.2 && frozen_ok && pinned && wins >= 9,
          fmt("%d steps: held-out loss %.4f -> %.4f (%.1f%% of initial, need <= 20%%; running mean first/last %zu "
              "steps %.4f/%.4f); frozen unchanged: %s; V2P face 0 pinned: %s; T2P Seam-Sobel trained %.2f vs "
              "untrained %.2f, lower on %d/10 seeds (need >= 9)",
              rc.train.steps, initial, final_loss, 100 * ratio, w, head, tail, frozen_ok ? "yes" : "no",
              pinned ? "yes" : "no", sobel_trained, sobel_untrained, wins)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> bytes for every regular file under root.
std::vector<std::pair<std::string, std::string>> tree(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  if (fs::is_regular_file(root)) return {{root.filename().string(), slurp(root)}};
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), root).string(), slurp(e.path()));
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism(const std::string& cli, const fs::path& work) {
  if (cli.empty()) return {false, "no --cli binary given"};
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string tiny = (work / "tiny.cfg").string();
  std::ofstream(tiny) << "depth = 2\nchannels = 12\nheads = 2\nface_size = 8\nvocab = 4\ndataset_scenes = 8\n"
                         "optimizer = adam\nlr = 0.01\n";

  struct Cmd {
    std::string name, args, output;
  };
  auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  const fs::path in = work / "inputs";
  // Shared inputs, produced once.
  const std::string setup = q(cli) + " make-dataset --kind analytic --face-size 64 --erp-width 256 --out " + q(in) +
                            " > /dev/null && " + q(cli) + " toy-train --config " + q(tiny) + " --steps 5 --out " +
                            q(in / "model.ckpt") + " 2> /dev/null && " + q(cli) + " make-dataset --config " + q(tiny) +
                            " --scenes 1 --face-size 8 --bit-depth 8 --out " + q(in / "view") + " > /dev/null";
  if (std::system(setup.c_str()) != 0) return {false, "setup commands failed"};

  const std::vector<Cmd> cmds = {
      {"make-dataset", "make-dataset --scenes 3 --face-size 16 --erp-width 64 --seed 5 --out {out}", "ds"},
      {"erp2cube", "erp2cube --input " + q(in / "analytic_erp.png") + " --face-size 48 --output {out}", "cube"},
      {"cube2erp", "cube2erp --input " + q(in / "analytic") + " --width 192 --output {out}", "erp.png"},
      {"blend", "blend --input " + q(in / "analytic") + " --iterations 50 --output {out}", "blend"},
      {"seam-eval", "seam-eval --input " + q(in / "analytic") + " --report {out}", "report.json"},
      {"toy-train", "toy-train --config " + q(tiny) + " --steps 20 --seed 3 --out {out}", "model.ckpt"},
      {"toy-sample t2p", "toy-sample --ckpt " + q(in / "model.ckpt") + " --cond 1 --steps 10 --seed 4 --out {out}",
       "t2p"},
      {"toy-sample v2p", "toy-sample --ckpt " + q(in / "model.ckpt") + " --mode v2p --view " +
                             q(in / "view" / "scene_0000" / "front.png") + " --steps 10 --seed 4 --blend --out {out}",
       "v2p"},
  };
  std::vector<std::string> failed;
  for (const Cmd& c : cmds) {
    std::vector<std::vector<std::pair<std::string, std::string>>> runs;
    for (int r = 0; r < 2; ++r) {
      const fs::path out = work / ("run" + std::to_string(r)) / c.output;
      std::string args = c.args;
      args.replace(args.find("{out}"), 5, q(out));
      const std::string line = q(cli) + " " + args + " > /dev/null 2>&1";
      if (std::system(line.c_str()) != 0 || !fs::exists(out)) {
        runs.clear();
        break;
      }
      runs.push_back(tree(out));
    }
    if (runs.size() != 2 || runs[0].empty() || runs[0] != runs[1]) failed.push_back(c.name);
  }
  std::string detail = fmt("%zu commands run twice, byte-identical outputs", cmds.size());
  if (!failed.empty()) {
    detail = "differing or failing:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli, config_path, work = (fs::temp_directory_path() / "pano_acceptance").string();
  std::vector<int> only;
  app.add_option("--cli", cli, "pano binary, used by the determinism criterion");
  app.add_option("--config", config_path, "Run config for the toy-training criterion");
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  RunConfig rc;
  if (!config_path.empty()) rc = read_config(config_path);

  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "edge topology", 1, edge_topology},
      {2, "projection fidelity", 5, projection_fidelity},
      {3, "Poisson oracle equivalence", 10, poisson_oracle},
      {4, "seam metric ordering", 30, seam_ordering},
      {5, "cross-face blending efficacy", 60, blend_efficacy},
      {6, "zero-init identity", 1, [&] { return zero_init_identity(rc.model); }},
      {7, "adapter gradient check", 60, gradient_check},
      {8, "flow identities", 1, flow_identities},
      {9, "toy training", 900, [&] { return toy_training(rc); }},
      {10, "CLI determinism", 600, [&] { return determinism(cli, fs::path(work)); }},
  };

  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("[%s] %2d %s: %s; %.2f s (limit %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.limit_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
