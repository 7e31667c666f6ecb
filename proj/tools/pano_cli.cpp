#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pano/blend.hpp"
#include "pano/checkpoint.hpp"
#include "pano/config.hpp"
#include "pano/flow.hpp"
#include "pano/geometry.hpp"
#include "pano/imageio.hpp"
#include "pano/rng.hpp"
#include "pano/seams.hpp"
#include "pano/synth.hpp"
#include "pano/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kNumeric = 3 };

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pano::IoError("cannot write " + path.string());
  out << text;
  if (!out) throw pano::IoError("write failed: " + path.string());
}

int bit_depth_or_throw(int bits) {
  if (bits != 8 && bits != 16) throw pano::UsageError("--bit-depth must be 8 or 16");
  return bits;
}

json params_json(const pano::SeamParams& p) {
  return {{"band_frac", p.band_frac},
          {"value_scale", p.value_scale == pano::ValueScale::Byte ? "byte" : "unit"},
          {"ssim_c1", p.ssim_c1},
          {"ssim_c2", p.ssim_c2}};
}

json report_json(const pano::SeamReport& r) {
  json edges = json::array();
  for (int e = 0; e < pano::kNumEdges; ++e)
    edges.push_back({{"index", e},
                     {"ssim", r.per_edge_ssim[static_cast<std::size_t>(e)]},
                     {"sobel", r.per_edge_sobel[static_cast<std::size_t>(e)]}});
  return {{"seam_ssim", r.seam_ssim}, {"seam_sobel", r.seam_sobel}, {"edges", edges}, {"params", params_json(r.params)}};
}

struct Erp2CubeArgs {
  std::string input, output;
  int face_size = 256;
  int bits = 8;
};

struct Cube2ErpArgs {
  std::string input, output;
  int width = 1024;
  int bits = 8;
};

struct BlendArgs {
  std::string input, output;
  int iterations = 200;
  std::optional<double> residual_stop;
  int bits = 8;
};

struct SeamArgs {
  std::string input, report;
  double band_frac = 0.01;
  std::string scale = "byte";
  int face_size = 0;
};

struct TrainArgs {
  std::string config, out, log;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
};

struct SampleArgs {
  std::string ckpt, mode = "t2p", view, out;
  int cond = 0;
  int steps = 50;
  std::uint64_t seed = 7;
  bool blend = false;
  int blend_iterations = 200;
  int bits = 8;
};

struct DatasetArgs {
  std::string out, kind = "toy", config;
  int scenes = 16;
  int face_size = 64;
  std::uint64_t seed = 7;
  int erp_width = 0;
  int bits = 16;
};

int run_erp2cube(const Erp2CubeArgs& a) {
  const pano::Image img = pano::load_image(a.input);
  if (img.width() != 2 * img.height())
    throw pano::DomainError("ERP input must be 2:1, got " + std::to_string(img.width()) + "x" +
                            std::to_string(img.height()));
  const pano::Cubemap cube = pano::erp_to_cubemap(pano::ErpImage(img), a.face_size);
  pano::save_cubemap(cube, a.output, bit_depth_or_throw(a.bits));
  return kOk;
}

int run_cube2erp(const Cube2ErpArgs& a) {
  const pano::Cubemap cube = pano::load_cubemap(a.input);
  if (a.width < 2 || a.width % 2 != 0) throw pano::UsageError("--width must be an even number >= 2");
  const pano::ErpImage erp = pano::cubemap_to_erp(cube, a.width, a.width / 2);
  pano::save_image(erp.image(), a.output, bit_depth_or_throw(a.bits));
  return kOk;
}

int run_blend(const BlendArgs& a) {
  pano::BlendConfig cfg;
  cfg.iterations = a.iterations;
  cfg.residual_stop = a.residual_stop;
  cfg.validate();
  const pano::Cubemap cube = pano::load_cubemap(a.input);
  pano::save_cubemap(pano::cross_face_blend(cube, cfg), a.output, bit_depth_or_throw(a.bits));
  return kOk;
}

int run_seam_eval(const SeamArgs& a) {
  pano::SeamParams params;
  params.band_frac = a.band_frac;
  if (a.scale == "byte")
    params.value_scale = pano::ValueScale::Byte;
  else if (a.scale == "unit")
    params.value_scale = pano::ValueScale::Unit;
  else
    throw pano::UsageError("--scale must be byte or unit");
  params.validate();

  pano::Cubemap cube;
  if (fs::is_directory(a.input)) {
    cube = pano::load_cubemap(a.input);
  } else {
    const pano::Image img = pano::load_image(a.input);
    if (img.width() != 2 * img.height()) throw pano::DomainError("ERP input must be 2:1");
    const int face = a.face_size > 0 ? a.face_size : img.width() / 4;
    cube = pano::erp_to_cubemap(pano::ErpImage(img), face);
  }
  const std::string text = report_json(pano::seam_report(cube, params)).dump(2) + "\n";
  if (!a.report.empty()) write_text(a.report, text);
  std::cout << text;
  return kOk;
}

int run_toy_train(const TrainArgs& a) {
  pano::RunConfig cfg = a.config.empty() ? pano::RunConfig{} : pano::read_config(a.config);
  if (a.steps) cfg.train.steps = *a.steps;
  if (a.seed) cfg.train.seed = *a.seed;
  cfg.validate();

  pano::JointFaceNetwork net(cfg.model);
  const auto scenes =
      pano::make_toy_dataset(cfg.train.dataset_scenes, cfg.model.face_size, cfg.train.seed, cfg.model.vocab,
                             cfg.model.latent_channels);
  const pano::TrainReport report = pano::train_adapters(net, scenes, cfg.train, [&](int step, double loss) {
    if ((step + 1) % 100 == 0 || step == 0) std::fprintf(stderr, "step %d loss %.6f\n", step + 1, loss);
  });
  pano::save_checkpoint(net, a.out);
  if (!a.log.empty()) write_text(a.log, json{{"losses", report.losses}}.dump() + "\n");
  return kOk;
}

int run_toy_sample(const SampleArgs& a) {
  pano::SamplerConfig cfg;
  cfg.steps = a.steps;
  cfg.seed = a.seed;
  if (a.mode == "t2p")
    cfg.mode = pano::GenerationMode::T2P;
  else if (a.mode == "v2p")
    cfg.mode = pano::GenerationMode::V2P;
  else
    throw pano::UsageError("--mode must be t2p or v2p");
  if (cfg.mode == pano::GenerationMode::V2P && a.view.empty()) throw pano::UsageError("--mode v2p requires --view");
  if (cfg.mode == pano::GenerationMode::T2P && !a.view.empty()) throw pano::UsageError("--view is only valid with --mode v2p");
  cfg.validate();

  const pano::JointFaceNetwork net = pano::load_checkpoint(a.ckpt);
  const pano::ModelConfig& mc = net.config();
  if (a.cond < 0 || a.cond >= mc.vocab)
    throw pano::DomainError("--cond must be in [0, " + std::to_string(mc.vocab) + ")");

  std::optional<pano::Image> view;
  if (!a.view.empty()) {
    const pano::Image img = pano::load_image(a.view);
    if (img.width() != mc.face_size || img.height() != mc.face_size || img.channels() != mc.latent_channels)
      throw pano::DomainError("--view must be a " + std::to_string(mc.face_size) + "x" + std::to_string(mc.face_size) +
                              " image with " + std::to_string(mc.latent_channels) + " channels");
    pano::Cubemap tmp(mc.face_size, mc.latent_channels);
    tmp.face(pano::FaceId::Front) = img;
    view = pano::encode_latent(tmp).face(pano::FaceId::Front);
  }

  const pano::NetworkVelocity model(net);
  const pano::Cubemap latent =
      pano::euler_sample(model, a.cond, cfg, mc.face_size, mc.latent_channels, view ? &*view : nullptr);
  pano::Cubemap image = pano::decode_latent(latent);
  if (view) image.face(pano::FaceId::Front) = pano::load_image(a.view);
  if (a.blend) {
    pano::BlendConfig bc;
    bc.iterations = a.blend_iterations;
    image = pano::cross_face_blend(image, bc);
    // The given view is an input, not a generated face; keep it exact.
    if (view) image.face(pano::FaceId::Front) = pano::load_image(a.view);
  }
  pano::save_cubemap(image, a.out, bit_depth_or_throw(a.bits));
  return kOk;
}

int run_make_dataset(const DatasetArgs& a) {
  if (a.kind != "toy" && a.kind != "analytic" && a.kind != "constant")
    throw pano::UsageError("--kind must be toy, analytic or constant");
  if (a.erp_width < 0 || a.erp_width % 2 != 0) throw pano::UsageError("--erp-width must be even");
  const int bits = bit_depth_or_throw(a.bits);
  const fs::path root(a.out);
  fs::create_directories(root);

  pano::DatasetManifest manifest;
  manifest.seed = a.seed;
  manifest.generator_version = pano::kDatasetGenerator;

  auto emit = [&](const std::string& id, const pano::SphereFunction& fn, int channels, int cond) {
    pano::ManifestEntry entry;
    entry.scene_id = id;
    entry.cond_id = cond;
    pano::save_cubemap(pano::render_cubemap(fn, a.face_size, channels), root / id, bits);
    entry.cubemap_dir = id;
    if (a.erp_width > 0) {
      pano::save_image(pano::render_erp(fn, a.erp_width, a.erp_width / 2, channels).image(), root / (id + "_erp.png"),
                       bits);
      entry.erp_path = id + "_erp.png";
    }
    manifest.entries.push_back(entry);
  };

  if (a.kind == "analytic") {
    emit("analytic", pano::analytic_test_function(3), 3, 0);
  } else if (a.kind == "constant") {
    emit("constant", [](const pano::Direction3&, double* out) { out[0] = out[1] = out[2] = 0.5; }, 3, 0);
  } else {
    if (a.scenes < 1) throw pano::UsageError("--scenes must be >= 1");
    const pano::RunConfig cfg = a.config.empty() ? pano::RunConfig{} : pano::read_config(a.config);
    const int vocab = cfg.model.vocab;
    const int channels = cfg.model.latent_channels;
    if (vocab < 1 || vocab > pano::kSmoothBasisSize) throw pano::ConfigError("vocab must be in [1, 8]");
    for (int i = 0; i < a.scenes; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "scene_%04d", i);
      const pano::SmoothSceneSpec spec =
          pano::random_smooth_scene(a.seed, static_cast<int>(pano::Stream::Scene) + i, i % vocab);
      emit(id, pano::smooth_scene_function(spec, channels), channels, spec.dominant);
    }
  }
  pano::write_manifest(manifest, root / "manifest.json");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cubemap panorama toolkit: projection, cross-face blending, seam metrics, toy joint-face flow model"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print version information");

  Erp2CubeArgs e2c;
  auto* erp2cube = app.add_subcommand("erp2cube", "Project an equirectangular PNG to six cubemap faces");
  erp2cube->add_option("--input", e2c.input, "ERP image (2:1 PNG)")->required();
  erp2cube->add_option("--output", e2c.output, "Output cubemap directory")->required();
  erp2cube->add_option("--face-size", e2c.face_size, "Face resolution")->check(CLI::Range(1, 1 << 14));
  erp2cube->add_option("--bit-depth", e2c.bits, "PNG bit depth (8 or 16)");

  Cube2ErpArgs c2e;
  auto* cube2erp = app.add_subcommand("cube2erp", "Resample a cubemap directory to an equirectangular PNG");
  cube2erp->add_option("--input", c2e.input, "Cubemap directory")->required();
  cube2erp->add_option("--output", c2e.output, "Output ERP PNG")->required();
  cube2erp->add_option("--width", c2e.width, "ERP width (height is width/2)");
  cube2erp->add_option("--bit-depth", c2e.bits, "PNG bit depth (8 or 16)");

  BlendArgs bl;
  auto* blend = app.add_subcommand("blend", "Cross-face Poisson blending");
  blend->add_option("--input", bl.input, "Cubemap directory")->required();
  blend->add_option("--output", bl.output, "Output cubemap directory")->required();
  blend->add_option("--iterations", bl.iterations, "Gauss-Seidel sweeps per face");
  blend->add_option("--residual-stop", bl.residual_stop, "Stop once the max-abs residual is below this value");
  blend->add_option("--bit-depth", bl.bits, "PNG bit depth (8 or 16)");

  SeamArgs se;
  auto* seam = app.add_subcommand("seam-eval", "Seam-SSIM and Seam-Sobel over the 12 cube edges");
  seam->add_option("--input", se.input, "Cubemap directory or ERP PNG")->required();
  seam->add_option("--band-frac", se.band_frac, "SSIM band width as a fraction of the face size");
  seam->add_option("--scale", se.scale, "Sobel value scale: byte or unit");
  seam->add_option("--face-size", se.face_size, "Face size when the input is an ERP (default width/4)");
  seam->add_option("--report", se.report, "Also write the JSON report to this file");

  TrainArgs tr;
  auto* train = app.add_subcommand("toy-train", "Train the joint-face adapters on the synthetic dataset");
  train->add_option("--config", tr.config, "key = value config file");
  train->add_option("--out", tr.out, "Checkpoint path")->required();
  train->add_option("--steps", tr.steps, "Override the configured step count");
  train->add_option("--seed", tr.seed, "Override the configured seed");
  train->add_option("--log", tr.log, "Write per-step losses as JSON");

  SampleArgs sa;
  auto* sample = app.add_subcommand("toy-sample", "Sample a latent cubemap with the Euler sampler");
  sample->add_option("--ckpt", sa.ckpt, "Checkpoint path")->required();
  sample->add_option("--mode", sa.mode, "t2p or v2p");
  sample->add_option("--cond", sa.cond, "Condition id");
  sample->add_option("--view", sa.view, "Front face PNG for v2p");
  sample->add_option("--steps", sa.steps, "Euler steps");
  sample->add_option("--seed", sa.seed, "Noise seed");
  sample->add_option("--out", sa.out, "Output cubemap directory")->required();
  sample->add_flag("--blend", sa.blend, "Apply cross-face blending before writing");
  sample->add_option("--blend-iterations", sa.blend_iterations, "Sweeps used with --blend");
  sample->add_option("--bit-depth", sa.bits, "PNG bit depth (8 or 16)");

  DatasetArgs ds;
  auto* dataset = app.add_subcommand("make-dataset", "Write synthetic cubemaps and a JSON manifest");
  dataset->add_option("--out", ds.out, "Output directory")->required();
  dataset->add_option("--kind", ds.kind, "toy (smooth random scenes), analytic or constant (one test panorama)");
  dataset->add_option("--scenes", ds.scenes, "Number of toy scenes");
  dataset->add_option("--face-size", ds.face_size, "Face resolution");
  dataset->add_option("--seed", ds.seed, "Dataset seed");
  dataset->add_option("--erp-width", ds.erp_width, "Also write an ERP of this width per scene");
  dataset->add_option("--config", ds.config, "Config file supplying vocab and channel count");
  dataset->add_option("--bit-depth", ds.bits, "PNG bit depth (8 or 16)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (show_version) {
      std::cout << "pano " << pano::kVersion << "\ncheckpoint format " << pano::kCheckpointVersion
                << "\ndataset generator " << pano::kDatasetGenerator << "\n";
      return kOk;
    }
    if (erp2cube->parsed()) return run_erp2cube(e2c);
    if (cube2erp->parsed()) return run_cube2erp(c2e);
    if (blend->parsed()) return run_blend(bl);
    if (seam->parsed()) return run_seam_eval(se);
    if (train->parsed()) return run_toy_train(tr);
    if (sample->parsed()) return run_toy_sample(sa);
    if (dataset->parsed()) return run_make_dataset(ds);
    std::cerr << app.help();
    return kUsage;
  } catch (const pano::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const pano::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const pano::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kNumeric;
  } catch (const pano::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kNumeric;
  } catch (const pano::TrainingError& e) {
    std::cerr << "training failed: " << e.what() << "\n";
    return kNumeric;
  }
}
