#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "pano/checkpoint.hpp"
#include "pano/config.hpp"
#include "pano/imageio.hpp"

using namespace pano;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("pano_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Image quantized_noise(int w, int h, int ch, int levels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> q(0, levels);
  Image img(w, h, ch);
  for (double& v : img.data()) v = q(rng) / static_cast<double>(levels);
  return img;
}

}  // namespace

TEST_CASE("quantization rule") {
  CHECK(quantize(1.0, 8) == 255);
  CHECK(quantize(0.5, 8) == 128);
  CHECK(quantize(0.0, 8) == 0);
  CHECK(quantize(-0.2, 8) == 0);
  CHECK(quantize(1.7, 8) == 255);
  CHECK(quantize(1.0, 16) == 65535);
  CHECK(quantize(0.5, 16) == 32768);
}

TEST_CASE("8-bit and 16-bit PNG round trips are exact") {
  TempDir dir("png");
  for (int ch : {1, 3}) {
    const Image img8 = quantized_noise(7, 5, ch, 255, 1);
    save_image(img8, dir.path / "a.png");
    CHECK(load_image(dir.path / "a.png") == img8);
    const Image img16 = quantized_noise(6, 4, ch, 65535, 2);
    save_image(img16, dir.path / "b.png", 16);
    const Image back = load_image(dir.path / "b.png");
    CHECK(back == img16);
  }
  Image ones(3, 3, 3, 1.0);
  save_image(ones, dir.path / "c.png", 16);
  const Image ones_back = load_image(dir.path / "c.png");
  for (double v : ones_back.data()) CHECK(v == 1.0);

  Image wild(2, 2, 1);
  wild.data()[0] = -3.0;
  wild.data()[1] = 7.0;
  wild.data()[2] = std::nan("");
  save_image(wild, dir.path / "d.png");
  const Image wild_back = load_image(dir.path / "d.png");
  for (double v : wild_back.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(save_image(ones, dir.path / "e.png", 12), IoError);
}

TEST_CASE("load errors carry the path") {
  TempDir dir("bad");
  try {
    load_image(dir.path / "nope.png");
    FAIL("expected an IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("nope.png") != std::string::npos);
  }
  std::ofstream(dir.path / "junk.png") << "not a png";
  CHECK_THROWS_AS(load_image(dir.path / "junk.png"), IoError);
}

TEST_CASE("cubemap directory round trip and validation") {
  TempDir dir("cube");
  Cubemap cube(6, 3);
  for (int i = 0; i < kNumFaces; ++i) cube.face(i) = quantized_noise(6, 6, 3, 255, 10 + static_cast<std::uint64_t>(i));
  save_cubemap(cube, dir.path / "c");
  CHECK(load_cubemap(dir.path / "c") == cube);
  const Cubemap flat(4, 3, 0.2);
  save_cubemap(flat, dir.path / "flat", 16);
  const Cubemap flat_back = load_cubemap(dir.path / "flat");
  for (int i = 0; i < kNumFaces; ++i) CHECK(max_abs_diff(flat_back.face(i), flat.face(i)) <= 0.5 / 65535.0);

  fs::remove(dir.path / "c" / "left.png");
  try {
    load_cubemap(dir.path / "c");
    FAIL("expected an IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("left") != std::string::npos);
  }
  save_image(Image(5, 5, 3), dir.path / "c" / "left.png");
  CHECK_THROWS_AS(load_cubemap(dir.path / "c"), IoError);
}

TEST_CASE("config parsing") {
  const RunConfig defaults = parse_config("");
  CHECK(defaults.model.channels == 24);
  CHECK(defaults.train.steps == 2000);
  CHECK(defaults.blend.iterations == 200);
  CHECK(defaults.sample_steps == 50);

  const RunConfig c = parse_config("# comment\ndepth = 2\nlr = 0.5  # trailing\noptimizer = adam\nvalue_scale = unit\n");
  CHECK(c.model.depth == 2);
  CHECK(c.train.lr == 0.5);
  CHECK(c.train.optimizer == OptimizerKind::Adam);
  CHECK(c.seams.value_scale == ValueScale::Unit);

  CHECK_THROWS_AS(parse_config("depth = 2\ndepth = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("steps = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("channels = 20\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("tokens_per_face = 10\n"), ConfigError);
  CHECK(parse_config("tokens_per_face = 64\n").model.tokens_per_face() == 64);
  CHECK_THROWS_AS(parse_config("lr = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just words\n"), ConfigError);
  try {
    parse_config("depth = 1\nwidth = 4\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("rope_base") != std::string::npos);
  }
  CHECK_THROWS_AS(read_config("/nonexistent/cfg.txt"), IoError);
  CHECK(parse_config(model_config_text(c.model)).model.depth == 2);
}

TEST_CASE("manifest round trip and validation") {
  TempDir dir("manifest");
  fs::create_directories(dir.path / "s0");
  save_image(Image(4, 2, 3), dir.path / "s1.png");
  DatasetManifest m;
  m.seed = 42;
  m.generator_version = "test";
  m.entries.push_back({"a", "s0", std::nullopt, 3});
  m.entries.push_back({"b", std::nullopt, "s1.png", 1});
  write_manifest(m, dir.path / "m.json");
  const DatasetManifest back = read_manifest(dir.path / "m.json");
  CHECK(back.seed == 42);
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[0].cubemap_dir == "s0");
  CHECK(back.entries[1].erp_path == "s1.png");
  CHECK(back.entries[1].cond_id == 1);

  m.entries.push_back({"a", "s0", std::nullopt, 0});
  write_manifest(m, dir.path / "dup.json");
  CHECK_THROWS_AS(read_manifest(dir.path / "dup.json"), ConfigError);
  m.entries.pop_back();
  m.entries.push_back({"c", "missing", std::nullopt, 0});
  write_manifest(m, dir.path / "missing.json");
  CHECK_THROWS_AS(read_manifest(dir.path / "missing.json"), IoError);
  std::ofstream(dir.path / "broken.json") << "{ \"seed\": ";
  CHECK_THROWS_AS(read_manifest(dir.path / "broken.json"), ConfigError);
}

TEST_CASE("checkpoint round trip") {
  TempDir dir("ckpt");
  ModelConfig cfg;
  cfg.depth = 2;
  cfg.channels = 12;
  cfg.face_size = 4;
  cfg.vocab = 3;
  cfg.init_seed = 3;
  JointFaceNetwork net(cfg);
  std::mt19937_64 rng(1);
  for (AdapterParams& a : net.adapters()) fill_normal(a.wo, rng, 0.1);
  save_checkpoint(net, dir.path / "m.ckpt");
  const JointFaceNetwork back = load_checkpoint(dir.path / "m.ckpt");
  CHECK(back.config().depth == 2);
  const auto a = net.parameters();
  const auto b = std::as_const(back).parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].first);
    for (std::size_t k = 0; k < a[i].value->size(); ++k)
      CHECK(b[i].second->data()[k] == static_cast<double>(static_cast<float>(a[i].value->data()[k])));
  }

  std::ofstream(dir.path / "bad.ckpt", std::ios::binary) << "NOTACKPT";
  CHECK_THROWS_AS(load_checkpoint(dir.path / "bad.ckpt"), IoError);
  const auto full = fs::file_size(dir.path / "m.ckpt");
  fs::copy_file(dir.path / "m.ckpt", dir.path / "cut.ckpt");
  fs::resize_file(dir.path / "cut.ckpt", full / 2);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "cut.ckpt"), IoError);
}
