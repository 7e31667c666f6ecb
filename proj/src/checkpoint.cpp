#include "pano/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "pano/config.hpp"

namespace pano {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated checkpoint '" + path + "'");
  return v;
}

std::string get_string(std::ifstream& in, std::uint32_t len, const std::string& path) {
  if (len > (1u << 20)) throw IoError("corrupt checkpoint '" + path + "': oversized string");
  std::string s(len, '\0');
  if (len && !in.read(s.data(), len)) throw IoError("truncated checkpoint '" + path + "'");
  return s;
}

}  // namespace

void save_checkpoint(const JointFaceNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string cfg = model_config_text(net.config());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  const auto params = net.parameters();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, m] : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, 0);
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m->rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m->cols()));
    for (double v : m->data()) put<float>(out, static_cast<float>(v));
  }
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

JointFaceNetwork load_checkpoint(const std::filesystem::path& path) {
  const std::string p = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + p + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw IoError("'" + p + "' is not a checkpoint (bad magic)");
  const auto version = get<std::uint32_t>(in, p);
  if (version != kCheckpointVersion)
    throw IoError("checkpoint '" + p + "' has unsupported version " + std::to_string(version));
  const std::string cfg_text = get_string(in, get<std::uint32_t>(in, p), p);
  const RunConfig cfg = parse_config(cfg_text);
  JointFaceNetwork net(cfg.model);

  std::map<std::string, Matrix*> by_name;
  for (const NamedTensor& t : net.parameters()) by_name[t.name] = t.value;
  const auto count = get<std::uint32_t>(in, p);
  if (count != by_name.size())
    throw IoError("checkpoint '" + p + "' has " + std::to_string(count) + " tensors, model expects " +
                  std::to_string(by_name.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = get_string(in, get<std::uint32_t>(in, p), p);
    const auto dtype = get<std::uint32_t>(in, p);
    const auto ndim = get<std::uint32_t>(in, p);
    if (dtype != 0 || ndim != 2) throw IoError("checkpoint '" + p + "': tensor '" + name + "' has unsupported layout");
    const auto rows = get<std::uint64_t>(in, p);
    const auto cols = get<std::uint64_t>(in, p);
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw IoError("checkpoint '" + p + "': unexpected tensor '" + name + "'");
    Matrix& m = *it->second;
    if (rows != static_cast<std::uint64_t>(m.rows()) || cols != static_cast<std::uint64_t>(m.cols()))
      throw IoError("checkpoint '" + p + "': tensor '" + name + "' has the wrong shape");
    for (double& v : m.data()) v = static_cast<double>(get<float>(in, p));
    by_name.erase(it);
  }
  return net;
}

}  // namespace pano
