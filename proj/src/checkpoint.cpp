#include "memhacl/checkpoint.hpp"

#include <array>
#include <fstream>

namespace memhacl {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'E', 'M', 'H', 'C', 'K', 'P', 'T'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::string read_string(std::istream& in) {
  const std::uint64_t len = read_u64(in);
  if (len > (1ull << 32)) throw std::runtime_error("corrupt checkpoint string");
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  return s;
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic.data(), kMagic.size());
  write_u32(out, kVersion);
  write_string(out, stage);
  write_string(out, config_json);
  write_string(out, rng_state);
  write_u64(out, epoch);
  write_u64(out, adam_step);
  write_u64(out, blocks.size());
  for (const auto& [name, tensor] : blocks) {
    write_string(out, name);
    write_u64(out, static_cast<std::uint64_t>(tensor.rows()));
    write_u64(out, static_cast<std::uint64_t>(tensor.cols()));
    out.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(sizeof(float) * tensor.size()));
  }
  if (!out) throw std::runtime_error("short write to " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint not found: " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint format version " +
                             std::to_string(version) + " unsupported (want " +
                             std::to_string(kVersion) + ")");
  }
  Checkpoint ckpt;
  ckpt.stage = read_string(in);
  ckpt.config_json = read_string(in);
  ckpt.rng_state = read_string(in);
  ckpt.epoch = read_u64(in);
  ckpt.adam_step = read_u64(in);
  const std::uint64_t count = read_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = read_string(in);
    const auto rows = static_cast<Index>(read_u64(in));
    const auto cols = static_cast<Index>(read_u64(in));
    if (!in || rows < 0 || cols < 0) {
      throw std::runtime_error("corrupt checkpoint block header in " +
                               path.string());
    }
    Matrix<float> tensor(rows, cols);
    in.read(reinterpret_cast<char*>(tensor.data()),
            static_cast<std::streamsize>(sizeof(float) * tensor.size()));
    if (!in) {
      throw std::runtime_error("truncated checkpoint payload in " +
                               path.string());
    }
    ckpt.blocks.emplace_back(std::move(name), std::move(tensor));
  }
  return ckpt;
}

const Matrix<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : blocks) {
    if (n == name) return &t;
  }
  return nullptr;
}

}  // namespace memhacl
