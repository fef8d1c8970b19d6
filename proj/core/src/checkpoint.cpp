#include "tgfnet/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace tgfnet {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), b.size());
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(b.data(), b.size());
}

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw CheckpointError(std::string("truncated checkpoint while reading ") + what);
  }
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  std::array<unsigned char, 4> b{};
  read_exact(in, reinterpret_cast<char*>(b.data()), b.size(), what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  read_exact(in, reinterpret_cast<char*>(b.data()), b.size(), "values");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParameterStore& params) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  for (const auto& [name, tensor] : params.entries()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : tensor.values()) put_f64(out, v);
  }
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, params);
  out.flush();
  if (!out) throw CheckpointError("failed writing checkpoint: " + path.string());
}

std::map<std::string, Tensor> read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  read_exact(in, magic.data(), magic.size(), "magic");
  if (std::memcmp(magic.data(), kCheckpointMagic, magic.size()) != 0) {
    throw CheckpointError("not a checkpoint: bad magic");
  }
  const std::uint32_t version = get_u32(in, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  std::map<std::string, Tensor> out;
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::uint32_t name_len = get_u32(in, "name length");
    std::string name(name_len, '\0');
    read_exact(in, name.data(), name_len, "name");
    const std::uint32_t rank = get_u32(in, "rank");
    if (rank == 0) throw CheckpointError("parameter " + name + " has rank 0");
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(get_u32(in, "dims"));
    std::vector<double> values(numel(shape));
    for (double& v : values) v = get_f64(in);
    if (!out.emplace(name, Tensor(std::move(shape), std::move(values))).second) {
      throw CheckpointError("duplicate parameter in checkpoint: " + name);
    }
  }
  return out;
}

std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  return read_checkpoint(in);
}

void assign_parameters(const std::map<std::string, Tensor>& values, ParameterStore& params) {
  for (const auto& [name, target] : params.entries()) {
    auto it = values.find(name);
    if (it == values.end()) throw CheckpointError("checkpoint is missing parameter " + name);
    if (it->second.shape() != target.shape()) {
      throw CheckpointError("parameter " + name + " has shape " + to_string(it->second.shape()) +
                            " in checkpoint but " + to_string(target.shape()) + " in model");
    }
  }
  for (const auto& [name, value] : values) {
    if (!params.contains(name)) throw CheckpointError("checkpoint has unexpected parameter " + name);
  }
  for (const auto& [name, target] : params.entries()) {
    Tensor handle = target;
    const auto src = values.at(name).values();
    std::copy(src.begin(), src.end(), handle.mutable_values().begin());
  }
}

void load_checkpoint(const std::filesystem::path& path, ParameterStore& params) {
  assign_parameters(read_checkpoint(path), params);
}

}  // namespace tgfnet
