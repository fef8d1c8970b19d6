#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

#include "tgfnet/params.hpp"

// Binary checkpoint layout, all integers little-endian:
//
//   "TGFN"                      4-byte magic
//   u32 version                 currently 1
//   repeated until EOF, in lexicographic name order:
//     u32 name_length, UTF-8 name bytes
//     u32 rank, u32 dims[rank]
//     f64 values[prod(dims)]    IEEE-754 little-endian
namespace tgfnet {

inline constexpr char kCheckpointMagic[4] = {'T', 'G', 'F', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_checkpoint(std::ostream& out, const ParameterStore& params);
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params);

std::map<std::string, Tensor> read_checkpoint(std::istream& in);
std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& path);

// Copies checkpoint values into `params`. The name sets and shapes must match
// exactly.
void load_checkpoint(const std::filesystem::path& path, ParameterStore& params);
void assign_parameters(const std::map<std::string, Tensor>& values, ParameterStore& params);

}  // namespace tgfnet
