#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tgfnet/adam.hpp"
#include "tgfnet/model.hpp"
#include "tgfnet/synth/scene.hpp"

namespace tgfnet {

struct TrainOptions {
  // Desk-scale learning rate and batch size; the large-backbone setting is
  // lr 1e-5 with batch 100.
  nn::AdamOptions adam{1e-3, 0.9, 0.999, 1e-8};
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::size_t max_steps = 0;     // 0: no step limit
  std::size_t train_subset = 0;  // 0: whole train split, else its first n samples
  std::size_t eval_every = 1;    // epochs between metric rows
  bool eval_train = true;        // evaluate train OA for each metric row
  double target_train_oa = 0.0;  // stop at the first metric row reaching it (0: off)
  std::uint64_t seed = 1;
};

struct RunConfig {
  ModelConfig model;
  TrainOptions train;
  synth::SynthConfig synth;
  std::size_t scenes = 1000;
  std::uint64_t data_seed = 7;
  std::string data = "data";
  std::string out = "run";

  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  std::string name;
  std::string doc;
  std::string default_value;
};

// Every accepted key with its default, in file order.
std::vector<ConfigKey> config_keys();

// Flat "key = value" lines; '#' starts a comment. Unknown keys, duplicate
// keys and unparsable values throw ConfigError. Values not mentioned keep
// the fields already in `base`.
RunConfig parse_config(std::string_view text, RunConfig base = {}, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

// Full effective configuration; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& cfg);
// Documented defaults, one commented block per key.
std::string defaults_text();

}  // namespace tgfnet
