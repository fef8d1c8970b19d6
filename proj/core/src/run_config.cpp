#include "tgfnet/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace tgfnet {
namespace {

struct KeySpec {
  const char* name;
  const char* doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

template <typename T>
KeySpec size_key(const char* name, const char* doc, T RunConfig::*group, std::size_t T::*field) {
  return {name, doc, [=](const RunConfig& c) { return std::to_string((c.*group).*field); },
          [=](RunConfig& c, std::string_view v) { (c.*group).*field = parse_uint(v); }};
}

template <typename T>
KeySpec real_key(const char* name, const char* doc, T RunConfig::*group, double T::*field) {
  return {name, doc, [=](const RunConfig& c) { return fmt_double((c.*group).*field); },
          [=](RunConfig& c, std::string_view v) { (c.*group).*field = parse_double(v); }};
}

KeySpec lambda_key(const char* name, const char* doc, std::size_t i) {
  return {name, doc, [=](const RunConfig& c) { return fmt_double(c.model.lambdas[i]); },
          [=](RunConfig& c, std::string_view v) { c.model.lambdas[i] = parse_double(v); }};
}

KeySpec adam_key(const char* name, const char* doc, double nn::AdamOptions::*field) {
  return {name, doc, [=](const RunConfig& c) { return fmt_double(c.train.adam.*field); },
          [=](RunConfig& c, std::string_view v) { c.train.adam.*field = parse_double(v); }};
}

const std::vector<KeySpec>& specs() {
  using M = ModelConfig;
  using T = TrainOptions;
  using S = synth::SynthConfig;
  static const std::vector<KeySpec> table{
      {"variant", "architecture: exp1 exp2 exp3 exp4 full add concat xformer opt-only sar-only",
       [](const RunConfig& c) { return std::string(variant_name(c.model.variant)); },
       [](RunConfig& c, std::string_view v) { c.model.variant = parse_variant(v); }},
      {"expert_input", "features fed to the optical and SAR experts: enhanced or raw",
       [](const RunConfig& c) { return std::string(expert_input_name(c.model.expert_input)); },
       [](RunConfig& c, std::string_view v) { c.model.expert_input = parse_expert_input(v); }},
      size_key("question_len", "padded question length N", &RunConfig::model, &M::question_len),
      {"grid_side", "scene grid side G; the model sees M = G*G patches",
       [](const RunConfig& c) { return std::to_string(c.model.grid_side); },
       [](RunConfig& c, std::string_view v) { c.model.grid_side = c.synth.grid_side = parse_uint(v); }},
      size_key("region_height", "region height in patches", &RunConfig::model, &M::region_height),
      size_key("region_width", "region width in patches; P = region_height * region_width", &RunConfig::model,
               &M::region_width),
      size_key("top_k", "key regions selected per routing block", &RunConfig::model, &M::top_k),
      size_key("rqaf_candidates", "candidate patches per modality in quality-aware fusion", &RunConfig::model,
               &M::rqaf_candidates),
      size_key("dim", "feature width D", &RunConfig::model, &M::dim),
      size_key("heads", "attention heads", &RunConfig::model, &M::heads),
      size_key("rqaf_heads", "heads in quality-aware fusion", &RunConfig::model, &M::rqaf_heads),
      size_key("classes", "answer classes C", &RunConfig::model, &M::classes),
      size_key("vocab_size", "question token table rows", &RunConfig::model, &M::vocab_size),
      size_key("mlp_hidden", "hidden width of block MLPs and decoder feed-forward", &RunConfig::model,
               &M::mlp_hidden),
      size_key("classifier_hidden", "hidden width of expert classifiers", &RunConfig::model,
               &M::classifier_hidden),
      lambda_key("lambda1", "loss weight of the optical expert", 0),
      lambda_key("lambda2", "loss weight of the SAR expert", 1),
      lambda_key("lambda3", "loss weight of the fused expert", 2),
      lambda_key("lambda4", "loss weight of the gated prediction", 3),
      adam_key("lr", "Adam learning rate", &nn::AdamOptions::lr),
      adam_key("beta1", "Adam first-moment decay", &nn::AdamOptions::beta1),
      adam_key("beta2", "Adam second-moment decay", &nn::AdamOptions::beta2),
      adam_key("adam_eps", "Adam denominator epsilon", &nn::AdamOptions::eps),
      size_key("batch_size", "training mini-batch size", &RunConfig::train, &T::batch_size),
      size_key("epochs", "passes over the training split", &RunConfig::train, &T::epochs),
      size_key("max_steps", "stop after this many optimizer steps (0: no limit)", &RunConfig::train,
               &T::max_steps),
      size_key("train_subset", "train on the first n training samples only (0: all)", &RunConfig::train,
               &T::train_subset),
      size_key("eval_every", "epochs between metric log rows", &RunConfig::train, &T::eval_every),
      {"eval_train", "evaluate the training split for each metric row",
       [](const RunConfig& c) { return std::string(c.train.eval_train ? "true" : "false"); },
       [](RunConfig& c, std::string_view v) { c.train.eval_train = parse_bool(v); }},
      real_key("target_train_oa", "stop once a metric row's train OA reaches this (0: never)", &RunConfig::train,
               &T::target_train_oa),
      {"seed", "model initialization and shuffling seed",
       [](const RunConfig& c) { return std::to_string(c.train.seed); },
       [](RunConfig& c, std::string_view v) { c.train.seed = parse_uint(v); }},
      {"scenes", "scenes generated by gen", [](const RunConfig& c) { return std::to_string(c.scenes); },
       [](RunConfig& c, std::string_view v) { c.scenes = parse_uint(v); }},
      {"data_seed", "master seed of the generated dataset",
       [](const RunConfig& c) { return std::to_string(c.data_seed); },
       [](RunConfig& c, std::string_view v) { c.data_seed = parse_uint(v); }},
      real_key("object_density", "probability that a category appears in a scene", &RunConfig::synth,
               &S::object_density),
      size_key("max_per_category", "largest object count of one category", &RunConfig::synth,
               &S::max_per_category),
      real_key("degradation_rate", "fraction of scenes with a degraded optical image", &RunConfig::synth,
               &S::degradation_rate),
      real_key("cloud_share", "fraction of degraded scenes that are cloudy (rest low-light)", &RunConfig::synth,
               &S::cloud_share),
      real_key("cloud_min_intensity", "lower bound of cloud cell intensity", &RunConfig::synth,
               &S::cloud_min_intensity),
      size_key("cloud_min_side", "smallest cloud rectangle side in cells", &RunConfig::synth, &S::cloud_min_side),
      real_key("low_light_min", "smallest low-light attenuation", &RunConfig::synth, &S::low_light_min),
      real_key("low_light_max", "largest low-light attenuation", &RunConfig::synth, &S::low_light_max),
      real_key("low_light_noise", "stddev of additive low-light noise", &RunConfig::synth, &S::low_light_noise),
      size_key("speckle_looks", "looks of the SAR speckle law", &RunConfig::synth, &S::speckle_looks),
      size_key("question_budget", "questions kept per scene", &RunConfig::synth, &S::question_budget),
      {"data", "dataset directory", [](const RunConfig& c) { return c.data; },
       [](RunConfig& c, std::string_view v) { c.data = std::string(v); }},
      {"out", "output directory", [](const RunConfig& c) { return c.out; },
       [](RunConfig& c, std::string_view v) { c.out = std::string(v); }},
  };
  return table;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::validate() const {
  try {
    model.validate();
    synth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (model.grid_side != synth.grid_side) throw ConfigError("model and generator grid sizes differ");
  if (train.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (train.eval_every == 0) throw ConfigError("eval_every must be positive");
  if (!(train.adam.lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(train.adam.beta1 >= 0.0 && train.adam.beta1 < 1.0 && train.adam.beta2 >= 0.0 && train.adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(train.adam.eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (!(train.target_train_oa >= 0.0 && train.target_train_oa <= 1.0)) {
    throw ConfigError("target_train_oa must lie in [0, 1]");
  }
  if (train.target_train_oa > 0.0 && !train.eval_train) throw ConfigError("target_train_oa needs eval_train");
}

std::vector<ConfigKey> config_keys() {
  const RunConfig defaults;
  std::vector<ConfigKey> out;
  for (const auto& s : specs()) out.push_back({s.name, s.doc, s.get(defaults)});
  return out;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& s : specs()) {
    if (key != s.name) continue;
    try {
      s.set(cfg, value);
    } catch (const std::exception& e) {
      throw ConfigError("bad value for '" + std::string(key) + "': " + e.what());
    }
    return;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, RunConfig base, const std::string& source) {
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.emplace(key).second) throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
    try {
      apply_setting(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base), path.string());
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& s : specs()) out += std::string(s.name) + " = " + s.get(cfg) + "\n";
  return out;
}

std::string defaults_text() {
  std::string out;
  for (const auto& k : config_keys()) out += "# " + k.doc + "\n" + k.name + " = " + k.default_value + "\n";
  return out;
}

}  // namespace tgfnet
