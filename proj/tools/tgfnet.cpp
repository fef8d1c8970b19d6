#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "tgfnet/ablation.hpp"
#include "tgfnet/checkpoint.hpp"
#include "tgfnet/export.hpp"
#include "tgfnet/run_config.hpp"
#include "tgfnet/training.hpp"

namespace fs = std::filesystem;
using namespace tgfnet;

namespace {

struct Flags {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> scenes;
  std::string checkpoint;
  std::string report;
  std::vector<std::string> variants;
  std::size_t seeds = 5;
  std::size_t sample_id = 0;
};

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_config(path);
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<synth::SynthSample> read_split(const fs::path& dir, synth::Split split) {
  return synth::read_dataset(dir / (std::string(synth::split_name(split)) + ".jsonl"));
}

int cmd_gen(const Flags& f) {
  RunConfig cfg = load_run_config(f.config);
  if (f.seed) cfg.data_seed = *f.seed;
  if (f.scenes) cfg.scenes = *f.scenes;
  if (!f.out.empty()) cfg.data = f.out;
  const fs::path dir = cfg.data;
  fs::create_directories(dir);
  const auto samples = synth::generate_dataset(cfg.data_seed, cfg.scenes, cfg.synth);
  synth::write_split_files(samples, dir);
  write_text(dir / "config.txt", to_text(cfg));
  std::cerr << "wrote " << samples.size() << " questions over " << cfg.scenes << " scenes to " << dir.string()
            << '\n';
  return 0;
}

int cmd_train(const Flags& f) {
  RunConfig cfg = load_run_config(f.config);
  if (f.seed) cfg.train.seed = *f.seed;
  if (!f.data.empty()) cfg.data = f.data;
  if (!f.out.empty()) cfg.out = f.out;
  const auto train_set = read_split(cfg.data, synth::Split::kTrain);
  const auto val_set = read_split(cfg.data, synth::Split::kVal);
  if (train_set.empty()) throw std::runtime_error("no training samples in " + cfg.data);

  const fs::path out = cfg.out;
  fs::create_directories(out);
  write_text(out / "config.txt", to_text(cfg));
  std::ofstream metrics(out / "metrics.tsv", std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot write " + (out / "metrics.tsv").string());
  metrics << metrics_header() << '\n';

  TgfNet model(cfg.model, cfg.train.seed);
  const TrainResult r = train(model, train_set, val_set, cfg.train, [&](const MetricsRow& row) {
    metrics << format_metrics(row) << '\n';
    metrics.flush();
    std::cerr << "epoch " << row.epoch << " step " << row.step << " loss " << row.train_loss << " val_oa "
              << row.val_oa << '\n';
  });
  save_checkpoint(out / "model.ckpt", model.params());
  std::cerr << "trained " << r.steps << " steps; checkpoint " << (out / "model.ckpt").string() << '\n';
  return 0;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << "samples\t" << r.count << '\n';
  os << "OA\t" << format_double(r.oa) << '\n';
  os << "AA\t" << format_double(r.aa) << '\n';
  for (const auto& [type, acc] : r.per_type) {
    os << type << '\t' << format_double(acc) << '\t' << r.per_type_count.at(type) << '\n';
  }
  return os.str();
}

TgfNet load_model(const Flags& f) {
  const fs::path ckpt = f.checkpoint;
  const std::string config = f.config.empty() ? (ckpt.parent_path() / "config.txt").string() : f.config;
  const RunConfig cfg = load_run_config(config);
  TgfNet model(cfg.model, cfg.train.seed);
  load_checkpoint(ckpt, model.params());
  return model;
}

int cmd_eval(const Flags& f) {
  const TgfNet model = load_model(f);
  const auto samples = synth::read_dataset(f.data);
  const EvalReport r = evaluate(model, samples);
  const std::string text = format_report(r);
  std::cout << text;
  if (!f.report.empty()) write_text(f.report, text);
  return 0;
}

int cmd_ablate(const Flags& f) {
  RunConfig cfg = load_run_config(f.config);
  if (!f.data.empty()) cfg.data = f.data;
  std::vector<Variant> variants;
  for (const auto& v : f.variants) variants.push_back(parse_variant(v));
  const std::uint64_t base = f.seed.value_or(cfg.train.seed);
  const auto train_set = read_split(cfg.data, synth::Split::kTrain);
  const auto test_set = read_split(cfg.data, synth::Split::kTest);
  const auto cells = run_ablation(cfg, variants, f.seeds, base, train_set, test_set, [](const AblationCell& c) {
    std::cerr << variant_name(c.variant) << " seed " << c.seed << " OA " << c.oa << " AA " << c.aa << " ("
              << c.wall_seconds << " s)\n";
  });
  const fs::path out = f.out.empty() ? fs::path(cfg.out) / "ablation.tsv" : fs::path(f.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_text(out, format_ablation_table(cells));
  return 0;
}

int cmd_export(const Flags& f) {
  const TgfNet model = load_model(f);
  const auto samples = synth::read_dataset(f.data);
  if (f.sample_id >= samples.size()) {
    throw std::out_of_range("sample " + std::to_string(f.sample_id) + " not in " + f.data + " (" +
                            std::to_string(samples.size()) + " samples)");
  }
  const Batch batch = make_batch(std::span(samples).subspan(f.sample_id, 1), model.config());
  const auto files = export_attention(model, batch, f.out);
  if (files.empty()) std::cerr << "variant " << variant_name(model.config().variant) << " has no routing or gates\n";
  for (const auto& file : files) std::cerr << file.path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tgfnet: optical-SAR visual question answering"};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--config", f.config, "run config file");
  gen->add_option("--seed", f.seed, "dataset master seed");
  gen->add_option("--scenes", f.scenes, "number of scenes");
  gen->add_option("--out", f.out, "output directory");

  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", f.config, "run config file");
  tr->add_option("--data", f.data, "dataset directory");
  tr->add_option("--out", f.out, "output directory");
  tr->add_option("--seed", f.seed, "model and shuffling seed");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--checkpoint", f.checkpoint, "checkpoint file")->required();
  ev->add_option("--data", f.data, "dataset file (.jsonl)")->required();
  ev->add_option("--report", f.report, "also write the report here");
  ev->add_option("--config", f.config, "run config (default: config.txt beside the checkpoint)");

  auto* ab = app.add_subcommand("ablate", "train and compare variants over seeds");
  ab->add_option("--variant", f.variants, "variant (repeatable)")->required();
  ab->add_option("--config", f.config, "run config file");
  ab->add_option("--data", f.data, "dataset directory");
  ab->add_option("--seeds", f.seeds, "seeds per variant")->check(CLI::PositiveNumber);
  ab->add_option("--seed", f.seed, "first seed (default: config seed)");
  ab->add_option("--out", f.out, "table file (default: <out>/ablation.tsv)");

  auto* ex = app.add_subcommand("export-attention", "write routing scores and gates for one sample");
  ex->add_option("--checkpoint", f.checkpoint, "checkpoint file")->required();
  ex->add_option("--data", f.data, "dataset file (.jsonl)")->required();
  ex->add_option("--sample-id", f.sample_id, "zero-based sample index in the file")->required();
  ex->add_option("--out", f.out, "output directory")->required();
  ex->add_option("--config", f.config, "run config (default: config.txt beside the checkpoint)");

  auto* defaults = app.add_subcommand("defaults", "print every config key with its default");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen(f);
    if (*tr) return cmd_train(f);
    if (*ev) return cmd_eval(f);
    if (*ab) return cmd_ablate(f);
    if (*ex) return cmd_export(f);
    if (*defaults) {
      std::cout << defaults_text();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "tgfnet: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
