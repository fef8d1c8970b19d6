#include "tgfnet/synth/dataset.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tgfnet/rng.hpp"

namespace tgfnet::synth {
namespace {

using nlohmann::json;

json degradation_to_json(const Degradation& d) {
  return json{{"kind", degradation_name(d.kind)},
              {"cloud", {d.cloud.row, d.cloud.col, d.cloud.height, d.cloud.width}},
              {"attenuation", d.attenuation},
              {"speckle_seed", d.speckle_seed},
              {"noise_seed", d.noise_seed}};
}

Degradation degradation_from_json(const json& j) {
  Degradation d;
  d.kind = parse_degradation(j.at("kind").get<std::string>());
  const auto rect = j.at("cloud").get<std::array<std::size_t, 4>>();
  d.cloud = CloudRect{rect[0], rect[1], rect[2], rect[3]};
  d.attenuation = j.at("attenuation").get<double>();
  d.speckle_seed = j.at("speckle_seed").get<std::uint64_t>();
  d.noise_seed = j.at("noise_seed").get<std::uint64_t>();
  return d;
}

json sample_to_json(const SynthSample& s) {
  return json{{"scene_id", s.scene_id},
              {"split", split_name(s.split)},
              {"optical", s.optical},
              {"sar", s.sar},
              {"question", s.question},
              {"question_text", s.question_text},
              {"type", question_type_name(s.type)},
              {"answer_id", s.answer_id},
              {"degradation", degradation_to_json(s.degradation)}};
}

SynthSample sample_from_json(const json& j) {
  SynthSample s;
  s.scene_id = j.at("scene_id").get<std::uint64_t>();
  s.split = parse_split(j.at("split").get<std::string>());
  s.optical = j.at("optical").get<std::vector<double>>();
  s.sar = j.at("sar").get<std::vector<double>>();
  s.question = j.at("question").get<std::vector<std::int32_t>>();
  s.question_text = j.at("question_text").get<std::string>();
  s.type = parse_question_type(j.at("type").get<std::string>());
  s.answer_id = j.at("answer_id").get<std::size_t>();
  if (s.answer_id >= kAnswerCount) throw std::out_of_range("answer_id outside answer vocabulary");
  s.degradation = degradation_from_json(j.at("degradation"));
  return s;
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

Split split_of(std::uint64_t scene_id) {
  std::array<Split, 5> slots{Split::kTrain, Split::kTrain, Split::kTrain, Split::kVal, Split::kTest};
  Rng rng(splitmix64(scene_id / 5));
  for (std::size_t i = slots.size() - 1; i > 0; --i) {
    std::swap(slots[i], slots[rng.uniform_int(i + 1)]);
  }
  return slots[scene_id % 5];
}

GeneratedScene generate_scene_record(std::uint64_t master_seed, std::uint64_t id, const SynthConfig& cfg) {
  Rng rng(mix_seed(master_seed, id));
  GeneratedScene g;
  g.scene = generate_scene(rng, cfg, id);
  g.degradation = sample_degradation(rng, cfg);
  g.questions = generate_questions(g.scene, g.degradation, question_templates(), rng.next_u64(),
                                   cfg.question_budget);
  return g;
}

std::vector<SynthSample> generate_dataset(std::uint64_t master_seed, std::size_t scenes, const SynthConfig& cfg) {
  cfg.validate();
  std::vector<SynthSample> out;
  for (std::uint64_t id = 0; id < scenes; ++id) {
    const GeneratedScene g = generate_scene_record(master_seed, id, cfg);
    const auto optical = render_optical(g.scene, g.degradation, cfg);
    const auto sar = render_sar(g.scene, g.degradation, cfg);
    for (const auto& q : g.questions) {
      SynthSample s;
      s.scene_id = id;
      s.split = split_of(id);
      s.optical = optical;
      s.sar = sar;
      s.question = q.tokens;
      s.question_text = q.text;
      s.type = q.type;
      s.answer_id = q.answer_id;
      s.degradation = g.degradation;
      out.push_back(std::move(s));
    }
  }
  return out;
}

void write_samples(std::ostream& out, const std::vector<SynthSample>& samples) {
  for (const auto& s : samples) out << sample_to_json(s).dump() << '\n';
}

std::vector<SynthSample> read_samples(std::istream& in, const std::string& source) {
  std::vector<SynthSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw DatasetError(source + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
    }
  }
  return out;
}

void write_dataset(const std::vector<SynthSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot open dataset for writing: " + path.string());
  write_samples(out, samples);
  out.flush();
  if (!out) throw DatasetError("failed writing dataset: " + path.string());
}

std::vector<SynthSample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open dataset: " + path.string());
  return read_samples(in, path.string());
}

DatasetStats compute_stats(const std::vector<SynthSample>& samples) {
  DatasetStats st;
  std::set<std::uint64_t> seen;
  const auto& answers = answer_vocabulary();
  for (const auto& s : samples) {
    ++st.questions;
    ++st.per_split[std::string(split_name(s.split))];
    const std::string type(question_type_name(s.type));
    ++st.per_type[type];
    ++st.answers_per_type[type][std::string(answers.at(s.answer_id))];
    if (seen.insert(s.scene_id).second) ++st.per_degradation[std::string(degradation_name(s.degradation.kind))];
  }
  st.scenes = seen.size();
  return st;
}

std::string format_stats(const DatasetStats& st) {
  std::ostringstream os;
  if (st.questions == 0) return {};
  os << "scenes\t" << st.scenes << '\n';
  os << "questions\t" << st.questions << '\n';
  for (const auto& [k, v] : st.per_split) os << "split\t" << k << '\t' << v << '\n';
  for (const auto& [k, v] : st.per_degradation) os << "degradation\t" << k << '\t' << v << '\n';
  for (const auto& [k, v] : st.per_type) os << "type\t" << k << '\t' << v << '\n';
  for (const auto& [type, hist] : st.answers_per_type) {
    for (const auto& [answer, n] : hist) os << "answer\t" << type << '\t' << answer << '\t' << n << '\n';
  }
  return os.str();
}

void write_split_files(const std::vector<SynthSample>& samples, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::array<std::vector<SynthSample>, 3> parts;
  for (const auto& s : samples) parts[static_cast<std::size_t>(s.split)].push_back(s);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    write_dataset(parts[i], dir / (std::string(split_name(static_cast<Split>(i))) + ".jsonl"));
  }
  std::ofstream stats(dir / "stats.txt", std::ios::binary | std::ios::trunc);
  if (!stats) throw DatasetError("cannot write stats report in " + dir.string());
  stats << format_stats(compute_stats(samples));
}

}  // namespace tgfnet::synth
