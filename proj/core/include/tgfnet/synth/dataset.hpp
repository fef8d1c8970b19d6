#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgfnet/synth/questions.hpp"
#include "tgfnet/synth/scene.hpp"

namespace tgfnet::synth {

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

// Scene ids are grouped in blocks of five; a hash of the block index picks
// which three positions are train, which one is val and which one is test.
// Every complete block therefore splits exactly 3:1:1.
Split split_of(std::uint64_t scene_id);

struct SynthSample {
  std::uint64_t scene_id = 0;
  Split split = Split::kTrain;
  std::vector<double> optical;  // cells x 3
  std::vector<double> sar;      // cells
  std::vector<std::int32_t> question;
  std::string question_text;
  QuestionType type = QuestionType::kPresence;
  std::size_t answer_id = 0;
  Degradation degradation;

  bool operator==(const SynthSample&) const = default;
};

struct GeneratedScene {
  Scene scene;
  Degradation degradation;
  std::vector<QaRecord> questions;
};

// Everything about scene `id` derives from mix_seed(master_seed, id).
GeneratedScene generate_scene_record(std::uint64_t master_seed, std::uint64_t id, const SynthConfig& cfg);

// Samples for scenes 0..scenes-1, ordered by scene id then question order.
std::vector<SynthSample> generate_dataset(std::uint64_t master_seed, std::size_t scenes, const SynthConfig& cfg);

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One JSON object per line.
void write_samples(std::ostream& out, const std::vector<SynthSample>& samples);
std::vector<SynthSample> read_samples(std::istream& in, const std::string& source = "<stream>");
void write_dataset(const std::vector<SynthSample>& samples, const std::filesystem::path& path);
std::vector<SynthSample> read_dataset(const std::filesystem::path& path);

struct DatasetStats {
  std::size_t scenes = 0;
  std::size_t questions = 0;
  std::map<std::string, std::size_t> per_split;
  std::map<std::string, std::size_t> per_type;
  std::map<std::string, std::map<std::string, std::size_t>> answers_per_type;
  std::map<std::string, std::size_t> per_degradation;  // counted per scene
};

DatasetStats compute_stats(const std::vector<SynthSample>& samples);
std::string format_stats(const DatasetStats& stats);

// Writes train.jsonl, val.jsonl, test.jsonl and stats.txt into `dir`.
void write_split_files(const std::vector<SynthSample>& samples, const std::filesystem::path& dir);

}  // namespace tgfnet::synth
