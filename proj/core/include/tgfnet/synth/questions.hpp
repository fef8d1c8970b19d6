#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tgfnet/synth/scene.hpp"
#include "tgfnet/synth/vocab.hpp"

namespace tgfnet::synth {

// Question templates per type, indexed by QuestionType. Words are separated
// by single spaces; "{a}" and "{b}" are category slots.
using TemplateTable = std::array<std::vector<std::string_view>, kQuestionTypeCount>;
const TemplateTable& question_templates();

struct QaRecord {
  std::uint64_t scene_id = 0;
  QuestionType type = QuestionType::kPresence;
  std::string text;
  std::vector<std::int32_t> tokens;
  std::size_t answer_id = 0;
  DegradationKind degradation = DegradationKind::kNone;
};

std::string fill_template(std::string_view tmpl, std::string_view a, std::string_view b = {});

// Quadrant holding strictly more cells of the category than any other, if
// one exists. Top means row < G/2, left means col < G/2.
std::optional<Quadrant> dominant_quadrant(const Scene& scene, Category c);

// Emits, in order: presence for every category, number for each present
// category, compare for each category pair with at least one present member,
// location for each present category with a dominant quadrant, and one
// quality question. Template choice and compare operand order come from the
// seed. At most `budget` records are returned.
std::vector<QaRecord> generate_questions(const Scene& scene, const Degradation& deg,
                                         const TemplateTable& templates, std::uint64_t seed,
                                         std::size_t budget = 24);

}  // namespace tgfnet::synth
