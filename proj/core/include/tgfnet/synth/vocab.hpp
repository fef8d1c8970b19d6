#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tgfnet::synth {

enum class Category { kWater = 0, kBuilding = 1, kVegetation = 2, kRoad = 3 };
inline constexpr std::size_t kCategoryCount = 4;
inline constexpr std::array<Category, kCategoryCount> kCategories{
    Category::kWater, Category::kBuilding, Category::kVegetation, Category::kRoad};

enum class QuestionType { kPresence = 0, kNumber = 1, kCompare = 2, kLocation = 3, kQuality = 4 };
inline constexpr std::size_t kQuestionTypeCount = 5;

enum class Quadrant { kTopLeft = 0, kTopRight = 1, kBottomLeft = 2, kBottomRight = 3 };

std::string_view category_name(Category c);
std::string_view question_type_name(QuestionType t);
QuestionType parse_question_type(std::string_view name);

inline constexpr std::int32_t kPadToken = 0;

// Word list of every template; id 0 is "<pad>". Ids are stable: words are
// sorted after the pad entry.
const std::vector<std::string>& token_vocabulary();
std::int32_t token_id(std::string_view word);
std::vector<std::int32_t> tokenize(std::string_view text);
std::string detokenize(std::span<const std::int32_t> tokens);

// Fixed answer set:
//   0 yes, 1 no, 2..11 counts 0..9, 12 smaller, 13 larger, 14 equal,
//   15..18 quadrants, 19 optical, 20 sar, 21 reserved (never a ground truth).
inline constexpr std::size_t kAnswerCount = 22;
const std::array<std::string_view, kAnswerCount>& answer_vocabulary();
std::size_t answer_id(std::string_view answer);

std::size_t answer_yes_no(bool yes);
std::size_t answer_count(std::size_t n);
std::size_t answer_comparison(std::size_t lhs, std::size_t rhs);
std::size_t answer_quadrant(Quadrant q);
std::size_t answer_modality(bool prefer_sar);

}  // namespace tgfnet::synth
