#include "tgfnet/synth/vocab.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tgfnet/synth/questions.hpp"

namespace tgfnet::synth {
namespace {

constexpr std::array<std::string_view, kAnswerCount> kAnswers{
    "yes",   "no",      "0",        "1",         "2",           "3",            "4",       "5",
    "6",     "7",       "8",        "9",         "smaller",     "larger",       "equal",   "top-left",
    "top-right", "bottom-left", "bottom-right", "optical", "sar", "reserved"};

std::vector<std::string> build_vocabulary() {
  std::set<std::string> words;
  for (Category c : kCategories) words.emplace(category_name(c));
  for (const auto& group : question_templates()) {
    for (std::string_view tmpl : group) {
      std::istringstream is{std::string(tmpl)};
      std::string w;
      while (is >> w) {
        if (w != "{a}" && w != "{b}") words.insert(w);
      }
    }
  }
  std::vector<std::string> out{"<pad>"};
  out.insert(out.end(), words.begin(), words.end());
  return out;
}

}  // namespace

std::string_view category_name(Category c) {
  switch (c) {
    case Category::kWater: return "water";
    case Category::kBuilding: return "building";
    case Category::kVegetation: return "vegetation";
    case Category::kRoad: return "road";
  }
  return "?";
}

std::string_view question_type_name(QuestionType t) {
  switch (t) {
    case QuestionType::kPresence: return "presence";
    case QuestionType::kNumber: return "number";
    case QuestionType::kCompare: return "compare";
    case QuestionType::kLocation: return "location";
    case QuestionType::kQuality: return "quality";
  }
  return "?";
}

QuestionType parse_question_type(std::string_view name) {
  for (std::size_t i = 0; i < kQuestionTypeCount; ++i) {
    const auto t = static_cast<QuestionType>(i);
    if (question_type_name(t) == name) return t;
  }
  throw std::invalid_argument("unknown question type '" + std::string(name) + "'");
}

const std::vector<std::string>& token_vocabulary() {
  static const std::vector<std::string> vocab = build_vocabulary();
  return vocab;
}

std::int32_t token_id(std::string_view word) {
  const auto& vocab = token_vocabulary();
  auto it = std::lower_bound(vocab.begin() + 1, vocab.end(), word);
  if (it == vocab.end() || *it != word) {
    throw std::invalid_argument("word not in template vocabulary: '" + std::string(word) + "'");
  }
  return static_cast<std::int32_t>(it - vocab.begin());
}

std::vector<std::int32_t> tokenize(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::vector<std::int32_t> out;
  std::string w;
  while (is >> w) out.push_back(token_id(w));
  return out;
}

std::string detokenize(std::span<const std::int32_t> tokens) {
  const auto& vocab = token_vocabulary();
  std::string out;
  for (std::int32_t t : tokens) {
    if (t == kPadToken) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= vocab.size()) {
      throw std::out_of_range("token id " + std::to_string(t) + " outside vocabulary");
    }
    if (!out.empty()) out += ' ';
    out += vocab[static_cast<std::size_t>(t)];
  }
  return out;
}

const std::array<std::string_view, kAnswerCount>& answer_vocabulary() { return kAnswers; }

std::size_t answer_id(std::string_view answer) {
  for (std::size_t i = 0; i < kAnswers.size(); ++i) {
    if (kAnswers[i] == answer) return i;
  }
  throw std::invalid_argument("unknown answer '" + std::string(answer) + "'");
}

std::size_t answer_yes_no(bool yes) { return yes ? 0 : 1; }

std::size_t answer_count(std::size_t n) {
  if (n > 9) throw std::out_of_range("count answers cover 0..9, got " + std::to_string(n));
  return 2 + n;
}

std::size_t answer_comparison(std::size_t lhs, std::size_t rhs) {
  if (lhs < rhs) return 12;
  if (lhs > rhs) return 13;
  return 14;
}

std::size_t answer_quadrant(Quadrant q) { return 15 + static_cast<std::size_t>(q); }

std::size_t answer_modality(bool prefer_sar) { return prefer_sar ? 20 : 19; }

}  // namespace tgfnet::synth
