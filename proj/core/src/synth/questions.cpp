#include "tgfnet/synth/questions.hpp"

#include <stdexcept>

#include "tgfnet/rng.hpp"

namespace tgfnet::synth {

const TemplateTable& question_templates() {
  static const TemplateTable table{{
      {"is there any {a} in the image ?", "does this scene contain {a} ?", "is {a} present ?"},
      {"how many {a} cells are there ?", "what is the number of {a} areas in the image ?"},
      {"is the amount of {a} smaller , larger or equal compared to {b} ?",
       "how does the number of {a} cells compare with {b} ?"},
      {"where is most of the {a} located ?", "in which quadrant is the {a} concentrated ?"},
      {"which modality is more reliable here ?", "which image gives the better view of this scene ?"},
  }};
  return table;
}

std::string fill_template(std::string_view tmpl, std::string_view a, std::string_view b) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t slot = tmpl.find('{', pos);
    if (slot == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, slot - pos));
    const std::string_view key = tmpl.substr(slot, 3);
    if (key == "{a}") {
      out.append(a);
    } else if (key == "{b}") {
      if (b.empty()) throw std::invalid_argument("template needs a second category: " + std::string(tmpl));
      out.append(b);
    } else {
      throw std::invalid_argument("bad template slot in: " + std::string(tmpl));
    }
    pos = slot + 3;
  }
  return out;
}

std::optional<Quadrant> dominant_quadrant(const Scene& scene, Category c) {
  std::array<std::size_t, 4> per{};
  const std::size_t half = scene.grid_side / 2;
  for (const auto& o : scene.objects) {
    if (o.category != c) continue;
    const std::size_t row = o.cell / scene.grid_side;
    const std::size_t col = o.cell % scene.grid_side;
    ++per[(row < half ? 0 : 2) + (col < half ? 0 : 1)];
  }
  std::size_t best = 0;
  for (std::size_t q = 1; q < 4; ++q) {
    if (per[q] > per[best]) best = q;
  }
  if (per[best] == 0) return std::nullopt;
  for (std::size_t q = 0; q < 4; ++q) {
    if (q != best && per[q] == per[best]) return std::nullopt;
  }
  return static_cast<Quadrant>(best);
}

std::vector<QaRecord> generate_questions(const Scene& scene, const Degradation& deg,
                                         const TemplateTable& templates, std::uint64_t seed,
                                         std::size_t budget) {
  Rng rng(seed);
  std::vector<QaRecord> out;
  auto emit = [&](QuestionType type, std::string_view a, std::string_view b, std::size_t answer) {
    if (out.size() >= budget) return;
    const auto& group = templates[static_cast<std::size_t>(type)];
    if (group.empty()) throw std::invalid_argument("no templates for a question type");
    QaRecord r;
    r.scene_id = scene.id;
    r.type = type;
    r.text = fill_template(group[rng.uniform_int(group.size())], a, b);
    r.tokens = tokenize(r.text);
    r.answer_id = answer;
    r.degradation = deg.kind;
    out.push_back(std::move(r));
  };

  std::array<std::size_t, kCategoryCount> counts{};
  for (std::size_t c = 0; c < kCategoryCount; ++c) counts[c] = scene.count(kCategories[c]);

  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    emit(QuestionType::kPresence, category_name(kCategories[c]), {}, answer_yes_no(counts[c] > 0));
  }
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    if (counts[c] > 0) {
      emit(QuestionType::kNumber, category_name(kCategories[c]), {}, answer_count(counts[c]));
    }
  }
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    for (std::size_t j = i + 1; j < kCategoryCount; ++j) {
      if (counts[i] == 0 && counts[j] == 0) continue;
      std::size_t a = i;
      std::size_t b = j;
      if (rng.bernoulli(0.5)) std::swap(a, b);
      emit(QuestionType::kCompare, category_name(kCategories[a]), category_name(kCategories[b]),
           answer_comparison(counts[a], counts[b]));
    }
  }
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    if (auto q = dominant_quadrant(scene, kCategories[c])) {
      emit(QuestionType::kLocation, category_name(kCategories[c]), {}, answer_quadrant(*q));
    }
  }
  emit(QuestionType::kQuality, {}, {}, answer_modality(deg.degraded()));
  return out;
}

}  // namespace tgfnet::synth
