#include "maskmem/dialog.h"

#include <algorithm>

#include "maskmem/error.h"

namespace maskmem {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

constexpr std::array<std::string_view, kNumRelations> kRelationTokens = {
    "R_cuisine", "R_location", "R_price", "R_rating",
    "R_phone",   "R_address",  "R_number"};

}  // namespace

Utterance tokenize(std::string_view text) {
  Utterance out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string join(const Utterance& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string_view to_string(DialogMode mode) {
  return mode == DialogMode::kOriginal ? "original" : "permuted";
}

DialogMode parse_dialog_mode(std::string_view text) {
  if (text == "original") return DialogMode::kOriginal;
  if (text == "permuted") return DialogMode::kPermuted;
  throw ConfigError("unknown dialog mode '" + std::string(text) +
                    "' (expected original|permuted)");
}

std::string_view to_string(Slot slot) {
  switch (slot) {
    case Slot::kCuisine:
      return "cuisine";
    case Slot::kLocation:
      return "location";
    case Slot::kPeople:
      return "people";
    case Slot::kPrice:
      return "price";
  }
  return "?";
}

std::string_view relation_token(Relation relation) {
  return kRelationTokens[static_cast<std::size_t>(relation)];
}

std::optional<Relation> parse_relation_token(std::string_view token) {
  for (std::size_t i = 0; i < kNumRelations; ++i) {
    if (kRelationTokens[i] == token) return kAllRelations[i];
  }
  return std::nullopt;
}

std::string_view relation_name(Relation relation) {
  return relation_token(relation).substr(2);
}

bool Turn::accepts(const Utterance& reply) const {
  return std::find(answer_set.begin(), answer_set.end(), reply) !=
         answer_set.end();
}

std::size_t AnnotatedDialog::num_turns() const {
  return static_cast<std::size_t>(
      std::count_if(lines.begin(), lines.end(),
                    [](const DialogLine& l) { return l.is_turn(); }));
}

std::vector<const Turn*> AnnotatedDialog::turns() const {
  std::vector<const Turn*> out;
  for (const auto& line : lines) {
    if (line.is_turn()) out.push_back(&line.turn());
  }
  return out;
}

std::vector<KbFact> AnnotatedDialog::kb_results() const {
  std::vector<KbFact> out;
  for (const auto& line : lines) {
    if (!line.is_turn()) out.push_back(line.fact());
  }
  return out;
}

}  // namespace maskmem
