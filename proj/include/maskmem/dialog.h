#ifndef MASKMEM_DIALOG_H_
#define MASKMEM_DIALOG_H_

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace maskmem {

using Utterance = std::vector<std::string>;

// Split on ASCII whitespace; empty input gives an empty utterance.
Utterance tokenize(std::string_view text);
std::string join(const Utterance& tokens);

enum class DialogMode { kOriginal, kPermuted };

std::string_view to_string(DialogMode mode);
DialogMode parse_dialog_mode(std::string_view text);

// Slots in api_call argument order.
enum class Slot { kCuisine = 0, kLocation = 1, kPeople = 2, kPrice = 3 };
inline constexpr std::size_t kNumSlots = 4;
inline constexpr std::array<Slot, kNumSlots> kSlotOrder = {
    Slot::kCuisine, Slot::kLocation, Slot::kPeople, Slot::kPrice};
std::string_view to_string(Slot slot);

enum class Relation {
  kCuisine = 0,
  kLocation,
  kPrice,
  kRating,
  kPhone,
  kAddress,
  kNumber,
};
inline constexpr std::size_t kNumRelations = 7;
inline constexpr std::array<Relation, kNumRelations> kAllRelations = {
    Relation::kCuisine, Relation::kLocation, Relation::kPrice,
    Relation::kRating,  Relation::kPhone,    Relation::kAddress,
    Relation::kNumber};

// File token, e.g. "R_cuisine".
std::string_view relation_token(Relation relation);
std::optional<Relation> parse_relation_token(std::string_view token);
// Bare name, e.g. "cuisine".
std::string_view relation_name(Relation relation);

struct KbFact {
  std::string entity;
  Relation relation = Relation::kCuisine;
  std::string value;

  friend bool operator==(const KbFact&, const KbFact&) = default;
};

// One user utterance and the system reply. answer_set holds every valid
// reply; the gold (observed) reply is always answer_set.front().
struct Turn {
  Utterance user;
  std::vector<Utterance> answer_set;

  const Utterance& gold() const { return answer_set.front(); }
  bool accepts(const Utterance& reply) const;

  friend bool operator==(const Turn&, const Turn&) = default;
};

// Indices are implicit: line i of a dialog carries index i + 1.
struct DialogLine {
  std::variant<Turn, KbFact> content;

  bool is_turn() const { return std::holds_alternative<Turn>(content); }
  const Turn& turn() const { return std::get<Turn>(content); }
  const KbFact& fact() const { return std::get<KbFact>(content); }

  friend bool operator==(const DialogLine&, const DialogLine&) = default;
};

struct AnnotatedDialog {
  DialogMode mode = DialogMode::kOriginal;
  std::vector<DialogLine> lines;

  std::size_t num_turns() const;
  std::vector<const Turn*> turns() const;
  std::vector<KbFact> kb_results() const;

  friend bool operator==(const AnnotatedDialog&,
                         const AnnotatedDialog&) = default;
};

using Corpus = std::vector<AnnotatedDialog>;

}  // namespace maskmem

#endif  // MASKMEM_DIALOG_H_
