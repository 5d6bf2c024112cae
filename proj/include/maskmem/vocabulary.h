#ifndef MASKMEM_VOCABULARY_H_
#define MASKMEM_VOCABULARY_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "maskmem/dialog.h"

namespace maskmem {

// Ordered, deduplicated list of candidate system utterances.
class CandidateSet {
 public:
  CandidateSet() = default;

  // Every alternative of every answer set, in order of first appearance.
  static CandidateSet from_corpora(const std::vector<const Corpus*>& corpora);
  // One utterance per line.
  static CandidateSet parse(std::string_view text, const std::string& source);
  static CandidateSet load(const std::string& path);
  std::string to_text() const;

  // Id of `u`, adding it if new.
  int add(const Utterance& u);
  std::optional<int> find(const Utterance& u) const;
  // Throws DatasetError for unknown utterances.
  int id(const Utterance& u) const;

  const Utterance& at(int id) const { return items_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::vector<Utterance>& items() const { return items_; }

  // This set plus every utterance of `extra` that is not already present.
  CandidateSet extended_with(const Corpus& extra) const;

 private:
  std::vector<Utterance> items_;
  std::unordered_map<std::string, int> index_;
};

// Reserved tokens appended to sentences and candidates.
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kUserToken = "$user";
inline constexpr std::string_view kAgentToken = "$agent";
// "#cuisine", "#location", ... in Relation order.
std::string type_token(Relation relation);

enum class Speaker { kUser, kAgent };

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kUser = 2;
  static constexpr int kAgent = 3;
  static constexpr int kFirstType = 4;
  static constexpr int kNumSpecial = kFirstType + static_cast<int>(kNumRelations);

  // Specials, then training-corpus tokens in order of appearance, then any
  // remaining candidate tokens.
  static Vocabulary build(const Corpus& train, const CandidateSet& candidates);
  // Inverse of tokens(); checks the reserved prefix.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  int id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  static int type_id(Relation relation) {
    return kFirstType + static_cast<int>(relation);
  }
  const std::vector<std::string>& tokens() const { return tokens_; }
  // FNV-1a over the token list; stored in checkpoints.
  std::uint64_t fingerprint() const;

 private:
  void add(std::string_view token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Entity-type lookup for match-type features. Values come from KB facts;
// phone and address tokens are also recognised by their surface suffix, so
// entities the lexicon never saw still get typed.
class EntityLexicon {
 public:
  EntityLexicon() = default;
  static EntityLexicon from_facts(const std::vector<KbFact>& facts);

  void add(const std::string& token, Relation type);
  std::optional<Relation> type_of(std::string_view token) const;

 private:
  std::unordered_map<std::string, Relation> types_;
};

}  // namespace maskmem

#endif  // MASKMEM_VOCABULARY_H_
