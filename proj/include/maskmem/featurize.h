#ifndef MASKMEM_FEATURIZE_H_
#define MASKMEM_FEATURIZE_H_

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "maskmem/dialog.h"
#include "maskmem/vocabulary.h"

namespace maskmem {

// Position-encoding weight of word j (1-based) in a sentence of length J,
// embedding component k (1-based) of d:
//   l_kj = (1 - j/J) - (k/d) (1 - 2j/J)
double position_weight(int j, int sentence_length, int k, int dim);

// J x d table of weights; all ones in bag-of-words mode.
std::vector<std::vector<double>> position_encode(int sentence_length, int dim,
                                                 bool bag_of_words = false);

using TokenIds = std::vector<int>;

struct MatchFlag {
  int candidate = 0;
  Relation type = Relation::kCuisine;

  friend bool operator==(const MatchFlag&, const MatchFlag&) = default;
  friend auto operator<=>(const MatchFlag& a, const MatchFlag& b) {
    if (a.candidate != b.candidate) return a.candidate <=> b.candidate;
    return static_cast<int>(a.type) <=> static_cast<int>(b.type);
  }
};

// One system turn in id form. Memories are a window into the dialog-wide
// sentence list, oldest first; a speaker token ends every memory.
struct FeaturizedExample {
  std::shared_ptr<const std::vector<TokenIds>> history;
  std::size_t memory_begin = 0;
  std::size_t memory_end = 0;
  TokenIds query;
  int gold = 0;
  std::vector<int> valid;  // sorted, contains gold
  std::vector<MatchFlag> match;  // sorted; empty without match-type features
  std::size_t dialog = 0;
  std::size_t turn = 0;  // 0-based system-turn number within the dialog

  std::size_t num_memories() const { return memory_end - memory_begin; }
  const TokenIds& memory(std::size_t i) const {
    return (*history)[memory_begin + i];
  }
  bool is_valid(int candidate) const;
};

struct FeaturizeOptions {
  bool match_type = false;
  std::size_t memory_capacity = 250;
};

class Featurizer {
 public:
  Featurizer(const Vocabulary& vocab, const CandidateSet& candidates,
             EntityLexicon lexicon, FeaturizeOptions options);

  const Vocabulary& vocab() const { return *vocab_; }
  const CandidateSet& candidates() const { return *candidates_; }
  const EntityLexicon& lexicon() const { return lexicon_; }
  const FeaturizeOptions& options() const { return options_; }

  TokenIds encode(const Utterance& u, std::optional<Speaker> speaker) const;
  TokenIds encode_fact(const KbFact& fact) const;
  // Candidate token ids, without speaker token.
  const std::vector<TokenIds>& candidate_ids() const { return candidate_ids_; }

  // Match-type flags for every candidate given the entity tokens seen in the
  // dialog context (memories plus query).
  std::vector<MatchFlag> match_flags(
      const std::unordered_set<std::string>& context_entities) const;
  // Types that fire for one candidate against a token context.
  std::vector<Relation> match_types(const Utterance& candidate,
                                    const std::vector<Utterance>& context) const;

  // One example per system turn; memories hold every earlier line
  // (user utterances, system golds and KB facts).
  std::vector<FeaturizedExample> make_examples(const AnnotatedDialog& dialog,
                                               std::size_t dialog_index) const;
  std::vector<FeaturizedExample> make_examples(const Corpus& corpus) const;

 private:
  const Vocabulary* vocab_;
  const CandidateSet* candidates_;
  EntityLexicon lexicon_;
  FeaturizeOptions options_;
  std::vector<TokenIds> candidate_ids_;
  // entity token -> (candidate, type) pairs containing it
  std::unordered_map<std::string, std::vector<MatchFlag>> entity_index_;
};

}  // namespace maskmem

#endif  // MASKMEM_FEATURIZE_H_
