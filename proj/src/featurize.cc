#include "maskmem/featurize.h"

#include <algorithm>

#include "maskmem/error.h"

namespace maskmem {

double position_weight(int j, int sentence_length, int k, int dim) {
  const double jj = static_cast<double>(j) / sentence_length;
  const double kk = static_cast<double>(k) / dim;
  return (1.0 - jj) - kk * (1.0 - 2.0 * jj);
}

std::vector<std::vector<double>> position_encode(int sentence_length, int dim,
                                                 bool bag_of_words) {
  if (sentence_length < 1 || dim < 1) {
    throw std::invalid_argument("position_encode needs J >= 1 and d >= 1");
  }
  std::vector<std::vector<double>> w(
      static_cast<std::size_t>(sentence_length),
      std::vector<double>(static_cast<std::size_t>(dim), 1.0));
  if (bag_of_words) return w;
  for (int j = 1; j <= sentence_length; ++j) {
    for (int k = 1; k <= dim; ++k) {
      w[j - 1][k - 1] = position_weight(j, sentence_length, k, dim);
    }
  }
  return w;
}

bool FeaturizedExample::is_valid(int candidate) const {
  return std::binary_search(valid.begin(), valid.end(), candidate);
}

Featurizer::Featurizer(const Vocabulary& vocab, const CandidateSet& candidates,
                       EntityLexicon lexicon, FeaturizeOptions options)
    : vocab_(&vocab),
      candidates_(&candidates),
      lexicon_(std::move(lexicon)),
      options_(options) {
  if (options_.memory_capacity == 0) {
    throw ConfigError("memory capacity must be positive");
  }
  candidate_ids_.reserve(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Utterance& u = candidates.at(static_cast<int>(c));
    candidate_ids_.push_back(encode(u, std::nullopt));
    for (const auto& tok : u) {
      if (auto type = lexicon_.type_of(tok)) {
        auto& list = entity_index_[tok];
        MatchFlag flag{static_cast<int>(c), *type};
        if (std::find(list.begin(), list.end(), flag) == list.end()) {
          list.push_back(flag);
        }
      }
    }
  }
}

TokenIds Featurizer::encode(const Utterance& u,
                            std::optional<Speaker> speaker) const {
  TokenIds ids;
  ids.reserve(u.size() + 1);
  for (const auto& t : u) ids.push_back(vocab_->id(t));
  if (speaker) {
    ids.push_back(*speaker == Speaker::kUser ? Vocabulary::kUser
                                             : Vocabulary::kAgent);
  }
  return ids;
}

TokenIds Featurizer::encode_fact(const KbFact& fact) const {
  return TokenIds{vocab_->id(fact.entity),
                  vocab_->id(relation_token(fact.relation)),
                  vocab_->id(fact.value), Vocabulary::kAgent};
}

std::vector<MatchFlag> Featurizer::match_flags(
    const std::unordered_set<std::string>& context_entities) const {
  std::vector<MatchFlag> out;
  for (const auto& tok : context_entities) {
    auto it = entity_index_.find(tok);
    if (it == entity_index_.end()) continue;
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Relation> Featurizer::match_types(
    const Utterance& candidate, const std::vector<Utterance>& context) const {
  std::vector<Relation> out;
  for (const auto& tok : candidate) {
    auto type = lexicon_.type_of(tok);
    if (!type) continue;
    const bool seen = std::any_of(context.begin(), context.end(),
                                  [&](const Utterance& s) {
                                    return std::find(s.begin(), s.end(), tok) !=
                                           s.end();
                                  });
    if (seen && std::find(out.begin(), out.end(), *type) == out.end()) {
      out.push_back(*type);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<FeaturizedExample> Featurizer::make_examples(
    const AnnotatedDialog& dialog, std::size_t dialog_index) const {
  auto history = std::make_shared<std::vector<TokenIds>>();
  std::vector<FeaturizedExample> out;
  std::unordered_set<std::string> entities;
  auto note_entities = [&](const Utterance& u) {
    if (!options_.match_type) return;
    for (const auto& t : u) {
      if (lexicon_.type_of(t)) entities.insert(t);
    }
  };

  // First pass: encode every line so the shared history is complete.
  struct Pending {
    std::size_t memory_end;
    const Turn* turn;
    std::unordered_set<std::string> context;
  };
  std::vector<Pending> pending;
  for (const auto& line : dialog.lines) {
    if (!line.is_turn()) {
      const KbFact& f = line.fact();
      history->push_back(encode_fact(f));
      note_entities({f.entity, f.value});
      continue;
    }
    const Turn& t = line.turn();
    note_entities(t.user);
    pending.push_back(Pending{history->size(), &t, entities});
    history->push_back(encode(t.user, Speaker::kUser));
    history->push_back(encode(t.gold(), Speaker::kAgent));
    note_entities(t.gold());
  }

  out.reserve(pending.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const Pending& p = pending[i];
    FeaturizedExample ex;
    ex.history = history;
    ex.memory_end = p.memory_end;
    ex.memory_begin = p.memory_end > options_.memory_capacity
                          ? p.memory_end - options_.memory_capacity
                          : 0;
    ex.query = encode(p.turn->user, Speaker::kUser);
    ex.gold = candidates_->id(p.turn->gold());
    for (const auto& u : p.turn->answer_set) ex.valid.push_back(candidates_->id(u));
    std::sort(ex.valid.begin(), ex.valid.end());
    ex.valid.erase(std::unique(ex.valid.begin(), ex.valid.end()), ex.valid.end());
    if (options_.match_type) ex.match = match_flags(p.context);
    ex.dialog = dialog_index;
    ex.turn = i;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<FeaturizedExample> Featurizer::make_examples(
    const Corpus& corpus) const {
  std::vector<FeaturizedExample> out;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    auto ex = make_examples(corpus[d], d);
    out.insert(out.end(), std::make_move_iterator(ex.begin()),
               std::make_move_iterator(ex.end()));
  }
  return out;
}

}  // namespace maskmem
