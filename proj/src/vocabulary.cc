#include "maskmem/vocabulary.h"

#include <sstream>

#include "maskmem/corpus.h"
#include "maskmem/error.h"
#include "maskmem/rng.h"

namespace maskmem {

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

CandidateSet CandidateSet::from_corpora(
    const std::vector<const Corpus*>& corpora) {
  CandidateSet set;
  for (const Corpus* corpus : corpora) {
    for (const auto& dialog : *corpus) {
      for (const Turn* t : dialog.turns()) {
        for (const auto& u : t->answer_set) set.add(u);
      }
    }
  }
  return set;
}

CandidateSet CandidateSet::parse(std::string_view text,
                                 const std::string& source) {
  CandidateSet set;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    Utterance u = tokenize(line);
    if (u.empty()) continue;
    if (set.find(u)) throw ParseError(source, lineno, "duplicate candidate");
    set.add(u);
  }
  return set;
}

CandidateSet CandidateSet::load(const std::string& path) {
  return parse(read_text_file(path), path);
}

std::string CandidateSet::to_text() const {
  std::string out;
  for (const auto& u : items_) {
    out += join(u);
    out.push_back('\n');
  }
  return out;
}

int CandidateSet::add(const Utterance& u) {
  auto [it, inserted] =
      index_.emplace(join(u), static_cast<int>(items_.size()));
  if (inserted) items_.push_back(u);
  return it->second;
}

std::optional<int> CandidateSet::find(const Utterance& u) const {
  auto it = index_.find(join(u));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int CandidateSet::id(const Utterance& u) const {
  auto found = find(u);
  if (!found) {
    throw DatasetError("system utterance '" + join(u) +
                       "' is not in the candidate set");
  }
  return *found;
}

CandidateSet CandidateSet::extended_with(const Corpus& extra) const {
  CandidateSet out = *this;
  for (const auto& dialog : extra) {
    for (const Turn* t : dialog.turns()) {
      for (const auto& u : t->answer_set) out.add(u);
    }
  }
  return out;
}

std::string type_token(Relation relation) {
  return "#" + std::string(relation_name(relation));
}

void Vocabulary::add(std::string_view token) {
  auto [it, inserted] =
      index_.emplace(std::string(token), static_cast<int>(tokens_.size()));
  if (inserted) tokens_.emplace_back(token);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const auto& t : tokens) {
    if (t.empty() || v.contains(t)) {
      throw DatasetError("vocabulary token list has an empty or repeated token");
    }
    v.add(t);
  }
  const bool specials_ok =
      v.size() >= static_cast<std::size_t>(kNumSpecial) && v.token(kPad) == kPadToken &&
      v.token(kUnk) == kUnkToken && v.token(kUser) == kUserToken &&
      v.token(kAgent) == kAgentToken;
  if (!specials_ok) throw DatasetError("vocabulary does not start with the reserved tokens");
  for (Relation r : kAllRelations) {
    if (v.token(type_id(r)) != type_token(r)) {
      throw DatasetError("vocabulary does not start with the reserved tokens");
    }
  }
  return v;
}

Vocabulary Vocabulary::build(const Corpus& train,
                             const CandidateSet& candidates) {
  if (train.empty()) throw DatasetError("cannot build a vocabulary from an empty corpus");
  Vocabulary v;
  v.add(kPadToken);
  v.add(kUnkToken);
  v.add(kUserToken);
  v.add(kAgentToken);
  for (Relation r : kAllRelations) v.add(type_token(r));
  for (const auto& dialog : train) {
    for (const auto& line : dialog.lines) {
      if (line.is_turn()) {
        for (const auto& t : line.turn().user) v.add(t);
        for (const auto& u : line.turn().answer_set) {
          for (const auto& t : u) v.add(t);
        }
      } else {
        const KbFact& f = line.fact();
        v.add(f.entity);
        v.add(relation_token(f.relation));
        v.add(f.value);
      }
    }
  }
  for (const auto& u : candidates.items()) {
    for (const auto& t : u) v.add(t);
  }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64(std::string_view("\n", 1), h);
  }
  return h;
}

EntityLexicon EntityLexicon::from_facts(const std::vector<KbFact>& facts) {
  EntityLexicon lex;
  for (const auto& f : facts) lex.add(f.value, f.relation);
  return lex;
}

void EntityLexicon::add(const std::string& token, Relation type) {
  types_.emplace(token, type);
}

std::optional<Relation> EntityLexicon::type_of(std::string_view token) const {
  auto it = types_.find(std::string(token));
  if (it != types_.end()) return it->second;
  if (ends_with(token, "_phone")) return Relation::kPhone;
  if (ends_with(token, "_address")) return Relation::kAddress;
  return std::nullopt;
}

}  // namespace maskmem
