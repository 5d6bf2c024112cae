#include <cmath>

#include "doctest.h"
#include "maskmem/corpus.h"
#include "maskmem/error.h"
#include "maskmem/featurize.h"
#include "maskmem/vocabulary.h"
#include "maskmem/workspace.h"

using namespace maskmem;

namespace {

const Corpora& small_corpora() {
  static const Corpora c = [] {
    CorpusConfig cfg;
    cfg.kb.n_cuisines = 3;
    cfg.kb.n_locations = 3;
    cfg.kb.rating_max = 3;
    cfg.kb.allow_rating_ties = true;
    SplitSizes s;
    s.train = 40;
    s.val = s.test = s.test_oov = 10;
    return generate_corpus(cfg, s, 3);
  }();
  return c;
}

}  // namespace

TEST_CASE("position encoding") {
  // J = 1, d = 1: l = (1 - 1) - 1 * (1 - 2) = 1
  CHECK(position_weight(1, 1, 1, 1) == doctest::Approx(1.0));
  const auto w = position_encode(4, 3);
  for (int j = 1; j <= 4; ++j) {
    for (int k = 1; k <= 3; ++k) {
      const double expect = (1.0 - j / 4.0) - (k / 3.0) * (1.0 - 2.0 * j / 4.0);
      CHECK(w[j - 1][k - 1] == doctest::Approx(expect));
    }
  }
  const auto bow = position_encode(5, 2, true);
  for (const auto& row : bow) {
    for (double x : row) CHECK(x == 1.0);
  }
  CHECK_THROWS(position_encode(0, 3));
}

TEST_CASE("vocabulary") {
  const auto& c = small_corpora();
  const auto cands = CandidateSet::from_corpora({&c.train, &c.val, &c.test});
  const auto v = Vocabulary::build(c.train, cands);
  CHECK(v.token(Vocabulary::kPad) == "<pad>");
  CHECK(v.token(Vocabulary::kUnk) == "<unk>");
  CHECK(v.token(Vocabulary::kUser) == "$user");
  CHECK(v.token(Vocabulary::kAgent) == "$agent");
  CHECK(v.token(Vocabulary::type_id(Relation::kPhone)) == "#phone");
  CHECK(v.id("never-seen-token") == Vocabulary::kUnk);
  for (const auto& u : cands.items()) {
    for (const auto& t : u) CHECK(v.contains(t));
  }
  CHECK(v.fingerprint() == Vocabulary::build(c.train, cands).fingerprint());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.id(v.token(static_cast<int>(i))) == static_cast<int>(i));
}

TEST_CASE("candidate set") {
  CandidateSet s;
  CHECK(s.add(tokenize("a b")) == 0);
  CHECK(s.add(tokenize("c")) == 1);
  CHECK(s.add(tokenize("a b")) == 0);
  CHECK(s.size() == 2);
  CHECK_THROWS_AS(s.id(tokenize("zzz")), DatasetError);
  const auto round = CandidateSet::parse(s.to_text(), "mem");
  CHECK(round.items() == s.items());
}

TEST_CASE("examples mirror the dialog") {
  const auto& c = small_corpora();
  const auto files = data_from_corpora(c, DataVariant::kFull);
  FeaturizeOptions opt;
  const auto data = prepare_data(files, opt);
  std::size_t turns = 0;
  for (const auto& d : c.train) turns += d.num_turns();
  CHECK(data->train.size() == turns);

  const auto& d0 = c.train[0];
  const auto ex = data->featurizer->make_examples(d0, 0);
  REQUIRE(ex.size() == d0.num_turns());
  CHECK(ex[0].num_memories() == 0);
  // Turn 2 sees the first user utterance and the first system gold.
  CHECK(ex[1].num_memories() == 2);
  CHECK(ex[1].memory(0).back() == Vocabulary::kUser);
  CHECK(ex[1].memory(1).back() == Vocabulary::kAgent);
  for (std::size_t i = 0; i < ex.size(); ++i) {
    CHECK(ex[i].is_valid(ex[i].gold));
    CHECK(ex[i].valid.size() == d0.turns()[i]->answer_set.size());
    CHECK(ex[i].query.back() == Vocabulary::kUser);
    CHECK(ex[i].turn == i);
  }
  // KB facts are memories of the form (entity, relation, value, $agent).
  bool saw_fact = false;
  for (std::size_t i = 0; i < ex.back().num_memories(); ++i) {
    const auto& m = ex.back().memory(i);
    if (m.size() == 4 && data->vocab.token(m[1]).rfind("R_", 0) == 0) saw_fact = true;
  }
  CHECK(saw_fact);

  FeaturizeOptions tight;
  tight.memory_capacity = 3;
  const auto data2 = prepare_data(files, tight);
  for (const auto& e : data2->train) CHECK(e.num_memories() <= 3);
}

TEST_CASE("match-type flags") {
  const auto& c = small_corpora();
  const auto files = data_from_corpora(c, DataVariant::kFull);
  FeaturizeOptions opt;
  opt.match_type = true;
  const auto data = prepare_data(files, opt);
  const auto& f = *data->featurizer;
  // A candidate with no entity words never gets flags.
  const int greet = data->candidates.id(tokenize("hello what can i help you with today"));
  for (const auto& e : data->train) {
    for (const auto& m : e.match) CHECK(m.candidate != greet);
  }
  // The inverted index agrees with the per-candidate definition.
  const auto& d0 = c.train[0];
  const auto ex = f.make_examples(d0, 0);
  std::vector<Utterance> context;
  std::size_t k = 0;
  for (const auto& line : d0.lines) {
    if (!line.is_turn()) {
      const auto& fact = line.fact();
      context.push_back({fact.entity, fact.value});
      continue;
    }
    context.push_back(line.turn().user);
    std::vector<MatchFlag> naive;
    for (std::size_t cand = 0; cand < data->candidates.size(); ++cand) {
      for (Relation r : f.match_types(data->candidates.at(static_cast<int>(cand)), context)) {
        naive.push_back(MatchFlag{static_cast<int>(cand), r});
      }
    }
    std::sort(naive.begin(), naive.end());
    CHECK(ex[k].match == naive);
    context.push_back(line.turn().gold());
    ++k;
  }
}

TEST_CASE("OOV entities are typed without being in the vocabulary") {
  const auto& c = small_corpora();
  const auto files = data_from_corpora(c, DataVariant::kFull);
  FeaturizeOptions opt;
  opt.match_type = true;
  const auto data = prepare_data(files, opt);
  REQUIRE_FALSE(data->test_oov.empty());
  CHECK(data->oov_candidates.size() > data->candidates.size());
  bool flagged = false;
  for (const auto& e : data->test_oov) flagged = flagged || !e.match.empty();
  CHECK(flagged);
  const auto lex = EntityLexicon::from_facts(files.kb_facts);
  CHECK(lex.type_of("resto_anything_phone") == Relation::kPhone);
  CHECK(lex.type_of("resto_anything_address") == Relation::kAddress);
  CHECK_FALSE(lex.type_of("hello").has_value());
}
