#include "maskmem/chat.h"

#include <algorithm>
#include <map>

namespace maskmem {

namespace {

std::string value_of(const std::vector<KbFact>& facts, Relation r) {
  for (const auto& f : facts) {
    if (f.relation == r) return f.value;
  }
  return "";
}

int rating_of(const std::vector<KbFact>& facts) {
  const std::string v = value_of(facts, Relation::kRating);
  try {
    return v.empty() ? 0 : std::stoi(v);
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

KbIndex::KbIndex(const std::vector<KbFact>& facts) {
  std::map<std::string, std::vector<KbFact>> grouped;
  for (const auto& f : facts) grouped[f.entity].push_back(f);
  by_entity_.assign(grouped.begin(), grouped.end());
}

std::vector<KbFact> KbIndex::lookup(const Utterance& call) const {
  if (call.size() != 5 || call[0] != "api_call") return {};
  std::vector<const std::vector<KbFact>*> hits;
  for (const auto& [name, facts] : by_entity_) {
    if (value_of(facts, Relation::kCuisine) == call[1] &&
        value_of(facts, Relation::kLocation) == call[2] &&
        value_of(facts, Relation::kPrice) == call[4]) {
      hits.push_back(&facts);
    }
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto* a, const auto* b) {
    return rating_of(*a) > rating_of(*b);
  });
  std::vector<KbFact> out;
  for (const auto* facts : hits) out.insert(out.end(), facts->begin(), facts->end());
  return out;
}

std::vector<KbFact> KbIndex::search(const std::string& query) const {
  std::vector<KbFact> out;
  for (const auto& [name, facts] : by_entity_) {
    for (const auto& f : facts) {
      if (f.entity.find(query) != std::string::npos ||
          f.value.find(query) != std::string::npos) {
        out.push_back(f);
      }
    }
  }
  return out;
}

ChatSession::ChatSession(const MemN2N& model, const ModelParams& params,
                         const Featurizer& featurizer, MaskMode mode, KbIndex kb)
    : model_(&model),
      params_(&params),
      featurizer_(&featurizer),
      mode_(mode),
      kb_(std::move(kb)),
      cand_features_(model.candidate_features(params, featurizer.candidate_ids())),
      history_(std::make_shared<std::vector<TokenIds>>()) {}

void ChatSession::reset() {
  history_ = std::make_shared<std::vector<TokenIds>>();
  entities_.clear();
}

ChatReply ChatSession::respond(const std::string& user_text) {
  Utterance user = tokenize(user_text);
  if (user.empty()) user = {"<SILENCE>"};
  const bool typed = featurizer_->options().match_type;
  auto note = [&](const Utterance& u) {
    if (!typed) return;
    for (const auto& t : u) {
      if (featurizer_->lexicon().type_of(t)) entities_.insert(t);
    }
  };
  note(user);

  FeaturizedExample ex;
  ex.history = history_;
  ex.memory_end = history_->size();
  const std::size_t cap = featurizer_->options().memory_capacity;
  ex.memory_begin = ex.memory_end > cap ? ex.memory_end - cap : 0;
  ex.query = featurizer_->encode(user, Speaker::kUser);
  if (typed) ex.match = featurizer_->match_flags(entities_);

  ChatReply reply;
  reply.candidate = model_->predict(*params_, ex, cand_features_, mode_);
  const Utterance& answer = featurizer_->candidates().at(reply.candidate);
  reply.text = join(answer);

  history_->push_back(featurizer_->encode(user, Speaker::kUser));
  history_->push_back(featurizer_->encode(answer, Speaker::kAgent));
  note(answer);
  if (!answer.empty() && answer[0] == "api_call") {
    reply.injected = kb_.lookup(answer);
    for (const auto& f : reply.injected) {
      history_->push_back(featurizer_->encode_fact(f));
      note({f.entity, f.value});
    }
  }
  return reply;
}

}  // namespace maskmem
