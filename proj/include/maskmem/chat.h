#ifndef MASKMEM_CHAT_H_
#define MASKMEM_CHAT_H_

#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "maskmem/dialog.h"
#include "maskmem/featurize.h"
#include "maskmem/model.h"

namespace maskmem {

// Restaurants matching an api_call, rebuilt from KB fact lines.
class KbIndex {
 public:
  explicit KbIndex(const std::vector<KbFact>& facts);

  // Facts of every restaurant whose cuisine, location and price match the
  // call's arguments, best-rated first (ties by name). Empty when the
  // utterance is not a well-formed api_call.
  std::vector<KbFact> lookup(const Utterance& api_call) const;
  // Facts whose entity or value contains `query`.
  std::vector<KbFact> search(const std::string& query) const;
  std::size_t num_restaurants() const { return by_entity_.size(); }

 private:
  std::vector<std::pair<std::string, std::vector<KbFact>>> by_entity_;
};

struct ChatReply {
  int candidate = -1;
  std::string text;
  std::vector<KbFact> injected;  // facts added to memory after an api_call
};

// Retrieval dialog against a trained model; memory grows with every turn
// the way the training corpora lay it out.
class ChatSession {
 public:
  ChatSession(const MemN2N& model, const ModelParams& params,
              const Featurizer& featurizer, MaskMode mode, KbIndex kb);

  // An empty line is read as the silence token.
  ChatReply respond(const std::string& user_text);
  void reset();
  std::size_t memory_size() const { return history_->size(); }
  const KbIndex& kb() const { return kb_; }

 private:
  const MemN2N* model_;
  const ModelParams* params_;
  const Featurizer* featurizer_;
  MaskMode mode_;
  KbIndex kb_;
  Matrix cand_features_;
  std::shared_ptr<std::vector<TokenIds>> history_;
  std::unordered_set<std::string> entities_;
};

}  // namespace maskmem

#endif  // MASKMEM_CHAT_H_
