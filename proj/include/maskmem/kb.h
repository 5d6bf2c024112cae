#ifndef MASKMEM_KB_H_
#define MASKMEM_KB_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "maskmem/dialog.h"

namespace maskmem {

struct KBConfig {
  int n_cuisines = 10;
  int n_locations = 10;
  std::vector<std::string> price_ranges = {"cheap", "moderate", "expensive"};
  // Inclusive. Each (cuisine, location, price) cell holds one restaurant per
  // rating slot, i.e. rating_max - rating_min + 1 restaurants.
  int rating_min = 1;
  int rating_max = 8;
  std::vector<int> party_sizes = {2, 4, 6, 8};
  bool allow_rating_ties = false;
  // Draw cuisines and locations from the held-out pools.
  bool oov_mode = false;
  std::uint64_t seed = 0;

  int restaurants_per_cell() const { return rating_max - rating_min + 1; }
  // Throws ConfigError.
  void validate() const;
};

struct Restaurant {
  std::string name;
  std::string cuisine;
  std::string location;
  std::string price;
  int rating = 0;
  std::string number;  // seating, as a number word
  std::string phone;
  std::string address;

  std::string value_of(Relation relation) const;
};

class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  const KBConfig& config() const { return config_; }
  const std::vector<Restaurant>& restaurants() const { return restaurants_; }
  const std::vector<std::string>& cuisines() const { return cuisines_; }
  const std::vector<std::string>& locations() const { return locations_; }
  const std::vector<std::string>& prices() const { return prices_; }
  // Party sizes as number words ("two", "four", ...).
  const std::vector<std::string>& party_sizes() const { return party_sizes_; }

  // Vocabulary of one api_call slot.
  const std::vector<std::string>& values(Slot slot) const;
  bool has_value(Slot slot, const std::string& value) const;

  // Restaurant indices of one (cuisine, location, price) cell, in KB order.
  std::vector<std::size_t> cell(const std::string& cuisine,
                                const std::string& location,
                                const std::string& price) const;
  const Restaurant* find(const std::string& name) const;

  std::vector<KbFact> facts_for(std::size_t restaurant) const;
  std::vector<KbFact> facts() const;
  std::size_t num_facts() const { return restaurants_.size() * kNumRelations; }

  // One "<restaurant> <relation> <value>" line per fact.
  std::string to_text() const;

 private:
  friend KnowledgeBase generate_kb(const KBConfig& config, std::uint64_t seed);

  KBConfig config_;
  std::vector<std::string> cuisines_;
  std::vector<std::string> locations_;
  std::vector<std::string> prices_;
  std::vector<std::string> party_sizes_;
  std::vector<Restaurant> restaurants_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::unordered_map<std::string, std::vector<std::size_t>> cells_;
};

KnowledgeBase generate_kb(const KBConfig& config, std::uint64_t seed);

// "two", "four", ... for 1..20.
std::string number_word(int n);

// Pools the KB draws cuisines and locations from. The OOV pools are
// disjoint from the regular ones.
const std::vector<std::string>& cuisine_pool(bool oov);
const std::vector<std::string>& location_pool(bool oov);

// Parses facts written by KnowledgeBase::to_text (used by the chat REPL).
std::vector<KbFact> parse_kb_text(const std::string& text,
                                  const std::string& source);

}  // namespace maskmem

#endif  // MASKMEM_KB_H_
