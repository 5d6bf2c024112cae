#include "maskmem/kb.h"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>

#include "maskmem/error.h"
#include "maskmem/rng.h"

namespace maskmem {

namespace {

const std::vector<std::string> kCuisines = {
    "british", "cantonese", "french",     "indian", "italian", "japanese",
    "korean",  "spanish",   "vietnamese", "thai",   "greek",   "mexican"};
const std::vector<std::string> kOovCuisines = {
    "ethiopian", "german",  "lebanese", "moroccan", "peruvian", "polish",
    "russian",   "turkish", "swedish",  "persian",  "african",  "brazilian"};
const std::vector<std::string> kLocations = {
    "bombay", "london", "madrid", "paris",   "rome",   "seoul",
    "tokyo",  "beijing", "hanoi", "bangkok", "sydney", "lima"};
const std::vector<std::string> kOovLocations = {
    "berlin", "dublin", "cairo",  "nairobi", "oslo",   "prague",
    "vienna", "lisbon", "toronto", "boston", "manila", "athens"};

std::string cell_key(const std::string& c, const std::string& l,
                     const std::string& p) {
  return c + '\x1f' + l + '\x1f' + p;
}

}  // namespace

const std::vector<std::string>& cuisine_pool(bool oov) {
  return oov ? kOovCuisines : kCuisines;
}

const std::vector<std::string>& location_pool(bool oov) {
  return oov ? kOovLocations : kLocations;
}

std::string number_word(int n) {
  static const std::array<const char*, 21> kWords = {
      "zero",    "one",     "two",       "three",    "four",
      "five",    "six",     "seven",     "eight",    "nine",
      "ten",     "eleven",  "twelve",    "thirteen", "fourteen",
      "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
      "twenty"};
  if (n < 1 || n > 20) {
    throw ConfigError("party size " + std::to_string(n) +
                      " outside the supported range 1..20");
  }
  return kWords[static_cast<std::size_t>(n)];
}

void KBConfig::validate() const {
  const auto pool = static_cast<int>(kCuisines.size());
  if (n_cuisines < 1 || n_cuisines > pool) {
    throw ConfigError("n_cuisines must be in 1.." + std::to_string(pool));
  }
  if (n_locations < 1 || n_locations > static_cast<int>(kLocations.size())) {
    throw ConfigError("n_locations must be in 1.." +
                      std::to_string(kLocations.size()));
  }
  if (price_ranges.empty()) throw ConfigError("price_ranges is empty");
  std::set<std::string> seen;
  for (const auto& p : price_ranges) {
    if (p.empty() || tokenize(p).size() != 1) {
      throw ConfigError("price range '" + p + "' must be a single token");
    }
    if (!seen.insert(p).second) throw ConfigError("duplicate price " + p);
  }
  if (rating_max < rating_min) throw ConfigError("rating interval is empty");
  if (rating_min < 0) throw ConfigError("ratings must be nonnegative");
  if (party_sizes.empty()) throw ConfigError("party_sizes is empty");
  std::set<int> sizes;
  for (int s : party_sizes) {
    number_word(s);
    if (!sizes.insert(s).second) throw ConfigError("duplicate party size");
  }
  if (allow_rating_ties && restaurants_per_cell() < 2) {
    throw ConfigError("rating ties need at least two rating slots per cell");
  }
}

std::string Restaurant::value_of(Relation relation) const {
  switch (relation) {
    case Relation::kCuisine:
      return cuisine;
    case Relation::kLocation:
      return location;
    case Relation::kPrice:
      return price;
    case Relation::kRating:
      return std::to_string(rating);
    case Relation::kPhone:
      return phone;
    case Relation::kAddress:
      return address;
    case Relation::kNumber:
      return number;
  }
  return {};
}

const std::vector<std::string>& KnowledgeBase::values(Slot slot) const {
  switch (slot) {
    case Slot::kCuisine:
      return cuisines_;
    case Slot::kLocation:
      return locations_;
    case Slot::kPeople:
      return party_sizes_;
    case Slot::kPrice:
      return prices_;
  }
  return cuisines_;
}

bool KnowledgeBase::has_value(Slot slot, const std::string& value) const {
  const auto& v = values(slot);
  return std::find(v.begin(), v.end(), value) != v.end();
}

std::vector<std::size_t> KnowledgeBase::cell(const std::string& cuisine,
                                             const std::string& location,
                                             const std::string& price) const {
  auto it = cells_.find(cell_key(cuisine, location, price));
  if (it == cells_.end()) return {};
  return it->second;
}

const Restaurant* KnowledgeBase::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : &restaurants_[it->second];
}

std::vector<KbFact> KnowledgeBase::facts_for(std::size_t restaurant) const {
  const Restaurant& r = restaurants_.at(restaurant);
  std::vector<KbFact> out;
  out.reserve(kNumRelations);
  for (Relation rel : kAllRelations) {
    out.push_back(KbFact{r.name, rel, r.value_of(rel)});
  }
  return out;
}

std::vector<KbFact> KnowledgeBase::facts() const {
  std::vector<KbFact> out;
  out.reserve(num_facts());
  for (std::size_t i = 0; i < restaurants_.size(); ++i) {
    auto f = facts_for(i);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

std::string KnowledgeBase::to_text() const {
  std::ostringstream out;
  for (const auto& f : facts()) {
    out << f.entity << ' ' << relation_token(f.relation) << ' ' << f.value
        << '\n';
  }
  return out.str();
}

KnowledgeBase generate_kb(const KBConfig& config, std::uint64_t seed) {
  config.validate();
  KnowledgeBase kb;
  kb.config_ = config;
  const auto& cpool = cuisine_pool(config.oov_mode);
  const auto& lpool = location_pool(config.oov_mode);
  kb.cuisines_.assign(cpool.begin(), cpool.begin() + config.n_cuisines);
  kb.locations_.assign(lpool.begin(), lpool.begin() + config.n_locations);
  kb.prices_ = config.price_ranges;
  for (int s : config.party_sizes) kb.party_sizes_.push_back(number_word(s));

  const int slots = config.restaurants_per_cell();
  for (const auto& cuisine : kb.cuisines_) {
    for (const auto& location : kb.locations_) {
      for (const auto& price : kb.prices_) {
        const std::string key = cell_key(cuisine, location, price);
        Rng rng = Rng::stream(seed, "kb/cell/" + key);
        std::vector<int> ratings(static_cast<std::size_t>(slots));
        if (config.allow_rating_ties) {
          for (auto& r : ratings) {
            r = rng.uniform_int(config.rating_min, config.rating_max);
          }
          // Force at least one shared rating inside the cell.
          const std::size_t a = rng.uniform_index(ratings.size());
          std::size_t b = rng.uniform_index(ratings.size() - 1);
          if (b >= a) ++b;
          ratings[b] = ratings[a];
        } else {
          for (int k = 0; k < slots; ++k) ratings[k] = config.rating_min + k;
        }
        std::unordered_map<std::string, int> dup;
        for (int rating : ratings) {
          Restaurant r;
          r.cuisine = cuisine;
          r.location = location;
          r.price = price;
          r.rating = rating;
          std::string base = "resto_" + location + "_" + price + "_" +
                             cuisine + "_" + std::to_string(rating) + "stars";
          const int n = ++dup[base];
          r.name = n == 1 ? base : base + "_" + std::to_string(n);
          r.phone = r.name + "_phone";
          r.address = r.name + "_address";
          r.number = kb.party_sizes_[rng.uniform_index(kb.party_sizes_.size())];
          kb.by_name_.emplace(r.name, kb.restaurants_.size());
          kb.cells_[key].push_back(kb.restaurants_.size());
          kb.restaurants_.push_back(std::move(r));
        }
      }
    }
  }
  return kb;
}

std::vector<KbFact> parse_kb_text(const std::string& text,
                                  const std::string& source) {
  std::vector<KbFact> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = tokenize(line);
    if (tok.empty()) continue;
    if (tok.size() != 3) {
      throw ParseError(source, lineno, "expected '<restaurant> <relation> <value>'");
    }
    auto rel = parse_relation_token(tok[1]);
    if (!rel) throw ParseError(source, lineno, "unknown relation " + tok[1]);
    out.push_back(KbFact{tok[0], *rel, tok[2]});
  }
  return out;
}

}  // namespace maskmem
