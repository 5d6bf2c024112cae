#ifndef MASKMEM_PATTERNS_H_
#define MASKMEM_PATTERNS_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "maskmem/dialog.h"
#include "maskmem/rng.h"

namespace maskmem {

// Placeholder bindings for one template expansion.
using Bindings = std::map<std::string, std::string, std::less<>>;

// The surface patterns of the simulator, loaded from the format documented
// in data/patterns.txt.
class PatternSet {
 public:
  static PatternSet parse(std::string_view text, const std::string& source);
  static PatternSet load(const std::string& path);
  // The compiled-in copy of data/patterns.txt.
  static const PatternSet& defaults();
  static std::string_view default_text();

  // The single template of a system act, expanded.
  Utterance system(std::string_view key, const Bindings& bindings) const;
  // A uniformly chosen alternative of a user key, expanded.
  Utterance user(std::string_view key, const Bindings& bindings,
                 Rng& rng) const;

  const std::vector<std::string>& user_alternatives(std::string_view key) const;
  std::size_t num_system_patterns() const { return system_.size(); }
  std::size_t num_user_patterns() const;

 private:
  std::map<std::string, std::string, std::less<>> system_;
  std::map<std::string, std::vector<std::string>, std::less<>> user_;
};

// Replaces every "{name}" in `pattern`; unknown placeholders throw.
std::string expand_template(std::string_view pattern, const Bindings& bindings);

}  // namespace maskmem

#endif  // MASKMEM_PATTERNS_H_
