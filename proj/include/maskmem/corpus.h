#ifndef MASKMEM_CORPUS_H_
#define MASKMEM_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "maskmem/dialog.h"
#include "maskmem/kb.h"
#include "maskmem/patterns.h"
#include "maskmem/simulator.h"

namespace maskmem {

struct CorpusConfig {
  KBConfig kb;
  DialogMode mode = DialogMode::kPermuted;
  double tie_probability = 0.5;
  double update_probability = 0.5;
  const PatternSet* patterns = nullptr;  // null: built-in set
};

struct SplitSizes {
  std::size_t train = 11000;
  std::size_t val = 11000;
  std::size_t test = 11000;
  std::size_t test_oov = 11000;
};

struct Corpora {
  KnowledgeBase kb;
  KnowledgeBase oov_kb;
  Corpus train;
  Corpus val;
  Corpus test;
  Corpus test_oov;
};

inline constexpr std::uint64_t kSubsetSeed = 599;
inline constexpr std::size_t kSubsetSize = 1000;

// Pure function of (config, sizes, seed). Dialog i of split "x" draws from
// its own stream, so the splits can be produced in any order.
Corpora generate_corpus(const CorpusConfig& config, const SplitSizes& sizes,
                        std::uint64_t seed);

// Uniform sample without replacement; kept dialogs stay in input order.
Corpus sample_subset(const Corpus& dialogs, std::size_t n = kSubsetSize,
                     std::uint64_t seed = kSubsetSeed);

// Corpus text format: "<i> <user>\t<gold>|<alt>|..." per turn,
// "<i> <restaurant> <relation> <value>" per KB fact, a blank line after each
// dialog, indices restarting at 1.
std::string emit_corpus(const Corpus& dialogs);
void emit_corpus_file(const Corpus& dialogs, const std::string& path);

Corpus parse_corpus(std::string_view text, DialogMode mode,
                    const std::string& source = "<corpus>");
Corpus parse_dialog_file(const std::string& path, DialogMode mode);

// Throws DatasetError when a system turn's answer set is not a singleton.
void check_all_singleton(const Corpus& dialogs, const std::string& name);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace maskmem

#endif  // MASKMEM_CORPUS_H_
