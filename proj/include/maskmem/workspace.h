#ifndef MASKMEM_WORKSPACE_H_
#define MASKMEM_WORKSPACE_H_

#include <memory>
#include <string>
#include <vector>

#include "maskmem/corpus.h"
#include "maskmem/featurize.h"
#include "maskmem/vocabulary.h"

namespace maskmem {

// Which generated corpus files to read: the 1000-dialog subsample or the
// full splits.
enum class DataVariant { kSubset, kFull };
DataVariant parse_data_variant(std::string_view text);
std::string to_string(DataVariant v);

// "<split>.txt" for the subsample, "<split>-full.txt" otherwise.
std::string split_file_name(const std::string& split, DataVariant variant);

struct DataFiles {
  Corpus train, val, test, test_oov;
  CandidateSet candidates;
  std::vector<KbFact> kb_facts;  // both knowledge bases
};

// Reads a directory written by `generate`. test_oov is left empty when the
// file is missing.
DataFiles load_data_dir(const std::string& dir, DataVariant variant,
                        DialogMode mode);

// The files `generate` would write for `full`, without touching disk.
DataFiles data_from_corpora(const Corpora& full, DataVariant variant,
                            std::size_t subset_size = kSubsetSize,
                            std::uint64_t subset_seed = kSubsetSeed);

// Writes the generate command's file set into `dir`.
void write_data_dir(const std::string& dir, const Corpora& full,
                    std::size_t subset_size = kSubsetSize,
                    std::uint64_t subset_seed = kSubsetSeed);

// Featurized splits sharing one vocabulary. The OOV split is scored against
// the candidate set extended with its own utterances. Not movable: the
// featurizers point into it.
struct PreparedData {
  Vocabulary vocab;
  CandidateSet candidates;
  CandidateSet oov_candidates;
  std::unique_ptr<Featurizer> featurizer;
  std::unique_ptr<Featurizer> oov_featurizer;
  std::vector<FeaturizedExample> train, val, test, test_oov;

  PreparedData() = default;
  PreparedData(const PreparedData&) = delete;
  PreparedData& operator=(const PreparedData&) = delete;

  const std::vector<TokenIds>& candidate_ids() const {
    return featurizer->candidate_ids();
  }
  const std::vector<TokenIds>& oov_candidate_ids() const {
    return oov_featurizer->candidate_ids();
  }
};

// `vocab` defaults to one built from the training corpus; pass the
// checkpoint's vocabulary when evaluating a trained model.
std::unique_ptr<PreparedData> prepare_data(const DataFiles& files,
                                           const FeaturizeOptions& options,
                                           const Vocabulary* vocab = nullptr);

}  // namespace maskmem

#endif  // MASKMEM_WORKSPACE_H_
