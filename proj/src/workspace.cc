#include "maskmem/workspace.h"

#include <filesystem>

#include "maskmem/error.h"

namespace maskmem {

namespace fs = std::filesystem;

DataVariant parse_data_variant(std::string_view text) {
  if (text == "1000" || text == "subset") return DataVariant::kSubset;
  if (text == "full") return DataVariant::kFull;
  throw ConfigError("unknown data variant '" + std::string(text) +
                    "' (1000 or full)");
}

std::string to_string(DataVariant v) {
  return v == DataVariant::kSubset ? "1000" : "full";
}

std::string split_file_name(const std::string& split, DataVariant variant) {
  return variant == DataVariant::kSubset ? split + ".txt" : split + "-full.txt";
}

DataFiles load_data_dir(const std::string& dir, DataVariant variant,
                        DialogMode mode) {
  DataFiles f;
  auto path = [&](const std::string& split) {
    return (fs::path(dir) / split_file_name(split, variant)).string();
  };
  f.train = parse_dialog_file(path("train"), mode);
  f.val = parse_dialog_file(path("val"), mode);
  f.test = parse_dialog_file(path("test"), mode);
  if (fs::exists(path("test_oov"))) {
    f.test_oov = parse_dialog_file(path("test_oov"), mode);
  }
  f.candidates = CandidateSet::load((fs::path(dir) / "candidates.txt").string());
  const auto kb_path = (fs::path(dir) / "kb.txt").string();
  f.kb_facts = parse_kb_text(read_text_file(kb_path), kb_path);
  return f;
}

DataFiles data_from_corpora(const Corpora& full, DataVariant variant,
                            std::size_t subset_size, std::uint64_t subset_seed) {
  DataFiles f;
  auto pick = [&](const Corpus& c) {
    if (variant == DataVariant::kFull) return c;
    return sample_subset(c, std::min(subset_size, c.size()), subset_seed);
  };
  f.train = pick(full.train);
  f.val = pick(full.val);
  f.test = pick(full.test);
  f.test_oov = pick(full.test_oov);
  f.candidates = CandidateSet::from_corpora({&full.train, &full.val, &full.test});
  f.kb_facts = full.kb.facts();
  const auto oov = full.oov_kb.facts();
  f.kb_facts.insert(f.kb_facts.end(), oov.begin(), oov.end());
  return f;
}

void write_data_dir(const std::string& dir, const Corpora& full,
                    std::size_t subset_size, std::uint64_t subset_seed) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const std::pair<const char*, const Corpus*> splits[] = {
      {"train", &full.train},
      {"val", &full.val},
      {"test", &full.test},
      {"test_oov", &full.test_oov}};
  for (const auto& [name, corpus] : splits) {
    emit_corpus_file(*corpus,
                     (fs::path(dir) / split_file_name(name, DataVariant::kFull)).string());
    const std::size_t n = std::min(subset_size, corpus->size());
    emit_corpus_file(sample_subset(*corpus, n, subset_seed),
                     (fs::path(dir) / split_file_name(name, DataVariant::kSubset)).string());
  }
  const auto cands = CandidateSet::from_corpora({&full.train, &full.val, &full.test});
  write_text_file((fs::path(dir) / "candidates.txt").string(), cands.to_text());
  write_text_file((fs::path(dir) / "kb.txt").string(),
                  full.kb.to_text() + full.oov_kb.to_text());
}

std::unique_ptr<PreparedData> prepare_data(const DataFiles& files,
                                           const FeaturizeOptions& options,
                                           const Vocabulary* vocab) {
  auto p = std::make_unique<PreparedData>();
  p->candidates = files.candidates;
  p->vocab = vocab ? *vocab : Vocabulary::build(files.train, p->candidates);
  p->oov_candidates = p->candidates.extended_with(files.test_oov);
  const auto lexicon = EntityLexicon::from_facts(files.kb_facts);
  p->featurizer =
      std::make_unique<Featurizer>(p->vocab, p->candidates, lexicon, options);
  p->oov_featurizer =
      std::make_unique<Featurizer>(p->vocab, p->oov_candidates, lexicon, options);
  p->train = p->featurizer->make_examples(files.train);
  p->val = p->featurizer->make_examples(files.val);
  p->test = p->featurizer->make_examples(files.test);
  if (!files.test_oov.empty()) {
    p->test_oov = p->oov_featurizer->make_examples(files.test_oov);
  }
  return p;
}

}  // namespace maskmem
