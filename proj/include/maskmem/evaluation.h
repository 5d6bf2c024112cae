#ifndef MASKMEM_EVALUATION_H_
#define MASKMEM_EVALUATION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maskmem/featurize.h"
#include "maskmem/model.h"

namespace maskmem {

struct Metrics {
  double per_turn = 0.0;    // percent
  double per_dialog = 0.0;  // percent
  std::size_t n_turns = 0;
  std::size_t n_dialogs = 0;
  std::string dataset;
  std::string model;
  std::string split;
  bool match_type = false;
  std::uint64_t seed = 0;
  std::string checkpoint_path;
};

bool is_correct(int predicted, std::span<const int> valid);

// One prediction per example; examples of a dialog share `dialog`. Throws
// ContractViolation on a count mismatch or an empty example list.
Metrics compute_metrics(std::span<const int> predictions,
                        std::span<const FeaturizedExample> examples);

// Greedy predictions with teacher-forced history.
std::vector<int> predict_all(const MemN2N& model, const ModelParams& params,
                             std::span<const FeaturizedExample> examples,
                             const std::vector<TokenIds>& candidates,
                             MaskMode mode);

Metrics evaluate(const MemN2N& model, const ModelParams& params,
                 std::span<const FeaturizedExample> examples,
                 const std::vector<TokenIds>& candidates, MaskMode mode);

struct RunResult {
  std::uint64_t seed = 0;
  Metrics validation;
  Metrics test;
  std::optional<Metrics> test_oov;
  std::string checkpoint_path;
};

// Highest validation per-turn; ties go to the lower seed. Throws
// std::invalid_argument on an empty list.
std::size_t select_best(std::span<const RunResult> runs);

// CSV with header dataset,model,match_type,split,per_turn,per_dialog,seed,
// checkpoint_path. Percentages rounded to one decimal.
std::string metrics_csv_header();
std::string metrics_csv_row(const Metrics& m);
std::vector<Metrics> parse_metrics_csv(const std::string& text);

// Human-readable grid: one row per (dataset, model), columns for
// {no match-type, + match-type} x {per-turn, per-dialog}. Missing cells
// print as an em dash placeholder.
std::string report_grid(std::span<const Metrics> results,
                        const std::string& split = "test");

}  // namespace maskmem

#endif  // MASKMEM_EVALUATION_H_
