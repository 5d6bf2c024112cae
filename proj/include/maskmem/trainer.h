#ifndef MASKMEM_TRAINER_H_
#define MASKMEM_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maskmem/evaluation.h"
#include "maskmem/model.h"
#include "maskmem/rng.h"

namespace maskmem {

enum class ModelKind { kMemN2N, kAllAnswers, kMaskMemN2N };
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct RLConfig {
  double reward_correct = 5.0;
  double reward_incorrect = -0.5;
  double entropy_start = 1e-5;
  double entropy_end = 0.0;
  int rl_epochs = 100;
  double l2_coeff = 0.1;
  bool no_entropy = false;
  bool no_l2_pretrain = false;
  bool rl_only = false;

  void validate() const;
};

enum class BatchReduction { kMean, kSum };

struct TrainingSchedule {
  int sl_epochs = 150;
  std::size_t batch_size = 32;
  BatchReduction reduction = BatchReduction::kMean;
  // Rescale the whole gradient to this global norm when it is larger;
  // 0 disables clipping.
  double max_grad_norm = 0.0;
  double base_lr = 0.01;
  double anneal_ratio = 0.5;
  int anneal_period = 25;
  // The REINFORCE phase restarts the annealing schedule with its own base
  // rate and reduction; clipping is shared.
  BatchReduction rl_reduction = BatchReduction::kMean;
  double rl_base_lr = 0.01;

  // The schedule the RL phase runs with.
  TrainingSchedule for_rl() const;
};

// Linear decay from entropy_start at t = 0 to entropy_end at
// t = rl_epochs - 1; zero when no_entropy is set.
double entropy_coeff(const RLConfig& config, int epoch);

// Samples from softmax(logits); returns the action and sets *log_prob.
int rl_sample_action(const Vector& logits, Rng& rng, double* log_prob = nullptr);

struct EpochStats {
  double loss = 0.0;           // mean training objective per example
  double pretrain_loss = 0.0;  // mean L2 mask term (SL phase of the mask model)
  double mean_reward = 0.0;    // RL phase
  std::size_t examples = 0;
};

// Everything a training loop reads; pointers must outlive the call.
struct TrainData {
  std::span<const FeaturizedExample> train;
  std::span<const FeaturizedExample> val;
  const std::vector<TokenIds>* candidates = nullptr;
};

// One supervised epoch with shuffled batches. kMemN2N and kMaskMemN2N use
// cross-entropy on the gold answer, kAllAnswers the multi-label loss. For
// kMaskMemN2N the SL mask is active and l2_coeff > 0 pre-trains the RL head.
EpochStats sl_train_epoch(const MemN2N& model, ModelParams& params,
                          const TrainData& data, ModelKind kind,
                          double l2_coeff, double lr,
                          const TrainingSchedule& schedule, std::uint64_t seed,
                          int epoch);

// One REINFORCE update on a batch; example_ids index the RL sampling
// substreams. The SL head is frozen.
EpochStats reinforce_step(const MemN2N& model, ModelParams& params,
                          std::span<const FeaturizedExample* const> batch,
                          std::span<const std::size_t> example_ids,
                          const std::vector<TokenIds>& candidates,
                          const RLConfig& config, double beta, double lr,
                          const TrainingSchedule& schedule, std::uint64_t seed,
                          int epoch);

EpochStats rl_train_epoch(const MemN2N& model, ModelParams& params,
                          const TrainData& data, const RLConfig& config,
                          double lr, const TrainingSchedule& schedule,
                          std::uint64_t seed, int epoch);

// Applies the schedule's batch reduction and clipping to batch-mean
// gradients, in place.
void shape_gradients(ModelParams& grads, std::size_t batch,
                     const TrainingSchedule& schedule);

struct EpochLog {
  int epoch = 0;
  std::string phase;  // "sl" or "rl"
  double lr = 0.0;
  double beta = 0.0;
  double train_loss = 0.0;
  double val_per_turn = 0.0;
  double val_per_dialog = 0.0;
};

std::string run_log_header();
std::string format_epoch_log(const EpochLog& e);

struct PhaseResult {
  ModelParams params;  // best by validation per-turn
  int best_epoch = -1;  // -1: the starting point was never beaten
  Metrics best_val;
  std::vector<EpochLog> log;
};

// Called after every epoch with the current (not best) parameters.
using EpochCallback =
    std::function<void(const EpochLog&, const ModelParams& current,
                       const PhaseResult& best_so_far)>;

struct PhaseOptions {
  int first_epoch = 0;  // resume point
  const PhaseResult* resume_best = nullptr;  // best so far when resuming
  EpochCallback on_epoch;
  std::function<void(const std::string&)> progress;  // one line per epoch
};

// Supervised phase with per-epoch validation; validation for the mask
// model uses the RL-mask path. Returns the best epoch's parameters.
PhaseResult train_supervised(const MemN2N& model, ModelParams params,
                             const TrainData& data, ModelKind kind,
                             const TrainingSchedule& schedule,
                             const RLConfig& rl, std::uint64_t seed,
                             const PhaseOptions& options = {});

// REINFORCE phase starting from `start`. The starting point competes in
// model selection.
PhaseResult train_reinforce(const MemN2N& model, ModelParams start,
                            const TrainData& data,
                            const TrainingSchedule& schedule,
                            const RLConfig& rl, std::uint64_t seed,
                            const PhaseOptions& options = {});

// Resets the RL-head tensors to their initial values for `seed`.
void reset_rl_head(const MemN2N& model, ModelParams& params, std::uint64_t seed);

// Mask mode used at evaluation time for a model kind.
MaskMode eval_mask_mode(ModelKind kind);

struct TrainResult {
  ModelParams params;
  Metrics best_val;
  std::string phase;  // phase of the selected parameters
  std::vector<EpochLog> log;
};

// Full orchestration: supervised phase (skipped for rl_only), then the RL
// phase for the mask model.
TrainResult run_training(const MemN2N& model, const TrainData& data,
                         ModelKind kind, const TrainingSchedule& schedule,
                         const RLConfig& rl, std::uint64_t seed,
                         const PhaseOptions& options = {});

}  // namespace maskmem

#endif  // MASKMEM_TRAINER_H_
