#ifndef MASKMEM_MODEL_H_
#define MASKMEM_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "maskmem/featurize.h"

namespace maskmem {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// How the story embeddings are shared across hops. kShared reuses one A and
// one C for every hop; kAdjacent uses hops + 1 tables with C_k = A_{k+1}.
enum class WeightTying { kShared, kAdjacent };

struct ModelConfig {
  int vocab_size = 0;
  int embedding_size = 20;
  int hops = 3;
  int memory_capacity = 250;
  WeightTying tying = WeightTying::kShared;
  bool position_encoding = true;  // false: bag of words
  bool temporal = true;
  double init_stddev = 0.1;
};

// Options for the mask heads.
struct MaskOptions {
  // RL head gets its own copy of W_s instead of sharing the SL head's.
  bool untie_state = false;
  // RL mask = sigmoid(W_r s + b_rl), without the W_s term.
  bool collapsed = false;
  // The L2 pre-training term also moves W_s and the encoder; false confines
  // it to the RL-head tensors.
  bool pretrain_reaches_encoder = true;
  // Train with the mask fixed to ones (MaskMode::kUnit).
  bool unit_mask = false;
};

// Every trainable tensor. Vocabulary-indexed tables keep row 0 (padding)
// pinned at zero. Biases are d x 1.
struct ModelParams {
  Matrix query_emb;                // B
  std::vector<Matrix> memory_emb;  // A, C (or one per hop boundary)
  std::vector<Matrix> temporal;    // T_A, T_C (same layout as memory_emb)
  Matrix cand_emb;                 // candidate word embeddings
  Matrix cand_proj;                // W_cand, d x d
  Matrix mask_state;               // W_s
  Matrix mask_answer;              // W_a
  Matrix mask_rl;                  // W_r
  Matrix mask_state_rl;            // W_s of the RL head when untied, else 0x0
  Matrix sl_bias;                  // b_sl
  Matrix rl_bias;                  // b_rl

  void for_each(const std::function<void(const std::string&, Matrix&)>& fn);
  void for_each(
      const std::function<void(const std::string&, const Matrix&)>& fn) const;
  Matrix* find(std::string_view name);
  const Matrix* find(std::string_view name) const;

  ModelParams zeros_like() const;
  bool all_finite() const;
  std::size_t num_values() const;
};

// Parameters of the SL mask head; frozen during the RL phase.
bool is_sl_head_param(std::string_view name);
// Parameters only the RL mask head uses.
bool is_rl_head_param(std::string_view name);

enum class MaskMode {
  kNone,        // plain memN2N: s' = s
  kUnit,        // mask fixed to ones
  kSupervised,  // sigmoid(W_s s + W_a a + b_sl), a = gold candidate features
  kReinforce,   // sigmoid(W_s s + W_r s + b_rl)
};

struct HopTrace {
  Vector u;  // controller before the hop
  Vector p;  // attention
  Vector o;  // read-out
};

struct ExampleTrace {
  const FeaturizedExample* example = nullptr;
  std::vector<TokenIds> memories;   // including the sentinel when empty
  std::vector<Matrix> repr;         // per story table, M x d
  std::vector<HopTrace> hops;
  Vector state;                     // s
  Vector mask;                      // m (ones for kNone)
  Vector masked;                    // s'
  Vector scoring;                   // W_cand^T s'
  Vector pretrain_mask;             // RL-head mask while pre-training
  double pretrain_loss = 0.0;
};

// Forward pass over a batch, everything backward() needs.
struct BatchTrace {
  MaskMode mode = MaskMode::kNone;
  double pretrain_coeff = 0.0;
  const std::vector<TokenIds>* candidates = nullptr;  // must outlive the trace
  Matrix cand_features;  // n_cand x d, without match-type additions
  Matrix logits;         // batch x n_cand
  std::vector<ExampleTrace> examples;
};

class MemN2N {
 public:
  MemN2N(ModelConfig config, MaskOptions mask_options = {});

  const ModelConfig& config() const { return config_; }
  const MaskOptions& mask_options() const { return mask_options_; }
  int num_tables() const;
  int input_table(int hop) const;
  int output_table(int hop) const;

  // Gaussian(0, init_stddev) from per-tensor substreams of `seed`, so a
  // tensor's initial value does not depend on which others exist.
  ModelParams init_params(std::uint64_t seed) const;

  // Position-encoding weights for a sentence of length J (J x d).
  const Matrix& position_weights(std::size_t length) const;

  // Sentence vector sum_j l_j * table[w_j].
  Vector embed(const Matrix& table, const TokenIds& tokens) const;
  // Candidate features, one row per candidate.
  Matrix candidate_features(const ModelParams& params,
                            const std::vector<TokenIds>& candidates) const;

  // s for one example; fills the encoder part of `trace`.
  Vector encode_state(const ModelParams& params, const FeaturizedExample& ex,
                      ExampleTrace* trace = nullptr) const;

  // pretrain_coeff > 0 (kSupervised only) also computes the RL-head mask
  // and the L2 pre-training term against the detached SL mask.
  BatchTrace forward(const ModelParams& params,
                     std::span<const FeaturizedExample* const> batch,
                     const std::vector<TokenIds>& candidates, MaskMode mode,
                     double pretrain_coeff = 0.0) const;

  // Gradients of sum_b <dlogits_b, logits_b> + pretrain terms. dlogits must
  // already carry any batch averaging; the pre-training term is averaged
  // over the batch here.
  ModelParams backward(const ModelParams& params, const BatchTrace& trace,
                       const Matrix& dlogits) const;

  // Greedy prediction (lowest id on ties) for one example.
  int predict(const ModelParams& params, const FeaturizedExample& ex,
              const Matrix& cand_features, MaskMode mode) const;
  Vector logits(const ModelParams& params, const FeaturizedExample& ex,
                const Matrix& cand_features, MaskMode mode) const;

  Vector sl_mask(const ModelParams& params, const Vector& state,
                 const Vector& answer) const;
  Vector rl_mask(const ModelParams& params, const Vector& state) const;

 private:
  Vector rl_preactivation(const ModelParams& params, const Vector& state) const;

  ModelConfig config_;
  MaskOptions mask_options_;
  std::vector<Matrix> pe_cache_;
};

// p_i = exp(u.a_i) / sum_j exp(u.a_j), with max subtraction. Throws
// NumericError on non-finite input.
Vector attention(const Vector& u, const Matrix& memories);
Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);
Vector sigmoid(const Vector& x);
Vector apply_mask(const Vector& mask, const Vector& state);

// logits_i = s^T W_cand f_i plus the type-token embedding for every match
// flag of candidate i.
Vector score_candidates(const ModelParams& params, const Vector& state,
                        const Matrix& cand_features,
                        std::span<const MatchFlag> match);

double xent_loss(const Vector& logits, int gold);
double all_answers_loss(const Vector& logits, std::span<const int> valid);
double mask_pretrain_loss(const Vector& rl_mask, const Vector& sl_mask,
                          double coeff = 0.1);
double entropy(const Vector& probs);

// Per-row gradients of the batch-mean losses w.r.t. the logits.
Matrix xent_grad(const Matrix& logits, std::span<const int> gold,
                 double* mean_loss = nullptr);
Matrix all_answers_grad(const Matrix& logits,
                        std::span<const FeaturizedExample* const> batch,
                        double* mean_loss = nullptr);
// Gradient of -(1/B) sum_b [r_b log pi(a_b) + beta H(pi_b)].
Matrix reinforce_grad(const Matrix& logits, std::span<const int> actions,
                      std::span<const double> rewards, double entropy_coeff,
                      double* mean_surrogate = nullptr);

struct OptimizerState {
  int epoch = 0;
  double base_lr = 0.01;
  double anneal_ratio = 0.5;
  int anneal_period = 25;

  // base * ratio^floor(epoch / period)
  double learning_rate() const;
};

// p <- p - lr * g for every tensor `frozen` does not reject. Throws
// NumericError, leaving params untouched, when any gradient is non-finite.
void sgd_step(ModelParams& params, const ModelParams& grads, double lr,
              const std::function<bool(std::string_view)>& frozen = {});

}  // namespace maskmem

#endif  // MASKMEM_MODEL_H_
