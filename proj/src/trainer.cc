#include "maskmem/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "maskmem/error.h"

namespace maskmem {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kMemN2N: return "memn2n";
    case ModelKind::kAllAnswers: return "memn2n_all_answers";
    case ModelKind::kMaskMemN2N: return "mask_memn2n";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "memn2n") return ModelKind::kMemN2N;
  if (text == "memn2n_all_answers") return ModelKind::kAllAnswers;
  if (text == "mask_memn2n") return ModelKind::kMaskMemN2N;
  throw ConfigError("unknown model '" + std::string(text) +
                    "' (memn2n, memn2n_all_answers, mask_memn2n)");
}

void RLConfig::validate() const {
  if (rl_epochs < 1) throw ConfigError("rl_epochs must be >= 1");
  if (reward_correct < 0 || entropy_start < 0 || entropy_end < 0 ||
      l2_coeff < 0) {
    throw ConfigError("RL coefficients must be non-negative");
  }
}

double entropy_coeff(const RLConfig& config, int epoch) {
  if (config.no_entropy) return 0.0;
  if (config.rl_epochs <= 1) return config.entropy_start;
  const double t = std::clamp(
      static_cast<double>(epoch) / static_cast<double>(config.rl_epochs - 1),
      0.0, 1.0);
  return config.entropy_start + t * (config.entropy_end - config.entropy_start);
}

int rl_sample_action(const Vector& logits, Rng& rng, double* log_prob) {
  if (logits.size() == 0) throw std::invalid_argument("no actions to sample");
  if (!logits.allFinite()) throw NumericError("non-finite logits");
  const Vector lp = log_softmax(logits);
  const double r = rng.uniform01();
  double acc = 0.0;
  Eigen::Index a = logits.size() - 1;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    acc += std::exp(lp[i]);
    if (r < acc) {
      a = i;
      break;
    }
  }
  if (log_prob) *log_prob = lp[a];
  return static_cast<int>(a);
}

namespace {

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed,
                                        int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::stream(seed, "batch", static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), rng.engine());
  return order;
}

MaskMode train_mask_mode(const MemN2N& model, ModelKind kind) {
  if (kind != ModelKind::kMaskMemN2N) return MaskMode::kNone;
  return model.mask_options().unit_mask ? MaskMode::kUnit : MaskMode::kSupervised;
}

}  // namespace

MaskMode eval_mask_mode(ModelKind kind) {
  return kind == ModelKind::kMaskMemN2N ? MaskMode::kReinforce : MaskMode::kNone;
}

void shape_gradients(ModelParams& grads, std::size_t batch,
                     const TrainingSchedule& schedule) {
  if (schedule.reduction == BatchReduction::kSum) {
    const double n = static_cast<double>(batch);
    grads.for_each([&](const std::string&, Matrix& m) { m *= n; });
  }
  if (schedule.max_grad_norm > 0) {
    double sq = 0.0;
    grads.for_each([&](const std::string&, const Matrix& m) { sq += m.squaredNorm(); });
    const double norm = std::sqrt(sq);
    if (norm > schedule.max_grad_norm) {
      const double k = schedule.max_grad_norm / norm;
      grads.for_each([&](const std::string&, Matrix& m) { m *= k; });
    }
  }
}

EpochStats sl_train_epoch(const MemN2N& model, ModelParams& params,
                          const TrainData& data, ModelKind kind,
                          double l2_coeff, double lr,
                          const TrainingSchedule& schedule, std::uint64_t seed,
                          int epoch) {
  const std::size_t batch_size = schedule.batch_size;
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  const auto order = shuffled_order(data.train.size(), seed, epoch);
  const MaskMode mode = train_mask_mode(model, kind);
  const double coeff = kind == ModelKind::kMaskMemN2N ? l2_coeff : 0.0;
  EpochStats stats;
  std::vector<const FeaturizedExample*> batch;
  std::vector<int> gold;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batch.clear();
    gold.clear();
    for (std::size_t i = start; i < end; ++i) {
      batch.push_back(&data.train[order[i]]);
      gold.push_back(batch.back()->gold);
    }
    const BatchTrace trace =
        model.forward(params, batch, *data.candidates, mode, coeff);
    double loss = 0.0;
    const Matrix dlogits = kind == ModelKind::kAllAnswers
                               ? all_answers_grad(trace.logits, batch, &loss)
                               : xent_grad(trace.logits, gold, &loss);
    double pre = 0.0;
    for (const auto& t : trace.examples) pre += t.pretrain_loss;
    ModelParams grads = model.backward(params, trace, dlogits);
    shape_gradients(grads, batch.size(), schedule);
    sgd_step(params, grads, lr);
    const auto n = static_cast<double>(batch.size());
    stats.loss += loss * n + pre;
    stats.pretrain_loss += pre;
    stats.examples += batch.size();
  }
  if (stats.examples > 0) {
    stats.loss /= static_cast<double>(stats.examples);
    stats.pretrain_loss /= static_cast<double>(stats.examples);
  }
  return stats;
}

EpochStats reinforce_step(const MemN2N& model, ModelParams& params,
                          std::span<const FeaturizedExample* const> batch,
                          std::span<const std::size_t> example_ids,
                          const std::vector<TokenIds>& candidates,
                          const RLConfig& config, double beta, double lr,
                          const TrainingSchedule& schedule, std::uint64_t seed,
                          int epoch) {
  const BatchTrace trace =
      model.forward(params, batch, candidates, MaskMode::kReinforce);
  std::vector<int> actions(batch.size());
  std::vector<double> rewards(batch.size());
  EpochStats stats;
  const std::string stream = "rl/" + std::to_string(epoch);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    Rng rng = Rng::stream(seed, stream, example_ids[b]);
    actions[b] = rl_sample_action(
        trace.logits.row(static_cast<Eigen::Index>(b)).transpose(), rng);
    rewards[b] = batch[b]->is_valid(actions[b]) ? config.reward_correct
                                                : config.reward_incorrect;
    stats.mean_reward += rewards[b];
  }
  double surrogate = 0.0;
  const Matrix dlogits =
      reinforce_grad(trace.logits, actions, rewards, beta, &surrogate);
  ModelParams grads = model.backward(params, trace, dlogits);
  shape_gradients(grads, batch.size(), schedule);
  sgd_step(params, grads, lr, [](std::string_view name) {
    return is_sl_head_param(name);
  });
  stats.examples = batch.size();
  stats.loss = -surrogate;
  stats.mean_reward /= static_cast<double>(batch.size());
  return stats;
}

EpochStats rl_train_epoch(const MemN2N& model, ModelParams& params,
                          const TrainData& data, const RLConfig& config,
                          double lr, const TrainingSchedule& schedule,
                          std::uint64_t seed, int epoch) {
  const std::size_t batch_size = schedule.batch_size;
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  const auto order = shuffled_order(data.train.size(), seed ^ 0x5EEDULL, epoch);
  const double beta = entropy_coeff(config, epoch);
  EpochStats total;
  std::vector<const FeaturizedExample*> batch;
  std::vector<std::size_t> ids;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batch.clear();
    ids.clear();
    for (std::size_t i = start; i < end; ++i) {
      batch.push_back(&data.train[order[i]]);
      ids.push_back(order[i]);
    }
    const EpochStats s = reinforce_step(model, params, batch, ids,
                                        *data.candidates, config, beta, lr,
                                        schedule, seed, epoch);
    const auto n = static_cast<double>(s.examples);
    total.loss += s.loss * n;
    total.mean_reward += s.mean_reward * n;
    total.examples += s.examples;
  }
  if (total.examples > 0) {
    total.loss /= static_cast<double>(total.examples);
    total.mean_reward /= static_cast<double>(total.examples);
  }
  return total;
}

std::string run_log_header() {
  return "epoch\tphase\tlr\tbeta\ttrain_loss\tval_per_turn\tval_per_dialog";
}

std::string format_epoch_log(const EpochLog& e) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d\t%s\t%.6g\t%.6g\t%.6f\t%.2f\t%.2f",
                e.epoch, e.phase.c_str(), e.lr, e.beta, e.train_loss,
                e.val_per_turn, e.val_per_dialog);
  return buf;
}

TrainingSchedule TrainingSchedule::for_rl() const {
  TrainingSchedule s = *this;
  s.reduction = rl_reduction;
  s.base_lr = rl_base_lr;
  return s;
}

namespace {

double schedule_lr(const TrainingSchedule& s, int epoch) {
  OptimizerState opt;
  opt.epoch = epoch;
  opt.base_lr = s.base_lr;
  opt.anneal_ratio = s.anneal_ratio;
  opt.anneal_period = s.anneal_period;
  return opt.learning_rate();
}

void record(PhaseResult& result, const EpochLog& log, const Metrics& val,
            const ModelParams& params, int epoch) {
  result.log.push_back(log);
  if (result.best_epoch == -1 && result.best_val.n_turns == 0) {
    result.best_val = val;
    result.best_epoch = epoch;
    result.params = params;
    return;
  }
  if (val.per_turn > result.best_val.per_turn) {
    result.best_val = val;
    result.best_epoch = epoch;
    result.params = params;
  }
}

}  // namespace

PhaseResult train_supervised(const MemN2N& model, ModelParams params,
                             const TrainData& data, ModelKind kind,
                             const TrainingSchedule& schedule,
                             const RLConfig& rl, std::uint64_t seed,
                             const PhaseOptions& options) {
  PhaseResult result;
  if (options.resume_best) result = *options.resume_best;
  const double l2 = rl.no_l2_pretrain ? 0.0 : rl.l2_coeff;
  for (int epoch = options.first_epoch; epoch < schedule.sl_epochs; ++epoch) {
    const double lr = schedule_lr(schedule, epoch);
    const EpochStats stats = sl_train_epoch(model, params, data, kind, l2, lr,
                                            schedule, seed, epoch);
    const Metrics val = evaluate(model, params, data.val, *data.candidates,
                                 eval_mask_mode(kind));
    EpochLog log{epoch, "sl", lr, 0.0, stats.loss, val.per_turn, val.per_dialog};
    record(result, log, val, params, epoch);
    if (options.progress) options.progress(format_epoch_log(log));
    if (options.on_epoch) options.on_epoch(log, params, result);
  }
  if (result.best_val.n_turns == 0) result.params = std::move(params);
  return result;
}

PhaseResult train_reinforce(const MemN2N& model, ModelParams start,
                            const TrainData& data,
                            const TrainingSchedule& schedule,
                            const RLConfig& rl, std::uint64_t seed,
                            const PhaseOptions& options) {
  rl.validate();
  PhaseResult result;
  if (options.resume_best) {
    result = *options.resume_best;
  } else {
    const Metrics val = evaluate(model, start, data.val, *data.candidates,
                                 MaskMode::kReinforce);
    result.best_val = val;
    result.best_epoch = -1;
    result.params = start;
  }
  ModelParams params = std::move(start);
  const TrainingSchedule rl_schedule = schedule.for_rl();
  for (int epoch = options.first_epoch; epoch < rl.rl_epochs; ++epoch) {
    const double lr = schedule_lr(rl_schedule, epoch);
    const double beta = entropy_coeff(rl, epoch);
    const EpochStats stats = rl_train_epoch(model, params, data, rl, lr,
                                            rl_schedule, seed, epoch);
    const Metrics val = evaluate(model, params, data.val, *data.candidates,
                                 MaskMode::kReinforce);
    EpochLog log{epoch, "rl", lr, beta, stats.loss, val.per_turn, val.per_dialog};
    record(result, log, val, params, epoch);
    if (options.progress) options.progress(format_epoch_log(log));
    if (options.on_epoch) options.on_epoch(log, params, result);
  }
  return result;
}

void reset_rl_head(const MemN2N& model, ModelParams& params, std::uint64_t seed) {
  const ModelParams fresh = model.init_params(seed);
  params.for_each([&](const std::string& name, Matrix& m) {
    if (is_rl_head_param(name)) m = *fresh.find(name);
  });
}

TrainResult run_training(const MemN2N& model, const TrainData& data,
                         ModelKind kind, const TrainingSchedule& schedule,
                         const RLConfig& rl, std::uint64_t seed,
                         const PhaseOptions& options) {
  if (!data.candidates || data.train.empty() || data.val.empty()) {
    throw ContractViolation("training needs candidates, train and val examples");
  }
  TrainResult out;
  ModelParams params = model.init_params(seed);
  if (kind != ModelKind::kMaskMemN2N || !rl.rl_only) {
    PhaseResult sl = train_supervised(model, std::move(params), data, kind,
                                      schedule, rl, seed, options);
    out.log = sl.log;
    out.best_val = sl.best_val;
    out.phase = "sl";
    params = std::move(sl.params);
    if (kind != ModelKind::kMaskMemN2N) {
      out.params = std::move(params);
      return out;
    }
  }
  PhaseOptions rl_options;
  rl_options.progress = options.progress;
  rl_options.on_epoch = options.on_epoch;
  PhaseResult rlr =
      train_reinforce(model, std::move(params), data, schedule, rl, seed, rl_options);
  out.log.insert(out.log.end(), rlr.log.begin(), rlr.log.end());
  out.best_val = rlr.best_val;
  out.phase = rlr.best_epoch >= 0 || rl.rl_only ? "rl" : "sl";
  out.params = std::move(rlr.params);
  return out;
}

}  // namespace maskmem
