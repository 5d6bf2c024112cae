#include "maskmem/model.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "maskmem/error.h"
#include "maskmem/rng.h"

namespace maskmem {

namespace {

constexpr std::size_t kMaxSentenceLength = 256;

const TokenIds& sentinel_memory() {
  static const TokenIds kSentinel{Vocabulary::kPad};
  return kSentinel;
}

std::string table_name(const char* prefix, const char* pair_first,
                        const char* pair_second, std::size_t n, std::size_t i) {
  if (n == 2) return i == 0 ? pair_first : pair_second;
  return prefix + std::to_string(i);
}

void zero_pad_row(Matrix& table) {
  if (table.rows() > 0) table.row(Vocabulary::kPad).setZero();
}

// Adds pe_j * g to table[w_j] for every word of a sentence.
void scatter(Matrix& table, const TokenIds& tokens, const Matrix& pe,
             const Eigen::Ref<const Eigen::RowVectorXd>& g) {
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    table.row(tokens[j]) += pe.row(static_cast<Eigen::Index>(j)).cwiseProduct(g);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelParams

void ModelParams::for_each(
    const std::function<void(const std::string&, Matrix&)>& fn) {
  fn("B", query_emb);
  for (std::size_t i = 0; i < memory_emb.size(); ++i) {
    fn(table_name("A", "A", "C", memory_emb.size(), i), memory_emb[i]);
  }
  for (std::size_t i = 0; i < temporal.size(); ++i) {
    fn(table_name("T", "TA", "TC", temporal.size(), i), temporal[i]);
  }
  fn("E", cand_emb);
  fn("W", cand_proj);
  fn("Ws", mask_state);
  fn("Wa", mask_answer);
  fn("Wr", mask_rl);
  if (mask_state_rl.size() > 0) fn("Ws_rl", mask_state_rl);
  fn("b_sl", sl_bias);
  fn("b_rl", rl_bias);
}

void ModelParams::for_each(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each(
      [&](const std::string& name, Matrix& m) { fn(name, m); });
}

Matrix* ModelParams::find(std::string_view name) {
  Matrix* found = nullptr;
  for_each([&](const std::string& n, Matrix& m) {
    if (n == name) found = &m;
  });
  return found;
}

const Matrix* ModelParams::find(std::string_view name) const {
  return const_cast<ModelParams*>(this)->find(name);
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.for_each([](const std::string&, Matrix& m) { m.setZero(); });
  return z;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, const Matrix& m) {
    ok = ok && m.allFinite();
  });
  return ok;
}

std::size_t ModelParams::num_values() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Matrix& m) {
    n += static_cast<std::size_t>(m.size());
  });
  return n;
}

bool is_sl_head_param(std::string_view name) {
  return name == "Wa" || name == "b_sl";
}

bool is_rl_head_param(std::string_view name) {
  return name == "Wr" || name == "b_rl" || name == "Ws_rl";
}

// ---------------------------------------------------------------------------
// Small numeric helpers

Vector softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

Vector log_softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return (logits.array() - lse).matrix();
}

Vector sigmoid(const Vector& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Vector apply_mask(const Vector& mask, const Vector& state) {
  if (mask.size() != state.size()) {
    throw std::invalid_argument("mask and state dimensions differ");
  }
  return mask.cwiseProduct(state);
}

Vector attention(const Vector& u, const Matrix& memories) {
  if (memories.rows() == 0) {
    throw std::invalid_argument("attention needs at least one memory");
  }
  if (!u.allFinite() || !memories.allFinite()) {
    throw NumericError("non-finite input to attention");
  }
  return softmax(memories * u);
}

double entropy(const Vector& probs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0) h -= probs[i] * std::log(probs[i]);
  }
  return h;
}

double xent_loss(const Vector& logits, int gold) {
  return -log_softmax(logits)[gold];
}

namespace {

constexpr double kBceFloor = 1e-12;

double bce(double logit, bool positive) {
  const double p = std::clamp(1.0 / (1.0 + std::exp(-logit)), kBceFloor,
                              1.0 - kBceFloor);
  return positive ? -std::log(p) : -std::log(1.0 - p);
}

double sigmoid1(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double all_answers_loss(const Vector& logits, std::span<const int> valid) {
  if (valid.empty()) throw std::invalid_argument("empty valid set");
  std::vector<bool> pos(static_cast<std::size_t>(logits.size()), false);
  for (int v : valid) pos.at(static_cast<std::size_t>(v)) = true;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    loss += bce(logits[i], pos[static_cast<std::size_t>(i)]);
  }
  return loss;
}

double mask_pretrain_loss(const Vector& rl_mask, const Vector& sl_mask,
                          double coeff) {
  return coeff * (rl_mask - sl_mask).squaredNorm();
}

Matrix xent_grad(const Matrix& logits, std::span<const int> gold,
                 double* mean_loss) {
  const auto batch = logits.rows();
  Matrix g(batch, logits.cols());
  double total = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Vector row = logits.row(b).transpose();
    const Vector lp = log_softmax(row);
    total -= lp[gold[b]];
    g.row(b) = lp.array().exp().matrix().transpose();
    g(b, gold[b]) -= 1.0;
  }
  g /= static_cast<double>(batch);
  if (mean_loss) *mean_loss = total / static_cast<double>(batch);
  return g;
}

Matrix all_answers_grad(const Matrix& logits,
                        std::span<const FeaturizedExample* const> batch,
                        double* mean_loss) {
  const auto n = logits.rows();
  Matrix g(n, logits.cols());
  double total = 0.0;
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto& valid = batch[static_cast<std::size_t>(b)]->valid;
    std::size_t next = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      bool pos = false;
      if (next < valid.size() && valid[next] == c) {
        pos = true;
        ++next;
      }
      const double x = logits(b, c);
      total += bce(x, pos);
      g(b, c) = sigmoid1(x) - (pos ? 1.0 : 0.0);
    }
  }
  g /= static_cast<double>(n);
  if (mean_loss) *mean_loss = total / static_cast<double>(n);
  return g;
}

Matrix reinforce_grad(const Matrix& logits, std::span<const int> actions,
                      std::span<const double> rewards, double entropy_coeff,
                      double* mean_surrogate) {
  const auto batch = logits.rows();
  Matrix g(batch, logits.cols());
  double total = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Vector lp = log_softmax(logits.row(b).transpose());
    const Vector pi = lp.array().exp().matrix();
    double h = 0.0;
    for (Eigen::Index c = 0; c < pi.size(); ++c) h -= pi[c] * lp[c];
    const double r = rewards[b];
    const int a = actions[b];
    total += r * lp[a] + entropy_coeff * h;
    // d/dl [-r log pi(a)] = -r (e_a - pi); d/dl [-beta H] = beta pi (log pi + H)
    g.row(b) = (r * pi.array() +
                entropy_coeff * pi.array() * (lp.array() + h))
                   .matrix()
                   .transpose();
    g(b, a) -= r;
  }
  g /= static_cast<double>(batch);
  if (mean_surrogate) *mean_surrogate = total / static_cast<double>(batch);
  return g;
}

Vector score_candidates(const ModelParams& params, const Vector& state,
                        const Matrix& cand_features,
                        std::span<const MatchFlag> match) {
  if (cand_features.rows() == 0) {
    throw std::invalid_argument("empty candidate set");
  }
  if (!state.allFinite()) throw NumericError("non-finite state");
  const Vector v = params.cand_proj.transpose() * state;
  Vector logits = cand_features * v;
  for (const auto& f : match) {
    logits[f.candidate] +=
        params.cand_emb.row(Vocabulary::type_id(f.type)).dot(v);
  }
  return logits;
}

// ---------------------------------------------------------------------------
// MemN2N

MemN2N::MemN2N(ModelConfig config, MaskOptions mask_options)
    : config_(config), mask_options_(mask_options) {
  if (config_.vocab_size < Vocabulary::kNumSpecial) {
    throw ConfigError("vocabulary smaller than the reserved tokens");
  }
  if (config_.embedding_size < 1 || config_.hops < 1 ||
      config_.memory_capacity < 1) {
    throw ConfigError("embedding_size, hops and memory_capacity must be >= 1");
  }
  if (mask_options_.untie_state && mask_options_.collapsed) {
    throw ConfigError("untied and collapsed RL heads are mutually exclusive");
  }
  const int d = config_.embedding_size;
  pe_cache_.resize(kMaxSentenceLength + 1);
  for (std::size_t j = 1; j <= kMaxSentenceLength; ++j) {
    const auto w = position_encode(static_cast<int>(j), d,
                                   !config_.position_encoding);
    Matrix m(static_cast<Eigen::Index>(j), d);
    for (std::size_t r = 0; r < j; ++r) {
      for (int k = 0; k < d; ++k) m(static_cast<Eigen::Index>(r), k) = w[r][k];
    }
    pe_cache_[j] = std::move(m);
  }
}

int MemN2N::num_tables() const {
  return config_.tying == WeightTying::kShared ? 2 : config_.hops + 1;
}

int MemN2N::input_table(int hop) const {
  return config_.tying == WeightTying::kShared ? 0 : hop;
}

int MemN2N::output_table(int hop) const {
  return config_.tying == WeightTying::kShared ? 1 : hop + 1;
}

ModelParams MemN2N::init_params(std::uint64_t seed) const {
  const int v = config_.vocab_size;
  const int d = config_.embedding_size;
  ModelParams p;
  p.query_emb = Matrix::Zero(v, d);
  p.memory_emb.assign(static_cast<std::size_t>(num_tables()), Matrix::Zero(v, d));
  p.temporal.assign(static_cast<std::size_t>(num_tables()),
                    Matrix::Zero(config_.memory_capacity, d));
  p.cand_emb = Matrix::Zero(v, d);
  p.cand_proj = Matrix::Zero(d, d);
  p.mask_state = Matrix::Zero(d, d);
  p.mask_answer = Matrix::Zero(d, d);
  p.mask_rl = Matrix::Zero(d, d);
  if (mask_options_.untie_state) p.mask_state_rl = Matrix::Zero(d, d);
  p.sl_bias = Matrix::Zero(d, 1);
  p.rl_bias = Matrix::Zero(d, 1);
  const double sd = config_.init_stddev;
  p.for_each([&](const std::string& name, Matrix& m) {
    Rng rng = Rng::stream(seed, "init/" + name);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, sd);
  });
  zero_pad_row(p.query_emb);
  zero_pad_row(p.cand_emb);
  for (auto& m : p.memory_emb) zero_pad_row(m);
  return p;
}

const Matrix& MemN2N::position_weights(std::size_t length) const {
  if (length == 0 || length > kMaxSentenceLength) {
    throw std::invalid_argument("sentence length " + std::to_string(length) +
                                " outside 1.." +
                                std::to_string(kMaxSentenceLength));
  }
  return pe_cache_[length];
}

Vector MemN2N::embed(const Matrix& table, const TokenIds& tokens) const {
  Vector out = Vector::Zero(config_.embedding_size);
  if (tokens.empty()) return out;
  const Matrix& pe = position_weights(tokens.size());
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    out += pe.row(static_cast<Eigen::Index>(j))
               .cwiseProduct(table.row(tokens[j]))
               .transpose();
  }
  return out;
}

Matrix MemN2N::candidate_features(const ModelParams& params,
                                  const std::vector<TokenIds>& candidates) const {
  Matrix f(static_cast<Eigen::Index>(candidates.size()), config_.embedding_size);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    f.row(static_cast<Eigen::Index>(c)) =
        embed(params.cand_emb, candidates[c]).transpose();
  }
  return f;
}

Vector MemN2N::encode_state(const ModelParams& params,
                            const FeaturizedExample& ex,
                            ExampleTrace* trace) const {
  ExampleTrace local;
  ExampleTrace& t = trace ? *trace : local;
  t.example = &ex;
  t.memories.clear();
  const std::size_t m = ex.num_memories();
  if (m > static_cast<std::size_t>(config_.memory_capacity)) {
    throw ContractViolation("example holds more memories than the capacity");
  }
  if (m == 0) {
    t.memories.push_back(sentinel_memory());
  } else {
    t.memories.reserve(m);
    for (std::size_t i = 0; i < m; ++i) t.memories.push_back(ex.memory(i));
  }
  const auto rows = static_cast<Eigen::Index>(t.memories.size());
  t.repr.assign(static_cast<std::size_t>(num_tables()),
                Matrix(rows, config_.embedding_size));
  for (int k = 0; k < num_tables(); ++k) {
    Matrix& r = t.repr[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < rows; ++i) {
      r.row(i) = embed(params.memory_emb[static_cast<std::size_t>(k)],
                       t.memories[static_cast<std::size_t>(i)])
                     .transpose();
      if (config_.temporal) {
        r.row(i) += params.temporal[static_cast<std::size_t>(k)].row(rows - 1 - i);
      }
    }
  }
  Vector u = embed(params.query_emb, ex.query);
  t.hops.assign(static_cast<std::size_t>(config_.hops), HopTrace{});
  for (int h = 0; h < config_.hops; ++h) {
    HopTrace& hop = t.hops[static_cast<std::size_t>(h)];
    hop.u = u;
    hop.p = attention(u, t.repr[static_cast<std::size_t>(input_table(h))]);
    hop.o = t.repr[static_cast<std::size_t>(output_table(h))].transpose() * hop.p;
    u += hop.o;
  }
  t.state = u;
  return u;
}

Vector MemN2N::rl_preactivation(const ModelParams& params,
                                const Vector& state) const {
  Vector z = params.mask_rl * state + params.rl_bias.col(0);
  if (mask_options_.collapsed) return z;
  if (mask_options_.untie_state) return z + params.mask_state_rl * state;
  return z + params.mask_state * state;
}

Vector MemN2N::sl_mask(const ModelParams& params, const Vector& state,
                       const Vector& answer) const {
  return sigmoid(params.mask_state * state + params.mask_answer * answer +
                 params.sl_bias.col(0));
}

Vector MemN2N::rl_mask(const ModelParams& params, const Vector& state) const {
  return sigmoid(rl_preactivation(params, state));
}

BatchTrace MemN2N::forward(const ModelParams& params,
                           std::span<const FeaturizedExample* const> batch,
                           const std::vector<TokenIds>& candidates,
                           MaskMode mode, double pretrain_coeff) const {
  if (candidates.empty()) throw std::invalid_argument("empty candidate set");
  if (pretrain_coeff > 0 && mode != MaskMode::kSupervised) {
    throw std::invalid_argument("mask pre-training needs the supervised mask");
  }
  const int d = config_.embedding_size;
  BatchTrace trace;
  trace.mode = mode;
  trace.pretrain_coeff = pretrain_coeff;
  trace.candidates = &candidates;
  trace.cand_features = candidate_features(params, candidates);
  trace.examples.resize(batch.size());
  Matrix v(static_cast<Eigen::Index>(batch.size()), d);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    ExampleTrace& t = trace.examples[b];
    const Vector s = encode_state(params, *batch[b], &t);
    switch (mode) {
      case MaskMode::kNone:
      case MaskMode::kUnit:
        t.mask = Vector::Ones(d);
        t.masked = s;
        break;
      case MaskMode::kSupervised: {
        const Vector a = trace.cand_features.row(batch[b]->gold).transpose();
        t.mask = sl_mask(params, s, a);
        t.masked = apply_mask(t.mask, s);
        if (pretrain_coeff > 0) {
          t.pretrain_mask = rl_mask(params, s);
          t.pretrain_loss =
              mask_pretrain_loss(t.pretrain_mask, t.mask, pretrain_coeff);
        }
        break;
      }
      case MaskMode::kReinforce:
        t.mask = rl_mask(params, s);
        t.masked = apply_mask(t.mask, s);
        break;
    }
    t.scoring = params.cand_proj.transpose() * t.masked;
    v.row(static_cast<Eigen::Index>(b)) = t.scoring.transpose();
  }
  trace.logits.noalias() = v * trace.cand_features.transpose();
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Vector& sv = trace.examples[b].scoring;
    for (const auto& f : batch[b]->match) {
      trace.logits(static_cast<Eigen::Index>(b), f.candidate) +=
          params.cand_emb.row(Vocabulary::type_id(f.type)).dot(sv);
    }
  }
  if (!trace.logits.allFinite()) throw NumericError("non-finite logits");
  return trace;
}

ModelParams MemN2N::backward(const ModelParams& params, const BatchTrace& trace,
                             const Matrix& dlogits) const {
  const auto batch = static_cast<Eigen::Index>(trace.examples.size());
  if (dlogits.rows() != batch || dlogits.cols() != trace.logits.cols()) {
    throw std::invalid_argument("dlogits shape does not match the trace");
  }
  const int d = config_.embedding_size;
  ModelParams g = params.zeros_like();

  Matrix v(batch, d);
  for (Eigen::Index b = 0; b < batch; ++b) {
    v.row(b) = trace.examples[static_cast<std::size_t>(b)].scoring.transpose();
  }
  Matrix dv = dlogits * trace.cand_features;
  Matrix dfeat = dlogits.transpose() * v;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto* ex = trace.examples[static_cast<std::size_t>(b)].example;
    for (const auto& f : ex->match) {
      const int row = Vocabulary::type_id(f.type);
      const double gl = dlogits(b, f.candidate);
      dv.row(b) += gl * params.cand_emb.row(row);
      g.cand_emb.row(row) += gl * v.row(b);
    }
  }

  const double pre_scale =
      batch > 0 ? 2.0 * trace.pretrain_coeff / static_cast<double>(batch) : 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const ExampleTrace& t = trace.examples[static_cast<std::size_t>(b)];
    const Vector dvb = dv.row(b).transpose();
    g.cand_proj.noalias() += t.masked * dvb.transpose();
    const Vector dmasked = params.cand_proj * dvb;
    const Vector& s = t.state;
    Vector ds;
    switch (trace.mode) {
      case MaskMode::kNone:
      case MaskMode::kUnit:
        ds = dmasked;
        break;
      case MaskMode::kSupervised: {
        ds = t.mask.cwiseProduct(dmasked);
        const Vector dz = s.cwiseProduct(dmasked)
                              .cwiseProduct(t.mask)
                              .cwiseProduct((1.0 - t.mask.array()).matrix());
        const Vector a = trace.cand_features.row(t.example->gold).transpose();
        g.mask_state.noalias() += dz * s.transpose();
        g.mask_answer.noalias() += dz * a.transpose();
        g.sl_bias.col(0) += dz;
        ds.noalias() += params.mask_state.transpose() * dz;
        dfeat.row(t.example->gold) += (params.mask_answer.transpose() * dz).transpose();
        if (trace.pretrain_coeff > 0) {
          // The SL mask is a fixed target here; only RL-head tensors move.
          const Vector& mr = t.pretrain_mask;
          const Vector dzr = pre_scale * (mr - t.mask)
                                             .cwiseProduct(mr)
                                             .cwiseProduct((1.0 - mr.array()).matrix());
          if (!mask_options_.collapsed && mask_options_.untie_state) {
            g.mask_state_rl.noalias() += dzr * s.transpose();
          }
          g.mask_rl.noalias() += dzr * s.transpose();
          g.rl_bias.col(0) += dzr;
          if (mask_options_.pretrain_reaches_encoder) {
            ds.noalias() += params.mask_rl.transpose() * dzr;
            if (!mask_options_.collapsed) {
              if (mask_options_.untie_state) {
                ds.noalias() += params.mask_state_rl.transpose() * dzr;
              } else {
                g.mask_state.noalias() += dzr * s.transpose();
                ds.noalias() += params.mask_state.transpose() * dzr;
              }
            }
          }
        }
        break;
      }
      case MaskMode::kReinforce: {
        ds = t.mask.cwiseProduct(dmasked);
        const Vector dz = s.cwiseProduct(dmasked)
                              .cwiseProduct(t.mask)
                              .cwiseProduct((1.0 - t.mask.array()).matrix());
        g.mask_rl.noalias() += dz * s.transpose();
        ds.noalias() += params.mask_rl.transpose() * dz;
        if (!mask_options_.collapsed) {
          if (mask_options_.untie_state) {
            g.mask_state_rl.noalias() += dz * s.transpose();
            ds.noalias() += params.mask_state_rl.transpose() * dz;
          } else {
            g.mask_state.noalias() += dz * s.transpose();
            ds.noalias() += params.mask_state.transpose() * dz;
          }
        }
        g.rl_bias.col(0) += dz;
        break;
      }
    }

    // Encoder: u_{k+1} = u_k + sum_i p_i c_i, p = softmax(A u_k).
    std::vector<Matrix> drepr;
    drepr.reserve(t.repr.size());
    for (const auto& r : t.repr) drepr.push_back(Matrix::Zero(r.rows(), r.cols()));
    Vector du = ds;
    for (int h = config_.hops - 1; h >= 0; --h) {
      const HopTrace& hop = t.hops[static_cast<std::size_t>(h)];
      const auto in = static_cast<std::size_t>(input_table(h));
      const auto out = static_cast<std::size_t>(output_table(h));
      drepr[out].noalias() += hop.p * du.transpose();
      const Vector dp = t.repr[out] * du;
      const Vector dscore =
          hop.p.cwiseProduct((dp.array() - hop.p.dot(dp)).matrix());
      drepr[in].noalias() += dscore * hop.u.transpose();
      du.noalias() += t.repr[in].transpose() * dscore;
    }
    const auto& query = t.example->query;
    if (!query.empty()) {
      scatter(g.query_emb, query, position_weights(query.size()), du.transpose());
    }
    const auto rows = static_cast<Eigen::Index>(t.memories.size());
    for (std::size_t k = 0; k < drepr.size(); ++k) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        const TokenIds& mem = t.memories[static_cast<std::size_t>(i)];
        scatter(g.memory_emb[k], mem, position_weights(mem.size()), drepr[k].row(i));
        if (config_.temporal) g.temporal[k].row(rows - 1 - i) += drepr[k].row(i);
      }
    }
  }

  const auto& cands = *trace.candidates;
  for (std::size_t c = 0; c < cands.size(); ++c) {
    if (cands[c].empty()) continue;
    scatter(g.cand_emb, cands[c], position_weights(cands[c].size()),
            dfeat.row(static_cast<Eigen::Index>(c)));
  }
  zero_pad_row(g.query_emb);
  zero_pad_row(g.cand_emb);
  for (auto& m : g.memory_emb) zero_pad_row(m);
  return g;
}

int MemN2N::predict(const ModelParams& params, const FeaturizedExample& ex,
                    const Matrix& cand_features, MaskMode mode) const {
  const Vector l = logits(params, ex, cand_features, mode);
  Eigen::Index best = 0;
  l.maxCoeff(&best);
  return static_cast<int>(best);
}

Vector MemN2N::logits(const ModelParams& params, const FeaturizedExample& ex,
                      const Matrix& cand_features, MaskMode mode) const {
  const Vector s = encode_state(params, ex);
  Vector masked;
  switch (mode) {
    case MaskMode::kNone:
    case MaskMode::kUnit:
      masked = s;
      break;
    case MaskMode::kSupervised:
      masked = apply_mask(
          sl_mask(params, s, cand_features.row(ex.gold).transpose()), s);
      break;
    case MaskMode::kReinforce:
      masked = apply_mask(rl_mask(params, s), s);
      break;
  }
  return score_candidates(params, masked, cand_features, ex.match);
}

// ---------------------------------------------------------------------------
// Optimisation

double OptimizerState::learning_rate() const {
  return base_lr * std::pow(anneal_ratio, epoch / anneal_period);
}

void sgd_step(ModelParams& params, const ModelParams& grads, double lr,
              const std::function<bool(std::string_view)>& frozen) {
  bool finite = true;
  grads.for_each([&](const std::string& name, const Matrix& g) {
    if (frozen && frozen(name)) return;
    finite = finite && g.allFinite();
  });
  if (!finite) throw NumericError("non-finite gradient");
  params.for_each([&](const std::string& name, Matrix& p) {
    if (frozen && frozen(name)) return;
    const Matrix* g = grads.find(name);
    if (!g || g->rows() != p.rows() || g->cols() != p.cols()) {
      throw std::invalid_argument("gradient shape mismatch for " + name);
    }
    p.noalias() -= lr * *g;
  });
}

}  // namespace maskmem
