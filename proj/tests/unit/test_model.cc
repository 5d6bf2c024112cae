#include <cmath>

#include "doctest.h"
#include "maskmem/error.h"
#include "maskmem/model.h"
#include "support/tiny_model.h"

using namespace maskmem;
using maskmem::testing::LossPath;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Straight-line encoder written from the equations, no shared helpers.
Vector naive_state(const ModelConfig& c, const ModelParams& p,
                   const FeaturizedExample& ex) {
  const int d = c.embedding_size;
  auto sentence = [&](const Matrix& table, const TokenIds& s) {
    Vector v = Vector::Zero(d);
    const double J = static_cast<double>(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      for (int k = 0; k < d; ++k) {
        const double jj = static_cast<double>(j + 1), kk = k + 1.0;
        const double l = (1 - jj / J) - (kk / d) * (1 - 2 * jj / J);
        v[k] += l * table(s[j], k);
      }
    }
    return v;
  };
  const std::size_t m = ex.num_memories();
  std::vector<Vector> a(m), cc(m);
  for (std::size_t i = 0; i < m; ++i) {
    a[i] = sentence(p.memory_emb[0], ex.memory(i)) +
           p.temporal[0].row(static_cast<Eigen::Index>(m - 1 - i)).transpose();
    cc[i] = sentence(p.memory_emb[1], ex.memory(i)) +
            p.temporal[1].row(static_cast<Eigen::Index>(m - 1 - i)).transpose();
  }
  Vector u = sentence(p.query_emb, ex.query);
  for (int h = 0; h < c.hops; ++h) {
    std::vector<double> e(m);
    double z = 0;
    for (std::size_t i = 0; i < m; ++i) {
      e[i] = std::exp(u.dot(a[i]));
      z += e[i];
    }
    Vector o = Vector::Zero(d);
    for (std::size_t i = 0; i < m; ++i) o += (e[i] / z) * cc[i];
    u = u + o;
  }
  return u;
}

}  // namespace

TEST_CASE("softmax and attention") {
  const Vector p = attention(vec({1, 0}), (Matrix(2, 2) << 2, 0, 0, 0).finished());
  CHECK(p[0] == doctest::Approx(0.8808).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.1192).epsilon(1e-3));

  const Matrix same = Matrix::Constant(4, 3, 0.7);
  const Vector u = attention(vec({0.3, -1, 2}), same);
  for (int i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(0.25));

  CHECK(attention(vec({5, 5}), Matrix::Ones(1, 2))[0] == 1.0);
  CHECK_THROWS_AS(attention(vec({NAN, 0}), Matrix::Ones(1, 2)), NumericError);

  // Large scores stay finite thanks to max subtraction.
  const Vector big = softmax(vec({1000, 999}));
  CHECK(big.allFinite());
  CHECK(big.sum() == doctest::Approx(1.0));
}

TEST_CASE("losses match direct evaluation") {
  CHECK(xent_loss(vec({0, 0}), 0) == doctest::Approx(std::log(2.0)));
  CHECK(xent_loss(vec({1, 0, 0}), 0) ==
        doctest::Approx(-std::log(std::exp(1.0) / (std::exp(1.0) + 2))));
  CHECK(xent_loss(vec({1, 0, 0}), 0) == doctest::Approx(0.5514).epsilon(1e-4));
  CHECK(xent_loss(vec({200, 0}), 0) < 1e-12);

  const int v0[] = {0};
  CHECK(all_answers_loss(vec({0, 0}), v0) == doctest::Approx(2 * std::log(2.0)));
  CHECK(all_answers_loss(vec({2, -2}), v0) == doctest::Approx(0.2538).epsilon(1e-3));
  const int both[] = {0, 1};
  CHECK(all_answers_loss(vec({60, 60}), both) < 1e-10);  // floor: 2 clamped terms
  // Clamping keeps hopeless logits finite.
  CHECK(std::isfinite(all_answers_loss(vec({-1000, 1000}), v0)));

  CHECK(mask_pretrain_loss(vec({1, 0}), vec({0, 0})) == doctest::Approx(0.1));
  CHECK(mask_pretrain_loss(vec({0.3, 0.2}), vec({0.3, 0.2})) == 0.0);
}

TEST_CASE("shifting logits leaves xent and argmax unchanged") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Vector l(6);
    for (int i = 0; i < 6; ++i) l[i] = rng.normal(0, 3);
    const double c = rng.normal(0, 50);
    Eigen::Index a, b;
    l.maxCoeff(&a);
    (l.array() + c).maxCoeff(&b);
    CHECK(a == b);
    CHECK(xent_loss(l, 2) == doctest::Approx(xent_loss((l.array() + c).matrix(), 2)));
  }
}

TEST_CASE("learning-rate annealing") {
  OptimizerState s;
  CHECK(s.learning_rate() == 0.01);
  s.epoch = 24;
  CHECK(s.learning_rate() == 0.01);
  s.epoch = 25;
  CHECK(s.learning_rate() == doctest::Approx(0.005));
  s.epoch = 99;
  CHECK(s.learning_rate() == doctest::Approx(0.00125));
}

TEST_CASE("mask heads") {
  ModelConfig c = maskmem::testing::tiny_config(20, 2);
  const MemN2N model(c);
  ModelParams p = model.init_params(1);
  p.mask_state = Matrix::Identity(2, 2);
  p.mask_answer.setZero();
  p.sl_bias.setZero();
  const Vector m = model.sl_mask(p, vec({std::log(3.0), 0}), vec({0.4, -2}));
  CHECK(m[0] == doctest::Approx(0.75));
  CHECK(m[1] == doctest::Approx(0.5));

  p.mask_state.setZero();
  p.sl_bias.setConstant(10);
  const Vector sat = model.sl_mask(p, vec({1, 2}), vec({3, 4}));
  CHECK(sat.minCoeff() >= 0.9999);

  // W_r = -W_s cancels the state term.
  p.mask_state = (Matrix(2, 2) << 1, 2, -3, 0.5).finished();
  p.mask_rl = -p.mask_state;
  p.rl_bias = (Matrix(2, 1) << 0.3, -0.8).finished();
  const Vector r = model.rl_mask(p, vec({4, -7}));
  const Vector expect = sigmoid(p.rl_bias.col(0));
  CHECK(r[0] == doctest::Approx(expect[0]));
  CHECK(r[1] == doctest::Approx(expect[1]));
  CHECK(model.rl_mask(p, vec({0, 0}))[1] == doctest::Approx(expect[1]));

  CHECK(apply_mask(vec({1, 0}), vec({3, 7})) == vec({3, 0}));
  CHECK_THROWS(apply_mask(vec({1}), vec({3, 7})));
}

TEST_CASE("collapsed and untied RL heads") {
  const ModelConfig c = maskmem::testing::tiny_config(20, 3);
  const MemN2N collapsed(c, MaskOptions{false, true});
  ModelParams p = collapsed.init_params(4);
  const Vector s = vec({0.5, -1, 2});
  const Vector want = sigmoid(p.mask_rl * s + p.rl_bias.col(0));
  CHECK((collapsed.rl_mask(p, s) - want).norm() < 1e-15);

  const MemN2N untied(c, MaskOptions{true, false});
  ModelParams q = untied.init_params(4);
  CHECK(q.mask_state_rl.rows() == 3);
  const Vector w2 = sigmoid(q.mask_state_rl * s + q.mask_rl * s + q.rl_bias.col(0));
  CHECK((untied.rl_mask(q, s) - w2).norm() < 1e-15);
  CHECK_THROWS_AS(MemN2N(c, MaskOptions{true, true}), ConfigError);
}

TEST_CASE("encoder matches a straight-line reimplementation") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = maskmem::testing::make_tiny_instance(seed, 1);
    const ModelConfig c = maskmem::testing::tiny_config();
    const MemN2N model(c);
    const ModelParams p = model.init_params(seed);
    const Vector s = model.encode_state(p, inst.examples[0]);
    const Vector n = naive_state(c, p, inst.examples[0]);
    CHECK((s - n).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("encoder special cases") {
  const auto inst = maskmem::testing::make_tiny_instance(5, 1);
  ModelConfig c = maskmem::testing::tiny_config();
  const MemN2N model(c);
  ModelParams p = model.init_params(5);
  ExampleTrace trace;
  const Vector u1 = model.embed(p.query_emb, inst.examples[0].query);

  SUBCASE("zero output memories leave the query untouched") {
    p.memory_emb[1].setZero();
    p.temporal[1].setZero();
    const Vector s = model.encode_state(p, inst.examples[0], &trace);
    CHECK((s - u1).norm() < 1e-15);
  }
  SUBCASE("one hop, one memory: s = c_1 + u_1") {
    c.hops = 1;
    const MemN2N one(c);
    FeaturizedExample ex = inst.examples[0];
    ex.memory_end = ex.memory_begin + 1;
    const Vector s = one.encode_state(p, ex, &trace);
    const Vector c1 = one.embed(p.memory_emb[1], ex.memory(0)) +
                      p.temporal[1].row(0).transpose();
    CHECK((s - (c1 + u1)).norm() < 1e-14);
    CHECK(trace.hops[0].p[0] == 1.0);
  }
  SUBCASE("empty memory uses the padding sentinel") {
    FeaturizedExample ex = inst.examples[0];
    ex.memory_end = ex.memory_begin;
    const Vector s = model.encode_state(p, ex, &trace);
    CHECK(trace.memories.size() == 1);
    CHECK(s.allFinite());
  }
  SUBCASE("attention distributions are normalised") {
    model.encode_state(p, inst.examples[0], &trace);
    for (const auto& h : trace.hops) {
      CHECK(h.p.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(h.p.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("permuting memories without temporal features keeps the state") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto inst = maskmem::testing::make_tiny_instance(seed, 1, false, 20, 5, 4);
    ModelConfig c = maskmem::testing::tiny_config();
    c.temporal = false;
    const MemN2N model(c);
    const ModelParams p = model.init_params(seed);
    ExampleTrace t1, t2;
    const Vector s1 = model.encode_state(p, inst.examples[0], &t1);
    auto reversed = std::make_shared<std::vector<TokenIds>>(
        inst.examples[0].history->rbegin(), inst.examples[0].history->rend());
    FeaturizedExample ex = inst.examples[0];
    ex.history = reversed;
    const Vector s2 = model.encode_state(p, ex, &t2);
    CHECK((s1 - s2).norm() < 1e-12);
    const auto m = t1.hops[0].p.size();
    for (Eigen::Index i = 0; i < m; ++i) {
      CHECK(t1.hops[0].p[i] == doctest::Approx(t2.hops[0].p[m - 1 - i]));
    }
  }
}

TEST_CASE("candidate scoring") {
  ModelConfig c = maskmem::testing::tiny_config(20, 3);
  const MemN2N model(c);
  ModelParams p = model.init_params(2);
  p.cand_proj = Matrix::Identity(3, 3);
  const Matrix basis = Matrix::Identity(3, 3);
  const Vector s = vec({0.2, -1.5, 4});
  const Vector l = score_candidates(p, s, basis, {});
  CHECK((l - s).norm() < 1e-15);

  const auto inst = maskmem::testing::make_tiny_instance(2, 1, false);
  std::vector<TokenIds> dup = {inst.candidates[0], inst.candidates[0]};
  const Vector ld = score_candidates(p, s, model.candidate_features(p, dup), {});
  CHECK(ld[0] == ld[1]);

  // Flags on other candidates leave candidate 0 untouched.
  const MatchFlag flags[] = {{1, Relation::kCuisine}};
  const Vector lm = score_candidates(p, s, model.candidate_features(p, dup), flags);
  CHECK(lm[0] == ld[0]);
  CHECK(lm[1] != ld[1]);

  CHECK_THROWS(score_candidates(p, s, Matrix(0, 3), {}));
  CHECK_THROWS_AS(score_candidates(p, vec({NAN, 0, 0}), basis, {}), NumericError);
}

TEST_CASE("a unit mask reproduces the plain model") {
  const auto inst = maskmem::testing::make_tiny_instance(11, 3);
  const MemN2N model(maskmem::testing::tiny_config());
  const ModelParams p = model.init_params(11);
  const BatchTrace plain = model.forward(p, inst.batch, inst.candidates, MaskMode::kNone);
  const BatchTrace unit = model.forward(p, inst.batch, inst.candidates, MaskMode::kUnit);
  CHECK(plain.logits == unit.logits);
  std::vector<int> gold;
  for (const auto* e : inst.batch) gold.push_back(e->gold);
  const Matrix d = xent_grad(plain.logits, gold);
  const ModelParams g1 = model.backward(p, plain, d);
  const ModelParams g2 = model.backward(p, unit, d);
  g1.for_each([&](const std::string& name, const Matrix& m) {
    CHECK_MESSAGE(m == *g2.find(name), name);
  });
}

TEST_CASE("gradients match central differences") {
  for (auto path : {LossPath::kXent, LossPath::kAllAnswers,
                    LossPath::kSupervisedMask, LossPath::kReinforceMask}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto r = maskmem::testing::gradient_check_instance(seed, path);
      CHECK_MESSAGE(r.max_rel_error < 1e-4,
                    maskmem::testing::to_string(path) << " seed " << seed
                                                      << " worst " << r.worst_tensor);
      CHECK(r.zeros_exact);
    }
  }
  for (const MaskOptions opt : {MaskOptions{true, false}, MaskOptions{false, true},
                                MaskOptions{false, false, false},
                                MaskOptions{true, false, false}}) {
    const auto r = maskmem::testing::gradient_check_instance(
        9, LossPath::kReinforceMask, opt);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("adjacent tying gradients") {
  ModelConfig c = maskmem::testing::tiny_config();
  c.tying = WeightTying::kAdjacent;
  const MemN2N model(c);
  CHECK(model.num_tables() == 4);
  const auto inst = maskmem::testing::make_tiny_instance(4);
  const ModelParams p = model.init_params(4);
  std::vector<int> gold;
  for (const auto* e : inst.batch) gold.push_back(e->gold);
  auto loss = [&](const ModelParams& q) {
    double l = 0;
    xent_grad(model.forward(q, inst.batch, inst.candidates, MaskMode::kNone).logits, gold, &l);
    return l;
  };
  const BatchTrace t = model.forward(p, inst.batch, inst.candidates, MaskMode::kNone);
  const auto r = maskmem::testing::check_gradients(p, model.backward(p, t, xent_grad(t.logits, gold)), loss);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("pre-training gradient never reaches the SL head") {
  const auto inst = maskmem::testing::make_tiny_instance(6);
  const MemN2N model(maskmem::testing::tiny_config());
  const ModelParams p = model.init_params(6);
  const BatchTrace with = model.forward(p, inst.batch, inst.candidates, MaskMode::kSupervised, 0.1);
  const Matrix zero = Matrix::Zero(with.logits.rows(), with.logits.cols());
  const ModelParams g = model.backward(p, with, zero);
  g.for_each([&](const std::string& name, const Matrix& m) {
    if (is_sl_head_param(name) || name == "W" || name == "E") {
      CHECK_MESSAGE(m.norm() == 0.0, name);
    } else {
      CHECK_MESSAGE(m.norm() > 0, name);
    }
  });
}

TEST_CASE("confined pre-training gradient touches only the RL head") {
  const auto inst = maskmem::testing::make_tiny_instance(6);
  MaskOptions confined;
  confined.pretrain_reaches_encoder = false;
  const MemN2N model(maskmem::testing::tiny_config(), confined);
  const ModelParams p = model.init_params(6);
  const BatchTrace with = model.forward(p, inst.batch, inst.candidates, MaskMode::kSupervised, 0.1);
  const BatchTrace without = model.forward(p, inst.batch, inst.candidates, MaskMode::kSupervised, 0.0);
  const Matrix zero = Matrix::Zero(with.logits.rows(), with.logits.cols());
  const ModelParams g = model.backward(p, with, zero);
  const ModelParams g0 = model.backward(p, without, zero);
  g.for_each([&](const std::string& name, const Matrix& m) {
    if (is_rl_head_param(name)) {
      CHECK_MESSAGE(m.norm() > 0, name);
    } else {
      CHECK_MESSAGE(m.norm() == 0.0, name);
    }
  });
  g0.for_each([&](const std::string&, const Matrix& m) { CHECK(m.norm() == 0.0); });
}

TEST_CASE("zero-loss configuration has a vanishing gradient") {
  const auto inst = maskmem::testing::make_tiny_instance(8, 1);
  const MemN2N model(maskmem::testing::tiny_config());
  const ModelParams p = model.init_params(8);
  const BatchTrace t = model.forward(p, inst.batch, inst.candidates, MaskMode::kNone);
  Matrix logits = Matrix::Constant(1, t.logits.cols(), -100.0);
  logits(0, inst.examples[0].gold) = 100.0;
  const int gold[] = {inst.examples[0].gold};
  const Matrix d = xent_grad(logits, gold);
  CHECK(d.norm() < 1e-8);
  const ModelParams g = model.backward(p, t, d);
  double total = 0;
  g.for_each([&](const std::string&, const Matrix& m) { total += m.squaredNorm(); });
  CHECK(std::sqrt(total) < 1e-8);
}

TEST_CASE("sgd step") {
  const MemN2N model(maskmem::testing::tiny_config());
  ModelParams p = model.init_params(1);
  ModelParams g = p.zeros_like();
  g.cand_proj.setConstant(2.0);
  g.mask_answer.setConstant(1.0);
  const ModelParams before = p;
  sgd_step(p, g, 0.5, [](std::string_view n) { return is_sl_head_param(n); });
  CHECK((p.cand_proj - (before.cand_proj.array() - 1.0).matrix()).norm() < 1e-15);
  CHECK(p.mask_answer == before.mask_answer);

  g.query_emb(3, 2) = NAN;
  const ModelParams held = p;
  CHECK_THROWS_AS(sgd_step(p, g, 0.5), NumericError);
  p.for_each([&](const std::string& name, const Matrix& m) { CHECK(m == *held.find(name)); });
}

TEST_CASE("initialisation") {
  const MemN2N model(maskmem::testing::tiny_config());
  const ModelParams a = model.init_params(42), b = model.init_params(42);
  a.for_each([&](const std::string& name, const Matrix& m) { CHECK(m == *b.find(name)); });
  CHECK(a.query_emb.row(0).norm() == 0.0);
  CHECK(a.cand_emb.row(0).norm() == 0.0);
  CHECK(a.all_finite());
  // A tensor's draw does not depend on which other tensors exist.
  const MemN2N untied(maskmem::testing::tiny_config(), MaskOptions{true, false});
  const ModelParams u = untied.init_params(42);
  CHECK(u.query_emb == a.query_emb);
  CHECK(u.mask_rl == a.mask_rl);
  CHECK(model.init_params(43).query_emb != a.query_emb);
}
