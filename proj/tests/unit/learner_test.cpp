#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "avkit/error.hpp"
#include "avkit/lbfgs.hpp"
#include "avkit/learner.hpp"
#include "avkit/metrics.hpp"
#include "support/synthetic_corpus.hpp"

namespace avkit {
namespace {

SparseVector sv(std::size_t dim, std::vector<std::uint32_t> idx, std::vector<double> val) {
  SparseVector v;
  v.dimension = dim;
  v.indices = std::move(idx);
  v.values = std::move(val);
  return v;
}

SparseVector random_row(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SparseVector v;
  v.dimension = dim;
  for (std::uint32_t j = 0; j < dim; ++j) {
    if (rng() % 3 == 0) continue;
    v.indices.push_back(j);
    v.values.push_back(u(rng));
  }
  return v;
}

double max_relative_gradient_error(const Objective& f, std::vector<double> x) {
  std::vector<double> g(x.size()), scratch(x.size());
  f(x, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x, scratch);
    x[i] = orig - h;
    const double fm = f(x, scratch);
    x[i] = orig;
    const double fd = (fp - fm) / (2 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(fd) + std::abs(g[i])));
  }
  return worst;
}

TEST(Gradients, BinaryMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  std::vector<SparseVector> X;
  std::vector<std::size_t> y;
  for (int i = 0; i < 5; ++i) {
    X.push_back(random_row(rng, 8));
    y.push_back(i % 2);
  }
  const BinaryLogisticObjective obj(X, y, 8, 2.5);
  std::vector<double> w(obj.parameter_count());
  std::normal_distribution<double> n;
  for (auto& v : w) v = n(rng);
  EXPECT_LE(max_relative_gradient_error(std::cref(obj), w), 1e-5);
}

TEST(Gradients, SoftmaxMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::vector<SparseVector> X;
  std::vector<std::size_t> y;
  for (int i = 0; i < 7; ++i) {
    X.push_back(random_row(rng, 6));
    y.push_back(i % 3);
  }
  const SoftmaxObjective obj(X, y, 3, 6, 0.7);
  std::vector<double> w(obj.parameter_count());
  std::normal_distribution<double> n;
  for (auto& v : w) v = n(rng);
  EXPECT_LE(max_relative_gradient_error(std::cref(obj), w), 1e-5);
}

TEST(Lbfgs, MinimizesQuadraticMonotonically) {
  const Objective f = [](std::span<const double> x, std::span<double> g) {
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double s = static_cast<double>(i + 1);
      v += 0.5 * s * (x[i] - 1.0) * (x[i] - 1.0);
      g[i] = s * (x[i] - 1.0);
    }
    return v;
  };
  LbfgsOptions opt;
  opt.tolerance = 1e-10;
  const auto r = minimize_lbfgs(f, std::vector<double>(10, -3.0), opt);
  EXPECT_TRUE(r.converged);
  for (double v : r.x) EXPECT_NEAR(v, 1.0, 1e-8);
  for (std::size_t k = 1; k < r.history.size(); ++k) EXPECT_LE(r.history[k], r.history[k - 1]);
}

TEST(TrainBinary, SeparablePoints) {
  const std::vector<SparseVector> X = {sv(1, {0}, {-1.0}), sv(1, {0}, {1.0})};
  const std::vector<std::size_t> y = {0, 1};
  TrainConfig c;
  c.C = 10;
  const auto m = train_binary(X, y, c);
  EXPECT_GT(m.weights[0][0], 0.0);
  EXPECT_GT(predict_proba(m, X[1]).posteriors[1], 0.5);
  EXPECT_LT(predict_proba(m, X[0]).posteriors[1], 0.5);
  EXPECT_TRUE(m.converged);
}

TEST(TrainBinary, TinyCShrinksToHalf) {
  const std::vector<SparseVector> X = {sv(1, {0}, {-1.0}), sv(1, {0}, {1.0}), sv(1, {0}, {-2.0}), sv(1, {0}, {2.0})};
  const std::vector<std::size_t> y = {0, 1, 0, 1};
  TrainConfig c;
  c.C = 1e-8;
  const auto m = train_binary(X, y, c);
  EXPECT_NEAR(m.weights[0][0], 0.0, 1e-6);
  EXPECT_NEAR(predict_proba(m, X[3]).posteriors[1], 0.5, 1e-6);
}

TEST(TrainBinary, ObjectiveNonIncreasingAndDuplicatesInvariant) {
  std::mt19937_64 rng(4);
  std::vector<SparseVector> X;
  std::vector<std::size_t> y;
  for (int i = 0; i < 20; ++i) {
    X.push_back(random_row(rng, 10));
    y.push_back(X.back().value_at(0) + X.back().value_at(1) > 0 ? 1 : 0);
  }
  TrainConfig c;
  c.tolerance = 1e-9;
  const auto m = train_binary(X, y, c);
  // permuting training rows leaves the model unchanged up to optimizer tolerance
  auto Xp = X;
  auto yp = y;
  std::reverse(Xp.begin(), Xp.end());
  std::reverse(yp.begin(), yp.end());
  const auto mp = train_binary(Xp, yp, c);
  for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(m.weights[0][j], mp.weights[0][j], 1e-5);

  const BinaryLogisticObjective obj(X, y, 10, c.C);
  std::vector<double> w0(obj.parameter_count(), 0.0), scratch(obj.parameter_count());
  LbfgsOptions opt;
  const auto r = minimize_lbfgs(std::cref(obj), w0, opt);
  for (std::size_t k = 1; k < r.history.size(); ++k) EXPECT_LE(r.history[k], r.history[k - 1]);
}

TEST(TrainBinary, ColumnPermutationLeavesPosteriors) {
  std::mt19937_64 rng(8);
  const std::size_t D = 6;
  std::vector<SparseVector> X, Xp;
  std::vector<std::size_t> y;
  const std::vector<std::uint32_t> perm = {3, 5, 0, 1, 4, 2};
  for (int i = 0; i < 16; ++i) {
    X.push_back(random_row(rng, D));
    y.push_back(X.back().value_at(2) > 0 ? 1 : 0);
    std::vector<std::pair<std::uint32_t, double>> e;
    for (std::size_t k = 0; k < X.back().nnz(); ++k) e.emplace_back(perm[X.back().indices[k]], X.back().values[k]);
    std::sort(e.begin(), e.end());
    SparseVector p;
    p.dimension = D;
    for (auto [j, v] : e) {
      p.indices.push_back(j);
      p.values.push_back(v);
    }
    Xp.push_back(p);
  }
  TrainConfig c;
  c.tolerance = 1e-10;
  const auto m = train_binary(X, y, c);
  const auto mp = train_binary(Xp, y, c);
  for (std::size_t i = 0; i < X.size(); ++i) {
    EXPECT_NEAR(predict_proba(m, X[i]).posteriors[1], predict_proba(mp, Xp[i]).posteriors[1], 1e-6);
  }
}

TEST(Predict, ClosedFormSigmoid) {
  TrainedModel m;
  m.classes = {"neg", "pos"};
  m.weights = {{1.0}};
  m.bias = {0.0};
  m.dimension = 1;
  EXPECT_DOUBLE_EQ(predict_proba(m, sv(1, {}, {})).posteriors[1], 0.5);
  EXPECT_NEAR(predict_proba(m, sv(1, {0}, {std::log(3.0)})).posteriors[1], 0.75, 1e-15);
  const auto p = predict_proba(m, sv(1, {0}, {2.0}));
  EXPECT_NEAR(p.posteriors[0] + p.posteriors[1], 1.0, 1e-15);
  EXPECT_EQ(p.predicted, 1u);
}

TEST(TrainMulticlass, SeparatesThreeClasses) {
  const std::vector<SparseVector> X = {sv(3, {0}, {1.0}), sv(3, {1}, {1.0}), sv(3, {2}, {1.0})};
  const std::vector<std::size_t> y = {0, 1, 2};
  TrainConfig c;
  c.C = 100;
  const auto m = train_multiclass(X, y, {"a", "b", "c"}, c);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto p = predict_proba(m, X[i]);
    ASSERT_EQ(p.posteriors.size(), 3u);
    EXPECT_EQ(p.predicted, i);
    EXPECT_NEAR(p.posteriors[0] + p.posteriors[1] + p.posteriors[2], 1.0, 1e-12);
    // argmax of posteriors equals argmax of linear scores
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k) {
      if (m.score(X[i], k) > m.score(X[i], best)) best = k;
    }
    EXPECT_EQ(best, p.predicted);
  }
}

TEST(TuneC, SingleGridValueAndTies) {
  std::mt19937_64 rng(5);
  std::vector<SparseVector> X;
  std::vector<std::size_t> y;
  std::vector<std::string> groups;
  for (int i = 0; i < 20; ++i) {
    X.push_back(random_row(rng, 5));
    y.push_back(i % 2);
    groups.push_back("g" + std::to_string(i));
  }
  TrainConfig one;
  one.C_grid = {3.0};
  EXPECT_DOUBLE_EQ(tune_C(X, y, 2, groups, one, 1).C, 3.0);

  // separable data: every grid value scores a perfect F1, so the smallest wins
  std::vector<SparseVector> Xs;
  for (int i = 0; i < 20; ++i) Xs.push_back(sv(1, {0}, {i % 2 ? 1.0 : -1.0}));
  TrainConfig tie;
  tie.C_grid = {0.5, 2.0};
  const auto r = tune_C(Xs, y, 2, groups, tie, 1);
  EXPECT_EQ(r.scores[0], r.scores[1]);
  EXPECT_DOUBLE_EQ(r.C, 0.5);
}

TEST(TuneC, ChosenValueIsGridArgmax) {
  std::mt19937_64 rng(6);
  std::vector<SparseVector> X;
  std::vector<std::size_t> y;
  std::vector<std::string> groups;
  std::uniform_real_distribution<double> noise(-0.6, 0.6);
  for (int i = 0; i < 60; ++i) {
    auto row = random_row(rng, 8);
    const bool pos = row.value_at(0) - row.value_at(3) + noise(rng) > 0;
    X.push_back(row);
    y.push_back(pos);
    groups.push_back("doc" + std::to_string(i / 3));
  }
  TrainConfig c;
  const auto r = tune_C(X, y, 2, groups, c, 9);
  ASSERT_EQ(r.scores.size(), c.C_grid.size());
  std::size_t chosen = 0;
  while (c.C_grid[chosen] != r.C) ++chosen;
  for (std::size_t k = 0; k < r.scores.size(); ++k) {
    EXPECT_GE(r.scores[chosen], r.scores[k]);
    if (k < chosen) {
      EXPECT_LT(r.scores[k], r.scores[chosen]);
    }
  }
}

TEST(TuneC, GroupFoldsKeepGroupsTogether) {
  std::vector<std::size_t> y;
  std::vector<std::string> groups;
  for (int g = 0; g < 12; ++g) {
    for (int k = 0; k < 4; ++k) {
      y.push_back(g % 3 == 0);
      groups.push_back("d" + std::to_string(g));
    }
  }
  const auto folds = stratified_group_folds(y, groups, 4, 3);
  std::map<std::string, std::set<std::size_t>> seen;
  for (std::size_t i = 0; i < y.size(); ++i) seen[groups[i]].insert(folds[i]);
  for (const auto& [g, f] : seen) EXPECT_EQ(f.size(), 1u) << g;
  std::map<std::size_t, std::size_t> pos_per_fold;
  for (std::size_t i = 0; i < y.size(); ++i) pos_per_fold[folds[i]] += y[i];
  for (const auto& [f, n] : pos_per_fold) EXPECT_EQ(n, 4u); // 4 positive groups over 4 folds, 4 rows each
}

TEST(TuneC, SkipsWhenAClassHasOneGroup) {
  const std::vector<SparseVector> X = {sv(1, {0}, {1.0}), sv(1, {0}, {-1.0}), sv(1, {0}, {-2.0})};
  const std::vector<std::size_t> y = {1, 0, 0};
  const std::vector<std::string> groups = {"a", "b", "c"};
  TrainConfig c;
  c.C = 7;
  const auto r = tune_C(X, y, 2, groups, c, 1);
  EXPECT_TRUE(r.skipped);
  EXPECT_DOUBLE_EQ(r.C, 7.0);
}

TEST(Explain, ContributionsSumToScore) {
  TrainedModel m;
  m.classes = {"neg", "pos"};
  m.weights = {{0.5, -2.0, 1.0}};
  m.bias = {0.25};
  m.dimension = 3;
  EXPECT_TRUE(explain(m, sv(3, {}, {}), 5).empty());
  const auto one = explain(m, sv(3, {2}, {0.3}), 5);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].column, 2u);
  const auto x = sv(3, {0, 1, 2}, {1.0, 0.5, 0.2});
  const auto all = explain(m, x, 0);
  double sum = m.bias[0];
  for (const auto& c : all) sum += c.contribution;
  EXPECT_NEAR(sum, m.score(x), 1e-15);
  EXPECT_EQ(all[0].column, 1u); // |-1.0| is the largest
}

TEST(ModelIo, RoundTripAndFingerprintCheck) {
  const std::vector<SparseVector> X = {sv(2, {0}, {-1.0}), sv(2, {1}, {1.0})};
  const std::vector<std::size_t> y = {0, 1};
  const auto m = train_binary(X, y, TrainConfig{}, {"n", "p"}, 1234);
  const auto back = TrainedModel::from_text(m.to_text());
  EXPECT_EQ(back.to_text(), m.to_text());
  EXPECT_EQ(predict_proba(back, X[1]).posteriors, predict_proba(m, X[1]).posteriors);
  const auto dir = testing::temp_dir("model_io");
  m.save(dir / "model.txt");
  EXPECT_NO_THROW(TrainedModel::load(dir / "model.txt", 1234));
  EXPECT_THROW(TrainedModel::load(dir / "model.txt", 999), Error);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  c.C_grid = {};
  EXPECT_THROW(c.validate(), ConfigError);
  c.C_grid = {1.0, -1.0};
  EXPECT_THROW(c.validate(), ConfigError);
}

} // namespace
} // namespace avkit
