#include <random>

#include <gtest/gtest.h>

#include "avkit/error.hpp"
#include "avkit/metrics.hpp"

namespace avkit {
namespace {

// Independent reference: walk the individual decisions behind a table.
struct Decision {
  bool truth;
  bool predicted;
};

std::vector<Decision> expand(const ContingencyTable& t) {
  std::vector<Decision> out;
  out.insert(out.end(), t.tp, {true, true});
  out.insert(out.end(), t.fp, {false, true});
  out.insert(out.end(), t.fn, {true, false});
  out.insert(out.end(), t.tn, {false, false});
  return out;
}

double reference_f1(const std::vector<Decision>& ds) {
  double hit = 0, predicted = 0, actual = 0;
  for (const auto& d : ds) {
    hit += d.truth && d.predicted;
    predicted += d.predicted;
    actual += d.truth;
  }
  // harmonic mean of precision and recall, written as 2*hit/(predicted+actual)
  if (predicted + actual == 0) return 1.0;
  return 2 * hit / (predicted + actual);
}

double reference_accuracy(const std::vector<Decision>& ds) {
  double ok = 0;
  for (const auto& d : ds) ok += d.truth == d.predicted;
  return ok / static_cast<double>(ds.size());
}

TEST(F1, PaperAnchors) {
  EXPECT_NEAR(f1(ContingencyTable{16, 1, 0, 313}), 0.970, 5e-4);
  EXPECT_DOUBLE_EQ(f1(ContingencyTable{16, 1, 0, 313}), 32.0 / 33.0);
  EXPECT_DOUBLE_EQ(f1(ContingencyTable{4, 0, 12, 314}), 0.400);
  EXPECT_DOUBLE_EQ(f1(ContingencyTable{0, 0, 0, 10}), 1.0);
}

TEST(Accuracy, PaperAnchors) {
  EXPECT_NEAR(vanilla_accuracy(ContingencyTable{16, 1, 0, 313}), 0.997, 5e-4);
  EXPECT_DOUBLE_EQ(vanilla_accuracy(ContingencyTable{16, 1, 0, 313}), 329.0 / 330.0);
  EXPECT_NEAR(285.0 / 307.0, 0.928, 5e-4);
  EXPECT_DOUBLE_EQ(vanilla_accuracy(ContingencyTable{5, 0, 0, 7}), 1.0);
  EXPECT_THROW(vanilla_accuracy(ContingencyTable{}), std::invalid_argument);
}

TEST(SoftF1, Examples) {
  const std::vector<BinaryOutcome> perfect = {{true, 1.0}, {false, 0.0}};
  EXPECT_DOUBLE_EQ(soft_f1(perfect), 1.0);
  const std::vector<BinaryOutcome> mixed = {{true, 0.8}, {false, 0.2}};
  EXPECT_NEAR(soft_f1(mixed), 0.8, 1e-15);
  const std::vector<BinaryOutcome> bad = {{true, 1.2}};
  EXPECT_THROW(soft_f1(bad), std::invalid_argument);
}

TEST(MacroF1, Examples) {
  const std::vector<ContingencyTable> half = {{1, 0, 0, 1}, {0, 1, 1, 0}};
  EXPECT_DOUBLE_EQ(macro_f1(half), 0.5);
  const std::vector<ContingencyTable> perfect = {{2, 0, 0, 1}, {1, 0, 0, 2}};
  EXPECT_DOUBLE_EQ(macro_f1(perfect), 1.0);
  EXPECT_THROW(macro_f1(std::vector<ContingencyTable>{}), std::invalid_argument);
}

TEST(Metrics, MatchBruteForceOnRandomTables) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    ContingencyTable t{rng() % 20, rng() % 20, rng() % 20, rng() % 20};
    if (t.total() == 0) t.tn = 1;
    const auto ds = expand(t);
    EXPECT_NEAR(f1(t), reference_f1(ds), 1e-12);
    EXPECT_NEAR(vanilla_accuracy(t), reference_accuracy(ds), 1e-12);
  }
}

TEST(Metrics, SoftF1MatchesBruteForceAndHardCase) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<BinaryOutcome> out(1 + rng() % 15);
    for (auto& o : out) o = {rng() % 2 == 0, u(rng)};
    double stp = 0, sfp = 0, sfn = 0;
    for (const auto& o : out) {
      (o.positive ? stp : sfp) += o.posterior;
      if (o.positive) sfn += 1 - o.posterior;
    }
    const double expected = (2 * stp + sfp + sfn) == 0 ? 1.0 : 2 * stp / (2 * stp + sfp + sfn);
    EXPECT_NEAR(soft_f1(out), expected, 1e-12);

    // {0,1} posteriors: soft equals hard
    for (auto& o : out) o.posterior = rng() % 2;
    EXPECT_NEAR(soft_f1(out), f1(hard_table(out)), 1e-12);
  }
}

TEST(Metrics, MacroF1MatchesBruteForce) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng() % 4;
    std::vector<std::size_t> truth(1 + rng() % 30), pred(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
      truth[i] = rng() % k;
      pred[i] = rng() % k;
    }
    double sum = 0;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<Decision> ds;
      for (std::size_t i = 0; i < truth.size(); ++i) ds.push_back({truth[i] == c, pred[i] == c});
      sum += reference_f1(ds);
    }
    const auto tables = one_vs_rest(truth, pred, k);
    EXPECT_NEAR(macro_f1(tables), sum / static_cast<double>(k), 1e-12);
    const auto cm = confusion_matrix(truth, pred, k);
    std::size_t diag = 0, total = 0;
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) total += cm[r][c];
      diag += cm[r][r];
    }
    EXPECT_EQ(total, truth.size());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
    EXPECT_EQ(diag, correct);
  }
}

TEST(Median, OddAndEven) {
  EXPECT_DOUBLE_EQ(median({0.2, 0.9, 0.5}), 0.5);
  EXPECT_DOUBLE_EQ(median({0.2, 0.4}), 0.3);
  EXPECT_THROW(median({}), std::invalid_argument);
}

} // namespace
} // namespace avkit
