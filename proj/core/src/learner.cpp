#include "avkit/learner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "avkit/error.hpp"
#include "avkit/lbfgs.hpp"
#include "avkit/metrics.hpp"
#include "avkit/parallel.hpp"
#include "avkit/random.hpp"

namespace avkit {

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

std::size_t common_dimension(std::span<const SparseVector> X) {
  if (X.empty()) throw Error("training set is empty");
  const std::size_t dim = X.front().dimension;
  for (const auto& row : X) {
    if (row.dimension != dim) throw Error("training rows have inconsistent dimensions");
    for (double v : row.values) {
      if (!std::isfinite(v)) throw Error("training row '" + row.instance_id + "' has non-finite features");
    }
  }
  return dim;
}

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc()) throw Error("model file: bad number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

} // namespace

void TrainConfig::validate() const {
  if (!(C > 0.0)) throw ConfigError("C must be positive");
  if (C_grid.empty()) throw ConfigError("C grid is empty");
  for (std::size_t i = 0; i < C_grid.size(); ++i) {
    if (!(C_grid[i] > 0.0)) throw ConfigError("C grid values must be positive");
    if (i > 0 && !(C_grid[i] > C_grid[i - 1])) throw ConfigError("C grid must be strictly increasing");
  }
  if (inner_folds < 2) throw ConfigError("inner_folds must be at least 2");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (max_iterations == 0) throw ConfigError("max_iterations must be positive");
}

// ---- objectives ----

BinaryLogisticObjective::BinaryLogisticObjective(std::span<const SparseVector> rows,
                                                 std::span<const std::size_t> labels, std::size_t dimension,
                                                 double C)
    : rows_(rows), labels_(labels), dimension_(dimension), C_(C) {}

double BinaryLogisticObjective::operator()(std::span<const double> params, std::span<double> grad) const {
  const auto w = params.first(dimension_);
  const double b = params[dimension_];
  double value = 0.0;
  for (std::size_t j = 0; j < dimension_; ++j) {
    value += 0.5 * w[j] * w[j];
    grad[j] = w[j];
  }
  grad[dimension_] = 0.0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const double sign = labels_[i] == 1 ? 1.0 : -1.0;
    const double z = rows_[i].dot(w) + b;
    value += C_ * softplus(-sign * z);
    const double coef = -C_ * sign * sigmoid(-sign * z);
    const auto& row = rows_[i];
    for (std::size_t k = 0; k < row.nnz(); ++k) grad[row.indices[k]] += coef * row.values[k];
    grad[dimension_] += coef;
  }
  return value;
}

SoftmaxObjective::SoftmaxObjective(std::span<const SparseVector> rows, std::span<const std::size_t> labels,
                                   std::size_t num_classes, std::size_t dimension, double C)
    : rows_(rows), labels_(labels), classes_(num_classes), dimension_(dimension), C_(C) {}

double SoftmaxObjective::operator()(std::span<const double> params, std::span<double> grad) const {
  const std::size_t K = classes_;
  const std::size_t D = dimension_;
  double value = 0.0;
  for (std::size_t j = 0; j < K * D; ++j) {
    value += 0.5 * params[j] * params[j];
    grad[j] = params[j];
  }
  for (std::size_t k = 0; k < K; ++k) grad[K * D + k] = 0.0;
  std::vector<double> z(K);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& row = rows_[i];
    for (std::size_t k = 0; k < K; ++k) z[k] = row.dot(params.subspan(k * D, D)) + params[K * D + k];
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double lse = zmax + std::log(sum);
    value += C_ * (lse - z[labels_[i]]);
    for (std::size_t k = 0; k < K; ++k) {
      const double coef = C_ * (std::exp(z[k] - lse) - (labels_[i] == k ? 1.0 : 0.0));
      double* gk = grad.data() + k * D;
      for (std::size_t n = 0; n < row.nnz(); ++n) gk[row.indices[n]] += coef * row.values[n];
      grad[K * D + k] += coef;
    }
  }
  return value;
}

// ---- model ----

double TrainedModel::score(const SparseVector& x, std::size_t row) const {
  return x.dot(weights.at(row)) + bias.at(row);
}

std::string TrainedModel::to_text() const {
  std::string out = "avkit-model\t1\nclasses";
  for (const auto& c : classes) out += "\t" + c;
  out += "\nC\t" + fmt(C) + "\n";
  out += "dimension\t" + std::to_string(dimension) + "\n";
  out += "fingerprint\t" + std::to_string(fingerprint) + "\n";
  out += "iterations\t" + std::to_string(iterations) + "\n";
  out += "converged\t" + std::string(converged ? "1" : "0") + "\n";
  out += "bias";
  for (double b : bias) out += "\t" + fmt(b);
  out += "\n";
  for (std::size_t r = 0; r < weights.size(); ++r) {
    std::size_t nnz = 0;
    for (double w : weights[r]) nnz += w != 0.0;
    out += "weights\t" + std::to_string(r) + "\t" + std::to_string(nnz) + "\n";
    for (std::size_t j = 0; j < weights[r].size(); ++j) {
      if (weights[r][j] != 0.0) out += std::to_string(j) + "\t" + fmt(weights[r][j]) + "\n";
    }
  }
  return out;
}

TrainedModel TrainedModel::from_text(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.size() < 8 || lines[0] != "avkit-model\t1") throw Error("model file: bad header or version");
  auto field = [&](std::size_t i, std::string_view key) {
    auto parts = split_tabs(lines[i]);
    if (parts.empty() || parts[0] != key) throw Error("model file: expected '" + std::string(key) + "'");
    parts.erase(parts.begin());
    return parts;
  };
  TrainedModel m;
  for (auto c : field(1, "classes")) m.classes.emplace_back(c);
  m.C = parse_double(field(2, "C").at(0));
  m.dimension = std::stoull(std::string(field(3, "dimension").at(0)));
  m.fingerprint = std::stoull(std::string(field(4, "fingerprint").at(0)));
  m.iterations = std::stoull(std::string(field(5, "iterations").at(0)));
  m.converged = field(6, "converged").at(0) == "1";
  for (auto b : field(7, "bias")) m.bias.push_back(parse_double(b));
  std::size_t i = 8;
  while (i < lines.size()) {
    auto head = field(i, "weights");
    const auto nnz = std::stoull(std::string(head.at(1)));
    std::vector<double> row(m.dimension, 0.0);
    for (std::size_t k = 0; k < nnz; ++k) {
      auto parts = split_tabs(lines.at(i + 1 + k));
      row.at(std::stoull(std::string(parts.at(0)))) = parse_double(parts.at(1));
    }
    m.weights.push_back(std::move(row));
    i += 1 + nnz;
  }
  if (m.weights.size() != m.bias.size()) throw Error("model file: weight rows do not match biases");
  return m;
}

void TrainedModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model: " + path.string());
  out << to_text();
}

TrainedModel TrainedModel::load(const std::filesystem::path& path, std::uint64_t expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read model: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto m = from_text(ss.str());
  if (m.fingerprint != expected_fingerprint) {
    throw Error("model was trained on a different feature space (fingerprint mismatch)");
  }
  return m;
}

// ---- training ----

TrainedModel train_binary(std::span<const SparseVector> X, std::span<const std::size_t> y,
                          const TrainConfig& config, std::vector<std::string> classes,
                          std::uint64_t fingerprint) {
  if (X.size() != y.size()) throw Error("train_binary: rows and labels differ in length");
  const std::size_t dim = common_dimension(X);
  std::size_t pos = 0;
  for (auto label : y) {
    if (label > 1) throw Error("train_binary: labels must be 0 or 1");
    pos += label;
  }
  if (pos == 0 || pos == y.size()) throw Error("train_binary: both classes must be present");
  if (classes.size() != 2) throw Error("train_binary: expected two class names");

  BinaryLogisticObjective objective(X, y, dim, config.C);
  auto result = minimize_lbfgs(std::cref(objective), std::vector<double>(dim + 1, 0.0),
                               {.tolerance = config.tolerance, .max_iterations = config.max_iterations});
  TrainedModel m;
  m.classes = std::move(classes);
  m.weights.emplace_back(result.x.begin(), result.x.begin() + static_cast<std::ptrdiff_t>(dim));
  m.bias.push_back(result.x[dim]);
  m.C = config.C;
  m.dimension = dim;
  m.fingerprint = fingerprint;
  m.iterations = result.iterations;
  m.converged = result.converged;
  return m;
}

TrainedModel train_multiclass(std::span<const SparseVector> X, std::span<const std::size_t> y,
                              std::vector<std::string> classes, const TrainConfig& config,
                              std::uint64_t fingerprint) {
  if (X.size() != y.size()) throw Error("train_multiclass: rows and labels differ in length");
  const std::size_t K = classes.size();
  if (K < 2) throw Error("train_multiclass: at least two classes required");
  const std::size_t dim = common_dimension(X);
  std::vector<std::size_t> per_class(K, 0);
  for (auto label : y) {
    if (label >= K) throw Error("train_multiclass: label out of range");
    ++per_class[label];
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (per_class[k] == 0) throw Error("train_multiclass: class '" + classes[k] + "' has no examples");
  }
  SoftmaxObjective objective(X, y, K, dim, config.C);
  auto result = minimize_lbfgs(std::cref(objective), std::vector<double>(K * (dim + 1), 0.0),
                               {.tolerance = config.tolerance, .max_iterations = config.max_iterations});
  TrainedModel m;
  m.classes = std::move(classes);
  for (std::size_t k = 0; k < K; ++k) {
    const auto first = result.x.begin() + static_cast<std::ptrdiff_t>(k * dim);
    m.weights.emplace_back(first, first + static_cast<std::ptrdiff_t>(dim));
    m.bias.push_back(result.x[K * dim + k]);
  }
  m.C = config.C;
  m.dimension = dim;
  m.fingerprint = fingerprint;
  m.iterations = result.iterations;
  m.converged = result.converged;
  return m;
}

Prediction predict_proba(const TrainedModel& model, const SparseVector& x) {
  if (x.dimension != model.dimension) {
    throw Error("predict_proba: vector dimension " + std::to_string(x.dimension) + " != model dimension " +
                std::to_string(model.dimension));
  }
  Prediction p;
  p.instance_id = x.instance_id;
  if (model.is_binary()) {
    const double pos = sigmoid(model.score(x));
    p.posteriors = {1.0 - pos, pos};
  } else {
    std::vector<double> z(model.weights.size());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = model.score(x, k);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
      v = std::exp(v - zmax);
      sum += v;
    }
    for (auto& v : z) v /= sum;
    p.posteriors = std::move(z);
  }
  p.predicted = static_cast<std::size_t>(std::max_element(p.posteriors.begin(), p.posteriors.end()) -
                                         p.posteriors.begin());
  return p;
}

// ---- tuning ----

std::vector<std::size_t> stratified_group_folds(std::span<const std::size_t> y,
                                                std::span<const std::string> groups, std::size_t folds,
                                                std::uint64_t seed) {
  // group -> class of its first member
  std::map<std::string, std::size_t> group_class;
  for (std::size_t i = 0; i < y.size(); ++i) group_class.emplace(groups[i], y[i]);
  std::map<std::size_t, std::vector<std::string>> by_class;
  for (const auto& [g, c] : group_class) by_class[c].push_back(g);

  Rng rng(derive_seed(seed, "inner-folds"));
  std::map<std::string, std::size_t> group_fold;
  std::size_t offset = 0;
  for (auto& [c, gs] : by_class) {
    for (std::size_t i = gs.size(); i > 1; --i) std::swap(gs[i - 1], gs[uniform_index(rng, i)]);
    for (std::size_t i = 0; i < gs.size(); ++i) group_fold[gs[i]] = (offset + i) % folds;
    offset += gs.size();
  }
  std::vector<std::size_t> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = group_fold.at(groups[i]);
  return out;
}

TuneResult tune_C(std::span<const SparseVector> X, std::span<const std::size_t> y, std::size_t num_classes,
                  std::span<const std::string> groups, const TrainConfig& config, std::uint64_t seed,
                  unsigned threads) {
  config.validate();
  if (X.size() != y.size() || X.size() != groups.size()) throw Error("tune_C: input sizes differ");
  TuneResult result;
  result.C = config.C;
  if (config.C_grid.size() == 1) {
    result.C = config.C_grid.front();
    result.scores = {std::numeric_limits<double>::quiet_NaN()};
    result.note = "single grid value";
    return result;
  }

  std::vector<std::map<std::string, int>> groups_per_class(num_classes);
  for (std::size_t i = 0; i < y.size(); ++i) groups_per_class.at(y[i])[groups[i]] = 1;
  std::size_t min_groups = std::numeric_limits<std::size_t>::max();
  for (const auto& g : groups_per_class) min_groups = std::min(min_groups, g.size());
  const std::size_t folds = std::min(config.inner_folds, min_groups);
  result.folds = folds;
  if (folds < 2) {
    result.skipped = true;
    result.note = "a class has fewer than 2 groups; C tuning skipped";
    result.scores.assign(config.C_grid.size(), std::numeric_limits<double>::quiet_NaN());
    return result;
  }
  if (folds < config.inner_folds) {
    result.note = "inner folds reduced to " + std::to_string(folds) + " (smallest class has " +
                  std::to_string(min_groups) + " groups)";
  }

  const auto fold_of = stratified_group_folds(y, groups, folds, seed);
  const std::size_t G = config.C_grid.size();
  // predicted class per (grid value, instance)
  std::vector<std::vector<std::size_t>> predicted(G, std::vector<std::size_t>(X.size()));
  parallel_for(G * folds, threads, [&](std::size_t task) {
    const std::size_t gi = task / folds;
    const std::size_t f = task % folds;
    std::vector<SparseVector> train_x;
    std::vector<std::size_t> train_y;
    for (std::size_t i = 0; i < X.size(); ++i) {
      if (fold_of[i] != f) {
        train_x.push_back(X[i]);
        train_y.push_back(y[i]);
      }
    }
    TrainConfig c = config;
    c.C = config.C_grid[gi];
    std::vector<std::string> names(num_classes);
    for (std::size_t k = 0; k < num_classes; ++k) names[k] = std::to_string(k);
    const TrainedModel m = num_classes == 2 ? train_binary(train_x, train_y, c, names)
                                            : train_multiclass(train_x, train_y, names, c);
    for (std::size_t i = 0; i < X.size(); ++i) {
      if (fold_of[i] == f) predicted[gi][i] = predict_proba(m, X[i]).predicted;
    }
  });

  double best = -1.0;
  for (std::size_t gi = 0; gi < G; ++gi) {
    double score;
    if (num_classes == 2) {
      ContingencyTable t;
      for (std::size_t i = 0; i < X.size(); ++i) {
        const bool truth = y[i] == 1;
        const bool pred = predicted[gi][i] == 1;
        t.tp += truth && pred;
        t.fp += !truth && pred;
        t.fn += truth && !pred;
        t.tn += !truth && !pred;
      }
      score = f1(t);
    } else {
      const auto tables = one_vs_rest(y, predicted[gi], num_classes);
      score = macro_f1(tables);
    }
    result.scores.push_back(score);
    if (score > best) {
      best = score;
      result.C = config.C_grid[gi];
    }
  }
  return result;
}

std::vector<Contribution> explain(const TrainedModel& model, const SparseVector& x, std::size_t top_k,
                                  const std::function<std::string(std::uint32_t)>& name_of) {
  if (!model.is_binary()) throw Error("explain: binary model required");
  std::vector<Contribution> out;
  for (std::size_t k = 0; k < x.nnz(); ++k) {
    const double c = model.weights[0].at(x.indices[k]) * x.values[k];
    if (c == 0.0) continue;
    out.push_back({x.indices[k], name_of ? name_of(x.indices[k]) : "col:" + std::to_string(x.indices[k]), c});
  }
  std::stable_sort(out.begin(), out.end(), [](const Contribution& a, const Contribution& b) {
    return std::abs(a.contribution) > std::abs(b.contribution);
  });
  if (top_k > 0 && out.size() > top_k) out.resize(top_k);
  return out;
}

} // namespace avkit
