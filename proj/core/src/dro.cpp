#include "avkit/dro.hpp"

#include <algorithm>
#include <cmath>

#include "avkit/error.hpp"
#include "avkit/parallel.hpp"

namespace avkit {

void DroConfig::validate() const {
  if (!(target_positive_ratio > 0.0 && target_positive_ratio < 1.0)) {
    throw ConfigError("DRO target_positive_ratio must lie in (0, 1)");
  }
}

std::size_t DroConfig::samples_for(double occurrences) const {
  std::size_t m = fixed_samples > 0 ? fixed_samples
                                    : static_cast<std::size_t>(std::max(1.0, std::round(occurrences)));
  if (max_samples > 0) m = std::min(m, max_samples);
  return m;
}

DistributionalProfiles DistributionalProfiles::fit(std::span<const SparseVector> training,
                                                   std::size_t latent_dimension) {
  if (training.empty()) throw Error("DRO: cannot fit profiles on an empty training matrix");
  const std::size_t dim = training.front().dimension;
  DistributionalProfiles p;
  p.latent_dimension_ = latent_dimension == 0 ? training.size() : latent_dimension;

  std::vector<std::vector<std::pair<std::uint32_t, double>>> per_feature(dim);
  for (std::size_t i = 0; i < training.size(); ++i) {
    const auto& row = training[i];
    if (row.dimension != dim) throw Error("DRO: training rows have inconsistent dimensions");
    const auto latent = static_cast<std::uint32_t>(i % p.latent_dimension_);
    for (std::size_t k = 0; k < row.nnz(); ++k) {
      if (row.values[k] < 0.0) throw Error("DRO: feature weights must be nonnegative");
      if (row.values[k] > 0.0) per_feature[row.indices[k]].emplace_back(latent, row.values[k]);
    }
  }

  p.offsets_.assign(1, 0);
  p.offsets_.reserve(dim + 1);
  for (auto& entries : per_feature) {
    std::sort(entries.begin(), entries.end());
    // merge latent indices shared by several instances (latent_dimension < N)
    std::size_t out = 0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (out > 0 && entries[out - 1].first == entries[k].first) {
        entries[out - 1].second += entries[k].second;
      } else {
        entries[out++] = entries[k];
      }
    }
    entries.resize(out);
    double total = 0.0;
    for (auto& e : entries) total += e.second;
    double running = 0.0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      running += entries[k].second;
      p.latent_.push_back(entries[k].first);
      p.cumulative_.push_back(k + 1 == entries.size() ? 1.0 : running / total);
    }
    p.offsets_.push_back(p.latent_.size());
  }
  return p;
}

bool DistributionalProfiles::uses_fallback(std::uint32_t f) const { return offsets_.at(f) == offsets_.at(f + 1); }

double DistributionalProfiles::probability(std::uint32_t f, std::uint32_t latent) const {
  if (uses_fallback(f)) return 1.0 / static_cast<double>(latent_dimension_);
  const auto first = latent_.begin() + static_cast<std::ptrdiff_t>(offsets_[f]);
  const auto last = latent_.begin() + static_cast<std::ptrdiff_t>(offsets_[f + 1]);
  auto it = std::lower_bound(first, last, latent);
  if (it == last || *it != latent) return 0.0;
  const auto k = static_cast<std::size_t>(it - latent_.begin());
  return cumulative_[k] - (k == offsets_[f] ? 0.0 : cumulative_[k - 1]);
}

std::vector<double> DistributionalProfiles::distribution(std::uint32_t f) const {
  std::vector<double> out(latent_dimension_, 0.0);
  if (uses_fallback(f)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(latent_dimension_));
    return out;
  }
  for (std::size_t k = offsets_[f]; k < offsets_[f + 1]; ++k) {
    out[latent_[k]] = cumulative_[k] - (k == offsets_[f] ? 0.0 : cumulative_[k - 1]);
  }
  return out;
}

std::uint32_t DistributionalProfiles::sample(std::uint32_t f, Rng& rng) const {
  if (uses_fallback(f)) return static_cast<std::uint32_t>(uniform_index(rng, latent_dimension_));
  const auto first = cumulative_.begin() + static_cast<std::ptrdiff_t>(offsets_[f]);
  const auto last = cumulative_.begin() + static_cast<std::ptrdiff_t>(offsets_[f + 1]);
  auto it = std::upper_bound(first, last, uniform01(rng));
  if (it == last) --it;
  return latent_[static_cast<std::size_t>(it - cumulative_.begin())];
}

ExtendedVector extend(const SparseVector& vector, const DistributionalProfiles& profiles,
                      std::size_t m_samples, Rng& rng) {
  if (vector.dimension != profiles.natural_dimension()) {
    throw Error("DRO: vector dimension " + std::to_string(vector.dimension) +
                " does not match the profiles' feature space (" +
                std::to_string(profiles.natural_dimension()) + ")");
  }
  ExtendedVector out;
  out.natural = vector;
  out.latent.instance_id = vector.instance_id;
  out.latent.dimension = profiles.latent_dimension();

  std::vector<double> cumulative;
  cumulative.reserve(vector.nnz());
  double total = 0.0;
  for (double v : vector.values) {
    if (v < 0.0) throw Error("DRO: cannot extend a vector with negative values");
    total += v;
    cumulative.push_back(total);
  }
  if (total <= 0.0) return out;
  if (m_samples == 0) throw Error("DRO: m_samples must be positive for a nonzero vector");

  std::vector<double> counts(profiles.latent_dimension(), 0.0);
  for (std::size_t s = 0; s < m_samples; ++s) {
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), uniform01(rng) * total);
    if (it == cumulative.end()) --it;
    const auto feature = vector.indices[static_cast<std::size_t>(it - cumulative.begin())];
    counts[profiles.sample(feature, rng)] += 1.0;
  }
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  const double norm = std::sqrt(sq);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0.0) {
      out.latent.indices.push_back(static_cast<std::uint32_t>(i));
      out.latent.values.push_back(counts[i] / norm);
    }
  }
  return out;
}

std::size_t synthetic_count(std::size_t n_pos, std::size_t n_neg, double ratio) {
  const double needed =
      (ratio * static_cast<double>(n_neg) - (1.0 - ratio) * static_cast<double>(n_pos)) / (1.0 - ratio);
  return needed <= 0.0 ? 0 : static_cast<std::size_t>(std::llround(needed));
}

std::vector<DroExample> oversample(std::span<const DroInput> training, const DistributionalProfiles& profiles,
                                   const DroConfig& config, unsigned threads) {
  config.validate();
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < training.size(); ++i) {
    if (training[i].positive) positives.push_back(i);
  }
  if (positives.empty()) throw Error("DRO: no positive examples to oversample");
  const std::size_t n_neg = training.size() - positives.size();
  const std::size_t s = synthetic_count(positives.size(), n_neg, config.target_positive_ratio);

  std::vector<DroExample> out(training.size() + s);
  for (std::size_t i = 0; i < training.size(); ++i) {
    out[i].positive = training[i].positive;
    out[i].source = i;
  }
  Rng picker(derive_seed(config.seed, "dro-synthetic-sources"));
  std::vector<std::size_t> replicas(training.size(), 0);
  for (std::size_t j = 0; j < s; ++j) {
    const auto src = positives[uniform_index(picker, positives.size())];
    auto& ex = out[training.size() + j];
    ex.positive = true;
    ex.source = src;
    ex.synthetic = true;
    ex.replica = ++replicas[src];
  }

  parallel_for(out.size(), threads, [&](std::size_t k) {
    auto& ex = out[k];
    const auto& in = training[ex.source];
    Rng rng(derive_seed(config.seed, in.vector.instance_id, ex.replica));
    ex.vector = extend(in.vector, profiles, config.samples_for(in.occurrences), rng);
  });
  return out;
}

} // namespace avkit
