#pragma once

// Distributional Random Oversampling.
//
// Each natural feature f gets a categorical distribution pi_f over latent
// indices (one per training instance by default), proportional to the weight
// f carries in each training instance. A vector is extended by repeatedly
// drawing a feature in proportion to its value and then a latent index from
// that feature's profile; the normalized draw counts form the latent block.
// Re-extending a minority example with fresh randomness yields a synthetic
// example with the same natural block and a different latent block.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "avkit/random.hpp"
#include "avkit/sparse.hpp"

namespace avkit {

struct DroConfig {
  double target_positive_ratio = 0.20;
  // 0: one latent index per training instance.
  std::size_t latent_dimension = 0;
  // 0: draw as many samples as the instance has feature occurrences.
  std::size_t fixed_samples = 0;
  // 0: uncapped.
  std::size_t max_samples = 0;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t samples_for(double occurrences) const;
};

class DistributionalProfiles {
public:
  static DistributionalProfiles fit(std::span<const SparseVector> training,
                                    std::size_t latent_dimension = 0);

  std::size_t natural_dimension() const noexcept { return offsets_.size() - 1; }
  std::size_t latent_dimension() const noexcept { return latent_dimension_; }
  // True when the feature had zero total weight and uses the uniform fallback.
  bool uses_fallback(std::uint32_t feature) const;
  double probability(std::uint32_t feature, std::uint32_t latent) const;
  // Dense copy of pi_f.
  std::vector<double> distribution(std::uint32_t feature) const;
  std::uint32_t sample(std::uint32_t feature, Rng& rng) const;

private:
  std::size_t latent_dimension_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> latent_;
  std::vector<double> cumulative_; // per-feature running sums ending at 1
};

struct ExtendedVector {
  SparseVector natural;
  SparseVector latent; // dimension = latent dimension

  // natural ++ latent as one learner input.
  SparseVector combined() const { return concat(natural, latent); }
};

ExtendedVector extend(const SparseVector& vector, const DistributionalProfiles& profiles,
                      std::size_t m_samples, Rng& rng);

// Synthetic positives needed to bring positives to `ratio` of the set, rounded
// to the nearest whole example and never negative.
std::size_t synthetic_count(std::size_t n_pos, std::size_t n_neg, double ratio);

struct DroInput {
  SparseVector vector;
  bool positive = false;
  double occurrences = 0.0;
};

struct DroExample {
  ExtendedVector vector;
  bool positive = false;
  std::size_t source = 0; // index into the input set
  bool synthetic = false;
  std::size_t replica = 0; // 0 for the original extension
};

// Extends every input once, then appends synthetic positives re-extended from
// randomly chosen input positives. Seeds derive from (config.seed, instance id, replica).
std::vector<DroExample> oversample(std::span<const DroInput> training,
                                   const DistributionalProfiles& profiles, const DroConfig& config,
                                   unsigned threads = 1);

} // namespace avkit
