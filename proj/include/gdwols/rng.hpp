#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gdwols {

// Deterministic stream derivation. Parallel replicates each build their own
// engine from (master seed, stream id, substream id), so results do not
// depend on scheduling or on how many threads executed the work.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

double normal_cdf(double z);
// Inverse of the standard normal CDF; p must lie strictly inside (0, 1).
double normal_quantile(double p);

// Thin wrapper around mt19937_64 with explicit value mappings. The standard
// distribution adapters are implementation defined, so every draw here is
// spelled out to keep byte-identical reruns under our control.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Normal draw through the inverse CDF.
  double normal(double mean, double sd);
  // Normal draw conditioned on [lo, hi], again via the inverse CDF so the
  // stream consumes exactly one uniform per sample.
  double truncated_normal(double mean, double sd, double lo, double hi);
  bool bernoulli(double p);
  // Index draw with probabilities proportional to probs (need not sum to 1).
  std::size_t categorical(const std::vector<double>& probs);
  // Uniform over {0, ..., n - 1}.
  std::size_t uniform_index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace gdwols
