#include "gdwols/rng.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gdwols {

namespace {

// splitmix64 finalizer; good avalanche behaviour and cheap.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

double normal_cdf(double z) { return boost::math::cdf(kStdNormal, z); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1), got " +
                                std::to_string(p));
  }
  return boost::math::quantile(kStdNormal, p);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double sd) {
  if (!(sd > 0.0)) {
    throw std::invalid_argument("Rng::normal: sd must be positive.");
  }
  double u = uniform();
  // Keep the argument strictly inside (0, 1).
  if (u <= 0.0) u = 0x1.0p-53;
  return mean + sd * normal_quantile(u);
}

double Rng::truncated_normal(double mean, double sd, double lo, double hi) {
  if (!(sd > 0.0)) {
    throw std::invalid_argument("Rng::truncated_normal: sd must be positive.");
  }
  if (!(lo < hi)) {
    throw std::invalid_argument(
        "Rng::truncated_normal: lower bound must be below upper bound.");
  }
  const double a = normal_cdf((lo - mean) / sd);
  const double b = normal_cdf((hi - mean) / sd);
  if (!(b > a)) {
    throw std::runtime_error(
        "Rng::truncated_normal: truncation interval carries no probability "
        "mass.");
  }
  double p = a + uniform() * (b - a);
  if (p <= 0.0) p = 0x1.0p-53;
  if (p >= 1.0) p = 1.0 - 0x1.0p-53;
  const double x = mean + sd * normal_quantile(p);
  return std::min(hi, std::max(lo, x));
}

bool Rng::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("Rng::bernoulli: p must lie in [0, 1].");
  }
  return uniform() < p;
}

std::size_t Rng::categorical(const std::vector<double>& probs) {
  if (probs.empty()) {
    throw std::invalid_argument("Rng::categorical: empty probability vector.");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument(
          "Rng::categorical: probabilities must be finite and nonnegative.");
    }
    total += p;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument(
        "Rng::categorical: probabilities sum to zero.");
  }
  const double threshold = uniform() * total;
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
    cum += probs[k];
    if (threshold < cum) return k;
  }
  return probs.size() - 1;
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("Rng::uniform_index: n must be positive.");
  }
  const std::size_t k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

}  // namespace gdwols
