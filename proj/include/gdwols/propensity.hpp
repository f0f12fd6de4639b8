#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdwols/panel.hpp"

namespace gdwols {

enum class WeightKind { ipt, overlap };

WeightKind parse_weight_kind(const std::string& name);
std::string to_string(WeightKind kind);

struct PropensityOptions {
  double tol = 1e-8;   // sup-norm of the score at convergence
  int max_iter = 100;
  double ridge = 1e-8; // added to the information diagonal when singular
};

// Multinomial logistic model for treatment assignment. Row l of alpha holds
// the coefficients (intercept first) of the l-th non-reference category; the
// reference category has linear predictor zero.
struct PropensityFit {
  TreatmentCoding coding;
  std::vector<std::string> covariate_names;
  Eigen::MatrixXd alpha;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  bool separation_warning = false;
  Eigen::MatrixXd information;    // observed information at the solution
  std::vector<double> ll_trace;   // log-likelihood after each accepted step

  // Generalized propensity pi(x, a) for every category, coding order.
  // covariates must be aligned with covariate_names (no intercept).
  Eigen::VectorXd probabilities(const Eigen::VectorXd& covariates) const;
};

// Thrown when Newton iteration runs out of iterations; carries the last
// iterate so callers can inspect how far the fit got.
class convergence_error : public std::runtime_error {
 public:
  convergence_error(const std::string& what, PropensityFit last)
      : std::runtime_error(what), last_(std::move(last)) {}
  const PropensityFit& last_fit() const { return last_; }

 private:
  PropensityFit last_;
};

PropensityFit fit_multinomial_logit(const PanelDataset& dataset,
                                    const std::vector<std::string>& covariates,
                                    const PropensityOptions& options = {});

Eigen::VectorXd generalized_propensity(const PropensityFit& fit,
                                       const Eigen::VectorXd& covariates);

// Balancing weight for one category given the full generalized propensity
// vector. IPT: 1 / pi(a). Overlap: 1 / (pi(a) * sum_l 1 / pi(a_l)), which
// lies strictly inside (0, 1).
double balancing_weight(const Eigen::VectorXd& gps, std::size_t category,
                        WeightKind kind);

// Largest pairwise deviation of pi(a) * w(a) across categories; exact
// balancing makes this zero up to rounding.
double verify_balancing(const Eigen::VectorXd& gps, WeightKind kind);

// Per-observation weights for a whole panel. cap > 0 trims weights at the
// cap; cap == 0 leaves them untouched.
Eigen::VectorXd observation_weights(const PanelDataset& dataset,
                                    const PropensityFit& fit, WeightKind kind,
                                    double cap = 0.0);

}  // namespace gdwols
