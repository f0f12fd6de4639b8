#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gdwols/design.hpp"
#include "gdwols/propensity.hpp"

namespace gdwols {

// Fitted dynamic weighted regression. beta is the treatment-free block; psi
// holds one blip coefficient block per non-reference category, coding order.
struct GdwolsFit {
  DesignSpec spec;
  TreatmentCoding coding;
  WeightKind weight_kind = WeightKind::ipt;
  Eigen::VectorXd beta;
  std::vector<Eigen::VectorXd> psi;
  Eigen::MatrixXd vcov;  // cluster-robust, stacked (beta, psi...) order
  std::vector<std::string> column_labels;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  std::size_t n_subjects = 0;
  std::size_t n_obs = 0;

  Eigen::VectorXd stacked() const;
  // Position of a category among the non-reference blocks; throws on the
  // reference category.
  std::size_t blip_block_of(std::size_t category) const;
};

// Solves the stacked weighted estimating equations by QR on the row-scaled
// design. Weights must be positive and finite; every treatment category must
// appear with positive total weight.
GdwolsFit fit_gdwols(const PanelDataset& dataset, const DesignSpec& spec,
                     const Eigen::VectorXd& weights, WeightKind kind);

// Estimated blip gamma(x, a) for one category at x_psi = (1, blip covs).
// Zero for the reference category by construction.
double blip_contrast(const GdwolsFit& fit, const Eigen::VectorXd& x_psi,
                     std::size_t category);

// Decision rule on raw contrasts (non-reference categories, coding order):
// the earliest maximizer when some contrast is positive, otherwise the
// reference category. Returns a category index into the coding.
std::size_t optimal_category(const TreatmentCoding& coding,
                             const std::vector<double>& contrasts);

std::size_t optimal_treatment(const GdwolsFit& fit,
                              const Eigen::VectorXd& x_psi);

// Cluster-robust covariance B^{-1} M B^{-1} with B = sum_i z_i w_i z_i' and
// M summing outer products of per-subject score contributions.
Eigen::MatrixXd sandwich_vcov(
    const Eigen::MatrixXd& design, const Eigen::VectorXd& weights,
    const Eigen::VectorXd& residuals,
    const std::vector<std::vector<std::size_t>>& subject_groups);

// Sup-norm of the stacked estimating equation at the fit, and the natural
// magnitude to compare it against.
double estimating_equation_gap(const Eigen::MatrixXd& design,
                               const Eigen::VectorXd& weights,
                               const Eigen::VectorXd& residuals);
double estimating_equation_scale(const Eigen::MatrixXd& design,
                                 const Eigen::VectorXd& weights,
                                 const Eigen::VectorXd& outcomes);

struct InferenceOptions {
  enum class Method { sandwich, bootstrap };
  Method method = Method::sandwich;
  int replicates = 500;
  double level = 0.95;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct BootstrapSummary {
  std::vector<std::string> column_labels;
  Eigen::VectorXd estimate;  // point estimates from the full-sample fit
  Eigen::VectorXd se;        // SD of replicate estimates
  Eigen::VectorXd lower;     // percentile interval bounds
  Eigen::VectorXd upper;
  int requested = 0;
  int used = 0;
  int failed = 0;
};

// Subject-level (cluster) bootstrap. Every replicate resamples subjects with
// replacement and reruns the whole pipeline: propensity fit, weights, and the
// weighted regression. Replicate r draws its stream from (seed, r), so
// replicates may run concurrently without changing the result.
BootstrapSummary bootstrap_inference(
    const PanelDataset& dataset, const DesignSpec& spec,
    const std::vector<std::string>& propensity_covariates,
    const PropensityOptions& propensity_options, WeightKind kind,
    const InferenceOptions& options);

struct CoefficientInterval {
  std::string label;
  double estimate = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool significant = false;  // interval excludes zero
};

// Wald intervals from the sandwich covariance.
std::vector<CoefficientInterval> confidence_intervals(const GdwolsFit& fit,
                                                      double level);

}  // namespace gdwols
