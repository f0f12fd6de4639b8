#include "gdwols/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gdwols/parallel.hpp"
#include "gdwols/rng.hpp"

namespace gdwols {

Eigen::VectorXd GdwolsFit::stacked() const {
  Eigen::Index total = beta.size();
  for (const auto& block : psi) total += block.size();
  Eigen::VectorXd theta(total);
  theta.head(beta.size()) = beta;
  Eigen::Index at = beta.size();
  for (const auto& block : psi) {
    theta.segment(at, block.size()) = block;
    at += block.size();
  }
  return theta;
}

std::size_t GdwolsFit::blip_block_of(std::size_t category) const {
  const auto blocks = coding.non_reference();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b] == category) return b;
  }
  throw std::invalid_argument(
      "GdwolsFit: category '" + coding.categories.at(category) +
      "' is the reference and has no blip block.");
}

GdwolsFit fit_gdwols(const PanelDataset& dataset, const DesignSpec& spec,
                     const Eigen::VectorXd& weights, WeightKind kind) {
  dataset.validate();
  const auto n = static_cast<Eigen::Index>(dataset.observations.size());
  if (n == 0) {
    throw std::invalid_argument("fit_gdwols: dataset is empty.");
  }
  if (weights.size() != n) {
    throw std::invalid_argument("fit_gdwols: weight vector has length " +
                                std::to_string(weights.size()) + ", expected " +
                                std::to_string(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw std::invalid_argument(
          "fit_gdwols: weights must be positive and finite (row " +
          std::to_string(i) + ")");
    }
  }

  const auto counts = dataset.category_counts();
  std::vector<double> weight_totals(dataset.coding.size(), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    weight_totals[dataset.observations[static_cast<std::size_t>(i)].treatment] +=
        weights[i];
  }
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0 || !(weight_totals[k] > 0.0)) {
      throw std::invalid_argument(
          "fit_gdwols: treatment category '" + dataset.coding.categories[k] +
          "' carries no weight in the sample.");
    }
  }

  DesignMatrix design = build_design_matrix(dataset, spec);
  const Eigen::Index q = design.values.cols();
  if (n < q) {
    throw std::invalid_argument(
        "fit_gdwols: fewer observations than coefficients (" +
        std::to_string(n) + " < " + std::to_string(q) + ")");
  }

  const Eigen::ArrayXd root_w = weights.array().sqrt();
  const Eigen::MatrixXd scaled =
      (design.values.array().colwise() * root_w).matrix();
  Eigen::VectorXd outcomes(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    outcomes[i] = dataset.observations[static_cast<std::size_t>(i)].outcome;
  }
  const Eigen::VectorXd scaled_y = (outcomes.array() * root_w).matrix();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  if (qr.rank() < q) {
    const auto perm = qr.colsPermutation().indices();
    std::string redundant;
    for (Eigen::Index k = qr.rank(); k < q; ++k) {
      if (!redundant.empty()) redundant += ", ";
      redundant += design.column_labels[static_cast<std::size_t>(perm[k])];
    }
    throw std::invalid_argument(
        "fit_gdwols: design matrix is rank deficient; dependent columns: " +
        redundant);
  }
  const Eigen::VectorXd theta = qr.solve(scaled_y);

  GdwolsFit fit;
  fit.spec = spec;
  fit.coding = dataset.coding;
  fit.weight_kind = kind;
  fit.column_labels = design.column_labels;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.n_subjects = dataset.subjects().size();

  const auto p = static_cast<Eigen::Index>(design.p);
  const auto r = static_cast<Eigen::Index>(design.r);
  fit.beta = theta.head(p);
  const auto blocks = dataset.coding.non_reference();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    fit.psi.push_back(
        theta.segment(p + static_cast<Eigen::Index>(b) * r, r));
  }

  fit.fitted = design.values * theta;
  fit.residuals = outcomes - fit.fitted;

  std::vector<std::vector<std::size_t>> groups;
  for (auto& [id, indices] : dataset.subjects()) {
    groups.push_back(indices);
  }
  fit.vcov = sandwich_vcov(design.values, weights, fit.residuals, groups);
  return fit;
}

double blip_contrast(const GdwolsFit& fit, const Eigen::VectorXd& x_psi,
                     std::size_t category) {
  if (category >= fit.coding.size()) {
    throw std::invalid_argument("blip_contrast: category index out of range.");
  }
  if (x_psi.size() != static_cast<Eigen::Index>(fit.spec.r())) {
    throw std::invalid_argument(
        "blip_contrast: x_psi has width " + std::to_string(x_psi.size()) +
        ", expected " + std::to_string(fit.spec.r()));
  }
  if (category == fit.coding.reference) return 0.0;
  return x_psi.dot(fit.psi[fit.blip_block_of(category)]);
}

std::size_t optimal_category(const TreatmentCoding& coding,
                             const std::vector<double>& contrasts) {
  const auto blocks = coding.non_reference();
  if (contrasts.size() != blocks.size()) {
    throw std::invalid_argument(
        "optimal_category: expected one contrast per non-reference category.");
  }
  double best = 0.0;
  std::size_t winner = coding.reference;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (!std::isfinite(contrasts[b])) {
      throw std::invalid_argument("optimal_category: non-finite contrast.");
    }
    if (contrasts[b] > best) {
      best = contrasts[b];
      winner = blocks[b];
    }
  }
  return winner;
}

std::size_t optimal_treatment(const GdwolsFit& fit,
                              const Eigen::VectorXd& x_psi) {
  std::vector<double> contrasts;
  for (std::size_t cat : fit.coding.non_reference()) {
    contrasts.push_back(blip_contrast(fit, x_psi, cat));
  }
  return optimal_category(fit.coding, contrasts);
}

Eigen::MatrixXd sandwich_vcov(
    const Eigen::MatrixXd& design, const Eigen::VectorXd& weights,
    const Eigen::VectorXd& residuals,
    const std::vector<std::vector<std::size_t>>& subject_groups) {
  const Eigen::Index q = design.cols();
  Eigen::MatrixXd bread = Eigen::MatrixXd::Zero(q, q);
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    bread.noalias() += weights[i] * (design.row(i).transpose() * design.row(i));
  }
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(q, q);
  for (const auto& group : subject_groups) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(q);
    for (std::size_t idx : group) {
      const auto i = static_cast<Eigen::Index>(idx);
      g.noalias() += weights[i] * residuals[i] * design.row(i).transpose();
    }
    meat.noalias() += g * g.transpose();
  }
  Eigen::LDLT<Eigen::MatrixXd> solver(bread);
  Eigen::MatrixXd half = solver.solve(meat);
  Eigen::MatrixXd vcov = solver.solve(half.transpose()).transpose();
  return 0.5 * (vcov + vcov.transpose());
}

double estimating_equation_gap(const Eigen::MatrixXd& design,
                               const Eigen::VectorXd& weights,
                               const Eigen::VectorXd& residuals) {
  const Eigen::VectorXd score =
      design.transpose() * (weights.array() * residuals.array()).matrix();
  return score.lpNorm<Eigen::Infinity>();
}

double estimating_equation_scale(const Eigen::MatrixXd& design,
                                 const Eigen::VectorXd& weights,
                                 const Eigen::VectorXd& outcomes) {
  const Eigen::VectorXd scale =
      design.cwiseAbs().transpose() *
      (weights.array() * outcomes.array().abs()).matrix();
  return std::max(1.0, scale.lpNorm<Eigen::Infinity>());
}

namespace {

// Type-7 quantile (order statistics with linear interpolation) on a sorted
// sample.
double sorted_quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) {
    throw std::invalid_argument("quantile of an empty sample.");
  }
  if (sorted.size() == 1) return sorted[0];
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

BootstrapSummary bootstrap_inference(
    const PanelDataset& dataset, const DesignSpec& spec,
    const std::vector<std::string>& propensity_covariates,
    const PropensityOptions& propensity_options, WeightKind kind,
    const InferenceOptions& options) {
  if (options.replicates < 1) {
    throw std::invalid_argument(
        "bootstrap_inference: need at least one replicate.");
  }
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw std::invalid_argument(
        "bootstrap_inference: confidence level must lie in (0, 1).");
  }

  // Full-sample fit fixes the coefficient layout and the point estimates.
  PropensityFit propensity =
      fit_multinomial_logit(dataset, propensity_covariates, propensity_options);
  const Eigen::VectorXd weights = observation_weights(dataset, propensity, kind);
  const GdwolsFit base = fit_gdwols(dataset, spec, weights, kind);
  const Eigen::VectorXd point = base.stacked();
  const auto q = static_cast<std::size_t>(point.size());

  const auto groups = dataset.subjects();
  const std::size_t n_subjects = groups.size();

  const auto R = static_cast<std::size_t>(options.replicates);
  std::vector<std::vector<double>> draws(R);
  std::vector<char> ok(R, 0);

  parallel_for(R, options.threads, [&](std::size_t rep) {
    Rng rng(mix_seed(options.seed, rep));
    PanelDataset resampled;
    resampled.coding = dataset.coding;
    resampled.covariate_names = dataset.covariate_names;
    resampled.observations.reserve(dataset.observations.size());
    for (std::size_t draw = 0; draw < n_subjects; ++draw) {
      const std::size_t pick = rng.uniform_index(n_subjects);
      for (std::size_t idx : groups[pick].second) {
        StageObservation obs = dataset.observations[idx];
        // Distinct copies of a resampled subject stay distinct clusters.
        obs.subject_id = "b" + std::to_string(draw) + ":" + obs.subject_id;
        resampled.observations.push_back(std::move(obs));
      }
    }
    try {
      const PropensityFit prop = fit_multinomial_logit(
          resampled, propensity_covariates, propensity_options);
      const Eigen::VectorXd w = observation_weights(resampled, prop, kind);
      const GdwolsFit fit = fit_gdwols(resampled, spec, w, kind);
      const Eigen::VectorXd theta = fit.stacked();
      draws[rep].assign(theta.data(), theta.data() + theta.size());
      ok[rep] = 1;
    } catch (const std::exception&) {
      ok[rep] = 0;
    }
  });

  BootstrapSummary summary;
  summary.column_labels = base.column_labels;
  summary.estimate = point;
  summary.requested = options.replicates;
  summary.se = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q));
  summary.lower = point;
  summary.upper = point;

  std::vector<std::size_t> kept;
  for (std::size_t rep = 0; rep < R; ++rep) {
    if (ok[rep]) kept.push_back(rep);
  }
  summary.used = static_cast<int>(kept.size());
  summary.failed = summary.requested - summary.used;
  if (kept.empty()) {
    throw std::runtime_error("bootstrap_inference: every replicate failed.");
  }

  const double lo_p = (1.0 - options.level) / 2.0;
  const double hi_p = 1.0 - lo_p;
  std::vector<double> column(kept.size());
  for (std::size_t j = 0; j < q; ++j) {
    for (std::size_t k = 0; k < kept.size(); ++k) {
      column[k] = draws[kept[k]][j];
    }
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(column.size());
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    const double sd = column.size() > 1
                          ? std::sqrt(ss / static_cast<double>(column.size() - 1))
                          : 0.0;
    std::sort(column.begin(), column.end());
    summary.se[static_cast<Eigen::Index>(j)] = sd;
    summary.lower[static_cast<Eigen::Index>(j)] = sorted_quantile(column, lo_p);
    summary.upper[static_cast<Eigen::Index>(j)] = sorted_quantile(column, hi_p);
  }
  return summary;
}

std::vector<CoefficientInterval> confidence_intervals(const GdwolsFit& fit,
                                                      double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument(
        "confidence_intervals: level must lie in (0, 1).");
  }
  const double z = normal_quantile(0.5 + level / 2.0);
  const Eigen::VectorXd theta = fit.stacked();
  std::vector<CoefficientInterval> out;
  out.reserve(static_cast<std::size_t>(theta.size()));
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    CoefficientInterval row;
    row.label = fit.column_labels[static_cast<std::size_t>(j)];
    row.estimate = theta[j];
    row.se = std::sqrt(std::max(0.0, fit.vcov(j, j)));
    row.lower = row.estimate - z * row.se;
    row.upper = row.estimate + z * row.se;
    row.significant = row.lower > 0.0 || row.upper < 0.0;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace gdwols
