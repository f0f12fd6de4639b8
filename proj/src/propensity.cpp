#include "gdwols/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gdwols {

WeightKind parse_weight_kind(const std::string& name) {
  if (name == "ipt") return WeightKind::ipt;
  if (name == "overlap") return WeightKind::overlap;
  throw std::invalid_argument("unknown weight kind '" + name +
                              "' (expected 'ipt' or 'overlap')");
}

std::string to_string(WeightKind kind) {
  return kind == WeightKind::ipt ? "ipt" : "overlap";
}

namespace {

// Stable softmax over (0, eta_1, ..., eta_{m-1}) mapped back to coding
// order. blocks[l] is the category index of linear predictor l.
Eigen::VectorXd softmax_probs(const Eigen::VectorXd& eta,
                              const std::vector<std::size_t>& blocks,
                              std::size_t reference, std::size_t m) {
  double top = 0.0;  // reference predictor
  for (Eigen::Index l = 0; l < eta.size(); ++l) top = std::max(top, eta[l]);
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  double denom = std::exp(-top);
  probs[static_cast<Eigen::Index>(reference)] = std::exp(-top);
  for (Eigen::Index l = 0; l < eta.size(); ++l) {
    const double e = std::exp(eta[l] - top);
    probs[static_cast<Eigen::Index>(blocks[static_cast<std::size_t>(l)])] = e;
    denom += e;
  }
  return probs / denom;
}

Eigen::MatrixXd covariate_block(const PanelDataset& dataset,
                                const std::vector<std::string>& covariates) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(dataset.observations.size()),
                    static_cast<Eigen::Index>(1 + covariates.size()));
  std::vector<std::size_t> cols;
  cols.reserve(covariates.size());
  for (const auto& name : covariates) {
    cols.push_back(dataset.covariate_index(name));
  }
  for (std::size_t i = 0; i < dataset.observations.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    x(row, 0) = 1.0;
    for (std::size_t t = 0; t < cols.size(); ++t) {
      x(row, static_cast<Eigen::Index>(1 + t)) =
          dataset.observations[i].covariates[cols[t]];
    }
  }
  return x;
}

double log_likelihood_at(const Eigen::MatrixXd& x,
                         const std::vector<std::size_t>& treatment,
                         const Eigen::MatrixXd& alpha,
                         const std::vector<std::size_t>& blocks,
                         std::size_t reference, std::size_t m) {
  const Eigen::MatrixXd eta = x * alpha.transpose();  // n x (m-1)
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd probs =
        softmax_probs(eta.row(i).transpose(), blocks, reference, m);
    ll += std::log(std::max(probs[static_cast<Eigen::Index>(treatment[static_cast<std::size_t>(i)])],
                            1e-300));
  }
  return ll;
}

}  // namespace

Eigen::VectorXd PropensityFit::probabilities(
    const Eigen::VectorXd& covariates) const {
  if (covariates.size() != static_cast<Eigen::Index>(covariate_names.size())) {
    throw std::invalid_argument(
        "PropensityFit: covariate vector has width " +
        std::to_string(covariates.size()) + ", expected " +
        std::to_string(covariate_names.size()));
  }
  for (Eigen::Index k = 0; k < covariates.size(); ++k) {
    if (!std::isfinite(covariates[k])) {
      throw std::invalid_argument("PropensityFit: non-finite covariate value.");
    }
  }
  Eigen::VectorXd xi(covariates.size() + 1);
  xi[0] = 1.0;
  xi.tail(covariates.size()) = covariates;
  const Eigen::VectorXd eta = alpha * xi;
  return softmax_probs(eta, coding.non_reference(), coding.reference,
                       coding.size());
}

PropensityFit fit_multinomial_logit(const PanelDataset& dataset,
                                    const std::vector<std::string>& covariates,
                                    const PropensityOptions& options) {
  dataset.validate();
  if (!(options.tol > 0.0)) {
    throw std::invalid_argument("fit_multinomial_logit: tol must be positive.");
  }
  if (options.max_iter < 1) {
    throw std::invalid_argument(
        "fit_multinomial_logit: max_iter must be at least 1.");
  }
  const auto counts = dataset.category_counts();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) {
      throw std::invalid_argument(
          "fit_multinomial_logit: no observations in category '" +
          dataset.coding.categories[k] + "'");
    }
  }

  const std::size_t m = dataset.coding.size();
  const auto blocks = dataset.coding.non_reference();
  const std::size_t kdim = 1 + covariates.size();
  const std::size_t q = blocks.size() * kdim;
  const Eigen::MatrixXd x = covariate_block(dataset, covariates);
  const Eigen::Index n = x.rows();

  std::vector<std::size_t> treatment(dataset.observations.size());
  for (std::size_t i = 0; i < dataset.observations.size(); ++i) {
    treatment[i] = dataset.observations[i].treatment;
  }

  PropensityFit fit;
  fit.coding = dataset.coding;
  fit.covariate_names = covariates;
  fit.alpha = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(blocks.size()),
                                    static_cast<Eigen::Index>(kdim));

  double ll = log_likelihood_at(x, treatment, fit.alpha, blocks,
                                dataset.coding.reference, m);
  fit.ll_trace.push_back(ll);

  Eigen::VectorXd score(q);
  Eigen::MatrixXd info(q, q);
  Eigen::MatrixXd probs(n, static_cast<Eigen::Index>(m));

  for (int iter = 0; iter < options.max_iter; ++iter) {
    // Score and observed information at the current iterate.
    const Eigen::MatrixXd eta = x * fit.alpha.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      probs.row(i) = softmax_probs(eta.row(i).transpose(), blocks,
                                   dataset.coding.reference, m)
                         .transpose();
    }
    score.setZero();
    info.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < blocks.size(); ++l) {
        const double pl = probs(i, static_cast<Eigen::Index>(blocks[l]));
        const double resid =
            (treatment[static_cast<std::size_t>(i)] == blocks[l] ? 1.0 : 0.0) -
            pl;
        score.segment(static_cast<Eigen::Index>(l * kdim),
                      static_cast<Eigen::Index>(kdim)) +=
            resid * x.row(i).transpose();
        for (std::size_t l2 = 0; l2 < blocks.size(); ++l2) {
          const double pl2 = probs(i, static_cast<Eigen::Index>(blocks[l2]));
          const double w = pl * ((l == l2 ? 1.0 : 0.0) - pl2);
          if (w == 0.0) continue;
          info.block(static_cast<Eigen::Index>(l * kdim),
                     static_cast<Eigen::Index>(l2 * kdim),
                     static_cast<Eigen::Index>(kdim),
                     static_cast<Eigen::Index>(kdim)) +=
              w * (x.row(i).transpose() * x.row(i));
        }
      }
    }

    fit.iterations = iter;
    if (score.lpNorm<Eigen::Infinity>() < options.tol) {
      fit.converged = true;
      break;
    }

    Eigen::LDLT<Eigen::MatrixXd> solver(info);
    Eigen::VectorXd direction = solver.solve(score);
    const bool solvable =
        solver.info() == Eigen::Success && direction.allFinite() &&
        (info * direction - score).lpNorm<Eigen::Infinity>() <=
            1e-6 * (score.lpNorm<Eigen::Infinity>() + 1.0);
    if (!solvable) {
      // Singular information: regularize the diagonal and retry.
      Eigen::MatrixXd ridged = info;
      ridged.diagonal().array() += options.ridge;
      direction = ridged.ldlt().solve(score);
      if (!direction.allFinite()) {
        throw convergence_error(
            "fit_multinomial_logit: information matrix is singular even after "
            "ridging.",
            fit);
      }
    }

    // Step halving: accept the first step that improves the likelihood. The
    // slack absorbs summation noise: near the solution a full Newton step
    // gains less than the likelihood can resolve in double precision, and
    // rejecting it would freeze the iteration one step short of the score
    // tolerance. The objective is concave, so a within-noise step is safe.
    const double slack = 1e-12 * (1.0 + std::abs(ll));
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      Eigen::MatrixXd candidate = fit.alpha;
      for (std::size_t l = 0; l < blocks.size(); ++l) {
        candidate.row(static_cast<Eigen::Index>(l)) +=
            step * direction
                       .segment(static_cast<Eigen::Index>(l * kdim),
                                static_cast<Eigen::Index>(kdim))
                       .transpose();
      }
      const double candidate_ll = log_likelihood_at(
          x, treatment, candidate, blocks, dataset.coding.reference, m);
      if (candidate_ll >= ll - slack) {
        fit.alpha = candidate;
        ll = candidate_ll;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    fit.ll_trace.push_back(ll);
    if (!accepted) {
      // No improving step exists up to numerical resolution; treat the
      // current iterate as stationary and let the score test decide below.
      fit.converged = score.lpNorm<Eigen::Infinity>() < options.tol;
      fit.iterations = iter + 1;
      break;
    }
  }

  if (!fit.converged) {
    fit.iterations = options.max_iter;
    // Re-test the score at the final iterate before giving up.
    const Eigen::MatrixXd eta = x * fit.alpha.transpose();
    score.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd pr = softmax_probs(
          eta.row(i).transpose(), blocks, dataset.coding.reference, m);
      for (std::size_t l = 0; l < blocks.size(); ++l) {
        const double resid =
            (treatment[static_cast<std::size_t>(i)] == blocks[l] ? 1.0 : 0.0) -
            pr[static_cast<Eigen::Index>(blocks[l])];
        score.segment(static_cast<Eigen::Index>(l * kdim),
                      static_cast<Eigen::Index>(kdim)) +=
            resid * x.row(i).transpose();
      }
    }
    if (score.lpNorm<Eigen::Infinity>() < options.tol) {
      fit.converged = true;
    } else {
      fit.log_likelihood = ll;
      throw convergence_error(
          "fit_multinomial_logit: no convergence after " +
              std::to_string(options.max_iter) + " iterations (score " +
              std::to_string(score.lpNorm<Eigen::Infinity>()) + ")",
          fit);
    }
  }

  fit.log_likelihood = ll;
  fit.information = info;

  // Quasi-complete separation: an observed category driven to probability
  // zero somewhere in the sample.
  const Eigen::MatrixXd eta = x * fit.alpha.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd pr = softmax_probs(eta.row(i).transpose(), blocks,
                                             dataset.coding.reference, m);
    if (pr[static_cast<Eigen::Index>(
            treatment[static_cast<std::size_t>(i)])] < 1e-10) {
      fit.separation_warning = true;
      break;
    }
  }
  return fit;
}

Eigen::VectorXd generalized_propensity(const PropensityFit& fit,
                                       const Eigen::VectorXd& covariates) {
  return fit.probabilities(covariates);
}

namespace {

void check_gps(const Eigen::VectorXd& gps) {
  if (gps.size() < 2) {
    throw std::invalid_argument(
        "balancing_weight: need at least two categories.");
  }
  for (Eigen::Index k = 0; k < gps.size(); ++k) {
    if (!(gps[k] > 0.0 && gps[k] < 1.0)) {
      throw std::invalid_argument(
          "balancing_weight: propensities must lie strictly inside (0, 1).");
    }
  }
}

}  // namespace

double balancing_weight(const Eigen::VectorXd& gps, std::size_t category,
                        WeightKind kind) {
  check_gps(gps);
  if (category >= static_cast<std::size_t>(gps.size())) {
    throw std::invalid_argument("balancing_weight: category index out of range.");
  }
  const double pi_a = gps[static_cast<Eigen::Index>(category)];
  if (kind == WeightKind::ipt) {
    return 1.0 / pi_a;
  }
  double recip_sum = 0.0;
  for (Eigen::Index k = 0; k < gps.size(); ++k) recip_sum += 1.0 / gps[k];
  return 1.0 / (pi_a * recip_sum);
}

double verify_balancing(const Eigen::VectorXd& gps, WeightKind kind) {
  check_gps(gps);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < gps.size(); ++k) {
    const double product =
        gps[k] * balancing_weight(gps, static_cast<std::size_t>(k), kind);
    lo = std::min(lo, product);
    hi = std::max(hi, product);
  }
  return hi - lo;
}

Eigen::VectorXd observation_weights(const PanelDataset& dataset,
                                    const PropensityFit& fit, WeightKind kind,
                                    double cap) {
  if (cap < 0.0) {
    throw std::invalid_argument("observation_weights: cap must be >= 0.");
  }
  std::vector<std::size_t> cols;
  cols.reserve(fit.covariate_names.size());
  for (const auto& name : fit.covariate_names) {
    cols.push_back(dataset.covariate_index(name));
  }
  Eigen::VectorXd weights(
      static_cast<Eigen::Index>(dataset.observations.size()));
  Eigen::VectorXd xi(static_cast<Eigen::Index>(fit.covariate_names.size()));
  for (std::size_t i = 0; i < dataset.observations.size(); ++i) {
    for (std::size_t t = 0; t < cols.size(); ++t) {
      xi[static_cast<Eigen::Index>(t)] =
          dataset.observations[i].covariates[cols[t]];
    }
    const Eigen::VectorXd gps = fit.probabilities(xi);
    double w = balancing_weight(gps, dataset.observations[i].treatment, kind);
    if (cap > 0.0) w = std::min(w, cap);
    weights[static_cast<Eigen::Index>(i)] = w;
  }
  return weights;
}

}  // namespace gdwols
