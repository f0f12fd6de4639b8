#include "gdwols/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gdwols/parallel.hpp"

namespace gdwols {

AllocationLink parse_allocation_link(const std::string& name) {
  if (name == "logit") return AllocationLink::logit;
  if (name == "paper_linear") return AllocationLink::paper_linear;
  throw std::invalid_argument("unknown allocation link '" + name +
                              "' (expected 'logit' or 'paper_linear')");
}

std::string to_string(AllocationLink link) {
  return link == AllocationLink::logit ? "logit" : "paper_linear";
}

void SimConfig::validate() const {
  if (n == 0) throw std::invalid_argument("SimConfig: n must be positive.");
  if (stages_per_subject < 1) {
    throw std::invalid_argument("SimConfig: stages_per_subject must be >= 1.");
  }
  if (!(sex_prob >= 0.0 && sex_prob <= 1.0)) {
    throw std::invalid_argument("SimConfig: sex_prob must lie in [0, 1].");
  }
  if (!(cd4_init.sd > 0.0) || !(cd4_init.lo < cd4_init.hi)) {
    throw std::invalid_argument("SimConfig: invalid CD4 starting distribution.");
  }
  if (!(cd4_step_sd > 0.0) || !(random_intercept_sd >= 0.0) ||
      !(noise_sd > 0.0)) {
    throw std::invalid_argument("SimConfig: scale parameters must be positive.");
  }
  if (null_effects && (psi1.norm() != 0.0 || psi2.norm() != 0.0)) {
    throw std::invalid_argument(
        "SimConfig: null_effects requires both blip vectors to be zero.");
  }
}

SimConfig SimConfig::null_variant() const {
  SimConfig out = *this;
  out.psi1.setZero();
  out.psi2.setZero();
  out.null_effects = true;
  return out;
}

double truncated_normal_sample(double mean, double sd, double lo, double hi,
                               Rng& rng) {
  return rng.truncated_normal(mean, sd, lo, hi);
}

Eigen::Vector3d allocation_probs(const Eigen::Vector3d& x,
                                 const Eigen::Vector3d& alpha1,
                                 const Eigen::Vector3d& alpha2,
                                 AllocationLink link) {
  const double eta1 = x.dot(alpha1);
  const double eta2 = x.dot(alpha2);
  Eigen::Vector3d probs;
  if (link == AllocationLink::logit) {
    const double top = std::max({0.0, eta1, eta2});
    const double e0 = std::exp(-top);
    const double e1 = std::exp(eta1 - top);
    const double e2 = std::exp(eta2 - top);
    const double denom = e0 + e1 + e2;
    probs << e0 / denom, e1 / denom, e2 / denom;
  } else {
    if (eta1 < 0.0 || eta2 < 0.0) {
      throw std::domain_error(
          "allocation_probs: paper_linear link needs nonnegative linear "
          "predictors, got x*alpha1 = " + std::to_string(eta1) +
          ", x*alpha2 = " + std::to_string(eta2) +
          " at (sex, cd4) = (" + std::to_string(x[1]) + ", " +
          std::to_string(x[2]) + ")");
    }
    const double denom = 1.0 + eta1 + eta2;
    probs << 1.0 / denom, eta1 / denom, eta2 / denom;
  }
  return probs;
}

std::size_t true_optimal(const Eigen::Vector3d& x_psi,
                         const Eigen::Vector3d& psi1,
                         const Eigen::Vector3d& psi2) {
  const double gamma1 = x_psi.dot(psi1);
  const double gamma2 = x_psi.dot(psi2);
  const double best = std::max(gamma1, gamma2);
  if (best <= 0.0) return 0;
  return gamma1 >= gamma2 ? 1 : 2;
}

namespace {

double clamp(double x, double lo, double hi) {
  return std::min(hi, std::max(lo, x));
}

double treatment_free_surface(const Eigen::Vector3d& beta, double cd4) {
  return beta[0] + beta[1] * std::exp(cd4 / 200.0) + beta[2] * std::sqrt(cd4);
}

double true_blip(const SimConfig& config, double sex, double cd4,
                 std::size_t category) {
  if (category == 0) return 0.0;
  const Eigen::Vector3d x(1.0, sex, cd4);
  return category == 1 ? x.dot(config.psi1) : x.dot(config.psi2);
}

}  // namespace

std::pair<PanelDataset, PanelTruth> generate_panel(const SimConfig& config) {
  config.validate();
  Rng rng(config.seed);

  PanelDataset panel;
  panel.coding.categories = {"0", "1", "2"};
  panel.coding.reference = 0;
  panel.covariate_names = {"Sex", "CD4"};
  panel.observations.reserve(config.n *
                             static_cast<std::size_t>(config.stages_per_subject));

  PanelTruth truth;
  truth.config = config;
  truth.subject_intercepts.reserve(config.n);
  truth.true_optimal.reserve(panel.observations.capacity());

  for (std::size_t i = 0; i < config.n; ++i) {
    const double sex = rng.bernoulli(config.sex_prob) ? 1.0 : 0.0;
    const double b = config.random_intercept_sd > 0.0
                         ? rng.normal(0.0, config.random_intercept_sd)
                         : 0.0;
    truth.subject_intercepts.push_back(b);

    double cd4 = truncated_normal_sample(config.cd4_init.mean, config.cd4_init.sd,
                                         config.cd4_init.lo, config.cd4_init.hi,
                                         rng);
    for (int j = 1; j <= config.stages_per_subject; ++j) {
      if (j > 1) {
        cd4 = clamp(cd4 + rng.normal(0.0, config.cd4_step_sd), config.cd4_init.lo,
                    config.cd4_init.hi);
      }
      const Eigen::Vector3d x(1.0, sex, cd4);
      const Eigen::Vector3d probs =
          allocation_probs(x, config.alpha1, config.alpha2, config.link);
      const std::size_t a =
          rng.categorical({probs[0], probs[1], probs[2]});
      const double eps = rng.normal(0.0, config.noise_sd);
      const double y = treatment_free_surface(config.beta, cd4) +
                       true_blip(config, sex, cd4, a) + b + eps;

      StageObservation obs;
      obs.subject_id = std::to_string(i + 1);
      obs.stage_index = j;
      obs.treatment = a;
      obs.outcome = y;
      obs.covariates = {sex, cd4};
      panel.observations.push_back(std::move(obs));
      truth.true_optimal.push_back(true_optimal(x, config.psi1, config.psi2));
    }
  }
  return {std::move(panel), std::move(truth)};
}

ModelSpec model_spec(int id) {
  if (id < 1 || id > 4) {
    throw std::invalid_argument("model_spec: id must be 1..4, got " +
                                std::to_string(id));
  }
  ModelSpec spec;
  spec.id = id;
  const bool transformed_tf = id == 3 || id == 4;
  const bool full_propensity = id == 2 || id == 4;
  if (transformed_tf) {
    spec.design.treatment_free_terms = {
        {"CD4", Transform::exp_scaled, 200.0},
        {"CD4", Transform::sqrt, 1.0},
    };
  } else {
    spec.design.treatment_free_terms = {
        {"Sex", Transform::identity, 1.0},
        {"CD4", Transform::identity, 1.0},
    };
  }
  spec.design.blip_terms = {"Sex", "CD4"};
  if (full_propensity) spec.propensity_covariates = {"Sex", "CD4"};
  return spec;
}

EvalResult evaluate_policy(const GdwolsFit& fit, const PanelDataset& test,
                           const PanelTruth& truth) {
  if (truth.true_optimal.size() != test.observations.size()) {
    throw std::invalid_argument(
        "evaluate_policy: truth does not match the test panel.");
  }
  const std::size_t sex_col = test.covariate_index("Sex");
  const std::size_t cd4_col = test.covariate_index("CD4");

  // The fitted rule must be expressible on the test panel's covariates.
  std::vector<std::size_t> blip_cols;
  for (const auto& name : fit.spec.blip_terms) {
    blip_cols.push_back(test.covariate_index(name));
  }

  const std::size_t m = 3;
  EvalResult result;
  result.uniform_values.assign(m, 0.0);

  Eigen::VectorXd x_psi(static_cast<Eigen::Index>(1 + blip_cols.size()));
  std::size_t agree = 0;
  for (std::size_t i = 0; i < test.observations.size(); ++i) {
    const auto& obs = test.observations[i];
    x_psi[0] = 1.0;
    for (std::size_t t = 0; t < blip_cols.size(); ++t) {
      x_psi[static_cast<Eigen::Index>(1 + t)] = obs.covariates[blip_cols[t]];
    }
    const std::size_t recommended = optimal_treatment(fit, x_psi);
    if (recommended == truth.true_optimal[i]) ++agree;

    const double sex = obs.covariates[sex_col];
    const double cd4 = obs.covariates[cd4_col];
    const double tf = treatment_free_surface(truth.config.beta, cd4);
    result.value_opt += tf + true_blip(truth.config, sex, cd4, recommended);
    result.value_truth +=
        tf + true_blip(truth.config, sex, cd4, truth.true_optimal[i]);
    for (std::size_t a = 0; a < m; ++a) {
      result.uniform_values[a] += tf + true_blip(truth.config, sex, cd4, a);
    }
  }
  const auto n = static_cast<double>(test.observations.size());
  result.agreement_rate = static_cast<double>(agree) / n;
  result.value_opt /= n;
  result.value_truth /= n;
  for (auto& v : result.uniform_values) v /= n;
  return result;
}

std::vector<ReplicateRecord> run_cell(const SimConfig& scenario,
                                      const CellSpec& cell, int replicates,
                                      std::uint64_t master_seed,
                                      std::uint64_t cell_id,
                                      const PanelDataset& test_panel,
                                      const PanelTruth& test_truth,
                                      int threads) {
  if (replicates < 1) {
    throw std::invalid_argument("run_cell: need at least one replicate.");
  }
  const ModelSpec model = model_spec(cell.model);

  std::vector<ReplicateRecord> records(static_cast<std::size_t>(replicates));
  parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
    ReplicateRecord& rec = records[r];
    rec.replicate = static_cast<int>(r);
    SimConfig config = scenario;
    config.n = cell.n;
    config.seed = mix_seed(master_seed, cell_id, r);
    try {
      const auto [panel, truth] = generate_panel(config);
      const PropensityFit propensity =
          fit_multinomial_logit(panel, model.propensity_covariates);
      const Eigen::VectorXd weights =
          observation_weights(panel, propensity, cell.kind);
      const GdwolsFit fit = fit_gdwols(panel, model.design, weights, cell.kind);

      const auto p = static_cast<Eigen::Index>(model.design.p());
      const Eigen::VectorXd theta = fit.stacked();
      for (Eigen::Index j = p; j < theta.size(); ++j) {
        rec.psi_labels.push_back(
            fit.column_labels[static_cast<std::size_t>(j)]);
        rec.psi_estimates.push_back(theta[j]);
        rec.psi_ses.push_back(std::sqrt(std::max(0.0, fit.vcov(j, j))));
      }
      rec.eval = evaluate_policy(fit, test_panel, test_truth);
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });
  return records;
}

McResult run_monte_carlo(const McStudy& study) {
  study.scenario.validate();
  if (study.replicates < 1) {
    throw std::invalid_argument("run_monte_carlo: need at least one replicate.");
  }
  if (study.models.empty() || study.kinds.empty() || study.sizes.empty()) {
    throw std::invalid_argument("run_monte_carlo: empty study grid.");
  }
  for (int id : study.models) model_spec(id);  // validates ids

  const auto stages =
      static_cast<std::size_t>(study.scenario.stages_per_subject);
  if (study.test_observations == 0 || study.test_observations % stages != 0) {
    throw std::invalid_argument(
        "run_monte_carlo: test_observations must be a positive multiple of "
        "stages_per_subject.");
  }

  McResult result;
  result.study = study;

  SimConfig test_config = study.scenario;
  test_config.n = study.test_observations / stages;
  test_config.seed = mix_seed(study.seed, 0x7e57ULL);  // reserved test stream
  auto [test_panel, test_truth] = generate_panel(test_config);
  result.test_panel = std::move(test_panel);
  result.test_truth = std::move(test_truth);

  std::uint64_t cell_id = 1;  // 0 is reserved for the test panel
  for (int model : study.models) {
    for (WeightKind kind : study.kinds) {
      for (std::size_t n : study.sizes) {
        McCellResult cell_result;
        cell_result.cell = CellSpec{model, kind, n};
        cell_result.replicates = run_cell(
            study.scenario, cell_result.cell, study.replicates, study.seed,
            cell_id, result.test_panel, result.test_truth, study.threads);
        result.cells.push_back(std::move(cell_result));
        ++cell_id;
      }
    }
  }
  return result;
}

std::vector<double> true_psi_stacked(const SimConfig& config) {
  return {config.psi1[0], config.psi1[1], config.psi1[2],
          config.psi2[0], config.psi2[1], config.psi2[2]};
}

}  // namespace gdwols
