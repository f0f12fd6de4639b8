#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gdwols/fit.hpp"
#include "gdwols/panel.hpp"
#include "gdwols/rng.hpp"

namespace gdwols {

enum class AllocationLink { logit, paper_linear };

AllocationLink parse_allocation_link(const std::string& name);
std::string to_string(AllocationLink link);

struct TruncatedNormalSpec {
  double mean = 350.0;
  double sd = 100.0;
  double lo = 50.0;
  double hi = 550.0;
};

// Three-category data-generating process: per-subject sex and a bounded CD4
// random walk across stages, multinomial treatment assignment driven by
// (1, Sex, CD4), and outcomes built from a nonlinear treatment-free surface
// plus linear blips, a subject random intercept, and noise.
struct SimConfig {
  std::size_t n = 1000;          // subjects
  int stages_per_subject = 4;
  Eigen::Vector3d alpha1{-0.5, -0.2, 0.005};
  Eigen::Vector3d alpha2{-1.0, -0.4, 0.007};
  Eigen::Vector3d beta{45.0, -10.0, 1.0};   // on (1, exp(CD4/200), sqrt(CD4))
  Eigen::Vector3d psi1{-10.0, 5.0, 0.02};   // on (1, Sex, CD4)
  Eigen::Vector3d psi2{-30.0, -7.0, 0.1};
  double sex_prob = 0.7;
  TruncatedNormalSpec cd4_init;
  double cd4_step_sd = 5.0;
  double random_intercept_sd = 0.5;
  double noise_sd = 3.0;
  AllocationLink link = AllocationLink::logit;
  bool null_effects = false;  // requires psi1 = psi2 = 0
  std::uint64_t seed = 0;

  void validate() const;
  // Copy with both blip vectors zeroed and the null flag set.
  SimConfig null_variant() const;
};

// Hidden generation state kept beside the panel: the subject random
// intercepts and the truly optimal category for every observation.
struct PanelTruth {
  SimConfig config;
  std::vector<double> subject_intercepts;   // one per subject
  std::vector<std::size_t> true_optimal;    // one per observation
};

double truncated_normal_sample(double mean, double sd, double lo, double hi,
                               Rng& rng);

// Assignment probabilities for (reference, category 1, category 2) at
// x = (1, sex, cd4). The literal linear link divides each predictor by one
// plus their sum and demands nonnegative predictors.
Eigen::Vector3d allocation_probs(const Eigen::Vector3d& x,
                                 const Eigen::Vector3d& alpha1,
                                 const Eigen::Vector3d& alpha2,
                                 AllocationLink link);

std::pair<PanelDataset, PanelTruth> generate_panel(const SimConfig& config);

// The four estimation cells: treatment-free surface either linear in
// (Sex, CD4) or matching the generating transforms, crossed with an
// intercept-only or fully specified treatment model. Blips are always linear
// in (1, Sex, CD4).
struct ModelSpec {
  int id = 0;
  DesignSpec design;
  std::vector<std::string> propensity_covariates;
};

ModelSpec model_spec(int id);

// Truly optimal category at x_psi = (1, sex, cd4) under the generating blips.
std::size_t true_optimal(const Eigen::Vector3d& x_psi,
                         const Eigen::Vector3d& psi1,
                         const Eigen::Vector3d& psi2);

struct EvalResult {
  double agreement_rate = 0.0;  // recommended vs truly optimal category
  double value_opt = 0.0;       // mean true conditional mean under the rule
  double value_truth = 0.0;     // same under the truly optimal rule
  std::vector<double> uniform_values;  // one constant-policy value per category
};

// Scores a fitted rule against a test panel with known truth: noiseless
// conditional means, so differences reflect the rule alone.
EvalResult evaluate_policy(const GdwolsFit& fit, const PanelDataset& test,
                           const PanelTruth& truth);

struct CellSpec {
  int model = 4;
  WeightKind kind = WeightKind::ipt;
  std::size_t n = 1000;
};

struct ReplicateRecord {
  int replicate = 0;
  bool ok = false;
  std::string error;
  std::vector<std::string> psi_labels;
  std::vector<double> psi_estimates;
  std::vector<double> psi_ses;  // sandwich standard errors
  EvalResult eval;
};

// Runs R replicates of one (model, weight kind, n) cell. Replicate r of cell
// c draws its data stream from (master seed, cell id, r); failed fits are
// recorded and skipped. Safe to run replicates concurrently.
std::vector<ReplicateRecord> run_cell(const SimConfig& scenario,
                                      const CellSpec& cell, int replicates,
                                      std::uint64_t master_seed,
                                      std::uint64_t cell_id,
                                      const PanelDataset& test_panel,
                                      const PanelTruth& test_truth,
                                      int threads);

struct McStudy {
  SimConfig scenario;
  std::vector<int> models = {1, 2, 3, 4};
  std::vector<WeightKind> kinds = {WeightKind::ipt, WeightKind::overlap};
  std::vector<std::size_t> sizes = {100, 1000};
  int replicates = 200;
  std::size_t test_observations = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct McCellResult {
  CellSpec cell;
  std::vector<ReplicateRecord> replicates;
};

struct McResult {
  McStudy study;
  PanelDataset test_panel;
  PanelTruth test_truth;
  std::vector<McCellResult> cells;
};

// Full study driver: builds the shared test panel from the master seed, then
// runs every (model, kind, size) cell.
McResult run_monte_carlo(const McStudy& study);

// True blip coefficients in estimate order (category 1 block then category
// 2), matching ReplicateRecord::psi_labels.
std::vector<double> true_psi_stacked(const SimConfig& config);

}  // namespace gdwols
