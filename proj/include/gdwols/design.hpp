#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gdwols/panel.hpp"

namespace gdwols {

enum class Transform { identity, exp_scaled, sqrt };

// One treatment-free model term: a covariate with an optional transform.
// exp_scaled maps x to exp(x / scale).
struct TermSpec {
  std::string covariate;
  Transform transform = Transform::identity;
  double scale = 1.0;

  double apply(double x) const;
  std::string label() const;
};

// Model specification for the outcome regression. Both blocks carry an
// implicit leading intercept; blip terms always enter untransformed.
struct DesignSpec {
  std::vector<TermSpec> treatment_free_terms;
  std::vector<std::string> blip_terms;

  std::size_t p() const { return treatment_free_terms.size() + 1; }
  std::size_t r() const { return blip_terms.size() + 1; }
};

// Stacked regression design: row i is
//   [ X^beta_i | 1{A_i = a_1} X^psi_i | ... | 1{A_i = a_{m-1}} X^psi_i ]
// with blip blocks over non-reference categories in coding order.
struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_labels;
  std::size_t p = 0;
  std::size_t r = 0;
  std::size_t m = 0;
};

DesignMatrix build_design_matrix(const PanelDataset& dataset,
                                 const DesignSpec& spec);

// X^psi rows (intercept plus blip covariates) for decision-rule evaluation.
Eigen::MatrixXd blip_matrix(const PanelDataset& dataset,
                            const std::vector<std::string>& blip_terms);

}  // namespace gdwols
