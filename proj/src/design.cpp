#include "gdwols/design.hpp"

#include <cmath>
#include <stdexcept>

namespace gdwols {

double TermSpec::apply(double x) const {
  switch (transform) {
    case Transform::identity:
      return x;
    case Transform::exp_scaled:
      return std::exp(x / scale);
    case Transform::sqrt:
      return std::sqrt(x);
  }
  throw std::logic_error("TermSpec: unknown transform.");
}

std::string TermSpec::label() const {
  switch (transform) {
    case Transform::identity:
      return covariate;
    case Transform::exp_scaled: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%g", scale);
      return "exp(" + covariate + "/" + buf + ")";
    }
    case Transform::sqrt:
      return "sqrt(" + covariate + ")";
  }
  throw std::logic_error("TermSpec: unknown transform.");
}

namespace {

std::string row_context(const StageObservation& obs) {
  return "subject '" + obs.subject_id + "', stage " +
         std::to_string(obs.stage_index);
}

double apply_checked(const TermSpec& term, double x,
                     const StageObservation& obs) {
  if (term.transform == Transform::sqrt && x < 0.0) {
    throw std::invalid_argument("design: sqrt of negative value for covariate '" +
                                term.covariate + "' at " + row_context(obs));
  }
  const double value = term.apply(x);
  if (!std::isfinite(value)) {
    throw std::invalid_argument("design: non-finite value for term '" +
                                term.label() + "' at " + row_context(obs));
  }
  return value;
}

}  // namespace

DesignMatrix build_design_matrix(const PanelDataset& dataset,
                                 const DesignSpec& spec) {
  dataset.coding.validate();
  for (const auto& term : spec.treatment_free_terms) {
    if (term.transform == Transform::exp_scaled && term.scale == 0.0) {
      throw std::invalid_argument("design: exp_scaled term '" + term.covariate +
                                  "' has zero scale.");
    }
  }

  const std::size_t p = spec.p();
  const std::size_t r = spec.r();
  const std::size_t m = dataset.coding.size();
  const auto blocks = dataset.coding.non_reference();
  const std::size_t width = p + blocks.size() * r;

  std::vector<std::size_t> tf_cols;
  tf_cols.reserve(spec.treatment_free_terms.size());
  for (const auto& term : spec.treatment_free_terms) {
    tf_cols.push_back(dataset.covariate_index(term.covariate));
  }
  std::vector<std::size_t> blip_cols;
  blip_cols.reserve(spec.blip_terms.size());
  for (const auto& name : spec.blip_terms) {
    blip_cols.push_back(dataset.covariate_index(name));
  }

  DesignMatrix design;
  design.p = p;
  design.r = r;
  design.m = m;
  design.values = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(dataset.observations.size()),
      static_cast<Eigen::Index>(width));

  design.column_labels.reserve(width);
  design.column_labels.push_back("tf:(Intercept)");
  for (const auto& term : spec.treatment_free_terms) {
    design.column_labels.push_back("tf:" + term.label());
  }
  for (std::size_t cat : blocks) {
    const std::string& label = dataset.coding.categories[cat];
    design.column_labels.push_back("blip:" + label + ":(Intercept)");
    for (const auto& name : spec.blip_terms) {
      design.column_labels.push_back("blip:" + label + ":" + name);
    }
  }

  for (std::size_t i = 0; i < dataset.observations.size(); ++i) {
    const auto& obs = dataset.observations[i];
    const auto row = static_cast<Eigen::Index>(i);
    design.values(row, 0) = 1.0;
    for (std::size_t t = 0; t < spec.treatment_free_terms.size(); ++t) {
      design.values(row, static_cast<Eigen::Index>(1 + t)) = apply_checked(
          spec.treatment_free_terms[t], obs.covariates[tf_cols[t]], obs);
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (obs.treatment != blocks[b]) continue;
      const std::size_t offset = p + b * r;
      design.values(row, static_cast<Eigen::Index>(offset)) = 1.0;
      for (std::size_t t = 0; t < blip_cols.size(); ++t) {
        design.values(row, static_cast<Eigen::Index>(offset + 1 + t)) =
            obs.covariates[blip_cols[t]];
      }
    }
  }
  return design;
}

Eigen::MatrixXd blip_matrix(const PanelDataset& dataset,
                            const std::vector<std::string>& blip_terms) {
  std::vector<std::size_t> cols;
  cols.reserve(blip_terms.size());
  for (const auto& name : blip_terms) {
    cols.push_back(dataset.covariate_index(name));
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(dataset.observations.size()),
                    static_cast<Eigen::Index>(1 + cols.size()));
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

}  // namespace gdwols
