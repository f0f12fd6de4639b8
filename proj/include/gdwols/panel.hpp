#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace gdwols {

// Categorical treatment coding. The reference category is the one whose blip
// is identically zero; fits report one blip block per non-reference category,
// in coding order.
struct TreatmentCoding {
  std::vector<std::string> categories;
  std::size_t reference = 0;

  std::size_t size() const { return categories.size(); }
  const std::string& reference_label() const;
  std::size_t index_of(const std::string& label) const;
  // Non-reference category indices in coding order.
  std::vector<std::size_t> non_reference() const;
  void validate() const;
};

struct StageObservation {
  std::string subject_id;
  long stage_index = 0;
  std::size_t treatment = 0;  // index into the coding
  double outcome = 0.0;
  std::vector<double> covariates;  // aligned with PanelDataset::covariate_names
};

// Longitudinal panel: one row per (subject, stage). Multiple stages per
// subject form a cluster for robust inference and resampling.
struct PanelDataset {
  TreatmentCoding coding;
  std::vector<std::string> covariate_names;
  std::vector<StageObservation> observations;

  std::size_t covariate_index(const std::string& name) const;
  std::vector<std::size_t> category_counts() const;
  // Subjects in order of first appearance, each with its observation indices.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> subjects() const;
  void validate() const;
};

struct PanelCsvOptions {
  std::string treatment_column = "treatment";
  std::string outcome_column = "outcome";
  // When the categories list is empty the coding is inferred from the data:
  // sorted distinct labels, first one as reference.
  TreatmentCoding coding;
};

PanelDataset read_panel_csv(const std::string& path,
                            const PanelCsvOptions& options = {});
void write_panel_csv(const PanelDataset& dataset, const std::string& path);

}  // namespace gdwols
