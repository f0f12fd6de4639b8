#pragma once

#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "gdwols/fit.hpp"
#include "gdwols/propensity.hpp"
#include "gdwols/simulation.hpp"

namespace gdwols {

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);

nlohmann::json coding_to_json(const TreatmentCoding& coding);
TreatmentCoding coding_from_json(const nlohmann::json& j);

nlohmann::json design_to_json(const DesignSpec& spec);
DesignSpec design_from_json(const nlohmann::json& j);

nlohmann::json propensity_to_json(const PropensityFit& fit);
PropensityFit propensity_from_json(const nlohmann::json& j);

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_config_to_json(const SimConfig& config);

// Hidden generation state stored beside a simulated panel.
nlohmann::json truth_to_json(const PanelTruth& truth, const PanelDataset& panel);
PanelTruth truth_from_json(const nlohmann::json& j);

McStudy study_from_json(const nlohmann::json& j);

// Everything cmd-level fitting needs besides the data itself.
struct FitSettings {
  TreatmentCoding coding;  // empty categories = infer from the data
  std::vector<std::string> propensity_covariates;
  PropensityOptions propensity_options;
  DesignSpec design;
  WeightKind weight_kind = WeightKind::ipt;
  double weight_cap = 0.0;  // 0 = no trimming
  InferenceOptions inference;
};

FitSettings fit_settings_from_json(const nlohmann::json& j);
nlohmann::json fit_settings_to_json(const FitSettings& settings);

struct SourceInfo {
  std::string panel_path;
  std::string treatment_column = "treatment";
  std::string outcome_column = "outcome";
};

// Saved fit bundle: coefficients and covariance plus the settings and data
// reference needed to re-estimate the same model later (for instance on a
// re-weighted outcome grid).
struct FitArtifact {
  GdwolsFit fit;
  PropensityFit propensity;
  FitSettings settings;
  SourceInfo source;
  bool has_bootstrap = false;
  BootstrapSummary bootstrap;
};

nlohmann::json artifact_to_json(const FitArtifact& artifact);
FitArtifact artifact_from_json(const nlohmann::json& j);

// A named covariate profile for decision-rule curves.
struct ProfileSpec {
  std::string name;
  std::vector<std::pair<std::string, double>> covariates;
};

std::vector<ProfileSpec> profiles_from_json(const nlohmann::json& j);

}  // namespace gdwols
