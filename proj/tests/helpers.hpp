#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gdwols/panel.hpp"

namespace testutil {

inline gdwols::TreatmentCoding coding(std::vector<std::string> labels,
                                      std::size_t reference = 0) {
  gdwols::TreatmentCoding c;
  c.categories = std::move(labels);
  c.reference = reference;
  return c;
}

inline void add_obs(gdwols::PanelDataset& dataset, const std::string& id,
                    long stage, std::size_t treatment, double outcome,
                    std::vector<double> covariates) {
  gdwols::StageObservation obs;
  obs.subject_id = id;
  obs.stage_index = stage;
  obs.treatment = treatment;
  obs.outcome = outcome;
  obs.covariates = std::move(covariates);
  dataset.observations.push_back(std::move(obs));
}

// Scratch directory under the system temp root, cleared on entry so repeated
// runs start from the same state.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("gdwols_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
