#include "gdwols/panel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "gdwols/csv.hpp"

namespace gdwols {

const std::string& TreatmentCoding::reference_label() const {
  if (reference >= categories.size()) {
    throw std::logic_error("TreatmentCoding: reference index out of range.");
  }
  return categories[reference];
}

std::size_t TreatmentCoding::index_of(const std::string& label) const {
  for (std::size_t k = 0; k < categories.size(); ++k) {
    if (categories[k] == label) return k;
  }
  throw std::invalid_argument("TreatmentCoding: unknown category label '" +
                              label + "'");
}

std::vector<std::size_t> TreatmentCoding::non_reference() const {
  std::vector<std::size_t> out;
  out.reserve(categories.size() > 0 ? categories.size() - 1 : 0);
  for (std::size_t k = 0; k < categories.size(); ++k) {
    if (k != reference) out.push_back(k);
  }
  return out;
}

void TreatmentCoding::validate() const {
  if (categories.size() < 2) {
    throw std::invalid_argument(
        "TreatmentCoding: need at least two categories, got " +
        std::to_string(categories.size()));
  }
  std::set<std::string> seen;
  for (const auto& label : categories) {
    if (label.empty()) {
      throw std::invalid_argument("TreatmentCoding: empty category label.");
    }
    if (!seen.insert(label).second) {
      throw std::invalid_argument("TreatmentCoding: duplicate category label '" +
                                  label + "'");
    }
  }
  if (reference >= categories.size()) {
    throw std::invalid_argument(
        "TreatmentCoding: reference index out of range.");
  }
}

std::size_t PanelDataset::covariate_index(const std::string& name) const {
  for (std::size_t k = 0; k < covariate_names.size(); ++k) {
    if (covariate_names[k] == name) return k;
  }
  throw std::invalid_argument("PanelDataset: unknown covariate '" + name + "'");
}

std::vector<std::size_t> PanelDataset::category_counts() const {
  std::vector<std::size_t> counts(coding.size(), 0);
  for (const auto& obs : observations) {
    if (obs.treatment >= counts.size()) {
      throw std::logic_error("PanelDataset: treatment index out of range.");
    }
    ++counts[obs.treatment];
  }
  return counts;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>>
PanelDataset::subjects() const {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  std::unordered_map<std::string, std::size_t> slot;
  slot.reserve(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& id = observations[i].subject_id;
    auto [it, inserted] = slot.try_emplace(id, groups.size());
    if (inserted) groups.emplace_back(id, std::vector<std::size_t>{});
    groups[it->second].second.push_back(i);
  }
  return groups;
}

void PanelDataset::validate() const {
  coding.validate();
  std::set<std::string> names(covariate_names.begin(), covariate_names.end());
  if (names.size() != covariate_names.size()) {
    throw std::invalid_argument("PanelDataset: duplicate covariate name.");
  }
  std::set<std::pair<std::string, long>> keys;
  for (const auto& obs : observations) {
    if (obs.subject_id.empty()) {
      throw std::invalid_argument("PanelDataset: empty subject id.");
    }
    if (obs.stage_index < 0) {
      throw std::invalid_argument("PanelDataset: negative stage index for subject '" +
                                  obs.subject_id + "'");
    }
    if (obs.treatment >= coding.size()) {
      throw std::invalid_argument(
          "PanelDataset: treatment index out of range for subject '" +
          obs.subject_id + "'");
    }
    if (obs.covariates.size() != covariate_names.size()) {
      throw std::invalid_argument(
          "PanelDataset: covariate vector width mismatch for subject '" +
          obs.subject_id + "'");
    }
    if (!std::isfinite(obs.outcome)) {
      throw std::invalid_argument("PanelDataset: non-finite outcome for subject '" +
                                  obs.subject_id + "'");
    }
    for (double v : obs.covariates) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument(
            "PanelDataset: non-finite covariate for subject '" +
            obs.subject_id + "'");
      }
    }
    if (!keys.emplace(obs.subject_id, obs.stage_index).second) {
      throw std::invalid_argument(
          "PanelDataset: duplicate (subject, stage) pair ('" + obs.subject_id +
          "', " + std::to_string(obs.stage_index) + ")");
    }
  }
}

PanelDataset read_panel_csv(const std::string& path,
                            const PanelCsvOptions& options) {
  const csv::Table table = csv::read_file(path);
  const std::size_t id_col = table.column("subject_id");
  const std::size_t stage_col = table.column("stage_index");
  const std::size_t treat_col = table.column(options.treatment_column);
  const std::size_t outcome_col = table.column(options.outcome_column);

  PanelDataset dataset;
  std::vector<std::size_t> covariate_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == id_col || c == stage_col || c == treat_col || c == outcome_col) {
      continue;
    }
    covariate_cols.push_back(c);
    dataset.covariate_names.push_back(table.header[c]);
  }

  if (options.coding.categories.empty()) {
    std::set<std::string> labels;
    for (const auto& row : table.rows) labels.insert(row[treat_col]);
    dataset.coding.categories.assign(labels.begin(), labels.end());
    dataset.coding.reference = 0;
  } else {
    dataset.coding = options.coding;
  }
  dataset.coding.validate();

  dataset.observations.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    StageObservation obs;
    obs.subject_id = row[id_col];
    obs.stage_index = csv::parse_int(row[stage_col], "stage_index");
    obs.treatment = dataset.coding.index_of(row[treat_col]);
    obs.outcome = csv::parse_double(row[outcome_col], "outcome");
    obs.covariates.reserve(covariate_cols.size());
    for (std::size_t c : covariate_cols) {
      obs.covariates.push_back(
          csv::parse_double(row[c], "covariate " + table.header[c]));
    }
    dataset.observations.push_back(std::move(obs));
  }
  dataset.validate();
  return dataset;
}

void write_panel_csv(const PanelDataset& dataset, const std::string& path) {
  dataset.validate();
  std::vector<std::string> header = {"subject_id", "stage_index", "treatment",
                                     "outcome"};
  header.insert(header.end(), dataset.covariate_names.begin(),
                dataset.covariate_names.end());
  std::vector<std::vector<std::string>> rows;
  rows.reserve(dataset.observations.size());
  for (const auto& obs : dataset.observations) {
    std::vector<std::string> row;
    row.reserve(header.size());
    row.push_back(obs.subject_id);
    row.push_back(csv::format_int(obs.stage_index));
    row.push_back(dataset.coding.categories[obs.treatment]);
    row.push_back(csv::format_double(obs.outcome));
    for (double v : obs.covariates) row.push_back(csv::format_double(v));
    rows.push_back(std::move(row));
  }
  csv::write_file(path, header, rows);
}

}  // namespace gdwols
