#pragma once

#include <string>
#include <vector>

#include "gdwols/panel.hpp"

namespace gdwols {

struct GroupStat {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
};

// Covariate balance across treatment groups. For more than two groups the
// reported SMD is the largest pairwise standardized difference; a covariate
// is treated as binary when every observed value is 0 or 1, in which case
// the proportion difference is standardized by the pooled binomial SD.
struct BalanceRow {
  std::string covariate;
  bool binary = false;
  std::vector<GroupStat> groups;  // one per category, coding order
  double smd = 0.0;
  bool undefined = false;  // zero pooled spread with unequal means
};

struct BalanceTable {
  TreatmentCoding coding;
  std::vector<BalanceRow> rows;
};

BalanceTable smd_table(const PanelDataset& dataset,
                       const std::vector<std::string>& covariates);

void write_balance_csv(const BalanceTable& table, const std::string& path);

}  // namespace gdwols
