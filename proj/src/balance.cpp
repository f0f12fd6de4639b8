#include "gdwols/balance.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gdwols/csv.hpp"

namespace gdwols {

BalanceTable smd_table(const PanelDataset& dataset,
                       const std::vector<std::string>& covariates) {
  const auto counts = dataset.category_counts();
  std::size_t present = 0;
  for (std::size_t c : counts) present += c > 0 ? 1 : 0;
  if (present < 2) {
    throw std::invalid_argument(
        "smd_table: need observations in at least two treatment groups.");
  }

  BalanceTable table;
  table.coding = dataset.coding;
  const std::size_t m = dataset.coding.size();

  for (const auto& name : covariates) {
    const std::size_t col = dataset.covariate_index(name);
    BalanceRow row;
    row.covariate = name;

    bool binary = true;
    std::vector<double> sum(m, 0.0), sumsq(m, 0.0);
    std::vector<std::size_t> n(m, 0);
    for (const auto& obs : dataset.observations) {
      const double v = obs.covariates[col];
      if (v != 0.0 && v != 1.0) binary = false;
      sum[obs.treatment] += v;
      sumsq[obs.treatment] += v * v;
      ++n[obs.treatment];
    }
    row.binary = binary;

    row.groups.resize(m);
    for (std::size_t g = 0; g < m; ++g) {
      GroupStat stat;
      stat.n = n[g];
      if (n[g] > 0) {
        stat.mean = sum[g] / static_cast<double>(n[g]);
        if (binary) {
          stat.sd = std::sqrt(stat.mean * (1.0 - stat.mean));
        } else if (n[g] > 1) {
          const double ss = sumsq[g] - static_cast<double>(n[g]) * stat.mean * stat.mean;
          stat.sd = std::sqrt(std::max(0.0, ss / static_cast<double>(n[g] - 1)));
        }
      }
      row.groups[g] = stat;
    }

    row.smd = 0.0;
    row.undefined = false;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = j + 1; k < m; ++k) {
        if (n[j] == 0 || n[k] == 0) continue;
        const double diff = std::abs(row.groups[j].mean - row.groups[k].mean);
        const double pooled = std::sqrt(
            (row.groups[j].sd * row.groups[j].sd +
             row.groups[k].sd * row.groups[k].sd) / 2.0);
        if (pooled > 0.0) {
          row.smd = std::max(row.smd, diff / pooled);
        } else if (diff > 0.0) {
          row.smd = std::numeric_limits<double>::infinity();
          row.undefined = true;
        }
        // Equal means with zero spread contribute zero.
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_balance_csv(const BalanceTable& table, const std::string& path) {
  std::vector<std::string> header = {"covariate", "binary"};
  for (const auto& label : table.coding.categories) {
    header.push_back("n_" + label);
    header.push_back("mean_" + label);
    header.push_back("sd_" + label);
  }
  header.push_back("smd");
  header.push_back("undefined");

  std::vector<std::vector<std::string>> rows;
  for (const auto& row : table.rows) {
    std::vector<std::string> out;
    out.push_back(row.covariate);
    out.push_back(row.binary ? "1" : "0");
    for (const auto& g : row.groups) {
      out.push_back(csv::format_int(static_cast<long long>(g.n)));
      out.push_back(csv::format_double(g.mean));
      out.push_back(csv::format_double(g.sd));
    }
    out.push_back(row.undefined ? "inf" : csv::format_double(row.smd));
    out.push_back(row.undefined ? "1" : "0");
    rows.push_back(std::move(out));
  }
  csv::write_file(path, header, rows);
}

}  // namespace gdwols
