// Command-line front end: simulation, staging, fitting and reporting are all
// thin wrappers over the library. Every run is deterministic given its seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gdwols/balance.hpp"
#include "gdwols/csv.hpp"
#include "gdwols/fit.hpp"
#include "gdwols/myopic.hpp"
#include "gdwols/panel.hpp"
#include "gdwols/propensity.hpp"
#include "gdwols/serialize.hpp"
#include "gdwols/simulation.hpp"
#include "gdwols/staging.hpp"

namespace {

using gdwols::csv::format_double;
using gdwols::csv::format_int;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitError = 2;

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// Grid syntax start:end:step, endpoints included (step evenly dividing the
// range up to rounding).
std::vector<double> parse_grid(const std::string& text) {
  const auto first = text.find(':');
  const auto second = text.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    throw std::invalid_argument("grid must look like start:end:step, got '" +
                                text + "'");
  }
  const double start = gdwols::csv::parse_double(text.substr(0, first), "grid start");
  const double end =
      gdwols::csv::parse_double(text.substr(first + 1, second - first - 1), "grid end");
  const double step = gdwols::csv::parse_double(text.substr(second + 1), "grid step");
  if (!(step > 0.0) || !(end >= start)) {
    throw std::invalid_argument("grid needs end >= start and step > 0.");
  }
  std::vector<double> grid;
  const auto count = static_cast<long>(std::floor((end - start) / step + 1e-9));
  for (long k = 0; k <= count; ++k) {
    grid.push_back(start + static_cast<double>(k) * step);
  }
  return grid;
}

// Stage-level files carry the utility components; the outcome is assembled
// per eta later, so every numeric column becomes a covariate here.
gdwols::PanelDataset read_component_panel(const std::string& path,
                                          const std::string& treatment_column,
                                          const gdwols::TreatmentCoding& coding) {
  const gdwols::csv::Table table = gdwols::csv::read_file(path);
  const std::size_t id_col = table.column("subject_id");
  const std::size_t stage_col = table.column("stage_index");
  const std::size_t treat_col = table.column(treatment_column);

  gdwols::PanelDataset dataset;
  std::vector<std::size_t> covariate_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == id_col || c == stage_col || c == treat_col) continue;
    covariate_cols.push_back(c);
    dataset.covariate_names.push_back(table.header[c]);
  }
  if (coding.categories.empty()) {
    std::set<std::string> labels;
    for (const auto& row : table.rows) labels.insert(row[treat_col]);
    dataset.coding.categories.assign(labels.begin(), labels.end());
    dataset.coding.reference = 0;
  } else {
    dataset.coding = coding;
  }
  dataset.coding.validate();

  for (const auto& row : table.rows) {
    gdwols::StageObservation obs;
    obs.subject_id = row[id_col];
    obs.stage_index = gdwols::csv::parse_int(row[stage_col], "stage_index");
    obs.treatment = dataset.coding.index_of(row[treat_col]);
    obs.outcome = 0.0;
    for (std::size_t c : covariate_cols) {
      obs.covariates.push_back(
          gdwols::csv::parse_double(row[c], "column " + table.header[c]));
    }
    dataset.observations.push_back(std::move(obs));
  }
  dataset.validate();
  return dataset;
}

void set_eta_outcomes(gdwols::PanelDataset& dataset, double eta) {
  const std::size_t ug_col = dataset.covariate_index("u_g");
  const std::size_t uinj_col = dataset.covariate_index("u_inj");
  for (auto& obs : dataset.observations) {
    obs.outcome =
        eta * obs.covariates[ug_col] + (1.0 - eta) * obs.covariates[uinj_col];
  }
}

std::pair<std::string, std::string> split_label(const std::string& label) {
  if (label.rfind("tf:", 0) == 0) return {"tf", label.substr(3)};
  if (label.rfind("blip:", 0) == 0) {
    const auto pos = label.find(':', 5);
    if (pos != std::string::npos) {
      return {label.substr(0, pos), label.substr(pos + 1)};
    }
  }
  return {"", label};
}

void write_coefficient_csv(const std::string& path,
                           const std::vector<gdwols::CoefficientInterval>& rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& row : rows) {
    const auto [block, term] = split_label(row.label);
    out.push_back({block, term, format_double(row.estimate),
                   format_double(row.se), format_double(row.lower),
                   format_double(row.upper), row.significant ? "1" : "0"});
  }
  gdwols::csv::write_file(
      path, {"block", "term", "estimate", "se", "lower", "upper", "significant"},
      out);
}

// ---- simulate ----

int cmd_simulate(const std::string& scenario_path, const std::string& out_path,
                 const std::string& truth_path, bool has_seed,
                 std::uint64_t seed, const std::string& link, bool null_run) {
  gdwols::SimConfig config =
      gdwols::sim_config_from_json(gdwols::load_json_file(scenario_path));
  if (has_seed) config.seed = seed;
  if (!link.empty()) config.link = gdwols::parse_allocation_link(link);
  if (null_run) config = config.null_variant();
  config.validate();

  const auto [panel, truth] = gdwols::generate_panel(config);
  gdwols::write_panel_csv(panel, out_path);
  const std::string sidecar =
      truth_path.empty() ? out_path + ".truth.json" : truth_path;
  gdwols::write_json_file(gdwols::truth_to_json(truth, panel), sidecar);
  std::cout << "wrote " << panel.observations.size() << " observations for "
            << truth.subject_intercepts.size() << " subjects to " << out_path
            << "\n";
  return kExitOk;
}

// ---- stages ----

int cmd_stages(const std::string& cd4_path, const std::string& injections_path,
               const std::string& covariates_path, double eta,
               const std::string& out_path) {
  const gdwols::UtilityWeights weights{eta};

  const gdwols::csv::Table cd4 = gdwols::csv::read_file(cd4_path);
  const std::size_t cd4_id = cd4.column("subject_id");
  const std::size_t cd4_day = cd4.column("day");
  const std::size_t cd4_value = cd4.column("cd4");

  std::vector<std::string> order;
  std::map<std::string, gdwols::CD4Series> series;
  for (const auto& row : cd4.rows) {
    const std::string& id = row[cd4_id];
    if (!series.count(id)) {
      order.push_back(id);
      series[id].subject_id = id;
    }
    series[id].times.push_back(gdwols::csv::parse_double(row[cd4_day], "day"));
    series[id].values.push_back(gdwols::csv::parse_double(row[cd4_value], "cd4"));
  }
  for (auto& [id, s] : series) {
    std::vector<std::size_t> perm(s.times.size());
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return s.times[a] < s.times[b]; });
    gdwols::CD4Series sorted;
    sorted.subject_id = id;
    for (std::size_t k : perm) {
      sorted.times.push_back(s.times[k]);
      sorted.values.push_back(s.values[k]);
    }
    s = std::move(sorted);
  }

  const gdwols::csv::Table inj = gdwols::csv::read_file(injections_path);
  const std::size_t inj_id = inj.column("subject_id");
  const std::size_t inj_day = inj.column("day");
  const std::size_t inj_count = inj.column("n_injections");
  for (const auto& row : inj.rows) {
    const std::string& id = row[inj_id];
    if (!series.count(id)) {
      throw std::invalid_argument("injections: subject '" + id +
                                  "' has no CD4 observations.");
    }
    series[id].injections.emplace_back(
        gdwols::csv::parse_double(row[inj_day], "day"),
        static_cast<int>(gdwols::csv::parse_int(row[inj_count], "n_injections")));
  }
  for (auto& [id, s] : series) {
    std::sort(s.injections.begin(), s.injections.end());
  }

  std::vector<std::string> baseline_names;
  std::map<std::string, std::vector<std::string>> baselines;
  if (!covariates_path.empty()) {
    const gdwols::csv::Table base = gdwols::csv::read_file(covariates_path);
    const std::size_t base_id = base.column("subject_id");
    for (std::size_t c = 0; c < base.header.size(); ++c) {
      if (c != base_id) baseline_names.push_back(base.header[c]);
    }
    for (const auto& row : base.rows) {
      std::vector<std::string> values;
      for (std::size_t c = 0; c < base.header.size(); ++c) {
        if (c != base_id) values.push_back(row[c]);
      }
      baselines[row[base_id]] = std::move(values);
    }
  }

  std::vector<std::string> header = {"subject_id", "stage_index", "start",
                                     "end",        "n_inj",       "cd4_first",
                                     "u_g",        "u_inj",       "u_eta",
                                     "hx",         "log_resp"};
  header.insert(header.end(), baseline_names.begin(), baseline_names.end());

  std::vector<std::vector<std::string>> rows;
  std::size_t n_stages = 0;
  for (const auto& id : order) {
    const auto records = gdwols::build_stage_records(series[id]);
    const std::vector<std::string>* base = nullptr;
    if (!baseline_names.empty()) {
      const auto it = baselines.find(id);
      if (it == baselines.end()) {
        throw std::invalid_argument("covariates: subject '" + id +
                                    "' is missing from the baseline file.");
      }
      base = &it->second;
    }
    for (std::size_t k = 0; k < records.size(); ++k) {
      const auto& rec = records[k];
      std::vector<std::string> row = {
          id,
          format_int(static_cast<long long>(k + 1)),
          format_double(rec.stage.start_time),
          format_double(rec.stage.end_time),
          format_int(rec.stage.n_injections),
          format_double(rec.stage.cd4_first),
          format_double(rec.u_g),
          format_int(rec.u_inj),
          format_double(gdwols::stage_utility(rec, weights)),
          format_int(rec.hx),
          format_double(rec.log_resp)};
      if (base) row.insert(row.end(), base->begin(), base->end());
      rows.push_back(std::move(row));
      ++n_stages;
    }
  }
  gdwols::csv::write_file(out_path, header, rows);
  std::cout << "wrote " << n_stages << " stages for " << order.size()
            << " subjects to " << out_path << "\n";
  return kExitOk;
}

// ---- fit ----

int cmd_fit(const std::string& panel_path, const std::string& config_path,
            const std::string& out_path, const std::string& coefficients_path,
            const std::string& residuals_path, const std::string& balance_path,
            const std::string& treatment_column,
            const std::string& outcome_column) {
  const gdwols::FitSettings settings =
      gdwols::fit_settings_from_json(gdwols::load_json_file(config_path));

  gdwols::PanelCsvOptions options;
  options.treatment_column = treatment_column;
  options.outcome_column = outcome_column;
  options.coding = settings.coding;
  const gdwols::PanelDataset dataset =
      gdwols::read_panel_csv(panel_path, options);

  const gdwols::PropensityFit propensity = gdwols::fit_multinomial_logit(
      dataset, settings.propensity_covariates, settings.propensity_options);
  const Eigen::VectorXd weights = gdwols::observation_weights(
      dataset, propensity, settings.weight_kind, settings.weight_cap);
  const gdwols::GdwolsFit fit =
      gdwols::fit_gdwols(dataset, settings.design, weights, settings.weight_kind);

  gdwols::FitArtifact artifact;
  artifact.fit = fit;
  artifact.propensity = propensity;
  artifact.settings = settings;
  artifact.source = {panel_path, treatment_column, outcome_column};

  std::vector<gdwols::CoefficientInterval> intervals;
  if (settings.inference.method == gdwols::InferenceOptions::Method::bootstrap) {
    artifact.has_bootstrap = true;
    artifact.bootstrap = gdwols::bootstrap_inference(
        dataset, settings.design, settings.propensity_covariates,
        settings.propensity_options, settings.weight_kind, settings.inference);
    for (Eigen::Index j = 0; j < artifact.bootstrap.estimate.size(); ++j) {
      gdwols::CoefficientInterval row;
      row.label = artifact.bootstrap.column_labels[static_cast<std::size_t>(j)];
      row.estimate = artifact.bootstrap.estimate[j];
      row.se = artifact.bootstrap.se[j];
      row.lower = artifact.bootstrap.lower[j];
      row.upper = artifact.bootstrap.upper[j];
      row.significant = row.lower > 0.0 || row.upper < 0.0;
      intervals.push_back(std::move(row));
    }
    if (artifact.bootstrap.failed > 0) {
      std::cout << "bootstrap: " << artifact.bootstrap.failed << " of "
                << artifact.bootstrap.requested << " replicates failed\n";
    }
  } else {
    intervals = gdwols::confidence_intervals(fit, settings.inference.level);
  }

  gdwols::write_json_file(gdwols::artifact_to_json(artifact), out_path);
  if (!coefficients_path.empty()) {
    write_coefficient_csv(coefficients_path, intervals);
  }
  if (!residuals_path.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < dataset.observations.size(); ++i) {
      const auto& obs = dataset.observations[i];
      rows.push_back({obs.subject_id, format_int(obs.stage_index),
                      format_double(fit.fitted[static_cast<Eigen::Index>(i)]),
                      format_double(fit.residuals[static_cast<Eigen::Index>(i)])});
    }
    gdwols::csv::write_file(residuals_path,
                            {"subject_id", "stage_index", "fitted", "residual"},
                            rows);
  }
  if (!balance_path.empty()) {
    gdwols::write_balance_csv(
        gdwols::smd_table(dataset, dataset.covariate_names), balance_path);
  }

  if (propensity.separation_warning) {
    std::cout << "warning: treatment model shows signs of separation\n";
  }
  std::cout << "fit " << fit.n_obs << " observations, " << fit.n_subjects
            << " subjects; coefficients written to " << out_path << "\n";
  return kExitOk;
}

// ---- sweep-eta ----

int cmd_sweep_eta(const std::string& stages_path, const std::string& config_path,
                  const std::string& grid_text, const std::string& out_path,
                  const std::string& treatment_column) {
  const gdwols::FitSettings settings =
      gdwols::fit_settings_from_json(gdwols::load_json_file(config_path));
  gdwols::PanelDataset dataset =
      read_component_panel(stages_path, treatment_column, settings.coding);
  const std::vector<double> grid = parse_grid(grid_text);
  for (double eta : grid) {
    if (eta < 0.0 || eta > 1.0) {
      throw std::invalid_argument("sweep grid must stay inside [0, 1].");
    }
  }

  // Assignment does not involve the outcome, so one propensity fit serves
  // every grid point.
  const gdwols::PropensityFit propensity = gdwols::fit_multinomial_logit(
      dataset, settings.propensity_covariates, settings.propensity_options);
  const Eigen::VectorXd weights = gdwols::observation_weights(
      dataset, propensity, settings.weight_kind, settings.weight_cap);
  const Eigen::MatrixXd x_psi =
      gdwols::blip_matrix(dataset, settings.design.blip_terms);

  const std::size_t m = dataset.coding.size();
  std::vector<std::string> header = {"eta"};
  for (std::size_t k = 0; k < m; ++k) {
    header.push_back("n_a" + std::to_string(k));
  }
  header.push_back("feasible");
  header.push_back("status");

  std::vector<std::vector<std::string>> rows;
  for (double eta : grid) {
    set_eta_outcomes(dataset, eta);
    std::vector<std::string> row = {format_double(eta)};
    try {
      const gdwols::GdwolsFit fit = gdwols::fit_gdwols(
          dataset, settings.design, weights, settings.weight_kind);
      std::vector<std::size_t> counts(m, 0);
      for (Eigen::Index i = 0; i < x_psi.rows(); ++i) {
        ++counts[gdwols::optimal_treatment(fit, x_psi.row(i).transpose())];
      }
      for (std::size_t k = 0; k < m; ++k) {
        row.push_back(format_int(static_cast<long long>(counts[k])));
      }
      std::string feasible;
      for (int action : gdwols::feasible_actions({eta})) {
        if (!feasible.empty()) feasible += "|";
        feasible += std::to_string(action);
      }
      row.push_back(feasible);
      row.push_back("ok");
    } catch (const std::exception&) {
      for (std::size_t k = 0; k < m; ++k) row.push_back("");
      row.push_back("");
      row.push_back("fit_failed");
    }
    rows.push_back(std::move(row));
  }
  gdwols::csv::write_file(out_path, header, rows);
  std::cout << "wrote " << rows.size() << " grid points to " << out_path << "\n";
  return kExitOk;
}

// ---- profiles ----

void write_profile_svg(const std::string& path, const std::string& profile,
                       const std::vector<std::string>& categories,
                       const std::vector<double>& grid,
                       const std::vector<std::vector<double>>& curves) {
  // curves[c][g]: contrast of category c at grid point g.
  const double width = 640.0, height = 420.0, margin = 50.0;
  double lo = 0.0, hi = 0.0;
  for (const auto& curve : curves) {
    for (double v : curve) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  auto x_at = [&](double eta) {
    return margin + eta * (width - 2.0 * margin);
  };
  auto y_at = [&](double v) {
    return height - margin - (v - lo) / (hi - lo) * (height - 2.0 * margin);
  };
  auto coord = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };

  const std::vector<std::string> palette = {"#1b6ca8", "#c0392b", "#27ae60",
                                            "#8e44ad", "#d35400"};
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing.");
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  out << "  <rect x=\"" << coord(margin) << "\" y=\"" << coord(margin)
      << "\" width=\"" << coord(width - 2 * margin) << "\" height=\""
      << coord(height - 2 * margin)
      << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  // Zero reference line.
  if (lo < 0.0 && hi > 0.0) {
    out << "  <line x1=\"" << coord(x_at(0.0)) << "\" y1=\"" << coord(y_at(0.0))
        << "\" x2=\"" << coord(x_at(1.0)) << "\" y2=\"" << coord(y_at(0.0))
        << "\" stroke=\"#888\" stroke-dasharray=\"5,4\" stroke-width=\"1\"/>\n";
  }
  for (std::size_t c = 0; c < curves.size(); ++c) {
    out << "  <polyline fill=\"none\" stroke=\""
        << palette[c % palette.size()] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (g > 0) out << ' ';
      out << coord(x_at(grid[g])) << ',' << coord(y_at(curves[c][g]));
    }
    out << "\"/>\n";
    out << "  <text x=\"" << coord(width - margin + 6) << "\" y=\""
        << coord(y_at(curves[c].back())) << "\" font-size=\"12\" fill=\""
        << palette[c % palette.size()] << "\">" << categories[c] << "</text>\n";
  }
  out << "  <text x=\"" << coord(width / 2) << "\" y=\""
      << coord(height - margin / 3)
      << "\" font-size=\"13\" text-anchor=\"middle\">eta</text>\n";
  out << "  <text x=\"" << coord(margin / 3) << "\" y=\"" << coord(height / 2)
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 "
      << coord(margin / 3) << " " << coord(height / 2)
      << ")\">contrast</text>\n";
  out << "  <text x=\"" << coord(width / 2) << "\" y=\"" << coord(margin / 2)
      << "\" font-size=\"14\" text-anchor=\"middle\">" << profile
      << "</text>\n";
  out << "</svg>\n";
}

int cmd_profiles(const std::string& fit_path, const std::string& profiles_path,
                 const std::string& grid_text, const std::string& out_path,
                 const std::string& svg_dir) {
  const gdwols::FitArtifact artifact =
      gdwols::artifact_from_json(gdwols::load_json_file(fit_path));
  const auto profiles =
      gdwols::profiles_from_json(gdwols::load_json_file(profiles_path));
  const std::vector<double> grid = parse_grid(grid_text);

  gdwols::PanelDataset dataset = read_component_panel(
      artifact.source.panel_path, artifact.source.treatment_column,
      artifact.fit.coding);

  const gdwols::FitSettings& settings = artifact.settings;
  const gdwols::PropensityFit propensity = gdwols::fit_multinomial_logit(
      dataset, settings.propensity_covariates, settings.propensity_options);
  const Eigen::VectorXd weights = gdwols::observation_weights(
      dataset, propensity, settings.weight_kind, settings.weight_cap);

  const auto& blip_terms = settings.design.blip_terms;
  std::vector<Eigen::VectorXd> profile_x;
  for (const auto& profile : profiles) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(1 + blip_terms.size()));
    x[0] = 1.0;
    for (std::size_t t = 0; t < blip_terms.size(); ++t) {
      bool found = false;
      for (const auto& [name, value] : profile.covariates) {
        if (name == blip_terms[t]) {
          x[static_cast<Eigen::Index>(1 + t)] = value;
          found = true;
          break;
        }
      }
      if (!found) {
        throw std::invalid_argument("profile '" + profile.name +
                                    "' does not set blip covariate '" +
                                    blip_terms[t] + "'");
      }
    }
    profile_x.push_back(std::move(x));
  }

  std::vector<std::string> header = {"profile"};
  for (const auto& term : blip_terms) header.push_back(term);
  header.push_back("eta");
  header.push_back("category");
  header.push_back("contrast");

  // curves[profile][category][grid point] for the optional charts.
  std::vector<std::vector<std::vector<double>>> curves(
      profiles.size(),
      std::vector<std::vector<double>>(artifact.fit.coding.size()));

  std::vector<std::vector<std::string>> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double eta = grid[g];
    if (eta < 0.0 || eta > 1.0) {
      throw std::invalid_argument("profile grid must stay inside [0, 1].");
    }
    set_eta_outcomes(dataset, eta);
    const gdwols::GdwolsFit fit = gdwols::fit_gdwols(
        dataset, settings.design, weights, settings.weight_kind);
    for (std::size_t p = 0; p < profiles.size(); ++p) {
      for (std::size_t cat = 0; cat < fit.coding.size(); ++cat) {
        const double contrast =
            gdwols::blip_contrast(fit, profile_x[p], cat);
        curves[p][cat].push_back(contrast);
        std::vector<std::string> row = {profiles[p].name};
        for (Eigen::Index t = 1; t < profile_x[p].size(); ++t) {
          row.push_back(format_double(profile_x[p][t]));
        }
        row.push_back(format_double(eta));
        row.push_back(fit.coding.categories[cat]);
        row.push_back(format_double(contrast));
        rows.push_back(std::move(row));
      }
    }
  }
  gdwols::csv::write_file(out_path, header, rows);

  if (!svg_dir.empty()) {
    std::filesystem::create_directories(svg_dir);
    for (std::size_t p = 0; p < profiles.size(); ++p) {
      write_profile_svg(svg_dir + "/" + profiles[p].name + ".svg",
                        profiles[p].name, artifact.fit.coding.categories, grid,
                        curves[p]);
    }
  }
  std::cout << "wrote " << rows.size() << " curve points to " << out_path
            << "\n";
  return kExitOk;
}

// ---- mc ----

int cmd_mc(const std::string& study_path, const std::string& out_dir,
           bool has_seed, std::uint64_t seed, int threads) {
  gdwols::McStudy study =
      gdwols::study_from_json(gdwols::load_json_file(study_path));
  if (has_seed) study.seed = seed;
  if (threads > 0) study.threads = threads;

  const gdwols::McResult result = gdwols::run_monte_carlo(study);
  std::filesystem::create_directories(out_dir);

  std::vector<std::vector<std::string>> estimate_rows;
  std::vector<std::vector<std::string>> policy_rows;
  for (const auto& cell : result.cells) {
    const std::string model = std::to_string(cell.cell.model);
    const std::string kind = gdwols::to_string(cell.cell.kind);
    const std::string n = std::to_string(cell.cell.n);
    for (const auto& rep : cell.replicates) {
      if (!rep.ok) continue;
      const std::string r = std::to_string(rep.replicate);
      for (std::size_t j = 0; j < rep.psi_labels.size(); ++j) {
        estimate_rows.push_back({model, kind, n, r, rep.psi_labels[j],
                                 format_double(rep.psi_estimates[j])});
      }
      std::vector<std::string> row = {model, kind, n, r,
                                      format_double(rep.eval.agreement_rate),
                                      format_double(rep.eval.value_opt)};
      for (double v : rep.eval.uniform_values) row.push_back(format_double(v));
      policy_rows.push_back(std::move(row));
    }
  }
  gdwols::csv::write_file(out_dir + "/estimates.csv",
                          {"model", "kind", "n", "replicate", "parameter",
                           "estimate"},
                          estimate_rows);
  std::vector<std::string> policy_header = {"model", "kind", "n", "replicate",
                                            "agreement_rate", "value_opt"};
  for (std::size_t k = 0; k < 3; ++k) {
    policy_header.push_back("value_a" + std::to_string(k));
  }
  gdwols::csv::write_file(out_dir + "/policy.csv", policy_header, policy_rows);

  // Per-cell digest.
  std::ofstream md(out_dir + "/summary.md");
  if (!md) {
    throw std::runtime_error("cannot open '" + out_dir + "/summary.md'");
  }
  const auto truth = gdwols::true_psi_stacked(study.scenario);
  md << "# Monte Carlo summary\n\n";
  md << "replicates per cell: " << study.replicates
     << "; test observations: " << study.test_observations << "; seed: "
     << study.seed << "\n";
  for (const auto& cell : result.cells) {
    md << "\n## model " << cell.cell.model << ", "
       << gdwols::to_string(cell.cell.kind) << " weights, n = " << cell.cell.n
       << "\n\n";
    std::vector<const gdwols::ReplicateRecord*> ok;
    for (const auto& rep : cell.replicates) {
      if (rep.ok) ok.push_back(&rep);
    }
    md << "replicates used: " << ok.size() << " (failed: "
       << cell.replicates.size() - ok.size() << ")\n\n";
    if (ok.empty()) continue;

    md << "| parameter | truth | mean bias | mc se | median |\n";
    md << "|---|---|---|---|---|\n";
    const std::size_t n_params = ok.front()->psi_labels.size();
    for (std::size_t j = 0; j < n_params; ++j) {
      std::vector<double> values;
      values.reserve(ok.size());
      for (const auto* rep : ok) values.push_back(rep->psi_estimates[j]);
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      const double se =
          values.size() > 1
              ? std::sqrt(ss / static_cast<double>(values.size() - 1) /
                          static_cast<double>(values.size()))
              : 0.0;
      std::sort(values.begin(), values.end());
      const double median = values.size() % 2 == 1
                                ? values[values.size() / 2]
                                : 0.5 * (values[values.size() / 2 - 1] +
                                         values[values.size() / 2]);
      const double truth_j = j < truth.size() ? truth[j] : 0.0;
      md << "| " << ok.front()->psi_labels[j] << " | " << fixed6(truth_j)
         << " | " << fixed6(mean - truth_j) << " | " << fixed6(se) << " | "
         << fixed6(median) << " |\n";
    }
    double agreement = 0.0, value_opt = 0.0;
    for (const auto* rep : ok) {
      agreement += rep->eval.agreement_rate;
      value_opt += rep->eval.value_opt;
    }
    agreement /= static_cast<double>(ok.size());
    value_opt /= static_cast<double>(ok.size());
    md << "\nmean agreement: " << fixed6(agreement)
       << "; mean value_opt: " << fixed6(value_opt)
       << "; value_truth: " << fixed6(ok.front()->eval.value_truth) << "\n";
  }
  md.close();

  std::cout << "wrote " << result.cells.size() << " cells to " << out_dir
            << "\n";
  return kExitOk;
}

// ---- check-myopic ----

int cmd_check_myopic(const std::string& env_path) {
  const gdwols::TwoStageEnv env = gdwols::load_environment(env_path);
  const gdwols::MyopicCheckResult result = gdwols::myopic_vs_dynamic_check(env);
  if (!env.name.empty()) std::cout << "environment: " << env.name << "\n";
  for (const auto& d : result.decisions) {
    std::cout << "state " << d.state << ": myopic " << d.myopic_action
              << " (value " << fixed6(d.myopic_value) << "), dynamic "
              << d.dynamic_action << " (value " << fixed6(d.dynamic_value)
              << ")\n";
  }
  if (result.identical) {
    std::cout << "identical: true\n";
    return kExitOk;
  }
  std::cout << "identical: false\n";
  for (std::size_t idx : result.witness_indices) {
    const auto& d = result.decisions[idx];
    std::cout << "witness: state " << d.state << " loses "
              << fixed6(d.dynamic_value - d.myopic_value)
              << " under myopic play\n";
  }
  return kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic weighted regression for categorical treatment rules"};
  app.require_subcommand(1);

  // simulate
  std::string sim_scenario, sim_out, sim_truth, sim_link;
  std::uint64_t sim_seed = 0;
  bool sim_null = false;
  auto* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic panel with its hidden truth");
  simulate->add_option("scenario", sim_scenario, "Scenario JSON")->required();
  simulate->add_option("--out", sim_out, "Panel CSV path")->required();
  simulate->add_option("--truth", sim_truth,
                       "Truth sidecar path (default: <out>.truth.json)");
  auto* sim_seed_opt =
      simulate->add_option("--seed", sim_seed, "Override the scenario seed");
  simulate->add_option("--link", sim_link,
                       "Assignment link: logit or paper_linear");
  simulate->add_flag("--null", sim_null, "Zero both blip vectors");

  // stages
  std::string st_cd4, st_inj, st_cov, st_out;
  double st_eta = 0.5;
  auto* stages = app.add_subcommand(
      "stages", "Build treatment stages and utilities from raw records");
  stages->add_option("--cd4", st_cd4, "CD4 visits CSV (subject_id,day,cd4)")
      ->required();
  stages
      ->add_option("--injections", st_inj,
                   "Injection events CSV (subject_id,day,n_injections)")
      ->required();
  stages->add_option("--covariates", st_cov,
                     "Optional subject-level covariate CSV (subject_id,...)");
  stages->add_option("--eta", st_eta, "Utility trade-off weight in [0, 1]");
  stages->add_option("--out", st_out, "Stage-level CSV path")->required();

  // fit
  std::string fit_panel, fit_config, fit_out, fit_coef, fit_resid, fit_balance;
  std::string fit_treat_col = "treatment", fit_outcome_col = "outcome";
  auto* fit = app.add_subcommand("fit", "Estimate the weighted decision model");
  fit->add_option("panel", fit_panel, "Panel CSV")->required();
  fit->add_option("--config", fit_config, "Fit settings JSON")->required();
  fit->add_option("--out", fit_out, "Fit artifact JSON path")->required();
  fit->add_option("--coefficients", fit_coef, "Coefficient table CSV path");
  fit->add_option("--residuals", fit_resid, "Residual CSV path");
  fit->add_option("--balance", fit_balance, "Covariate balance CSV path");
  fit->add_option("--treatment-col", fit_treat_col,
                  "Treatment column name (default: treatment)");
  fit->add_option("--outcome-col", fit_outcome_col,
                  "Outcome column name (default: outcome)");

  // sweep-eta
  std::string sw_stages, sw_config, sw_out, sw_grid = "0:1:0.05";
  std::string sw_treat_col = "n_inj";
  auto* sweep = app.add_subcommand(
      "sweep-eta", "Refit across the utility trade-off grid");
  sweep->add_option("stages", sw_stages, "Stage-level CSV with u_g and u_inj")
      ->required();
  sweep->add_option("--config", sw_config, "Fit settings JSON")->required();
  sweep->add_option("--grid", sw_grid, "Grid start:end:step");
  sweep->add_option("--out", sw_out, "Sweep CSV path")->required();
  sweep->add_option("--treatment-col", sw_treat_col,
                    "Treatment column name (default: n_inj)");

  // profiles
  std::string pr_fit, pr_profiles, pr_out, pr_svg, pr_grid = "0:1:0.01";
  auto* profiles = app.add_subcommand(
      "profiles", "Contrast curves for covariate profiles across the grid");
  profiles->add_option("fit", pr_fit, "Fit artifact JSON")->required();
  profiles->add_option("profiles", pr_profiles, "Profile definitions JSON")
      ->required();
  profiles->add_option("--grid", pr_grid, "Grid start:end:step");
  profiles->add_option("--out", pr_out, "Curve CSV path")->required();
  profiles->add_option("--svg-dir", pr_svg, "Directory for one SVG per profile");

  // mc
  std::string mc_study, mc_out;
  std::uint64_t mc_seed = 0;
  int mc_threads = 0;
  auto* mc = app.add_subcommand("mc", "Run the Monte Carlo study grid");
  mc->add_option("study", mc_study, "Study JSON")->required();
  mc->add_option("--out-dir", mc_out, "Output directory")->required();
  auto* mc_seed_opt = mc->add_option("--seed", mc_seed, "Override the study seed");
  mc->add_option("--threads", mc_threads, "Worker threads for replicates");

  // check-myopic
  std::string ck_env;
  auto* check = app.add_subcommand(
      "check-myopic", "Compare greedy and backward-induction strategies");
  check->add_option("environment", ck_env, "Environment JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (simulate->parsed()) {
      return cmd_simulate(sim_scenario, sim_out, sim_truth,
                          sim_seed_opt->count() > 0, sim_seed, sim_link,
                          sim_null);
    }
    if (stages->parsed()) {
      return cmd_stages(st_cd4, st_inj, st_cov, st_eta, st_out);
    }
    if (fit->parsed()) {
      return cmd_fit(fit_panel, fit_config, fit_out, fit_coef, fit_resid,
                     fit_balance, fit_treat_col, fit_outcome_col);
    }
    if (sweep->parsed()) {
      return cmd_sweep_eta(sw_stages, sw_config, sw_grid, sw_out, sw_treat_col);
    }
    if (profiles->parsed()) {
      return cmd_profiles(pr_fit, pr_profiles, pr_grid, pr_out, pr_svg);
    }
    if (mc->parsed()) {
      return cmd_mc(mc_study, mc_out, mc_seed_opt->count() > 0, mc_seed,
                    mc_threads);
    }
    if (check->parsed()) {
      return cmd_check_myopic(ck_env);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
