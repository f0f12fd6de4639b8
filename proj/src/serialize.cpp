#include "gdwols/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace gdwols {

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vec_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) {
    throw std::invalid_argument("expected an array for '" + what + "'");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index at = 0;
  for (const auto& x : j) v[at++] = x.get<double>();
  return v;
}

Eigen::Vector3d vec3_from_json(const json& j, const std::string& what) {
  const Eigen::VectorXd v = vec_from_json(j, what);
  if (v.size() != 3) {
    throw std::invalid_argument("'" + what + "' must have exactly 3 entries.");
  }
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd mat_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) {
    throw std::invalid_argument("expected a matrix for '" + what + "'");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::VectorXd row = vec_from_json(j.at(static_cast<std::size_t>(i)),
                                              what);
    if (i == 0) {
      m.resize(rows, row.size());
    } else if (row.size() != m.cols()) {
      throw std::invalid_argument("ragged matrix for '" + what + "'");
    }
    m.row(i) = row.transpose();
  }
  return m;
}

Transform transform_from_name(const std::string& name) {
  if (name == "identity") return Transform::identity;
  if (name == "exp_scaled") return Transform::exp_scaled;
  if (name == "sqrt") return Transform::sqrt;
  throw std::invalid_argument("unknown transform '" + name + "'");
}

std::string transform_name(Transform t) {
  switch (t) {
    case Transform::identity:
      return "identity";
    case Transform::exp_scaled:
      return "exp_scaled";
    case Transform::sqrt:
      return "sqrt";
  }
  throw std::logic_error("unknown transform");
}

}  // namespace

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "' for reading.");
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("cannot parse '" + path + "': " + e.what());
  }
  return j;
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing.");
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw std::runtime_error("write to '" + path + "' failed.");
  }
}

nlohmann::json coding_to_json(const TreatmentCoding& coding) {
  return json{{"categories", coding.categories},
              {"reference", coding.reference_label()}};
}

TreatmentCoding coding_from_json(const nlohmann::json& j) {
  TreatmentCoding coding;
  coding.categories = j.at("categories").get<std::vector<std::string>>();
  if (j.contains("reference")) {
    coding.reference = coding.index_of(j.at("reference").get<std::string>());
  }
  coding.validate();
  return coding;
}

nlohmann::json design_to_json(const DesignSpec& spec) {
  json terms = json::array();
  for (const auto& term : spec.treatment_free_terms) {
    if (term.transform == Transform::identity) {
      terms.push_back(term.covariate);
    } else {
      json t{{"covariate", term.covariate},
             {"transform", transform_name(term.transform)}};
      if (term.transform == Transform::exp_scaled) t["scale"] = term.scale;
      terms.push_back(std::move(t));
    }
  }
  return json{{"treatment_free", std::move(terms)}, {"blip", spec.blip_terms}};
}

DesignSpec design_from_json(const nlohmann::json& j) {
  DesignSpec spec;
  for (const auto& entry : j.at("treatment_free")) {
    TermSpec term;
    if (entry.is_string()) {
      term.covariate = entry.get<std::string>();
    } else {
      term.covariate = entry.at("covariate").get<std::string>();
      term.transform =
          transform_from_name(entry.value("transform", "identity"));
      if (term.transform == Transform::exp_scaled) {
        term.scale = entry.at("scale").get<double>();
        if (term.scale == 0.0) {
          throw std::invalid_argument("exp_scaled transform needs a nonzero scale.");
        }
      }
    }
    spec.treatment_free_terms.push_back(std::move(term));
  }
  spec.blip_terms = j.at("blip").get<std::vector<std::string>>();
  return spec;
}

nlohmann::json propensity_to_json(const PropensityFit& fit) {
  return json{{"coding", coding_to_json(fit.coding)},
              {"covariates", fit.covariate_names},
              {"alpha", mat_to_json(fit.alpha)},
              {"converged", fit.converged},
              {"iterations", fit.iterations},
              {"log_likelihood", fit.log_likelihood},
              {"separation_warning", fit.separation_warning}};
}

PropensityFit propensity_from_json(const nlohmann::json& j) {
  PropensityFit fit;
  fit.coding = coding_from_json(j.at("coding"));
  fit.covariate_names = j.at("covariates").get<std::vector<std::string>>();
  fit.alpha = mat_from_json(j.at("alpha"), "alpha");
  fit.converged = j.at("converged").get<bool>();
  fit.iterations = j.at("iterations").get<int>();
  fit.log_likelihood = j.at("log_likelihood").get<double>();
  fit.separation_warning = j.at("separation_warning").get<bool>();
  const auto expected_rows =
      static_cast<Eigen::Index>(fit.coding.size() - 1);
  const auto expected_cols =
      static_cast<Eigen::Index>(1 + fit.covariate_names.size());
  if (fit.alpha.rows() != expected_rows || fit.alpha.cols() != expected_cols) {
    throw std::invalid_argument("propensity artifact: alpha shape mismatch.");
  }
  return fit;
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig config;
  config.n = j.value("n", config.n);
  config.stages_per_subject =
      j.value("stages_per_subject", config.stages_per_subject);
  if (j.contains("alpha1")) config.alpha1 = vec3_from_json(j.at("alpha1"), "alpha1");
  if (j.contains("alpha2")) config.alpha2 = vec3_from_json(j.at("alpha2"), "alpha2");
  if (j.contains("beta")) config.beta = vec3_from_json(j.at("beta"), "beta");
  if (j.contains("psi1")) config.psi1 = vec3_from_json(j.at("psi1"), "psi1");
  if (j.contains("psi2")) config.psi2 = vec3_from_json(j.at("psi2"), "psi2");
  config.sex_prob = j.value("sex_prob", config.sex_prob);
  if (j.contains("cd4_init")) {
    const auto& init = j.at("cd4_init");
    config.cd4_init.mean = init.value("mean", config.cd4_init.mean);
    config.cd4_init.sd = init.value("sd", config.cd4_init.sd);
    config.cd4_init.lo = init.value("lo", config.cd4_init.lo);
    config.cd4_init.hi = init.value("hi", config.cd4_init.hi);
  }
  config.cd4_step_sd = j.value("cd4_step_sd", config.cd4_step_sd);
  config.random_intercept_sd =
      j.value("random_intercept_sd", config.random_intercept_sd);
  config.noise_sd = j.value("noise_sd", config.noise_sd);
  if (j.contains("link")) {
    config.link = parse_allocation_link(j.at("link").get<std::string>());
  }
  config.seed = j.value("seed", config.seed);
  if (j.value("null_effects", false)) {
    if ((j.contains("psi1") && config.psi1.norm() != 0.0) ||
        (j.contains("psi2") && config.psi2.norm() != 0.0)) {
      throw std::invalid_argument(
          "scenario: null_effects contradicts nonzero psi vectors.");
    }
    config = config.null_variant();
  }
  config.validate();
  return config;
}

nlohmann::json sim_config_to_json(const SimConfig& config) {
  return json{
      {"n", config.n},
      {"stages_per_subject", config.stages_per_subject},
      {"alpha1", vec_to_json(config.alpha1)},
      {"alpha2", vec_to_json(config.alpha2)},
      {"beta", vec_to_json(config.beta)},
      {"psi1", vec_to_json(config.psi1)},
      {"psi2", vec_to_json(config.psi2)},
      {"sex_prob", config.sex_prob},
      {"cd4_init",
       json{{"mean", config.cd4_init.mean},
            {"sd", config.cd4_init.sd},
            {"lo", config.cd4_init.lo},
            {"hi", config.cd4_init.hi}}},
      {"cd4_step_sd", config.cd4_step_sd},
      {"random_intercept_sd", config.random_intercept_sd},
      {"noise_sd", config.noise_sd},
      {"link", to_string(config.link)},
      {"null_effects", config.null_effects},
      {"seed", config.seed}};
}

nlohmann::json truth_to_json(const PanelTruth& truth,
                             const PanelDataset& panel) {
  json subject_ids = json::array();
  for (const auto& [id, indices] : panel.subjects()) subject_ids.push_back(id);
  json optimal = json::array();
  for (std::size_t category : truth.true_optimal) {
    optimal.push_back(panel.coding.categories.at(category));
  }
  return json{{"kind", "panel_truth"},
              {"config", sim_config_to_json(truth.config)},
              {"subject_ids", std::move(subject_ids)},
              {"subject_intercepts", truth.subject_intercepts},
              {"true_optimal", std::move(optimal)}};
}

PanelTruth truth_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "panel_truth") {
    throw std::invalid_argument("not a panel truth sidecar (missing kind tag).");
  }
  PanelTruth truth;
  truth.config = sim_config_from_json(j.at("config"));
  truth.subject_intercepts =
      j.at("subject_intercepts").get<std::vector<double>>();
  TreatmentCoding coding;
  coding.categories = {"0", "1", "2"};
  for (const auto& label : j.at("true_optimal")) {
    truth.true_optimal.push_back(coding.index_of(label.get<std::string>()));
  }
  return truth;
}

McStudy study_from_json(const nlohmann::json& j) {
  McStudy study;
  if (j.contains("scenario")) {
    study.scenario = sim_config_from_json(j.at("scenario"));
  }
  if (j.contains("models")) {
    study.models = j.at("models").get<std::vector<int>>();
  }
  if (j.contains("kinds")) {
    study.kinds.clear();
    for (const auto& k : j.at("kinds")) {
      study.kinds.push_back(parse_weight_kind(k.get<std::string>()));
    }
  }
  if (j.contains("sizes")) {
    study.sizes = j.at("sizes").get<std::vector<std::size_t>>();
  }
  study.replicates = j.value("replicates", study.replicates);
  study.test_observations =
      j.value("test_observations", study.test_observations);
  study.seed = j.value("seed", study.seed);
  study.threads = j.value("threads", study.threads);
  return study;
}

FitSettings fit_settings_from_json(const nlohmann::json& j) {
  FitSettings settings;
  if (j.contains("coding")) {
    settings.coding = coding_from_json(j.at("coding"));
  }
  if (j.contains("propensity")) {
    const auto& prop = j.at("propensity");
    settings.propensity_covariates =
        prop.value("covariates", std::vector<std::string>{});
    settings.propensity_options.tol =
        prop.value("tol", settings.propensity_options.tol);
    settings.propensity_options.max_iter =
        prop.value("max_iter", settings.propensity_options.max_iter);
    settings.propensity_options.ridge =
        prop.value("ridge", settings.propensity_options.ridge);
  }
  settings.design = design_from_json(j);
  if (j.contains("weights")) {
    settings.weight_kind = parse_weight_kind(j.at("weights").get<std::string>());
  }
  settings.weight_cap = j.value("weight_cap", 0.0);
  if (j.contains("inference")) {
    const auto& inf = j.at("inference");
    const std::string method = inf.value("method", "sandwich");
    if (method == "sandwich") {
      settings.inference.method = InferenceOptions::Method::sandwich;
    } else if (method == "bootstrap") {
      settings.inference.method = InferenceOptions::Method::bootstrap;
    } else {
      throw std::invalid_argument("unknown inference method '" + method + "'");
    }
    settings.inference.replicates =
        inf.value("replicates", settings.inference.replicates);
    settings.inference.level = inf.value("level", settings.inference.level);
    settings.inference.seed = inf.value("seed", settings.inference.seed);
    settings.inference.threads = inf.value("threads", settings.inference.threads);
  }
  return settings;
}

nlohmann::json fit_settings_to_json(const FitSettings& settings) {
  json j = design_to_json(settings.design);
  if (!settings.coding.categories.empty()) {
    j["coding"] = coding_to_json(settings.coding);
  }
  j["propensity"] = json{{"covariates", settings.propensity_covariates},
                         {"tol", settings.propensity_options.tol},
                         {"max_iter", settings.propensity_options.max_iter},
                         {"ridge", settings.propensity_options.ridge}};
  j["weights"] = to_string(settings.weight_kind);
  j["weight_cap"] = settings.weight_cap;
  // The thread count is an execution detail, not part of the statistical
  // recipe, so it is deliberately not echoed into saved artifacts.
  j["inference"] =
      json{{"method", settings.inference.method ==
                              InferenceOptions::Method::sandwich
                          ? "sandwich"
                          : "bootstrap"},
           {"replicates", settings.inference.replicates},
           {"level", settings.inference.level},
           {"seed", settings.inference.seed}};
  return j;
}

nlohmann::json artifact_to_json(const FitArtifact& artifact) {
  const GdwolsFit& fit = artifact.fit;
  json psi_blocks = json::array();
  json psi_categories = json::array();
  const auto blocks = fit.coding.non_reference();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    psi_categories.push_back(fit.coding.categories[blocks[b]]);
    psi_blocks.push_back(vec_to_json(fit.psi[b]));
  }

  json j{{"kind", "gdwols_fit"},
         {"coding", coding_to_json(fit.coding)},
         {"design", design_to_json(fit.spec)},
         {"weight_kind", to_string(fit.weight_kind)},
         {"column_labels", fit.column_labels},
         {"beta", vec_to_json(fit.beta)},
         {"psi_categories", std::move(psi_categories)},
         {"psi", std::move(psi_blocks)},
         {"vcov", mat_to_json(fit.vcov)},
         {"n_subjects", fit.n_subjects},
         {"n_obs", fit.n_obs},
         {"settings", fit_settings_to_json(artifact.settings)},
         {"propensity", propensity_to_json(artifact.propensity)},
         {"source", json{{"panel", artifact.source.panel_path},
                         {"treatment_column", artifact.source.treatment_column},
                         {"outcome_column", artifact.source.outcome_column}}}};
  if (artifact.has_bootstrap) {
    j["bootstrap"] = json{{"se", vec_to_json(artifact.bootstrap.se)},
                          {"lower", vec_to_json(artifact.bootstrap.lower)},
                          {"upper", vec_to_json(artifact.bootstrap.upper)},
                          {"requested", artifact.bootstrap.requested},
                          {"used", artifact.bootstrap.used},
                          {"failed", artifact.bootstrap.failed}};
  }
  return j;
}

FitArtifact artifact_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "gdwols_fit") {
    throw std::invalid_argument("not a fit artifact (missing kind tag).");
  }
  FitArtifact artifact;
  GdwolsFit& fit = artifact.fit;
  fit.coding = coding_from_json(j.at("coding"));
  fit.spec = design_from_json(j.at("design"));
  fit.weight_kind = parse_weight_kind(j.at("weight_kind").get<std::string>());
  fit.column_labels = j.at("column_labels").get<std::vector<std::string>>();
  fit.beta = vec_from_json(j.at("beta"), "beta");
  for (const auto& block : j.at("psi")) {
    fit.psi.push_back(vec_from_json(block, "psi"));
  }
  fit.vcov = mat_from_json(j.at("vcov"), "vcov");
  fit.n_subjects = j.at("n_subjects").get<std::size_t>();
  fit.n_obs = j.at("n_obs").get<std::size_t>();

  if (fit.psi.size() != fit.coding.size() - 1) {
    throw std::invalid_argument("fit artifact: psi block count mismatch.");
  }
  const auto r = static_cast<Eigen::Index>(fit.spec.r());
  for (const auto& block : fit.psi) {
    if (block.size() != r) {
      throw std::invalid_argument("fit artifact: psi block width mismatch.");
    }
  }

  artifact.settings = fit_settings_from_json(j.at("settings"));
  artifact.propensity = propensity_from_json(j.at("propensity"));
  const auto& source = j.at("source");
  artifact.source.panel_path = source.at("panel").get<std::string>();
  artifact.source.treatment_column =
      source.value("treatment_column", "treatment");
  artifact.source.outcome_column = source.value("outcome_column", "outcome");

  if (j.contains("bootstrap")) {
    artifact.has_bootstrap = true;
    const auto& boot = j.at("bootstrap");
    artifact.bootstrap.column_labels = fit.column_labels;
    artifact.bootstrap.estimate = fit.stacked();
    artifact.bootstrap.se = vec_from_json(boot.at("se"), "bootstrap.se");
    artifact.bootstrap.lower = vec_from_json(boot.at("lower"), "bootstrap.lower");
    artifact.bootstrap.upper = vec_from_json(boot.at("upper"), "bootstrap.upper");
    artifact.bootstrap.requested = boot.at("requested").get<int>();
    artifact.bootstrap.used = boot.at("used").get<int>();
    artifact.bootstrap.failed = boot.at("failed").get<int>();
  }
  return artifact;
}

std::vector<ProfileSpec> profiles_from_json(const nlohmann::json& j) {
  const auto& list = j.is_array() ? j : j.at("profiles");
  std::vector<ProfileSpec> profiles;
  for (const auto& entry : list) {
    ProfileSpec profile;
    profile.name = entry.at("name").get<std::string>();
    if (profile.name.empty()) {
      throw std::invalid_argument("profile with an empty name.");
    }
    double hx = 1.0;
    bool has_hx = false;
    for (const auto& [name, value] : entry.at("covariates").items()) {
      profile.covariates.emplace_back(name, value.get<double>());
      if (name == "Hx" || name == "hx") {
        hx = value.get<double>();
        has_hx = true;
      }
    }
    // No injection history means no observed response either. Stage tables
    // spell these columns hx / log_resp; hand-written panels tend to use the
    // camel-case names, so both are honored.
    if (has_hx && hx == 0.0) {
      for (auto& [name, value] : profile.covariates) {
        if (name == "logResp" || name == "log_resp") value = 0.0;
      }
    }
    profiles.push_back(std::move(profile));
  }
  if (profiles.empty()) {
    throw std::invalid_argument("profile list is empty.");
  }
  return profiles;
}

}  // namespace gdwols
