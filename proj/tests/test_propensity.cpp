#include <doctest.h>

#include <cmath>

#include "gdwols/propensity.hpp"
#include "gdwols/rng.hpp"
#include "helpers.hpp"

namespace {

// counts[k] observations of category k, no covariates beyond the intercept.
gdwols::PanelDataset count_panel(const std::vector<std::size_t>& counts) {
  gdwols::PanelDataset panel;
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    labels.push_back(std::to_string(k));
  }
  panel.coding = testutil::coding(labels);
  int id = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (std::size_t c = 0; c < counts[k]; ++c) {
      testutil::add_obs(panel, "s" + std::to_string(id++), 1, k, 0.0, {});
    }
  }
  return panel;
}

}  // namespace

TEST_CASE("intercept-only fit reproduces the closed-form log count ratios") {
  // Category counts with a rare arm, as seen in real injection data.
  const auto panel = count_panel({315, 17, 22, 150});
  const auto fit = gdwols::fit_multinomial_logit(panel, {});
  CHECK(fit.converged);
  REQUIRE(fit.alpha.rows() == 3);
  REQUIRE(fit.alpha.cols() == 1);
  CHECK(fit.alpha(0, 0) == doctest::Approx(std::log(17.0 / 315.0)).epsilon(1e-8));
  CHECK(fit.alpha(1, 0) == doctest::Approx(std::log(22.0 / 315.0)).epsilon(1e-8));
  CHECK(fit.alpha(2, 0) == doctest::Approx(std::log(150.0 / 315.0)).epsilon(1e-8));

  // Fitted shares equal the empirical frequencies.
  const Eigen::VectorXd probs = fit.probabilities(Eigen::VectorXd(0));
  CHECK(probs[0] == doctest::Approx(315.0 / 504.0).epsilon(1e-8));
  CHECK(probs[1] == doctest::Approx(17.0 / 504.0).epsilon(1e-8));
  CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit recovers the generating coefficients on a large sample") {
  gdwols::Rng rng(2024);
  gdwols::PanelDataset panel;
  panel.coding = testutil::coding({"0", "1", "2"});
  panel.covariate_names = {"z"};
  const double a1[2] = {-0.4, 1.2};
  const double a2[2] = {0.3, -0.9};
  for (int i = 0; i < 4000; ++i) {
    const double z = 2.0 * rng.uniform() - 1.0;
    const double e1 = std::exp(a1[0] + a1[1] * z);
    const double e2 = std::exp(a2[0] + a2[1] * z);
    const std::size_t a = rng.categorical({1.0, e1, e2});
    testutil::add_obs(panel, "s" + std::to_string(i), 1, a, 0.0, {z});
  }
  const auto fit = gdwols::fit_multinomial_logit(panel, {"z"});
  CHECK(fit.converged);
  CHECK(fit.alpha(0, 0) == doctest::Approx(a1[0]).epsilon(0.15));
  CHECK(fit.alpha(0, 1) == doctest::Approx(a1[1]).epsilon(0.15));
  CHECK(fit.alpha(1, 0) == doctest::Approx(a2[0]).epsilon(0.35));
  CHECK(fit.alpha(1, 1) == doctest::Approx(a2[1]).epsilon(0.15));
}

TEST_CASE("accepted steps never decrease the log-likelihood") {
  const auto panel = count_panel({40, 25, 10});
  const auto fit = gdwols::fit_multinomial_logit(panel, {});
  REQUIRE(fit.ll_trace.size() >= 2);
  for (std::size_t i = 1; i < fit.ll_trace.size(); ++i) {
    // Monotone up to the same resolution slack the line search grants.
    const double slack = 1e-12 * (1.0 + std::abs(fit.ll_trace[i - 1]));
    CHECK(fit.ll_trace[i] >= fit.ll_trace[i - 1] - slack);
  }
  CHECK(fit.log_likelihood == fit.ll_trace.back());
}

TEST_CASE("iteration budget exhaustion throws with the last iterate attached") {
  gdwols::Rng rng(7);
  gdwols::PanelDataset panel;
  panel.coding = testutil::coding({"0", "1"});
  panel.covariate_names = {"z"};
  for (int i = 0; i < 200; ++i) {
    const double z = rng.normal(0.0, 2.0);
    const std::size_t a = rng.bernoulli(1.0 / (1.0 + std::exp(-3.0 * z))) ? 1 : 0;
    testutil::add_obs(panel, "s" + std::to_string(i), 1, a, 0.0, {z});
  }
  gdwols::PropensityOptions options;
  options.max_iter = 1;
  try {
    gdwols::fit_multinomial_logit(panel, {"z"}, options);
    FAIL("expected convergence_error");
  } catch (const gdwols::convergence_error& e) {
    CHECK_FALSE(e.last_fit().converged);
    CHECK(e.last_fit().iterations == 1);
    CHECK(e.last_fit().alpha.allFinite());
  }
}

TEST_CASE("an observation driven to probability zero raises the separation flag") {
  gdwols::PanelDataset panel;
  panel.coding = testutil::coding({"0", "1"});
  panel.covariate_names = {"z"};
  int id = 0;
  auto batch = [&](double z, std::size_t a, int count) {
    for (int c = 0; c < count; ++c) {
      testutil::add_obs(panel, "s" + std::to_string(id++), 1, a, 0.0, {z});
    }
  };
  // Overlapping bulk pinning a steep finite slope, plus one observation far
  // on the wrong side of it. The z=1 margin must be lopsided enough that the
  // slope stays above ~4 at the solution, which puts the outlier's own
  // category below the 1e-10 detection line.
  batch(0.0, 0, 50);
  batch(0.0, 1, 50);
  batch(1.0, 0, 1);
  batch(1.0, 1, 999);
  batch(-8.0, 1, 1);
  const auto fit = gdwols::fit_multinomial_logit(panel, {"z"});
  CHECK(fit.converged);
  CHECK(fit.separation_warning);

  // The same data without the outlier is clean.
  gdwols::PanelDataset clean = panel;
  clean.observations.pop_back();
  CHECK_FALSE(gdwols::fit_multinomial_logit(clean, {"z"}).separation_warning);
}

TEST_CASE("fit rejects bad options and empty categories") {
  const auto panel = count_panel({10, 10});
  gdwols::PropensityOptions bad_tol;
  bad_tol.tol = 0.0;
  CHECK_THROWS(gdwols::fit_multinomial_logit(panel, {}, bad_tol));
  gdwols::PropensityOptions bad_iter;
  bad_iter.max_iter = 0;
  CHECK_THROWS(gdwols::fit_multinomial_logit(panel, {}, bad_iter));

  gdwols::PanelDataset missing;
  missing.coding = testutil::coding({"0", "1", "2"});
  testutil::add_obs(missing, "a", 1, 0, 0.0, {});
  testutil::add_obs(missing, "b", 1, 1, 0.0, {});
  CHECK_THROWS(gdwols::fit_multinomial_logit(missing, {}));
}

TEST_CASE("weight identities hold at hand-picked propensities") {
  Eigen::Vector3d uniform(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(gdwols::balancing_weight(uniform, a, gdwols::WeightKind::ipt) ==
          doctest::Approx(3.0).epsilon(1e-15));
    CHECK(gdwols::balancing_weight(uniform, a, gdwols::WeightKind::overlap) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }

  Eigen::Vector3d skewed(0.25, 0.25, 0.5);
  // Reciprocal sum is 10, so overlap weights are 1/(pi * 10).
  CHECK(gdwols::balancing_weight(skewed, 0, gdwols::WeightKind::overlap) ==
        doctest::Approx(0.4).epsilon(1e-15));
  CHECK(gdwols::balancing_weight(skewed, 2, gdwols::WeightKind::overlap) ==
        doctest::Approx(0.2).epsilon(1e-15));
  CHECK(gdwols::balancing_weight(skewed, 2, gdwols::WeightKind::ipt) ==
        doctest::Approx(2.0).epsilon(1e-15));

  Eigen::Vector2d degenerate(1.0, 0.0);
  CHECK_THROWS(gdwols::balancing_weight(degenerate, 0, gdwols::WeightKind::ipt));
}

TEST_CASE("both weight kinds balance any interior propensity vector") {
  gdwols::Rng rng(55);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform_index(3));
    Eigen::VectorXd gps(m);
    double total = 0.0;
    for (int k = 0; k < m; ++k) {
      gps[k] = 0.01 + rng.uniform();
      total += gps[k];
    }
    gps /= total;
    CHECK(gdwols::verify_balancing(gps, gdwols::WeightKind::ipt) <= 1e-12);
    CHECK(gdwols::verify_balancing(gps, gdwols::WeightKind::overlap) <= 1e-12);

    // Overlap weights stay inside the unit interval.
    for (int k = 0; k < m; ++k) {
      const double w = gdwols::balancing_weight(
          gps, static_cast<std::size_t>(k), gdwols::WeightKind::overlap);
      CHECK(w > 0.0);
      CHECK(w < 1.0);
    }
  }
}

TEST_CASE("observation weights follow the fitted propensities and honor caps") {
  const auto panel = count_panel({30, 10});
  const auto fit = gdwols::fit_multinomial_logit(panel, {});
  const Eigen::VectorXd w =
      gdwols::observation_weights(panel, fit, gdwols::WeightKind::ipt);
  REQUIRE(w.size() == 40);
  CHECK(w[0] == doctest::Approx(40.0 / 30.0).epsilon(1e-7));   // category 0
  CHECK(w[39] == doctest::Approx(40.0 / 10.0).epsilon(1e-7));  // category 1

  const Eigen::VectorXd capped =
      gdwols::observation_weights(panel, fit, gdwols::WeightKind::ipt, 2.0);
  CHECK(capped[39] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(capped[0] == doctest::Approx(40.0 / 30.0).epsilon(1e-7));
  CHECK_THROWS(gdwols::observation_weights(panel, fit,
                                           gdwols::WeightKind::ipt, -1.0));
}

TEST_CASE("probability queries validate their input") {
  const auto panel = count_panel({5, 5});
  const auto fit = gdwols::fit_multinomial_logit(panel, {});
  CHECK_THROWS(fit.probabilities(Eigen::VectorXd::Ones(2)));
  Eigen::VectorXd bad(0);
  CHECK(gdwols::generalized_propensity(fit, bad).size() == 2);
}
