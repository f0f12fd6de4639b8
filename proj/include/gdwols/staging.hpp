#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace gdwols {

// One subject's longitudinal CD4 record: interpolation knots at visit times
// plus dated injection events (time, count administered that day).
struct CD4Series {
  std::string subject_id;
  std::vector<double> times;   // strictly increasing
  std::vector<double> values;  // nonnegative, same length as times
  std::vector<std::pair<double, int>> injections;

  void validate() const;
};

// Piecewise-linear value at time t; t must lie inside the observed range.
double interpolate_cd4(const CD4Series& series, double t);

// Exact fraction of [start, end] on which the interpolated trajectory sits at
// or above the threshold, computed from analytic segment crossings.
double fraction_above(const CD4Series& series, double start, double end,
                      double threshold);

struct StageParams {
  double nominal_length = 90.0;        // days from opening to earliest close
  double eligibility_threshold = 550.0;  // a visit below this opens a stage
  double healthy_threshold = 500.0;      // target level for the CD4 utility
};

struct TreatmentStage {
  double start_time = 0.0;
  double end_time = 0.0;
  int n_injections = 0;  // 0..3 within [start, end)
  double cd4_first = 0.0;
};

// Scans visits in time order: a stage opens at the first visit below the
// eligibility threshold that is not already inside a stage, and closes at the
// earliest visit at least nominal_length days later (or at the last visit if
// none exists). The closing visit may immediately open the next stage.
std::vector<TreatmentStage> segment_stages(const CD4Series& series,
                                           const StageParams& params = {});

struct UtilityWeights {
  double eta = 0.5;  // weight on the CD4 component, must lie in [0, 1]
};

// Stage-level record combining the trade-off components with the tailoring
// history variables.
struct StageRecord {
  TreatmentStage stage;
  double u_g = 0.0;      // fraction of stage time at or above the healthy level
  int u_inj = 0;         // minus the number of injections received
  int hx = 0;            // any earlier stage with an injection
  double resp = 0.0;     // CD4 rise per injection in the last injected stage
  double log_resp = 0.0; // log(resp + 1)
};

double stage_utility(const StageRecord& record, const UtilityWeights& weights);

struct TailoringValues {
  int hx = 0;
  double resp = 0.0;
  double log_resp = 0.0;
};

// History variables for each stage, given the per-stage CD4 readings
// (readings_per_stage[k] lists the observed values inside stage k, first
// reading first). Stage k looks back at the most recent earlier stage with
// injections.
std::vector<TailoringValues> tailoring_history(
    const std::vector<TreatmentStage>& stages,
    const std::vector<std::vector<double>>& readings_per_stage);

// Injection counts worth considering at a given trade-off weight: {0} on
// [0, 1/2], {0,1} on (1/2, 2/3], {0,1,2} on (2/3, 3/4], all four above 3/4.
std::set<int> feasible_actions(const UtilityWeights& weights);

// Full staging pipeline for one subject: segmentation, utilities and
// tailoring history in one pass.
std::vector<StageRecord> build_stage_records(const CD4Series& series,
                                             const StageParams& params = {});

}  // namespace gdwols
