#include "gdwols/staging.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gdwols {

void CD4Series::validate() const {
  if (times.size() != values.size()) {
    throw std::invalid_argument("CD4Series: times and values differ in length ('" +
                                subject_id + "')");
  }
  if (times.empty()) {
    throw std::invalid_argument("CD4Series: no observations ('" + subject_id +
                                "')");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k]) || !std::isfinite(values[k])) {
      throw std::invalid_argument("CD4Series: non-finite entry ('" + subject_id +
                                  "')");
    }
    if (values[k] < 0.0) {
      throw std::invalid_argument("CD4Series: negative CD4 value ('" +
                                  subject_id + "')");
    }
    if (k > 0 && !(times[k] > times[k - 1])) {
      throw std::invalid_argument(
          "CD4Series: visit times must be strictly increasing ('" + subject_id +
          "')");
    }
  }
  for (const auto& [t, count] : injections) {
    if (count < 1) {
      throw std::invalid_argument("CD4Series: injection count must be positive ('" +
                                  subject_id + "')");
    }
    if (t < times.front() || t > times.back()) {
      throw std::invalid_argument(
          "CD4Series: injection outside the observed time range ('" +
          subject_id + "')");
    }
  }
}

double interpolate_cd4(const CD4Series& series, double t) {
  series.validate();
  if (t < series.times.front() || t > series.times.back()) {
    throw std::invalid_argument(
        "interpolate_cd4: t = " + std::to_string(t) +
        " lies outside the observed range [" +
        std::to_string(series.times.front()) + ", " +
        std::to_string(series.times.back()) + "] ('" + series.subject_id + "')");
  }
  const auto it =
      std::lower_bound(series.times.begin(), series.times.end(), t);
  const auto k = static_cast<std::size_t>(it - series.times.begin());
  if (k < series.times.size() && series.times[k] == t) return series.values[k];
  const double t0 = series.times[k - 1];
  const double t1 = series.times[k];
  const double v0 = series.values[k - 1];
  const double v1 = series.values[k];
  return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

double fraction_above(const CD4Series& series, double start, double end,
                      double threshold) {
  series.validate();
  if (!(start < end)) {
    throw std::invalid_argument(
        "fraction_above: need start < end, got [" + std::to_string(start) +
        ", " + std::to_string(end) + "]");
  }
  if (start < series.times.front() || end > series.times.back()) {
    throw std::invalid_argument(
        "fraction_above: window extends beyond the observed range ('" +
        series.subject_id + "')");
  }

  double above = 0.0;
  for (std::size_t k = 0; k + 1 < series.times.size(); ++k) {
    // Clip the segment to the window.
    const double t0 = std::max(series.times[k], start);
    const double t1 = std::min(series.times[k + 1], end);
    if (!(t1 > t0)) continue;
    const double full0 = series.times[k];
    const double full1 = series.times[k + 1];
    const double slope =
        (series.values[k + 1] - series.values[k]) / (full1 - full0);
    const double v0 = series.values[k] + slope * (t0 - full0);
    const double v1 = series.values[k] + slope * (t1 - full0);

    const bool above0 = v0 >= threshold;
    const bool above1 = v1 >= threshold;
    if (above0 && above1) {
      above += t1 - t0;
    } else if (above0 != above1) {
      // Single crossing inside (t0, t1).
      const double cross = t0 + (threshold - v0) / slope;
      above += above0 ? cross - t0 : t1 - cross;
    }
  }
  return above / (end - start);
}

std::vector<TreatmentStage> segment_stages(const CD4Series& series,
                                           const StageParams& params) {
  series.validate();
  if (!(params.nominal_length > 0.0)) {
    throw std::invalid_argument("segment_stages: nominal_length must be positive.");
  }

  std::vector<TreatmentStage> stages;
  const std::size_t n = series.times.size();
  std::size_t i = 0;
  while (i < n) {
    if (series.values[i] >= params.eligibility_threshold) {
      ++i;
      continue;
    }
    // A stage opens here; close at the earliest visit nominal_length days
    // out, or at the last visit when follow-up ends sooner.
    std::size_t j = i + 1;
    while (j < n &&
           series.times[j] < series.times[i] + params.nominal_length) {
      ++j;
    }
    if (j == n) j = n - 1;
    if (j == i) break;  // opened at the final visit: no interval to cover

    TreatmentStage stage;
    stage.start_time = series.times[i];
    stage.end_time = series.times[j];
    stage.cd4_first = series.values[i];
    int count = 0;
    for (const auto& [t, c] : series.injections) {
      if (t >= stage.start_time && t < stage.end_time) count += c;
    }
    if (count > 3) {
      throw std::invalid_argument(
          "segment_stages: " + std::to_string(count) +
          " injections in one stage for subject '" + series.subject_id +
          "'; at most 3 are supported.");
    }
    stage.n_injections = count;
    stages.push_back(stage);
    i = j;  // the closing visit may immediately open the next stage
  }
  return stages;
}

double stage_utility(const StageRecord& record, const UtilityWeights& weights) {
  if (!(weights.eta >= 0.0 && weights.eta <= 1.0)) {
    throw std::invalid_argument("stage_utility: eta must lie in [0, 1].");
  }
  return weights.eta * record.u_g +
         (1.0 - weights.eta) * static_cast<double>(record.u_inj);
}

std::vector<TailoringValues> tailoring_history(
    const std::vector<TreatmentStage>& stages,
    const std::vector<std::vector<double>>& readings_per_stage) {
  if (stages.size() != readings_per_stage.size()) {
    throw std::invalid_argument(
        "tailoring_history: need one reading list per stage.");
  }
  std::vector<TailoringValues> out(stages.size());
  for (std::size_t k = 0; k < stages.size(); ++k) {
    int last_injected = -1;
    for (std::size_t j = 0; j < k; ++j) {
      if (stages[j].n_injections > 0) last_injected = static_cast<int>(j);
    }
    if (last_injected < 0) continue;  // hx = 0, resp = 0

    out[k].hx = 1;
    const auto& readings =
        readings_per_stage[static_cast<std::size_t>(last_injected)];
    if (readings.empty()) {
      throw std::invalid_argument(
          "tailoring_history: injected stage without CD4 readings.");
    }
    const double peak = *std::max_element(readings.begin(), readings.end());
    // The first reading participates in the maximum, so resp >= 0.
    out[k].resp = (peak - readings.front()) /
                  static_cast<double>(stages[static_cast<std::size_t>(
                                                 last_injected)]
                                          .n_injections);
    out[k].log_resp = std::log(out[k].resp + 1.0);
  }
  return out;
}

std::set<int> feasible_actions(const UtilityWeights& weights) {
  const double eta = weights.eta;
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("feasible_actions: eta must lie in [0, 1].");
  }
  // An extra injection can raise the CD4 component by at most eta while
  // costing 1 - eta, so action k is worth considering only when
  // k * (1 - eta) < eta, i.e. eta > k / (k + 1).
  std::set<int> actions = {0};
  if (eta > 0.5) actions.insert(1);
  if (eta > 2.0 / 3.0) actions.insert(2);
  if (eta > 0.75) actions.insert(3);
  return actions;
}

std::vector<StageRecord> build_stage_records(const CD4Series& series,
                                             const StageParams& params) {
  const auto stages = segment_stages(series, params);
  std::vector<std::vector<double>> readings(stages.size());
  for (std::size_t k = 0; k < stages.size(); ++k) {
    for (std::size_t v = 0; v < series.times.size(); ++v) {
      if (series.times[v] >= stages[k].start_time &&
          series.times[v] <= stages[k].end_time) {
        readings[k].push_back(series.values[v]);
      }
    }
  }
  const auto tailoring = tailoring_history(stages, readings);

  std::vector<StageRecord> records(stages.size());
  for (std::size_t k = 0; k < stages.size(); ++k) {
    records[k].stage = stages[k];
    records[k].u_g = fraction_above(series, stages[k].start_time,
                                    stages[k].end_time,
                                    params.healthy_threshold);
    records[k].u_inj = -stages[k].n_injections;
    records[k].hx = tailoring[k].hx;
    records[k].resp = tailoring[k].resp;
    records[k].log_resp = tailoring[k].log_resp;
  }
  return records;
}

}  // namespace gdwols
