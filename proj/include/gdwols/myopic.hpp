#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace gdwols {

// Finite one- or two-stage decision environment, small enough to solve
// exactly. Stage-2 rewards may carry an additive bonus keyed by the stage-1
// action, which is exactly the kind of delayed effect that separates myopic
// from dynamic planning.
struct TwoStageEnv {
  std::string name;

  std::vector<std::string> states1;
  std::vector<std::string> actions1;
  std::vector<std::vector<double>> reward1;  // [s1][a1]

  bool has_stage2 = false;
  std::vector<std::string> states2;
  std::vector<std::string> actions2;
  std::vector<std::vector<std::vector<double>>> transition;  // [s1][a1][s2]
  std::vector<std::vector<double>> reward2;  // [s2][a2]
  std::vector<double> carryover;             // [a1], additive on stage-2 reward

  void validate() const;
};

TwoStageEnv environment_from_json(const nlohmann::json& j);
TwoStageEnv load_environment(const std::string& path);

struct StageOneDecision {
  std::string state;
  std::string myopic_action;
  std::string dynamic_action;
  double myopic_value = 0.0;   // total expected outcome under greedy stage-1 choice
  double dynamic_value = 0.0;  // total expected outcome under backward induction
};

struct MyopicCheckResult {
  bool identical = false;
  std::vector<StageOneDecision> decisions;      // one per stage-1 state
  std::vector<std::size_t> witness_indices;     // decisions with a value gap
};

// Compares per-stage greedy maximization against exhaustive backward
// induction. Both rules coincide at stage 2 (the bonus is constant in the
// stage-2 action), so strategies can only part ways at stage 1; the check
// flags every initial state where greedy first-stage play costs value.
MyopicCheckResult myopic_vs_dynamic_check(const TwoStageEnv& env);

}  // namespace gdwols
