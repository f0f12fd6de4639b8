#include "gdwols/myopic.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gdwols {

namespace {

constexpr double kValueTol = 1e-9;

std::vector<std::string> string_list(const nlohmann::json& j,
                                     const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty()) {
    throw std::invalid_argument("environment: missing or empty list '" + key +
                                "'");
  }
  return j.at(key).get<std::vector<std::string>>();
}

std::size_t index_of(const std::vector<std::string>& labels,
                     const std::string& label, const std::string& what) {
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == label) return k;
  }
  throw std::invalid_argument("environment: unknown " + what + " '" + label +
                              "'");
}

// Reads {state: {action: number}} into a dense table.
std::vector<std::vector<double>> reward_table(
    const nlohmann::json& j, const std::vector<std::string>& states,
    const std::vector<std::string>& actions, const std::string& what) {
  std::vector<std::vector<double>> table(
      states.size(), std::vector<double>(actions.size(), 0.0));
  std::vector<std::vector<bool>> seen(states.size(),
                                      std::vector<bool>(actions.size(), false));
  for (const auto& [state, row] : j.items()) {
    const std::size_t s = index_of(states, state, what + " state");
    for (const auto& [action, value] : row.items()) {
      const std::size_t a = index_of(actions, action, what + " action");
      table[s][a] = value.get<double>();
      seen[s][a] = true;
    }
  }
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (std::size_t a = 0; a < actions.size(); ++a) {
      if (!seen[s][a]) {
        throw std::invalid_argument("environment: " + what +
                                    " reward missing for state '" + states[s] +
                                    "', action '" + actions[a] + "'");
      }
    }
  }
  return table;
}

}  // namespace

void TwoStageEnv::validate() const {
  if (states1.empty() || actions1.empty()) {
    throw std::invalid_argument("environment: stage 1 must have states and actions.");
  }
  if (reward1.size() != states1.size()) {
    throw std::invalid_argument("environment: stage-1 reward table shape mismatch.");
  }
  for (const auto& row : reward1) {
    if (row.size() != actions1.size()) {
      throw std::invalid_argument("environment: stage-1 reward table shape mismatch.");
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("environment: non-finite stage-1 reward.");
      }
    }
  }
  if (!has_stage2) return;

  if (states2.empty() || actions2.empty()) {
    throw std::invalid_argument("environment: stage 2 must have states and actions.");
  }
  if (transition.size() != states1.size()) {
    throw std::invalid_argument("environment: transition table shape mismatch.");
  }
  for (const auto& per_action : transition) {
    if (per_action.size() != actions1.size()) {
      throw std::invalid_argument("environment: transition table shape mismatch.");
    }
    for (const auto& dist : per_action) {
      if (dist.size() != states2.size()) {
        throw std::invalid_argument("environment: transition table shape mismatch.");
      }
      double total = 0.0;
      for (double p : dist) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw std::invalid_argument(
              "environment: transition probabilities must be nonnegative.");
        }
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument(
            "environment: transition probabilities must sum to 1, got " +
            std::to_string(total));
      }
    }
  }
  if (reward2.size() != states2.size()) {
    throw std::invalid_argument("environment: stage-2 reward table shape mismatch.");
  }
  for (const auto& row : reward2) {
    if (row.size() != actions2.size()) {
      throw std::invalid_argument("environment: stage-2 reward table shape mismatch.");
    }
  }
  if (carryover.size() != actions1.size()) {
    throw std::invalid_argument(
        "environment: carryover must list one bonus per stage-1 action.");
  }
}

TwoStageEnv environment_from_json(const nlohmann::json& j) {
  TwoStageEnv env;
  env.name = j.value("name", "");
  if (!j.contains("stage1")) {
    throw std::invalid_argument("environment: missing 'stage1' block.");
  }
  const auto& s1 = j.at("stage1");
  env.states1 = string_list(s1, "states");
  env.actions1 = string_list(s1, "actions");
  if (!s1.contains("reward")) {
    throw std::invalid_argument("environment: stage1 is missing 'reward'.");
  }
  env.reward1 = reward_table(s1.at("reward"), env.states1, env.actions1,
                             "stage-1");

  env.has_stage2 = j.contains("stage2");
  if (env.has_stage2) {
    const auto& s2 = j.at("stage2");
    env.states2 = string_list(s2, "states");
    env.actions2 = string_list(s2, "actions");
    if (!s2.contains("reward")) {
      throw std::invalid_argument("environment: stage2 is missing 'reward'.");
    }
    env.reward2 = reward_table(s2.at("reward"), env.states2, env.actions2,
                               "stage-2");

    if (!s2.contains("transition")) {
      throw std::invalid_argument("environment: stage2 is missing 'transition'.");
    }
    env.transition.assign(
        env.states1.size(),
        std::vector<std::vector<double>>(
            env.actions1.size(), std::vector<double>(env.states2.size(), 0.0)));
    for (const auto& [state, per_action] : s2.at("transition").items()) {
      const std::size_t s = index_of(env.states1, state, "transition state");
      for (const auto& [action, dist] : per_action.items()) {
        const std::size_t a = index_of(env.actions1, action, "transition action");
        for (const auto& [next_state, p] : dist.items()) {
          const std::size_t s_next =
              index_of(env.states2, next_state, "transition target");
          env.transition[s][a][s_next] = p.get<double>();
        }
      }
    }

    env.carryover.assign(env.actions1.size(), 0.0);
    if (s2.contains("carryover")) {
      for (const auto& [action, bonus] : s2.at("carryover").items()) {
        env.carryover[index_of(env.actions1, action, "carryover action")] =
            bonus.get<double>();
      }
    }
  }
  env.validate();
  return env;
}

TwoStageEnv load_environment(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("environment: cannot open '" + path + "'");
  }
  nlohmann::json j;
  in >> j;
  return environment_from_json(j);
}

MyopicCheckResult myopic_vs_dynamic_check(const TwoStageEnv& env) {
  env.validate();
  MyopicCheckResult result;

  // Best achievable stage-2 reward from each stage-2 state; the carryover
  // bonus shifts every stage-2 action equally, so the maximizer is shared by
  // the myopic and dynamic rules.
  std::vector<double> best2(env.states2.size(), 0.0);
  if (env.has_stage2) {
    for (std::size_t s = 0; s < env.states2.size(); ++s) {
      double best = env.reward2[s][0];
      for (double v : env.reward2[s]) best = std::max(best, v);
      best2[s] = best;
    }
  }

  auto q_value = [&](std::size_t s1, std::size_t a1) {
    double q = env.reward1[s1][a1];
    if (env.has_stage2) {
      q += env.carryover[a1];
      for (std::size_t s2 = 0; s2 < env.states2.size(); ++s2) {
        q += env.transition[s1][a1][s2] * best2[s2];
      }
    }
    return q;
  };

  for (std::size_t s1 = 0; s1 < env.states1.size(); ++s1) {
    std::size_t greedy = 0;
    for (std::size_t a = 1; a < env.actions1.size(); ++a) {
      if (env.reward1[s1][a] > env.reward1[s1][greedy]) greedy = a;
    }
    std::size_t dynamic = 0;
    double best_q = q_value(s1, 0);
    for (std::size_t a = 1; a < env.actions1.size(); ++a) {
      const double q = q_value(s1, a);
      if (q > best_q) {
        best_q = q;
        dynamic = a;
      }
    }

    StageOneDecision decision;
    decision.state = env.states1[s1];
    decision.myopic_action = env.actions1[greedy];
    decision.dynamic_action = env.actions1[dynamic];
    decision.myopic_value = q_value(s1, greedy);
    decision.dynamic_value = best_q;
    if (decision.dynamic_value - decision.myopic_value > kValueTol) {
      result.witness_indices.push_back(result.decisions.size());
    }
    result.decisions.push_back(std::move(decision));
  }
  result.identical = result.witness_indices.empty();
  return result;
}

}  // namespace gdwols
