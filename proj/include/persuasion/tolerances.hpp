#pragma once

namespace persuasion {

// Every numerical threshold used by the library lives here so that callers
// (and the CLI's --tol-* flags) can override them in one place.
struct Tolerances {
  // Row sums of transition kernels, priors, strategies and z.
  double probability_sum = 1e-12;
  // Shortfall allowed in the unnormalized incentive-compatibility inequality.
  double ic = 1e-9;
  // Q-value slack within which the agent still takes the advised action.
  double tie = 1e-9;
  // Target sup-norm accuracy of value iteration.
  double value_iteration = 1e-9;
  // Primal feasibility / optimality accuracy promised by lp_solve.
  double lp_feasibility = 1e-7;
  // Agreement between independently computed payoffs.
  double eval_match = 1e-6;
  // Recovered advice vs. LP objective.
  double recovery_mismatch = 1e-5;
  // Threat strategy payoff vs. advice-myopic payoff.
  double corollary = 1e-5;
};

inline constexpr Tolerances kDefaultTolerances{};

}  // namespace persuasion
