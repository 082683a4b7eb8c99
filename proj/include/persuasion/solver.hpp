#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "persuasion/agent.hpp"
#include "persuasion/errors.hpp"
#include "persuasion/eval.hpp"
#include "persuasion/lp.hpp"
#include "persuasion/model.hpp"
#include "persuasion/tolerances.hpp"

namespace persuasion {

// Multipliers of the per-state obedience LPs together with the value function.
// I[s] is indexed [a][b], J[s] by theta, K[s] by [a][theta]; entries for
// unavailable actions and terminal states are 0.
struct DualLPSolution {
  std::vector<double> V;
  std::vector<Array2> I;
  std::vector<std::vector<double>> J;
  std::vector<Array2> K;
  double objective = 0.0;
};

struct SolveDiagnostics {
  std::string lp_status;
  std::size_t lp_iterations = 0;
  std::size_t lp_rows = 0;
  std::size_t lp_variables = 0;
  double lp_objective = 0.0;       // sum_s z_s V(s) from the dual LP
  double bellman_gap = 0.0;        // max_s |V(s) - value of recovered advice step|
  double ic_violation = 0.0;       // of the returned advice w.r.t. the reward used
  std::size_t vi_iterations = 0;
  bool obedient = true;            // best response follows the advice where reached
  double verified_payoff = 0.0;    // independent re-evaluation of the principal payoff
  std::vector<std::vector<ActionIndex>> dictation;  // full control: [s][theta] -> a
  double wall_seconds = 0.0;
};

using ReportStrategy = std::variant<std::monostate, ActionAdvice, ThreatStrategy>;

struct SolveReport {
  std::string method;  // myop | am | threat | nosig-myop | nosig-fs | full-control
  ReportStrategy strategy;
  AgentPolicy response;  // agent behaviour the payoffs were computed under
  double principal = 0.0;
  double agent = 0.0;
  SolveDiagnostics diagnostics;
  std::optional<DualLPSolution> dual;
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Per-state values of the obedient chain under an advice:
//   v = r + d P v with r(s) = sum phi_s(theta, a) reward(s, theta, a).
inline std::vector<double> evaluate_obedient(const PersuasionMDP& mdp, const ActionAdvice& advice,
                                             const RewardTable& reward, double discount) {
  const auto n = static_cast<Eigen::Index>(mdp.num_states());
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    const auto i = static_cast<Eigen::Index>(s);
    for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) {
      for (ActionIndex a : mdp.available(s)) {
        const double w = mdp.prior(s, t) * advice(s, t, a);
        if (w == 0.0) continue;
        rhs(i) += w * reward(s, t, a);
        for (StateIndex nx = 0; nx < mdp.num_states(); ++nx)
          system(i, static_cast<Eigen::Index>(nx)) -= discount * w * mdp.transition(s, a, nx);
      }
    }
  }
  Eigen::VectorXd v = Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(rhs);
  if (!v.allFinite()) throw SingularSystem("obedient chain system is singular");
  return {v.data(), v.data() + v.size()};
}

inline double weighted(const PersuasionMDP& mdp, const std::vector<double>& v) {
  double out = 0.0;
  for (StateIndex s = 0; s < mdp.num_states(); ++s) out += mdp.init_dist()[s] * v[s];
  return out;
}

// Policy that obeys every advised signal.
inline AgentPolicy obedient_policy(const PersuasionMDP& mdp) {
  AgentPolicy p(mdp.num_states(), mdp.num_actions());
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    for (ActionIndex a : mdp.available(s)) p.set(s, a, a);
  return p;
}

// Uninformative advice recommending policy[s] in every state.
inline ActionAdvice dictate(const PersuasionMDP& mdp, const std::vector<ActionIndex>& policy) {
  Array3 pi(mdp.num_states(), mdp.num_thetas(), mdp.num_actions());
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) pi(s, t, policy[s]) = 1.0;
  }
  return ActionAdvice(mdp, std::move(pi));
}

}  // namespace detail

// Advice recommending dictation[s][theta] with certainty.
inline ActionAdvice dictation_advice(const PersuasionMDP& mdp,
                                     const std::vector<std::vector<ActionIndex>>& dictation,
                                     const Tolerances& tol = kDefaultTolerances) {
  Array3 pi(mdp.num_states(), mdp.num_thetas(), mdp.num_actions());
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    if (!mdp.is_terminal(s))
      for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) pi(s, t, dictation[s][t]) = 1.0;
  return ActionAdvice(mdp, std::move(pi), tol);
}

namespace detail {

inline double q_state(const PersuasionMDP& mdp, const RewardTable& reward, StateIndex s,
                      ThetaIndex t, ActionIndex a, const std::vector<double>& v, double discount) {
  double q = reward(s, t, a);
  for (StateIndex nx = 0; nx < mdp.num_states(); ++nx) q += discount * mdp.transition(s, a, nx) * v[nx];
  return q;
}

struct Recovery {
  Array3 pi;
  double bellman_gap = 0.0;
};

// Per state, the IC advice maximizing sum mu(theta) pi(theta, a) (R + gamma P V)
// with V fixed at the dual optimum.
inline Recovery recover_advice(const PersuasionMDP& mdp, const RewardTable& reward,
                               const std::vector<double>& V, std::size_t& iterations) {
  const std::size_t T = mdp.num_thetas();
  Recovery out{Array3(mdp.num_states(), T, mdp.num_actions()), 0.0};
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    const auto& av = mdp.available(s);
    const std::size_t n = av.size();
    LinearProgram lp;
    for (ThetaIndex t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const double q = q_state(mdp, mdp.principal_reward(), s, t, av[i], V, mdp.gamma());
        lp.add_variable(-mdp.prior(s, t) * q, 0.0);
      }
    }
    auto var = [&](ThetaIndex t, std::size_t i) { return t * n + i; };
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        if (i == k) continue;
        std::vector<std::pair<std::size_t, double>> row;
        for (ThetaIndex t = 0; t < T; ++t) {
          const double c = mdp.prior(s, t) * (reward(s, t, av[i]) - reward(s, t, av[k]));
          if (c != 0.0) row.emplace_back(var(t, i), c);
        }
        lp.add_row(std::move(row), Comparator::GreaterEqual, 0.0);
      }
    }
    for (ThetaIndex t = 0; t < T; ++t) {
      std::vector<std::pair<std::size_t, double>> row;
      for (std::size_t i = 0; i < n; ++i) row.emplace_back(var(t, i), 1.0);
      lp.add_row(std::move(row), Comparator::Equal, 1.0);
    }
    const auto sol = lp_solve(lp);
    iterations += sol.iterations;
    if (sol.status != LpStatus::Optimal) {
      throw LPFailure(std::string("advice recovery LP at state ") + std::to_string(s) + ": " +
                      to_string(sol.status));
    }
    double value = 0.0;
    for (ThetaIndex t = 0; t < T; ++t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double p = sol.x[var(t, i)];
        if (p < 1e-13) p = 0.0;
        out.pi(s, t, av[i]) = p;
        sum += p;
      }
      for (std::size_t i = 0; i < n; ++i) out.pi(s, t, av[i]) /= sum;
      for (std::size_t i = 0; i < n; ++i)
        value += mdp.prior(s, t) * out.pi(s, t, av[i]) *
                 q_state(mdp, mdp.principal_reward(), s, t, av[i], V, mdp.gamma());
    }
    out.bellman_gap = std::max(out.bellman_gap, std::abs(value - V[s]));
  }
  return out;
}

}  // namespace detail

// Builds and solves the dual LP
//   min sum_s w_s V(s)
//   s.t. V(s) >= sum_theta J_s(theta)
//        J_s(theta) + sum_{b != a} mu_s(theta) (r(s,theta,b) - r(s,theta,a)) I_s(a,b)
//          - K_s(a,theta) = mu_s(theta) (R(s,theta,a) + gamma sum_s' P(s,a,s') V(s'))
// over a, b in A_s, with I, K >= 0 and V = 0 at terminal states. K is the
// surplus of the inequality form. Weights w_s = max(z_s, 1e-6/|S|).
//
// To start from a feasible slack basis the LP is solved in shifted variables
// V = V' + U, J_s(theta) = J'_s(theta) + mu_s(theta) U with U = R_max/(1-gamma),
// which makes every right-hand side nonpositive.
inline DualLPSolution solve_dual_lp(const PersuasionMDP& mdp, const RewardTable& reward,
                                    SolveDiagnostics& diag) {
  const std::size_t S = mdp.num_states();
  const std::size_t T = mdp.num_thetas();
  const std::size_t A = mdp.num_actions();
  const double gamma = mdp.gamma();
  double r_max = -std::numeric_limits<double>::infinity();
  for (StateIndex s = 0; s < S; ++s)
    for (ActionIndex a : mdp.available(s))
      for (ThetaIndex t = 0; t < T; ++t) r_max = std::max(r_max, mdp.principal_reward()(s, t, a));
  if (!std::isfinite(r_max)) r_max = 0.0;
  const double U = r_max / (1.0 - gamma);

  const double eps_w = 1e-6 / static_cast<double>(S);
  LinearProgram lp;
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> v_var(S, kNone);
  std::vector<std::vector<std::size_t>> j_var(S);
  std::vector<std::vector<std::size_t>> i_var(S);  // [s][a * A + b]
  for (StateIndex s = 0; s < S; ++s) {
    if (mdp.is_terminal(s)) continue;
    v_var[s] = lp.add_variable(std::max(mdp.init_dist()[s], eps_w));
  }
  for (StateIndex s = 0; s < S; ++s) {
    if (mdp.is_terminal(s)) continue;
    for (ThetaIndex t = 0; t < T; ++t) j_var[s].push_back(lp.add_variable(0.0));
    i_var[s].assign(A * A, kNone);
    for (ActionIndex a : mdp.available(s))
      for (ActionIndex b : mdp.available(s))
        if (a != b) i_var[s][a * A + b] = lp.add_variable(0.0, 0.0);
  }

  struct RowRef {
    StateIndex s;
    ActionIndex a;
    ThetaIndex t;
  };
  std::vector<RowRef> surplus_rows;
  for (StateIndex s = 0; s < S; ++s) {
    if (mdp.is_terminal(s)) continue;
    std::vector<std::pair<std::size_t, double>> vrow{{v_var[s], 1.0}};
    for (ThetaIndex t = 0; t < T; ++t) vrow.emplace_back(j_var[s][t], -1.0);
    lp.add_row(std::move(vrow), Comparator::GreaterEqual, 0.0);
    for (ActionIndex a : mdp.available(s)) {
      for (ThetaIndex t = 0; t < T; ++t) {
        const double mu = mdp.prior(s, t);
        std::vector<std::pair<std::size_t, double>> row{{j_var[s][t], 1.0}};
        for (ActionIndex b : mdp.available(s)) {
          if (b == a) continue;
          const double c = mu * (reward(s, t, b) - reward(s, t, a));
          if (c != 0.0) row.emplace_back(i_var[s][a * A + b], c);
        }
        for (StateIndex nx = 0; nx < S; ++nx) {
          const double p = mdp.transition(s, a, nx);
          if (p != 0.0 && v_var[nx] != kNone) row.emplace_back(v_var[nx], -gamma * mu * p);
        }
        // Shift: terminal successors contribute no U term.
        double term_mass = 0.0;
        for (StateIndex nx = 0; nx < S; ++nx)
          if (v_var[nx] == kNone) term_mass += mdp.transition(s, a, nx);
        const double rhs = mu * (mdp.principal_reward()(s, t, a) - r_max) - gamma * mu * U * term_mass;
        lp.add_row(std::move(row), Comparator::GreaterEqual, rhs);
        surplus_rows.push_back({s, a, t});
      }
    }
  }

  const auto sol = lp_solve(lp);
  diag.lp_status = to_string(sol.status);
  diag.lp_iterations += sol.iterations;
  diag.lp_rows = lp.rows().size();
  diag.lp_variables = lp.num_variables();
  if (sol.status != LpStatus::Optimal)
    throw LPFailure(std::string("dual LP: ") + to_string(sol.status));

  DualLPSolution out;
  out.V.assign(S, 0.0);
  out.J.assign(S, std::vector<double>(T, 0.0));
  out.I.assign(S, Array2(A, A));
  out.K.assign(S, Array2(A, T));
  for (StateIndex s = 0; s < S; ++s) {
    if (mdp.is_terminal(s)) continue;
    out.V[s] = sol.x[v_var[s]] + U;
    for (ThetaIndex t = 0; t < T; ++t) out.J[s][t] = sol.x[j_var[s][t]] + mdp.prior(s, t) * U;
    for (ActionIndex a : mdp.available(s))
      for (ActionIndex b : mdp.available(s))
        if (a != b) out.I[s](a, b) = sol.x[i_var[s][a * A + b]];
  }
  for (const auto& r : surplus_rows) {
    const double mu = mdp.prior(r.s, r.t);
    double lhs = out.J[r.s][r.t];
    for (ActionIndex b : mdp.available(r.s))
      if (b != r.a) lhs += mu * (reward(r.s, r.t, b) - reward(r.s, r.t, r.a)) * out.I[r.s](r.a, b);
    out.K[r.s](r.a, r.t) =
        lhs - mu * detail::q_state(mdp, mdp.principal_reward(), r.s, r.t, r.a, out.V, gamma);
  }
  out.objective = detail::weighted(mdp, out.V);
  return out;
}

// Optimal IC action advice against a myopic agent maximizing `reward`.
inline SolveReport opt_sig_myop(const PersuasionMDP& mdp, const RewardTable& reward,
                                const Tolerances& tol = kDefaultTolerances) {
  detail::Stopwatch clock;
  SolveReport rep;
  rep.method = "myop";
  auto dual = solve_dual_lp(mdp, reward, rep.diagnostics);
  rep.diagnostics.lp_objective = dual.objective;

  auto rec = detail::recover_advice(mdp, reward, dual.V, rep.diagnostics.lp_iterations);
  rep.diagnostics.bellman_gap = rec.bellman_gap;
  ActionAdvice advice(mdp, std::move(rec.pi), tol);
  rep.diagnostics.ic_violation = is_ic(mdp, advice, reward, tol).max_violation;

  const auto vp = detail::evaluate_obedient(mdp, advice, mdp.principal_reward(), mdp.gamma());
  const auto va = detail::evaluate_obedient(mdp, advice, mdp.agent_reward(), mdp.gamma_tilde());
  rep.principal = detail::weighted(mdp, vp);
  rep.agent = detail::weighted(mdp, va);
  rep.diagnostics.verified_payoff = rep.principal;
  if (std::abs(rep.principal - dual.objective) > tol.recovery_mismatch) {
    throw RecoveryMismatch("recovered advice is worth " + std::to_string(rep.principal) +
                           " but the LP value is " + std::to_string(dual.objective));
  }
  rep.response = myopic_response(mdp, advice, reward, tol);
  rep.strategy = std::move(advice);
  rep.dual = std::move(dual);
  rep.diagnostics.wall_seconds = clock.seconds();
  return rep;
}

inline SolveReport opt_sig_myop(const PersuasionMDP& mdp, const Tolerances& tol = kDefaultTolerances) {
  return opt_sig_myop(mdp, mdp.agent_reward(), tol);
}

// Optimal advice against an advice-myopic agent: the myopic problem under the
// augmented reward R+.
inline SolveReport opt_sig_am(const PersuasionMDP& mdp, const Tolerances& tol = kDefaultTolerances) {
  detail::Stopwatch clock;
  const auto nosig = nosig_value(mdp, tol);
  auto rep = opt_sig_myop(mdp, am_rewards(mdp, nosig), tol);
  rep.method = "am";
  rep.diagnostics.wall_seconds = clock.seconds();
  return rep;
}

// Wraps the advice-myopic optimum in the punish-with-silence rule and checks
// that a far-sighted agent's best response to it reproduces the AM payoff.
inline SolveReport threat_strategy(const PersuasionMDP& mdp, const Tolerances& tol = kDefaultTolerances) {
  detail::Stopwatch clock;
  auto rep = opt_sig_am(mdp, tol);
  const double am_payoff = rep.principal;
  ThreatStrategy threat{std::get<ActionAdvice>(rep.strategy)};

  const auto meta = build_threat_meta_mdp(mdp, threat);
  const auto br = solve_mdp(meta, tol);
  rep.diagnostics.vi_iterations = br.iterations;
  const auto reach = reachable(meta, br.choice);
  rep.diagnostics.obedient = true;
  for (std::size_t m = 0; m < meta.size(); ++m) {
    const auto& ms = meta.states[m];
    if (!reach[m] || ms.signal == kSilentSignal || meta.choices[m].empty()) continue;
    if (meta.choices[m][br.choice[m]].action != ms.advised) rep.diagnostics.obedient = false;
  }
  const auto ev = exact_eval(mdp, threat, br.policy, "threat");
  rep.method = "threat";
  rep.principal = ev.principal;
  rep.agent = ev.agent;
  rep.diagnostics.verified_payoff = am_payoff;
  rep.response = br.policy;
  rep.strategy = std::move(threat);
  if (std::abs(ev.principal - am_payoff) > tol.corollary) {
    throw CorollaryViolation("threat strategy is worth " + std::to_string(ev.principal) +
                             " against a far-sighted agent but the AM payoff is " +
                             std::to_string(am_payoff));
  }
  rep.diagnostics.wall_seconds = clock.seconds();
  return rep;
}

// Upper bound: the principal observes theta and picks the action itself.
inline SolveReport full_control(const PersuasionMDP& mdp, const Tolerances& tol = kDefaultTolerances) {
  detail::Stopwatch clock;
  const std::size_t S = mdp.num_states();
  const std::size_t T = mdp.num_thetas();
  const double gamma = mdp.gamma();
  double r_max = 0.0;
  for (double r : mdp.principal_reward().data()) r_max = std::max(r_max, std::abs(r));

  std::size_t budget = 2;
  if (gamma > 0.0 && r_max > 0.0) {
    const double raw = 10.0 * std::log(tol.value_iteration * (1.0 - gamma) / r_max) / std::log(gamma);
    budget = static_cast<std::size_t>(std::clamp(std::ceil(raw), 2.0, 1e6));
  }
  const double guaranteed = gamma > 0.0 ? tol.value_iteration * (1.0 - gamma) / gamma : 0.0;

  std::vector<std::vector<ActionIndex>> dict(S, std::vector<ActionIndex>(T, kNoAction));
  auto greedy = [&](const std::vector<double>& v, std::vector<double>& next) {
    double delta = 0.0;
    for (StateIndex s = 0; s < S; ++s) {
      double val = 0.0;
      if (!mdp.is_terminal(s)) {
        for (ThetaIndex t = 0; t < T; ++t) {
          double best = -std::numeric_limits<double>::infinity();
          for (ActionIndex a : mdp.available(s)) {
            const double q = detail::q_state(mdp, mdp.principal_reward(), s, t, a, v, gamma);
            if (q > best + tol.tie) {
              best = q;
              dict[s][t] = a;
            }
          }
          val += mdp.prior(s, t) * best;
        }
      }
      delta = std::max(delta, std::abs(val - v[s]));
      next[s] = val;
    }
    return delta;
  };

  std::vector<double> v(S, 0.0), next(S, 0.0);
  bool converged = r_max == 0.0;
  std::size_t it = 0;
  for (; it < budget && !converged; ++it) {
    const double delta = greedy(v, next);
    v.swap(next);
    if (delta <= guaranteed) converged = true;
  }
  if (!converged) throw NonConvergence("full-control value iteration exhausted its budget");

  // Exact evaluation of the dictation, improved until no strict gain remains.
  greedy(v, next);
  ActionAdvice advice = dictation_advice(mdp, dict, tol);
  auto vp = detail::evaluate_obedient(mdp, advice, mdp.principal_reward(), gamma);
  for (int pass = 0; pass < 100; ++pass) {
    bool changed = false;
    for (StateIndex s = 0; s < S; ++s) {
      if (mdp.is_terminal(s)) continue;
      for (ThetaIndex t = 0; t < T; ++t) {
        const double cur = detail::q_state(mdp, mdp.principal_reward(), s, t, dict[s][t], vp, gamma);
        for (ActionIndex a : mdp.available(s)) {
          if (detail::q_state(mdp, mdp.principal_reward(), s, t, a, vp, gamma) > cur + tol.tie) {
            dict[s][t] = a;
            changed = true;
            break;
          }
        }
      }
    }
    if (!changed) break;
    advice = dictation_advice(mdp, dict, tol);
    vp = detail::evaluate_obedient(mdp, advice, mdp.principal_reward(), gamma);
  }

  SolveReport rep;
  rep.method = "full-control";
  rep.principal = detail::weighted(mdp, vp);
  rep.agent = detail::weighted(
      mdp, detail::evaluate_obedient(mdp, advice, mdp.agent_reward(), mdp.gamma_tilde()));
  rep.diagnostics.verified_payoff = rep.principal;
  rep.diagnostics.vi_iterations = it;
  rep.diagnostics.dictation = std::move(dict);
  rep.response = detail::obedient_policy(mdp);
  rep.diagnostics.wall_seconds = clock.seconds();
  return rep;
}

enum class AgentType { Myopic, FarSighted };

// No signals at all: the agent acts on its prior.
inline SolveReport nosig(const PersuasionMDP& mdp, AgentType type,
                         const Tolerances& tol = kDefaultTolerances) {
  detail::Stopwatch clock;
  std::vector<ActionIndex> policy(mdp.num_states(), kNoAction);
  if (type == AgentType::Myopic) {
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (ActionIndex a : mdp.available(s)) {
        const double r = expected_reward(mdp.agent_reward(), s, mdp.prior_row(s), a);
        if (r > best + tol.tie) {
          best = r;
          policy[s] = a;
        }
      }
    }
  } else {
    policy = nosig_value(mdp, tol).policy;
  }
  const auto advice = detail::dictate(mdp, policy);
  SolveReport rep;
  rep.method = type == AgentType::Myopic ? "nosig-myop" : "nosig-fs";
  rep.principal =
      detail::weighted(mdp, detail::evaluate_obedient(mdp, advice, mdp.principal_reward(), mdp.gamma()));
  rep.agent = detail::weighted(
      mdp, detail::evaluate_obedient(mdp, advice, mdp.agent_reward(), mdp.gamma_tilde()));
  rep.diagnostics.verified_payoff = rep.principal;
  rep.response = AgentPolicy(mdp.num_states(), 1);
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    if (policy[s] != kNoAction) rep.response.set(s, 0, policy[s]);
  rep.diagnostics.wall_seconds = clock.seconds();
  return rep;
}

}  // namespace persuasion
