#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "persuasion/errors.hpp"
#include "persuasion/model.hpp"
#include "persuasion/tolerances.hpp"

namespace persuasion {

struct MetaState {
  StateIndex state = 0;
  Signal signal = kSilentSignal;
  // Action recommended by the signal; kNoAction for g_0 and general signals.
  ActionIndex advised = kNoAction;
  // Agent's belief over theta at this meta-state.
  Posterior belief;
};

struct MetaTransition {
  std::size_t next = 0;
  double prob = 0.0;
};

struct MetaChoice {
  ActionIndex action = 0;
  double reward = 0.0;  // agent reward at this meta-state for this action
  std::vector<MetaTransition> next;
};

// The agent's decision problem once the principal has committed to a
// strategy: a finite MDP over meta-states (state, last signal). Meta-states of
// terminal states have no choices and value 0.
struct MetaMDP {
  std::vector<MetaState> states;
  std::vector<std::vector<MetaChoice>> choices;  // per meta-state, ordered by action
  std::vector<double> init;                      // distribution over meta-states
  double discount = 0.0;
  std::size_t signal_count = 0;  // G, excluding the silent signal
  std::size_t num_mdp_states = 0;

  std::size_t size() const noexcept { return states.size(); }

  std::optional<std::size_t> find(StateIndex s, Signal g) const {
    for (const auto& [sig, idx] : by_state[s])
      if (sig == g) return idx;
    return std::nullopt;
  }

  std::vector<std::vector<std::pair<Signal, std::size_t>>> by_state;

  std::size_t add_state(MetaState m) {
    by_state[m.state].emplace_back(m.signal, states.size());
    states.push_back(std::move(m));
    choices.emplace_back();
    return states.size() - 1;
  }
};

namespace detail {

// Meta-states reached when the environment enters s: (meta index, probability).
using Entry = std::vector<MetaTransition>;

inline std::vector<Entry> add_signal_states(MetaMDP& meta, const PersuasionMDP& mdp,
                                            const GeneralSignaling& strategy, bool advice) {
  std::vector<Entry> entry(mdp.num_states());
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) {
      const auto idx = meta.add_state(MetaState{s, kSilentSignal, kNoAction,
                                                Posterior(mdp.prior_row(s).begin(),
                                                          mdp.prior_row(s).end())});
      entry[s].push_back({idx, 1.0});
      continue;
    }
    for (Signal g = 0; g < strategy.signal_count(); ++g) {
      const double m = signal_marginal(mdp, strategy, s, g);
      if (!(m > 0.0)) continue;
      const auto idx = meta.add_state(
          MetaState{s, g, advice ? g : kNoAction, posterior(mdp, strategy, s, g)});
      entry[s].push_back({idx, m});
    }
  }
  return entry;
}

inline std::vector<MetaTransition> successors(const PersuasionMDP& mdp, StateIndex s,
                                              ActionIndex a, const std::vector<Entry>& entry) {
  std::vector<MetaTransition> out;
  for (StateIndex n = 0; n < mdp.num_states(); ++n) {
    const double p = mdp.transition(s, a, n);
    if (p == 0.0) continue;
    for (const auto& e : entry[n]) out.push_back({e.next, p * e.prob});
  }
  return out;
}

inline std::vector<double> initial(const PersuasionMDP& mdp, std::size_t size,
                                   const std::vector<Entry>& entry) {
  std::vector<double> init(size, 0.0);
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    for (const auto& e : entry[s]) init[e.next] += mdp.init_dist()[s] * e.prob;
  return init;
}

inline MetaMDP build_meta(const PersuasionMDP& mdp, const GeneralSignaling& strategy,
                          bool advice) {
  MetaMDP meta;
  meta.discount = mdp.gamma_tilde();
  meta.signal_count = strategy.signal_count();
  meta.num_mdp_states = mdp.num_states();
  meta.by_state.resize(mdp.num_states());
  const auto entry = add_signal_states(meta, mdp, strategy, advice);
  for (std::size_t m = 0; m < meta.size(); ++m) {
    const auto& ms = meta.states[m];
    for (ActionIndex a : mdp.available(ms.state)) {
      meta.choices[m].push_back(MetaChoice{a, expected_reward(mdp.agent_reward(), ms.state, ms.belief, a),
                                           successors(mdp, ms.state, a, entry)});
    }
  }
  meta.init = initial(mdp, meta.size(), entry);
  return meta;
}

}  // namespace detail

// Meta-MDP induced by a committed Markovian strategy. Signals that are never
// sent in a state produce no meta-state there.
inline MetaMDP build_meta_mdp(const PersuasionMDP& mdp, const GeneralSignaling& strategy) {
  return detail::build_meta(mdp, strategy, false);
}

// Same, for an action advice: meta-state (s, g_a) records a as its advised
// action, which wins value ties when the meta-MDP is solved.
inline MetaMDP build_meta_mdp(const PersuasionMDP& mdp, const ActionAdvice& advice) {
  return detail::build_meta(mdp, to_signaling(mdp, advice), true);
}

// Meta-MDP faced by a far-sighted agent under a threat strategy. Meta-states
// are S x (G_A + {g_0}). Obeying at (s, g_a) moves exactly as under the base
// advice; any other action b at (s, g_a) leads to (s', g_0) with probability
// P(s, b, s'); from (s, g_0) play continues silently forever.
inline MetaMDP build_threat_meta_mdp(const PersuasionMDP& mdp, const ThreatStrategy& threat) {
  MetaMDP meta;
  meta.discount = mdp.gamma_tilde();
  meta.signal_count = mdp.num_actions();
  meta.num_mdp_states = mdp.num_states();
  meta.by_state.resize(mdp.num_states());
  const auto advised_entry =
      detail::add_signal_states(meta, mdp, to_signaling(mdp, threat.base), true);

  std::vector<detail::Entry> silent_entry(mdp.num_states());
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) {
      silent_entry[s] = advised_entry[s];
      continue;
    }
    const auto idx = meta.add_state(MetaState{
        s, kSilentSignal, kNoAction, Posterior(mdp.prior_row(s).begin(), mdp.prior_row(s).end())});
    silent_entry[s].push_back({idx, 1.0});
  }

  for (std::size_t m = 0; m < meta.size(); ++m) {
    const auto& ms = meta.states[m];
    for (ActionIndex a : mdp.available(ms.state)) {
      const bool obey = ms.signal != kSilentSignal && a == ms.advised;
      meta.choices[m].push_back(MetaChoice{
          a, expected_reward(mdp.agent_reward(), ms.state, ms.belief, a),
          detail::successors(mdp, ms.state, a, obey ? advised_entry : silent_entry)});
    }
  }
  meta.init = detail::initial(mdp, meta.size(), advised_entry);
  return meta;
}

// Values of a fixed deterministic policy, choice[m] being an index into
// meta.choices[m]: solves (I - discount * T) v = r exactly.
template <typename RewardFn>
std::vector<double> evaluate_choices(const MetaMDP& meta, const std::vector<std::size_t>& choice,
                                     double discount, RewardFn&& reward) {
  const auto n = static_cast<Eigen::Index>(meta.size());
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (std::size_t m = 0; m < meta.size(); ++m) {
    if (meta.choices[m].empty()) continue;
    const auto& c = meta.choices[m][choice[m]];
    rhs(static_cast<Eigen::Index>(m)) = reward(m, c);
    for (const auto& t : c.next)
      system(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t.next)) -= discount * t.prob;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::VectorXd v = lu.solve(rhs);
  if (!v.allFinite()) throw SingularSystem("policy evaluation system is singular");
  return {v.data(), v.data() + v.size()};
}

struct BestResponse {
  std::vector<double> value;        // per meta-state
  std::vector<std::size_t> choice;  // per meta-state, index into meta.choices
  AgentPolicy policy;
  std::size_t iterations = 0;
};

namespace detail {

inline double q_value(const MetaMDP& meta, const MetaChoice& c, const std::vector<double>& v) {
  double q = c.reward;
  for (const auto& t : c.next) q += meta.discount * t.prob * v[t.next];
  return q;
}

// Greedy choice: the advised action if it is within `tie` of the best Q-value,
// else the lowest-indexed action within `tie` of the best.
inline std::size_t greedy_choice(const MetaMDP& meta, std::size_t m, const std::vector<double>& v,
                                 double tie) {
  const auto& cs = meta.choices[m];
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> q(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    q[i] = q_value(meta, cs[i], v);
    best = std::max(best, q[i]);
  }
  const ActionIndex advised = meta.states[m].advised;
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (cs[i].action == advised && q[i] >= best - tie) return i;
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (q[i] >= best - tie) return i;
  return 0;
}

inline double max_abs_reward(const MetaMDP& meta) {
  double r = 0.0;
  for (const auto& cs : meta.choices)
    for (const auto& c : cs) r = std::max(r, std::abs(c.reward));
  return r;
}

}  // namespace detail

// Sup-norm Bellman residual of v on the meta-MDP.
inline double bellman_residual(const MetaMDP& meta, const std::vector<double>& v) {
  double res = 0.0;
  for (std::size_t m = 0; m < meta.size(); ++m) {
    if (meta.choices[m].empty()) {
      res = std::max(res, std::abs(v[m]));
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : meta.choices[m]) best = std::max(best, detail::q_value(meta, c, v));
    res = std::max(res, std::abs(best - v[m]));
  }
  return res;
}

// Optimal agent policy on a meta-MDP. Value iteration runs within the budget
// 10 * log(eps (1 - d) / R_max) / log(d) (capped at 10^6 sweeps); the greedy
// policy is then evaluated exactly and improved until stable, so returned
// values are those of the returned policy. Ties go to the advised action,
// then to the lowest action index.
inline BestResponse solve_mdp(const MetaMDP& meta, const Tolerances& tol = kDefaultTolerances) {
  const double d = meta.discount;
  if (!(d >= 0.0 && d < 1.0)) throw NonConvergence("discount must lie in [0, 1)");
  const double r_max = detail::max_abs_reward(meta);
  const double eps = tol.value_iteration;

  std::size_t budget = 2;
  if (d > 0.0 && r_max > 0.0) {
    const double raw = 10.0 * std::log(eps * (1.0 - d) / r_max) / std::log(d);
    budget = static_cast<std::size_t>(std::clamp(std::ceil(raw), 2.0, 1e6));
  }

  // Stop once the iterate is provably within eps of the fixed point, but keep
  // going while the budget lasts to tighten it further.
  const double guaranteed = d > 0.0 ? eps * (1.0 - d) / d : 0.0;
  const double target = guaranteed * 1e-3;
  std::vector<double> v(meta.size(), 0.0), next(meta.size(), 0.0);
  BestResponse out;
  bool converged = r_max == 0.0;
  double delta = 0.0;
  for (std::size_t it = 0; it < budget && !(converged && delta <= target); ++it) {
    delta = 0.0;
    for (std::size_t m = 0; m < meta.size(); ++m) {
      double best = 0.0;
      if (!meta.choices[m].empty()) {
        best = -std::numeric_limits<double>::infinity();
        for (const auto& c : meta.choices[m]) best = std::max(best, detail::q_value(meta, c, v));
      }
      delta = std::max(delta, std::abs(best - v[m]));
      next[m] = best;
    }
    v.swap(next);
    ++out.iterations;
    if (delta <= guaranteed) converged = true;
  }
  if (!converged) {
    throw NonConvergence("value iteration did not converge within " + std::to_string(budget) +
                         " sweeps");
  }

  auto agent_reward = [](std::size_t, const MetaChoice& c) { return c.reward; };
  out.choice.assign(meta.size(), 0);
  for (std::size_t m = 0; m < meta.size(); ++m)
    if (!meta.choices[m].empty()) out.choice[m] = detail::greedy_choice(meta, m, v, tol.tie);
  out.value = evaluate_choices(meta, out.choice, d, agent_reward);

  // Policy improvement from the exact values; switches only on strict gains.
  for (int pass = 0; pass < 100; ++pass) {
    bool changed = false;
    for (std::size_t m = 0; m < meta.size(); ++m) {
      if (meta.choices[m].empty()) continue;
      const double current = detail::q_value(meta, meta.choices[m][out.choice[m]], out.value);
      const auto candidate = detail::greedy_choice(meta, m, out.value, tol.tie);
      if (detail::q_value(meta, meta.choices[m][candidate], out.value) > current + tol.tie) {
        out.choice[m] = candidate;
        changed = true;
      }
    }
    if (!changed) break;
    out.value = evaluate_choices(meta, out.choice, d, agent_reward);
  }

  out.policy = AgentPolicy(meta.num_mdp_states, meta.signal_count);
  for (std::size_t m = 0; m < meta.size(); ++m) {
    if (meta.choices[m].empty()) continue;
    out.policy.set(meta.states[m].state, meta.states[m].signal,
                   meta.choices[m][out.choice[m]].action);
  }
  return out;
}

// Best response of a myopic agent to an action advice under `reward`. Uses
// the same unnormalized comparison as is_ic, so the response is obedient
// exactly where the advice is IC.
inline AgentPolicy myopic_response(const PersuasionMDP& mdp, const ActionAdvice& advice,
                                   const RewardTable& reward,
                                   const Tolerances& tol = kDefaultTolerances) {
  AgentPolicy policy(mdp.num_states(), mdp.num_actions());
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    for (ActionIndex a : mdp.available(s)) {
      double mass = 0.0;
      for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) mass += mdp.prior(s, t) * advice(s, t, a);
      if (!(mass > 0.0)) continue;
      auto weighted = [&](ActionIndex b) {
        double r = 0.0;
        for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t)
          r += mdp.prior(s, t) * advice(s, t, a) * reward(s, t, b);
        return r;
      };
      ActionIndex best = kNoAction;
      double best_value = -std::numeric_limits<double>::infinity();
      for (ActionIndex b : mdp.available(s)) {
        const double v = weighted(b);
        if (v > best_value) {
          best = b;
          best_value = v;
        }
      }
      policy.set(s, a, best_value - weighted(a) > tol.ic ? best : a);
    }
  }
  return policy;
}

inline AgentPolicy myopic_response(const PersuasionMDP& mdp, const ActionAdvice& advice,
                                   const Tolerances& tol = kDefaultTolerances) {
  return myopic_response(mdp, advice, mdp.agent_reward(), tol);
}

// Myopic response to a general strategy: per sent signal, the action with the
// highest posterior expected reward, lowest index on ties.
inline AgentPolicy myopic_response(const PersuasionMDP& mdp, const GeneralSignaling& strategy,
                                   const RewardTable& reward,
                                   const Tolerances& tol = kDefaultTolerances) {
  AgentPolicy policy(mdp.num_states(), strategy.signal_count());
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    for (Signal g = 0; g < strategy.signal_count(); ++g) {
      if (mdp.is_terminal(s) || !(signal_marginal(mdp, strategy, s, g) > 0.0)) continue;
      const auto belief = posterior(mdp, strategy, s, g);
      ActionIndex best = kNoAction;
      double best_value = -std::numeric_limits<double>::infinity();
      for (ActionIndex b : mdp.available(s)) {
        const double v = expected_reward(reward, s, belief, b);
        if (v > best_value + tol.tie) {
          best = b;
          best_value = v;
        }
      }
      policy.set(s, g, best);
    }
  }
  return policy;
}

// Agent's optimal value and policy when no information is ever revealed,
// indexed by state.
struct NoSigValue {
  std::vector<double> value;
  std::vector<ActionIndex> policy;  // kNoAction at terminal states
};

inline NoSigValue nosig_value(const PersuasionMDP& mdp, const Tolerances& tol = kDefaultTolerances) {
  const auto meta = build_meta_mdp(mdp, uninformative(mdp));
  const auto br = solve_mdp(meta, tol);
  NoSigValue out{std::vector<double>(mdp.num_states(), 0.0),
                 std::vector<ActionIndex>(mdp.num_states(), kNoAction)};
  for (std::size_t m = 0; m < meta.size(); ++m) {
    const StateIndex s = meta.states[m].state;
    out.value[s] = br.value[m];
    if (!meta.choices[m].empty()) out.policy[s] = meta.choices[m][br.choice[m]].action;
  }
  return out;
}

// Reward of the myopic agent equivalent to an advice-myopic one:
//   R+(s, theta, a) = R~(s, theta, a) + gamma~ * E_{s' ~ P(s,a,.)} Vbar(s').
inline RewardTable am_rewards(const PersuasionMDP& mdp, const NoSigValue& nosig) {
  RewardTable out = mdp.agent_reward();
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    for (ActionIndex a : mdp.available(s)) {
      double future = 0.0;
      for (StateIndex n = 0; n < mdp.num_states(); ++n)
        future += mdp.transition(s, a, n) * nosig.value[n];
      for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t)
        out(s, t, a) += mdp.gamma_tilde() * future;
    }
  }
  return out;
}

inline RewardTable am_rewards(const PersuasionMDP& mdp, const Tolerances& tol = kDefaultTolerances) {
  return am_rewards(mdp, nosig_value(mdp, tol));
}

}  // namespace persuasion
