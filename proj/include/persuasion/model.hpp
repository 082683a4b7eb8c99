#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "persuasion/errors.hpp"
#include "persuasion/tensor.hpp"
#include "persuasion/tolerances.hpp"

namespace persuasion {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;
using ThetaIndex = std::size_t;
using Signal = std::size_t;

// The signal g_0 sent by the uninformative fallback of a threat strategy. It
// also labels the single meta-state of a terminal state.
inline constexpr Signal kSilentSignal = std::numeric_limits<Signal>::max();
inline constexpr ActionIndex kNoAction = std::numeric_limits<ActionIndex>::max();

// Reward indexed [state][theta][action].
using RewardTable = Array3;

// Raw fields of a persuasion MDP. PersuasionMDP validates and normalizes them.
struct MdpData {
  std::vector<std::string> state_names;
  std::vector<bool> terminal;
  std::vector<std::string> action_names;
  std::vector<std::string> theta_names;
  std::vector<std::vector<ActionIndex>> available;  // A_s per state
  Array3 transition;                                // [s][a][s']
  Array2 prior;                                     // [s][theta]
  RewardTable principal_reward;                     // [s][theta][a]
  RewardTable agent_reward;                         // [s][theta][a]
  double gamma = 0.0;
  double gamma_tilde = 0.0;
  std::vector<double> init_dist;
};

namespace detail {

inline std::string pointer(std::initializer_list<std::string> parts) {
  std::string out;
  for (const auto& p : parts) out += "/" + p;
  return out;
}

inline void check_distribution(std::span<const double> row, double tol,
                               const std::string& what, const std::string& path) {
  double sum = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!std::isfinite(row[i]) || row[i] < 0.0) {
      throw InvariantViolation(what + ": entry " + std::to_string(i) +
                                   " is negative or not finite",
                               path + "/" + std::to_string(i));
    }
    sum += row[i];
  }
  if (std::abs(sum - 1.0) > tol) {
    throw InvariantViolation(what + ": sums to " + std::to_string(sum) +
                                 " instead of 1",
                             path);
  }
}

}  // namespace detail

// An MDP with a principal and an agent whose rewards depend on an external
// parameter theta drawn from a per-state prior each step.
//
// Construction enforces: every kernel row, prior and z is a distribution;
// terminal states have no actions, loop onto themselves and pay nothing;
// non-terminal states have a nonempty sorted set of available actions, and
// rows/rewards of unavailable actions are zeroed.
class PersuasionMDP {
 public:
  explicit PersuasionMDP(MdpData data, const Tolerances& tol = kDefaultTolerances)
      : d_(std::move(data)) {
    validate(tol);
  }

  const MdpData& data() const noexcept { return d_; }

  std::size_t num_states() const noexcept { return d_.state_names.size(); }
  std::size_t num_actions() const noexcept { return d_.action_names.size(); }
  std::size_t num_thetas() const noexcept { return d_.theta_names.size(); }

  bool is_terminal(StateIndex s) const { return d_.terminal[s]; }
  const std::vector<ActionIndex>& available(StateIndex s) const { return d_.available[s]; }
  bool is_available(StateIndex s, ActionIndex a) const {
    const auto& av = d_.available[s];
    return std::binary_search(av.begin(), av.end(), a);
  }

  double transition(StateIndex s, ActionIndex a, StateIndex next) const {
    return d_.transition(s, a, next);
  }
  double prior(StateIndex s, ThetaIndex t) const { return d_.prior(s, t); }
  std::span<const double> prior_row(StateIndex s) const { return d_.prior.row(s); }
  const RewardTable& principal_reward() const noexcept { return d_.principal_reward; }
  const RewardTable& agent_reward() const noexcept { return d_.agent_reward; }
  double gamma() const noexcept { return d_.gamma; }
  double gamma_tilde() const noexcept { return d_.gamma_tilde; }
  const std::vector<double>& init_dist() const noexcept { return d_.init_dist; }

  friend bool operator==(const PersuasionMDP& a, const PersuasionMDP& b) {
    const auto& x = a.d_;
    const auto& y = b.d_;
    return x.state_names == y.state_names && x.terminal == y.terminal &&
           x.action_names == y.action_names && x.theta_names == y.theta_names &&
           x.available == y.available && x.transition == y.transition &&
           x.prior == y.prior && x.principal_reward == y.principal_reward &&
           x.agent_reward == y.agent_reward && x.gamma == y.gamma &&
           x.gamma_tilde == y.gamma_tilde && x.init_dist == y.init_dist;
  }

 private:
  void validate(const Tolerances& tol) {
    const std::size_t S = d_.state_names.size();
    const std::size_t A = d_.action_names.size();
    const std::size_t T = d_.theta_names.size();
    using detail::pointer;
    if (S == 0) throw InvariantViolation("at least one state is required", "/states");
    if (A == 0) throw InvariantViolation("at least one action is required", "/actions");
    if (T == 0) throw InvariantViolation("at least one theta is required", "/thetas");
    if (d_.terminal.size() != S)
      throw InvariantViolation("terminal flags do not match the state count", "/states");
    if (d_.available.size() != S)
      throw InvariantViolation("available_actions must list every state", "/available_actions");
    if (d_.transition.dim0() != S || d_.transition.dim1() != A || d_.transition.dim2() != S)
      throw InvariantViolation("transition must have shape [S][A][S]", "/transition");
    if (d_.prior.rows() != S || d_.prior.cols() != T)
      throw InvariantViolation("prior must have shape [S][Theta]", "/prior");
    for (const auto* r : {&d_.principal_reward, &d_.agent_reward}) {
      if (r->dim0() != S || r->dim1() != T || r->dim2() != A) {
        throw InvariantViolation(
            "reward tables must have shape [S][Theta][A]",
            r == &d_.principal_reward ? "/principal_reward" : "/agent_reward");
      }
    }
    if (d_.init_dist.size() != S)
      throw InvariantViolation("init_dist must have one entry per state", "/init_dist");
    for (double g : {d_.gamma, d_.gamma_tilde}) {
      if (!(g >= 0.0 && g < 1.0)) {
        throw InvariantViolation("discount factors must lie in [0, 1)",
                                 g == d_.gamma ? "/gamma" : "/gamma_tilde");
      }
    }

    for (StateIndex s = 0; s < S; ++s) {
      const std::string ss = std::to_string(s);
      auto& av = d_.available[s];
      if (d_.terminal[s]) {
        av.clear();
        for (ActionIndex a = 0; a < A; ++a) {
          for (StateIndex n = 0; n < S; ++n) d_.transition(s, a, n) = (n == s) ? 1.0 : 0.0;
          for (ThetaIndex t = 0; t < T; ++t) {
            d_.principal_reward(s, t, a) = 0.0;
            d_.agent_reward(s, t, a) = 0.0;
          }
        }
      } else {
        std::sort(av.begin(), av.end());
        av.erase(std::unique(av.begin(), av.end()), av.end());
        if (av.empty())
          throw InvariantViolation("non-terminal state " + ss + " has no available action",
                                   pointer({"available_actions", ss}));
        if (av.back() >= A)
          throw InvariantViolation("state " + ss + " lists an unknown action",
                                   pointer({"available_actions", ss}));
        for (ActionIndex a = 0; a < A; ++a) {
          const bool on = std::binary_search(av.begin(), av.end(), a);
          if (on) {
            detail::check_distribution(d_.transition.row(s, a), tol.probability_sum,
                                       "transition row P(" + ss + "," + std::to_string(a) + ",.)",
                                       pointer({"transition", ss, std::to_string(a)}));
          } else {
            for (StateIndex n = 0; n < S; ++n) d_.transition(s, a, n) = 0.0;
          }
          for (ThetaIndex t = 0; t < T; ++t) {
            for (auto* r : {&d_.principal_reward, &d_.agent_reward}) {
              double& v = (*r)(s, t, a);
              if (!on) v = 0.0;
              if (!std::isfinite(v)) {
                throw InvariantViolation(
                    "reward is not finite",
                    pointer({r == &d_.principal_reward ? "principal_reward" : "agent_reward",
                             ss, std::to_string(t), std::to_string(a)}));
              }
            }
          }
        }
      }
      detail::check_distribution(d_.prior.row(s), tol.probability_sum,
                                 "prior of state " + ss, pointer({"prior", ss}));
    }
    detail::check_distribution(d_.init_dist, tol.probability_sum, "init_dist", "/init_dist");
  }

  MdpData d_;
};

// Markovian signaling strategy over a finite signal set: pi[s][theta][g].
struct GeneralSignaling {
  std::vector<std::string> labels;
  Array3 pi;

  std::size_t signal_count() const noexcept { return labels.size(); }
  double operator()(StateIndex s, ThetaIndex t, Signal g) const { return pi(s, t, g); }
};

// Action advice: signal g_a recommends action a. pi[s][theta][a]; rows of
// terminal states are all zero.
class ActionAdvice {
 public:
  ActionAdvice() = default;

  ActionAdvice(const PersuasionMDP& mdp, Array3 pi, const Tolerances& tol = kDefaultTolerances)
      : pi_(std::move(pi)) {
    if (pi_.dim0() != mdp.num_states() || pi_.dim1() != mdp.num_thetas() ||
        pi_.dim2() != mdp.num_actions()) {
      throw InvalidStrategy("action advice must have shape [S][Theta][A]");
    }
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
      for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) {
        double sum = 0.0;
        for (ActionIndex a = 0; a < mdp.num_actions(); ++a) {
          const double p = pi_(s, t, a);
          if (!std::isfinite(p) || p < 0.0)
            throw InvalidStrategy("advice probability is negative or not finite");
          if (p > 0.0 && !mdp.is_available(s, a)) {
            throw InvalidStrategy("advice at state " + std::to_string(s) +
                                  " recommends unavailable action " + std::to_string(a));
          }
          sum += p;
        }
        const double expected = mdp.is_terminal(s) ? 0.0 : 1.0;
        if (std::abs(sum - expected) > tol.probability_sum) {
          throw InvalidStrategy("advice row (" + std::to_string(s) + "," + std::to_string(t) +
                                ") sums to " + std::to_string(sum));
        }
      }
    }
  }

  double operator()(StateIndex s, ThetaIndex t, ActionIndex a) const { return pi_(s, t, a); }
  const Array3& table() const noexcept { return pi_; }

  friend bool operator==(const ActionAdvice&, const ActionAdvice&) = default;

 private:
  Array3 pi_;
};

// One-memory strategy: play base advice while the agent obeys, fall silent
// (uninformative g_0) forever after the first deviation.
struct ThreatStrategy {
  ActionAdvice base;
};

using Posterior = std::vector<double>;

// Deterministic agent policy over meta-states (s, g). Signals 0..G-1 plus the
// silent signal, which occupies the last slot.
class AgentPolicy {
 public:
  AgentPolicy() = default;
  AgentPolicy(std::size_t num_states, std::size_t signal_count)
      : signals_(signal_count), actions_(num_states * (signal_count + 1), kNoAction) {}

  std::size_t signal_count() const noexcept { return signals_; }
  std::size_t num_states() const noexcept {
    return actions_.empty() ? 0 : actions_.size() / (signals_ + 1);
  }

  void set(StateIndex s, Signal g, ActionIndex a) { actions_[slot(s, g)] = a; }
  // kNoAction when the meta-state has no prescribed action.
  ActionIndex at(StateIndex s, Signal g) const { return actions_[slot(s, g)]; }

  friend bool operator==(const AgentPolicy&, const AgentPolicy&) = default;

 private:
  std::size_t slot(StateIndex s, Signal g) const {
    return s * (signals_ + 1) + (g == kSilentSignal ? signals_ : g);
  }

  std::size_t signals_ = 0;
  std::vector<ActionIndex> actions_;
};

// Views an action advice as a general strategy with one signal per action.
inline GeneralSignaling to_signaling(const PersuasionMDP& mdp, const ActionAdvice& advice) {
  return GeneralSignaling{mdp.data().action_names, advice.table()};
}

// Probability that signal g is sent in state s: sum_theta mu_s(theta) pi_s(theta, g).
inline double signal_marginal(const PersuasionMDP& mdp, const GeneralSignaling& strategy,
                              StateIndex s, Signal g) {
  double m = 0.0;
  for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) m += mdp.prior(s, t) * strategy(s, t, g);
  return m;
}

// Bayesian posterior over theta after observing g in state s.
inline Posterior posterior(const PersuasionMDP& mdp, const GeneralSignaling& strategy,
                           StateIndex s, Signal g) {
  const double m = signal_marginal(mdp, strategy, s, g);
  if (!(m > 0.0)) {
    throw ZeroProbabilitySignal("signal " + std::to_string(g) + " has zero probability in state " +
                                std::to_string(s));
  }
  Posterior out(mdp.num_thetas());
  for (ThetaIndex t = 0; t < out.size(); ++t) out[t] = mdp.prior(s, t) * strategy(s, t, g) / m;
  return out;
}

inline Posterior posterior(const PersuasionMDP& mdp, const ActionAdvice& advice, StateIndex s,
                           ActionIndex advised) {
  return posterior(mdp, to_signaling(mdp, advice), s, advised);
}

// phi_s(theta, a) = mu_s(theta) * pi_s(theta, g_a), indexed [theta][a].
inline Array2 joint_distribution(const PersuasionMDP& mdp, const ActionAdvice& advice,
                                 StateIndex s) {
  Array2 phi(mdp.num_thetas(), mdp.num_actions());
  for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t)
    for (ActionIndex a = 0; a < mdp.num_actions(); ++a) phi(t, a) = mdp.prior(s, t) * advice(s, t, a);
  return phi;
}

inline double expected_reward(const RewardTable& reward, StateIndex s,
                              std::span<const double> belief, ActionIndex a) {
  double r = 0.0;
  for (ThetaIndex t = 0; t < belief.size(); ++t) r += belief[t] * reward(s, t, a);
  return r;
}

struct IcReport {
  bool ic = true;
  double max_violation = 0.0;
};

// Checks obedience in the unnormalized form
//   sum_theta mu_s(theta) pi_s(theta, g_a) (r(s,theta,a) - r(s,theta,b)) >= -tol
// for every state, every advised a and every alternative b in A_s.
inline IcReport is_ic(const PersuasionMDP& mdp, const ActionAdvice& advice,
                      const RewardTable& reward, const Tolerances& tol = kDefaultTolerances) {
  IcReport rep;
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    for (ActionIndex a : mdp.available(s)) {
      for (ActionIndex b : mdp.available(s)) {
        if (a == b) continue;
        double gain = 0.0;
        for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t)
          gain += mdp.prior(s, t) * advice(s, t, a) * (reward(s, t, a) - reward(s, t, b));
        rep.max_violation = std::max(rep.max_violation, -gain);
      }
    }
  }
  rep.ic = rep.max_violation <= tol.ic;
  return rep;
}

// Always sends g_theta: a point mass on the realized parameter.
inline GeneralSignaling reveal_all(const PersuasionMDP& mdp) {
  const std::size_t T = mdp.num_thetas();
  GeneralSignaling out{mdp.data().theta_names, Array3(mdp.num_states(), T, T)};
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    for (ThetaIndex t = 0; t < T; ++t) out.pi(s, t, t) = 1.0;
  return out;
}

// Always sends the single signal g_0.
inline GeneralSignaling uninformative(const PersuasionMDP& mdp) {
  GeneralSignaling out{{"g0"}, Array3(mdp.num_states(), mdp.num_thetas(), 1, 1.0)};
  return out;
}

// Merges all signals that the response maps to the same action:
//   pi*_s(theta, g_a) = sum_{g : response(s, g) = a} pi_s(theta, g).
// Signals without a prescribed action carry no prior mass and are folded
// into the lowest available action.
inline ActionAdvice revelation_transform(const PersuasionMDP& mdp, const GeneralSignaling& strategy,
                                         const AgentPolicy& response) {
  Array3 pi(mdp.num_states(), mdp.num_thetas(), mdp.num_actions());
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    for (Signal g = 0; g < strategy.signal_count(); ++g) {
      ActionIndex a = response.at(s, g);
      if (a == kNoAction || !mdp.is_available(s, a)) {
        if (signal_marginal(mdp, strategy, s, g) > 0.0)
          throw InvalidStrategy("response is undefined at a reachable signal of state " +
                                std::to_string(s));
        a = mdp.available(s).front();
      }
      for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) pi(s, t, a) += strategy(s, t, g);
    }
  }
  return ActionAdvice(mdp, std::move(pi));
}

}  // namespace persuasion
