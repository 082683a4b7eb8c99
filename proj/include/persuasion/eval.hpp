#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "persuasion/agent.hpp"
#include "persuasion/errors.hpp"
#include "persuasion/model.hpp"
#include "persuasion/random.hpp"

namespace persuasion {

using Strategy = std::variant<GeneralSignaling, ActionAdvice, ThreatStrategy>;

struct MonteCarloStats {
  double principal_sd = 0.0;
  double agent_sd = 0.0;
  std::size_t samples = 0;
  std::size_t horizon = 0;

  double principal_se() const { return samples ? principal_sd / std::sqrt(double(samples)) : 0.0; }
  double agent_se() const { return samples ? agent_sd / std::sqrt(double(samples)) : 0.0; }
};

// Principal payoff is gamma-discounted, agent payoff gamma~-discounted, both
// from z. For rollouts the payoffs are sample means and mc is set.
struct EvalResult {
  std::string method;
  double principal = 0.0;
  double agent = 0.0;
  std::optional<MonteCarloStats> mc;
};

inline MetaMDP build_meta_mdp(const PersuasionMDP& mdp, const Strategy& strategy) {
  return std::visit(
      [&](const auto& st) -> MetaMDP {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, ThreatStrategy>) return build_threat_meta_mdp(mdp, st);
        else return build_meta_mdp(mdp, st);
      },
      strategy);
}

// Meta-states reachable from the initial distribution when choice[m] is played.
inline std::vector<bool> reachable(const MetaMDP& meta, const std::vector<std::size_t>& choice) {
  std::vector<bool> seen(meta.size(), false);
  std::vector<std::size_t> stack;
  for (std::size_t m = 0; m < meta.size(); ++m) {
    if (meta.init[m] > 0.0) {
      seen[m] = true;
      stack.push_back(m);
    }
  }
  while (!stack.empty()) {
    const auto m = stack.back();
    stack.pop_back();
    if (meta.choices[m].empty()) continue;
    for (const auto& t : meta.choices[m][choice[m]].next) {
      if (t.prob > 0.0 && !seen[t.next]) {
        seen[t.next] = true;
        stack.push_back(t.next);
      }
    }
  }
  return seen;
}

// Translates an agent policy into per-meta-state choice indices. Meta-states
// where the policy is undefined get the first choice; that is only an error
// if they are reachable.
inline std::vector<std::size_t> policy_choices(const MetaMDP& meta, const AgentPolicy& policy) {
  std::vector<std::size_t> choice(meta.size(), 0);
  std::vector<bool> undefined(meta.size(), false);
  for (std::size_t m = 0; m < meta.size(); ++m) {
    const auto& cs = meta.choices[m];
    if (cs.empty()) continue;
    const auto& ms = meta.states[m];
    const ActionIndex a =
        ms.state < policy.num_states() && (ms.signal == kSilentSignal || ms.signal < policy.signal_count())
            ? policy.at(ms.state, ms.signal)
            : kNoAction;
    const auto it = std::find_if(cs.begin(), cs.end(), [&](const MetaChoice& c) { return c.action == a; });
    if (it == cs.end()) undefined[m] = true;
    else choice[m] = static_cast<std::size_t>(it - cs.begin());
  }
  const auto reach = reachable(meta, choice);
  for (std::size_t m = 0; m < meta.size(); ++m) {
    if (undefined[m] && reach[m]) {
      throw InvalidStrategy("agent policy has no valid action at reachable meta-state (state " +
                            std::to_string(meta.states[m].state) + ")");
    }
  }
  return choice;
}

// Exact payoffs of (strategy, policy): solves (I - d T) v = r over the induced
// chain on meta-states, once per player.
inline EvalResult exact_eval(const PersuasionMDP& mdp, const Strategy& strategy,
                             const AgentPolicy& policy, std::string method = {}) {
  const auto meta = build_meta_mdp(mdp, strategy);
  const auto choice = policy_choices(meta, policy);
  auto principal = [&](std::size_t m, const MetaChoice& c) {
    const auto& ms = meta.states[m];
    return expected_reward(mdp.principal_reward(), ms.state, ms.belief, c.action);
  };
  auto agent = [](std::size_t, const MetaChoice& c) { return c.reward; };
  const auto vp = evaluate_choices(meta, choice, mdp.gamma(), principal);
  const auto va = evaluate_choices(meta, choice, mdp.gamma_tilde(), agent);
  EvalResult out;
  out.method = std::move(method);
  for (std::size_t m = 0; m < meta.size(); ++m) {
    out.principal += meta.init[m] * vp[m];
    out.agent += meta.init[m] * va[m];
  }
  return out;
}

// Smallest H with gamma^H R_max / (1 - gamma) <= eps_tr, capped at 10^5.
// Uses the larger of the two discounts and the larger reward scale.
inline std::size_t default_horizon(const PersuasionMDP& mdp, double eps_tr = 1e-6) {
  const double d = std::max(mdp.gamma(), mdp.gamma_tilde());
  double r_max = 0.0;
  for (double r : mdp.principal_reward().data()) r_max = std::max(r_max, std::abs(r));
  for (double r : mdp.agent_reward().data()) r_max = std::max(r_max, std::abs(r));
  if (d <= 0.0 || r_max == 0.0) return 1;
  const double h = std::ceil(std::log(eps_tr * (1.0 - d) / r_max) / std::log(d));
  return static_cast<std::size_t>(std::clamp(h, 1.0, 1e5));
}

namespace detail {

template <typename Weight>
std::size_t sample(SplitMix64& rng, std::size_t n, Weight&& weight) {
  double u = rng.uniform();
  std::size_t last = n;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weight(i);
    if (w <= 0.0) continue;
    last = i;
    if (u < w) return i;
    u -= w;
  }
  return last;  // rounding slack lands on the last positive entry
}

}  // namespace detail

// Monte Carlo estimate of both payoffs by simulating theta draws, signals,
// the agent's actions and transitions for `horizon` steps. Under a threat
// strategy the first deviation silences the principal for the rest of the
// episode.
inline EvalResult rollout(const PersuasionMDP& mdp, const Strategy& strategy,
                          const AgentPolicy& policy, std::size_t horizon, std::size_t n_samples,
                          std::uint64_t seed, std::string method = {}) {
  if (horizon < 1) throw InvalidHorizon("rollout horizon must be at least 1");
  if (n_samples < 1) throw InvalidHorizon("rollout needs at least one sample");
  const bool threat = std::holds_alternative<ThreatStrategy>(strategy);
  const Array3* pi = nullptr;
  std::size_t signals = 0;
  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, GeneralSignaling>) {
          pi = &st.pi;
          signals = st.signal_count();
        } else if constexpr (std::is_same_v<T, ActionAdvice>) {
          pi = &st.table();
          signals = mdp.num_actions();
        } else {
          pi = &st.base.table();
          signals = mdp.num_actions();
        }
      },
      strategy);

  SplitMix64 rng(seed);
  // Welford running moments.
  double mean_p = 0.0, mean_a = 0.0, m2_p = 0.0, m2_a = 0.0;
  const auto& init = mdp.init_dist();
  for (std::size_t k = 0; k < n_samples; ++k) {
    StateIndex s = detail::sample(rng, mdp.num_states(), [&](std::size_t i) { return init[i]; });
    bool silent = false;
    double gp = 1.0, ga = 1.0, ret_p = 0.0, ret_a = 0.0;
    for (std::size_t t = 0; t < horizon && !mdp.is_terminal(s); ++t) {
      const ThetaIndex th =
          detail::sample(rng, mdp.num_thetas(), [&](std::size_t i) { return mdp.prior(s, i); });
      Signal g = kSilentSignal;
      if (!silent) g = detail::sample(rng, signals, [&](std::size_t i) { return (*pi)(s, th, i); });
      const ActionIndex a = policy.at(s, g);
      if (a == kNoAction || !mdp.is_available(s, a))
        throw InvalidStrategy("agent policy has no valid action at a visited meta-state");
      ret_p += gp * mdp.principal_reward()(s, th, a);
      ret_a += ga * mdp.agent_reward()(s, th, a);
      gp *= mdp.gamma();
      ga *= mdp.gamma_tilde();
      if (threat && !silent && a != g) silent = true;
      s = detail::sample(rng, mdp.num_states(), [&](std::size_t i) { return mdp.transition(s, a, i); });
    }
    const double kk = static_cast<double>(k + 1);
    const double dp = ret_p - mean_p, da = ret_a - mean_a;
    mean_p += dp / kk;
    mean_a += da / kk;
    m2_p += dp * (ret_p - mean_p);
    m2_a += da * (ret_a - mean_a);
  }
  const double n = static_cast<double>(n_samples);
  EvalResult out;
  out.method = std::move(method);
  out.principal = mean_p;
  out.agent = mean_a;
  MonteCarloStats mc;
  mc.samples = n_samples;
  mc.horizon = horizon;
  if (n_samples > 1) {
    mc.principal_sd = std::sqrt(m2_p / (n - 1));
    mc.agent_sd = std::sqrt(m2_a / (n - 1));
  }
  out.mc = mc;
  return out;
}

}  // namespace persuasion
