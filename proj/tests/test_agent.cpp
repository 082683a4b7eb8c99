#include <gtest/gtest.h>

#include <map>
#include <random>

#include "oracles.hpp"

using namespace persuasion;

namespace {

constexpr ActionIndex kA = 0, kB = 1, kC = 2;

const MetaChoice& choice_for(const MetaMDP& meta, std::size_t m, ActionIndex a) {
  for (const auto& c : meta.choices[m])
    if (c.action == a) return c;
  throw std::logic_error("action not offered");
}

std::map<std::pair<StateIndex, Signal>, double> landing(const MetaMDP& meta, const MetaChoice& c) {
  std::map<std::pair<StateIndex, Signal>, double> out;
  for (const auto& t : c.next) out[{meta.states[t.next].state, meta.states[t.next].signal}] += t.prob;
  return out;
}

PersuasionMDP with_discounts(const PersuasionMDP& mdp, double gamma, double gamma_tilde) {
  auto d = mdp.data();
  d.gamma = gamma;
  d.gamma_tilde = gamma_tilde;
  return PersuasionMDP(std::move(d));
}

ActionAdvice random_advice(const PersuasionMDP& mdp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Array3 pi(mdp.num_states(), mdp.num_thetas(), mdp.num_actions());
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) {
      double sum = 0.0;
      for (ActionIndex a : mdp.available(s)) sum += pi(s, t, a) = u(rng);
      for (ActionIndex a : mdp.available(s)) pi(s, t, a) /= sum;
    }
  }
  return ActionAdvice(mdp, std::move(pi));
}

bool obeys(const PersuasionMDP& mdp, const ActionAdvice& advice, const AgentPolicy& policy) {
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    for (ActionIndex a : mdp.available(s)) {
      double m = 0.0;
      for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) m += mdp.prior(s, t) * advice(s, t, a);
      if (m > 0.0 && policy.at(s, a) != a) return false;
    }
  return true;
}

}  // namespace

TEST(MetaMdp, UninformativeMatchesPriorAveragedMdp) {
  const auto mdp = oracle::medium_instance(1);
  const auto meta = build_meta_mdp(mdp, uninformative(mdp));
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    const auto m = *meta.find(s, 0);
    for (ActionIndex a : mdp.available(s)) {
      const auto& c = choice_for(meta, m, a);
      EXPECT_NEAR(c.reward, expected_reward(mdp.agent_reward(), s, mdp.prior_row(s), a), 1e-15);
      const auto land = landing(meta, c);
      for (StateIndex n = 0; n < mdp.num_states(); ++n) {
        const Signal g = mdp.is_terminal(n) ? kSilentSignal : 0;
        const auto it = land.find({n, g});
        EXPECT_NEAR(it == land.end() ? 0.0 : it->second, mdp.transition(s, a, n), 1e-15);
      }
    }
  }
}

TEST(MetaMdp, FullRevealRewardsOnFixture) {
  const auto mdp = oracle::fixture();
  const auto meta = build_meta_mdp(mdp, reveal_all(mdp));
  const auto m = *meta.find(0, 0);  // (s0, g_theta_a)
  EXPECT_DOUBLE_EQ(choice_for(meta, m, kA).reward, 1.0);
  EXPECT_DOUBLE_EQ(choice_for(meta, m, kB).reward, -1.0);
}

TEST(MetaMdp, SingleThetaRewardsAreExact) {
  RandomSpec spec;
  spec.states = 4;
  spec.actions = 3;
  spec.thetas = 1;
  spec.terminals = 1;
  spec.seed = 4;
  const auto mdp = gen_random(spec);
  std::mt19937_64 rng(1);
  const auto meta = build_meta_mdp(mdp, random_advice(mdp, rng));
  for (std::size_t m = 0; m < meta.size(); ++m)
    for (const auto& c : meta.choices[m])
      EXPECT_EQ(c.reward, mdp.agent_reward()(meta.states[m].state, 0, c.action));
}

TEST(MetaMdp, TransitionRowsSumToOne) {
  const auto mdp = oracle::medium_instance(2);
  const auto rep = opt_sig_am(mdp);
  for (const auto& meta : {build_meta_mdp(mdp, reveal_all(mdp)),
                           build_threat_meta_mdp(mdp, ThreatStrategy{std::get<ActionAdvice>(rep.strategy)})}) {
    double init = 0.0;
    for (double p : meta.init) init += p;
    EXPECT_NEAR(init, 1.0, 1e-12);
    for (std::size_t m = 0; m < meta.size(); ++m) {
      if (mdp.is_terminal(meta.states[m].state)) {
        EXPECT_TRUE(meta.choices[m].empty());
      }
      for (const auto& c : meta.choices[m]) {
        double sum = 0.0;
        for (const auto& t : c.next) sum += t.prob;
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
    }
  }
}

TEST(ThreatMetaMdp, SilentStatesStaySilent) {
  const auto mdp = oracle::medium_instance(0);
  const ThreatStrategy threat{std::get<ActionAdvice>(opt_sig_am(mdp).strategy)};
  const auto meta = build_threat_meta_mdp(mdp, threat);
  for (std::size_t m = 0; m < meta.size(); ++m) {
    if (meta.states[m].signal != kSilentSignal) continue;
    for (const auto& c : meta.choices[m])
      for (const auto& t : c.next) EXPECT_EQ(meta.states[t.next].signal, kSilentSignal);
  }
}

TEST(ThreatMetaMdp, ObeyingMatchesBaseAdvice) {
  const auto mdp = oracle::medium_instance(4);
  const ThreatStrategy threat{std::get<ActionAdvice>(opt_sig_am(mdp).strategy)};
  const auto tm = build_threat_meta_mdp(mdp, threat);
  const auto bm = build_meta_mdp(mdp, threat.base);
  for (std::size_t m = 0; m < bm.size(); ++m) {
    const auto& ms = bm.states[m];
    if (ms.signal == kSilentSignal) continue;
    const auto tmi = *tm.find(ms.state, ms.signal);
    const auto a = landing(bm, choice_for(bm, m, ms.advised));
    const auto b = landing(tm, choice_for(tm, tmi, ms.advised));
    ASSERT_EQ(a.size(), b.size());
    for (const auto& [key, p] : a) EXPECT_NEAR(b.at(key), p, 1e-15);
  }
}

TEST(ThreatMetaMdp, FixtureDeviationAtS1FallsSilent) {
  const auto mdp = oracle::fixture();
  const ThreatStrategy threat{std::get<ActionAdvice>(opt_sig_am(mdp).strategy)};
  const auto meta = build_threat_meta_mdp(mdp, threat);
  const auto m = *meta.find(1, kB);
  const auto land = landing(meta, choice_for(meta, m, kA));
  ASSERT_EQ(land.size(), 1u);
  EXPECT_DOUBLE_EQ(land.at({0, kSilentSignal}), 1.0);
}

TEST(SolveMdp, GeometricSeries) {
  MetaMDP meta;
  meta.discount = 0.9;
  meta.num_mdp_states = 1;
  meta.by_state.resize(1);
  meta.add_state(MetaState{0, 0, kNoAction, {1.0}});
  meta.choices[0].push_back(MetaChoice{0, 2.5, {{0, 1.0}}});
  meta.init = {1.0};
  meta.signal_count = 1;
  const auto br = solve_mdp(meta);
  EXPECT_NEAR(br.value[0], 25.0, 1e-9);
}

TEST(SolveMdp, FixtureNoSignalValues) {
  const auto mdp = oracle::fixture();
  const auto nv = nosig_value(mdp);
  EXPECT_NEAR(nv.value[0], 0.1, 1e-9);
  EXPECT_NEAR(nv.value[1], 0.1, 1e-9);
  EXPECT_EQ(nv.value[2], 0.0);
  EXPECT_EQ(nv.policy[0], kC);
  EXPECT_EQ(nv.policy[1], kB);
}

TEST(SolveMdp, FixtureFullRevealLoops) {
  const auto mdp = oracle::fixture();
  const auto meta = build_meta_mdp(mdp, reveal_all(mdp));
  const auto br = solve_mdp(meta);
  for (Signal g = 0; g < 2; ++g) {
    const auto m = *meta.find(1, g);
    EXPECT_EQ(meta.choices[m][br.choice[m]].action, kA);
    EXPECT_NEAR(br.value[m], 2.0 / 3.0, 1e-9);
    EXPECT_EQ(br.policy.at(0, g), g == 0 ? kA : kB);
  }
}

TEST(SolveMdp, BellmanResidualIsSmall) {
  std::mt19937_64 rng(5);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto mdp = oracle::medium_instance(i);
    const auto meta = build_meta_mdp(mdp, random_advice(mdp, rng));
    const auto br = solve_mdp(meta);
    EXPECT_LE(bellman_residual(meta, br.value), 1e-8);
  }
}

TEST(MyopicResponse, FixtureChoices) {
  const auto mdp = oracle::fixture();
  Array3 pi(3, 2, 3);
  pi(0, 0, kA) = pi(0, 1, kA) = 1.0;
  pi(1, 0, kA) = pi(1, 1, kA) = 1.0;
  const auto policy = myopic_response(mdp, ActionAdvice(mdp, pi));
  EXPECT_EQ(policy.at(0, kA), kC);
  EXPECT_EQ(policy.at(1, kA), kB);
}

TEST(MyopicResponse, IcAdviceIsObeyed) {
  const auto mdp = oracle::fixture();
  const auto rep = opt_sig_myop(mdp);
  const auto& advice = std::get<ActionAdvice>(rep.strategy);
  EXPECT_TRUE(obeys(mdp, advice, myopic_response(mdp, advice)));
}

TEST(MyopicResponse, ObedientIffIc) {
  std::mt19937_64 rng(77);
  std::size_t ic_count = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto mdp = i % 2 ? oracle::medium_instance(i) : oracle::small_instance(i);
    const auto advice = i % 3 == 0 ? std::get<ActionAdvice>(opt_sig_myop(mdp).strategy) : random_advice(mdp, rng);
    const bool ic = is_ic(mdp, advice, mdp.agent_reward()).ic;
    ic_count += ic;
    EXPECT_EQ(obeys(mdp, advice, myopic_response(mdp, advice)), ic) << "instance " << i;
  }
  EXPECT_GT(ic_count, 0u);
  EXPECT_LT(ic_count, 50u);
}

TEST(NoSigValue, ZeroAgentRewards) {
  auto d = oracle::medium_instance(0).data();
  d.agent_reward = RewardTable(d.agent_reward.dim0(), d.agent_reward.dim1(), d.agent_reward.dim2());
  const auto nv = nosig_value(PersuasionMDP(d));
  for (double v : nv.value) EXPECT_EQ(v, 0.0);
}

TEST(NoSigValue, MyopicWhenUndiscounted) {
  const auto mdp = with_discounts(oracle::medium_instance(6), 0.8, 0.0);
  const auto nv = nosig_value(mdp);
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    double best = 0.0;
    if (!mdp.is_terminal(s)) {
      best = -1e300;
      for (ActionIndex a : mdp.available(s))
        best = std::max(best, expected_reward(mdp.agent_reward(), s, mdp.prior_row(s), a));
    }
    EXPECT_NEAR(nv.value[s], best, 1e-12);
  }
}

TEST(AmRewards, Fixture) {
  const auto mdp = oracle::fixture();
  const auto r = am_rewards(mdp);
  for (ThetaIndex t = 0; t < 2; ++t) {
    EXPECT_NEAR(r(1, t, kA), 0.05, 1e-9);
    EXPECT_NEAR(r(1, t, kB), 0.1, 1e-9);
    // c leads straight to the terminal state.
    EXPECT_EQ(r(0, t, kC), mdp.agent_reward()(0, t, kC));
  }
}

TEST(AmRewards, UndiscountedIsIdentity) {
  const auto mdp = with_discounts(oracle::medium_instance(7), 0.8, 0.0);
  EXPECT_EQ(am_rewards(mdp), mdp.agent_reward());
}

TEST(ThreatProperty, FarSightedAgentObeysAndSilenceMatchesNoSignal) {
  for (std::size_t i = 0; i < 12; ++i) {
    const auto mdp = oracle::medium_instance(i);
    const ThreatStrategy threat{std::get<ActionAdvice>(opt_sig_am(mdp).strategy)};
    const auto meta = build_threat_meta_mdp(mdp, threat);
    const auto br = solve_mdp(meta);
    const auto reach = reachable(meta, br.choice);
    const auto nv = nosig_value(mdp);
    for (std::size_t m = 0; m < meta.size(); ++m) {
      const auto& ms = meta.states[m];
      if (ms.signal == kSilentSignal) {
        EXPECT_NEAR(br.value[m], nv.value[ms.state], 1e-8);
      } else if (reach[m] && !meta.choices[m].empty()) {
        EXPECT_EQ(meta.choices[m][br.choice[m]].action, ms.advised) << "instance " << i;
      }
    }
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
      if (mdp.is_terminal(s)) continue;
      double expect = 0.0;
      for (ActionIndex a : mdp.available(s)) {
        double pr = 0.0;
        for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) pr += mdp.prior(s, t) * threat.base(s, t, a);
        if (pr > 0.0) expect += pr * br.value[*meta.find(s, a)];
      }
      EXPECT_GE(expect, nv.value[s] - 1e-8);
    }
  }
}
