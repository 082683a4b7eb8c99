#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace persuasion;

namespace {

PersuasionMDP modified(const PersuasionMDP& mdp, const std::function<void(MdpData&)>& edit) {
  auto d = mdp.data();
  edit(d);
  return PersuasionMDP(std::move(d));
}

double plain_policy_value(const PersuasionMDP& mdp, const std::vector<ActionIndex>& policy) {
  Array3 pi(mdp.num_states(), mdp.num_thetas(), mdp.num_actions());
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    if (!mdp.is_terminal(s))
      for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) pi(s, t, policy[s]) = 1.0;
  return oracle::from_init(
      mdp, oracle::obedient_values(mdp, ActionAdvice(mdp, pi), mdp.principal_reward(), mdp.gamma()));
}

}  // namespace

TEST(Solver, FixturePayoffs) {
  const auto mdp = oracle::fixture();
  EXPECT_NEAR(opt_sig_myop(mdp).principal, 6.0, 1e-9);
  EXPECT_NEAR(opt_sig_am(mdp).principal, 6.0, 1e-9);
  EXPECT_NEAR(threat_strategy(mdp).principal, 6.0, 1e-9);
  EXPECT_NEAR(full_control(mdp).principal, 6.0, 1e-9);
  EXPECT_NEAR(nosig(mdp, AgentType::Myopic).principal, 0.0, 1e-12);
  EXPECT_NEAR(nosig(mdp, AgentType::FarSighted).principal, 0.0, 1e-12);
}

TEST(Solver, FixtureThreatIsObeyed) {
  const auto rep = threat_strategy(oracle::fixture());
  EXPECT_TRUE(rep.diagnostics.obedient);
  EXPECT_NEAR(rep.diagnostics.verified_payoff, rep.principal, 1e-6);
  EXPECT_TRUE(std::holds_alternative<ThreatStrategy>(rep.strategy));
}

TEST(Solver, FullControlDictationOnFixture) {
  const auto rep = full_control(oracle::fixture());
  const auto& d = rep.diagnostics.dictation;
  EXPECT_EQ(d[0][0], 0u);
  EXPECT_EQ(d[0][1], 1u);
  EXPECT_EQ(d[1][0], 1u);
  EXPECT_EQ(d[2][0], kNoAction);
}

TEST(Solver, ThetaIndependentAgentRewardsMakeSignalsPowerless) {
  for (std::size_t i = 0; i < 6; ++i) {
    const auto mdp = modified(oracle::medium_instance(i), [](MdpData& d) {
      for (std::size_t s = 0; s < d.agent_reward.dim0(); ++s)
        for (std::size_t t = 1; t < d.agent_reward.dim1(); ++t)
          for (std::size_t a = 0; a < d.agent_reward.dim2(); ++a) d.agent_reward(s, t, a) = d.agent_reward(s, 0, a);
    });
    EXPECT_NEAR(opt_sig_myop(mdp).principal, nosig(mdp, AgentType::Myopic).principal, 1e-6);
  }
}

TEST(Solver, SingleActionEqualsForcedPolicy) {
  RandomSpec spec;
  spec.states = 5;
  spec.actions = 1;
  spec.thetas = 3;
  spec.terminals = 1;
  spec.seed = 17;
  const auto mdp = gen_random(spec);
  const double forced = plain_policy_value(mdp, std::vector<ActionIndex>(5, 0));
  EXPECT_NEAR(opt_sig_myop(mdp).principal, forced, 1e-9);
  EXPECT_NEAR(full_control(mdp).principal, forced, 1e-9);
}

TEST(Solver, AmWithUndiscountedAgentMatchesMyop) {
  const auto mdp = modified(oracle::medium_instance(3), [](MdpData& d) { d.gamma_tilde = 0.0; });
  const auto a = opt_sig_myop(mdp);
  const auto b = opt_sig_am(mdp);
  EXPECT_EQ(a.principal, b.principal);
  EXPECT_EQ(std::get<ActionAdvice>(a.strategy), std::get<ActionAdvice>(b.strategy));
}

TEST(Solver, IndifferentAgentGivesFullControl) {
  const auto mdp = modified(oracle::medium_instance(8), [](MdpData& d) {
    d.agent_reward = RewardTable(d.agent_reward.dim0(), d.agent_reward.dim1(), d.agent_reward.dim2());
  });
  const double fc = full_control(mdp).principal;
  EXPECT_NEAR(opt_sig_myop(mdp).principal, fc, 1e-6);
  EXPECT_NEAR(opt_sig_am(mdp).principal, fc, 1e-6);
}

TEST(Solver, AlignedAgentThreatReachesFullControl) {
  int matched = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    RandomSpec spec;
    spec.states = 6;
    spec.actions = 3;
    spec.thetas = 3;
    spec.terminals = 2;
    spec.beta = 1.0;
    spec.seed = 40 + i;
    const auto mdp = gen_random(spec);
    const auto fc = full_control(mdp);
    const double threat = threat_strategy(mdp).principal;
    EXPECT_LE(threat, fc.principal + 1e-6);
    // Equality needs the dictation to be obeyed by an agent valuing the future
    // at the no-signal value; that is a property of the instance.
    const auto dictation = dictation_advice(mdp, fc.diagnostics.dictation);
    if (is_ic(mdp, dictation, am_rewards(mdp)).ic) {
      ++matched;
      EXPECT_NEAR(threat, fc.principal, 1e-6) << "seed " << spec.seed;
    }
  }
  EXPECT_GE(matched, 3);
}

TEST(Solver, SingleStateMethodsAgree) {
  RandomSpec spec;
  spec.states = 1;
  spec.actions = 3;
  spec.thetas = 3;
  spec.terminals = 0;
  spec.seed = 2;
  const auto mdp = gen_random(spec);
  const double myop = opt_sig_myop(mdp).principal;
  EXPECT_NEAR(threat_strategy(mdp).principal, opt_sig_am(mdp).principal, 1e-6);
  // One state that loops on itself: R+ adds the same constant to every action.
  EXPECT_NEAR(opt_sig_am(mdp).principal, myop, 1e-6);
}

TEST(Solver, NoSigTypesCoincideForUndiscountedAgent) {
  const auto mdp = modified(oracle::medium_instance(9), [](MdpData& d) { d.gamma_tilde = 0.0; });
  const auto a = nosig(mdp, AgentType::Myopic);
  const auto b = nosig(mdp, AgentType::FarSighted);
  EXPECT_EQ(a.principal, b.principal);
  EXPECT_EQ(a.response, b.response);
}

TEST(Solver, AlignedNoSigFarSightedIsAgentOptimalPlan) {
  RandomSpec spec;
  spec.states = 6;
  spec.actions = 4;
  spec.thetas = 1;
  spec.terminals = 1;
  spec.beta = 1.0;
  spec.seed = 12;
  const auto mdp = gen_random(spec);
  // One theta and R~ = R: the agent's own optimum is the principal's optimum.
  EXPECT_NEAR(nosig(mdp, AgentType::FarSighted).principal, full_control(mdp).principal, 1e-6);
  EXPECT_NEAR(nosig(mdp, AgentType::FarSighted).principal,
              plain_policy_value(mdp, nosig_value(mdp).policy), 1e-9);
}

TEST(Solver, DualFeasibilityTightnessAndIc) {
  for (std::size_t i = 0; i < 15; ++i) {
    const auto mdp = i < 8 ? oracle::medium_instance(i) : oracle::small_instance(i);
    for (bool am : {false, true}) {
      const auto reward = am ? am_rewards(mdp) : mdp.agent_reward();
      const auto rep = opt_sig_myop(mdp, reward);
      ASSERT_TRUE(rep.dual.has_value());
      EXPECT_LE(oracle::dual_violation(mdp, reward, *rep.dual), 1e-7);
      const auto& advice = std::get<ActionAdvice>(rep.strategy);
      EXPECT_TRUE(is_ic(mdp, advice, reward).ic);
      const auto v = oracle::obedient_values(mdp, advice, mdp.principal_reward(), mdp.gamma());
      for (StateIndex s = 0; s < mdp.num_states(); ++s) EXPECT_NEAR(v[s], rep.dual->V[s], 1e-6);
      EXPECT_NEAR(rep.principal, oracle::from_init(mdp, v), 1e-9);
    }
  }
}

TEST(Solver, OrderingChain) {
  for (std::size_t i = 0; i < 10; ++i) {
    const auto mdp = i % 2 ? oracle::medium_instance(i) : oracle::road_instance(i);
    const double fc = full_control(mdp).principal;
    const double nm = nosig(mdp, AgentType::Myopic).principal;
    const double nf = nosig(mdp, AgentType::FarSighted).principal;
    const double my = opt_sig_myop(mdp).principal;
    const double am = opt_sig_am(mdp).principal;
    const double th = threat_strategy(mdp).principal;
    EXPECT_LE(nm, my + 1e-6);
    EXPECT_LE(nf, am + 1e-6);
    EXPECT_LE(my, fc + 1e-6);
    EXPECT_LE(am, fc + 1e-6);
    EXPECT_NEAR(th, am, 1e-6);
  }
}

TEST(Solver, GridOracleOnSmallInstances) {
  for (std::size_t i = 0; i < 10; ++i) {
    const auto mdp = oracle::small_instance(i);
    const auto rep = opt_sig_myop(mdp);
    EXPECT_GE(rep.principal, oracle::grid_best(mdp, mdp.agent_reward()) - 0.02) << "instance " << i;
    EXPECT_LE(rep.diagnostics.ic_violation, 1e-9);
  }
}

TEST(Solver, ReportsArePopulated) {
  const auto rep = opt_sig_myop(oracle::medium_instance(0));
  EXPECT_EQ(rep.method, "myop");
  EXPECT_EQ(rep.diagnostics.lp_status, "Optimal");
  EXPECT_GT(rep.diagnostics.lp_iterations, 0u);
  EXPECT_LE(rep.diagnostics.bellman_gap, 1e-6);
  EXPECT_GE(rep.diagnostics.wall_seconds, 0.0);
}
