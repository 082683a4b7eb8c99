#include <gtest/gtest.h>

#include "persuasion/lp.hpp"

using namespace persuasion;

TEST(Lp, LowerBoundRow) {
  LinearProgram lp;
  const auto x = lp.add_variable(1.0);
  lp.add_row({{x, 1.0}}, Comparator::GreaterEqual, 3.0);
  const auto sol = lp_solve(lp);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_NEAR(sol.objective, 3.0, 1e-9);
  EXPECT_NEAR(sol.x[x], 3.0, 1e-9);
}

TEST(Lp, ContradictoryRowsAreInfeasible) {
  LinearProgram lp;
  const auto x = lp.add_variable(1.0);
  lp.add_row({{x, 1.0}}, Comparator::GreaterEqual, 3.0);
  lp.add_row({{x, 1.0}}, Comparator::LessEqual, 2.0);
  EXPECT_EQ(lp_solve(lp).status, LpStatus::Infeasible);
}

TEST(Lp, FreeVariableUnbounded) {
  LinearProgram lp;
  lp.add_variable(-1.0);
  EXPECT_EQ(lp_solve(lp).status, LpStatus::Unbounded);
}

TEST(Lp, TwoDimensionalVertex) {
  // max 3x + 2y  s.t. x + y <= 4, x + 3y <= 6, x <= 3, x, y >= 0  ->  (3, 1), 11
  LinearProgram lp;
  const auto x = lp.add_variable(-3.0, 0.0, 3.0);
  const auto y = lp.add_variable(-2.0, 0.0);
  lp.add_row({{x, 1.0}, {y, 1.0}}, Comparator::LessEqual, 4.0);
  lp.add_row({{x, 1.0}, {y, 3.0}}, Comparator::LessEqual, 6.0);
  const auto sol = lp_solve(lp);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_NEAR(sol.objective, -11.0, 1e-9);
  EXPECT_NEAR(sol.x[x], 3.0, 1e-9);
  EXPECT_NEAR(sol.x[y], 1.0, 1e-9);
}

TEST(Lp, EqualityAndFixedVariables) {
  // min x + 2y + z  s.t. x + y + z = 5, y fixed at 1, z in [0, 2], x >= 1
  LinearProgram lp;
  const auto x = lp.add_variable(1.0, 1.0);
  const auto y = lp.add_variable(2.0, 1.0, 1.0);
  const auto z = lp.add_variable(1.0, 0.0, 2.0);
  lp.add_row({{x, 1.0}, {y, 1.0}, {z, 1.0}}, Comparator::Equal, 5.0);
  const auto sol = lp_solve(lp);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_NEAR(sol.objective, 6.0, 1e-9);
  EXPECT_NEAR(sol.x[y], 1.0, 1e-12);
  EXPECT_NEAR(sol.x[x] + sol.x[z], 4.0, 1e-9);
}

TEST(Lp, UpperOnlyAndNegativeRhs) {
  // max x  s.t. x <= -2 (upper bound only), -x - y <= -1, y <= 5
  LinearProgram lp;
  const auto x = lp.add_variable(-1.0, -LinearProgram::kInf, -2.0);
  const auto y = lp.add_variable(0.0, -LinearProgram::kInf, 5.0);
  lp.add_row({{x, -1.0}, {y, -1.0}}, Comparator::LessEqual, -1.0);
  const auto sol = lp_solve(lp);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_NEAR(sol.x[x], -2.0, 1e-9);
  EXPECT_GE(sol.x[x] + sol.x[y], 1.0 - 1e-9);
}

TEST(Lp, RedundantEqualitiesStillSolve) {
  LinearProgram lp;
  const auto x = lp.add_variable(1.0, 0.0);
  const auto y = lp.add_variable(1.0, 0.0);
  lp.add_row({{x, 1.0}, {y, 1.0}}, Comparator::Equal, 2.0);
  lp.add_row({{x, 2.0}, {y, 2.0}}, Comparator::Equal, 4.0);
  lp.add_row({{x, 1.0}, {y, -1.0}}, Comparator::Equal, 0.0);
  const auto sol = lp_solve(lp);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_NEAR(sol.x[x], 1.0, 1e-9);
  EXPECT_NEAR(sol.x[y], 1.0, 1e-9);
}

TEST(Lp, Deterministic) {
  LinearProgram lp;
  std::vector<std::size_t> v;
  for (int i = 0; i < 6; ++i) v.push_back(lp.add_variable(1.0, 0.0));
  // Degenerate: many optimal vertices.
  lp.add_row({{v[0], 1.0}, {v[1], 1.0}, {v[2], 1.0}}, Comparator::GreaterEqual, 1.0);
  lp.add_row({{v[3], 1.0}, {v[4], 1.0}, {v[5], 1.0}}, Comparator::GreaterEqual, 1.0);
  lp.add_row({{v[0], 1.0}, {v[3], 1.0}}, Comparator::GreaterEqual, 0.0);
  const auto a = lp_solve(lp);
  const auto b = lp_solve(lp);
  ASSERT_EQ(a.status, LpStatus::Optimal);
  EXPECT_EQ(a.x, b.x);
  EXPECT_NEAR(a.objective, 2.0, 1e-9);
}
