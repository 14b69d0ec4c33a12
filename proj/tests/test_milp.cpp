#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>
#include <random>

#include "stlprt/branch_bound.hpp"
#include "stlprt/milp_model.hpp"
#include "stlprt/simplex.hpp"

using namespace stlprt;

#ifndef STLPRT_TEST_DATA
#define STLPRT_TEST_DATA "tests/data"
#endif

TEST(MilpModel, RegistryAndRows) {
  MilpModel m;
  int x = m.add_variable("x", 0, 1);
  int y = m.add_binary("y");
  EXPECT_EQ(m.variable("y"), y);
  EXPECT_THROW(m.add_variable("x", 0, 1), Error);
  EXPECT_THROW(m.add_variable("bad name", 0, 1), Error);
  EXPECT_THROW(m.variable("nope"), Error);
  m.add_row({{x, 1.0}, {y, 2.0}, {x, -1.0}}, Sense::le, 1.0);
  ASSERT_EQ(m.row(0).terms.size(), 1u);
  EXPECT_EQ(m.row(0).terms[0].var, y);
  EXPECT_THROW(m.add_row({{7, 1.0}}, Sense::le, 0.0), Error);
  EXPECT_TRUE(m.check_feasible({0.3, 0.0}));
  EXPECT_FALSE(m.check_feasible({0.3, 1.0}));
  EXPECT_FALSE(m.check_feasible({0.3, 0.5}));
}

TEST(Lp, Textbook) {
  MilpModel m;
  int x = m.add_variable("x", 0, kInf);
  m.add_row({{x, 1.0}}, Sense::le, 1.5);
  m.set_objective(x, -1.0);
  SolveOutcome r = solve_lp(m);
  ASSERT_EQ(r.status, SolveStatus::optimal);
  EXPECT_NEAR(r.values[0], 1.5, 1e-12);

  MilpModel inf;
  int z = inf.add_variable("z", -kInf, kInf);
  inf.add_row({{z, 1.0}}, Sense::ge, 1.0);
  inf.add_row({{z, 1.0}}, Sense::le, 0.0);
  EXPECT_EQ(solve_lp(inf).status, SolveStatus::infeasible);

  MilpModel unb;
  int u = unb.add_variable("u", 0, kInf);
  int w = unb.add_variable("w", 0, kInf);
  unb.add_row({{u, 1.0}, {w, -1.0}}, Sense::le, 1.0);
  unb.set_objective(w, -1.0);
  EXPECT_EQ(solve_lp(unb).status, SolveStatus::unbounded);
}

TEST(Lp, FreeVariablesAndEqualities) {
  MilpModel m;
  int a = m.add_variable("a", -kInf, kInf);
  int b = m.add_variable("b", -kInf, kInf);
  m.add_row({{a, 1.0}, {b, 1.0}}, Sense::eq, 3.0);
  m.add_row({{a, 1.0}, {b, -1.0}}, Sense::eq, 1.0);
  SolveOutcome r = solve_lp(m);
  ASSERT_EQ(r.status, SolveStatus::optimal);
  EXPECT_NEAR(r.values[0], 2.0, 1e-12);
  EXPECT_NEAR(r.values[1], 1.0, 1e-12);
}

// Random dense LPs against objectives computed offline by an independent
// solver (tools/gen_lp_oracle.py).
TEST(Lp, FrozenRandomOracle) {
  std::ifstream in(std::string(STLPRT_TEST_DATA) + "/random_lps.json");
  ASSERT_TRUE(in.good());
  nlohmann::json cases = nlohmann::json::parse(in);
  int checked = 0;
  for (const auto& c : cases) {
    MilpModel m;
    const auto& lower = c["lower"];
    const auto& upper = c["upper"];
    const int n = static_cast<int>(c["c"].size());
    for (int j = 0; j < n; ++j) {
      m.add_variable("x" + std::to_string(j), lower[j].is_null() ? -kInf : lower[j].get<double>(),
                     upper[j].is_null() ? kInf : upper[j].get<double>());
      m.set_objective(j, c["c"][j].get<double>());
    }
    for (std::size_t i = 0; i < c["A"].size(); ++i) {
      std::vector<LinearTerm> terms;
      for (int j = 0; j < n; ++j) terms.push_back({j, c["A"][i][j].get<double>()});
      const std::string s = c["sense"][i];
      m.add_row(terms, s == "le" ? Sense::le : s == "ge" ? Sense::ge : Sense::eq, c["rhs"][i].get<double>());
    }
    SolveOutcome r = solve_lp(m);
    const std::string expected = c["status"];
    EXPECT_EQ(std::string(to_string(r.status)), expected) << "case " << checked;
    if (expected == "optimal" && r.status == SolveStatus::optimal) {
      EXPECT_NEAR(r.objective, c["objective"].get<double>(), 1e-8 * (1.0 + std::fabs(r.objective)));
      EXPECT_TRUE(m.check_feasible(r.values, 1e-7));
    }
    ++checked;
  }
  EXPECT_EQ(checked, 60);
}

namespace {

// Brute force over all 0/1 assignments of a pure binary model.
double enumerate_binary(const MilpModel& m, bool& feasible) {
  const int n = m.num_variables();
  double best = kInf;
  feasible = false;
  for (long mask = 0; mask < (1L << n); ++mask) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] = (mask >> j) & 1;
    if (!m.check_feasible(x, 1e-9)) continue;
    feasible = true;
    best = std::min(best, m.evaluate_objective(x));
  }
  return best;
}

}  // namespace

TEST(Milp, KnapsackMatchesEnumeration) {
  MilpModel m;
  const double value[] = {10, 13, 7, 8, 4};
  const double weight[] = {5, 7, 3, 4, 2};
  std::vector<LinearTerm> cap;
  for (int j = 0; j < 5; ++j) {
    m.add_binary("y" + std::to_string(j));
    m.set_objective(j, -value[j]);
    cap.push_back({j, weight[j]});
  }
  m.add_row(cap, Sense::le, 11.0);
  bool feas = false;
  const double oracle = enumerate_binary(m, feas);
  SolveOutcome r = solve_milp(m);
  ASSERT_EQ(r.status, SolveStatus::optimal);
  EXPECT_NEAR(r.objective, oracle, 1e-9);
  EXPECT_NEAR(r.objective, -22.0, 1e-9);
}

TEST(Milp, RandomBinaryProgramsMatchEnumeration) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(-5, 5);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 3 + trial % 10;
    const int rows = 1 + trial % 6;
    MilpModel m;
    for (int j = 0; j < n; ++j) {
      m.add_binary("b" + std::to_string(j));
      m.set_objective(j, std::round(U(rng) * 10) / 10);
    }
    for (int i = 0; i < rows; ++i) {
      std::vector<LinearTerm> t;
      for (int j = 0; j < n; ++j)
        if (rng() % 3) t.push_back({j, std::round(U(rng))});
      const int s = static_cast<int>(rng() % 3);
      m.add_row(t, s == 0 ? Sense::le : s == 1 ? Sense::ge : Sense::eq, std::round(U(rng)));
    }
    bool feas = false;
    const double oracle = enumerate_binary(m, feas);
    SolveOutcome r = solve_milp(m);
    if (!feas) {
      EXPECT_EQ(r.status, SolveStatus::infeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(r.status, SolveStatus::optimal) << "trial " << trial;
    EXPECT_NEAR(r.objective, oracle, 1e-6) << "trial " << trial;
    EXPECT_TRUE(m.check_feasible(r.values, 1e-6));
  }
}

TEST(Milp, MixedIntegerWithContinuousPart) {
  // min -x - 2y  s.t. x + y <= 3.5, x - y >= -1.2, y integer in [0,5], x in [0, 10]
  MilpModel m;
  int x = m.add_variable("x", 0, 10);
  int y = m.add_variable("y", 0, 5, VarType::integer);
  m.add_row({{x, 1}, {y, 1}}, Sense::le, 3.5);
  m.add_row({{x, 1}, {y, -1}}, Sense::ge, -1.2);
  m.set_objective(x, -1);
  m.set_objective(y, -2);
  SolveOutcome r = solve_milp(m);
  ASSERT_EQ(r.status, SolveStatus::optimal);
  // y=2 -> x in [0.8,1.5] -> obj -5.5; y=3 -> x<=0.5 and x>=1.8 infeasible
  EXPECT_NEAR(r.objective, -5.5, 1e-9);
  EXPECT_EQ(r.values[static_cast<std::size_t>(y)], 2.0);
}

TEST(Milp, PureLpEqualsSolveLp) {
  MilpModel m;
  int a = m.add_variable("a", 0, 4), b = m.add_variable("b", 0, 4);
  m.add_row({{a, 1}, {b, 2}}, Sense::ge, 3);
  m.add_row({{a, 3}, {b, 1}}, Sense::ge, 4);
  m.set_objective(a, 1);
  m.set_objective(b, 1);
  EXPECT_NEAR(solve_milp(m).objective, solve_lp(m).objective, 1e-12);
}

TEST(Milp, DeterministicAssignment) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-3, 3);
  MilpModel m;
  for (int j = 0; j < 10; ++j) {
    m.add_binary("b" + std::to_string(j));
    m.add_variable("c" + std::to_string(j), -2, 2);
    m.set_objective(2 * j, U(rng));
    m.set_objective(2 * j + 1, U(rng));
  }
  for (int i = 0; i < 6; ++i) {
    std::vector<LinearTerm> t;
    for (int j = 0; j < 20; ++j) t.push_back({j, std::round(U(rng))});
    m.add_row(t, Sense::le, 1.0);
  }
  SolveOutcome a = solve_milp(m), b = solve_milp(m);
  ASSERT_EQ(a.status, SolveStatus::optimal);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.nodes, b.nodes);
}

TEST(Milp, InfeasibleBounds) {
  MilpModel m;
  m.add_variable("x", 1, 0);
  EXPECT_EQ(solve_milp(m).status, SolveStatus::infeasible);
}
