#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "stlprt/branch_bound.hpp"
#include "stlprt/external.hpp"
#include "stlprt/lp_format.hpp"

using namespace stlprt;

namespace {

MilpModel small_mip() {
  MilpModel m;
  const int x = m.add_variable("x", 0, 10);
  const int y = m.add_variable("y", 0, 5, VarType::integer);
  m.set_objective(x, -1);
  m.set_objective(y, -2);
  m.add_row({{x, 1}, {y, 1}}, Sense::le, 3.5, "c0");
  m.add_row({{x, 1}, {y, -1}}, Sense::ge, -1.2, "c1");
  return m;
}

MilpModel random_mip(std::mt19937& rng) {
  std::uniform_real_distribution<double> coef(-3, 3), pos(0.5, 4);
  std::uniform_int_distribution<int> kind(0, 3);
  MilpModel m;
  const int n = 6;
  for (int j = 0; j < n; ++j) {
    switch (kind(rng)) {
      case 0:
        m.add_variable("x" + std::to_string(j), -pos(rng), pos(rng));
        break;
      case 1:
        m.add_binary("b" + std::to_string(j));
        break;
      case 2:
        m.add_variable("n" + std::to_string(j), -2, 3, VarType::integer);
        break;
      default:
        m.add_variable("f" + std::to_string(j), -kInf, kInf);
        m.add_row({{j, 1}}, Sense::le, pos(rng));
        m.add_row({{j, 1}}, Sense::ge, -pos(rng));
    }
    m.set_objective(j, coef(rng));
  }
  for (int i = 0; i < 5; ++i) {
    std::vector<LinearTerm> t;
    for (int j = 0; j < n; ++j) t.push_back({j, coef(rng)});
    m.add_row(t, i % 2 ? Sense::le : Sense::ge, i % 2 ? pos(rng) : -pos(rng));
  }
  m.set_objective_constant(0.25);
  return m;
}

std::string adapter() { return std::string(STLPRT_TOOLS_DIR) + "/highs_solve.py"; }

bool highspy_available() {
  static const bool ok = std::system("python3 -c 'import highspy' > /dev/null 2>&1") == 0;
  return ok;
}

std::string fake_solver(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / ("stlprt-fake-" + name + ".sh");
  std::ofstream(p) << "#!/bin/sh\n" << body << "\n";
  std::filesystem::permissions(p, std::filesystem::perms::owner_all);
  return p.string();
}

}  // namespace

TEST(LpFormat, WriterLayout) {
  const std::string text = to_lp_string(small_mip());
  EXPECT_NE(text.find("Minimize\n obj: - 1 x - 2 y\n"), std::string::npos) << text;
  EXPECT_NE(text.find(" c0: + 1 x + 1 y <= 3.5\n"), std::string::npos);
  EXPECT_NE(text.find(" c1: + 1 x - 1 y >= -1.2\n"), std::string::npos);
  EXPECT_NE(text.find(" 0 <= y <= 5\n"), std::string::npos);
  EXPECT_NE(text.find("General\n y\nEnd\n"), std::string::npos);
}

TEST(LpFormat, RoundTripPreservesModel) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const MilpModel m = random_mip(rng);
    const MilpModel r = read_lp(to_lp_string(m));
    ASSERT_EQ(r.num_variables(), m.num_variables());
    ASSERT_EQ(r.num_rows(), m.num_rows());
    for (const auto& v : m.variables()) {
      const auto& w = r.var(r.variable(v.name));
      EXPECT_EQ(w.lower, v.lower) << v.name;
      EXPECT_EQ(w.upper, v.upper) << v.name;
      EXPECT_EQ(w.type, v.type) << v.name;
      EXPECT_EQ(r.objective()[static_cast<std::size_t>(r.variable(v.name))],
                m.objective()[static_cast<std::size_t>(m.variable(v.name))]);
    }
    for (int i = 0; i < m.num_rows(); ++i) {
      const Row& a = m.row(i);
      const Row& b = r.row(i);
      EXPECT_EQ(a.name, b.name);
      EXPECT_EQ(a.sense, b.sense);
      EXPECT_EQ(a.rhs, b.rhs);
      ASSERT_EQ(a.terms.size(), b.terms.size());
      for (const auto& t : a.terms) {
        const int jb = r.variable(m.var(t.var).name);
        double c = 0;
        for (const auto& u : b.terms)
          if (u.var == jb) c = u.coef;
        EXPECT_EQ(c, t.coef);
      }
    }
    const auto s1 = solve_milp(m);
    auto s2 = solve_milp(r);
    ASSERT_EQ(s1.status, s2.status);
    if (s1.status == SolveStatus::optimal) EXPECT_NEAR(s1.objective, s2.objective + m.objective_constant(), 1e-9);
  }
}

TEST(LpFormat, ReaderRejectsGarbage) {
  EXPECT_THROW(read_lp("Maximize nonsense"), ParseError);
  EXPECT_THROW(read_lp("Minimize\n obj: x\nSubject To\n c0: x 3\nEnd\n"), ParseError);
  EXPECT_THROW(read_lp("Minimize\n obj: x\nSubject To\n c0: x <= 3\n"), ParseError);
}

TEST(SolutionReaders, HighsRawFormat) {
  const auto s = read_solution(
      "Model status\nOptimal\n\n# Primal solution values\nFeasible\nObjective -5.5\n# Columns 2\nx 1.5\ny 2\n"
      "# Rows 2\nc0 3.5\nc1 -0.5\n\n# Dual solution values\nFeasible\n# Columns 2\nx 9\ny 9\n");
  EXPECT_EQ(s.status, SolveStatus::optimal);
  EXPECT_FALSE(s.sparse);
  EXPECT_EQ(s.values.at("x"), 1.5);
  EXPECT_EQ(s.values.at("y"), 2.0);
  EXPECT_EQ(read_solution("Model status\nInfeasible\n\n# Primal solution values\nNone\n").status,
            SolveStatus::infeasible);
  EXPECT_THROW(read_solution("Model status\nOptimal\n\n# Columns 2\nx 1\n"), ParseError);
  EXPECT_THROW(read_solution("Model status\nOptimal\n\n# Columns 1\nx abc\n"), ParseError);
}

TEST(SolutionReaders, CbcFormat) {
  const auto s = read_solution("Optimal - objective value -5.5\n      0 x  1.5  0\n      1 y  2  -2\n");
  EXPECT_EQ(s.status, SolveStatus::optimal);
  EXPECT_TRUE(s.sparse);
  EXPECT_EQ(s.values.at("y"), 2.0);
  EXPECT_EQ(read_solution("Infeasible - objective value 0\n").status, SolveStatus::infeasible);
  EXPECT_THROW(read_solution("garbage\n"), ParseError);
  EXPECT_THROW(read_solution("Optimal - objective value 1\n 0 x\n"), ParseError);
}

TEST(External, MissingExecutable) {
  EXPECT_THROW(solve_external(small_mip(), "/nonexistent/solver-binary"), SolverError);
}

TEST(External, MalformedOutputIsParseError) {
  const auto cmd = fake_solver("garbage", "echo 'Model status' > \"$2\"; echo Optimal >> \"$2\"; echo '# Columns 2' >> \"$2\"; echo 'x oops' >> \"$2\"");
  EXPECT_THROW(solve_external(small_mip(), cmd), ParseError);
}

TEST(External, ConstraintViolationIsRejected) {
  const auto cmd = fake_solver("liar", "printf 'Optimal - objective value -20\\n 0 x 10 0\\n 1 y 5 0\\n' > \"$2\"");
  EXPECT_THROW(solve_external(small_mip(), cmd), SolverError);
}

TEST(External, CbcSparseOutputAccepted) {
  const auto cmd = fake_solver("cbc", "printf 'Optimal - objective value -5.5\\n 0 x 1.5 0\\n 1 y 2 0\\n' > \"$2\"");
  const auto s = solve_external(small_mip(), cmd);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_DOUBLE_EQ(s.objective, -5.5);
}

TEST(External, HighsAgreesWithInternalSolver) {
  if (!highspy_available()) GTEST_SKIP() << "highspy not installed";
  std::mt19937 rng(5);
  int optimal = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const MilpModel m = trial == 0 ? small_mip() : random_mip(rng);
    MilpLimits tight;
    tight.gap = 1e-9;
    const auto a = solve_milp(m, tight);
    const auto b = solve_external(m, adapter());
    ASSERT_EQ(a.status, b.status) << "trial " << trial;
    if (a.status != SolveStatus::optimal) continue;
    ++optimal;
    EXPECT_NEAR(a.objective, b.objective, 1e-6) << "trial " << trial;
  }
  EXPECT_GE(optimal, 6);
}

TEST(External, HighsInfeasibleMapsToInfeasible) {
  if (!highspy_available()) GTEST_SKIP() << "highspy not installed";
  MilpModel m;
  const int x = m.add_variable("x", 0, 1, VarType::integer);
  m.add_row({{x, 1}}, Sense::ge, 2, "c0");
  EXPECT_EQ(solve_external(m, adapter()).status, SolveStatus::infeasible);
  EXPECT_EQ(solve_milp(m).status, SolveStatus::infeasible);
}
