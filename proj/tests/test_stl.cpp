#include <gtest/gtest.h>

#include <cmath>

#include "random_models.hpp"
#include "stlprt/model.hpp"
#include "stlprt/stl.hpp"
#include "stlprt/stl_parser.hpp"

using namespace stlprt;

namespace {

Layout two_agents() { return Layout(std::map<int, int>{{1, 2}, {2, 2}}); }

Trajectory scalar_trajectory(std::vector<double> xs) {
  Trajectory x{Layout(std::map<int, int>{{1, 1}}), {}};
  for (double v : xs) x.samples.push_back(Vector::Constant(1, v));
  return x;
}

Formula atom(const std::string& text) { return parse_formula(text, Layout(std::map<int, int>{{1, 1}})); }

}  // namespace

TEST(Parser, AlwaysOfPredicate) {
  Formula f = parse_formula("G[0,10](1*x1[0] >= 0)", two_agents());
  ASSERT_EQ(f.kind(), NodeKind::Always);
  EXPECT_EQ(f.lo(), 0);
  EXPECT_EQ(f.hi(), 10);
  EXPECT_EQ(f.horizon(), 10);
  const auto& p = f.child().predicate();
  ASSERT_EQ(p.coeffs.size(), 1u);
  EXPECT_EQ(p.coeffs.at({1, 0}), 1.0);
  EXPECT_EQ(p.offset, 0.0);
}

TEST(Parser, EventuallyWindow) {
  Formula f = parse_formula("F[10,50](x1[0] >= 2)", two_agents());
  EXPECT_EQ(f.kind(), NodeKind::Eventually);
  EXPECT_EQ(f.horizon(), 50);
  EXPECT_EQ(f.child().predicate().offset, -2.0);
}

TEST(Parser, LessEqualIsRewritten) {
  Formula f = parse_formula("x1[0] <= 3", two_agents());
  ASSERT_EQ(f.kind(), NodeKind::Pred);
  EXPECT_EQ(f.predicate().coeffs.at({1, 0}), -1.0);
  EXPECT_EQ(f.predicate().offset, 3.0);
}

TEST(Parser, LinearExpressions) {
  Formula f = parse_formula("-x1[0] + 2.5*x2[1] - 0.5*x1[0] >= -1e-1", two_agents());
  const auto& p = f.predicate();
  EXPECT_EQ(p.coeffs.at({1, 0}), -1.5);
  EXPECT_EQ(p.coeffs.at({2, 1}), 2.5);
  EXPECT_DOUBLE_EQ(p.offset, 0.1);
}

TEST(Parser, Precedence) {
  Formula f = parse_formula("x1[0] >= 0 | x1[1] >= 0 & !x2[0] >= 1 U[1,2] x2[1] >= 0", two_agents());
  ASSERT_EQ(f.kind(), NodeKind::Or);
  const auto& rhs = f.children()[1];
  ASSERT_EQ(rhs.kind(), NodeKind::And);
  ASSERT_EQ(rhs.children()[1].kind(), NodeKind::Until);
  EXPECT_EQ(rhs.children()[1].child(0).kind(), NodeKind::Not);
}

TEST(Parser, UntilIsLeftAssociative) {
  Formula f = parse_formula("x1[0] >= 0 U[0,1] x1[1] >= 0 U[0,2] x2[0] >= 0", two_agents());
  ASSERT_EQ(f.kind(), NodeKind::Until);
  EXPECT_EQ(f.hi(), 2);
  EXPECT_EQ(f.child(0).kind(), NodeKind::Until);
  EXPECT_EQ(f.horizon(), 3);
}

TEST(Parser, TrueKeyword) {
  EXPECT_EQ(parse_formula("TRUE & G[0,1] TRUE").kind(), NodeKind::And);
}

TEST(Parser, ErrorsCarryPosition) {
  try {
    parse_formula("x1[0] >= 0 &\n  x9[0] >= 1", two_agents());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 3);
  }
  EXPECT_THROW(parse_formula("F[3,1](x1[0] >= 0)", two_agents()), ParseError);
  EXPECT_THROW(parse_formula("F[-1,1](x1[0] >= 0)", two_agents()), ParseError);
  EXPECT_THROW(parse_formula("x1[0] >= 0 )", two_agents()), ParseError);
  EXPECT_THROW(parse_formula("x1[0] > 0", two_agents()), ParseError);
  EXPECT_THROW(parse_formula("x1[2] >= 0", two_agents()), ParseError);
  EXPECT_THROW(parse_formula("", two_agents()), ParseError);
}

TEST(Horizon, Rules) {
  Formula p = atom("x1[0] >= 0");
  EXPECT_EQ(horizon(p), 0);
  EXPECT_EQ(horizon(Formula::until(p, p, 3, 7)), 7);
  Formula f = Formula::conjunction({Formula::eventually(p, 10, 50), Formula::always(p, 0, 100)});
  EXPECT_EQ(horizon(f), 100);
  EXPECT_EQ(f.horizon(), 100);
}

TEST(Horizon, UntilOfRandomSubtrees) {
  testkit::RandomStl gen(7, two_agents());
  for (int i = 0; i < 300; ++i) {
    Formula l = gen.formula(3, 6);
    Formula r = gen.formula(3, 6);
    const int b = gen.uniform_int(0, 5);
    Formula u = Formula::until(l, r, 0, b);
    EXPECT_EQ(horizon(u), b + std::max(horizon(l), horizon(r)));
    EXPECT_EQ(u.horizon(), horizon(u));
  }
}

TEST(Boolean, PredicateIsInclusive) {
  EXPECT_TRUE(eval_boolean(atom("x1[0] >= 2"), scalar_trajectory({2.0})));
  EXPECT_FALSE(eval_boolean(atom("x1[0] >= 2"), scalar_trajectory({1.999})));
  EXPECT_TRUE(eval_boolean(Formula::truth(), scalar_trajectory({-5.0})));
}

TEST(Boolean, UntilLeftOperandIncludesTau) {
  Formula u = Formula::until(atom("x1[0] >= 0"), atom("x1[0] >= 5"), 0, 2);
  EXPECT_TRUE(eval_boolean(u, scalar_trajectory({1, 1, 6})));
  // Left operand fails exactly at tau: rejected under the inclusive convention.
  Formula v = Formula::until(atom("x1[0] <= 3"), atom("x1[0] >= 5"), 0, 2);
  EXPECT_FALSE(eval_boolean(v, scalar_trajectory({1, 1, 6})));
  EXPECT_THROW(eval_boolean(u, scalar_trajectory({1, 1})), HorizonError);
}

TEST(Robustness, Examples) {
  Trajectory x{Layout(std::map<int, int>{{1, 2}}), {Vector::Zero(2)}};
  x.samples[0] << 3.0, 0.0;
  Formula p = parse_formula("x1[0] >= 2", Layout(std::map<int, int>{{1, 2}}));
  EXPECT_DOUBLE_EQ(eval_robustness(p, x), 1.0);
  Formula q = parse_formula("x1[1] >= 0.5", Layout(std::map<int, int>{{1, 2}}));
  EXPECT_DOUBLE_EQ(eval_robustness(Formula::conjunction({p, q}), x), -0.5);
  EXPECT_DOUBLE_EQ(eval_robustness(Formula::truth(), x), 1e9);
  EXPECT_DOUBLE_EQ(eval_robustness(Formula::truth(), x, 0, {.top = 7.0}), 7.0);
}

// Independent brute force over (tau, t') pairs for the Until clause.
TEST(Robustness, UntilBruteForce) {
  testkit::RandomStl gen(11, Layout(std::map<int, int>{{1, 1}}));
  for (int trial = 0; trial < 500; ++trial) {
    Predicate pl = gen.predicate(), pr = gen.predicate();
    const int b = gen.uniform_int(0, 3), a = gen.uniform_int(0, b);
    Formula u = Formula::until(Formula::pred(pl), Formula::pred(pr), a, b);
    Trajectory x = gen.trajectory(b + 2);
    double best = -INFINITY;
    bool sat = false;
    for (int tau = a; tau <= b; ++tau) {
      double m = pr.value(x, tau);
      bool ok = m >= 0;
      for (int s = 0; s <= tau; ++s) {
        m = std::min(m, pl.value(x, s));
        ok = ok && pl.value(x, s) >= 0;
      }
      best = std::max(best, m);
      sat = sat || ok;
    }
    EXPECT_DOUBLE_EQ(eval_robustness(u, x), best);
    EXPECT_EQ(eval_boolean(u, x), sat);
  }
}

TEST(Nnf, Examples) {
  Formula p1 = atom("x1[0] >= 0"), p2 = atom("x1[0] >= 1");
  Formula n = to_nnf(Formula::negation(Formula::conjunction({p1, p2})));
  ASSERT_EQ(n.kind(), NodeKind::Or);
  EXPECT_EQ(n.children()[0].predicate().polarity, Polarity::negated);
  EXPECT_EQ(n.children()[1].predicate().polarity, Polarity::negated);

  EXPECT_EQ(to_nnf(Formula::negation(Formula::negation(p1))), p1);

  Formula g = to_nnf(Formula::negation(Formula::always(p1, 0, 2)));
  ASSERT_EQ(g.kind(), NodeKind::Eventually);
  EXPECT_EQ(g.hi(), 2);
  EXPECT_EQ(g.child().predicate().polarity, Polarity::negated);

  Formula u = to_nnf(Formula::negation(Formula::until(p1, p2, 1, 2)));
  EXPECT_TRUE(is_nnf(u));
  EXPECT_EQ(u.kind(), NodeKind::And);
}

TEST(Nnf, PreservesSemantics) {
  testkit::RandomStl gen(3, two_agents());
  for (int i = 0; i < 2000; ++i) {
    Formula f = gen.formula(4, 6);
    Formula g = to_nnf(f);
    ASSERT_TRUE(is_nnf(g));
    Trajectory x = gen.trajectory(f.horizon());
    ASSERT_EQ(eval_boolean(f, x), eval_boolean(g, x)) << to_string(f);
    ASSERT_NEAR(eval_robustness(f, x), eval_robustness(g, x), 1e-9) << to_string(f);
  }
}

TEST(Robustness, SignSoundness) {
  testkit::RandomStl gen(5, two_agents());
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    Formula f = gen.formula(4, 6);
    Trajectory x = gen.trajectory(f.horizon());
    const double r = eval_robustness(f, x);
    if (std::fabs(r) <= 1e-9) continue;
    ++checked;
    ASSERT_EQ(r > 0, eval_boolean(f, x)) << to_string(f);
  }
  EXPECT_GT(checked, 1500);
}

TEST(Printer, RoundTrip) {
  testkit::RandomStl gen(9, two_agents());
  for (int i = 0; i < 1000; ++i) {
    Formula f = gen.formula(4, 8);
    ASSERT_EQ(parse_formula(to_string(f), two_agents()), f) << to_string(f);
  }
}

TEST(Predicates, CollectAndAssumption) {
  Formula p = atom("x1[0] >= 0");
  auto lits = collect_predicates(to_nnf(Formula::always(Formula::negation(p), 0, 3)));
  ASSERT_EQ(lits.size(), 1u);
  EXPECT_EQ(lits[0].polarity, Polarity::negated);

  auto both = collect_predicates(to_nnf(Formula::conjunction({p, Formula::negation(p)})));
  EXPECT_EQ(both.size(), 2u);
  EXPECT_THROW(check_no_complementary_literals(both), ValidationError);

  auto dup = collect_predicates(Formula::conjunction({p, Formula::eventually(p, 0, 1)}));
  EXPECT_EQ(dup.size(), 1u);
}

TEST(Predicates, MapKeepsStructure) {
  testkit::RandomStl gen(13, two_agents());
  for (int i = 0; i < 200; ++i) {
    Formula f = gen.formula(4, 6);
    Formula g = map_predicates(f, [](Predicate p) {
      p.offset -= 0.25;
      return p;
    });
    EXPECT_TRUE(same_structure(f, g));
  }
}

TEST(Trajectory, Decompose) {
  testkit::RandomStl gen(17, two_agents());
  Trajectory z = gen.trajectory(4), e = gen.trajectory(4);
  Trajectory x = decompose_trajectory(z, e);
  for (int t = 0; t <= 4; ++t) EXPECT_TRUE(x.samples[t].isApprox(z.samples[t] + e.samples[t]));
  Trajectory zero{z.layout, std::vector<Vector>(5, Vector::Zero(4))};
  Trajectory same = decompose_trajectory(z, zero);
  for (int t = 0; t <= 4; ++t) EXPECT_EQ(same.samples[t], z.samples[t]);
  Trajectory short_e = gen.trajectory(3);
  EXPECT_THROW(decompose_trajectory(z, short_e), ValidationError);
}
