#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "stlprt/coordinator.hpp"
#include "stlprt/reach.hpp"

using namespace stlprt;
using namespace fixtures;

namespace {

TightenedSpec tighten(const MasModel& m) {
  const auto budget = budget_uniform(m.spec.theta, static_cast<int>(m.agents.size()), m.spec.N);
  return tighten_spec(m, build_tubes(m, budget));
}

std::vector<Clique> singletons(std::initializer_list<int> ids) {
  std::vector<Clique> out;
  for (int i : ids) out.push_back({i});
  return out;
}

MasModel rendezvous_pair(int N) {
  MasModel m;
  m.agents.push_back(planar_agent(1, vec({-3, 0}), 0.01, 1.0));
  m.agents.push_back(planar_agent(2, vec({3, 1}), 0.01, 1.0));
  m.spec.N = N;
  m.spec.theta = 0.8;
  const Layout layout = m.layout();
  m.spec.local_tasks.emplace(1, parse_formula("G[0," + std::to_string(N) + "](x1[1] >= -1)", layout));
  m.spec.joint_tasks.emplace(Clique{1, 2}, rendezvous({1, 2}, N / 2, N, 2.0, layout));
  return m;
}

}  // namespace

TEST(TaskSets, SmallCliqueSet) {
  GlobalSpec spec;
  const Formula t = Formula::truth();
  spec.joint_tasks.emplace(Clique{1, 2, 3}, t);
  spec.joint_tasks.emplace(Clique{1, 5}, t);
  const TaskSets ts = build_task_sets(spec);
  EXPECT_EQ(ts.at(1), (std::vector<Clique>{{2, 3}, {5}}));
  EXPECT_EQ(ts.at(2), (std::vector<Clique>{{1, 3}}));
  EXPECT_EQ(ts.at(5), (std::vector<Clique>{{1}}));
  EXPECT_FALSE(ts.count(4));
}

TEST(TaskSets, TenAgentExample) {
  const MasModel m = ten_agent_structure();
  const TaskSets ts = build_task_sets(m.spec);
  EXPECT_EQ(ts.at(1), (std::vector<Clique>{{2, 3}, {5}}));
  EXPECT_EQ(ts.at(2), (std::vector<Clique>{{1, 3}}));
  EXPECT_EQ(ts.at(3), (std::vector<Clique>{{1, 2}, {4}}));
  EXPECT_EQ(ts.at(5), singletons({1, 4, 6}));
  EXPECT_EQ(ts.at(6), singletons({5, 8, 9}));
  EXPECT_EQ(ts.at(7), singletons({4, 8}));
  EXPECT_EQ(ts.at(8), singletons({6, 7, 10}));
  EXPECT_EQ(ts.at(9), singletons({6, 10}));
  EXPECT_EQ(ts.at(10), singletons({8, 9}));
  // Symmetry forces 7 into agent 4's set since 4 is in agent 7's.
  EXPECT_EQ(ts.at(4), singletons({3, 5, 7}));
  EXPECT_EQ(induced_graph(m.spec).size(), 13u);
}

TEST(Bundles, Structure) {
  MasModel m;
  for (int i = 1; i <= 3; ++i) m.agents.push_back(planar_agent(i, vec({0, 0})));
  m.spec.N = 4;
  const Layout layout = m.layout();
  m.spec.local_tasks.emplace(1, parse_formula("G[0,4] x1[0] >= -1", layout));
  auto b = build_bundles(m, m.spec);
  for (const auto& [i, bundle] : b) EXPECT_EQ(bundle.size(), 1u);
  EXPECT_TRUE(eval_boolean(b.at(2).local, Trajectory{layout, std::vector<Vector>(5, Vector::Zero(6))}));

  m.spec.joint_tasks.emplace(Clique{1, 3}, rendezvous({1, 3}, 0, 4, 1.0, layout));
  b = build_bundles(m, m.spec);
  EXPECT_EQ(b.at(1).joint.count({1, 3}), 1u);
  EXPECT_EQ(b.at(3).joint.count({1, 3}), 1u);
  EXPECT_TRUE(b.at(2).joint.empty());

  const MasModel ten = ten_agent_structure();
  const auto tb = build_bundles(ten, ten.spec);
  const auto sets = build_task_sets(ten.spec);
  for (const auto& [i, bundle] : tb) EXPECT_EQ(bundle.size(), sets.at(i).size() + 1) << "agent " << i;
}

TEST(Schedule, RoundRobin) {
  MasModel m;
  for (int i = 1; i <= 3; ++i) m.agents.push_back(planar_agent(i, vec({0, 0})));
  const Schedule s = make_schedule(m, SchedulePolicy::round_robin);
  EXPECT_EQ(s.k_max, 30);
  EXPECT_EQ(s.active(1), std::vector<int>{1});
  EXPECT_EQ(s.active(2), std::vector<int>{2});
  EXPECT_EQ(s.active(3), std::vector<int>{3});
  EXPECT_EQ(s.active(4), std::vector<int>{1});
  EXPECT_THROW(s.active(0), ValidationError);
}

TEST(Schedule, ColoringOfTenAgentExample) {
  const MasModel m = ten_agent_structure();
  const Schedule s = make_schedule(m, SchedulePolicy::coloring, 7, {{1, 4, 6, 10}, {3, 5, 7, 9}, {8, 9, 2, 5}});
  EXPECT_EQ(s.active(1), (std::vector<int>{1, 4, 6, 10}));
  EXPECT_EQ(s.active(3), (std::vector<int>{2, 5, 8, 9}));
  EXPECT_EQ(s.active(4), s.active(1));
  EXPECT_EQ(s.active(7), s.active(1));
  EXPECT_THROW(make_schedule(m, SchedulePolicy::coloring, 7, {{1, 2}, {3, 4, 5, 6, 7, 8, 9, 10}}), ValidationError);
  EXPECT_THROW(make_schedule(m, SchedulePolicy::coloring, 7, {{1, 4, 6, 10}}), ValidationError);
}

TEST(Iterative, NoJointTasksStopsAfterFirstSweep) {
  MasModel m;
  m.agents.push_back(planar_agent(1, vec({0, 0}), 0.01, 1.0));
  m.agents.push_back(planar_agent(2, vec({3, 0}), 0.01, 1.0));
  m.spec.N = 6;
  m.spec.theta = 0.8;
  const Layout layout = m.layout();
  m.spec.local_tasks.emplace(1, parse_formula("F[2,6] x1[0] >= 1", layout));
  m.spec.local_tasks.emplace(2, parse_formula("G[0,6] x2[0] >= 1", layout));
  const TightenedSpec ts = tighten(m);
  const PlanResult r = run_iterative(m, ts, make_schedule(m, SchedulePolicy::round_robin));
  EXPECT_EQ(r.status, PlanStatus::satisfied);
  EXPECT_EQ(r.iterations, 1);
  ASSERT_EQ(r.log.size(), 2u);
  EXPECT_TRUE(r.log[1].agents[0].carried_forward);
  EXPECT_EQ(r.z.samples, detail::assemble(m, {{1, detail::simulate_nominal(m.agent(1), r.inputs.at(1))},
                                              {2, detail::simulate_nominal(m.agent(2), r.inputs.at(2))}}, 6).samples);
}

TEST(Iterative, RendezvousPair) {
  const MasModel m = rendezvous_pair(10);
  const TightenedSpec ts = tighten(m);
  PlannerConfig cfg;
  const PlanResult r = run_iterative(m, ts, make_schedule(m, SchedulePolicy::round_robin), cfg);
  ASSERT_EQ(r.status, PlanStatus::satisfied) << format_iteration_log(r);
  EXPECT_TRUE(eval_boolean(ts.psi.conjunction(), r.z));
  EXPECT_GE(r.psi_robustness, -1e-7);
  // Initial plans stay put, so the joint task starts violated.
  EXPECT_LT(r.log[0].robustness.at({1, 2}), 0.0);
  for (std::size_t k = 1; k < r.log.size(); ++k) {
    EXPECT_TRUE(r.log[k].contract_violations.empty());
    const double prev = r.log[k - 1].robustness.at({1, 2});
    EXPECT_GE(r.log[k].robustness.at({1, 2}), std::min(0.0, prev) - 1e-6);
    for (const auto& a : r.log[k].agents) EXPECT_LE(a.witness_violation, 1e-6);
  }
  // The last solve pushed mu to the achieved robustness.
  const auto& last = r.log.back().agents.back();
  ASSERT_TRUE(last.selected.has_value());
  EXPECT_GE(last.mu, -1e-7);
  // Inputs respect the tightened boxes.
  for (int i : {1, 2})
    for (int t = 0; t < 10; ++t)
      EXPECT_TRUE(ts.input_boxes.at(i)[static_cast<std::size_t>(t)].contains(r.inputs.at(i)[static_cast<std::size_t>(t)], 1e-7));
  const std::string log = format_iteration_log(r);
  EXPECT_NE(log.find("k=0 agent=1 status=optimal"), std::string::npos) << log;
  EXPECT_NE(log.find("status=satisfied"), std::string::npos);
}

TEST(Iterative, AgreesWithCentralizedOnFeasibility) {
  const MasModel m = rendezvous_pair(8);
  const TightenedSpec ts = tighten(m);
  const PlanResult c = plan_centralized(m, ts);
  const PlanResult it = run_iterative(m, ts, make_schedule(m, SchedulePolicy::round_robin));
  EXPECT_EQ(c.status, PlanStatus::satisfied);
  EXPECT_EQ(it.status, PlanStatus::satisfied);
  EXPECT_GE(c.psi_robustness, -1e-7);
  // The centralized plan is jointly optimal for the same constraints.
  EXPECT_LE(c.total_cost, it.total_cost + 1e-6);
}

TEST(Iterative, InfeasibleLocalTaskReported) {
  MasModel m = rendezvous_pair(6);
  m.spec.local_tasks[2] = parse_formula("F[0,2] x2[0] >= 20", m.layout());
  const PlanResult r = run_iterative(m, tighten(m), make_schedule(m, SchedulePolicy::round_robin));
  EXPECT_EQ(r.status, PlanStatus::infeasible);
  EXPECT_EQ(r.infeasible_agent, 2);
}

TEST(Iterative, MinimallyViolatingAtIterationLimit) {
  MasModel m = rendezvous_pair(6);
  m.agents[1].x0 = vec({12, 0});
  const TightenedSpec ts = tighten(m);
  const PlanResult r = run_iterative(m, ts, make_schedule(m, SchedulePolicy::round_robin, 4));
  EXPECT_EQ(r.status, PlanStatus::minimally_violating);
  EXPECT_EQ(r.iterations, 4);
  // Robustness improves monotonically while still negative.
  for (std::size_t k = 1; k < r.log.size(); ++k)
    EXPECT_GE(r.log[k].robustness.at({1, 2}), r.log[k - 1].robustness.at({1, 2}) - 1e-6);
  EXPECT_GT(r.log.back().robustness.at({1, 2}), r.log.front().robustness.at({1, 2}));
}

TEST(Iterative, ParallelSweepMatchesSequential) {
  MasModel m;
  for (int i = 1; i <= 4; ++i) m.agents.push_back(planar_agent(i, vec({2.0 * i, (i % 2) * 1.0}), 0.01, 1.0));
  m.spec.N = 8;
  m.spec.theta = 0.8;
  const Layout layout = m.layout();
  m.spec.joint_tasks.emplace(Clique{1, 2}, rendezvous({1, 2}, 4, 8, 2.0, layout));
  m.spec.joint_tasks.emplace(Clique{3, 4}, rendezvous({3, 4}, 4, 8, 2.0, layout));
  const TightenedSpec ts = tighten(m);
  const Schedule s = make_schedule(m, SchedulePolicy::coloring, 6, {{1, 3}, {2, 4}});
  PlannerConfig seq;
  seq.parallel = false;
  const PlanResult a = run_iterative(m, ts, s);
  const PlanResult b = run_iterative(m, ts, s, seq);
  EXPECT_EQ(a.status, PlanStatus::satisfied);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.z.samples, b.z.samples);
}

TEST(Iterative, RandomScenariosKeepGuarantees) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const int N = std::uniform_int_distribution<int>(8, 12)(rng);
    const MasModel m = random_rendezvous(rng, N);
    const TightenedSpec ts = tighten(m);
    PlanResult r;
    ASSERT_NO_THROW(r = run_iterative(m, ts, make_schedule(m, SchedulePolicy::round_robin))) << "trial " << trial;
    for (const auto& it : r.log) EXPECT_TRUE(it.contract_violations.empty()) << "trial " << trial;
    if (r.status == PlanStatus::satisfied) EXPECT_TRUE(eval_boolean(ts.psi.conjunction(), r.z));
  }
}
