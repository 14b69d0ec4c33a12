// stlprt: command-line front end.
//
//   stlprt parse   --scenario s.json
//   stlprt tighten --scenario s.json [--out dir]
//   stlprt plan    --scenario s.json [--mode centralized|iterative] [--solver internal|external:<cmd>] [--kmax K] [--out dir]
//   stlprt verify  --scenario s.json [--samples n] [--seed s] [--out dir]
//   stlprt plot    --scenario s.json [--out dir]
//
// Exit codes: 0 satisfied (or verified), 1 bad input, 2 minimally violating
// (or verification bound below theta), 3 infeasible, 4 solver or internal
// failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "stlprt/stlprt.hpp"

namespace fs = std::filesystem;
using namespace stlprt;

namespace {

enum Exit { ok = 0, bad_input = 1, violating = 2, infeasible = 3, failure = 4 };

struct Options {
  std::string scenario;
  std::string mode = "iterative";
  std::string solver = "internal";
  int kmax = 0;
  long samples = 10000;
  std::uint64_t seed = 1;
  std::string out = ".";
  bool paper_radius = false;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw ValidationError("cannot read " + p.string() + " (run `plan` first)");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Scenario load(const Options& o) {
  Scenario sc = load_scenario(o.scenario);
  if (o.paper_radius) sc.tube.paper_radius = true;
  return sc;
}

MilpSolver make_solver(const std::string& choice) {
  if (choice == "internal") return internal_solver();
  const std::string prefix = "external:";
  if (choice.rfind(prefix, 0) == 0 && choice.size() > prefix.size()) {
    const std::string cmd = choice.substr(prefix.size());
    return [cmd](const MilpModel& m) { return solve_external(m, cmd); };
  }
  throw ValidationError("--solver must be internal or external:<command>");
}

int cmd_parse(const Options& o) {
  const Scenario sc = load(o);
  const auto& spec = sc.model.spec;
  std::cout << "agents " << sc.model.M() << "\nN " << spec.N << "\ntheta " << spec.theta << "\n";
  for (const auto& [id, f] : spec.local_tasks)
    std::cout << "local " << id << " horizon " << f.horizon() << " : " << to_string(to_nnf(f)) << "\n";
  for (const auto& [c, f] : spec.joint_tasks)
    std::cout << "joint " << clique_label(c) << " horizon " << f.horizon() << " : " << to_string(to_nnf(f)) << "\n";
  for (const auto& [i, j] : induced_graph(spec)) std::cout << "edge " << i << " " << j << "\n";
  return ok;
}

int cmd_tighten(const Options& o) {
  const Scenario sc = load(o);
  const ProbabilityBudget b = sc.budget();
  const TightenedSpec ts = tighten_spec(sc.model, build_tubes(sc.model, b, sc.tube));
  const std::string budget = budget_summary(b), report = tightening_report(ts);
  std::cout << budget << report;
  fs::create_directories(o.out);
  write_file(fs::path(o.out) / "budget.txt", budget);
  write_file(fs::path(o.out) / "tightening.txt", report);
  return ok;
}

int cmd_plan(const Options& o) {
  const Scenario sc = load(o);
  const ProbabilityBudget b = sc.budget();
  const TightenedSpec ts = tighten_spec(sc.model, build_tubes(sc.model, b, sc.tube));
  for (const auto& w : ts.warnings) std::cerr << "warning: " << w << "\n";
  PlannerConfig cfg;
  cfg.encoding = sc.encoding;
  cfg.solver = make_solver(o.solver);
  PlanResult r;
  if (o.mode == "centralized")
    r = plan_centralized(sc.model, ts, cfg);
  else if (o.mode == "iterative")
    r = run_iterative(sc.model, ts, make_schedule(sc.model, sc.policy, o.kmax, sc.coloring), cfg);
  else
    throw ValidationError("--mode must be centralized or iterative");

  fs::create_directories(o.out);
  write_file(fs::path(o.out) / "budget.txt", budget_summary(b));
  write_file(fs::path(o.out) / "iterations.log", format_iteration_log(r, false));
  std::cerr << format_iteration_log(r, true);
  if (r.status == PlanStatus::infeasible) {
    std::cout << "status infeasible" << (r.message.empty() ? "" : ": " + r.message) << "\n";
    return infeasible;
  }
  std::map<int, std::vector<Vector>> states;
  for (const auto& a : sc.model.agents)
    for (int t = 0; t <= sc.model.spec.N; ++t) states[a.id].push_back(r.z.agent_state(t, a.id));
  write_file(fs::path(o.out) / "trajectory.csv", trajectory_csv(sc.model, states, r.inputs));
  std::cout << "status " << to_string(r.status) << "\nrho_psi " << format_number(r.psi_robustness) << "\ncost "
            << format_number(r.total_cost) << "\n";
  return r.status == PlanStatus::satisfied ? ok : violating;
}

int cmd_verify(const Options& o) {
  const Scenario sc = load(o);
  const PlanArtifact plan = read_trajectory_csv(sc.model, read_file(fs::path(o.out) / "trajectory.csv"));
  const Formula phi = effective_spec(sc.model).conjunction();
  const VerifyReport rep = estimate_satisfaction(sc.model, plan.inputs, phi, o.samples, o.seed);
  const std::string text = format_report(rep) + "theta " + format_number(sc.model.spec.theta) + "\n";
  std::cout << text;
  write_file(fs::path(o.out) / "verification.txt", text);
  write_file(fs::path(o.out) / "samples.csv", format_records_csv(rep));
  return rep.lower_bound >= sc.model.spec.theta ? ok : violating;
}

int cmd_plot(const Options& o) {
  const Scenario sc = load(o);
  const TubeMap tubes = build_tubes(sc.model, sc.budget(), sc.tube);
  const TightenedSpec ts = tighten_spec(sc.model, tubes);
  PlotInput in;
  in.scenario = &sc;
  in.tightened = &ts;
  in.tubes = &tubes;
  const fs::path traj = fs::path(o.out) / "trajectory.csv";
  if (fs::exists(traj)) in.states = read_trajectory_csv(sc.model, read_file(traj)).states;
  fs::create_directories(o.out);
  write_file(fs::path(o.out) / "scene.svg", render_svg(in));
  std::cout << (fs::path(o.out) / "scene.svg").string() << "\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chance-constrained multi-agent STL planning"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory");
    sub->add_flag("--chebyshev-paper-radius", o.paper_radius, "Use r^2 = n/theta for Chebyshev regions");
  };
  auto* parse = app.add_subcommand("parse", "Validate a scenario and print its tasks");
  auto* tighten = app.add_subcommand("tighten", "Print the probability budget and tightened predicates");
  auto* plan = app.add_subcommand("plan", "Plan nominal trajectories");
  auto* verify = app.add_subcommand("verify", "Monte Carlo check of a stored plan");
  auto* plot = app.add_subcommand("plot", "Render the scene as SVG");
  for (auto* s : {parse, tighten, plan, verify, plot}) common(s);
  plan->add_option("--mode", o.mode, "centralized or iterative")->check(CLI::IsMember({"centralized", "iterative"}));
  plan->add_option("--solver", o.solver, "internal or external:<command>");
  plan->add_option("--kmax", o.kmax, "Iteration limit for the iterative mode")->check(CLI::PositiveNumber);
  verify->add_option("--samples", o.samples, "Number of disturbance realisations")->check(CLI::PositiveNumber);
  verify->add_option("--seed", o.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : bad_input;
  }

  try {
    if (*parse) return cmd_parse(o);
    if (*tighten) return cmd_tighten(o);
    if (*plan) return cmd_plan(o);
    if (*verify) return cmd_verify(o);
    return cmd_plot(o);
  } catch (const InputBudgetError& e) {
    std::cerr << "infeasible: " << e.what() << " (agent " << e.agent() << ", t=" << e.time() << ")\n";
    return infeasible;
  } catch (const BudgetError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return infeasible;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return bad_input;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return bad_input;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure;
  }
}
