#pragma once

// Plain-text artifacts exchanged between CLI passes.
//
// trajectory.csv: one row per (t, agent) for t = 0..N, columns
//   t,agent,x0..x{n-1},u0..u{m-1}
// padded to the widest agent; inputs are empty at t = N. Numbers use
// round-trip precision so a plan read back is bit-identical.

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stlprt/error.hpp"
#include "stlprt/model.hpp"
#include "stlprt/reach.hpp"
#include "stlprt/stl.hpp"

namespace stlprt {

struct PlanArtifact {
  std::map<int, std::vector<Vector>> states;
  std::map<int, std::vector<Vector>> inputs;
};

inline std::string trajectory_csv(const MasModel& model, const std::map<int, std::vector<Vector>>& states,
                                  const std::map<int, std::vector<Vector>>& inputs) {
  int nmax = 0, mmax = 0;
  for (const auto& a : model.agents) {
    nmax = std::max(nmax, a.n());
    mmax = std::max(mmax, a.m());
  }
  std::ostringstream os;
  os << "t,agent";
  for (int d = 0; d < nmax; ++d) os << ",x" << d;
  for (int d = 0; d < mmax; ++d) os << ",u" << d;
  os << "\n";
  const int N = model.spec.N;
  for (int t = 0; t <= N; ++t)
    for (const auto& a : model.agents) {
      const Vector& z = states.at(a.id).at(static_cast<std::size_t>(t));
      os << t << "," << a.id;
      for (int d = 0; d < nmax; ++d) os << "," << (d < a.n() ? format_number(z(d)) : "");
      for (int d = 0; d < mmax; ++d) {
        os << ",";
        if (t < N && d < a.m()) os << format_number(inputs.at(a.id).at(static_cast<std::size_t>(t))(d));
      }
      os << "\n";
    }
  return os.str();
}

inline PlanArtifact read_trajectory_csv(const MasModel& model, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,agent", 0) != 0) throw ValidationError("trajectory CSV: missing header");
  int nmax = 0, mmax = 0;
  {
    std::istringstream h(line);
    std::string col;
    while (std::getline(h, col, ',')) {
      if (col.size() > 1 && col[0] == 'x') ++nmax;
      if (col.size() > 1 && col[0] == 'u') ++mmax;
    }
  }
  const int N = model.spec.N;
  PlanArtifact out;
  for (const auto& a : model.agents) {
    out.states[a.id].assign(static_cast<std::size_t>(N) + 1, Vector());
    out.inputs[a.id].assign(static_cast<std::size_t>(N), Vector());
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    while (static_cast<int>(cells.size()) < 2 + nmax + mmax) cells.emplace_back();
    const std::string where = "trajectory CSV line " + std::to_string(lineno);
    auto num = [&](const std::string& s) {
      try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw ValidationError(where + ": bad number \"" + s + "\"");
      }
    };
    const int t = static_cast<int>(num(cells[0]));
    const int id = static_cast<int>(num(cells[1]));
    if (t < 0 || t > N || !out.states.count(id)) throw ValidationError(where + ": unexpected (t, agent)");
    const AgentModel& a = model.agent(id);
    Vector z(a.n());
    for (int d = 0; d < a.n(); ++d) z(d) = num(cells[static_cast<std::size_t>(2 + d)]);
    out.states[id][static_cast<std::size_t>(t)] = z;
    if (t < N) {
      Vector u(a.m());
      for (int d = 0; d < a.m(); ++d) u(d) = num(cells[static_cast<std::size_t>(2 + nmax + d)]);
      out.inputs[id][static_cast<std::size_t>(t)] = u;
    }
  }
  for (const auto& [id, zs] : out.states)
    for (const auto& z : zs)
      if (z.size() == 0) throw ValidationError("trajectory CSV: missing rows for agent " + std::to_string(id));
  return out;
}

inline std::string budget_summary(const ProbabilityBudget& b) {
  std::ostringstream os;
  os << "theta " << format_number(b.target) << "\nN " << b.N << "\n";
  for (std::size_t i = 0; i < b.levels.size(); ++i)
    os << "agent " << i + 1 << " level " << format_number(b.levels[i]) << " tube_level " << format_number(b.tube_levels[i])
       << "\n";
  os << "joint_tube_level " << format_number(b.tube_level) << "\n";
  return os.str();
}

}  // namespace stlprt
