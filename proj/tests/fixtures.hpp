#pragma once

#include <random>
#include <string>
#include <vector>

#include "stlprt/model.hpp"
#include "stlprt/stl_parser.hpp"

namespace fixtures {

using namespace stlprt;

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

/// x(t+1) = x(t) + u(t) + w(t) in the plane, K = -0.5 I, |u|_inf <= umax.
inline AgentModel planar_agent(int id, Vector x0, double q = 0.05, double umax = 0.8) {
  AgentModel a;
  a.id = id;
  a.A = Matrix::Identity(2, 2);
  a.B = Matrix::Identity(2, 2);
  a.K = -0.5 * Matrix::Identity(2, 2);
  a.x0 = std::move(x0);
  a.input_box = Box{vec({-umax, -umax}), vec({umax, umax})};
  a.disturbance.Q = q * Matrix::Identity(2, 2);
  a.cost = CostSpec{vec({0, 0}), vec({1, 1}), vec({0, 0})};
  return a;
}

inline std::string sig(int agent, int d) { return "x" + std::to_string(agent) + "[" + std::to_string(d) + "]"; }

/// Every pair in the clique within `dist` per coordinate.
inline std::string close_together(const Clique& c, double dist) {
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j)
      for (int d = 0; d < 2; ++d) {
        if (!s.empty()) s += " & ";
        s += sig(c[i], d) + " - " + sig(c[j], d) + " <= " + std::to_string(dist) + " & " + sig(c[j], d) + " - " +
             sig(c[i], d) + " <= " + std::to_string(dist);
      }
  return s;
}

/// F[a,b] of close_together.
inline Formula rendezvous(const Clique& c, int a, int b, double dist, const Layout& layout) {
  return parse_formula("F[" + std::to_string(a) + "," + std::to_string(b) + "](" + close_together(c, dist) + ")",
                       layout);
}

/// Clique set of the ten-agent example.
inline std::vector<Clique> ten_agent_cliques() {
  return {{1, 2, 3}, {1, 5}, {3, 4}, {4, 5}, {4, 7}, {5, 6}, {6, 8}, {6, 9}, {7, 8}, {8, 10}, {9, 10}};
}

inline MasModel ten_agent_structure(int N = 10) {
  MasModel m;
  for (int i = 1; i <= 10; ++i) m.agents.push_back(planar_agent(i, vec({static_cast<double>(i), 0.0})));
  m.spec.N = N;
  m.spec.theta = 0.7;
  const Layout layout = m.layout();
  for (const auto& c : ten_agent_cliques()) m.spec.joint_tasks.emplace(c, rendezvous(c, 0, N, 1.0, layout));
  return m;
}

/// 2 or 3 planar agents with rendezvous tasks and a workspace box.
inline MasModel random_rendezvous(std::mt19937& rng, int N) {
  std::uniform_real_distribution<double> pos(-3.0, 3.0);
  const int M = std::uniform_int_distribution<int>(2, 3)(rng);
  MasModel m;
  for (int i = 1; i <= M; ++i) {
    m.agents.push_back(planar_agent(i, vec({pos(rng), pos(rng)}), 0.01, 1.0));
    m.agents.back().state_box = Box{vec({-6, -6}), vec({6, 6})};
  }
  m.spec.N = N;
  m.spec.theta = 0.8;
  const Layout layout = m.layout();
  const int a = N / 2;
  m.spec.joint_tasks.emplace(Clique{1, 2}, rendezvous({1, 2}, a, N, 2.0, layout));
  if (M == 3) {
    if (std::bernoulli_distribution(0.5)(rng))
      m.spec.joint_tasks.emplace(Clique{2, 3}, rendezvous({2, 3}, a, N, 2.0, layout));
    else
      m.spec.joint_tasks.emplace(Clique{1, 3}, rendezvous({1, 3}, 1, N, 2.5, layout));
  }
  return m;
}

}  // namespace fixtures
