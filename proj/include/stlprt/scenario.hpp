#pragma once

// JSON scenario files. The schema is documented in README.md; everything the
// planner needs (agents, tasks, budget, tube and encoding options, schedule)
// plus named rectangular regions used by the formula text and by the plots.
//
// Formula strings may write $name(i) for "agent i inside region name", which
// expands to the conjunction of the region's bounds on the plotted
// coordinates of agent i.

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stlprt/coordinator.hpp"
#include "stlprt/error.hpp"
#include "stlprt/model.hpp"
#include "stlprt/reach.hpp"
#include "stlprt/stl_parser.hpp"
#include "stlprt/tightening.hpp"

namespace stlprt {

struct Region {
  std::string name;
  Vector lower, upper;
};

struct Scenario {
  MasModel model;
  std::map<std::string, Region> regions;
  /// Original formula text, after region expansion.
  std::map<int, std::string> local_text;
  std::map<Clique, std::string> joint_text;
  /// Per-agent CR levels; empty means budget_uniform.
  std::vector<double> levels;
  TubeOptions tube;
  EncodingConfig encoding;
  SchedulePolicy policy = SchedulePolicy::round_robin;
  std::vector<std::vector<int>> coloring;
  /// State coordinates drawn on the x and y axes.
  int plot_x = 0, plot_y = 1;
  std::optional<Box> workspace;

  ProbabilityBudget budget() const {
    if (levels.empty()) return budget_uniform(model.spec.theta, model.M(), model.spec.N);
    return budget_validate(levels, model.spec.theta, model.spec.N);
  }
};

namespace detail {

using nlohmann::json;

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ValidationError(where + ": expected a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ValidationError(where + ": expected an integer");
  return j.get<int>();
}

inline Vector vector_of(const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + ": expected an array of numbers");
  Vector v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix matrix_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ValidationError(where + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<int>(j.size()), static_cast<int>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ValidationError(where + ": rows have different lengths");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<int>(r), static_cast<int>(c)) = number(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

// Bounds may use null for an infinite side.
inline Box box_of(const json& j, const std::string& where) {
  auto side = [&](const char* key, double inf) {
    const json& a = field(j, key, where);
    if (!a.is_array()) throw ValidationError(where + "." + key + ": expected an array");
    Vector v(static_cast<int>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
      v(static_cast<int>(i)) = a[i].is_null() ? inf : number(a[i], where + "." + key + "[" + std::to_string(i) + "]");
    return v;
  };
  Box b{side("lower", -kInf), side("upper", kInf)};
  if (b.lower.size() != b.upper.size()) throw ValidationError(where + ": lower and upper differ in size");
  return b;
}

inline std::string expand_regions(const std::string& text, const std::map<std::string, Region>& regions, int px, int py,
                                  const std::string& where) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '$') {
      out += text[i++];
      continue;
    }
    std::size_t j = i + 1;
    while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
    const std::string name = text.substr(i + 1, j - i - 1);
    const std::size_t close = text.find(')', j);
    if (j >= text.size() || text[j] != '(' || close == std::string::npos)
      throw ValidationError(where + ": expected $region(agent) at offset " + std::to_string(i));
    const std::string agent = text.substr(j + 1, close - j - 1);
    auto it = regions.find(name);
    if (it == regions.end()) throw ValidationError(where + ": unknown region \"" + name + "\"");
    const Region& r = it->second;
    const int dims[2] = {px, py};
    std::string conj;
    for (int k = 0; k < 2; ++k) {
      const std::string s = "x" + agent + "[" + std::to_string(dims[k]) + "]";
      if (!conj.empty()) conj += " & ";
      conj += s + " >= " + format_number(r.lower(k)) + " & " + s + " <= " + format_number(r.upper(k));
    }
    out += "(" + conj + ")";
    i = close + 1;
  }
  return out;
}

}  // namespace detail

/// Builds a scenario from parsed JSON. Throws ValidationError on schema
/// problems and ParseError on malformed formula text.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::field;
  Scenario sc;
  auto& spec = sc.model.spec;
  spec.N = detail::integer(field(j, "horizon", "scenario"), "horizon");
  spec.theta = detail::number(field(j, "theta", "scenario"), "theta");

  if (j.contains("plot")) {
    const auto& p = j.at("plot");
    if (p.contains("coordinates")) {
      const auto& c = p.at("coordinates");
      if (!c.is_array() || c.size() != 2) throw ValidationError("plot.coordinates: expected two indices");
      sc.plot_x = detail::integer(c[0], "plot.coordinates[0]");
      sc.plot_y = detail::integer(c[1], "plot.coordinates[1]");
    }
    if (p.contains("workspace")) sc.workspace = detail::box_of(p.at("workspace"), "plot.workspace");
  }

  if (j.contains("regions")) {
    for (const auto& [name, r] : j.at("regions").items()) {
      const Box b = detail::box_of(r, "regions." + name);
      if (b.lower.size() != 2) throw ValidationError("regions." + name + ": regions are two-dimensional");
      sc.regions[name] = Region{name, b.lower, b.upper};
    }
  }

  const auto& agents = field(j, "agents", "scenario");
  if (!agents.is_array() || agents.empty()) throw ValidationError("agents: expected a non-empty array");
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const auto& a = agents[k];
    const std::string w = "agents[" + std::to_string(k) + "]";
    AgentModel m;
    m.id = a.contains("id") ? detail::integer(a.at("id"), w + ".id") : static_cast<int>(k) + 1;
    m.A = detail::matrix_of(field(a, "A", w), w + ".A");
    m.B = detail::matrix_of(field(a, "B", w), w + ".B");
    m.K = detail::matrix_of(field(a, "K", w), w + ".K");
    m.x0 = detail::vector_of(field(a, "x0", w), w + ".x0");
    m.input_box = detail::box_of(field(a, "input_box", w), w + ".input_box");
    if (a.contains("state_box")) m.state_box = detail::box_of(a.at("state_box"), w + ".state_box");
    const auto& d = field(a, "disturbance", w);
    m.disturbance.Q = detail::matrix_of(field(d, "Q", w + ".disturbance"), w + ".disturbance.Q");
    const std::string kind = d.value("kind", "gaussian");
    if (kind == "gaussian")
      m.disturbance.kind = DisturbanceSpec::Kind::gaussian;
    else if (kind == "moment_only")
      m.disturbance.kind = DisturbanceSpec::Kind::moment_only;
    else
      throw ValidationError(w + ".disturbance.kind: expected \"gaussian\" or \"moment_only\"");
    const int n = static_cast<int>(m.A.rows()), mi = static_cast<int>(m.B.cols());
    m.cost = CostSpec{Vector::Zero(n), Vector::Ones(mi), Vector::Zero(n)};
    if (a.contains("cost")) {
      const auto& c = a.at("cost");
      if (c.contains("state")) m.cost.state = detail::vector_of(c.at("state"), w + ".cost.state");
      if (c.contains("input")) m.cost.input = detail::vector_of(c.at("input"), w + ".cost.input");
      if (c.contains("terminal")) m.cost.terminal = detail::vector_of(c.at("terminal"), w + ".cost.terminal");
    }
    sc.model.agents.push_back(std::move(m));
  }

  const Layout layout = sc.model.layout();
  if (j.contains("local_tasks")) {
    for (const auto& [key, text] : j.at("local_tasks").items()) {
      int id = 0;
      try {
        id = std::stoi(key);
      } catch (const std::exception&) {
        throw ValidationError("local_tasks: key \"" + key + "\" is not an agent id");
      }
      if (!text.is_string()) throw ValidationError("local_tasks." + key + ": expected a formula string");
      const std::string s = detail::expand_regions(text.get<std::string>(), sc.regions, sc.plot_x, sc.plot_y, "local_tasks." + key);
      sc.local_text[id] = s;
      spec.local_tasks.emplace(id, parse_formula(s, layout));
    }
  }
  if (j.contains("joint_tasks")) {
    const auto& jt = j.at("joint_tasks");
    if (!jt.is_array()) throw ValidationError("joint_tasks: expected an array");
    for (std::size_t k = 0; k < jt.size(); ++k) {
      const std::string w = "joint_tasks[" + std::to_string(k) + "]";
      Clique c;
      for (const auto& x : field(jt[k], "clique", w)) c.push_back(detail::integer(x, w + ".clique"));
      const auto& text = field(jt[k], "formula", w);
      if (!text.is_string()) throw ValidationError(w + ".formula: expected a string");
      const std::string s = detail::expand_regions(text.get<std::string>(), sc.regions, sc.plot_x, sc.plot_y, w);
      if (spec.joint_tasks.count(c)) throw ValidationError(w + ": clique listed twice");
      sc.joint_text[c] = s;
      spec.joint_tasks.emplace(c, parse_formula(s, layout));
    }
  }

  if (j.contains("budget")) {
    const Vector l = detail::vector_of(field(j.at("budget"), "levels", "budget"), "budget.levels");
    sc.levels.assign(l.data(), l.data() + l.size());
  }
  if (j.contains("tube")) {
    const auto& t = j.at("tube");
    const std::string region = t.value("region", "automatic");
    if (region == "automatic")
      sc.tube.region = TubeOptions::Region::automatic;
    else if (region == "gaussian")
      sc.tube.region = TubeOptions::Region::gaussian;
    else if (region == "chebyshev")
      sc.tube.region = TubeOptions::Region::chebyshev;
    else
      throw ValidationError("tube.region: expected automatic, gaussian or chebyshev");
    sc.tube.paper_radius = t.value("paper_radius", false);
  }
  if (j.contains("encoding")) {
    const auto& e = j.at("encoding");
    sc.encoding.eps = e.value("eps", sc.encoding.eps);
    sc.encoding.big_m = e.value("big_m", sc.encoding.big_m);
    sc.encoding.mu_weight = e.value("mu_weight", sc.encoding.mu_weight);
    sc.encoding.robustness_cap = e.value("robustness_cap", sc.encoding.robustness_cap);
  }
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    const std::string policy = s.value("policy", "round_robin");
    if (policy == "round_robin") {
      sc.policy = SchedulePolicy::round_robin;
    } else if (policy == "coloring") {
      sc.policy = SchedulePolicy::coloring;
      for (const auto& set : field(s, "sets", "schedule")) {
        std::vector<int> members;
        for (const auto& x : set) members.push_back(detail::integer(x, "schedule.sets"));
        sc.coloring.push_back(std::move(members));
      }
    } else {
      throw ValidationError("schedule.policy: expected round_robin or coloring");
    }
  }
  validate(sc.model);
  return sc;
}

inline Scenario parse_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace stlprt
