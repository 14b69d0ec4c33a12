#pragma once

// 2-D scene rendering to SVG: workspace, regions with their tightened
// outlines, nominal trajectories and tube cross-sections around them.
// Output depends only on the inputs; coordinates are printed with a fixed
// number of decimals so repeated runs are byte-identical.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stlprt/reach.hpp"
#include "stlprt/scenario.hpp"
#include "stlprt/tightening.hpp"

namespace stlprt {

struct TightenedRegion {
  std::string name;
  int agent = 0;
  Polarity polarity = Polarity::positive;
  Box box;
};

/// Region outlines after tightening, one per (region, agent, polarity) whose
/// four bounding literals all appear among the shifts.
inline std::vector<TightenedRegion> tightened_regions(const Scenario& sc, const TightenedSpec& ts) {
  std::vector<TightenedRegion> out;
  const int dims[2] = {sc.plot_x, sc.plot_y};
  for (const auto& [name, r] : sc.regions)
    for (const auto& a : sc.model.agents)
      for (Polarity pol : {Polarity::positive, Polarity::negated}) {
        Box b{Vector::Zero(2), Vector::Zero(2)};
        int found = 0;
        for (int k = 0; k < 2; ++k)
          for (int side = 0; side < 2; ++side) {
            const double coef = side == 0 ? 1.0 : -1.0;
            const double offset = side == 0 ? -r.lower(k) : r.upper(k);
            for (const auto& s : ts.shifts) {
              const Predicate& p = s.original;
              if (p.polarity != pol || p.offset != offset || p.coeffs.size() != 1) continue;
              const auto& [sig, c] = *p.coeffs.begin();
              if (sig.agent != a.id || sig.dim != dims[k] || c != coef) continue;
              if (side == 0)
                b.lower(k) = -s.tightened.offset;
              else
                b.upper(k) = s.tightened.offset;
              ++found;
              break;
            }
          }
        if (found == 4) out.push_back({name, a.id, pol, b});
      }
  return out;
}

/// Outer polygon of the projection of E onto coordinates (px, py), from
/// `count` supporting lines. Collapses to the origin when E = {0}.
inline std::vector<Vector> tube_polygon(const ReachSet& E, int px, int py, int count = 48) {
  std::vector<Vector> dirs;
  std::vector<double> h;
  for (int k = 0; k < count; ++k) {
    const double a = 2.0 * std::numbers::pi * k / count;
    Vector d = Vector::Zero(E.dim());
    d(px) = std::cos(a);
    d(py) = std::sin(a);
    h.push_back(E.support(d));
    dirs.push_back((Vector(2) << std::cos(a), std::sin(a)).finished());
  }
  std::vector<Vector> poly;
  for (int k = 0; k < count; ++k) {
    const int l = (k + 1) % count;
    Matrix M(2, 2);
    M << dirs[k](0), dirs[k](1), dirs[l](0), dirs[l](1);
    poly.push_back(M.inverse() * (Vector(2) << h[static_cast<std::size_t>(k)], h[static_cast<std::size_t>(l)]).finished());
  }
  return poly;
}

struct PlotInput {
  const Scenario* scenario = nullptr;
  const TightenedSpec* tightened = nullptr;
  const TubeMap* tubes = nullptr;
  /// Nominal states per agent, z(0..N); may be empty.
  std::map<int, std::vector<Vector>> states;
  int width = 720;
};

namespace detail {

inline std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  return s == "-0.000" ? "0.000" : s;
}

inline const char* agent_color(int id) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                  "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};
  return palette[(id - 1 + 10) % 10];
}

}  // namespace detail

inline std::string render_svg(const PlotInput& in) {
  const Scenario& sc = *in.scenario;
  const int px = sc.plot_x, py = sc.plot_y;

  double x0 = kInf, y0 = kInf, x1 = -kInf, y1 = -kInf;
  auto grow = [&](double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  };
  if (sc.workspace && std::isfinite(sc.workspace->lower.minCoeff()) && std::isfinite(sc.workspace->upper.maxCoeff())) {
    grow(sc.workspace->lower(0), sc.workspace->lower(1));
    grow(sc.workspace->upper(0), sc.workspace->upper(1));
  } else {
    for (const auto& [name, r] : sc.regions) {
      grow(r.lower(0), r.lower(1));
      grow(r.upper(0), r.upper(1));
    }
    for (const auto& a : sc.model.agents) grow(a.x0(px), a.x0(py));
    for (const auto& [id, zs] : in.states)
      for (const auto& z : zs) grow(z(px), z(py));
    if (!std::isfinite(x0)) x0 = y0 = -1, x1 = y1 = 1;
    const double pad = 0.05 * std::max({x1 - x0, y1 - y0, 1.0});
    x0 -= pad, y0 -= pad, x1 += pad, y1 += pad;
  }
  const double scale = in.width / std::max(x1 - x0, 1e-9);
  const int height = static_cast<int>(std::ceil((y1 - y0) * scale));
  auto X = [&](double x) { return detail::fixed((x - x0) * scale); };
  auto Y = [&](double y) { return detail::fixed((y1 - y) * scale); };
  auto rect = [&](const Vector& lo, const Vector& hi) {
    return "x=\"" + X(lo(0)) + "\" y=\"" + Y(hi(1)) + "\" width=\"" + detail::fixed((hi(0) - lo(0)) * scale) +
           "\" height=\"" + detail::fixed((hi(1) - lo(1)) * scale) + "\"";
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << in.width << "\" height=\"" << height << "\" viewBox=\"0 0 "
     << in.width << " " << height << "\">\n";
  os << "<rect class=\"workspace\" x=\"0\" y=\"0\" width=\"" << in.width << "\" height=\"" << height
     << "\" fill=\"white\" stroke=\"#444\"/>\n";

  for (const auto& [name, r] : sc.regions) {
    os << "<rect class=\"region\" data-name=\"" << name << "\" " << rect(r.lower, r.upper)
       << " fill=\"#dddddd\" stroke=\"black\"/>\n";
    os << "<text x=\"" << X(r.lower(0)) << "\" y=\"" << Y(r.upper(1)) << "\" font-size=\"12\" dy=\"-3\">" << name << "</text>\n";
  }
  if (in.tightened) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& t : tightened_regions(sc, *in.tightened)) {
      if (t.box.empty()) continue;
      const std::string geometry = rect(t.box.lower, t.box.upper);
      if (!seen.insert({t.name, geometry}).second) continue;
      os << "<rect class=\"tightened\" data-name=\"" << t.name << "\" data-agent=\"" << t.agent << "\" " << geometry
         << " fill=\"none\" stroke=\"" << detail::agent_color(t.agent) << "\" stroke-dasharray=\"4 3\"/>\n";
    }
  }

  for (const auto& [id, zs] : in.states) {
    const char* color = detail::agent_color(id);
    if (in.tubes && in.tubes->count(id)) {
      const auto& tube = in.tubes->at(id);
      for (std::size_t t = 1; t < zs.size() && t < tube.size(); ++t) {
        os << "<polygon class=\"tube\" data-agent=\"" << id << "\" data-t=\"" << t << "\" points=\"";
        bool first = true;
        for (const auto& v : tube_polygon(tube[t], px, py)) {
          os << (first ? "" : " ") << X(zs[t](px) + v(0)) << "," << Y(zs[t](py) + v(1));
          first = false;
        }
        os << "\" fill=\"" << color << "\" fill-opacity=\"0.12\" stroke=\"none\"/>\n";
      }
    }
    os << "<polyline class=\"trajectory\" data-agent=\"" << id << "\" points=\"";
    for (std::size_t t = 0; t < zs.size(); ++t) os << (t ? " " : "") << X(zs[t](px)) << "," << Y(zs[t](py));
    os << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    for (const auto& z : zs)
      os << "<circle cx=\"" << X(z(px)) << "\" cy=\"" << Y(z(py)) << "\" r=\"2\" fill=\"" << color << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace stlprt
