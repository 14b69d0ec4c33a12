#pragma once

// Probabilistic reachable sets of the error system e(t+1) = Acl e(t) + w(t).
//
// A set is never stored as geometry. E(t) = sum_{s<t} Acl^s * CR is kept as a
// list of linear maps applied to one confidence ellipsoid and queried through
// its support function h(a) = sup_{g in E} a'g, which is additive over
// Minkowski sums and over the blocks of a Cartesian product.

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stlprt/chi2.hpp"
#include "stlprt/error.hpp"
#include "stlprt/linalg.hpp"

namespace stlprt {

/// { g : g' Q^{-1} g <= r^2 }.
class Ellipsoid {
 public:
  Ellipsoid(Matrix shape, double radius_sq) : shape_(std::move(shape)), radius_sq_(radius_sq) {
    if (!(radius_sq_ > 0.0) || !std::isfinite(radius_sq_)) throw Error("ellipsoid radius must be positive and finite");
    if (!is_symmetric_positive_definite(shape_)) throw Error("ellipsoid shape must be symmetric positive definite");
    chol_ = Eigen::LLT<Matrix>(shape_);
  }

  const Matrix& shape() const { return shape_; }
  double radius_sq() const { return radius_sq_; }
  double radius() const { return std::sqrt(radius_sq_); }
  int dim() const { return static_cast<int>(shape_.rows()); }
  /// Lower Cholesky factor L with Q = L L'.
  Matrix factor() const { return chol_.matrixL(); }

  double support(const Vector& a) const { return std::sqrt(radius_sq_ * std::max(0.0, a.dot(shape_ * a))); }

  bool contains(const Vector& g, double tol = 0.0) const {
    return g.dot(chol_.solve(g)) <= radius_sq_ * (1.0 + tol) + tol;
  }

 private:
  Matrix shape_;
  double radius_sq_;
  Eigen::LLT<Matrix> chol_;
};

/// Multivariate Chebyshev region: r^2 = n / (1 - theta), so that
/// Pr{w in E} >= theta for any zero-mean w with covariance Q.
/// paper_radius selects the alternative r^2 = n / theta.
inline Ellipsoid chebyshev_cr(const Matrix& Q, double theta, bool paper_radius = false) {
  if (!(theta > 0.0 && theta < 1.0)) throw Error("confidence level must lie in (0,1)");
  const double n = static_cast<double>(Q.rows());
  return Ellipsoid(Q, paper_radius ? n / theta : n / (1.0 - theta));
}

/// Exact Gaussian region: r^2 is the chi-squared quantile with n degrees of
/// freedom. For n = 2 this equals -2 ln(1 - theta).
inline Ellipsoid gaussian_cr(const Matrix& Q, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw Error("confidence level must lie in (0,1)");
  const int n = static_cast<int>(Q.rows());
  const double r2 = n == 2 ? -2.0 * std::log1p(-theta) : chi_squared_quantile(theta, n);
  return Ellipsoid(Q, r2);
}

/// t-step reachable set E(t) = (+)_{s=0}^{t-1} Acl^s CR.
class ReachSet {
 public:
  ReachSet(int agent, int time, std::shared_ptr<const Ellipsoid> cr, std::vector<Matrix> maps)
      : agent_(agent), time_(time), cr_(std::move(cr)), maps_(std::move(maps)) {
    shapes_.reserve(maps_.size());
    for (const auto& m : maps_) shapes_.push_back(m * cr_->shape() * m.transpose());
  }

  int agent() const { return agent_; }
  int time() const { return time_; }
  int dim() const { return cr_->dim(); }
  const Ellipsoid& region() const { return *cr_; }
  /// Acl^s for each Minkowski term (empty for E(0) = {0}).
  const std::vector<Matrix>& maps() const { return maps_; }

  /// h(a) = sum_s r * sqrt(a' Acl^s Q Acl^s' a).
  double support(const Vector& a) const {
    if (a.size() != dim()) throw Error("support: direction has wrong dimension");
    double h = 0.0;
    for (const auto& S : shapes_) h += std::sqrt(cr_->radius_sq() * std::max(0.0, a.dot(S * a)));
    return h;
  }

  /// Outer containment test: a'e <= h(a) over every direction in the grid.
  bool contains(const Vector& e, const std::vector<Vector>& directions, double tol = 1e-12) const {
    for (const auto& a : directions)
      if (a.dot(e) > support(a) + tol) return false;
    return true;
  }

 private:
  int agent_;
  int time_;
  std::shared_ptr<const Ellipsoid> cr_;
  std::vector<Matrix> maps_;
  std::vector<Matrix> shapes_;
};

/// E(0..N) for one agent. Powers of Acl are accumulated once and shared.
inline std::vector<ReachSet> prs_sequence(const Matrix& closed_loop, const Ellipsoid& cr, int N, int agent = 0) {
  if (N < 0) throw Error("prs_sequence: negative horizon");
  if (closed_loop.rows() != cr.dim()) throw Error("prs_sequence: dimension mismatch");
  auto shared = std::make_shared<const Ellipsoid>(cr);
  std::vector<Matrix> powers;
  powers.reserve(static_cast<std::size_t>(N));
  Matrix p = Matrix::Identity(cr.dim(), cr.dim());
  for (int s = 0; s < N; ++s) {
    powers.push_back(p);
    p = closed_loop * p;
  }
  std::vector<ReachSet> out;
  out.reserve(static_cast<std::size_t>(N) + 1);
  for (int t = 0; t <= N; ++t)
    out.emplace_back(agent, t, shared, std::vector<Matrix>(powers.begin(), powers.begin() + t));
  return out;
}

inline double support(const ReachSet& set, const Vector& a) { return set.support(a); }

/// Support of the Cartesian product set_1 x ... x set_k at the stacked direction a.
inline double clique_support(std::span<const ReachSet* const> sets, const Vector& a) {
  Eigen::Index total = 0;
  for (const auto* s : sets) total += s->dim();
  if (a.size() != total) throw Error("clique_support: dimension mismatch");
  double h = 0.0;
  Eigen::Index off = 0;
  for (const auto* s : sets) {
    h += s->support(a.segment(off, s->dim()));
    off += s->dim();
  }
  return h;
}

/// Deterministic direction grid for containment tests: evenly spaced angles
/// in 2-D, seeded random unit vectors otherwise.
inline std::vector<Vector> direction_grid(int dim, int count_2d = 720, int count_nd = 1000) {
  std::vector<Vector> dirs;
  if (dim == 1) {
    dirs.push_back(Vector::Constant(1, 1.0));
    dirs.push_back(Vector::Constant(1, -1.0));
  } else if (dim == 2) {
    for (int k = 0; k < count_2d; ++k) {
      const double ang = 2.0 * std::numbers::pi * k / count_2d;
      Vector a(2);
      a << std::cos(ang), std::sin(ang);
      dirs.push_back(a);
    }
  } else {
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> nd;
    for (int k = 0; k < count_nd; ++k) {
      Vector a(dim);
      for (int i = 0; i < dim; ++i) a(i) = nd(rng);
      dirs.push_back(a.normalized());
    }
    for (int i = 0; i < dim; ++i) {
      dirs.push_back(Vector::Unit(dim, i));
      dirs.push_back(-Vector::Unit(dim, i));
    }
  }
  return dirs;
}

/// Containment oracle for a whole tube E(0..N) over a fixed direction grid.
/// Support values are tabulated once, so each query is one matrix-vector
/// product.
class TubeMembership {
 public:
  TubeMembership(const std::vector<ReachSet>& tube, const std::vector<Vector>& directions, double tol = 1e-12)
      : tol_(tol) {
    if (tube.empty() || directions.empty()) throw Error("TubeMembership: empty tube or direction grid");
    const int n = tube.front().dim();
    D_.resize(static_cast<Eigen::Index>(directions.size()), n);
    for (std::size_t k = 0; k < directions.size(); ++k) D_.row(static_cast<Eigen::Index>(k)) = directions[k].transpose();
    for (const auto& set : tube) {
      Vector h(D_.rows());
      for (Eigen::Index k = 0; k < D_.rows(); ++k) h(k) = set.support(directions[static_cast<std::size_t>(k)]);
      table_.push_back(std::move(h));
    }
  }

  int horizon() const { return static_cast<int>(table_.size()) - 1; }

  bool contains(int t, const Vector& e) const {
    return ((D_ * e).array() <= table_.at(static_cast<std::size_t>(t)).array() + tol_).all();
  }

 private:
  Matrix D_;
  std::vector<Vector> table_;
  double tol_;
};

/// Per-agent CR levels theta_i, tube levels Theta_i = 1 - N (1 - theta_i),
/// and the joint tube level prod Theta_i.
struct ProbabilityBudget {
  std::vector<double> levels;
  std::vector<double> tube_levels;
  double tube_level = 0.0;
  double target = 0.0;
  int N = 0;
};

namespace detail {
inline ProbabilityBudget make_budget(std::vector<double> levels, double theta, int N) {
  ProbabilityBudget b;
  b.target = theta;
  b.N = N;
  b.tube_level = 1.0;
  for (double l : levels) {
    const double T = 1.0 - N * (1.0 - l);
    b.tube_levels.push_back(T);
    b.tube_level *= T;
  }
  b.levels = std::move(levels);
  return b;
}
}  // namespace detail

/// Rejects budgets with any Theta_i <= 0 or prod Theta_i < theta.
inline ProbabilityBudget budget_validate(const std::vector<double>& levels, double theta, int N) {
  if (levels.empty()) throw BudgetError("empty probability budget", 0.0);
  for (double l : levels)
    if (!(l > 0.0 && l < 1.0)) throw BudgetError("confidence levels must lie in (0,1)", 0.0);
  ProbabilityBudget b = detail::make_budget(levels, theta, N);
  for (std::size_t i = 0; i < b.tube_levels.size(); ++i)
    if (!(b.tube_levels[i] > 0.0))
      throw BudgetError("tube level of agent " + std::to_string(i + 1) + " is not positive", b.tube_levels[i]);
  if (b.tube_level < theta)
    throw BudgetError("tube level " + std::to_string(b.tube_level) + " is below target " + std::to_string(theta),
                      b.tube_level - theta);
  return b;
}

/// Uniform levels theta_i = 1 - (1 - theta^{1/M}) / N. Rounding is corrected
/// upward so that prod Theta_i >= theta holds in floating point.
inline ProbabilityBudget budget_uniform(double theta, int M, int N) {
  if (!(theta > 0.0 && theta < 1.0)) throw BudgetError("theta must lie in (0,1)", 0.0);
  if (M < 1 || N < 1) throw BudgetError("M and N must be positive", 0.0);
  double level = 1.0 - (1.0 - std::pow(theta, 1.0 / M)) / N;
  for (int guard = 0; guard < 64; ++guard) {
    ProbabilityBudget b = detail::make_budget(std::vector<double>(static_cast<std::size_t>(M), level), theta, N);
    if (b.tube_level >= theta) return b;
    level = std::nextafter(level, 1.0);
  }
  throw BudgetError("could not construct a uniform budget", 0.0);
}

}  // namespace stlprt
