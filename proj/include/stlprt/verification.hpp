#pragma once

// Monte Carlo validation of a nominal plan under the feedback u = K e + v.
// Each sample index owns its own generator, seeded from (seed, index, agent),
// so reports do not depend on how samples are spread over threads.

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "stlprt/error.hpp"
#include "stlprt/model.hpp"
#include "stlprt/reach.hpp"
#include "stlprt/stl.hpp"
#include "stlprt/tightening.hpp"

namespace stlprt {

using InputPlan = std::map<int, std::vector<Vector>>;

inline Matrix disturbance_factor(const AgentModel& a) {
  Eigen::LLT<Matrix> llt(a.disturbance.Q);
  if (llt.info() != Eigen::Success) throw ValidationError("disturbance covariance of agent " + std::to_string(a.id) + " is not positive definite");
  return llt.matrixL();
}

/// w(0..N-1) for one agent and one sample. moment_only disturbances are drawn
/// from the Gaussian with the same covariance.
inline std::vector<Vector> sample_disturbance(const AgentModel& a, std::uint64_t seed, std::uint64_t index, int N,
                                              const Matrix* factor = nullptr) {
  const Matrix L = factor ? *factor : disturbance_factor(a);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(a.id)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> nd;
  std::vector<Vector> w;
  w.reserve(static_cast<std::size_t>(N));
  for (int t = 0; t < N; ++t) {
    Vector g(a.n());
    for (int d = 0; d < a.n(); ++d) g(d) = nd(rng);
    w.push_back(L * g);
  }
  return w;
}

struct Rollout {
  Trajectory x, e;
  InputPlan u;
  /// (agent, t) pairs with u outside the original input box.
  int input_violations = 0;
};

/// e(0) = 0, e(t+1) = (A + BK) e(t) + w(t), u = K e + v, x = z + e.
inline Rollout rollout(const MasModel& model, const InputPlan& v, const std::map<int, std::vector<Vector>>& w) {
  const Layout layout = model.layout();
  const int N = static_cast<int>(v.begin()->second.size());
  Rollout r;
  r.x = Trajectory{layout, std::vector<Vector>(static_cast<std::size_t>(N) + 1, Vector::Zero(layout.total()))};
  r.e = r.x;
  for (const auto& a : model.agents) {
    const auto& va = v.at(a.id);
    const auto& wa = w.at(a.id);
    if (static_cast<int>(va.size()) != N || static_cast<int>(wa.size()) < N) throw ValidationError("plan and disturbance lengths differ");
    const Matrix Acl = a.closed_loop();
    const int off = layout.offset(a.id);
    Vector z = a.x0, e = Vector::Zero(a.n());
    auto& ua = r.u[a.id];
    for (int t = 0; t <= N; ++t) {
      r.e.samples[static_cast<std::size_t>(t)].segment(off, a.n()) = e;
      r.x.samples[static_cast<std::size_t>(t)].segment(off, a.n()) = z + e;
      if (t == N) break;
      const Vector& vt = va[static_cast<std::size_t>(t)];
      Vector ut = a.K * e + vt;
      if (!a.input_box.contains(ut, 1e-9)) ++r.input_violations;
      ua.push_back(std::move(ut));
      z = a.A * z + a.B * vt;
      e = Acl * e + wa[static_cast<std::size_t>(t)];
    }
  }
  return r;
}

struct SampleRecord {
  std::uint64_t index = 0;
  bool satisfied = false;
  double robustness = 0.0;
};

struct VerifyReport {
  long samples = 0;
  long satisfied = 0;
  double rate = 0.0;
  /// Hoeffding lower confidence bound at level 0.99.
  double lower_bound = 0.0;
  long input_violations = 0;
  std::uint64_t seed = 0;
  /// Some agent's disturbance is moment_only and was sampled as a Gaussian.
  bool gaussian_surrogate = false;
  std::vector<SampleRecord> records;
};

inline double hoeffding_lower_bound(double rate, long n, double delta = 0.01) {
  return rate - std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

namespace detail {

// Runs body(i) for i in [0, n) on a fixed pool; results are written by index.
template <class F>
void parallel_for(long n, F&& body) {
  const long threads = std::max(1L, std::min<long>(n, static_cast<long>(std::thread::hardware_concurrency())));
  if (threads == 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (long k = 0; k < threads; ++k)
    pool.emplace_back([&, k] {
      for (long i = k; i < n; i += threads) body(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Evaluates phi on x = z + e over `samples` disturbance realisations.
inline VerifyReport estimate_satisfaction(const MasModel& model, const InputPlan& v, const Formula& phi, long samples,
                                          std::uint64_t seed) {
  if (samples <= 0) throw ValidationError("sample count must be positive");
  const int N = static_cast<int>(v.begin()->second.size());
  std::map<int, Matrix> factors;
  VerifyReport rep;
  rep.samples = samples;
  rep.seed = seed;
  for (const auto& a : model.agents) {
    factors.emplace(a.id, disturbance_factor(a));
    if (a.disturbance.kind == DisturbanceSpec::Kind::moment_only) rep.gaussian_surrogate = true;
  }
  rep.records.resize(static_cast<std::size_t>(samples));
  std::vector<int> violations(static_cast<std::size_t>(samples), 0);
  detail::parallel_for(samples, [&](long i) {
    std::map<int, std::vector<Vector>> w;
    for (const auto& a : model.agents) w[a.id] = sample_disturbance(a, seed, static_cast<std::uint64_t>(i), N, &factors.at(a.id));
    const Rollout r = rollout(model, v, w);
    auto& rec = rep.records[static_cast<std::size_t>(i)];
    rec.index = static_cast<std::uint64_t>(i);
    rec.satisfied = eval_boolean(phi, r.x);
    rec.robustness = eval_robustness(phi, r.x);
    violations[static_cast<std::size_t>(i)] = r.input_violations;
  });
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    rep.satisfied += rep.records[i].satisfied ? 1 : 0;
    rep.input_violations += violations[i];
  }
  rep.rate = static_cast<double>(rep.satisfied) / static_cast<double>(samples);
  rep.lower_bound = hoeffding_lower_bound(rep.rate, samples);
  return rep;
}

/// Fraction of error rollouts with e_i(t) in E_i(t) for every t in [0, N].
inline std::map<int, double> tube_containment(const MasModel& model, const TubeMap& tubes, long samples,
                                              std::uint64_t seed) {
  std::map<int, double> out;
  for (const auto& a : model.agents) {
    const auto& sets = tubes.at(a.id);
    const int N = static_cast<int>(sets.size()) - 1;
    const TubeMembership member(sets, direction_grid(a.n()));
    const Matrix L = disturbance_factor(a);
    const Matrix Acl = a.closed_loop();
    std::vector<char> inside(static_cast<std::size_t>(samples), 0);
    detail::parallel_for(samples, [&](long i) {
      const auto w = sample_disturbance(a, seed, static_cast<std::uint64_t>(i), N, &L);
      Vector e = Vector::Zero(a.n());
      bool ok = true;
      for (int t = 1; t <= N && ok; ++t) {
        e = Acl * e + w[static_cast<std::size_t>(t - 1)];
        ok = member.contains(t, e);
      }
      inside[static_cast<std::size_t>(i)] = ok;
    });
    out[a.id] = static_cast<double>(std::count(inside.begin(), inside.end(), 1)) / static_cast<double>(samples);
  }
  return out;
}

/// Solution of P = Acl P Acl' + Q by doubling; Acl must be Schur stable.
inline Matrix lyapunov_covariance(const Matrix& Acl, const Matrix& Q) {
  Matrix P = Q, Ak = Acl;
  for (int k = 0; k < 64; ++k) {
    const Matrix next = P + Ak * P * Ak.transpose();
    Ak = Ak * Ak;
    const bool done = (next - P).norm() <= 1e-15 * next.norm();
    P = next;
    if (done) break;
  }
  return P;
}

inline std::string format_report(const VerifyReport& r) {
  std::ostringstream os;
  os << "samples " << r.samples << "\nsatisfied " << r.satisfied << "\nrate " << format_number(r.rate)
     << "\nlower_bound_99 " << format_number(r.lower_bound) << "\ninput_violations " << r.input_violations
     << "\nseed " << r.seed << "\n";
  if (r.gaussian_surrogate) os << "note moment-only disturbances sampled from a Gaussian with the same covariance\n";
  return os.str();
}

inline std::string format_records_csv(const VerifyReport& r) {
  std::ostringstream os;
  os << "sample,satisfied,robustness\n";
  for (const auto& rec : r.records) os << rec.index << "," << (rec.satisfied ? 1 : 0) << "," << format_number(rec.robustness) << "\n";
  return os.str();
}

}  // namespace stlprt
