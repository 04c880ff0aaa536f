#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "queuelab/core.hpp"
#include "queuelab/linalg.hpp"

namespace queuelab::polling {

enum class Policy { kExhaustive, kGated };

inline const char* to_string(Policy p) {
  return p == Policy::kExhaustive ? "exhaustive" : "gated";
}

// Per-queue traffic and switchover moments of a cyclic single-server polling
// system. Times are in one common unit; b2/s2 are raw second moments.
struct QueueParams {
  double lambda;  // arrival rate
  double b1;      // mean service time
  double b2;      // second service moment
  double s1;      // mean switchover out of this queue
  double s2;      // second switchover moment
};

class PollingSpec {
 public:
  explicit PollingSpec(std::vector<QueueParams> queues,
                       std::optional<double> total_switchover_m2 = std::nullopt)
      : q_(std::move(queues)), delta2_(total_switchover_m2) {
    if (q_.empty()) throw ValidationError("polling spec needs at least one queue");
    for (std::size_t i = 0; i < q_.size(); ++i) {
      const auto& p = q_[i];
      if (!(p.lambda > 0.0) || !(p.b1 > 0.0)) {
        throw ValidationError("queue " + std::to_string(i) + ": lambda and b1 must be > 0");
      }
      if (p.b2 < p.b1 * p.b1) {
        throw ValidationError("queue " + std::to_string(i) + ": b2 < b1^2");
      }
      if (!(p.s1 >= 0.0) || p.s2 < p.s1 * p.s1) {
        throw ValidationError("queue " + std::to_string(i) + ": bad switchover moments");
      }
    }
    if (!(total_mean_switchover() > 0.0)) {
      throw ValidationError("total mean switchover must be > 0");
    }
    if (delta2_ && *delta2_ < total_mean_switchover() * total_mean_switchover()) {
      throw ValidationError("total switchover second moment below its squared mean");
    }
  }

  std::size_t size() const { return q_.size(); }
  const QueueParams& queue(std::size_t i) const { return q_[i]; }

  double rho_i(std::size_t i) const { return q_[i].lambda * q_[i].b1; }
  double rho() const {
    double r = 0.0;
    for (std::size_t i = 0; i < q_.size(); ++i) r += rho_i(i);
    return r;
  }
  double total_mean_switchover() const {
    double d = 0.0;
    for (const auto& p : q_) d += p.s1;
    return d;
  }

  // Second moment of the total per-cycle switchover time. An explicit value
  // wins; otherwise the legs are treated as independent:
  //   delta2 = sum var(s_i) + delta^2.
  double total_switchover_m2() const {
    if (delta2_) return *delta2_;
    const double d = total_mean_switchover();
    double v = 0.0;
    for (const auto& p : q_) v += p.s2 - p.s1 * p.s1;
    return v + d * d;
  }

  void require_stable() const {
    const double r = rho();
    if (r >= 1.0) {
      throw UnstableError("polling system with rho = " + std::to_string(r) + " is unstable", r,
                          r > 1.0 ? StabilityVerdict::kTransient
                                  : StabilityVerdict::kNullRecurrent);
    }
  }

 private:
  std::vector<QueueParams> q_;
  std::optional<double> delta2_;
};

// Station-time covariances r_ij, where r_ij pairs the station time of queue i
// with the most recent station time of queue j (same cycle for j < i, the
// previous cycle for j > i). Station time of queue i:
//   exhaustive: from the server leaving queue i-1 to it leaving queue i;
//   gated:      from the server reaching queue i to it reaching queue i+1.
struct CovarianceMatrix {
  linalg::Matrix r;
  Policy policy;
  double residual;  // max-norm residual of the assembled linear system
};

namespace detail {

// Equation for r_ij, j != i: conditioning the later station time on the
// window of station times it regenerates from gives
//   r_ij = c_i * [ r_jj + sum_{m earlier than j} r_jm + sum_{m later} r_mj ]
// with c_i = rho_i/(1-rho_i) (exhaustive; window excludes i) or rho_i (gated;
// window starts at i's own previous station time). Positions are measured
// along the server's cyclic order.
inline void add_offdiagonal_terms(std::vector<double>& row, std::size_t n, std::size_t i,
                                  std::size_t j, double coeff, bool include_self) {
  const std::size_t pj = (j + n - i) % n;  // j's position in i's window
  const std::size_t first = include_self ? 0 : 1;
  for (std::size_t pos = first; pos < n; ++pos) {
    const std::size_t m = (i + pos) % n;
    if (m == j) {
      row[j * n + j] -= coeff;  // r_jj
    } else if (pos < pj) {
      row[j * n + m] -= coeff;  // theta_m earlier than theta_j
    } else {
      row[m * n + j] -= coeff;  // theta_m later than theta_j
    }
  }
}

}  // namespace detail

// Assembles and solves the N^2-equation linear system for the station-time
// covariances. The per-policy diagonal constants come from the variance
// decomposition of one station time given its regeneration window.
inline CovarianceMatrix solve_station_covariances(const PollingSpec& spec, Policy policy) {
  spec.require_stable();
  const std::size_t n = spec.size();
  const double rho = spec.rho();
  const double delta = spec.total_mean_switchover();
  const double mean_cycle = delta / (1.0 - rho);

  linalg::Matrix a(n * n, n * n);
  std::vector<double> b(n * n, 0.0);
  std::vector<double> row(n * n);

  for (std::size_t i = 0; i < n; ++i) {
    const double rho_i = spec.rho_i(i);
    const double gamma = rho_i / (1.0 - rho_i);
    const QueueParams& qi = spec.queue(i);
    const QueueParams& prev = spec.queue((i + n - 1) % n);
    const double prev_var = prev.s2 - prev.s1 * prev.s1;

    for (std::size_t j = 0; j < n; ++j) {
      std::fill(row.begin(), row.end(), 0.0);
      double rhs = 0.0;
      row[i * n + j] = 1.0;
      if (i == j) {
        if (policy == Policy::kExhaustive) {
          // Var(station) = var(s_{i-1})/(1-rho_i)^2
          //              + E[I_i] lambda_i b2_i/(1-rho_i)^3
          //              + gamma_i * sum_{j!=i} r_ij.
          const double mean_intervisit = (1.0 - rho_i) * mean_cycle;
          rhs = prev_var / ((1.0 - rho_i) * (1.0 - rho_i)) +
                mean_intervisit * qi.lambda * qi.b2 /
                    ((1.0 - rho_i) * (1.0 - rho_i) * (1.0 - rho_i));
          for (std::size_t k = 0; k < n; ++k) {
            if (k != i) row[i * n + k] -= gamma;
          }
        } else {
          // Var(station) = var(s_i) + lambda_i b2_i E[C]
          //              + rho_i sum_{j!=i} r_ij + rho_i^2 sum_m r_mi.
          const double own_var = qi.s2 - qi.s1 * qi.s1;
          rhs = own_var + qi.lambda * qi.b2 * mean_cycle;
          for (std::size_t k = 0; k < n; ++k) {
            if (k != i) row[i * n + k] -= rho_i;
            row[k * n + i] -= rho_i * rho_i;
          }
        }
      } else {
        const double coeff = policy == Policy::kExhaustive ? gamma : rho_i;
        detail::add_offdiagonal_terms(row, n, i, j, coeff,
                                      /*include_self=*/policy == Policy::kGated);
      }
      for (std::size_t k = 0; k < n * n; ++k) a(i * n + j, k) = row[k];
      b[i * n + j] = rhs;
    }
  }

  std::vector<double> x;
  try {
    x = linalg::solve(a, b);
  } catch (const DomainError& e) {
    throw DomainError("station-covariance system is singular: " + std::string(e.what()));
  }
  CovarianceMatrix out{linalg::Matrix(n, n), policy, linalg::residual_inf(a, x, b)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.r(i, j) = x[i * n + j];
  }
  return out;
}

struct IntervisitMoments {
  std::vector<double> mean;    // E[I_i]
  std::vector<double> second;  // E[I_i^2]
};

// Intervisit moments for the exhaustive policy. The second moment pulls in
// the (i-1) switchover moments with cyclic wraparound.
inline IntervisitMoments intervisit_moments(const PollingSpec& spec, const CovarianceMatrix& cov) {
  if (cov.policy != Policy::kExhaustive) {
    throw ValidationError("intervisit moments need exhaustive-policy covariances");
  }
  spec.require_stable();
  const std::size_t n = spec.size();
  const double mean_cycle = spec.total_mean_switchover() / (1.0 - spec.rho());
  IntervisitMoments out;
  out.mean.resize(n);
  out.second.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double rho_i = spec.rho_i(i);
    const QueueParams& prev = spec.queue((i + n - 1) % n);
    out.mean[i] = (1.0 - rho_i) * mean_cycle;
    double cross = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) cross += cov.r(i, j);
    }
    out.second[i] = prev.s2 - prev.s1 * prev.s1 + (1.0 - rho_i) / rho_i * cross +
                    out.mean[i] * out.mean[i];
  }
  return out;
}

struct CycleMoments {
  double mean;                 // E[C], common to all queues under cyclic routing
  std::vector<double> second;  // E[C_i^2]
};

// Cycle moments for the gated policy: Var(C_i) decomposes into the row-i
// cross covariances scaled by 1/rho_i plus the column-i sum.
inline CycleMoments gated_cycle_moments(const PollingSpec& spec, const CovarianceMatrix& cov) {
  if (cov.policy != Policy::kGated) {
    throw ValidationError("cycle moments need gated-policy covariances");
  }
  spec.require_stable();
  const std::size_t n = spec.size();
  CycleMoments out;
  out.mean = spec.total_mean_switchover() / (1.0 - spec.rho());
  out.second.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double row_cross = 0.0, column = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row_cross += cov.r(i, j);
      column += cov.r(j, i);
    }
    out.second[i] = row_cross / spec.rho_i(i) + column + out.mean * out.mean;
  }
  return out;
}

// Mean waiting time per queue.
//   exhaustive: E W_i = E[I_i^2]/(2 E[I_i]) + lambda_i b2_i / (2 (1 - rho_i))
//   gated:      E W_i = (1 + rho_i) E[C_i^2] / (2 E[C])
inline std::vector<double> mean_waits(const PollingSpec& spec, Policy policy) {
  spec.require_stable();
  const std::size_t n = spec.size();
  const CovarianceMatrix cov = solve_station_covariances(spec, policy);
  std::vector<double> w(n);
  if (policy == Policy::kExhaustive) {
    const IntervisitMoments iv = intervisit_moments(spec, cov);
    for (std::size_t i = 0; i < n; ++i) {
      const QueueParams& q = spec.queue(i);
      w[i] = iv.second[i] / (2.0 * iv.mean[i]) +
             q.lambda * q.b2 / (2.0 * (1.0 - spec.rho_i(i)));
    }
  } else {
    const CycleMoments cm = gated_cycle_moments(spec, cov);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = (1.0 + spec.rho_i(i)) * cm.second[i] / (2.0 * cm.mean);
    }
  }
  return w;
}

// Pseudo-conservation law residual: sum rho_i E W_i minus the closed-form
// right-hand side. The last bracket flips sign between the policies
// (rho^2 - sum rho_i^2 exhaustive, rho^2 + sum rho_i^2 gated). Exact waits
// drive this to zero; it is the sharpest internal consistency check the
// covariance solver has.
inline double pseudo_conservation_residual(const PollingSpec& spec,
                                           const std::vector<double>& waits, Policy policy) {
  if (waits.size() != spec.size()) throw ValidationError("waits/spec size mismatch");
  const double rho = spec.rho();
  const double delta = spec.total_mean_switchover();
  const double delta2 = spec.total_switchover_m2();

  double lhs = 0.0, service_term = 0.0, rho_sq = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const QueueParams& q = spec.queue(i);
    lhs += spec.rho_i(i) * waits[i];
    service_term += q.lambda * q.b2;
    rho_sq += spec.rho_i(i) * spec.rho_i(i);
  }
  const double bracket = policy == Policy::kExhaustive ? rho * rho - rho_sq : rho * rho + rho_sq;
  const double rhs = rho * service_term / (2.0 * (1.0 - rho)) + rho * delta2 / (2.0 * delta) +
                     delta * bracket / (2.0 * (1.0 - rho));
  return lhs - rhs;
}

// Closed-form approximation of the exhaustive waits (Takagi): a product of
// two prefactors and a workload bracket with Delta^2 = sum s1_i^2. Reported
// as approximate; it is not expected to match the exact values.
inline std::vector<double> takagi_approx_waits(const PollingSpec& spec) {
  spec.require_stable();
  const std::size_t n = spec.size();
  const double rho = spec.rho();
  const double delta = spec.total_mean_switchover();

  double service_term = 0.0, rho_sq = 0.0, delta_sq = 0.0, rho_bracket = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const QueueParams& q = spec.queue(i);
    service_term += q.lambda * q.b2;
    rho_sq += spec.rho_i(i) * spec.rho_i(i);
    delta_sq += q.s1 * q.s1;
    rho_bracket += spec.rho_i(i) * (1.0 + spec.rho_i(i));
  }
  const double bracket = rho * service_term / (2.0 * (1.0 - rho)) +
                         rho * delta_sq / (2.0 * delta) +
                         delta * rho_bracket / (2.0 * (1.0 - rho));
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double den = 1.0 - rho - spec.queue(i).lambda * delta;
    if (!(den > 0.0)) {
      throw DomainError("approximation denominator 1 - rho - lambda_i delta <= 0 at queue " +
                        std::to_string(i));
    }
    w[i] = (1.0 - rho + spec.rho_i(i)) / den * (1.0 - rho) / (rho * (1.0 - rho) + rho_sq) *
           bracket;
  }
  return w;
}

// Discrete-time (slotted) cyclic polling model: mu_i is the expected work a
// slot brings to queue i, r_i the mean switchover slots out of queue i.
class DiscretePollingSpec {
 public:
  DiscretePollingSpec(std::vector<double> mu, std::vector<double> r)
      : mu_(std::move(mu)), r_(std::move(r)) {
    if (mu_.empty() || mu_.size() != r_.size()) {
      throw ValidationError("discrete polling spec needs matching mu/r lists");
    }
    double total = 0.0;
    for (double m : mu_) {
      if (!(m > 0.0 && m < 1.0)) throw ValidationError("each mu_i must lie in (0,1)");
      total += m;
    }
    for (double rv : r_) {
      if (!(rv >= 0.0)) throw ValidationError("switchover slots must be >= 0");
    }
    if (total >= 1.0) {
      throw UnstableError("discrete polling with mu = " + std::to_string(total) + " is unstable",
                          total,
                          total > 1.0 ? StabilityVerdict::kTransient
                                      : StabilityVerdict::kNullRecurrent);
    }
  }

  std::size_t size() const { return mu_.size(); }
  double mu(std::size_t i) const { return mu_[i]; }
  double r(std::size_t i) const { return r_[i]; }
  double total_mu() const {
    double t = 0.0;
    for (double m : mu_) t += m;
    return t;
  }
  double total_r() const {
    double t = 0.0;
    for (double rv : r_) t += rv;
    return t;
  }

 private:
  std::vector<double> mu_;
  std::vector<double> r_;
};

// Diagonal station-time derivatives f_i(i) from the fixed-point system
//   f_i(i) = mu_i [ r + sum_{k != i} f_k(k) / (1 - mu_k) ].
// For N = 2 this reproduces f_1(1) = r mu_1 (1 - mu_1)/(1 - mu).
inline std::vector<double> cyclic_station_moments(const DiscretePollingSpec& spec) {
  const std::size_t n = spec.size();
  const double r = spec.total_r();
  linalg::Matrix a(n, n);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) a(i, k) = -spec.mu(i) / (1.0 - spec.mu(k));
    }
    b[i] = spec.mu(i) * r;
  }
  return linalg::solve(a, b);
}

// Cross derivatives f_i(j), i != j, walking the server path from queue j
// forward to queue i:
//   f_i(j) = mu_j [ (r/(1-mu)) * sum of mu over the strictly-between queues
//                   + sum of r over the legs from j to i ].
// Adjacent queues (i = j+1) collapse to f_{i}(i-1) = r_{i-1} mu_{i-1}.
inline linalg::Matrix cross_station_moments(const DiscretePollingSpec& spec,
                                            const std::vector<double>& f_diag) {
  const std::size_t n = spec.size();
  if (f_diag.size() != n) throw ValidationError("f_diag size mismatch");
  const double r = spec.total_r();
  const double mu = spec.total_mu();
  linalg::Matrix f(n, n);
  for (std::size_t i = 0; i < n; ++i) f(i, i) = f_diag[i];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const std::size_t len = (i + n - j) % n;  // path length j -> i, in [1, n-1]
      double mu_between = 0.0, r_legs = 0.0;
      for (std::size_t step = 1; step < len; ++step) mu_between += spec.mu((j + step) % n);
      for (std::size_t step = 0; step < len; ++step) r_legs += spec.r((j + step) % n);
      f(i, j) = spec.mu(j) * (r / (1.0 - mu) * mu_between + r_legs);
    }
  }
  return f;
}

}  // namespace queuelab::polling
