#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "queuelab/core.hpp"
#include "queuelab/linalg.hpp"

namespace queuelab::queues {

enum class QueueKind { kMM1, kMMInf, kMMm, kMMmm, kMG1 };

inline const char* to_string(QueueKind k) {
  switch (k) {
    case QueueKind::kMM1: return "M/M/1";
    case QueueKind::kMMInf: return "M/M/inf";
    case QueueKind::kMMm: return "M/M/m";
    case QueueKind::kMMmm: return "M/M/m/m";
    case QueueKind::kMG1: return "M/G/1";
  }
  return "?";
}

// Mean-value metrics shared by every model. The identities L = Lq + Ls,
// W = Wq + Ws and Little's law (with the effective arrival rate for the loss
// system) hold by construction.
struct PerformanceMetrics {
  QueueKind kind;
  double rho = 0.0;   // traffic intensity beta/delta
  double u = 0.0;     // per-server utilization rho/c (0 for infinite servers)
  double L = 0.0;     // mean number in system
  double Lq = 0.0;    // mean number waiting
  double Ls = 0.0;    // mean number in service
  double W = 0.0;     // mean time in system
  double Wq = 0.0;    // mean waiting time
  double Ws = 0.0;    // mean service time
  double pi0 = 0.0;   // empty-system probability
  double blocking = 0.0;    // Erlang-B loss probability (M/M/m/m only)
  double delay_prob = 0.0;  // Erlang-C delay probability (M/M/m only)
  double lambda_eff = 0.0;  // effective arrival rate (= beta except for loss)
};

namespace detail {

inline void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string(name) + " must be finite and > 0");
  }
}

}  // namespace detail

// M/M/1: geometric queue length, ergodic iff rho < 1.
inline PerformanceMetrics mm1_metrics(double beta, double delta) {
  detail::require_positive(beta, "beta");
  detail::require_positive(delta, "delta");
  const double rho = beta / delta;
  if (rho >= 1.0) {
    throw UnstableError("M/M/1 with rho = " + std::to_string(rho) + " has no stationary regime",
                        rho,
                        rho > 1.0 ? StabilityVerdict::kTransient : StabilityVerdict::kNullRecurrent);
  }
  PerformanceMetrics m;
  m.kind = QueueKind::kMM1;
  m.rho = rho;
  m.u = rho;
  m.L = rho / (1.0 - rho);
  m.W = 1.0 / (delta - beta);
  m.Ws = 1.0 / delta;
  m.Wq = m.W - m.Ws;
  m.Lq = rho * rho / (1.0 - rho);
  m.Ls = m.L - m.Lq;
  m.pi0 = 1.0 - rho;
  m.lambda_eff = beta;
  return m;
}

// M/M/inf: Poisson(eta) occupancy, ergodic for every eta = beta/delta.
inline PerformanceMetrics mminf_metrics(double beta, double delta) {
  detail::require_positive(beta, "beta");
  detail::require_positive(delta, "delta");
  const double eta = beta / delta;
  PerformanceMetrics m;
  m.kind = QueueKind::kMMInf;
  m.rho = eta;
  m.u = 0.0;
  m.L = eta;
  m.Lq = 0.0;
  m.Ls = eta;
  m.W = 1.0 / delta;
  m.Wq = 0.0;
  m.Ws = 1.0 / delta;
  m.pi0 = std::exp(-eta);
  m.lambda_eff = beta;
  return m;
}

namespace detail {

// Partial Erlang sum sum_{n=0}^{limit} rho^n / n! with a running-term
// recurrence (no raw factorials); also hands back the last term rho^m / m!.
inline double erlang_sum(double rho, std::size_t limit, double& last_term) {
  double term = 1.0, sum = 0.0;
  for (std::size_t n = 0; n <= limit; ++n) {
    sum += term;
    last_term = term;
    term *= rho / static_cast<double>(n + 1);
  }
  return sum;
}

}  // namespace detail

// Erlang-C delay probability C(m, rho) for an m-server queue, rho = beta/delta.
inline double erlang_c(std::size_t m, double rho) {
  detail::require_positive(rho, "rho");
  if (m < 1) throw ValidationError("server count must be >= 1");
  const double u = rho / static_cast<double>(m);
  if (u >= 1.0) {
    throw UnstableError("M/M/m with u = " + std::to_string(u) + " has no stationary regime", u,
                        u > 1.0 ? StabilityVerdict::kTransient : StabilityVerdict::kNullRecurrent);
  }
  double last = 1.0;
  const double head = detail::erlang_sum(rho, m - 1, last);
  const double rho_m = last * rho / static_cast<double>(m);  // rho^m / m!
  const double s = head + rho_m / (1.0 - u);
  return (rho_m / (1.0 - u)) / s;
}

// Erlang-B blocking probability via the normalized direct sum.
inline double erlang_b(std::size_t m, double rho) {
  detail::require_positive(rho, "rho");
  if (m < 1) throw ValidationError("server count must be >= 1");
  double last = 1.0;
  const double sum = detail::erlang_sum(rho, m, last);
  return last / sum;
}

// Erlang-B via its numerically stable recursion; internal cross-check of
// erlang_b.
inline double erlang_b_recursive(std::size_t m, double rho) {
  detail::require_positive(rho, "rho");
  double b = 1.0;
  for (std::size_t k = 1; k <= m; ++k) {
    b = rho * b / (static_cast<double>(k) + rho * b);
  }
  return b;
}

// M/M/m: requires u = beta/(m delta) < 1.
inline PerformanceMetrics mmm_metrics(double beta, double delta, std::size_t m) {
  detail::require_positive(beta, "beta");
  detail::require_positive(delta, "delta");
  if (m < 1) throw ValidationError("server count must be >= 1");
  const double rho = beta / delta;
  const double u = rho / static_cast<double>(m);
  if (u >= 1.0) {
    throw UnstableError("M/M/m with u = " + std::to_string(u) + " has no stationary regime", u,
                        u > 1.0 ? StabilityVerdict::kTransient : StabilityVerdict::kNullRecurrent);
  }
  double last = 1.0;
  const double head = detail::erlang_sum(rho, m - 1, last);
  const double rho_m = last * rho / static_cast<double>(m);  // rho^m / m!
  const double s = head + rho_m / (1.0 - u);
  const double pi0 = 1.0 / s;
  const double c = pi0 * rho_m / (1.0 - u);

  PerformanceMetrics out;
  out.kind = QueueKind::kMMm;
  out.rho = rho;
  out.u = u;
  out.pi0 = pi0;
  out.delay_prob = c;
  out.Lq = c * u / (1.0 - u);
  out.Wq = out.Lq / beta;
  out.Ws = 1.0 / delta;
  out.W = out.Wq + out.Ws;
  out.L = beta * out.W;
  out.Ls = out.L - out.Lq;
  out.lambda_eff = beta;
  return out;
}

// M/M/m/m loss system: always stable (finite state space); arrivals finding
// all m servers busy are lost with probability B(m, rho).
inline PerformanceMetrics erlang_loss_metrics(double beta, double delta, std::size_t m) {
  detail::require_positive(beta, "beta");
  detail::require_positive(delta, "delta");
  if (m < 1) throw ValidationError("server count must be >= 1");
  const double rho = beta / delta;
  const double b = erlang_b(m, rho);

  PerformanceMetrics out;
  out.kind = QueueKind::kMMmm;
  out.rho = rho;
  out.u = rho / static_cast<double>(m);
  out.blocking = b;
  out.L = rho * (1.0 - b);
  out.Ls = out.L;
  out.Lq = 0.0;
  out.W = 1.0 / delta;
  out.Ws = out.W;
  out.Wq = 0.0;
  double last = 1.0;
  out.pi0 = 1.0 / detail::erlang_sum(rho, m, last);
  out.lambda_eff = beta * (1.0 - b);  // mean admitted rate
  return out;
}

// M/G/1 via the Pollaczek-Khinchine mean formula. e_s / e_s2 are the first
// two service-time moments.
inline PerformanceMetrics mg1_metrics(double beta, double e_s, double e_s2) {
  detail::require_positive(beta, "beta");
  detail::require_positive(e_s, "E[s]");
  if (e_s2 < e_s * e_s) {
    throw ValidationError("E[s^2] < E[s]^2 would give negative service variance");
  }
  const double rho = beta * e_s;
  if (rho >= 1.0) {
    throw UnstableError("M/G/1 with rho = " + std::to_string(rho) + " has no stationary regime",
                        rho,
                        rho > 1.0 ? StabilityVerdict::kTransient : StabilityVerdict::kNullRecurrent);
  }
  PerformanceMetrics out;
  out.kind = QueueKind::kMG1;
  out.rho = rho;
  out.u = rho;
  out.L = rho + beta * beta * e_s2 / (2.0 * (1.0 - rho));
  out.W = out.L / beta;
  out.Ws = e_s;
  out.Wq = out.W - e_s;
  out.Lq = out.L - rho;
  out.Ls = rho;
  out.pi0 = 1.0 - rho;
  out.lambda_eff = beta;
  return out;
}

struct WaitingTimeCdf {
  double system;  // P(sojourn <= t)
  double queue;   // P(wait <= t)
};

// Closed-form waiting-time distributions, M/M/1 and M/M/m only.
inline WaitingTimeCdf waiting_time_cdf(QueueKind kind, double beta, double delta, std::size_t m,
                                       double t) {
  if (t < 0.0) throw ValidationError("t must be >= 0");
  if (kind == QueueKind::kMM1) {
    const PerformanceMetrics mm1 = mm1_metrics(beta, delta);
    const double w = mm1.W;
    return {1.0 - std::exp(-t / w), 1.0 - mm1.rho * std::exp(-t / w)};
  }
  if (kind == QueueKind::kMMm) {
    const PerformanceMetrics mmm = mmm_metrics(beta, delta, m);
    const double rho = mmm.rho, u = mmm.u, c = mmm.delay_prob;
    const double md = static_cast<double>(m) * delta;
    const double wq = 1.0 - c * std::exp(-md * t * (1.0 - u));
    double w;
    if (std::fabs(rho - (static_cast<double>(m) - 1.0)) < 1e-9) {
      // Both exponents coincide; the removable singularity resolves to this.
      w = 1.0 - (1.0 + c * delta * t) * std::exp(-delta * t);
    } else {
      w = 1.0 - std::exp(-delta * t) +
          c * (std::exp(-md * t * (1.0 - u)) - std::exp(-delta * t)) /
              (static_cast<double>(m) - 1.0 - rho);
    }
    return {w, wq};
  }
  throw ValidationError("waiting_time_cdf supports only M/M/1 and M/M/m");
}

// Service-time descriptor for the M/G/1 embedded chain.
struct ExponentialService {
  double delta;  // rate
};
struct DeterministicService {
  double d;  // constant service time
};
struct DiscreteService {
  std::vector<double> values;
  std::vector<double> probs;
};
using ServiceDescriptor = std::variant<ExponentialService, DeterministicService, DiscreteService>;

struct ArrivalProbs {
  std::vector<double> a;  // a_0 .. a_jmax
  double tail_bound;      // 1 - sum(a), exact for these service laws
};

namespace detail {

inline void poisson_masses(double mean, std::size_t j_max, double weight, std::vector<double>& acc) {
  double mass = std::exp(-mean);
  for (std::size_t j = 0; j <= j_max; ++j) {
    acc[j] += weight * mass;
    mass *= mean / static_cast<double>(j + 1);
  }
}

}  // namespace detail

// a_j = P(j Poisson(beta) arrivals during one service time).
inline ArrivalProbs mg1_arrival_probs(double beta, const ServiceDescriptor& service,
                                      std::size_t j_max) {
  detail::require_positive(beta, "beta");
  ArrivalProbs out;
  out.a.assign(j_max + 1, 0.0);
  if (const auto* e = std::get_if<ExponentialService>(&service)) {
    detail::require_positive(e->delta, "delta");
    // Geometric: a_j = (delta/(beta+delta)) (beta/(beta+delta))^j.
    const double p = e->delta / (beta + e->delta);
    double mass = p;
    for (std::size_t j = 0; j <= j_max; ++j) {
      out.a[j] = mass;
      mass *= 1.0 - p;
    }
  } else if (const auto* d = std::get_if<DeterministicService>(&service)) {
    detail::require_positive(d->d, "d");
    detail::poisson_masses(beta * d->d, j_max, 1.0, out.a);
  } else {
    const auto& tab = std::get<DiscreteService>(service);
    if (tab.values.size() != tab.probs.size() || tab.values.empty()) {
      throw ValidationError("discrete service table must pair values with probabilities");
    }
    double total = 0.0;
    for (double p : tab.probs) {
      if (!(p >= 0.0)) throw ValidationError("discrete service probability < 0");
      total += p;
    }
    if (std::fabs(total - 1.0) > kStochasticTol) {
      throw ValidationError("discrete service probabilities sum to " + std::to_string(total));
    }
    for (std::size_t k = 0; k < tab.values.size(); ++k) {
      detail::require_positive(tab.values[k], "service value");
      detail::poisson_masses(beta * tab.values[k], j_max, tab.probs[k], out.a);
    }
  }
  double sum = 0.0;
  for (double v : out.a) sum += v;
  out.tail_bound = std::max(0.0, 1.0 - sum);
  return out;
}

struct EmbeddedStationary {
  std::vector<double> pi;  // pi_0 .. pi_K of the departure-epoch chain
  double tail_mass;
};

// Stationary law of the M/G/1 embedded chain by the forward recursion
//   pi_{j+1} = (pi_j - pi_0 a_j - sum_{i=1..j} pi_i a_{j-i+1}) / a_0,
// started from pi_0 = 1 - rho. Missing a_j beyond the sequence are zero.
inline EmbeddedStationary mg1_embedded_stationary(const std::vector<double>& a,
                                                  std::size_t n_max) {
  if (a.empty() || !(a[0] > 0.0)) throw ValidationError("need a_0 > 0");
  double rho = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) rho += static_cast<double>(j) * a[j];
  if (rho >= 1.0) {
    throw UnstableError("embedded chain with rho = " + std::to_string(rho) + " is not ergodic",
                        rho,
                        rho > 1.0 ? StabilityVerdict::kTransient : StabilityVerdict::kNullRecurrent);
  }
  auto a_at = [&](std::size_t k) { return k < a.size() ? a[k] : 0.0; };
  EmbeddedStationary out;
  out.pi.reserve(n_max + 1);
  out.pi.push_back(1.0 - rho);
  for (std::size_t j = 0; j + 1 <= n_max; ++j) {
    double s = out.pi[j] - out.pi[0] * a_at(j);
    for (std::size_t i = 1; i <= j; ++i) s -= out.pi[i] * a_at(j - i + 1);
    out.pi.push_back(std::max(0.0, s / a[0]));
  }
  double acc = 0.0;
  for (double v : out.pi) acc += v;
  out.tail_mass = std::max(0.0, 1.0 - acc);
  return out;
}

// Two-station tandem with Poisson input and exponential servers; the joint
// stationary law factorizes into the product of the two marginal geometrics.
class TandemMetrics {
 public:
  TandemMetrics(double lambda, double mu1, double mu2) : lambda_(lambda), mu1_(mu1), mu2_(mu2) {
    detail::require_positive(lambda, "lambda");
    detail::require_positive(mu1, "mu1");
    detail::require_positive(mu2, "mu2");
    rho1_ = lambda / mu1;
    rho2_ = lambda / mu2;
    if (rho1_ >= 1.0) {
      throw UnstableError("tandem station 1 unstable (rho1 = " + std::to_string(rho1_) + ")",
                          rho1_,
                          rho1_ > 1.0 ? StabilityVerdict::kTransient
                                      : StabilityVerdict::kNullRecurrent);
    }
    if (rho2_ >= 1.0) {
      throw UnstableError("tandem station 2 unstable (rho2 = " + std::to_string(rho2_) + ")",
                          rho2_,
                          rho2_ > 1.0 ? StabilityVerdict::kTransient
                                      : StabilityVerdict::kNullRecurrent);
    }
  }

  double rho1() const { return rho1_; }
  double rho2() const { return rho2_; }

  // P(n at station 1, m at station 2).
  double joint(std::size_t n, std::size_t m) const {
    return std::pow(rho1_, static_cast<double>(n)) * (1.0 - rho1_) *
           std::pow(rho2_, static_cast<double>(m)) * (1.0 - rho2_);
  }

  double total_L() const { return lambda_ / (mu1_ - lambda_) + lambda_ / (mu2_ - lambda_); }

  // Worst absolute residual of the four balance-equation families over the
  // window n, m <= n_window.
  double balance_residual(std::size_t n_window) const {
    double worst = 0.0;
    auto upd = [&](double lhs, double rhs) { worst = std::max(worst, std::fabs(lhs - rhs)); };
    upd(lambda_ * joint(0, 0), mu2_ * joint(0, 1));
    for (std::size_t n = 1; n <= n_window; ++n) {
      upd((lambda_ + mu1_) * joint(n, 0), mu2_ * joint(n, 1) + lambda_ * joint(n - 1, 0));
    }
    for (std::size_t m = 1; m <= n_window; ++m) {
      upd((lambda_ + mu2_) * joint(0, m), mu2_ * joint(0, m + 1) + mu1_ * joint(1, m - 1));
    }
    for (std::size_t n = 1; n <= n_window; ++n) {
      for (std::size_t m = 1; m <= n_window; ++m) {
        upd((lambda_ + mu1_ + mu2_) * joint(n, m),
            mu2_ * joint(n, m + 1) + mu1_ * joint(n + 1, m - 1) + lambda_ * joint(n - 1, m));
      }
    }
    return worst;
  }

 private:
  double lambda_, mu1_, mu2_;
  double rho1_, rho2_;
};

inline TandemMetrics tandem_metrics(double lambda, double mu1, double mu2) {
  return TandemMetrics(lambda, mu1, mu2);
}

}  // namespace queuelab::queues
