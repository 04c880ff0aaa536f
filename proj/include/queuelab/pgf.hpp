#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "queuelab/core.hpp"

namespace queuelab::pgf {

// Probability generating function g(s) = sum_k p_k s^k of a nonnegative
// integer random variable. Either one of the analytic families (exact
// moments) or a truncated coefficient sequence with a certified tail mass.
class PGFSeries {
 public:
  enum class Family { kPoisson, kGeometric, kBernoulliQuadratic, kDegenerate, kSeries };

  static PGFSeries poisson(double mu) {
    if (!(mu >= 0.0)) throw ValidationError("poisson mean must be >= 0");
    PGFSeries g(Family::kPoisson);
    g.a_ = mu;
    return g;
  }

  // p_k = p (1-p)^k on {0, 1, ...}.
  static PGFSeries geometric(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw ValidationError("geometric parameter must be in (0,1]");
    PGFSeries g(Family::kGeometric);
    g.a_ = p;
    return g;
  }

  // g(s) = a0 + (1 - a0 - a2) s + a2 s^2.
  static PGFSeries bernoulli_quadratic(double a0, double a2) {
    if (!(a0 >= 0.0) || !(a2 >= 0.0) || a0 + a2 > 1.0 + kStochasticTol) {
      throw ValidationError("bernoulli-quadratic weights must be nonnegative with a0 + a2 <= 1");
    }
    PGFSeries g(Family::kBernoulliQuadratic);
    g.a_ = a0;
    g.b_ = a2;
    return g;
  }

  // Point mass at k: g(s) = s^k.
  static PGFSeries degenerate(std::size_t k) {
    PGFSeries g(Family::kDegenerate);
    g.k_ = k;
    return g;
  }

  static PGFSeries from_coefficients(std::vector<double> coeffs, double tail_mass = 0.0) {
    PGFSeries g(Family::kSeries);
    double sum = tail_mass;
    for (double c : coeffs) {
      if (!(c >= 0.0)) throw ValidationError("PGF coefficient < 0");
      sum += c;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw ValidationError("PGF coefficients + tail mass sum to " + std::to_string(sum));
    }
    g.coeffs_ = std::move(coeffs);
    g.tail_mass_ = std::max(0.0, tail_mass);
    return g;
  }

  Family family() const { return family_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  std::size_t degenerate_at() const { return k_; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  double tail_mass() const { return tail_mass_; }

  double value(double s) const {
    switch (family_) {
      case Family::kPoisson: return std::exp(a_ * (s - 1.0));
      case Family::kGeometric: return a_ / (1.0 - (1.0 - a_) * s);
      case Family::kBernoulliQuadratic: return a_ + (1.0 - a_ - b_) * s + b_ * s * s;
      case Family::kDegenerate: return std::pow(s, static_cast<double>(k_));
      case Family::kSeries: {
        double acc = 0.0;
        for (std::size_t k = coeffs_.size(); k-- > 0;) acc = acc * s + coeffs_[k];
        return acc;
      }
    }
    return 0.0;
  }

  double derivative(double s) const {
    switch (family_) {
      case Family::kPoisson: return a_ * std::exp(a_ * (s - 1.0));
      case Family::kGeometric: {
        const double q = 1.0 - a_;
        const double den = 1.0 - q * s;
        return a_ * q / (den * den);
      }
      case Family::kBernoulliQuadratic: return (1.0 - a_ - b_) + 2.0 * b_ * s;
      case Family::kDegenerate:
        return k_ == 0 ? 0.0 : static_cast<double>(k_) * std::pow(s, static_cast<double>(k_ - 1));
      case Family::kSeries: {
        double acc = 0.0;
        for (std::size_t k = coeffs_.size(); k-- > 1;) {
          acc = acc * s + static_cast<double>(k) * coeffs_[k];
        }
        return acc;
      }
    }
    return 0.0;
  }

  // First moment E[X] = g'(1); exact for the analytic families, the truncated
  // sum for series.
  double mean() const {
    switch (family_) {
      case Family::kPoisson: return a_;
      case Family::kGeometric: return (1.0 - a_) / a_;
      case Family::kBernoulliQuadratic: return (1.0 - a_ - b_) + 2.0 * b_;
      case Family::kDegenerate: return static_cast<double>(k_);
      case Family::kSeries: {
        double m = 0.0;
        for (std::size_t k = 1; k < coeffs_.size(); ++k) m += static_cast<double>(k) * coeffs_[k];
        return m;
      }
    }
    return 0.0;
  }

  // Second factorial moment g''(1) = E[X (X-1)].
  double second_factorial_moment() const {
    switch (family_) {
      case Family::kPoisson: return a_ * a_;
      case Family::kGeometric: {
        const double q = 1.0 - a_;
        return 2.0 * q * q / (a_ * a_);
      }
      case Family::kBernoulliQuadratic: return 2.0 * b_;
      case Family::kDegenerate:
        return static_cast<double>(k_) * (static_cast<double>(k_) - 1.0);
      case Family::kSeries: {
        double m = 0.0;
        for (std::size_t k = 2; k < coeffs_.size(); ++k) {
          m += static_cast<double>(k) * (static_cast<double>(k) - 1.0) * coeffs_[k];
        }
        return m;
      }
    }
    return 0.0;
  }

  bool exact() const { return family_ != Family::kSeries || tail_mass_ == 0.0; }

  // Coefficients p_0..p_K; exact truncation of the analytic families.
  std::vector<double> truncate(std::size_t count) const {
    std::vector<double> c(count, 0.0);
    switch (family_) {
      case Family::kPoisson: {
        double mass = std::exp(-a_);
        for (std::size_t k = 0; k < count; ++k) {
          c[k] = mass;
          mass *= a_ / static_cast<double>(k + 1);
        }
        break;
      }
      case Family::kGeometric: {
        double mass = a_;
        for (std::size_t k = 0; k < count; ++k) {
          c[k] = mass;
          mass *= 1.0 - a_;
        }
        break;
      }
      case Family::kBernoulliQuadratic:
        if (count > 0) c[0] = a_;
        if (count > 1) c[1] = 1.0 - a_ - b_;
        if (count > 2) c[2] = b_;
        break;
      case Family::kDegenerate:
        if (k_ < count) c[k_] = 1.0;
        break;
      case Family::kSeries:
        for (std::size_t k = 0; k < std::min(count, coeffs_.size()); ++k) c[k] = coeffs_[k];
        break;
    }
    return c;
  }

 private:
  explicit PGFSeries(Family f) : family_(f) {}

  Family family_;
  double a_ = 0.0;
  double b_ = 0.0;
  std::size_t k_ = 0;
  std::vector<double> coeffs_;
  double tail_mass_ = 0.0;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  // Upper bounds on what the dropped tail could add; zero for exact inputs.
  double mean_tail_bound = 0.0;
  double variance_tail_bound = 0.0;
};

namespace detail {

// Certified geometric decay rate of the coefficient tail, from the last
// nonzero entries; nullopt when no decay can be established.
inline std::optional<double> tail_decay_rate(const std::vector<double>& c) {
  std::vector<std::size_t> nz;
  for (std::size_t k = c.size(); k-- > 0 && nz.size() < 9;) {
    if (c[k] > 0.0) nz.push_back(k);
  }
  if (nz.size() < 2) return std::nullopt;
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < nz.size(); ++i) {
    const std::size_t hi = nz[i], lo = nz[i + 1];
    const double r = std::pow(c[hi] / c[lo], 1.0 / static_cast<double>(hi - lo));
    worst = std::max(worst, r);
  }
  if (!(worst < 1.0)) return std::nullopt;
  return worst;
}

}  // namespace detail

// Mean and variance from the one-sided derivatives at s = 1. For truncated
// series the tail contributions are bounded via the observed geometric decay
// of the kept coefficients and reported; when the declared tail mass cannot
// be reconciled with that decay, or the bounds exceed the requested
// precision, this refuses rather than underestimate.
inline Moments pgf_moments(const PGFSeries& g, double precision = 1e-6) {
  Moments m;
  m.mean = g.mean();
  const double f2 = g.second_factorial_moment();
  m.variance = f2 + m.mean - m.mean * m.mean;
  if (g.exact()) return m;

  const auto& c = g.coefficients();
  const double tau = g.tail_mass();
  if (tau <= 0.0) return m;
  const auto rate = detail::tail_decay_rate(c);
  if (!rate) {
    throw DomainError("tail mass " + std::to_string(tau) +
                      " too large to certify moments (no coefficient decay established)");
  }
  const double r = *rate;
  // The decay profile must actually be able to hold the declared tail mass.
  std::size_t k_last = c.size();
  while (k_last-- > 0 && c[k_last] <= 0.0) {
  }
  const double k0 = static_cast<double>(c.size());
  const double first_tail_cap =
      c[k_last] * std::pow(r, k0 - static_cast<double>(k_last));
  if (tau > first_tail_cap / (1.0 - r) * (1.0 + 1e-6) + 1e-300) {
    throw DomainError("declared tail mass exceeds what the observed decay admits");
  }
  // Geometric profile from position c.size() maximizes the tail moments.
  const double mean_bound = tau * (k0 + r / (1.0 - r));
  const double second_bound =
      tau * (k0 * k0 + 2.0 * k0 * r / (1.0 - r) + r * (1.0 + r) / ((1.0 - r) * (1.0 - r)));
  m.mean_tail_bound = mean_bound;
  m.variance_tail_bound = second_bound + mean_bound;
  if (m.mean_tail_bound > precision || m.variance_tail_bound > 10.0 * precision) {
    throw DomainError("tail mass too large to certify the requested precision");
  }
  return m;
}

namespace detail {

// c := c * d in the truncated polynomial ring (degree < K).
inline void poly_mul_inplace(std::vector<double>& c, const std::vector<double>& d) {
  const std::size_t k = c.size();
  std::vector<double> out(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (c[i] == 0.0) continue;
    const std::size_t lim = k - i;
    for (std::size_t j = 0; j < std::min(d.size(), lim); ++j) out[i + j] += c[i] * d[j];
  }
  c.swap(out);
}

// exp(P(z)) with p_0 = 0, via e_n = (1/n) sum_k k p_k e_{n-k}.
inline std::vector<double> poly_exp(const std::vector<double>& p, double p0_shift) {
  const std::size_t k = p.size();
  std::vector<double> e(k, 0.0);
  e[0] = std::exp(p0_shift);
  for (std::size_t n = 1; n < k; ++n) {
    double acc = 0.0;
    for (std::size_t j = 1; j <= n && j < k; ++j) acc += static_cast<double>(j) * p[j] * e[n - j];
    e[n] = acc / static_cast<double>(n);
  }
  return e;
}

inline std::vector<double> compose_coeffs(const PGFSeries& a, const PGFSeries& b, std::size_t k) {
  const std::vector<double> bc = b.truncate(k);
  switch (a.family()) {
    case PGFSeries::Family::kPoisson: {
      // exp(mu (B(z) - 1)); split the constant so poly_exp sees p_0 = 0.
      std::vector<double> p(k, 0.0);
      for (std::size_t j = 1; j < k; ++j) p[j] = a.param_a() * bc[j];
      return poly_exp(p, a.param_a() * (bc[0] - 1.0));
    }
    case PGFSeries::Family::kGeometric: {
      // p / (1 - q B(z)) by series inversion.
      const double p = a.param_a(), q = 1.0 - p;
      std::vector<double> c(k, 0.0);
      const double den = 1.0 - q * bc[0];
      c[0] = p / den;
      for (std::size_t n = 1; n < k; ++n) {
        double acc = 0.0;
        for (std::size_t j = 1; j <= n; ++j) acc += bc[j] * c[n - j];
        c[n] = q * acc / den;
      }
      return c;
    }
    case PGFSeries::Family::kBernoulliQuadratic: {
      std::vector<double> c(k, 0.0);
      c[0] = a.param_a();
      const double a1 = 1.0 - a.param_a() - a.param_b();
      for (std::size_t j = 0; j < k; ++j) c[j] += a1 * bc[j];
      std::vector<double> b2 = bc;
      poly_mul_inplace(b2, bc);
      for (std::size_t j = 0; j < k; ++j) c[j] += a.param_b() * b2[j];
      return c;
    }
    case PGFSeries::Family::kDegenerate: {
      std::vector<double> c(k, 0.0);
      c[0] = 1.0;
      for (std::size_t rep = 0; rep < a.degenerate_at(); ++rep) poly_mul_inplace(c, bc);
      return c;
    }
    case PGFSeries::Family::kSeries: {
      // Horner in the truncated ring.
      const auto& ac = a.coefficients();
      std::vector<double> c(k, 0.0);
      for (std::size_t idx = ac.size(); idx-- > 0;) {
        poly_mul_inplace(c, bc);
        c[0] += ac[idx];
      }
      return c;
    }
  }
  return {};
}

}  // namespace detail

// Coefficients of the compound law A(B(z)), truncated with a certified tail
// mass; the truncation doubles until the tail drops below tail_tol.
inline PGFSeries pgf_compose(const PGFSeries& a, const PGFSeries& b, std::size_t initial_k = 256,
                             double tail_tol = 1e-12) {
  if (b.family() == PGFSeries::Family::kDegenerate && b.degenerate_at() == 1) return a;
  for (std::size_t k = initial_k; k <= (1u << 15); k *= 2) {
    std::vector<double> c = detail::compose_coeffs(a, b, k);
    double sum = 0.0;
    for (double& v : c) {
      v = std::max(v, 0.0);  // clip roundoff dust
      sum += v;
    }
    // Both inputs are proper, so A(B(1)) = 1 and the dropped mass is 1 - sum.
    double tail = std::max(0.0, 1.0 - sum);
    if (tail <= 1e-14) tail = 0.0;  // complete to machine precision
    if (tail <= tail_tol) return PGFSeries::from_coefficients(std::move(c), tail);
  }
  throw DomainError("truncation cannot certify the requested composition tail");
}

// Smallest root of g(s) = s in [0, 1). Exists (and is unique) exactly when
// g'(1) > 1; found by monotone fixed-point iteration from 0 -- g is convex
// increasing on [0,1], so the iterates increase to the root.
inline std::optional<double> extinction_fixed_point(const PGFSeries& g, double tol = 1e-12) {
  if (g.mean() <= 1.0) return std::nullopt;
  double s = 0.0;
  for (std::size_t it = 0; it < 1000000; ++it) {
    const double next = g.value(s);
    if (std::fabs(next - s) < tol) return next;
    s = next;
  }
  throw DomainError("fixed-point iteration did not converge (invalid series?)");
}

// Root theta(w) of theta = w Ptilde(theta) on (0, 1], the transform of the
// ruin time started from capital 1. Requires the subcritical drift mean < 1.
inline double ruin_root_theta(const PGFSeries& ptilde, double w, double tol = 1e-12) {
  if (!(w > 0.0 && w <= 1.0)) throw ValidationError("w must lie in (0, 1]");
  const double mu = ptilde.mean();
  if (mu >= 1.0) {
    throw DomainError("ruin root needs mean step " + std::to_string(mu) + " < 1");
  }
  double s = 0.0;
  for (std::size_t it = 0; it < 1000000; ++it) {
    const double next = w * ptilde.value(s);
    if (std::fabs(next - s) < tol) return next;
    s = next;
  }
  throw DomainError("ruin-root iteration did not converge");
}

struct RuinMoments {
  double mean;
  double variance;
};

// First two moments of the ruin time T = min{n : L_n = 0} for the walk
// L_{n+1} = L_n + X - 1 with L_0 ~ f and X ~ ptilde (mean < 1):
//   E[T] = E[L0] / (1 - mu),  Var[T] = Var[L0]/(1-mu)^2 + sigma^2 E[L0]/(1-mu)^3.
inline RuinMoments ruin_time_moments(const PGFSeries& f, const PGFSeries& ptilde) {
  const Moments mf = pgf_moments(f);
  const Moments mp = pgf_moments(ptilde);
  if (mp.mean >= 1.0) {
    throw DomainError("ruin time needs mean step " + std::to_string(mp.mean) + " < 1");
  }
  const double drift = 1.0 - mp.mean;
  RuinMoments out;
  out.mean = mf.mean / drift;
  out.variance = mf.variance / (drift * drift) + mp.variance * mf.mean / (drift * drift * drift);
  return out;
}

}  // namespace queuelab::pgf
