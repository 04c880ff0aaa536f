#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "queuelab/core.hpp"
#include "queuelab/linalg.hpp"

namespace queuelab::birth_death {

// Birth-death process on {0, 1, 2, ...}: from n only moves to n-1 or n+1,
// with birth rate beta_n (n >= 0) and death rate delta_n (n >= 1).
//
// Either one of the closed-form families below or an explicit table with a
// constant-continuation tail.
class BirthDeathSpec {
 public:
  enum class Kind { kConstant, kLinear, kMServer, kCapped, kTable };

  // M/M/1-style: beta_n = beta, delta_n = delta.
  static BirthDeathSpec constant_rates(double beta, double delta) {
    return BirthDeathSpec(Kind::kConstant, beta, delta, 0);
  }
  // M/M/inf-style: beta_n = beta, delta_n = n * delta.
  static BirthDeathSpec linear_death(double beta, double delta) {
    return BirthDeathSpec(Kind::kLinear, beta, delta, 0);
  }
  // M/M/m-style: beta_n = beta, delta_n = min(n, m) * delta.
  static BirthDeathSpec m_server(double beta, double delta, std::size_t m) {
    return BirthDeathSpec(Kind::kMServer, beta, delta, m);
  }
  // M/M/m/m-style: finite state space {0..m}, beta_n = beta for n < m,
  // delta_n = n * delta.
  static BirthDeathSpec capped(double beta, double delta, std::size_t m) {
    return BirthDeathSpec(Kind::kCapped, beta, delta, m);
  }
  // Explicit rates; beyond the table both sequences continue at their last
  // value.
  static BirthDeathSpec from_table(std::vector<double> births, std::vector<double> deaths) {
    BirthDeathSpec s(Kind::kTable, 0, 0, 0);
    if (births.empty() || deaths.empty()) {
      throw ValidationError("birth/death tables must be nonempty");
    }
    s.birth_table_ = std::move(births);
    s.death_table_ = std::move(deaths);
    for (double b : s.birth_table_) s.check_rate(b, "birth");
    for (double d : s.death_table_) s.check_rate(d, "death");
    return s;
  }

  Kind kind() const { return kind_; }
  double beta() const { return beta_; }
  double delta() const { return delta_; }
  std::size_t servers() const { return m_; }

  // Largest reachable state for finite chains, nullopt for infinite ones.
  std::optional<std::size_t> max_state() const {
    if (kind_ == Kind::kCapped) return m_;
    return std::nullopt;
  }

  double birth(std::size_t n) const {
    switch (kind_) {
      case Kind::kConstant:
      case Kind::kLinear:
        return beta_;
      case Kind::kMServer:
        return beta_;
      case Kind::kCapped:
        return n < m_ ? beta_ : 0.0;
      case Kind::kTable:
        return n < birth_table_.size() ? birth_table_[n] : birth_table_.back();
    }
    return 0.0;
  }

  double death(std::size_t n) const {
    if (n == 0) return 0.0;
    switch (kind_) {
      case Kind::kConstant:
        return delta_;
      case Kind::kLinear:
        return static_cast<double>(n) * delta_;
      case Kind::kMServer:
        return static_cast<double>(std::min(n, m_)) * delta_;
      case Kind::kCapped:
        return n <= m_ ? static_cast<double>(n) * delta_ : 0.0;
      case Kind::kTable:
        return n - 1 < death_table_.size() ? death_table_[n - 1] : death_table_.back();
    }
    return 0.0;
  }

  // Closed-form normalization S = 1 + sum_n prod(beta)/prod(delta) where the
  // family admits one; nullopt means "sum numerically".
  std::optional<double> closed_form_S() const {
    switch (kind_) {
      case Kind::kConstant: {
        const double rho = beta_ / delta_;
        if (rho >= 1.0) return std::nullopt;  // divergent, let the caller detect it
        return 1.0 / (1.0 - rho);
      }
      case Kind::kLinear:
        return std::exp(beta_ / delta_);
      case Kind::kMServer: {
        const double rho = beta_ / delta_;
        const double u = rho / static_cast<double>(m_);
        if (u >= 1.0) return std::nullopt;
        double s = 0.0, term = 1.0;
        for (std::size_t n = 0; n < m_; ++n) {
          s += term;
          term *= rho / static_cast<double>(n + 1);
        }
        return s + term / (1.0 - u);  // term == rho^m / m!
      }
      case Kind::kCapped: {
        const double rho = beta_ / delta_;
        double s = 0.0, term = 1.0;
        for (std::size_t n = 0; n <= m_; ++n) {
          s += term;
          term *= rho / static_cast<double>(n + 1);
        }
        return s;
      }
      case Kind::kTable:
        return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  BirthDeathSpec(Kind kind, double beta, double delta, std::size_t m)
      : kind_(kind), beta_(beta), delta_(delta), m_(m) {
    if (kind_ != Kind::kTable) {
      check_rate(beta_, "birth");
      check_rate(delta_, "death");
      if ((kind_ == Kind::kMServer || kind_ == Kind::kCapped) && m_ < 1) {
        throw ValidationError("server count must be >= 1");
      }
    }
  }

  void check_rate(double r, const char* what) const {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw ValidationError(std::string(what) + " rate must be finite and > 0, got " +
                            std::to_string(r));
    }
  }

  Kind kind_;
  double beta_;
  double delta_;
  std::size_t m_;
  std::vector<double> birth_table_;
  std::vector<double> death_table_;
};

enum class RecurrenceVerdict { kRecurrent, kTransient, kInconclusive };

inline const char* to_string(RecurrenceVerdict v) {
  switch (v) {
    case RecurrenceVerdict::kRecurrent: return "recurrent";
    case RecurrenceVerdict::kTransient: return "transient";
    case RecurrenceVerdict::kInconclusive: return "inconclusive";
  }
  return "?";
}

struct RecurrenceResult {
  RecurrenceVerdict verdict;
  // Partial sums of prod(delta_1..delta_n / beta_1..beta_n); attached so an
  // inconclusive verdict still shows what the series was doing.
  std::vector<double> partial_sums;
};

// Recurrence <=> sum_n prod(delta/beta) = infinity. Detection is necessarily
// heuristic (the criterion is an infinite sum): the verdict is transient when
// the term ratios stay below one over the last 20 terms (the geometric tail
// then certifies convergence), recurrent when terms stay at or above
// growth_threshold, and inconclusive otherwise.
inline RecurrenceResult classify_recurrence(const BirthDeathSpec& spec, std::size_t n_max = 10000,
                                            double growth_threshold = 1e-9) {
  if (n_max < 10) throw ValidationError("n_max must be >= 10");
  constexpr std::size_t kWindow = 20;

  if (spec.max_state()) {
    // Finite chain: every state is revisited, trivially recurrent.
    return {RecurrenceVerdict::kRecurrent, {}};
  }

  RecurrenceResult out{RecurrenceVerdict::kInconclusive, {}};
  // Terms span huge ranges, so track log(term); the successive-term ratio is
  // just delta_n / beta_n.
  double log_term = 0.0, sum = 0.0;
  const double log_threshold = std::log(growth_threshold);
  std::vector<double> ratio_window, logterm_window;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double b = spec.birth(n);
    const double d = spec.death(n);
    if (!(b > 0.0) || !(d > 0.0)) {
      throw ValidationError("zero or negative rate at state " + std::to_string(n));
    }
    const double ratio = d / b;
    log_term += std::log(ratio);
    if (log_term > -700.0) sum += std::exp(log_term);
    if (out.partial_sums.size() < 64) out.partial_sums.push_back(sum);
    ratio_window.push_back(ratio);
    logterm_window.push_back(log_term);
    if (ratio_window.size() > kWindow) {
      ratio_window.erase(ratio_window.begin());
      logterm_window.erase(logterm_window.begin());
    }
    if (sum > 1e12) {
      out.verdict = RecurrenceVerdict::kRecurrent;  // divergence beyond doubt
      return out;
    }
    if (ratio_window.size() == kWindow && log_term < std::min(log_threshold, -300.0)) {
      bool decaying = true;
      for (double r : ratio_window) decaying = decaying && r < 1.0;
      if (decaying) {
        out.verdict = RecurrenceVerdict::kTransient;  // geometric tail, sum certainly finite
        return out;
      }
    }
  }

  bool ratios_below_one = true, ratios_at_least_one = true, terms_bounded_below = true;
  for (double r : ratio_window) {
    ratios_below_one = ratios_below_one && r < 1.0;
    ratios_at_least_one = ratios_at_least_one && r >= 1.0;
  }
  for (double lt : logterm_window) terms_bounded_below = terms_bounded_below && lt >= log_threshold;

  if (ratios_below_one && terms_bounded_below) {
    // Decaying but still sizable terms: refuse to guess.
    out.verdict = RecurrenceVerdict::kInconclusive;
  } else if (ratios_below_one) {
    out.verdict = RecurrenceVerdict::kTransient;
  } else if (terms_bounded_below || ratios_at_least_one) {
    out.verdict = RecurrenceVerdict::kRecurrent;
  }
  return out;
}

struct NormalizationResult {
  bool diverges = false;
  double s = 0.0;          // meaningful when !diverges
  double tail_bound = 0.0; // certified bound on the dropped tail
  std::size_t terms = 0;   // number of terms summed
};

// S = 1 + sum_{n>=1} beta_0...beta_{n-1} / (delta_1...delta_n), the
// normalization constant of the stationary measure. Families with a closed
// form skip the numeric summation.
inline NormalizationResult normalization_S(const BirthDeathSpec& spec, std::size_t n_max = 10000,
                                           double tail_tol = 1e-12) {
  if (n_max < 10) throw ValidationError("n_max must be >= 10");

  if (auto closed = spec.closed_form_S()) {
    return {false, *closed, 0.0, 0};
  }
  if (spec.kind() == BirthDeathSpec::Kind::kConstant && spec.beta() >= spec.delta()) {
    return {true, 0.0, 0.0, 0};
  }

  double term = 1.0, sum = 1.0;
  if (auto cap = spec.max_state()) {
    for (std::size_t n = 1; n <= *cap; ++n) {
      term *= spec.birth(n - 1) / spec.death(n);
      sum += term;
    }
    return {false, sum, 0.0, *cap};
  }
  constexpr std::size_t kWindow = 20;
  std::vector<double> ratio_window;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double ratio = spec.birth(n - 1) / spec.death(n);
    term *= ratio;
    sum += term;
    if (!std::isfinite(sum) || sum > 1e300) return {true, 0.0, 0.0, n};
    ratio_window.push_back(ratio);
    if (ratio_window.size() > kWindow) ratio_window.erase(ratio_window.begin());
    if (ratio_window.size() == kWindow) {
      const double worst = *std::max_element(ratio_window.begin(), ratio_window.end());
      if (worst < 1.0) {
        const double bound = term * worst / (1.0 - worst);
        if (bound <= tail_tol * sum) return {false, sum, bound, n};
      }
    }
  }
  return {true, 0.0, 0.0, n_max};
}

struct TruncatedDistribution {
  std::vector<double> pi;  // pi_0 .. pi_K
  double tail_mass = 0.0;  // certified bound on 1 - sum(pi)
};

// pi_0 = 1/S, pi_n = pi_0 * prod(beta)/prod(delta); reported truncated with a
// certified tail-mass bound. Throws if S diverges (no ergodic distribution).
inline TruncatedDistribution stationary_distribution(const BirthDeathSpec& spec,
                                                     std::size_t n_max = 10000,
                                                     double tail_tol = 1e-12) {
  const NormalizationResult norm = normalization_S(spec, n_max, tail_tol);
  if (norm.diverges) {
    throw UnstableError("normalization S diverges: process is not ergodic", 0.0,
                        StabilityVerdict::kNullRecurrent);
  }
  TruncatedDistribution out;
  const double pi0 = 1.0 / norm.s;
  out.pi.push_back(pi0);
  double term = pi0, acc = pi0;
  const std::size_t cap = spec.max_state().value_or(n_max);
  for (std::size_t n = 1; n <= cap; ++n) {
    term *= spec.birth(n - 1) / spec.death(n);
    acc += term;
    out.pi.push_back(term);
    if (!spec.max_state() && 1.0 - acc <= tail_tol) break;
  }
  out.tail_mass = std::max(0.0, 1.0 - acc);
  return out;
}

// Markov jump-process generator: nonnegative off-diagonals, nonpositive
// diagonal, zero row sums.
struct IntensityMatrix {
  linalg::Matrix lambda;
};

struct IntensityViolation {
  bool ok = true;
  std::string detail;  // first violated condition, with indices
};

inline IntensityViolation validate_intensity_matrix(const IntensityMatrix& m) {
  const auto& a = m.lambda;
  if (a.rows() != a.cols() || a.rows() == 0) {
    return {false, "matrix must be square and nonempty"};
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (a(i, i) > 0.0) {
      return {false, "diagonal entry (" + std::to_string(i) + "," + std::to_string(i) +
                         ") must be <= 0"};
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (i != j && a(i, j) < 0.0) {
        return {false, "off-diagonal entry (" + std::to_string(i) + "," + std::to_string(j) +
                           ") must be >= 0"};
      }
      sum += a(i, j);
    }
    if (std::fabs(sum) > kStochasticTol) {
      return {false, "row " + std::to_string(i) + " sums to " + std::to_string(sum) +
                         ", expected 0 within 1e-12"};
    }
  }
  return {};
}

// Tridiagonal generator truncated to n_states; the truncation row drops its
// birth rate so rows still sum to zero (reflecting boundary).
inline IntensityMatrix build_intensity_matrix(const BirthDeathSpec& spec, std::size_t n_states) {
  if (n_states < 2) throw ValidationError("intensity matrix needs n_states >= 2");
  linalg::Matrix a(n_states, n_states);
  for (std::size_t n = 0; n < n_states; ++n) {
    const bool last = n + 1 == n_states;
    const double b = last ? 0.0 : spec.birth(n);
    const double d = spec.death(n);
    if (n > 0) a(n, n - 1) = d;
    if (!last) a(n, n + 1) = b;
    a(n, n) = -(b + d);
  }
  return {std::move(a)};
}

// Embedded jump-chain step probabilities p_n = beta_n / (beta_n + delta_n).
inline double embedded_up_probability(const BirthDeathSpec& spec, std::size_t n) {
  const double b = spec.birth(n), d = spec.death(n);
  return b / (b + d);
}

}  // namespace queuelab::birth_death
