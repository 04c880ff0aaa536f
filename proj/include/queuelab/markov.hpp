#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "queuelab/core.hpp"
#include "queuelab/linalg.hpp"

namespace queuelab::markov {

// Row-stochastic transition matrix over a finite labelled state set.
// Rows must sum to one within kStochasticTol; violations are rejected rather
// than renormalized, since a bad row sum usually means a modelling bug.
class TransitionMatrix {
 public:
  TransitionMatrix(std::vector<std::string> states, linalg::Matrix rows)
      : states_(std::move(states)), rows_(std::move(rows)) {
    validate();
  }

  // Convenience: states named "0", "1", ...
  explicit TransitionMatrix(linalg::Matrix rows) : rows_(std::move(rows)) {
    states_.reserve(rows_.rows());
    for (std::size_t i = 0; i < rows_.rows(); ++i) states_.push_back(std::to_string(i));
    validate();
  }

  std::size_t size() const { return rows_.rows(); }
  const std::vector<std::string>& states() const { return states_; }
  const linalg::Matrix& matrix() const { return rows_; }
  double operator()(std::size_t x, std::size_t y) const { return rows_(x, y); }

 private:
  void validate() const {
    const std::size_t n = rows_.rows();
    if (n == 0 || rows_.cols() != n) {
      throw ValidationError("transition matrix must be square with dimension >= 1");
    }
    if (states_.size() != n) {
      throw ValidationError("state label count does not match matrix dimension");
    }
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p = rows_(i, j);
        if (!(p >= 0.0)) {
          throw ValidationError("negative entry at (" + states_[i] + "," + states_[j] + ")");
        }
        sum += p;
      }
      if (std::fabs(sum - 1.0) > kStochasticTol) {
        throw ValidationError("row " + states_[i] + " sums to " + std::to_string(sum) +
                              ", expected 1 within 1e-12");
      }
    }
  }

  std::vector<std::string> states_;
  linalg::Matrix rows_;
};

// Probability vector over the states of a chain.
class Distribution {
 public:
  explicit Distribution(std::vector<double> weights) : weights_(std::move(weights)) {
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw ValidationError("distribution has a negative weight");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > kStochasticTol) {
      throw ValidationError("distribution sums to " + std::to_string(sum) +
                            ", expected 1 within 1e-12");
    }
  }

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

enum class StateKind { kRecurrent, kTransient, kAbsorbing };

inline const char* to_string(StateKind k) {
  switch (k) {
    case StateKind::kRecurrent: return "recurrent";
    case StateKind::kTransient: return "transient";
    case StateKind::kAbsorbing: return "absorbing";
  }
  return "?";
}

// Partition into communication classes plus the per-state kind. In a finite
// chain a class is recurrent exactly when it is closed.
struct StateClassification {
  std::vector<std::vector<std::size_t>> classes;  // partition of 0..n-1
  std::vector<bool> closed;                       // per class
  std::vector<StateKind> kind;                    // per state
  std::vector<std::size_t> class_of;              // state -> class index

  bool irreducible() const { return classes.size() == 1; }
};

// P^n; n = 0 yields the identity (the Kronecker-delta convention).
inline TransitionMatrix n_step_matrix(const TransitionMatrix& p, unsigned long long n) {
  return TransitionMatrix(p.states(), linalg::power(p.matrix(), n));
}

// Distribution of X_n given X_0 ~ pi0: pi0 P^n.
inline Distribution evolve_distribution(const TransitionMatrix& p, const Distribution& pi0,
                                        unsigned long long n) {
  if (pi0.size() != p.size()) throw ValidationError("initial distribution dimension mismatch");
  std::vector<double> v = pi0.weights();
  for (unsigned long long step = 0; step < n; ++step) v = linalg::multiply_left(v, p.matrix());
  return Distribution(std::move(v));
}

namespace detail {

// Tarjan strongly-connected components on the arcs {(x,y): P_xy > 0}.
// Returns component ids in reverse topological order of discovery.
inline std::vector<std::size_t> strongly_connected_components(const TransitionMatrix& p,
                                                              std::size_t& component_count) {
  const std::size_t n = p.size();
  std::vector<std::size_t> index(n, SIZE_MAX), low(n, 0), comp(n, SIZE_MAX);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t next_index = 0;
  component_count = 0;

  // Iterative DFS to avoid recursion limits on larger chains.
  struct Frame {
    std::size_t v;
    std::size_t next_child;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != SIZE_MAX) continue;
    std::vector<Frame> call_stack{{root, 0}};
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call_stack.empty()) {
      Frame& f = call_stack.back();
      bool descended = false;
      while (f.next_child < n) {
        const std::size_t w = f.next_child++;
        if (p(f.v, w) <= 0.0) continue;
        if (index[w] == SIZE_MAX) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call_stack.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[f.v] = std::min(low[f.v], index[w]);
      }
      if (descended) continue;
      if (low[f.v] == index[f.v]) {
        while (true) {
          const std::size_t w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = component_count;
          if (w == f.v) break;
        }
        ++component_count;
      }
      const std::size_t v = f.v;
      call_stack.pop_back();
      if (!call_stack.empty()) {
        low[call_stack.back().v] = std::min(low[call_stack.back().v], low[v]);
      }
    }
  }
  return comp;
}

}  // namespace detail

inline StateClassification communication_classes(const TransitionMatrix& p) {
  const std::size_t n = p.size();
  std::size_t component_count = 0;
  std::vector<std::size_t> comp = detail::strongly_connected_components(p, component_count);

  StateClassification out;
  out.classes.assign(component_count, {});
  out.closed.assign(component_count, true);
  out.kind.assign(n, StateKind::kTransient);
  out.class_of = comp;
  for (std::size_t v = 0; v < n; ++v) out.classes[comp[v]].push_back(v);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t w = 0; w < n; ++w) {
      if (p(v, w) > 0.0 && comp[w] != comp[v]) out.closed[comp[v]] = false;
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (p(v, v) == 1.0) {
      out.kind[v] = StateKind::kAbsorbing;  // singleton closed class
    } else if (out.closed[comp[v]]) {
      out.kind[v] = StateKind::kRecurrent;  // finite chain: closed <=> recurrent
    } else {
      out.kind[v] = StateKind::kTransient;
    }
  }
  return out;
}

namespace detail {

// Period of one strongly connected class: gcd of (level[u] + 1 - level[v])
// over intra-class arcs u -> v, with levels from a BFS inside the class.
inline unsigned long long class_period(const TransitionMatrix& p,
                                       const std::vector<std::size_t>& members) {
  const std::size_t n = p.size();
  std::vector<long long> level(n, -1);
  std::vector<std::size_t> queue{members.front()};
  std::vector<bool> in_class(n, false);
  for (std::size_t v : members) in_class[v] = true;
  level[members.front()] = 0;
  unsigned long long g = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t u = queue[head];
    for (std::size_t v = 0; v < n; ++v) {
      if (p(u, v) <= 0.0 || !in_class[v]) continue;
      if (level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      } else {
        const long long diff = level[u] + 1 - level[v];
        g = std::gcd(g, static_cast<unsigned long long>(diff < 0 ? -diff : diff));
      }
    }
  }
  return g == 0 ? 1 : g;
}

}  // namespace detail

struct ErgodicityVerdict {
  enum class Kind { kErgodic, kPeriodic, kReducible } kind;
  unsigned long long period = 1;  // meaningful for kPeriodic

  bool ergodic() const { return kind == Kind::kErgodic; }
};

// Ergodic <=> irreducible and aperiodic; a finite state space makes positive
// recurrence automatic.
inline ErgodicityVerdict is_ergodic(const TransitionMatrix& p) {
  const StateClassification cls = communication_classes(p);
  if (!cls.irreducible()) return {ErgodicityVerdict::Kind::kReducible, 0};
  const unsigned long long d = detail::class_period(p, cls.classes.front());
  if (d == 1) return {ErgodicityVerdict::Kind::kErgodic, 1};
  return {ErgodicityVerdict::Kind::kPeriodic, d};
}

// Unique pi with pi P = pi, sum(pi) = 1, for an irreducible chain. Solved as
// (P^T - I) x = 0 with one equation replaced by the normalization.
inline Distribution stationary_distribution(const TransitionMatrix& p) {
  const StateClassification cls = communication_classes(p);
  if (!cls.irreducible()) {
    std::string msg = "chain is reducible; communication classes: ";
    for (std::size_t c = 0; c < cls.classes.size(); ++c) {
      msg += c ? " | {" : "{";
      for (std::size_t k = 0; k < cls.classes[c].size(); ++k) {
        msg += (k ? "," : "") + p.states()[cls.classes[c][k]];
      }
      msg += "}";
      msg += cls.closed[c] ? " closed" : " open";
    }
    throw ValidationError(msg);
  }
  const std::size_t n = p.size();
  linalg::Matrix a(n, n);
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = p(j, i) - (i == j ? 1.0 : 0.0);
  }
  // Replace the last (redundant) balance equation by sum(pi) = 1.
  for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = 1.0;
  b[n - 1] = 1.0;
  std::vector<double> x = linalg::solve(a, b);
  for (double& v : x) v = std::max(v, 0.0);  // clip roundoff dust at zero
  double s = std::accumulate(x.begin(), x.end(), 0.0);
  for (double& v : x) v /= s;
  return Distribution(std::move(x));
}

}  // namespace queuelab::markov
