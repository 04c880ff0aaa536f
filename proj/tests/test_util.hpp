#pragma once

#include <cstdint>
#include <vector>

#include "queuelab/linalg.hpp"
#include "queuelab/markov.hpp"
#include "queuelab/rng.hpp"

namespace testutil {

// Random row-stochastic matrix with strictly positive entries.
inline queuelab::markov::TransitionMatrix random_positive_chain(queuelab::rng::Xoshiro256& gen,
                                                                std::size_t n) {
  queuelab::linalg::Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      m(i, j) = 0.05 + gen.uniform();
      sum += m(i, j);
    }
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      m(i, j) /= sum;
      acc += m(i, j);
    }
    m(i, n - 1) = 1.0 - acc;  // exact unit row sum
  }
  return queuelab::markov::TransitionMatrix(m);
}

// Random chain with a sparse support pattern (possibly reducible).
inline queuelab::markov::TransitionMatrix random_sparse_chain(queuelab::rng::Xoshiro256& gen,
                                                              std::size_t n) {
  queuelab::linalg::Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> targets;
    for (std::size_t j = 0; j < n; ++j) {
      if (gen.uniform() < 0.4) targets.push_back(j);
    }
    if (targets.empty()) targets.push_back(gen.next() % n);
    double sum = 0.0;
    std::vector<double> w(targets.size());
    for (auto& v : w) {
      v = 0.1 + gen.uniform();
      sum += v;
    }
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < targets.size(); ++k) {
      m(i, targets[k]) = w[k] / sum;
      acc += m(i, targets[k]);
    }
    m(i, targets.back()) = 1.0 - acc;
  }
  return queuelab::markov::TransitionMatrix(m);
}

// Plain triple-loop matrix product, the oracle for the library's powering.
inline queuelab::linalg::Matrix naive_multiply(const queuelab::linalg::Matrix& a,
                                               const queuelab::linalg::Matrix& b) {
  queuelab::linalg::Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

// Depth-limited return-probability oracle: pushes the exact distribution of
// the chain started at x forward `depth` steps, absorbing mass on first
// return, and reports the mass that escaped to states which cannot lead back
// to x (exact reachability closure).
struct ReturnProbe {
  double returned;
  double escaped;
};

inline ReturnProbe enumerate_returns(const queuelab::markov::TransitionMatrix& p, std::size_t x,
                                     std::size_t depth) {
  const std::size_t n = p.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) reach[i][j] = p(i, j) > 0.0;
    reach[i][i] = true;
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
      }
    }
  }
  std::vector<double> mass(n, 0.0);
  mass[x] = 1.0;
  double returned = 0.0;
  for (std::size_t step = 0; step < depth; ++step) {
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (mass[i] == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double flow = mass[i] * p(i, j);
        if (flow == 0.0) continue;
        if (j == x) {
          returned += flow;
        } else {
          next[j] += flow;
        }
      }
    }
    mass.swap(next);
  }
  double escaped = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!reach[i][x]) escaped += mass[i];
  }
  return {returned, escaped};
}

}  // namespace testutil
