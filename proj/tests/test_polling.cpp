#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "queuelab/polling.hpp"
#include "queuelab/rng.hpp"

using namespace queuelab;
using polling::CovarianceMatrix;
using polling::DiscretePollingSpec;
using polling::Policy;
using polling::PollingSpec;
using polling::QueueParams;

namespace {

// The standard single-case parameters used throughout: lambda 1/4, unit-mean
// exponential-like service (b2 = 2), deterministic half-unit switchover.
QueueParams base_queue() { return {0.25, 1.0, 2.0, 0.5, 0.25}; }

PollingSpec vacation_spec() { return PollingSpec({base_queue()}); }

PollingSpec symmetric_pair() { return PollingSpec({base_queue(), base_queue()}); }

PollingSpec random_stable_spec(rng::Xoshiro256& gen, std::size_t n, double rho_target) {
  std::vector<QueueParams> qs;
  for (std::size_t i = 0; i < n; ++i) {
    QueueParams q;
    q.lambda = 0.05 + 0.3 * gen.uniform();
    q.b1 = 0.2 + 1.3 * gen.uniform();
    const double cv2_service = 0.25 + 2.25 * gen.uniform();
    q.b2 = q.b1 * q.b1 * (1.0 + cv2_service);
    q.s1 = 0.1 + 0.9 * gen.uniform();
    const double cv2_switch = 1.5 * gen.uniform();
    q.s2 = q.s1 * q.s1 * (1.0 + cv2_switch);
    qs.push_back(q);
  }
  double rho = 0.0;
  for (const auto& q : qs) rho += q.lambda * q.b1;
  for (auto& q : qs) q.lambda *= rho_target / rho;
  return PollingSpec(qs);
}

}  // namespace

TEST_CASE("single-queue station variance closed forms") {
  // Exhaustive: var(s)/(1-rho)^2 + E[I] lambda b2/(1-rho)^3 with E[I] = s1.
  const auto exh = polling::solve_station_covariances(vacation_spec(), Policy::kExhaustive);
  CHECK(exh.r(0, 0) == Catch::Approx(16.0 / 27.0).margin(1e-12));
  CHECK(exh.residual <= 1e-9);

  // Gated: lambda b2 E[C]/(1 - rho^2) with E[C] = 2/3.
  const auto gated = polling::solve_station_covariances(vacation_spec(), Policy::kGated);
  CHECK(gated.r(0, 0) == Catch::Approx(0.355555555555556).margin(1e-12));
  CHECK(gated.residual <= 1e-9);
}

TEST_CASE("symmetric specs give symmetric covariances") {
  for (Policy policy : {Policy::kExhaustive, Policy::kGated}) {
    const auto cov = polling::solve_station_covariances(symmetric_pair(), policy);
    CHECK(cov.r(0, 0) == Catch::Approx(cov.r(1, 1)).margin(1e-12));
    CHECK(cov.r(0, 1) == Catch::Approx(cov.r(1, 0)).margin(1e-12));
  }
  // Three symmetric queues: invariance under cyclic rotation.
  PollingSpec trio({base_queue(), base_queue(), base_queue()});
  const auto cov = polling::solve_station_covariances(trio, Policy::kExhaustive);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t gap_i = (i + 1) % 3, gap_j = (j + 1) % 3;
      REQUIRE(cov.r(i, j) == Catch::Approx(cov.r(gap_i, gap_j)).margin(1e-11));
    }
  }
}

TEST_CASE("intervisit moments") {
  const auto spec = vacation_spec();
  const auto cov = polling::solve_station_covariances(spec, Policy::kExhaustive);
  const auto iv = polling::intervisit_moments(spec, cov);
  CHECK(iv.mean[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(iv.second[0] == Catch::Approx(0.25).margin(1e-12));

  const auto pair = symmetric_pair();
  const auto cov2 = polling::solve_station_covariances(pair, Policy::kExhaustive);
  const auto iv2 = polling::intervisit_moments(pair, cov2);
  CHECK(iv2.mean[0] == Catch::Approx(1.5).margin(1e-12));

  // E I_i = (1 - rho_i) E C for every stable spec.
  rng::Xoshiro256 gen(31);
  for (int rep = 0; rep < 10; ++rep) {
    const auto s = random_stable_spec(gen, 1 + gen.next() % 5, 0.1 + 0.7 * gen.uniform());
    const auto c = polling::solve_station_covariances(s, Policy::kExhaustive);
    const auto m = polling::intervisit_moments(s, c);
    const double mean_cycle = s.total_mean_switchover() / (1.0 - s.rho());
    for (std::size_t i = 0; i < s.size(); ++i) {
      REQUIRE(m.mean[i] == Catch::Approx((1.0 - s.rho_i(i)) * mean_cycle).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS(
      polling::intervisit_moments(spec, polling::solve_station_covariances(spec, Policy::kGated)),
      ValidationError);
}

TEST_CASE("mean waits for the pinned cases") {
  const auto exh = polling::mean_waits(vacation_spec(), Policy::kExhaustive);
  CHECK(exh[0] == Catch::Approx(7.0 / 12.0).margin(1e-10));

  const auto gated = polling::mean_waits(vacation_spec(), Policy::kGated);
  CHECK(gated[0] == Catch::Approx(0.75).margin(1e-10));

  const auto pair = polling::mean_waits(symmetric_pair(), Policy::kExhaustive);
  CHECK(pair[0] == Catch::Approx(1.75).margin(1e-10));
  CHECK(pair[1] == Catch::Approx(1.75).margin(1e-10));
}

TEST_CASE("pseudo-conservation residual vanishes on the pinned cases") {
  const auto spec = vacation_spec();
  const auto exh_w = polling::mean_waits(spec, Policy::kExhaustive);
  CHECK(std::fabs(polling::pseudo_conservation_residual(spec, exh_w, Policy::kExhaustive)) <=
        1e-12);
  // Both sides equal 0.25 * 7/12 = 0.145833...
  CHECK(0.25 * exh_w[0] == Catch::Approx(0.1458333333333333).margin(1e-12));

  const auto gated_w = polling::mean_waits(spec, Policy::kGated);
  CHECK(std::fabs(polling::pseudo_conservation_residual(spec, gated_w, Policy::kGated)) <= 1e-12);
  CHECK(0.25 * gated_w[0] == Catch::Approx(0.1875).margin(1e-12));
}

TEST_CASE("pseudo-conservation residual vanishes on random stable specs") {
  rng::Xoshiro256 gen(4242);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + gen.next() % 5;
    const double rho_target = 0.1 + 0.7 * gen.uniform();
    const auto spec = random_stable_spec(gen, n, rho_target);
    for (Policy policy : {Policy::kExhaustive, Policy::kGated}) {
      const auto cov = polling::solve_station_covariances(spec, policy);
      REQUIRE(cov.residual <= 1e-9);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(cov.r(i, i) > 0.0);
      const auto w = polling::mean_waits(spec, policy);
      const double residual = polling::pseudo_conservation_residual(spec, w, policy);
      REQUIRE(std::fabs(residual) <= 1e-9);
    }
  }
}

TEST_CASE("perturbing one wait shifts the residual linearly") {
  const auto spec = symmetric_pair();
  auto w = polling::mean_waits(spec, Policy::kExhaustive);
  const double base = polling::pseudo_conservation_residual(spec, w, Policy::kExhaustive);
  w[1] += 0.1;
  const double shifted = polling::pseudo_conservation_residual(spec, w, Policy::kExhaustive);
  CHECK(shifted - base == Catch::Approx(0.1 * spec.rho_i(1)).margin(1e-12));
}

TEST_CASE("gated waits dominate exhaustive waits") {
  // The per-queue ordering can reverse on lopsided specs (a lightly loaded
  // queue next to a heavy high-variance one; confirmed by simulation), so the
  // universal claims are the load-weighted ordering, with the exact gap
  // delta * sum(rho_i^2) / (1 - rho), and the per-queue ordering for
  // symmetric systems.
  rng::Xoshiro256 gen(1312);
  for (int rep = 0; rep < 25; ++rep) {
    const auto spec = random_stable_spec(gen, 1 + gen.next() % 4, 0.1 + 0.6 * gen.uniform());
    const auto exh = polling::mean_waits(spec, Policy::kExhaustive);
    const auto gated = polling::mean_waits(spec, Policy::kGated);
    double weighted_exh = 0.0, weighted_gated = 0.0, rho_sq = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
      weighted_exh += spec.rho_i(i) * exh[i];
      weighted_gated += spec.rho_i(i) * gated[i];
      rho_sq += spec.rho_i(i) * spec.rho_i(i);
    }
    const double gap = spec.total_mean_switchover() * rho_sq / (1.0 - spec.rho());
    REQUIRE(weighted_gated - weighted_exh == Catch::Approx(gap).margin(1e-9));
  }

  for (std::size_t n : {1u, 2u, 4u}) {
    const QueueParams mild{0.15, 1.0, 2.0, 0.5, 0.25};
    const PollingSpec sym(std::vector<QueueParams>(n, mild));
    const auto exh = polling::mean_waits(sym, Policy::kExhaustive);
    const auto gated = polling::mean_waits(sym, Policy::kGated);
    for (std::size_t i = 0; i < n; ++i) REQUIRE(gated[i] >= exh[i] - 1e-10);
  }
}

TEST_CASE("time rescaling scales every wait") {
  // Mild asymmetric spec keeping the approximation denominators positive.
  const PollingSpec spec({{0.10, 1.0, 2.2, 0.3, 0.12},
                          {0.15, 1.2, 2.9, 0.3, 0.11},
                          {0.20, 0.8, 1.3, 0.3, 0.14}});
  const double c = 3.5;
  std::vector<QueueParams> scaled;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    QueueParams q = spec.queue(i);
    q.lambda /= c;
    q.b1 *= c;
    q.b2 *= c * c;
    q.s1 *= c;
    q.s2 *= c * c;
    scaled.push_back(q);
  }
  const PollingSpec spec_scaled(scaled);
  for (Policy policy : {Policy::kExhaustive, Policy::kGated}) {
    const auto w = polling::mean_waits(spec, policy);
    const auto ws = polling::mean_waits(spec_scaled, policy);
    for (std::size_t i = 0; i < spec.size(); ++i) {
      REQUIRE(ws[i] == Catch::Approx(c * w[i]).epsilon(1e-10));
    }
  }
  const auto tak = polling::takagi_approx_waits(spec);
  const auto tak_scaled = polling::takagi_approx_waits(spec_scaled);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    REQUIRE(tak_scaled[i] == Catch::Approx(c * tak[i]).epsilon(1e-10));
  }
}

TEST_CASE("waiting-time approximation") {
  const auto w = polling::takagi_approx_waits(symmetric_pair());
  CHECK(w[0] == Catch::Approx(5.0).margin(1e-12));
  CHECK(w[1] == Catch::Approx(5.0).margin(1e-12));

  // Stable spec whose denominator 1 - rho - lambda_i delta goes nonpositive.
  QueueParams q = base_queue();
  q.lambda = 0.8;  // rho = 0.8, delta = 0.5: 1 - 0.8 - 0.4 = -0.2
  PollingSpec tight({q});
  CHECK_THROWS_AS(polling::takagi_approx_waits(tight), DomainError);
}

TEST_CASE("discrete polling fixed point") {
  const DiscretePollingSpec two({0.3, 0.3}, {1.0, 1.0});
  const auto f2 = polling::cyclic_station_moments(two);
  CHECK(f2[0] == Catch::Approx(1.05).margin(1e-12));
  CHECK(f2[1] == Catch::Approx(1.05).margin(1e-12));

  // Closed forms f_i(i) = r mu_i (1 - mu_i)/(1 - mu) for two queues.
  const DiscretePollingSpec uneven({0.2, 0.45}, {0.7, 1.1});
  const auto fu = polling::cyclic_station_moments(uneven);
  const double r = 1.8, mu = 0.65;
  CHECK(fu[0] == Catch::Approx(r * 0.2 * 0.8 / (1.0 - mu)).epsilon(1e-12));
  CHECK(fu[1] == Catch::Approx(r * 0.45 * 0.55 / (1.0 - mu)).epsilon(1e-12));

  // Vanishing second queue: f_2(2) -> 0 and f_1(1) -> r mu_1.
  const DiscretePollingSpec vanishing({0.3, 1e-9}, {1.0, 1.0});
  const auto fv = polling::cyclic_station_moments(vanishing);
  CHECK(fv[1] == Catch::Approx(0.0).margin(1e-8));
  CHECK(fv[0] == Catch::Approx(2.0 * 0.3).epsilon(1e-6));

  // Three symmetric queues: f = 0.2 (3 + 2 f / 0.8) solves to 1.2.
  const DiscretePollingSpec trio({0.2, 0.2, 0.2}, {1.0, 1.0, 1.0});
  const auto f3 = polling::cyclic_station_moments(trio);
  for (double v : f3) CHECK(v == Catch::Approx(1.2).margin(1e-12));

  // Fixed-point iteration oracle agrees with the linear solve.
  std::vector<double> fp(two.size(), 0.0);
  for (int it = 0; it < 200; ++it) {
    std::vector<double> next(two.size());
    for (std::size_t i = 0; i < two.size(); ++i) {
      double acc = two.total_r();
      for (std::size_t k = 0; k < two.size(); ++k) {
        if (k != i) acc += fp[k] / (1.0 - two.mu(k));
      }
      next[i] = two.mu(i) * acc;
    }
    fp.swap(next);
  }
  CHECK(fp[0] == Catch::Approx(f2[0]).margin(1e-10));

  CHECK_THROWS_AS(DiscretePollingSpec({0.6, 0.5}, {1.0, 1.0}), UnstableError);
}

TEST_CASE("discrete polling cross moments") {
  const DiscretePollingSpec two({0.3, 0.3}, {1.0, 1.0});
  const auto f = polling::cross_station_moments(two, polling::cyclic_station_moments(two));
  CHECK(f(1, 0) == Catch::Approx(0.3).margin(1e-12));  // r_1 mu_1
  CHECK(f(0, 1) == Catch::Approx(0.3).margin(1e-12));  // r_2 mu_2

  // Adjacent entries collapse to r_{i-1} mu_{i-1} for any spec.
  const DiscretePollingSpec spread({0.1, 0.2, 0.25, 0.15}, {0.4, 0.9, 1.3, 0.2});
  const auto fd = polling::cyclic_station_moments(spread);
  const auto fx = polling::cross_station_moments(spread, fd);
  for (std::size_t i = 0; i < spread.size(); ++i) {
    const std::size_t prev = (i + spread.size() - 1) % spread.size();
    REQUIRE(fx(i, prev) == Catch::Approx(spread.r(prev) * spread.mu(prev)).epsilon(1e-12));
  }

  // Rotational symmetry: equal gaps give equal cross moments.
  const DiscretePollingSpec trio({0.2, 0.2, 0.2}, {1.0, 1.0, 1.0});
  const auto ft = polling::cross_station_moments(trio, polling::cyclic_station_moments(trio));
  CHECK(ft(0, 1) == Catch::Approx(ft(1, 2)).margin(1e-12));
  CHECK(ft(1, 2) == Catch::Approx(ft(2, 0)).margin(1e-12));
  CHECK(ft(0, 2) == Catch::Approx(ft(1, 0)).margin(1e-12));
}

TEST_CASE("polling spec validation") {
  CHECK_THROWS_AS(PollingSpec({}), ValidationError);
  QueueParams bad = base_queue();
  bad.b2 = 0.5;  // below b1^2
  CHECK_THROWS_AS(PollingSpec({bad}), ValidationError);

  QueueParams heavy = base_queue();
  heavy.lambda = 2.0;  // rho = 2
  CHECK_THROWS_AS(polling::mean_waits(PollingSpec({heavy}), Policy::kExhaustive), UnstableError);
}
