#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <vector>

#include "queuelab/pgf.hpp"

using namespace queuelab;
using pgf::PGFSeries;

namespace {

// Bisection oracle for g(s) = s on [0, 1): independent of the fixed-point
// iteration used by the library.
std::optional<double> bisect_root(const PGFSeries& g, double tol = 1e-11) {
  auto h = [&](double s) { return g.value(s) - s; };
  double lo = 0.0, hi = 1.0 - 1e-9;
  if (h(lo) <= 0.0) return lo;
  if (h(hi) > 0.0) return std::nullopt;  // no sign change inside [0,1)
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("closed-form moments") {
  const auto poisson = pgf::pgf_moments(PGFSeries::poisson(0.5));
  CHECK(poisson.mean == Catch::Approx(0.5).margin(1e-14));
  CHECK(poisson.variance == Catch::Approx(0.5).margin(1e-14));

  const auto unit = pgf::pgf_moments(PGFSeries::degenerate(1));
  CHECK(unit.mean == 1.0);
  CHECK(unit.variance == Catch::Approx(0.0).margin(1e-14));

  // p_j = 2^-(j+1) is geometric with p = 1/2: mean 1, variance 2.
  const auto geo = pgf::pgf_moments(PGFSeries::geometric(0.5));
  CHECK(geo.mean == Catch::Approx(1.0).margin(1e-14));
  CHECK(geo.variance == Catch::Approx(2.0).margin(1e-14));

  const auto bq = pgf::pgf_moments(PGFSeries::bernoulli_quadratic(0.4, 0.6));
  CHECK(bq.mean == Catch::Approx(1.2).margin(1e-14));
}

TEST_CASE("truncated series carry tail bounds on their moments") {
  // Truncated geometric(1/2) at K = 40: tail mass 2^-41.
  std::vector<double> coeffs(41);
  double mass = 0.5, total = 0.0;
  for (auto& c : coeffs) {
    c = mass;
    total += mass;
    mass *= 0.5;
  }
  const auto g = PGFSeries::from_coefficients(coeffs, 1.0 - total);
  const auto m = pgf::pgf_moments(g);
  CHECK(m.mean == Catch::Approx(1.0).margin(1e-9));
  CHECK(m.mean_tail_bound > 0.0);
  CHECK(m.mean_tail_bound < 1e-8);
  CHECK(std::fabs(m.mean + m.mean_tail_bound - 1.0) <= 2e-9);

  // A fat unexplained tail refuses to certify.
  CHECK_THROWS_AS(pgf::pgf_moments(PGFSeries::from_coefficients({0.5, 0.3}, 0.2)), DomainError);
}

TEST_CASE("composition") {
  const auto poisson = PGFSeries::poisson(2.0);
  const auto composed = pgf::pgf_compose(poisson, PGFSeries::degenerate(1));
  CHECK(composed.family() == PGFSeries::Family::kPoisson);
  CHECK(composed.mean() == Catch::Approx(2.0));

  // Mean multiplies through composition (chain rule at 1).
  const auto a = PGFSeries::poisson(2.0);
  const auto b = PGFSeries::bernoulli_quadratic(0.0, 1.0);  // point mass at 2
  const auto c = pgf::pgf_compose(a, b);
  const auto mc = pgf::pgf_moments(c);
  CHECK(mc.mean == Catch::Approx(4.0).epsilon(1e-10));

  const auto bq_geo =
      pgf::pgf_compose(PGFSeries::bernoulli_quadratic(0.5, 0.5), PGFSeries::geometric(0.5));
  CHECK(bq_geo.coefficients()[0] == Catch::Approx(0.625).margin(1e-12));
  const auto mbg = pgf::pgf_moments(bq_geo);
  CHECK(mbg.mean == Catch::Approx(0.5 * 2.0 * 1.0).epsilon(1e-9));

  // Values of the composition agree with pointwise evaluation.
  const auto deep = pgf::pgf_compose(PGFSeries::poisson(1.5), PGFSeries::geometric(0.6));
  for (double s = 0.0; s <= 1.0; s += 0.25) {
    const double direct = PGFSeries::poisson(1.5).value(PGFSeries::geometric(0.6).value(s));
    REQUIRE(deep.value(s) == Catch::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("extinction fixed point") {
  const auto supercritical = PGFSeries::bernoulli_quadratic(0.4, 0.6);
  const auto root = pgf::extinction_fixed_point(supercritical, 1e-13);
  REQUIRE(root.has_value());
  CHECK(*root == Catch::Approx(2.0 / 3).margin(1e-9));

  CHECK_FALSE(pgf::extinction_fixed_point(PGFSeries::bernoulli_quadratic(0.6, 0.4)).has_value());

  const auto poisson_root = pgf::extinction_fixed_point(PGFSeries::poisson(2.0), 1e-13);
  REQUIRE(poisson_root.has_value());
  const auto oracle = bisect_root(PGFSeries::poisson(2.0));
  REQUIRE(oracle.has_value());
  CHECK(*poisson_root == Catch::Approx(*oracle).margin(1e-9));
  CHECK(*poisson_root == Catch::Approx(0.203188).margin(1e-6));

  // The root depends only on the coefficient sequence: composing with the
  // identity law changes nothing.
  const auto via_identity =
      pgf::extinction_fixed_point(pgf::pgf_compose(supercritical, PGFSeries::degenerate(1)));
  REQUIRE(via_identity.has_value());
  CHECK(*via_identity == Catch::Approx(*root).margin(1e-12));
}

TEST_CASE("ruin transform root") {
  const auto step = PGFSeries::poisson(0.5);
  CHECK(pgf::ruin_root_theta(step, 1.0) == Catch::Approx(1.0).margin(1e-9));
  CHECK(pgf::ruin_root_theta(step, 0.5) == Catch::Approx(0.3637).margin(1e-3));

  CHECK_THROWS_AS(pgf::ruin_root_theta(PGFSeries::poisson(1.5), 0.5), DomainError);
  CHECK_THROWS_AS(pgf::ruin_root_theta(step, 0.0), ValidationError);
}

TEST_CASE("ruin root derivatives at w = 1 by finite differences") {
  const auto step = PGFSeries::poisson(0.5);  // mean 0.5, variance 0.5
  auto theta = [&](double w) { return pgf::ruin_root_theta(step, w, 1e-13); };

  const double mu = 0.5, sigma2 = 0.5;
  const double d1_expected = 1.0 / (1.0 - mu);
  const double h = 1e-3;
  const double d1_h = (theta(1.0) - theta(1.0 - h)) / h;
  const double d1_h2 = (theta(1.0) - theta(1.0 - h / 2)) / (h / 2);
  const double d1 = 2.0 * d1_h2 - d1_h;  // Richardson
  CHECK(d1 == Catch::Approx(d1_expected).epsilon(1e-3));

  const double d2_expected = sigma2 / std::pow(1.0 - mu, 3) + mu / std::pow(1.0 - mu, 2);
  auto second = [&](double step_h) {
    return (theta(1.0) - 2.0 * theta(1.0 - step_h) + theta(1.0 - 2.0 * step_h)) /
           (step_h * step_h);
  };
  const double d2 = 2.0 * second(5e-4) - second(1e-3);
  CHECK(d2 == Catch::Approx(d2_expected).epsilon(1e-3));
}

TEST_CASE("ruin time moments") {
  const auto poisson_case =
      pgf::ruin_time_moments(PGFSeries::degenerate(1), PGFSeries::poisson(0.5));
  CHECK(poisson_case.mean == Catch::Approx(2.0).margin(1e-12));
  CHECK(poisson_case.variance == Catch::Approx(4.0).margin(1e-12));

  const auto empty = pgf::ruin_time_moments(PGFSeries::degenerate(0), PGFSeries::poisson(0.5));
  CHECK(empty.mean == 0.0);
  CHECK(empty.variance == 0.0);

  // Geometric initial capital with mean 2, no arrivals: T = L0.
  const auto drain_only =
      pgf::ruin_time_moments(PGFSeries::geometric(1.0 / 3), PGFSeries::degenerate(0));
  CHECK(drain_only.mean == Catch::Approx(2.0).margin(1e-12));
  CHECK(drain_only.variance == Catch::Approx(6.0).margin(1e-12));

  CHECK_THROWS_AS(pgf::ruin_time_moments(PGFSeries::degenerate(1), PGFSeries::poisson(1.2)),
                  DomainError);
}

TEST_CASE("term sums agree with the one-sided derivative limit") {
  // Abel consistency, exercised numerically: the mean read off the
  // coefficients matches the Richardson-extrapolated limit of G'(s), s up 1.
  const std::vector<PGFSeries> cases = {
      PGFSeries::poisson(0.8),
      PGFSeries::geometric(0.4),
      pgf::pgf_compose(PGFSeries::poisson(1.2), PGFSeries::geometric(0.7)),
  };
  for (const auto& g : cases) {
    const double mean = pgf::pgf_moments(g).mean;
    const double h = 1e-4;
    const double d_h = g.derivative(1.0 - h);
    const double d_h2 = g.derivative(1.0 - h / 2);
    const double limit = 2.0 * d_h2 - d_h;
    REQUIRE(limit == Catch::Approx(mean).epsilon(1e-6));
  }
}

TEST_CASE("pointwise convergence tracks coefficient convergence") {
  // Coefficients of poisson(mu_n) approach
  // those of poisson(mu), so the transforms converge on the grid; and the
  // monotone-convergence direction recovers coefficients from transforms.
  const double mu = 1.0;
  const auto target = PGFSeries::poisson(mu);
  double prev_gap = 1e9;
  for (double mu_n : {1.5, 1.25, 1.1, 1.01}) {
    const auto gn = PGFSeries::poisson(mu_n);
    double gap = 0.0;
    for (double s = 0.0; s <= 0.9; s += 0.1) {
      gap = std::max(gap, std::fabs(gn.value(s) - target.value(s)));
    }
    CHECK(gap < prev_gap);
    prev_gap = gap;

    double coeff_gap = 0.0;
    const auto cn = gn.truncate(40);
    const auto ct = target.truncate(40);
    for (std::size_t k = 0; k < 40; ++k) coeff_gap = std::max(coeff_gap, std::fabs(cn[k] - ct[k]));
    // Transform distance controls coefficient distance for these laws.
    CHECK(coeff_gap <= 2.0 * gap + 1e-12);
  }
}

TEST_CASE("series validation") {
  CHECK_THROWS_AS(PGFSeries::from_coefficients({0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(PGFSeries::from_coefficients({-0.1, 1.1}), ValidationError);
  CHECK_THROWS_AS(PGFSeries::geometric(0.0), ValidationError);
  CHECK_THROWS_AS(PGFSeries::bernoulli_quadratic(0.7, 0.7), ValidationError);
}
