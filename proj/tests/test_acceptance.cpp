// Acceptance suite: one test case per shipping criterion, each printing a
// PASS/FAIL line so the run reads as a checklist.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "queuelab/markov.hpp"
#include "queuelab/model_file.hpp"
#include "queuelab/pgf.hpp"
#include "queuelab/polling.hpp"
#include "queuelab/queue_models.hpp"
#include "queuelab/report.hpp"
#include "queuelab/sim.hpp"
#include "test_util.hpp"

using namespace queuelab;

namespace {

class Criterion {
 public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {}

  void expect(bool condition, const std::string& what) {
    ok_ = ok_ && condition;
    if (!condition) failures_.push_back(what);
  }

  ~Criterion() {
    std::printf("[criterion %2d] %-58s %s\n", id_, title_.c_str(), ok_ ? "PASS" : "FAIL");
    for (const auto& f : failures_) std::printf("               - %s\n", f.c_str());
    std::fflush(stdout);
  }

  bool ok() const { return ok_; }

 private:
  int id_;
  std::string title_;
  bool ok_ = true;
  std::vector<std::string> failures_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

TEST_CASE("criterion 1: M/M/1 closed forms and simulation") {
  Criterion c(1, "M/M/1 closed forms + simulation at 1e6 departures");
  const auto start = std::chrono::steady_clock::now();

  const auto m = queues::mm1_metrics(1.0, 2.0);
  c.expect(std::fabs(m.L - 1.0) <= 1e-12, "L != 1");
  c.expect(std::fabs(m.Lq - 0.5) <= 1e-12, "Lq != 0.5");
  c.expect(std::fabs(m.W - 1.0) <= 1e-12, "W != 1");
  c.expect(std::fabs(m.Wq - 0.5) <= 1e-12, "Wq != 0.5");
  c.expect(std::fabs(m.pi0 - 0.5) <= 1e-12, "pi0 != 0.5");

  sim::SimConfig cfg;
  cfg.seed = 42;
  cfg.horizon = 1000000;
  const auto r = sim::simulate_single_queue(
      {queues::QueueKind::kMM1, 1.0, sim::DistSpec::exponential(0.5), 1}, cfg);
  c.expect(r.L.deviation(1.0) <= 3.0, "sim L " + num(r.L.point) + " outside 3 half-widths");
  c.expect(r.Lq.deviation(0.5) <= 3.0, "sim Lq outside 3 half-widths");
  c.expect(r.W.deviation(1.0) <= 3.0, "sim W outside 3 half-widths");
  c.expect(r.Wq.deviation(0.5) <= 3.0, "sim Wq outside 3 half-widths");
  c.expect(r.pi0.deviation(0.5) <= 3.0, "sim pi0 outside 3 half-widths");

  const double elapsed = seconds_since(start);
  c.expect(elapsed < 10.0, "runtime " + num(elapsed) + "s >= 10s");
  REQUIRE(c.ok());
}

TEST_CASE("criterion 2: Erlang blocking and delay formulas") {
  Criterion c(2, "Erlang B(2,1) = 0.2, C(2,1) = 1/3, sum vs recursion");
  c.expect(std::fabs(queues::erlang_b(2, 1.0) - 0.2) <= 1e-12, "B(2,1) != 0.2");
  c.expect(std::fabs(queues::erlang_c(2, 1.0) - 1.0 / 3.0) <= 1e-12, "C(2,1) != 1/3");

  bool agree = true;
  for (std::size_t m = 1; m <= 200; ++m) {
    for (double rho : {0.25, 1.0, 5.0, 12.5, 35.0, 50.0}) {
      const double direct = queues::erlang_b(m, rho);
      const double recursive = queues::erlang_b_recursive(m, rho);
      if (std::fabs(direct - recursive) > 1e-12 * std::max(1.0, std::fabs(direct))) {
        agree = false;
      }
    }
  }
  c.expect(agree, "direct sum and recursion disagree beyond 1e-12");
  REQUIRE(c.ok());
}

TEST_CASE("criterion 3: Pollaczek-Khinchine mean formula") {
  Criterion c(3, "M/D/1 L = 0.75 analytic + simulated; M/M/1 degeneracy");
  const auto md1 = queues::mg1_metrics(0.5, 1.0, 1.0);
  c.expect(std::fabs(md1.L - 0.75) <= 1e-12, "M/D/1 L != 0.75");

  const auto as_mg1 = queues::mg1_metrics(1.0, 0.5, 0.5);
  const auto as_mm1 = queues::mm1_metrics(1.0, 2.0);
  c.expect(as_mg1.L == as_mm1.L && as_mg1.W == as_mm1.W && as_mg1.Wq == as_mm1.Wq &&
               as_mg1.Lq == as_mm1.Lq && as_mg1.pi0 == as_mm1.pi0,
           "exponential-moment M/G/1 deviates from M/M/1");

  sim::SimConfig cfg;
  cfg.seed = 43;
  cfg.horizon = 1000000;
  const auto r = sim::simulate_single_queue(
      {queues::QueueKind::kMG1, 0.5, sim::DistSpec::deterministic(1.0), 1}, cfg);
  c.expect(r.L.deviation(0.75) <= 3.0, "sim L " + num(r.L.point) + " outside 3 half-widths");
  REQUIRE(c.ok());
}

TEST_CASE("criterion 4: tandem product form") {
  Criterion c(4, "tandem L = 1.5, balance residual, simulated L");
  const auto t = queues::tandem_metrics(1.0, 2.0, 3.0);
  c.expect(std::fabs(t.total_L() - 1.5) <= 1e-12, "L != 1.5");
  const double residual = t.balance_residual(20);
  c.expect(residual <= 1e-12, "balance residual " + num(residual) + " > 1e-12");

  sim::SimConfig cfg;
  cfg.seed = 44;
  cfg.horizon = 500000;
  const auto r = sim::simulate_tandem(1.0, 2.0, 3.0, cfg);
  c.expect(r.total_L.deviation(1.5) <= 3.0,
           "sim L " + num(r.total_L.point) + " outside 3 half-widths");
  REQUIRE(c.ok());
}

TEST_CASE("criterion 5: polling internal consistency") {
  Criterion c(5, "pseudo-conservation <= 1e-9 on 50 specs + pinned waits");
  rng::Xoshiro256 gen(20240515);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + gen.next() % 5;
    std::vector<polling::QueueParams> qs;
    for (std::size_t i = 0; i < n; ++i) {
      polling::QueueParams q;
      q.lambda = 0.05 + 0.3 * gen.uniform();
      q.b1 = 0.2 + 1.3 * gen.uniform();
      q.b2 = q.b1 * q.b1 * (1.25 + 2.0 * gen.uniform());
      q.s1 = 0.1 + 0.9 * gen.uniform();
      q.s2 = q.s1 * q.s1 * (1.0 + 1.5 * gen.uniform());
      qs.push_back(q);
    }
    double rho = 0.0;
    for (const auto& q : qs) rho += q.lambda * q.b1;
    const double target = 0.1 + 0.7 * gen.uniform();
    for (auto& q : qs) q.lambda *= target / rho;
    const polling::PollingSpec spec(qs);
    for (const auto policy : {polling::Policy::kExhaustive, polling::Policy::kGated}) {
      const auto waits = polling::mean_waits(spec, policy);
      worst = std::max(worst,
                       std::fabs(polling::pseudo_conservation_residual(spec, waits, policy)));
    }
  }
  c.expect(worst <= 1e-9, "worst residual " + num(worst) + " > 1e-9");

  const polling::PollingSpec vacation({{0.25, 1.0, 2.0, 0.5, 0.25}});
  const auto exh = polling::mean_waits(vacation, polling::Policy::kExhaustive);
  c.expect(std::fabs(exh[0] - 7.0 / 12.0) <= 1e-10,
           "N=1 exhaustive wait " + num(exh[0]) + " != 7/12");
  const auto gated = polling::mean_waits(vacation, polling::Policy::kGated);
  c.expect(std::fabs(gated[0] - 0.75) <= 1e-10, "N=1 gated wait " + num(gated[0]) + " != 0.75");
  REQUIRE(c.ok());
}

TEST_CASE("criterion 6: polling waits against simulation") {
  Criterion c(6, "symmetric N=2 exhaustive: sim within 5% of 1.75");
  const auto start = std::chrono::steady_clock::now();
  const polling::PollingSpec pair({{0.25, 1.0, 2.0, 0.5, 0.25}, {0.25, 1.0, 2.0, 0.5, 0.25}});
  const auto waits = polling::mean_waits(pair, polling::Policy::kExhaustive);
  c.expect(std::fabs(waits[0] - 1.75) <= 1e-10, "analytic wait != 1.75");

  sim::SimConfig cfg;
  cfg.seed = 46;
  cfg.horizon = 1000000;
  const auto r =
      sim::simulate_polling(pair, polling::Policy::kExhaustive, sim::RoutingSpec::cyclic(), cfg);
  for (std::size_t i = 0; i < 2; ++i) {
    const double rel = std::fabs(r.wait[i].point - 1.75) / 1.75;
    c.expect(rel <= 0.05, "queue " + std::to_string(i) + " relative error " + num(rel) + " > 5%");
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 60.0, "runtime " + num(elapsed) + "s >= 60s");
  REQUIRE(c.ok());
}

TEST_CASE("criterion 7: discrete polling fixed point") {
  Criterion c(7, "slotted fixed points 1.05 / 1.2 + boundary cross moments");
  const polling::DiscretePollingSpec two({0.3, 0.3}, {1.0, 1.0});
  const auto f2 = polling::cyclic_station_moments(two);
  c.expect(std::fabs(f2[0] - 1.05) <= 1e-12 && std::fabs(f2[1] - 1.05) <= 1e-12,
           "N=2 closed form != 1.05");

  const polling::DiscretePollingSpec trio({0.2, 0.2, 0.2}, {1.0, 1.0, 1.0});
  const auto f3 = polling::cyclic_station_moments(trio);
  for (double v : f3) c.expect(std::fabs(v - 1.2) <= 1e-12, "N=3 value " + num(v) + " != 1.2");

  const polling::DiscretePollingSpec mixed({0.15, 0.2, 0.3}, {0.5, 1.25, 0.75});
  const auto cross =
      polling::cross_station_moments(mixed, polling::cyclic_station_moments(mixed));
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    const std::size_t prev = (i + mixed.size() - 1) % mixed.size();
    c.expect(std::fabs(cross(i, prev) - mixed.r(prev) * mixed.mu(prev)) <= 1e-15,
             "adjacent cross moment mismatch at queue " + std::to_string(i));
  }
  REQUIRE(c.ok());
}

TEST_CASE("criterion 8: generating-function suite") {
  Criterion c(8, "extinction root, transform derivatives, ruin moments");
  const auto root = pgf::extinction_fixed_point(pgf::PGFSeries::bernoulli_quadratic(0.4, 0.6),
                                                1e-13);
  c.expect(root && std::fabs(*root - 2.0 / 3.0) <= 1e-9, "extinction root != 2/3");

  const auto step = pgf::PGFSeries::poisson(0.5);
  auto theta = [&](double w) { return pgf::ruin_root_theta(step, w, 1e-13); };
  const double h = 1e-3;
  const double d1 = 2.0 * (theta(1.0) - theta(1.0 - h / 2)) / (h / 2) -
                    (theta(1.0) - theta(1.0 - h)) / h;
  c.expect(std::fabs(d1 - 2.0) / 2.0 <= 1e-3, "theta'(1) " + num(d1) + " != 2 within 1e-3");
  auto second = [&](double s) {
    return (theta(1.0) - 2.0 * theta(1.0 - s) + theta(1.0 - 2.0 * s)) / (s * s);
  };
  const double d2 = 2.0 * second(5e-4) - second(1e-3);
  const double d2_expected = 0.5 / 0.125 + 0.5 / 0.25;  // sigma^2/(1-mu)^3 + mu/(1-mu)^2
  c.expect(std::fabs(d2 - d2_expected) / d2_expected <= 1e-3,
           "theta''(1) " + num(d2) + " != " + num(d2_expected));

  const auto moments = pgf::ruin_time_moments(pgf::PGFSeries::degenerate(1), step);
  c.expect(std::fabs(moments.mean - 2.0) <= 1e-12, "E[T] != 2");
  c.expect(std::fabs(moments.variance - 4.0) <= 1e-12, "Var[T] != 4");

  const auto mc = sim::simulate_ruin(pgf::PGFSeries::degenerate(1), step, 100000, 48);
  c.expect(mc.mean_T.deviation(2.0) <= 3.0, "Monte Carlo E[T] outside CI");
  c.expect(mc.var_T.deviation(4.0) <= 3.0, "Monte Carlo Var[T] outside CI");
  REQUIRE(c.ok());
}

TEST_CASE("criterion 9: Markov chain core") {
  Criterion c(9, "Chapman-Kolmogorov, two-state limit, classification");
  rng::Xoshiro256 gen(314159);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + gen.next() % 5;
    const auto p = testutil::random_positive_chain(gen, n);
    const auto ms = 1 + gen.next() % 6;
    const auto ns = 1 + gen.next() % 6;
    const auto lhs = markov::n_step_matrix(p, ms + ns);
    const auto rhs = testutil::naive_multiply(markov::n_step_matrix(p, ms).matrix(),
                                              markov::n_step_matrix(p, ns).matrix());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::fabs(lhs(i, j) - rhs(i, j)));
    }
  }
  c.expect(worst <= 1e-10, "Chapman-Kolmogorov deviation " + num(worst) + " > 1e-10");

  linalg::Matrix two(2, 2);
  two(0, 0) = 0.7;
  two(0, 1) = 0.3;
  two(1, 0) = 0.2;
  two(1, 1) = 0.8;
  const markov::TransitionMatrix chain(two);
  const auto limit = markov::evolve_distribution(chain, markov::Distribution({1.0, 0.0}), 50);
  c.expect(std::fabs(limit[0] - 0.4) <= 1e-10 && std::fabs(limit[1] - 0.6) <= 1e-10,
           "two-state limit != (0.4, 0.6)");

  bool classification_ok = true;
  std::vector<markov::TransitionMatrix> chains;
  chains.push_back(chain);
  linalg::Matrix absorbing(2, 2);
  absorbing(0, 0) = 1.0;
  absorbing(1, 0) = 0.5;
  absorbing(1, 1) = 0.5;
  chains.push_back(markov::TransitionMatrix(absorbing));
  for (int rep = 0; rep < 60; ++rep) {
    chains.push_back(testutil::random_sparse_chain(gen, 2 + gen.next() % 5));
  }
  for (const auto& p : chains) {
    const auto cls = markov::communication_classes(p);
    for (std::size_t x = 0; x < p.size(); ++x) {
      const auto probe = testutil::enumerate_returns(p, x, 20);
      const bool oracle_transient = probe.escaped > 1e-12;
      const bool got_transient = cls.kind[x] == markov::StateKind::kTransient;
      classification_ok = classification_ok && oracle_transient == got_transient;
    }
  }
  c.expect(classification_ok, "classification disagrees with the enumeration oracle");
  REQUIRE(c.ok());
}

TEST_CASE("criterion 10: report determinism") {
  Criterion c(10, "byte-identical reports across two runs");
  const char* file_text = R"({
    "models": [
      {"name": "mm1", "kind": "queue", "model": "MM1", "beta": 1.0, "delta": 2.0},
      {"name": "pair", "kind": "tandem", "lambda": 1.0, "mu1": 2.0, "mu2": 3.0},
      {"name": "poll", "kind": "polling", "policy": "gated",
       "queues": [{"lambda": 0.25, "service": {"kind": "exponential", "mean": 1.0},
                   "switchover": {"kind": "deterministic", "value": 0.5}}]},
      {"name": "gambler", "kind": "ruin", "initial": {"family": "degenerate", "k": 1},
       "step": {"family": "poisson", "mean": 0.5}}
    ],
    "sim": {"seed": 7, "horizon": 40000}
  })";
  const auto file = model::parse_model_file_text(file_text);
  const std::string v1 = report::to_json_string(report::run_validate(file));
  const std::string v2 = report::to_json_string(report::run_validate(file));
  c.expect(v1 == v2, "validate reports differ between runs");
  const std::string a1 = report::to_json_string(report::run_analyze(file));
  const std::string a2 = report::to_json_string(report::run_analyze(file));
  c.expect(a1 == a2, "analyze reports differ between runs");
  const std::string c1 = report::to_csv_string(report::run_validate(file));
  const std::string c2 = report::to_csv_string(report::run_validate(file));
  c.expect(c1 == c2, "CSV reports differ between runs");
  REQUIRE(c.ok());
}
