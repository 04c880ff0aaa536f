#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "queuelab/model_file.hpp"

namespace queuelab::report {

using ojson = nlohmann::ordered_json;

struct Report {
  ojson doc;
  bool validation_breach = false;
};

struct RunOptions {
  double tolerance = 3.0;      // CI multiples allowed in validate mode
  double analytic_bias = 0.0;  // fault injection: shifts analytic targets (self-test hook)
  std::string batch_csv_dir;   // when set, simulate dumps raw batch samples here
};

namespace detail {

inline ojson metric(const std::string& name, double value, const char* unit, const char* tag) {
  ojson m;
  m["name"] = name;
  m["value"] = value;
  m["unit"] = unit;
  m["tag"] = tag;
  return m;
}

inline ojson estimate(const std::string& name, const stats::SimEstimate& e, const char* unit) {
  ojson m;
  m["name"] = name;
  m["point"] = e.point;
  m["half_width_95"] = e.half_width_95;
  m["samples"] = e.samples;
  m["unit"] = unit;
  return m;
}

inline void note_error(ojson& block, const char* type, const std::string& message) {
  ojson e;
  e["type"] = type;
  e["message"] = message;
  block["errors"].push_back(e);
}

inline void note_unstable(ojson& block, const UnstableError& e) {
  block["verdicts"]["stability"] = to_string(e.verdict());
  block["verdicts"]["rho"] = e.rho();
  block["verdicts"]["detail"] = e.what();
}

// ---- analyze ----------------------------------------------------------

inline void analyze_markov(ojson& block, const model::MarkovChainModel& m) {
  const auto cls = markov::communication_classes(m.matrix);
  ojson classes = ojson::array();
  for (std::size_t c = 0; c < cls.classes.size(); ++c) {
    ojson one;
    one["states"] = ojson::array();
    for (std::size_t s : cls.classes[c]) one["states"].push_back(m.matrix.states()[s]);
    one["closed"] = static_cast<bool>(cls.closed[c]);
    classes.push_back(one);
  }
  block["classification"]["classes"] = classes;
  for (std::size_t s = 0; s < m.matrix.size(); ++s) {
    block["classification"]["kind"][m.matrix.states()[s]] = to_string(cls.kind[s]);
  }
  block["classification"]["tag"] = "state-classification";

  const auto verdict = markov::is_ergodic(m.matrix);
  switch (verdict.kind) {
    case markov::ErgodicityVerdict::Kind::kErgodic:
      block["verdicts"]["ergodicity"] = "ergodic";
      break;
    case markov::ErgodicityVerdict::Kind::kPeriodic:
      block["verdicts"]["ergodicity"] = "periodic";
      block["verdicts"]["period"] = verdict.period;
      break;
    case markov::ErgodicityVerdict::Kind::kReducible:
      block["verdicts"]["ergodicity"] = "reducible";
      break;
  }

  if (cls.irreducible()) {
    const auto pi = markov::stationary_distribution(m.matrix);
    for (std::size_t s = 0; s < pi.size(); ++s) {
      block["metrics"].push_back(metric("pi[" + m.matrix.states()[s] + "]", pi[s], "probability",
                                        "stationary-balance"));
    }
  }
  if (m.pi0) {
    const auto evolved = markov::evolve_distribution(m.matrix, *m.pi0, m.steps);
    for (std::size_t s = 0; s < evolved.size(); ++s) {
      block["metrics"].push_back(metric("pi_n[" + m.matrix.states()[s] + "]", evolved[s],
                                        "probability", "chapman-kolmogorov"));
    }
  }
}

inline void analyze_birth_death(ojson& block, const model::BirthDeathModel& m) {
  const auto rec = birth_death::classify_recurrence(m.spec, m.n_max);
  block["verdicts"]["recurrence"] = to_string(rec.verdict);
  const auto norm = birth_death::normalization_S(m.spec, m.n_max, m.tail_tol);
  block["verdicts"]["ergodic"] =
      rec.verdict == birth_death::RecurrenceVerdict::kRecurrent && !norm.diverges;
  if (norm.diverges) {
    block["verdicts"]["normalization"] = "diverges";
  } else {
    block["metrics"].push_back(metric("S", norm.s, "dimensionless", "stationary-normalization"));
    const auto dist = birth_death::stationary_distribution(m.spec, m.n_max, m.tail_tol);
    const std::size_t shown = std::min<std::size_t>(dist.pi.size(), 8);
    for (std::size_t n = 0; n < shown; ++n) {
      block["metrics"].push_back(metric("pi[" + std::to_string(n) + "]", dist.pi[n],
                                        "probability", "birth-death-stationary"));
    }
    block["metrics"].push_back(
        metric("tail_mass", dist.tail_mass, "probability", "birth-death-stationary"));
  }
  const auto gen = birth_death::build_intensity_matrix(m.spec, m.intensity_states);
  const auto check = birth_death::validate_intensity_matrix(gen);
  block["verdicts"]["intensity_matrix_valid"] = check.ok;
  if (!check.ok) block["verdicts"]["intensity_matrix_detail"] = check.detail;
}

inline const char* queue_tag(queues::QueueKind k) {
  switch (k) {
    case queues::QueueKind::kMM1: return "mm1-closed-form";
    case queues::QueueKind::kMMInf: return "mminf-closed-form";
    case queues::QueueKind::kMMm: return "erlang-c";
    case queues::QueueKind::kMMmm: return "erlang-b";
    case queues::QueueKind::kMG1: return "pollaczek-khinchine";
  }
  return "?";
}

inline queues::PerformanceMetrics queue_closed_forms(const model::QueueModel& m) {
  switch (m.kind) {
    case queues::QueueKind::kMM1: return queues::mm1_metrics(m.beta, m.delta);
    case queues::QueueKind::kMMInf: return queues::mminf_metrics(m.beta, m.delta);
    case queues::QueueKind::kMMm: return queues::mmm_metrics(m.beta, m.delta, m.servers);
    case queues::QueueKind::kMMmm: return queues::erlang_loss_metrics(m.beta, m.delta, m.servers);
    case queues::QueueKind::kMG1: return queues::mg1_metrics(m.beta, m.service.m1, m.service.m2);
  }
  throw ValidationError("unreachable queue kind");
}

inline void analyze_queue(ojson& block, const model::QueueModel& m) {
  const auto metrics = queue_closed_forms(m);
  const char* tag = queue_tag(m.kind);
  block["verdicts"]["stability"] = "ergodic";
  block["metrics"].push_back(metric("rho", metrics.rho, "dimensionless", tag));
  block["metrics"].push_back(metric("u", metrics.u, "dimensionless", tag));
  block["metrics"].push_back(metric("L", metrics.L, "customers", tag));
  block["metrics"].push_back(metric("Lq", metrics.Lq, "customers", tag));
  block["metrics"].push_back(metric("Ls", metrics.Ls, "customers", tag));
  block["metrics"].push_back(metric("W", metrics.W, "time", tag));
  block["metrics"].push_back(metric("Wq", metrics.Wq, "time", tag));
  block["metrics"].push_back(metric("Ws", metrics.Ws, "time", tag));
  block["metrics"].push_back(metric("pi0", metrics.pi0, "probability", tag));
  if (m.kind == queues::QueueKind::kMMmm) {
    block["metrics"].push_back(metric("blocking", metrics.blocking, "probability", "erlang-b"));
    block["metrics"].push_back(
        metric("lambda_eff", metrics.lambda_eff, "customers/time", "erlang-b"));
  }
  if (m.kind == queues::QueueKind::kMMm) {
    block["metrics"].push_back(
        metric("delay_prob", metrics.delay_prob, "probability", "erlang-c"));
  }
  if (m.kind == queues::QueueKind::kMG1 && m.service.law) {
    // Arrival-count law over one service, for the supported descriptors.
    const auto& law = *m.service.law;
    std::optional<queues::ServiceDescriptor> desc;
    if (law.kind == sim::DistSpec::Kind::kExponential) {
      desc = queues::ExponentialService{1.0 / law.mean};
    } else if (law.kind == sim::DistSpec::Kind::kDeterministic) {
      desc = queues::DeterministicService{law.mean};
    } else if (law.kind == sim::DistSpec::Kind::kDiscrete) {
      desc = queues::DiscreteService{law.values, law.probs};
    }
    if (desc) {
      const auto a = queues::mg1_arrival_probs(m.beta, *desc, 8);
      for (std::size_t j = 0; j < a.a.size(); ++j) {
        block["metrics"].push_back(metric("a[" + std::to_string(j) + "]", a.a[j], "probability",
                                          "mg1-arrival-law"));
      }
    }
  }
}

inline void analyze_tandem(ojson& block, const model::TandemModel& m) {
  const auto t = queues::tandem_metrics(m.lambda, m.mu1, m.mu2);
  block["verdicts"]["stability"] = "ergodic";
  block["metrics"].push_back(metric("rho1", t.rho1(), "dimensionless", "tandem-product-form"));
  block["metrics"].push_back(metric("rho2", t.rho2(), "dimensionless", "tandem-product-form"));
  block["metrics"].push_back(metric("L", t.total_L(), "customers", "tandem-product-form"));
  block["metrics"].push_back(metric("P[0,0]", t.joint(0, 0), "probability", "tandem-product-form"));
  ojson residual;
  residual["name"] = "balance";
  residual["value"] = t.balance_residual(m.window);
  residual["unit"] = "probability/time";
  residual["tag"] = "balance-equations";
  block["residuals"].push_back(residual);
}

inline void analyze_polling(ojson& block, const model::PollingModel& m) {
  const auto spec = m.spec();
  const bool exhaustive = m.policy == polling::Policy::kExhaustive;
  const char* wait_tag = exhaustive ? "polling-wait-exhaustive" : "polling-wait-gated";
  const char* pcl_tag =
      exhaustive ? "pseudo-conservation-exhaustive" : "pseudo-conservation-gated";

  block["verdicts"]["stability"] = "ergodic";
  block["verdicts"]["policy"] = to_string(m.policy);
  if (m.routing.kind != sim::RoutingSpec::Kind::kCyclic) {
    block["verdicts"]["routing"] = "non-cyclic (analytic values assume the cyclic order)";
  }
  const auto cov = polling::solve_station_covariances(spec, m.policy);
  const auto waits = polling::mean_waits(spec, m.policy);
  for (std::size_t i = 0; i < waits.size(); ++i) {
    block["metrics"].push_back(metric("W[" + std::to_string(i) + "]", waits[i], "time", wait_tag));
  }
  const double mean_cycle = spec.total_mean_switchover() / (1.0 - spec.rho());
  block["metrics"].push_back(metric("EC", mean_cycle, "time", "cycle-moments"));
  if (exhaustive) {
    const auto iv = polling::intervisit_moments(spec, cov);
    for (std::size_t i = 0; i < iv.mean.size(); ++i) {
      block["metrics"].push_back(
          metric("EI[" + std::to_string(i) + "]", iv.mean[i], "time", "intervisit-moments"));
      block["metrics"].push_back(metric("EI2[" + std::to_string(i) + "]", iv.second[i], "time^2",
                                        "intervisit-moments"));
    }
  } else {
    const auto cm = polling::gated_cycle_moments(spec, cov);
    for (std::size_t i = 0; i < cm.second.size(); ++i) {
      block["metrics"].push_back(
          metric("EC2[" + std::to_string(i) + "]", cm.second[i], "time^2", "cycle-moments"));
    }
  }
  for (std::size_t i = 0; i < spec.size(); ++i) {
    for (std::size_t j = 0; j < spec.size(); ++j) {
      block["covariances"]["r[" + std::to_string(i) + "][" + std::to_string(j) + "]"] =
          cov.r(i, j);
    }
  }
  block["covariances"]["unit"] = "time^2";
  block["covariances"]["tag"] = "station-covariance";

  ojson solver_res;
  solver_res["name"] = "covariance_system";
  solver_res["value"] = cov.residual;
  solver_res["unit"] = "time^2";
  solver_res["tag"] = "station-covariance";
  block["residuals"].push_back(solver_res);

  ojson pcl;
  pcl["name"] = "pseudo_conservation";
  pcl["value"] = polling::pseudo_conservation_residual(spec, waits, m.policy);
  pcl["unit"] = "time";
  pcl["tag"] = pcl_tag;
  block["residuals"].push_back(pcl);

  if (exhaustive) {
    try {
      const auto approx = polling::takagi_approx_waits(spec);
      for (std::size_t i = 0; i < approx.size(); ++i) {
        block["approximations"].push_back(
            metric("W[" + std::to_string(i) + "]", approx[i], "time", "takagi-approximation"));
      }
    } catch (const DomainError& e) {
      note_error(block, "approximation", e.what());
    }
  }
}

inline void analyze_discrete_polling(ojson& block, const model::DiscretePollingModel& m) {
  const polling::DiscretePollingSpec spec(m.mu, m.r);
  block["verdicts"]["stability"] = "ergodic";
  const auto diag = polling::cyclic_station_moments(spec);
  for (std::size_t i = 0; i < diag.size(); ++i) {
    block["metrics"].push_back(metric("f[" + std::to_string(i) + "][" + std::to_string(i) + "]",
                                      diag[i], "customers", "station-fixed-point"));
  }
  const auto cross = polling::cross_station_moments(spec, diag);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    for (std::size_t j = 0; j < spec.size(); ++j) {
      if (i == j) continue;
      block["metrics"].push_back(metric("f[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                                        cross(i, j), "customers", "station-cross-moments"));
    }
  }
}

inline void analyze_pgf(ojson& block, const model::PgfModel& m) {
  const auto moments = pgf::pgf_moments(m.g);
  block["metrics"].push_back(metric("mean", moments.mean, "dimensionless", "pgf-moments"));
  block["metrics"].push_back(metric("variance", moments.variance, "dimensionless", "pgf-moments"));
  if (moments.mean_tail_bound > 0.0) {
    block["metrics"].push_back(
        metric("mean_tail_bound", moments.mean_tail_bound, "dimensionless", "pgf-moments"));
  }
  const auto root = pgf::extinction_fixed_point(m.g);
  block["verdicts"]["subcritical"] = moments.mean <= 1.0;
  if (root) {
    block["metrics"].push_back(metric("extinction_root", *root, "probability", "pgf-fixed-point"));
  }
}

inline void analyze_ruin(ojson& block, const model::RuinModel& m) {
  if (m.w) {
    block["metrics"].push_back(
        metric("theta", pgf::ruin_root_theta(m.step, *m.w), "probability", "ruin-root"));
  }
  if (m.drain == 1) {
    const auto moments = pgf::ruin_time_moments(m.initial, m.step);
    block["metrics"].push_back(metric("E[T]", moments.mean, "steps", "ruin-time-moments"));
    block["metrics"].push_back(metric("Var[T]", moments.variance, "steps^2", "ruin-time-moments"));
  } else {
    note_error(block, "analytic", "ruin-time moments are closed-form only for drain 1");
  }
}

// ---- simulate ---------------------------------------------------------

inline sim::SingleQueueModel queue_sim_model(const model::QueueModel& m) {
  sim::SingleQueueModel out;
  out.kind = m.kind;
  out.beta = m.beta;
  out.m = m.servers;
  out.service = m.service.sampler();
  return out;
}

inline void dump_batches(ojson& block, const sim::BatchDump& dump, const std::string& name,
                         const RunOptions& opts) {
  if (opts.batch_csv_dir.empty()) return;
  const std::string path = opts.batch_csv_dir + "/" + name + "_batches.csv";
  sim::write_batch_csv(dump, path);
  block["sim"]["batch_csv"] = path;
}

inline void simulate_queue(ojson& block, const model::QueueModel& m, const sim::SimConfig& cfg,
                           const std::string& name, const RunOptions& opts) {
  const auto r = sim::simulate_single_queue(queue_sim_model(m), cfg);
  block["estimates"].push_back(estimate("L", r.L, "customers"));
  block["estimates"].push_back(estimate("Lq", r.Lq, "customers"));
  block["estimates"].push_back(estimate("W", r.W, "time"));
  block["estimates"].push_back(estimate("Wq", r.Wq, "time"));
  block["estimates"].push_back(estimate("pi0", r.pi0, "probability"));
  if (m.kind == queues::QueueKind::kMMmm) {
    block["estimates"].push_back(estimate("blocking", r.blocking, "probability"));
  }
  block["sim"]["served"] = r.served;
  dump_batches(block, r.batches, name, opts);
}

inline void simulate_tandem_block(ojson& block, const model::TandemModel& m,
                                  const sim::SimConfig& cfg, const std::string& name,
                                  const RunOptions& opts) {
  const auto r = sim::simulate_tandem(m.lambda, m.mu1, m.mu2, cfg);
  block["estimates"].push_back(estimate("L", r.total_L, "customers"));
  stats::SimEstimate p00;
  p00.point = r.joint(0, 0);
  p00.samples = r.served;
  block["estimates"].push_back(estimate("P[0,0]", p00, "probability"));
  block["sim"]["served"] = r.served;
  dump_batches(block, r.batches, name, opts);
  if (r.saturation_warning) {
    note_error(block, "saturation", "measured utilization reached 0.99");
  }
}

inline void simulate_polling_block(ojson& block, const model::PollingModel& m,
                                   const sim::SimConfig& cfg, const std::string& name,
                                   const RunOptions& opts) {
  const auto r = sim::simulate_polling(m.laws(), m.policy, m.routing, cfg);
  for (std::size_t i = 0; i < r.wait.size(); ++i) {
    block["estimates"].push_back(estimate("W[" + std::to_string(i) + "]", r.wait[i], "time"));
  }
  for (std::size_t i = 0; i < r.mean_cycle.size(); ++i) {
    stats::SimEstimate cyc;
    cyc.point = r.mean_cycle[i];
    block["estimates"].push_back(estimate("EC[" + std::to_string(i) + "]", cyc, "time"));
  }
  block["sim"]["served"] = r.served;
  dump_batches(block, r.batches, name, opts);
}

inline void simulate_ruin_block(ojson& block, const model::RuinModel& m,
                                const sim::SimConfig& cfg, const std::string& name,
                                const RunOptions& opts) {
  const std::size_t replications = std::max<std::size_t>(640, cfg.horizon);
  const auto r = sim::simulate_ruin(m.initial, m.step, replications, cfg.seed, m.drain);
  block["estimates"].push_back(estimate("E[T]", r.mean_T, "steps"));
  block["estimates"].push_back(estimate("Var[T]", r.var_T, "steps^2"));
  block["sim"]["replications"] = r.replications;
  dump_batches(block, r.batches, name, opts);
}

// ---- validate ---------------------------------------------------------

struct DeltaRow {
  std::string name;
  double analytic;
  stats::SimEstimate sim;
};

inline bool append_deltas(ojson& block, const std::vector<DeltaRow>& rows, const char* unit,
                          const RunOptions& opts) {
  bool breach = false;
  for (const auto& row : rows) {
    const double analytic = row.analytic + opts.analytic_bias;
    const double delta = row.sim.point - analytic;
    const bool within = std::fabs(delta) <= opts.tolerance * row.sim.half_width_95;
    ojson d;
    d["name"] = row.name;
    d["analytic"] = analytic;
    d["simulated"] = row.sim.point;
    d["delta"] = delta;
    d["half_width_95"] = row.sim.half_width_95;
    d["within_tolerance"] = within;
    d["unit"] = unit;
    block["deltas"].push_back(d);
    breach = breach || !within;
  }
  return breach;
}

inline bool validate_queue(ojson& block, const model::QueueModel& m, const sim::SimConfig& cfg,
                           const RunOptions& opts) {
  const auto exact = queue_closed_forms(m);
  const auto r = sim::simulate_single_queue(queue_sim_model(m), cfg);
  std::vector<DeltaRow> rows = {{"L", exact.L, r.L},
                                {"Lq", exact.Lq, r.Lq},
                                {"W", exact.W, r.W},
                                {"Wq", exact.Wq, r.Wq},
                                {"pi0", exact.pi0, r.pi0}};
  if (m.kind == queues::QueueKind::kMMmm) rows.push_back({"blocking", exact.blocking, r.blocking});
  block["sim"]["served"] = r.served;
  return append_deltas(block, rows, "mixed", opts);
}

inline bool validate_tandem(ojson& block, const model::TandemModel& m, const sim::SimConfig& cfg,
                            const RunOptions& opts) {
  const auto exact = queues::tandem_metrics(m.lambda, m.mu1, m.mu2);
  const auto r = sim::simulate_tandem(m.lambda, m.mu1, m.mu2, cfg);
  std::vector<DeltaRow> rows = {{"L", exact.total_L(), r.total_L}};
  block["sim"]["served"] = r.served;
  return append_deltas(block, rows, "customers", opts);
}

inline bool validate_polling(ojson& block, const model::PollingModel& m, const sim::SimConfig& cfg,
                             const RunOptions& opts) {
  if (m.routing.kind != sim::RoutingSpec::Kind::kCyclic) {
    // The closed forms assume cyclic routing; other orders are
    // simulation-only, so there is no analytic side to diff against.
    block["note"] = "analytic waits assume cyclic routing; estimates reported without deltas";
    simulate_polling_block(block, m, cfg, block["name"].get<std::string>(), opts);
    return false;
  }
  const auto spec = m.spec();
  const auto waits = polling::mean_waits(spec, m.policy);
  const auto r = sim::simulate_polling(m.laws(), m.policy, m.routing, cfg);
  std::vector<DeltaRow> rows;
  for (std::size_t i = 0; i < waits.size(); ++i) {
    rows.push_back({"W[" + std::to_string(i) + "]", waits[i], r.wait[i]});
  }
  block["sim"]["served"] = r.served;
  return append_deltas(block, rows, "time", opts);
}

inline bool validate_ruin(ojson& block, const model::RuinModel& m, const sim::SimConfig& cfg,
                          const RunOptions& opts) {
  if (m.drain != 1) {
    note_error(block, "analytic", "ruin-time moments are closed-form only for drain 1");
    return false;
  }
  const auto exact = pgf::ruin_time_moments(m.initial, m.step);
  const std::size_t replications = std::max<std::size_t>(640, cfg.horizon);
  const auto r = sim::simulate_ruin(m.initial, m.step, replications, cfg.seed, 1);
  std::vector<DeltaRow> rows = {{"E[T]", exact.mean, r.mean_T}, {"Var[T]", exact.variance, r.var_T}};
  block["sim"]["replications"] = r.replications;
  return append_deltas(block, rows, "steps", opts);
}

// ---- driver -----------------------------------------------------------

enum class Mode { kAnalyze, kSimulate, kValidate };

inline Report run(const model::ModelFile& file, Mode mode, const RunOptions& opts) {
  Report rep;
  rep.doc["version"] = "1";
  rep.doc["mode"] = mode == Mode::kAnalyze ? "analyze"
                    : mode == Mode::kSimulate ? "simulate"
                                              : "validate";
  if (mode != Mode::kAnalyze) {
    rep.doc["sim_config"]["seed"] = file.sim.seed;
    rep.doc["sim_config"]["horizon"] = file.sim.horizon;
    rep.doc["sim_config"]["warmup_fraction"] = file.sim.warmup_fraction;
    rep.doc["sim_config"]["replications"] = file.sim.replications;
    rep.doc["sim_config"]["batch_count"] = file.sim.batch_count;
    if (mode == Mode::kValidate) rep.doc["tolerance"] = opts.tolerance;
  }
  rep.doc["models"] = ojson::array();

  // Deterministic report order regardless of file order.
  std::vector<const model::ModelEntry*> order;
  for (const auto& e : file.models) order.push_back(&e);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->name < b->name; });

  for (const auto* entry : order) {
    ojson block;
    block["name"] = entry->name;
    block["kind"] = entry->kind;
    block["verdicts"] = ojson::object();
    block["metrics"] = ojson::array();
    block["residuals"] = ojson::array();
    block["estimates"] = ojson::array();
    block["deltas"] = ojson::array();
    block["errors"] = ojson::array();

    try {
      if (mode == Mode::kAnalyze) {
        std::visit(
            [&](const auto& m) {
              using T = std::decay_t<decltype(m)>;
              if constexpr (std::is_same_v<T, model::MarkovChainModel>) {
                analyze_markov(block, m);
              } else if constexpr (std::is_same_v<T, model::BirthDeathModel>) {
                analyze_birth_death(block, m);
              } else if constexpr (std::is_same_v<T, model::QueueModel>) {
                analyze_queue(block, m);
              } else if constexpr (std::is_same_v<T, model::TandemModel>) {
                analyze_tandem(block, m);
              } else if constexpr (std::is_same_v<T, model::PollingModel>) {
                analyze_polling(block, m);
              } else if constexpr (std::is_same_v<T, model::DiscretePollingModel>) {
                analyze_discrete_polling(block, m);
              } else if constexpr (std::is_same_v<T, model::PgfModel>) {
                analyze_pgf(block, m);
              } else if constexpr (std::is_same_v<T, model::RuinModel>) {
                analyze_ruin(block, m);
              } else {
                throw ValidationError("unpopulated model entry");
              }
            },
            entry->payload);
      } else if (mode == Mode::kSimulate) {
        std::visit(
            [&](const auto& m) {
              using T = std::decay_t<decltype(m)>;
              if constexpr (std::is_same_v<T, model::QueueModel>) {
                simulate_queue(block, m, file.sim, entry->name, opts);
              } else if constexpr (std::is_same_v<T, model::TandemModel>) {
                simulate_tandem_block(block, m, file.sim, entry->name, opts);
              } else if constexpr (std::is_same_v<T, model::PollingModel>) {
                simulate_polling_block(block, m, file.sim, entry->name, opts);
              } else if constexpr (std::is_same_v<T, model::RuinModel>) {
                simulate_ruin_block(block, m, file.sim, entry->name, opts);
              } else if constexpr (std::is_same_v<T, std::monostate>) {
                throw ValidationError("unpopulated model entry");
              } else {
                block["note"] = "kind has no simulator; use analyze";
              }
            },
            entry->payload);
      } else {
        std::visit(
            [&](const auto& m) {
              using T = std::decay_t<decltype(m)>;
              if constexpr (std::is_same_v<T, model::QueueModel>) {
                rep.validation_breach |= validate_queue(block, m, file.sim, opts);
              } else if constexpr (std::is_same_v<T, model::TandemModel>) {
                rep.validation_breach |= validate_tandem(block, m, file.sim, opts);
              } else if constexpr (std::is_same_v<T, model::PollingModel>) {
                rep.validation_breach |= validate_polling(block, m, file.sim, opts);
              } else if constexpr (std::is_same_v<T, model::RuinModel>) {
                rep.validation_breach |= validate_ruin(block, m, file.sim, opts);
              } else if constexpr (std::is_same_v<T, std::monostate>) {
                throw ValidationError("unpopulated model entry");
              } else {
                block["note"] = "kind has no simulator; analytic values only";
              }
            },
            entry->payload);
      }
    } catch (const UnstableError& e) {
      note_unstable(block, e);
      if (mode == Mode::kValidate) {
        note_error(block, "unstable", "unstable model requested for validation");
        rep.validation_breach = true;
      }
    } catch (const ValidationError& e) {
      note_error(block, "validation", e.what());
    } catch (const DomainError& e) {
      note_error(block, "domain", e.what());
    }

    rep.doc["models"].push_back(block);
  }
  return rep;
}

}  // namespace detail

inline Report run_analyze(const model::ModelFile& file, const RunOptions& opts = {}) {
  return detail::run(file, detail::Mode::kAnalyze, opts);
}
inline Report run_simulate(const model::ModelFile& file, const RunOptions& opts = {}) {
  return detail::run(file, detail::Mode::kSimulate, opts);
}
inline Report run_validate(const model::ModelFile& file, const RunOptions& opts = {}) {
  return detail::run(file, detail::Mode::kValidate, opts);
}

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

inline void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

// Deterministic writer: insertion-ordered keys, reals at 17 significant
// digits, two-space indentation.
inline void write_json(const ojson& v, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (v.type()) {
    case ojson::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : v.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        append_escaped(out, key);
        out += ": ";
        write_json(value, out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case ojson::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        write_json(item, out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case ojson::value_t::string:
      append_escaped(out, v.get<std::string>());
      return;
    case ojson::value_t::boolean:
      out += v.get<bool>() ? "true" : "false";
      return;
    case ojson::value_t::number_integer:
      out += std::to_string(v.get<std::int64_t>());
      return;
    case ojson::value_t::number_unsigned:
      out += std::to_string(v.get<std::uint64_t>());
      return;
    case ojson::value_t::number_float:
      append_double(out, v.get<double>());
      return;
    default:
      out += "null";
      return;
  }
}

inline void csv_field(std::string& out, const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    out += s;
  } else {
    out += '"';
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
  }
}

inline std::string csv_number(const ojson& v) {
  if (v.is_number_float()) {
    std::string s;
    append_double(s, v.get<double>());
    return s;
  }
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_string()) return v.get<std::string>();
  return "";
}

}  // namespace detail

// Canonical JSON rendering: byte-identical for identical inputs and seeds.
inline std::string to_json_string(const Report& rep) {
  std::string out;
  detail::write_json(rep.doc, out, 0);
  out += '\n';
  return out;
}

// Flat CSV: one row per (model, section, metric).
inline std::string to_csv_string(const Report& rep) {
  std::string out = "model,kind,section,name,value,unit,tag,half_width_95,samples,analytic,within\n";
  auto row = [&](const std::string& model, const std::string& kind, const char* section,
                 const ojson& item, const char* value_key) {
    detail::csv_field(out, model);
    out += ',';
    detail::csv_field(out, kind);
    out += ',';
    out += section;
    out += ',';
    detail::csv_field(out, item.value("name", std::string{}));
    out += ',';
    out += item.contains(value_key) ? detail::csv_number(item.at(value_key)) : "";
    out += ',';
    detail::csv_field(out, item.value("unit", std::string{}));
    out += ',';
    detail::csv_field(out, item.value("tag", std::string{}));
    out += ',';
    out += item.contains("half_width_95") ? detail::csv_number(item.at("half_width_95")) : "";
    out += ',';
    out += item.contains("samples") ? detail::csv_number(item.at("samples")) : "";
    out += ',';
    out += item.contains("analytic") ? detail::csv_number(item.at("analytic")) : "";
    out += ',';
    out += item.contains("within_tolerance") ? detail::csv_number(item.at("within_tolerance")) : "";
    out += '\n';
  };
  for (const auto& block : rep.doc.at("models")) {
    const std::string model = block.value("name", std::string{});
    const std::string kind = block.value("kind", std::string{});
    for (const auto& m : block.value("metrics", ojson::array())) row(model, kind, "metric", m, "value");
    for (const auto& m : block.value("residuals", ojson::array())) {
      row(model, kind, "residual", m, "value");
    }
    for (const auto& m : block.value("approximations", ojson::array())) {
      row(model, kind, "approximation", m, "value");
    }
    for (const auto& m : block.value("estimates", ojson::array())) {
      row(model, kind, "estimate", m, "point");
    }
    for (const auto& m : block.value("deltas", ojson::array())) row(model, kind, "delta", m, "delta");
  }
  return out;
}

enum class Format { kJson, kCsv };

inline std::string render(const Report& rep, Format format) {
  return format == Format::kJson ? to_json_string(rep) : to_csv_string(rep);
}

inline void emit_report(const Report& rep, Format format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file '" + path + "'");
  out << render(rep, format);
}

}  // namespace queuelab::report
