#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "queuelab/birth_death.hpp"
#include "queuelab/core.hpp"
#include "queuelab/linalg.hpp"
#include "queuelab/markov.hpp"
#include "queuelab/pgf.hpp"
#include "queuelab/polling.hpp"
#include "queuelab/queue_models.hpp"
#include "queuelab/sim.hpp"

namespace queuelab::model {

using json = nlohmann::json;

struct SchemaViolation {
  std::string path;
  std::string message;
};

// Parse/validation failure carrying every violation found, with JSON paths.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(std::vector<SchemaViolation> violations)
      : std::runtime_error(render(violations)), violations_(std::move(violations)) {}

  const std::vector<SchemaViolation>& violations() const { return violations_; }

 private:
  static std::string render(const std::vector<SchemaViolation>& vs) {
    std::ostringstream os;
    os << "model file is invalid:";
    for (const auto& v : vs) os << "\n  " << v.path << ": " << v.message;
    return os.str();
  }
  std::vector<SchemaViolation> violations_;
};

// A time law given either as a sampling distribution or as two raw moments.
struct LawSpec {
  std::optional<sim::DistSpec> law;
  double m1 = 0.0;
  double m2 = 0.0;

  static LawSpec from_law(sim::DistSpec d) {
    LawSpec s;
    s.m1 = d.m1();
    s.m2 = d.m2();
    s.law = std::move(d);
    return s;
  }
  static LawSpec from_moments(double m1, double m2) {
    LawSpec s;
    s.m1 = m1;
    s.m2 = m2;
    return s;
  }

  // Sampling law; moment-fit when only moments were given.
  sim::DistSpec sampler() const { return law ? *law : sim::DistSpec::fit_moments(m1, m2); }
};

struct MarkovChainModel {
  markov::TransitionMatrix matrix;
  std::optional<markov::Distribution> pi0;
  std::uint64_t steps = 0;
};

struct BirthDeathModel {
  birth_death::BirthDeathSpec spec;
  std::size_t n_max = 10000;
  double tail_tol = 1e-12;
  std::size_t intensity_states = 8;
};

struct QueueModel {
  queues::QueueKind kind;
  double beta;
  double delta;      // service rate where the kind uses one
  std::size_t servers;
  LawSpec service;   // MG1 service law
};

struct TandemModel {
  double lambda, mu1, mu2;
  std::size_t window = 20;
};

struct PollingModel {
  polling::Policy policy;
  std::vector<double> lambdas;
  std::vector<LawSpec> service;
  std::vector<LawSpec> switchover;
  std::optional<double> total_switchover_m2;
  sim::RoutingSpec routing;

  polling::PollingSpec spec() const {
    std::vector<polling::QueueParams> qs;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      qs.push_back({lambdas[i], service[i].m1, service[i].m2, switchover[i].m1,
                    switchover[i].m2});
    }
    return polling::PollingSpec(qs, total_switchover_m2);
  }
  std::vector<sim::PollingQueueLaw> laws() const {
    std::vector<sim::PollingQueueLaw> out;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      out.push_back({lambdas[i], service[i].sampler(), switchover[i].sampler()});
    }
    return out;
  }
};

struct DiscretePollingModel {
  std::vector<double> mu;
  std::vector<double> r;
};

struct PgfModel {
  pgf::PGFSeries g;
};

struct RuinModel {
  pgf::PGFSeries initial;
  pgf::PGFSeries step;
  std::optional<double> w;   // evaluate the transform root here
  std::uint64_t drain = 1;
};

struct ModelEntry {
  std::string name;
  std::string kind;
  std::variant<std::monostate, MarkovChainModel, BirthDeathModel, QueueModel, TandemModel,
               PollingModel, DiscretePollingModel, PgfModel, RuinModel>
      payload;
};

struct ModelFile {
  std::string version;
  std::vector<ModelEntry> models;
  sim::SimConfig sim;
};

namespace detail {

class Reader {
 public:
  Reader(const json& root, std::string path, std::vector<SchemaViolation>& out)
      : node_(root), path_(std::move(path)), out_(out) {}

  bool ok() const { return ok_; }

  void reject_unknown_keys(std::initializer_list<const char*> allowed) {
    if (!node_.is_object()) return;
    for (const auto& [key, value] : node_.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) fail(path_ + "." + key, "unknown key");
    }
  }

  bool has(const char* key) const { return node_.is_object() && node_.contains(key); }

  double number(const char* key, double lo = -1e308, double hi = 1e308) {
    if (!require(key)) return 0.0;
    const auto& v = node_.at(key);
    if (!v.is_number()) {
      fail(path_ + "." + key, "expected a number");
      return 0.0;
    }
    const double d = v.get<double>();
    if (d < lo || d > hi) {
      char msg[128];
      std::snprintf(msg, sizeof(msg), "value %g out of range [%g, %g]", d, lo, hi);
      fail(path_ + "." + key, msg);
      return 0.0;
    }
    return d;
  }

  double number_or(const char* key, double fallback, double lo = -1e308, double hi = 1e308) {
    return has(key) ? number(key, lo, hi) : fallback;
  }

  std::uint64_t integer(const char* key, std::uint64_t lo, std::uint64_t hi) {
    if (!require(key)) return lo;
    const auto& v = node_.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      fail(path_ + "." + key, "expected an integer");
      return lo;
    }
    const auto i = v.get<std::int64_t>();
    if (i < 0 || static_cast<std::uint64_t>(i) < lo || static_cast<std::uint64_t>(i) > hi) {
      fail(path_ + "." + key, "integer out of range");
      return lo;
    }
    return static_cast<std::uint64_t>(i);
  }

  std::uint64_t integer_or(const char* key, std::uint64_t fallback, std::uint64_t lo,
                           std::uint64_t hi) {
    return has(key) ? integer(key, lo, hi) : fallback;
  }

  std::string text(const char* key) {
    if (!require(key)) return {};
    const auto& v = node_.at(key);
    if (!v.is_string()) {
      fail(path_ + "." + key, "expected a string");
      return {};
    }
    return v.get<std::string>();
  }

  std::vector<double> number_list(const char* key, std::size_t min_len = 1) {
    std::vector<double> out;
    if (!require(key)) return out;
    const auto& v = node_.at(key);
    if (!v.is_array() || v.size() < min_len) {
      fail(path_ + "." + key, "expected an array with at least " + std::to_string(min_len) +
                                  " entries");
      return out;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(path_ + "." + key + "[" + std::to_string(i) + "]", "expected a number");
        return {};
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  const json& raw(const char* key) {
    static const json null_json;
    if (!require(key)) return null_json;
    return node_.at(key);
  }

  void fail(std::string path, std::string message) {
    out_.push_back({std::move(path), std::move(message)});
    ok_ = false;
  }
  void fail_here(std::string message) { fail(path_, std::move(message)); }

  const json& node() const { return node_; }
  const std::string& path() const { return path_; }
  std::vector<SchemaViolation>& sink() { return out_; }

 private:
  bool require(const char* key) {
    if (!node_.is_object() || !node_.contains(key)) {
      fail(path_ + "." + key, "missing required field");
      return false;
    }
    return true;
  }

  const json& node_;
  std::string path_;
  std::vector<SchemaViolation>& out_;
  bool ok_ = true;
};

inline std::optional<sim::DistSpec> parse_dist(Reader& r) {
  const std::string kind = r.text("kind");
  if (!r.ok()) return std::nullopt;
  try {
    if (kind == "exponential") {
      r.reject_unknown_keys({"kind", "mean"});
      return sim::DistSpec::exponential(r.number("mean", 1e-300));
    }
    if (kind == "deterministic") {
      r.reject_unknown_keys({"kind", "value"});
      return sim::DistSpec::deterministic(r.number("value", 1e-300));
    }
    if (kind == "erlang") {
      r.reject_unknown_keys({"kind", "stages", "mean"});
      return sim::DistSpec::erlang(static_cast<std::size_t>(r.integer("stages", 1, 1000)),
                                   r.number("mean", 1e-300));
    }
    if (kind == "discrete") {
      r.reject_unknown_keys({"kind", "values", "probs"});
      return sim::DistSpec::discrete(r.number_list("values"), r.number_list("probs"));
    }
  } catch (const ValidationError& e) {
    r.fail_here(e.what());
    return std::nullopt;
  }
  r.fail_here("unknown law kind '" + kind + "'");
  return std::nullopt;
}

inline std::optional<LawSpec> parse_law(Reader& parent, const char* key) {
  const json& node = parent.raw(key);
  if (node.is_null()) return std::nullopt;
  Reader r(node, parent.path() + "." + key, parent.sink());
  if (!node.is_object()) {
    r.fail_here("expected an object");
    return std::nullopt;
  }
  if (node.contains("moments")) {
    r.reject_unknown_keys({"moments"});
    const auto m = r.number_list("moments", 2);
    if (m.size() != 2) {
      r.fail_here("moments must be [m1, m2]");
      return std::nullopt;
    }
    if (!(m[0] > 0.0) || m[1] < m[0] * m[0]) {
      r.fail_here("moments must satisfy m1 > 0 and m2 >= m1^2");
      return std::nullopt;
    }
    return LawSpec::from_moments(m[0], m[1]);
  }
  auto dist = parse_dist(r);
  if (!dist) return std::nullopt;
  return LawSpec::from_law(std::move(*dist));
}

inline std::optional<pgf::PGFSeries> parse_pgf(Reader& parent, const char* key) {
  const json& node = parent.raw(key);
  if (node.is_null()) return std::nullopt;
  Reader r(node, parent.path() + "." + key, parent.sink());
  if (!node.is_object()) {
    r.fail_here("expected an object");
    return std::nullopt;
  }
  const std::string family = r.text("family");
  if (!r.ok()) return std::nullopt;
  try {
    if (family == "poisson") {
      r.reject_unknown_keys({"family", "mean"});
      return pgf::PGFSeries::poisson(r.number("mean", 0.0));
    }
    if (family == "geometric") {
      r.reject_unknown_keys({"family", "p"});
      return pgf::PGFSeries::geometric(r.number("p", 1e-12, 1.0));
    }
    if (family == "bernoulli_quadratic") {
      r.reject_unknown_keys({"family", "a0", "a2"});
      return pgf::PGFSeries::bernoulli_quadratic(r.number("a0", 0.0, 1.0),
                                                 r.number("a2", 0.0, 1.0));
    }
    if (family == "degenerate") {
      r.reject_unknown_keys({"family", "k"});
      return pgf::PGFSeries::degenerate(static_cast<std::size_t>(r.integer("k", 0, 1000000)));
    }
    if (family == "coefficients") {
      r.reject_unknown_keys({"family", "coeffs"});
      return pgf::PGFSeries::from_coefficients(r.number_list("coeffs"));
    }
    if (family == "compound") {
      r.reject_unknown_keys({"family", "outer", "inner"});
      auto outer = parse_pgf(r, "outer");
      auto inner = parse_pgf(r, "inner");
      if (!outer || !inner) return std::nullopt;
      return pgf::pgf_compose(*outer, *inner);
    }
  } catch (const ValidationError& e) {
    r.fail_here(e.what());
    return std::nullopt;
  } catch (const DomainError& e) {
    r.fail_here(e.what());
    return std::nullopt;
  }
  r.fail_here("unknown PGF family '" + family + "'");
  return std::nullopt;
}

inline std::optional<ModelEntry> parse_entry(const json& node, std::size_t index,
                                             std::vector<SchemaViolation>& out) {
  const std::string path = "models[" + std::to_string(index) + "]";
  Reader r(node, path, out);
  if (!node.is_object()) {
    r.fail_here("expected an object");
    return std::nullopt;
  }
  ModelEntry entry;
  entry.name = r.has("name") ? r.text("name") : "model-" + std::to_string(index);
  entry.kind = r.text("kind");
  if (!r.ok()) return std::nullopt;

  try {
    if (entry.kind == "markov_chain") {
      r.reject_unknown_keys({"name", "kind", "matrix", "labels", "pi0", "steps"});
      const json& rows = r.raw("matrix");
      if (!rows.is_array() || rows.empty()) {
        r.fail(path + ".matrix", "expected a nonempty array of rows");
        return std::nullopt;
      }
      const std::size_t n = rows.size();
      linalg::Matrix m(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        if (!rows[i].is_array() || rows[i].size() != n) {
          r.fail(path + ".matrix[" + std::to_string(i) + "]", "expected a row of length " +
                                                                  std::to_string(n));
          return std::nullopt;
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (!rows[i][j].is_number()) {
            r.fail(path + ".matrix", "matrix entries must be numbers");
            return std::nullopt;
          }
          m(i, j) = rows[i][j].get<double>();
        }
      }
      std::vector<std::string> labels;
      if (r.has("labels")) {
        for (const auto& l : r.raw("labels")) labels.push_back(l.get<std::string>());
        if (labels.size() != n) {
          r.fail(path + ".labels", "label count must match the matrix dimension");
          return std::nullopt;
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
      }
      MarkovChainModel mc{markov::TransitionMatrix(std::move(labels), std::move(m)), std::nullopt,
                          0};
      if (r.has("pi0")) {
        const auto weights = r.number_list("pi0");
        if (weights.size() != n) {
          r.fail(path + ".pi0", "length must match the matrix dimension");
          return std::nullopt;
        }
        mc.pi0 = markov::Distribution(weights);
        mc.steps = r.integer_or("steps", 1, 0, 1000000);
      }
      entry.payload = std::move(mc);
      return entry;
    }

    if (entry.kind == "birth_death") {
      r.reject_unknown_keys({"name", "kind", "family", "beta", "delta", "servers", "births",
                             "deaths", "n_max", "tail_tol", "intensity_states"});
      const std::string family = r.text("family");
      if (!r.ok()) return std::nullopt;
      std::optional<birth_death::BirthDeathSpec> spec;
      if (family == "constant") {
        spec = birth_death::BirthDeathSpec::constant_rates(r.number("beta", 1e-300),
                                                           r.number("delta", 1e-300));
      } else if (family == "linear") {
        spec = birth_death::BirthDeathSpec::linear_death(r.number("beta", 1e-300),
                                                         r.number("delta", 1e-300));
      } else if (family == "mserver") {
        spec = birth_death::BirthDeathSpec::m_server(
            r.number("beta", 1e-300), r.number("delta", 1e-300),
            static_cast<std::size_t>(r.integer("servers", 1, 100000)));
      } else if (family == "capped") {
        spec = birth_death::BirthDeathSpec::capped(
            r.number("beta", 1e-300), r.number("delta", 1e-300),
            static_cast<std::size_t>(r.integer("servers", 1, 100000)));
      } else if (family == "table") {
        spec = birth_death::BirthDeathSpec::from_table(r.number_list("births"),
                                                       r.number_list("deaths"));
      } else {
        r.fail(path + ".family", "unknown family '" + family + "'");
        return std::nullopt;
      }
      if (!r.ok()) return std::nullopt;
      BirthDeathModel bd{std::move(*spec),
                         static_cast<std::size_t>(r.integer_or("n_max", 10000, 10, 100000000)),
                         r.number_or("tail_tol", 1e-12, 1e-300, 0.1),
                         static_cast<std::size_t>(r.integer_or("intensity_states", 8, 2, 10000))};
      entry.payload = std::move(bd);
      return entry;
    }

    if (entry.kind == "queue") {
      r.reject_unknown_keys(
          {"name", "kind", "model", "beta", "delta", "servers", "service", "service_moments"});
      const std::string model = r.text("model");
      if (!r.ok()) return std::nullopt;
      QueueModel q{queues::QueueKind::kMM1, r.number("beta", 0.0), 0.0, 1,
                   LawSpec::from_moments(1.0, 1.0)};
      if (model == "MM1") {
        q.kind = queues::QueueKind::kMM1;
        q.delta = r.number("delta", 1e-300);
        q.service = LawSpec::from_law(sim::DistSpec::exponential(1.0 / q.delta));
      } else if (model == "MMInf") {
        q.kind = queues::QueueKind::kMMInf;
        q.delta = r.number("delta", 1e-300);
        q.service = LawSpec::from_law(sim::DistSpec::exponential(1.0 / q.delta));
      } else if (model == "MMm") {
        q.kind = queues::QueueKind::kMMm;
        q.delta = r.number("delta", 1e-300);
        q.servers = static_cast<std::size_t>(r.integer("servers", 1, 100000));
        q.service = LawSpec::from_law(sim::DistSpec::exponential(1.0 / q.delta));
      } else if (model == "MMmm") {
        q.kind = queues::QueueKind::kMMmm;
        q.delta = r.number("delta", 1e-300);
        q.servers = static_cast<std::size_t>(r.integer("servers", 1, 100000));
        q.service = LawSpec::from_law(sim::DistSpec::exponential(1.0 / q.delta));
      } else if (model == "MG1") {
        q.kind = queues::QueueKind::kMG1;
        if (r.has("service_moments")) {
          const auto m = r.number_list("service_moments", 2);
          if (m.size() != 2 || !(m[0] > 0.0) || m[1] < m[0] * m[0]) {
            r.fail(path + ".service_moments", "expected [m1, m2] with m1 > 0, m2 >= m1^2");
            return std::nullopt;
          }
          q.service = LawSpec::from_moments(m[0], m[1]);
        } else {
          auto law = parse_law(r, "service");
          if (!law) return std::nullopt;
          q.service = std::move(*law);
        }
        q.delta = 1.0 / q.service.m1;
      } else {
        r.fail(path + ".model", "unknown queue model '" + model + "'");
        return std::nullopt;
      }
      if (!r.ok()) return std::nullopt;
      entry.payload = std::move(q);
      return entry;
    }

    if (entry.kind == "tandem") {
      r.reject_unknown_keys({"name", "kind", "lambda", "mu1", "mu2", "window"});
      TandemModel t{r.number("lambda", 1e-300), r.number("mu1", 1e-300),
                    r.number("mu2", 1e-300),
                    static_cast<std::size_t>(r.integer_or("window", 20, 1, 200))};
      if (!r.ok()) return std::nullopt;
      entry.payload = std::move(t);
      return entry;
    }

    if (entry.kind == "polling") {
      r.reject_unknown_keys(
          {"name", "kind", "policy", "queues", "total_switchover_m2", "routing"});
      PollingModel p;
      const std::string policy = r.text("policy");
      if (policy == "exhaustive") {
        p.policy = polling::Policy::kExhaustive;
      } else if (policy == "gated") {
        p.policy = polling::Policy::kGated;
      } else {
        r.fail(path + ".policy", "expected 'exhaustive' or 'gated'");
        return std::nullopt;
      }
      const json& queues_node = r.raw("queues");
      if (!queues_node.is_array() || queues_node.empty()) {
        r.fail(path + ".queues", "expected a nonempty array");
        return std::nullopt;
      }
      for (std::size_t i = 0; i < queues_node.size(); ++i) {
        Reader qr(queues_node[i], path + ".queues[" + std::to_string(i) + "]", out);
        qr.reject_unknown_keys({"lambda", "service", "switchover"});
        p.lambdas.push_back(qr.number("lambda", 1e-300));
        auto service = parse_law(qr, "service");
        auto switchover = parse_law(qr, "switchover");
        if (!service || !switchover || !qr.ok()) return std::nullopt;
        p.service.push_back(std::move(*service));
        p.switchover.push_back(std::move(*switchover));
      }
      if (r.has("total_switchover_m2")) {
        p.total_switchover_m2 = r.number("total_switchover_m2", 0.0);
      }
      p.routing = sim::RoutingSpec::cyclic();
      if (r.has("routing")) {
        Reader rr(r.raw("routing"), path + ".routing", out);
        const std::string rk = rr.text("order");
        if (rk == "cyclic") {
          rr.reject_unknown_keys({"order"});
        } else if (rk == "periodic") {
          rr.reject_unknown_keys({"order", "table"});
          std::vector<std::size_t> table;
          for (double v : rr.number_list("table")) {
            if (v < 0 || v >= static_cast<double>(p.lambdas.size()) ||
                v != std::floor(v)) {
              rr.fail_here("table entries must be queue indices");
              return std::nullopt;
            }
            table.push_back(static_cast<std::size_t>(v));
          }
          if (!rr.ok()) return std::nullopt;
          p.routing = sim::RoutingSpec::periodic(std::move(table));
        } else if (rk == "random") {
          rr.reject_unknown_keys({"order", "probs"});
          p.routing = sim::RoutingSpec::random(rr.number_list("probs"));
        } else {
          rr.fail_here("expected order cyclic, periodic or random");
          return std::nullopt;
        }
        if (!rr.ok()) return std::nullopt;
      }
      if (!r.ok()) return std::nullopt;
      entry.payload = std::move(p);
      return entry;
    }

    if (entry.kind == "discrete_polling") {
      r.reject_unknown_keys({"name", "kind", "mu", "r"});
      DiscretePollingModel d{r.number_list("mu"), r.number_list("r")};
      if (!r.ok()) return std::nullopt;
      if (d.mu.size() != d.r.size()) {
        r.fail(path, "mu and r must have the same length");
        return std::nullopt;
      }
      entry.payload = std::move(d);
      return entry;
    }

    if (entry.kind == "pgf") {
      r.reject_unknown_keys({"name", "kind", "g"});
      auto g = parse_pgf(r, "g");
      if (!g) return std::nullopt;
      entry.payload = PgfModel{std::move(*g)};
      return entry;
    }

    if (entry.kind == "ruin") {
      r.reject_unknown_keys({"name", "kind", "initial", "step", "w", "drain"});
      auto initial = parse_pgf(r, "initial");
      auto step = parse_pgf(r, "step");
      if (!initial || !step) return std::nullopt;
      RuinModel m{std::move(*initial), std::move(*step), std::nullopt,
                  r.integer_or("drain", 1, 1, 100)};
      if (r.has("w")) m.w = r.number("w", 1e-12, 1.0);
      if (!r.ok()) return std::nullopt;
      entry.payload = std::move(m);
      return entry;
    }
  } catch (const ValidationError& e) {
    out.push_back({path, e.what()});
    return std::nullopt;
  }

  out.push_back({path + ".kind", "unknown model kind '" + entry.kind + "'"});
  return std::nullopt;
}

}  // namespace detail

// Parses and validates a model file; throws SchemaError listing every
// violation with its JSON path. Unknown keys are rejected.
inline ModelFile parse_model_file_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::vector<SchemaViolation>{{"$", std::string("JSON parse error: ") + e.what()}});
  }
  std::vector<SchemaViolation> violations;
  detail::Reader r(root, "$", violations);
  if (!root.is_object()) {
    throw SchemaError(std::vector<SchemaViolation>{{"$", "expected a JSON object"}});
  }
  r.reject_unknown_keys({"version", "models", "sim"});

  ModelFile file;
  file.version = r.has("version") ? r.text("version") : "1";
  if (file.version != "1") violations.push_back({"$.version", "unsupported schema version"});

  const json& models = r.raw("models");
  if (!models.is_array() || models.empty()) {
    violations.push_back({"$.models", "expected a nonempty array"});
  } else {
    for (std::size_t i = 0; i < models.size(); ++i) {
      auto entry = detail::parse_entry(models[i], i, violations);
      if (entry) file.models.push_back(std::move(*entry));
    }
    for (std::size_t i = 0; i < file.models.size(); ++i) {
      for (std::size_t j = i + 1; j < file.models.size(); ++j) {
        if (file.models[i].name == file.models[j].name) {
          violations.push_back(
              {"$.models", "duplicate model name '" + file.models[i].name + "'"});
        }
      }
    }
  }

  if (r.has("sim")) {
    detail::Reader sr(r.raw("sim"), "$.sim", violations);
    sr.reject_unknown_keys({"seed", "horizon", "warmup_fraction", "replications", "batch_count"});
    file.sim.seed = sr.integer_or("seed", 1, 0, UINT64_MAX / 2);
    file.sim.horizon = sr.integer_or("horizon", 100000, 1, UINT64_MAX / 2);
    file.sim.warmup_fraction = sr.number_or("warmup_fraction", 0.2, 0.0, 0.99);
    file.sim.replications =
        static_cast<std::size_t>(sr.integer_or("replications", 1, 1, 100000));
    file.sim.batch_count = static_cast<std::size_t>(sr.integer_or("batch_count", 32, 10, 100000));
  }

  if (!violations.empty()) throw SchemaError(std::move(violations));
  return file;
}

inline ModelFile parse_model_file(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw SchemaError(std::vector<SchemaViolation>{{"$", "cannot open file '" + file_path + "'"}});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model_file_text(buffer.str());
}

// Human- and machine-readable schema description, served by the CLI.
inline std::string schema_text() {
  return R"schema({
  "version": "1",
  "models": "array of model entries; each entry has a unique 'name' and a 'kind'",
  "kinds": {
    "markov_chain": {
      "matrix": "square row-stochastic matrix as array of rows",
      "labels": "optional state names",
      "pi0": "optional initial distribution (enables evolution)",
      "steps": "steps to evolve pi0 (default 1)",
      "example": {"name": "two-state", "kind": "markov_chain", "matrix": [[0.7, 0.3], [0.2, 0.8]]}
    },
    "birth_death": {
      "family": "constant | linear | mserver | capped | table",
      "beta/delta": "rates for the closed-form families",
      "servers": "server count for mserver/capped",
      "births/deaths": "rate tables for family 'table' (constant continuation)",
      "n_max/tail_tol/intensity_states": "optional numeric controls",
      "example": {"name": "mm1-rates", "kind": "birth_death", "family": "constant", "beta": 1.0, "delta": 2.0}
    },
    "queue": {
      "model": "MM1 | MMInf | MMm | MMmm | MG1",
      "beta": "arrival rate",
      "delta": "service rate (all but MG1)",
      "servers": "server count (MMm, MMmm)",
      "service": "MG1 service law: {kind: exponential|deterministic|erlang|discrete, ...}",
      "service_moments": "MG1 alternative: [m1, m2]",
      "example": {"name": "mm1", "kind": "queue", "model": "MM1", "beta": 1.0, "delta": 2.0}
    },
    "tandem": {
      "lambda/mu1/mu2": "arrival and service rates",
      "window": "balance-check window (default 20)",
      "example": {"name": "pair", "kind": "tandem", "lambda": 1.0, "mu1": 2.0, "mu2": 3.0}
    },
    "polling": {
      "policy": "exhaustive | gated",
      "queues": "array of {lambda, service: law-or-{moments:[m1,m2]}, switchover: same}",
      "total_switchover_m2": "optional second moment of the total switchover per cycle",
      "routing": "optional {order: cyclic|periodic|random, table?, probs?} (simulation only)",
      "example": {"name": "vac", "kind": "polling", "policy": "exhaustive",
                  "queues": [{"lambda": 0.25, "service": {"kind": "exponential", "mean": 1.0},
                              "switchover": {"kind": "deterministic", "value": 0.5}}]}
    },
    "discrete_polling": {
      "mu": "per-queue expected work per slot (each < 1, sum < 1)",
      "r": "per-queue mean switchover slots",
      "example": {"name": "slots", "kind": "discrete_polling", "mu": [0.3, 0.3], "r": [1.0, 1.0]}
    },
    "pgf": {
      "g": "PGF descriptor: {family: poisson|geometric|bernoulli_quadratic|degenerate|coefficients|compound, ...}",
      "example": {"name": "branching", "kind": "pgf", "g": {"family": "bernoulli_quadratic", "a0": 0.4, "a2": 0.6}}
    },
    "ruin": {
      "initial": "PGF of the initial capital",
      "step": "PGF of the per-step gain (mean < drain)",
      "w": "optional transform argument in (0,1] for the root theta(w)",
      "drain": "units removed per step (default 1)",
      "example": {"name": "gambler", "kind": "ruin", "initial": {"family": "degenerate", "k": 1},
                  "step": {"family": "poisson", "mean": 0.5}, "w": 0.5}
    }
  },
  "sim": {"seed": 1, "horizon": 100000, "warmup_fraction": 0.2, "replications": 1, "batch_count": 32}
})schema";
}

}  // namespace queuelab::model
