#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <fstream>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "queuelab/core.hpp"
#include "queuelab/linalg.hpp"
#include "queuelab/pgf.hpp"
#include "queuelab/polling.hpp"
#include "queuelab/queue_models.hpp"
#include "queuelab/rng.hpp"
#include "queuelab/stats.hpp"

namespace queuelab::sim {

using stats::SimEstimate;

struct SimConfig {
  std::uint64_t seed = 1;
  std::uint64_t horizon = 100000;  // served customers per replication
  double warmup_fraction = 0.2;
  std::size_t replications = 1;
  std::size_t batch_count = 32;

  void validate() const {
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
      throw ValidationError("warmup fraction must lie in [0,1)");
    }
    if (replications < 1) throw ValidationError("replications must be >= 1");
    if (batch_count < 10) throw ValidationError("batch_count must be >= 10");
    if (horizon < batch_count * 10) {
      throw ValidationError("horizon too small for the requested batch count");
    }
  }

  std::uint64_t warmup_count() const {
    return static_cast<std::uint64_t>(warmup_fraction * static_cast<double>(horizon));
  }
};

// Sampling law for service and switchover times with exact first two moments.
struct DistSpec {
  enum class Kind { kExponential, kDeterministic, kErlang, kErlangMix, kDiscrete, kHyperExp2 };
  Kind kind = Kind::kExponential;
  double mean = 1.0;
  std::size_t k = 1;                          // Erlang stages
  double mix_p = 0.0;                         // Erlang-mixture branch probability
  std::vector<double> values, probs;          // discrete table
  double p1 = 0.5, mean1 = 1.0, mean2 = 1.0;  // hyperexponential branches

  static DistSpec exponential(double mean) {
    DistSpec d;
    d.kind = Kind::kExponential;
    d.mean = check_mean(mean);
    return d;
  }
  static DistSpec deterministic(double value) {
    DistSpec d;
    d.kind = Kind::kDeterministic;
    d.mean = check_mean(value);
    return d;
  }
  static DistSpec erlang(std::size_t stages, double mean) {
    if (stages < 1) throw ValidationError("erlang needs >= 1 stage");
    DistSpec d;
    d.kind = Kind::kErlang;
    d.k = stages;
    d.mean = check_mean(mean);
    return d;
  }
  static DistSpec discrete(std::vector<double> values, std::vector<double> probs) {
    DistSpec d;
    d.kind = Kind::kDiscrete;
    if (values.size() != probs.size() || values.empty()) {
      throw ValidationError("discrete law needs matching value/probability lists");
    }
    double total = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw ValidationError("discrete probability < 0");
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
      throw ValidationError("discrete probabilities sum to " + std::to_string(total));
    }
    for (double v : values) {
      if (!(v >= 0.0)) throw ValidationError("discrete time value < 0");
    }
    d.values = std::move(values);
    d.probs = std::move(probs);
    return d;
  }

  // Two-moment fit: deterministic/exponential where the squared coefficient
  // of variation says so, an Erlang(k-1, k) mixture below one, a
  // balanced-means hyperexponential above one.
  static DistSpec fit_moments(double m1, double m2) {
    if (!(m1 > 0.0) || m2 < m1 * m1 - 1e-12) throw ValidationError("bad moments for fit");
    const double cv2 = std::max(0.0, (m2 - m1 * m1) / (m1 * m1));
    if (cv2 < 1e-9) return deterministic(m1);
    if (std::fabs(cv2 - 1.0) < 1e-9) return exponential(m1);
    if (cv2 < 1.0) {
      const auto stages = static_cast<std::size_t>(std::ceil(1.0 / cv2));
      const double kd = static_cast<double>(stages);
      if (std::fabs(cv2 - 1.0 / kd) < 1e-12) return erlang(stages, m1);
      DistSpec d;
      d.kind = Kind::kErlangMix;
      d.k = stages;
      d.mean = m1;
      d.mix_p = (kd * cv2 - std::sqrt(kd * (1.0 + cv2) - kd * kd * cv2)) / (1.0 + cv2);
      return d;
    }
    DistSpec d;
    d.kind = Kind::kHyperExp2;
    const double q = 0.5 * (1.0 + std::sqrt((cv2 - 1.0) / (cv2 + 1.0)));
    d.p1 = q;
    d.mean1 = m1 / (2.0 * q);
    d.mean2 = m1 / (2.0 * (1.0 - q));
    d.mean = m1;
    return d;
  }

  double sample(rng::Xoshiro256& gen) const {
    switch (kind) {
      case Kind::kExponential: return gen.exponential(mean);
      case Kind::kDeterministic: return mean;
      case Kind::kErlang: return gen.erlang(k, mean);
      case Kind::kErlangMix: {
        const double rate = (static_cast<double>(k) - mix_p) / mean;
        const std::size_t stages = gen.uniform() < mix_p ? k - 1 : k;
        double total = 0.0;
        for (std::size_t i = 0; i < stages; ++i) total += gen.exponential(1.0 / rate);
        return total;
      }
      case Kind::kDiscrete: {
        double u = gen.uniform();
        for (std::size_t i = 0; i < values.size(); ++i) {
          if (u < probs[i]) return values[i];
          u -= probs[i];
        }
        return values.back();
      }
      case Kind::kHyperExp2:
        return gen.uniform() < p1 ? gen.exponential(mean1) : gen.exponential(mean2);
    }
    return 0.0;
  }

  double m1() const {
    switch (kind) {
      case Kind::kExponential:
      case Kind::kDeterministic:
      case Kind::kErlang:
      case Kind::kErlangMix:
        return mean;
      case Kind::kDiscrete: {
        double m = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
        return m;
      }
      case Kind::kHyperExp2:
        return p1 * mean1 + (1.0 - p1) * mean2;
    }
    return 0.0;
  }

  double m2() const {
    switch (kind) {
      case Kind::kExponential: return 2.0 * mean * mean;
      case Kind::kDeterministic: return mean * mean;
      case Kind::kErlang: {
        const double kd = static_cast<double>(k);
        return mean * mean * (kd + 1.0) / kd;
      }
      case Kind::kErlangMix: {
        const double rate = (static_cast<double>(k) - mix_p) / mean;
        const double a = static_cast<double>(k - 1), b = static_cast<double>(k);
        return (mix_p * a * (a + 1.0) + (1.0 - mix_p) * b * (b + 1.0)) / (rate * rate);
      }
      case Kind::kDiscrete: {
        double m = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * values[i] * probs[i];
        return m;
      }
      case Kind::kHyperExp2:
        return 2.0 * (p1 * mean1 * mean1 + (1.0 - p1) * mean2 * mean2);
    }
    return 0.0;
  }

 private:
  static double check_mean(double m) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ValidationError("law mean must be > 0");
    return m;
  }
};

namespace detail {

struct Event {
  double t;
  std::uint64_t seq;  // tie-break keeps the heap deterministic
  int type;
  std::uint64_t payload;

  bool operator>(const Event& other) const {
    if (t != other.t) return t > other.t;
    return seq > other.seq;
  }
};

using EventQueue = std::priority_queue<Event, std::vector<Event>, std::greater<Event>>;

// Per-customer metric averaged within equally sized batches.
class BatchSeries {
 public:
  void add(double value) {
    sum_ += value;
    ++count_;
  }
  void close() {
    batches_.push_back(count_ ? sum_ / static_cast<double>(count_) : 0.0);
    sum_ = 0.0;
    count_ = 0;
  }
  void push_batch(double value) { batches_.push_back(value); }
  SimEstimate estimate(std::uint64_t samples) const {
    return stats::from_batches(batches_, samples);
  }
  std::size_t closed() const { return batches_.size(); }
  const std::vector<double>& batches() const { return batches_; }

 private:
  double sum_ = 0.0;
  std::uint64_t count_ = 0;
  std::vector<double> batches_;
};

// Time-weighted average over batch windows.
class TimeWeighted {
 public:
  void advance(double now, double level) {
    area_ += (now - last_t_) * level;
    last_t_ = now;
  }
  void reset(double now) {
    last_t_ = now;
    window_start_ = now;
    area_ = 0.0;
  }
  void close(double now, double level) {
    advance(now, level);
    const double span = now - window_start_;
    batches_.push_back(span > 0.0 ? area_ / span : 0.0);
    area_ = 0.0;
    window_start_ = now;
  }
  SimEstimate estimate(std::uint64_t samples) const {
    return stats::from_batches(batches_, samples);
  }
  const std::vector<double>& batches() const { return batches_; }

 private:
  double last_t_ = 0.0;
  double window_start_ = 0.0;
  double area_ = 0.0;
  std::vector<double> batches_;
};

inline SimEstimate merge_replications(const std::vector<SimEstimate>& reps) {
  if (reps.size() == 1) return reps.front();
  std::vector<double> points;
  std::uint64_t samples = 0;
  for (const auto& r : reps) {
    points.push_back(r.point);
    samples += r.samples;
  }
  return stats::from_batches(points, samples);
}

}  // namespace detail

// Raw per-batch sample series, keyed by metric name, for external analysis.
using BatchDump = std::vector<std::pair<std::string, std::vector<double>>>;

inline void write_batch_csv(const BatchDump& dump, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open batch CSV file '" + path + "'");
  out << "series,batch,value\n";
  char buf[40];
  for (const auto& [name, values] : dump) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
      out << name << ',' << i << ',' << buf << '\n';
    }
  }
}

struct SingleQueueModel {
  queues::QueueKind kind = queues::QueueKind::kMM1;
  double beta = 1.0;
  DistSpec service = DistSpec::exponential(1.0);
  std::size_t m = 1;  // servers for M/M/m, servers = capacity for M/M/m/m
};

struct QueueSimResult {
  SimEstimate L, Lq, W, Wq, pi0, blocking;
  std::uint64_t served = 0;
  double measured_arrival_rate = 0.0;  // post-warmup
  BatchDump batches;
};

namespace detail {

inline QueueSimResult run_single_queue_once(const SingleQueueModel& model, const SimConfig& cfg,
                                            rng::Xoshiro256 gen) {
  using queues::QueueKind;
  QueueSimResult out;
  if (model.beta <= 0.0) return out;  // no arrivals, nothing to measure

  const bool loss = model.kind == QueueKind::kMMmm;
  const std::size_t servers =
      model.kind == QueueKind::kMM1 || model.kind == QueueKind::kMG1 ? 1
      : model.kind == QueueKind::kMMInf                              ? SIZE_MAX
                                                                     : model.m;
  const double mean_interarrival = 1.0 / model.beta;

  constexpr int kArrival = 0, kDeparture = 1;
  EventQueue events;
  std::uint64_t seq = 0;

  struct ServiceTag {
    double arrival;
    double start;
  };
  std::vector<ServiceTag> tags;        // departure payload indexes into this
  std::vector<std::uint64_t> free_tags;  // recycled slots, keeps memory flat
  std::deque<double> waiting;          // arrival stamps of queued customers
  std::size_t in_system = 0, in_service = 0;
  double now = 0.0;

  const std::uint64_t warmup = cfg.warmup_count();
  const std::uint64_t measured = cfg.horizon - warmup;
  const std::uint64_t per_batch = std::max<std::uint64_t>(1, measured / cfg.batch_count);

  detail::BatchSeries w_series, wq_series, block_series;
  detail::TimeWeighted l_series, lq_series, empty_series;
  std::uint64_t departures = 0, post_departures = 0;
  std::uint64_t offered_in_batch = 0, lost_in_batch = 0;
  std::uint64_t offered_post = 0;
  bool warm = warmup == 0;
  double warm_start = 0.0;

  auto advance_clocks = [&](double t) {
    if (!warm) return;
    l_series.advance(t, static_cast<double>(in_system));
    lq_series.advance(t, static_cast<double>(in_system - in_service));
    empty_series.advance(t, in_system == 0 ? 1.0 : 0.0);
  };

  auto start_service = [&](double arrival_stamp) {
    ++in_service;
    std::uint64_t slot;
    if (free_tags.empty()) {
      tags.push_back({arrival_stamp, now});
      slot = tags.size() - 1;
    } else {
      slot = free_tags.back();
      free_tags.pop_back();
      tags[slot] = {arrival_stamp, now};
    }
    events.push({now + model.service.sample(gen), seq++, kDeparture, slot});
  };

  events.push({gen.exponential(mean_interarrival), seq++, kArrival, 0});

  while (departures < cfg.horizon) {
    const Event ev = events.top();
    events.pop();
    advance_clocks(ev.t);
    now = ev.t;

    if (ev.type == kArrival) {
      events.push({now + gen.exponential(mean_interarrival), seq++, kArrival, 0});
      if (warm) {
        ++offered_in_batch;
        ++offered_post;
      }
      if (loss && in_system >= servers) {
        if (warm) ++lost_in_batch;
        continue;
      }
      ++in_system;
      if (in_service < servers) {
        start_service(now);
      } else {
        waiting.push_back(now);
      }
      continue;
    }

    const ServiceTag tag = tags[ev.payload];
    free_tags.push_back(ev.payload);
    --in_system;
    --in_service;
    ++departures;
    if (!waiting.empty()) {
      const double arr = waiting.front();
      waiting.pop_front();
      start_service(arr);
    }
    if (warm) {
      w_series.add(now - tag.arrival);
      wq_series.add(tag.start - tag.arrival);
      ++post_departures;
      if (post_departures % per_batch == 0 && w_series.closed() < cfg.batch_count) {
        w_series.close();
        wq_series.close();
        l_series.close(now, static_cast<double>(in_system));
        lq_series.close(now, static_cast<double>(in_system - in_service));
        empty_series.close(now, in_system == 0 ? 1.0 : 0.0);
        block_series.push_batch(offered_in_batch > 0 ? static_cast<double>(lost_in_batch) /
                                                           static_cast<double>(offered_in_batch)
                                                     : 0.0);
        offered_in_batch = lost_in_batch = 0;
      }
    } else if (departures >= warmup) {
      warm = true;
      warm_start = now;
      l_series.reset(now);
      lq_series.reset(now);
      empty_series.reset(now);
    }
  }

  out.served = departures;
  out.measured_arrival_rate =
      now > warm_start ? static_cast<double>(offered_post) / (now - warm_start) : 0.0;
  out.W = w_series.estimate(post_departures);
  out.Wq = wq_series.estimate(post_departures);
  out.L = l_series.estimate(post_departures);
  out.Lq = lq_series.estimate(post_departures);
  out.pi0 = empty_series.estimate(post_departures);
  out.blocking = block_series.estimate(offered_post);
  out.batches = {{"L", l_series.batches()},     {"Lq", lq_series.batches()},
                 {"W", w_series.batches()},     {"Wq", wq_series.batches()},
                 {"pi0", empty_series.batches()}, {"blocking", block_series.batches()}};
  return out;
}

}  // namespace detail

// Event-driven single-station simulation with Poisson arrivals. Horizon and
// warmup are counted in departures; estimates carry batch-means confidence
// intervals (replication means when replications > 1).
inline QueueSimResult simulate_single_queue(const SingleQueueModel& model, const SimConfig& cfg) {
  cfg.validate();
  std::vector<QueueSimResult> reps;
  for (std::size_t r = 0; r < cfg.replications; ++r) {
    reps.push_back(
        detail::run_single_queue_once(model, cfg, rng::Xoshiro256::for_replication(cfg.seed, r)));
  }
  if (reps.size() == 1) return reps.front();
  QueueSimResult out;
  auto merge = [&](auto field) {
    std::vector<SimEstimate> parts;
    for (const auto& r : reps) parts.push_back(r.*field);
    return detail::merge_replications(parts);
  };
  out.L = merge(&QueueSimResult::L);
  out.Lq = merge(&QueueSimResult::Lq);
  out.W = merge(&QueueSimResult::W);
  out.Wq = merge(&QueueSimResult::Wq);
  out.pi0 = merge(&QueueSimResult::pi0);
  out.blocking = merge(&QueueSimResult::blocking);
  for (std::size_t r = 0; r < reps.size(); ++r) {
    out.served += reps[r].served;
    out.measured_arrival_rate += reps[r].measured_arrival_rate / static_cast<double>(reps.size());
    for (const auto& [name, values] : reps[r].batches) {
      out.batches.push_back({"rep" + std::to_string(r) + "." + name, values});
    }
  }
  return out;
}

struct TandemSimResult {
  SimEstimate total_L;
  linalg::Matrix joint;  // time-weighted occupancy over the (n, m) window
  std::uint64_t served = 0;
  bool saturation_warning = false;  // measured utilization >= 0.99 somewhere
  BatchDump batches;
};

// Two exponential stations in series fed by one Poisson stream.
inline TandemSimResult simulate_tandem(double lambda, double mu1, double mu2,
                                       const SimConfig& cfg, std::size_t window = 21) {
  cfg.validate();
  if (!(lambda > 0.0) || !(mu1 > 0.0) || !(mu2 > 0.0)) {
    throw ValidationError("tandem rates must be > 0");
  }
  rng::Xoshiro256 gen(cfg.seed);

  constexpr int kArrival = 0, kDone1 = 1, kDone2 = 2;
  detail::EventQueue events;
  std::uint64_t seq = 0;
  std::size_t n1 = 0, n2 = 0;
  double now = 0.0;

  const std::uint64_t warmup = cfg.warmup_count();
  const std::uint64_t per_batch =
      std::max<std::uint64_t>(1, (cfg.horizon - warmup) / cfg.batch_count);
  detail::TimeWeighted l_series;
  linalg::Matrix joint(window, window);
  double joint_time = 0.0, last_t = 0.0;
  std::uint64_t departures = 0, post_departures = 0;
  bool warm = warmup == 0;
  double busy1 = 0.0, busy2 = 0.0, measured_start = 0.0;

  auto advance = [&](double t) {
    if (warm) {
      l_series.advance(t, static_cast<double>(n1 + n2));
      if (n1 < window && n2 < window) joint(n1, n2) += t - last_t;
      joint_time += t - last_t;
      if (n1 > 0) busy1 += t - last_t;
      if (n2 > 0) busy2 += t - last_t;
    }
    last_t = t;
  };

  events.push({gen.exponential(1.0 / lambda), seq++, kArrival, 0});
  while (departures < cfg.horizon) {
    const detail::Event ev = events.top();
    events.pop();
    advance(ev.t);
    now = ev.t;
    switch (ev.type) {
      case kArrival:
        events.push({now + gen.exponential(1.0 / lambda), seq++, kArrival, 0});
        if (++n1 == 1) events.push({now + gen.exponential(1.0 / mu1), seq++, kDone1, 0});
        break;
      case kDone1:
        --n1;
        if (n1 > 0) events.push({now + gen.exponential(1.0 / mu1), seq++, kDone1, 0});
        if (++n2 == 1) events.push({now + gen.exponential(1.0 / mu2), seq++, kDone2, 0});
        break;
      default:
        --n2;
        if (n2 > 0) events.push({now + gen.exponential(1.0 / mu2), seq++, kDone2, 0});
        ++departures;
        if (warm) {
          ++post_departures;
          if (post_departures % per_batch == 0) {
            l_series.close(now, static_cast<double>(n1 + n2));
          }
        } else if (departures >= warmup) {
          warm = true;
          measured_start = now;
          l_series.reset(now);
          last_t = now;
        }
        break;
    }
  }

  TandemSimResult out;
  out.total_L = l_series.estimate(post_departures);
  out.batches = {{"L", l_series.batches()}};
  out.joint = linalg::Matrix(window, window);
  for (std::size_t i = 0; i < window; ++i) {
    for (std::size_t j = 0; j < window; ++j) {
      out.joint(i, j) = joint_time > 0.0 ? joint(i, j) / joint_time : 0.0;
    }
  }
  out.served = departures;
  const double span = now - measured_start;
  if (span > 0.0 && (busy1 / span >= 0.99 || busy2 / span >= 0.99)) {
    out.saturation_warning = true;
  }
  return out;
}

// Visit order of the single polling server.
struct RoutingSpec {
  enum class Kind { kCyclic, kPeriodic, kRandom };
  Kind kind = Kind::kCyclic;
  std::vector<std::size_t> table;  // periodic visit plan
  std::vector<double> probs;       // random next-queue law

  static RoutingSpec cyclic() { return {}; }
  static RoutingSpec periodic(std::vector<std::size_t> t) {
    RoutingSpec r;
    r.kind = Kind::kPeriodic;
    if (t.empty()) throw ValidationError("periodic routing needs a nonempty table");
    r.table = std::move(t);
    return r;
  }
  static RoutingSpec random(std::vector<double> p) {
    RoutingSpec r;
    r.kind = Kind::kRandom;
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw ValidationError("routing probability < 0");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw ValidationError("routing probabilities must sum to 1");
    r.probs = std::move(p);
    return r;
  }
};

struct PollingQueueLaw {
  double lambda;
  DistSpec service;
  DistSpec switchover;  // leg out of this queue
};

struct PollingSimResult {
  std::vector<SimEstimate> wait;           // per-queue mean waiting time
  std::vector<double> mean_cycle;          // per-queue cycle mean
  std::vector<double> mean_intervisit;     // per-queue intervisit mean
  std::vector<double> second_intervisit;   // per-queue intervisit second moment
  linalg::Matrix station_cov;              // r_ij estimates (cyclic routing only)
  bool station_cov_valid = false;
  std::uint64_t served = 0;
  BatchDump batches;
};

namespace detail {

inline PollingSimResult run_polling_once(const std::vector<PollingQueueLaw>& laws,
                                         polling::Policy policy, const RoutingSpec& routing,
                                         const SimConfig& cfg, rng::Xoshiro256 gen) {
  const std::size_t n = laws.size();
  constexpr int kArrival = 0, kServerArrive = 1, kServiceDone = 2;
  EventQueue events;
  std::uint64_t seq = 0;
  double now = 0.0;

  std::vector<std::deque<double>> queues(n);  // arrival stamps
  std::size_t gate = 0, routing_pos = 0;

  const std::uint64_t warmup = cfg.warmup_count();
  const std::uint64_t per_batch =
      std::max<std::uint64_t>(1, (cfg.horizon - warmup) / cfg.batch_count);
  std::vector<BatchSeries> wait_series(n);
  std::vector<std::uint64_t> wait_counts(n, 0);
  std::uint64_t served = 0, post_served = 0;
  bool warm = warmup == 0;

  // Cycle-structure records, cyclic routing only. Recording starts at the
  // first arrival at queue 0 after warmup so the per-pass series of all
  // queues stay index-aligned for the covariance estimates.
  const bool cyclic = routing.kind == RoutingSpec::Kind::kCyclic;
  bool recording = false;
  std::vector<double> last_visit(n, -1.0), last_departure(n, -1.0);
  double last_departure_any = -1.0, last_visit_any = -1.0;
  std::vector<std::vector<double>> station_series(n);  // one entry per pass
  std::vector<double> cycle_sum(n, 0.0), intervisit_sum(n, 0.0), intervisit_sq(n, 0.0);
  std::vector<std::uint64_t> cycle_cnt(n, 0), intervisit_cnt(n, 0);

  auto next_queue = [&](std::size_t current) -> std::size_t {
    switch (routing.kind) {
      case RoutingSpec::Kind::kCyclic: return (current + 1) % n;
      case RoutingSpec::Kind::kPeriodic: {
        routing_pos = (routing_pos + 1) % routing.table.size();
        return routing.table[routing_pos] % n;
      }
      case RoutingSpec::Kind::kRandom: {
        double u = gen.uniform();
        for (std::size_t q = 0; q < n; ++q) {
          if (u < routing.probs[q]) return q;
          u -= routing.probs[q];
        }
        return n - 1;
      }
    }
    return 0;
  };

  for (std::size_t q = 0; q < n; ++q) {
    events.push({gen.exponential(1.0 / laws[q].lambda), seq++, kArrival, q});
  }
  const std::size_t first_queue =
      routing.kind == RoutingSpec::Kind::kPeriodic ? routing.table.front() % n : 0;
  events.push({0.0, seq++, kServerArrive, first_queue});

  auto leave_queue = [&](std::size_t q) {
    // Departure from q: the exhaustive station time of q closes here.
    if (cyclic && recording && policy == polling::Policy::kExhaustive &&
        last_departure_any >= 0.0) {
      station_series[q].push_back(now - last_departure_any);
    }
    last_departure[q] = now;
    last_departure_any = now;
    const std::size_t target = next_queue(q);
    events.push({now + laws[q].switchover.sample(gen), seq++, kServerArrive, target});
  };

  auto serve_or_leave = [&](std::size_t q) {
    const bool want_more = policy == polling::Policy::kExhaustive
                               ? !queues[q].empty()
                               : gate > 0 && !queues[q].empty();
    if (!want_more) {
      leave_queue(q);
      return;
    }
    const double arr = queues[q].front();
    queues[q].pop_front();
    if (policy == polling::Policy::kGated) --gate;
    if (warm) {
      wait_series[q].add(now - arr);
      ++wait_counts[q];
    }
    events.push({now + laws[q].service.sample(gen), seq++, kServiceDone, q});
  };

  while (served < cfg.horizon) {
    const Event ev = events.top();
    events.pop();
    now = ev.t;
    const auto q = static_cast<std::size_t>(ev.payload);
    switch (ev.type) {
      case kArrival:
        events.push({now + gen.exponential(1.0 / laws[q].lambda), seq++, kArrival, q});
        queues[q].push_back(now);
        break;
      case kServerArrive: {
        bool just_started = false;
        if (cyclic && q == 0 && warm && !recording) {
          recording = true;
          just_started = true;  // the station closing here belongs to the previous pass
        }
        if (cyclic && recording) {
          if (policy == polling::Policy::kGated && !just_started && last_visit_any >= 0.0) {
            // Gated station time of the queue just left: visit to visit.
            const std::size_t prev = (q + n - 1) % n;
            station_series[prev].push_back(now - last_visit_any);
          }
          if (last_visit[q] >= 0.0) {
            cycle_sum[q] += now - last_visit[q];
            ++cycle_cnt[q];
          }
          if (last_departure[q] >= 0.0) {
            const double iv = now - last_departure[q];
            intervisit_sum[q] += iv;
            intervisit_sq[q] += iv * iv;
            ++intervisit_cnt[q];
          }
        }
        last_visit[q] = now;
        last_visit_any = now;
        gate = queues[q].size();
        serve_or_leave(q);
        break;
      }
      default:  // service completed at queue q
        ++served;
        if (warm) {
          ++post_served;
        } else if (served >= warmup) {
          warm = true;
        }
        if (warm && post_served > 0 && post_served % per_batch == 0) {
          for (std::size_t i = 0; i < n; ++i) {
            if (wait_series[i].closed() < cfg.batch_count) wait_series[i].close();
          }
        }
        serve_or_leave(q);
        break;
    }
  }

  PollingSimResult out;
  out.served = served;
  out.wait.resize(n);
  out.mean_cycle.assign(n, 0.0);
  out.mean_intervisit.assign(n, 0.0);
  out.second_intervisit.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out.wait[i] = wait_series[i].estimate(wait_counts[i]);
    out.batches.push_back({"W[" + std::to_string(i) + "]", wait_series[i].batches()});
    if (cycle_cnt[i] > 0) out.mean_cycle[i] = cycle_sum[i] / static_cast<double>(cycle_cnt[i]);
    if (intervisit_cnt[i] > 0) {
      out.mean_intervisit[i] = intervisit_sum[i] / static_cast<double>(intervisit_cnt[i]);
      out.second_intervisit[i] = intervisit_sq[i] / static_cast<double>(intervisit_cnt[i]);
    }
  }

  if (cyclic) {
    // Station-time covariances with the analytic lag convention: same pass
    // for j <= i, previous pass for j > i.
    std::size_t passes = SIZE_MAX;
    for (const auto& s : station_series) passes = std::min(passes, s.size());
    if (passes != SIZE_MAX && passes > 8) {
      out.station_cov = linalg::Matrix(n, n);
      out.station_cov_valid = true;
      auto mean_of = [&](const std::vector<double>& v) {
        double m = 0.0;
        for (std::size_t c = 0; c < passes; ++c) m += v[c];
        return m / static_cast<double>(passes);
      };
      std::vector<double> means(n);
      for (std::size_t i = 0; i < n; ++i) means[i] = mean_of(station_series[i]);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          std::uint64_t cnt = 0;
          for (std::size_t c = 1; c < passes; ++c) {
            const double ui = station_series[i][c];
            const double uj = j <= i ? station_series[j][c] : station_series[j][c - 1];
            acc += (ui - means[i]) * (uj - means[j]);
            ++cnt;
          }
          out.station_cov(i, j) = cnt > 1 ? acc / static_cast<double>(cnt - 1) : 0.0;
        }
      }
    }
  }
  return out;
}

}  // namespace detail

// Cyclic/periodic/random polling simulation. Waiting-time estimates carry
// batch-means confidence intervals; cycle, intervisit and station-time
// statistics are point estimates for cross-checking the analytic values.
inline PollingSimResult simulate_polling(const std::vector<PollingQueueLaw>& laws,
                                         polling::Policy policy, const RoutingSpec& routing,
                                         const SimConfig& cfg) {
  cfg.validate();
  if (laws.empty()) throw ValidationError("polling simulation needs at least one queue");
  for (const auto& law : laws) {
    if (!(law.lambda > 0.0)) throw ValidationError("polling arrival rates must be > 0");
  }
  if (routing.kind == RoutingSpec::Kind::kRandom && routing.probs.size() != laws.size()) {
    throw ValidationError("routing probability list must match the queue count");
  }
  std::vector<PollingSimResult> reps;
  for (std::size_t r = 0; r < cfg.replications; ++r) {
    reps.push_back(detail::run_polling_once(laws, policy, routing, cfg,
                                            rng::Xoshiro256::for_replication(cfg.seed, r)));
  }
  if (reps.size() == 1) return reps.front();
  PollingSimResult out = reps.front();
  out.batches.clear();
  for (std::size_t r = 0; r < reps.size(); ++r) {
    for (const auto& [name, values] : reps[r].batches) {
      out.batches.push_back({"rep" + std::to_string(r) + "." + name, values});
    }
  }
  const std::size_t n = laws.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<SimEstimate> parts;
    for (const auto& r : reps) parts.push_back(r.wait[i]);
    out.wait[i] = detail::merge_replications(parts);
    out.mean_cycle[i] = 0.0;
    out.mean_intervisit[i] = 0.0;
    out.second_intervisit[i] = 0.0;
    for (const auto& r : reps) {
      out.mean_cycle[i] += r.mean_cycle[i] / static_cast<double>(reps.size());
      out.mean_intervisit[i] += r.mean_intervisit[i] / static_cast<double>(reps.size());
      out.second_intervisit[i] += r.second_intervisit[i] / static_cast<double>(reps.size());
    }
  }
  out.served = 0;
  for (const auto& r : reps) out.served += r.served;
  return out;
}

// Moment-fit entry point: sampling laws are reconstructed from the model's
// first two moments (exact for deterministic and exponential inputs).
inline PollingSimResult simulate_polling(const polling::PollingSpec& spec, polling::Policy policy,
                                         const RoutingSpec& routing, const SimConfig& cfg) {
  std::vector<PollingQueueLaw> laws;
  laws.reserve(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& q = spec.queue(i);
    laws.push_back({q.lambda, DistSpec::fit_moments(q.b1, q.b2),
                    DistSpec::fit_moments(q.s1, q.s2)});
  }
  return simulate_polling(laws, policy, routing, cfg);
}

struct RuinSimResult {
  SimEstimate mean_T;
  SimEstimate var_T;
  std::uint64_t replications = 0;
  BatchDump batches;
};

// Replicated ruin walks L_{k+1} = L_k + X - drain until the capital is gone;
// X ~ step, L_0 ~ initial. Variance gets its interval from batch variances.
inline RuinSimResult simulate_ruin(const pgf::PGFSeries& initial, const pgf::PGFSeries& step,
                                   std::size_t replications, std::uint64_t seed,
                                   std::uint64_t drain = 1, std::uint64_t step_cap = 100000000) {
  if (replications < 20) throw ValidationError("ruin simulation needs >= 20 replications");
  if (drain < 1) throw ValidationError("drain must be >= 1");
  if (step.mean() >= static_cast<double>(drain)) {
    throw DomainError("ruin walk drifts upward: mean step " + std::to_string(step.mean()) +
                      " >= drain");
  }
  rng::Xoshiro256 gen(seed);
  std::vector<double> times(replications);
  for (std::size_t r = 0; r < replications; ++r) {
    std::int64_t capital = static_cast<std::int64_t>(rng::sample_pgf(gen, initial));
    std::uint64_t t = 0;
    while (capital > 0) {
      capital += static_cast<std::int64_t>(rng::sample_pgf(gen, step)) -
                 static_cast<std::int64_t>(drain);
      if (++t > step_cap) throw DomainError("ruin walk exceeded the step cap");
    }
    times[r] = static_cast<double>(t);
  }

  const std::size_t batches = 32;
  const std::size_t per = replications / batches;
  std::vector<double> mean_b, var_b;
  for (std::size_t b = 0; b < batches && per >= 2; ++b) {
    double m = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) m += times[i];
    m /= static_cast<double>(per);
    double ss = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) ss += (times[i] - m) * (times[i] - m);
    mean_b.push_back(m);
    var_b.push_back(ss / static_cast<double>(per - 1));
  }
  RuinSimResult out;
  out.replications = replications;
  out.mean_T = stats::from_batches(mean_b, replications);
  out.var_T = stats::from_batches(var_b, replications);
  out.batches = {{"mean_T", mean_b}, {"var_T", var_b}};
  return out;
}

}  // namespace queuelab::sim
