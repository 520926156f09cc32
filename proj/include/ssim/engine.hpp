#pragma once

// Replication engine. Each shelter keeps bookkeeping lists (arrival times and
// a sorted list of every known departure time, including scheduled abandonment
// epochs); the head count at time t is
//
//   in_system = warm-up residents + arrivals before t - departures before t
//
// and, when all beds are taken, an arriving youth's service would start at the
// (in_system - beds + 1)-th future departure, i.e. sorted departure list entry
// [size - beds]. A youth abandons when that estimated wait reaches their
// patience; the abandonment epoch itself is recorded as a departure, which is
// what keeps the head-count identity exact under abandonment.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "domain.hpp"
#include "rng.hpp"
#include "routing.hpp"

namespace ssim {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Substream ids carving one replication's randomness into purpose-specific
// streams: strategies consume the routing stream at different rates, but the
// warm-up, arrival, and attribute streams stay identical across strategies
// (common random numbers).
inline constexpr std::uint64_t kSubstreamWarmup = 1;
inline constexpr std::uint64_t kSubstreamArrivals = 2;
inline constexpr std::uint64_t kSubstreamAttributes = 3;
inline constexpr std::uint64_t kSubstreamRouting = 4;

struct ShelterState {
  int beds = 0;
  int warmup_count = 0;
  std::vector<double> arrivals;    // non-decreasing (append order)
  std::vector<double> departures;  // ascending (sorted insert)

  void record_arrival(double t) {
    if (!arrivals.empty() && t < arrivals.back())
      throw std::invalid_argument("record_arrival: time earlier than last arrival");
    arrivals.push_back(t);
  }

  void insert_departure(double t) {
    departures.insert(std::upper_bound(departures.begin(), departures.end(), t), t);
  }
};

// Head count at time t: warm-up residents plus arrivals strictly before t
// minus departures strictly before t.
inline int in_system_count(const ShelterState& s, double t) {
  const auto strictly_before = [t](const std::vector<double>& v) {
    return static_cast<int>(std::lower_bound(v.begin(), v.end(), t) - v.begin());
  };
  return s.warmup_count + strictly_before(s.arrivals) - strictly_before(s.departures);
}

// Earliest epoch at which a youth arriving at `arrival` could start service.
// With a bed free that is the arrival itself; otherwise it is sorted departure
// entry [size - beds]. If the shelter is full yet fewer departures than beds
// are recorded (possible only for externally constructed states), fall back to
// the largest recorded departure, clamped so the start never precedes arrival.
inline double start_of_service(const ShelterState& s, double arrival) {
  if (in_system_count(s, arrival) < s.beds) return arrival;
  const auto idx = static_cast<std::ptrdiff_t>(s.departures.size()) - s.beds;
  if (idx < 0)
    return s.departures.empty() ? arrival : std::max(arrival, s.departures.back());
  return std::max(arrival, s.departures[static_cast<std::size_t>(idx)]);
}

// Populates each shelter with round(warmup_occupancy * beds) residents whose
// residual stays are U(0,1) x a fresh service draw, measured from time 0.
inline std::vector<ShelterState> warm_up(const std::vector<ShelterConfig>& shelters,
                                         const SimulationParams& params, RngStream& rng) {
  std::vector<ShelterState> states;
  states.reserve(shelters.size());
  for (const auto& shelter : shelters) {
    ShelterState st;
    st.beds = shelter.beds;
    st.warmup_count =
        static_cast<int>(std::lround(params.warmup_occupancy * shelter.beds));
    for (int i = 0; i < st.warmup_count; ++i) {
      const double u = rng.uniform01();
      const double stay = sample_service(rng, params);
      st.insert_departure(u * stay);
    }
    states.push_back(std::move(st));
  }
  return states;
}

enum class Outcome : int { Serviced = 0, Abandoned, Mismatch };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Serviced: return "serviced";
    case Outcome::Abandoned: return "abandoned";
    case Outcome::Mismatch: return "mismatch";
  }
  return "?";
}

inline std::optional<Outcome> parse_outcome(std::string_view name) {
  if (name == "serviced") return Outcome::Serviced;
  if (name == "abandoned") return Outcome::Abandoned;
  if (name == "mismatch") return Outcome::Mismatch;
  return std::nullopt;
}

// Per-shelter observation recorded at a youth's arrival epoch.
struct ShelterObservation {
  int in_system = 0;
  int queue_length = 0;
  double utilization = 0.0;
};

struct YouthRecord {
  int id = 0;
  double arrival = 0.0;
  DemographicProfile profile;
  ServiceVector requests;
  Outcome outcome = Outcome::Mismatch;
  std::optional<std::size_t> shelter;  // index into config order
  double service_duration = kNaN;      // sampled for every youth
  double patience = kNaN;              // sampled for every youth
  double estimated_wait = kNaN;        // NaN for mismatch
  double actual_wait = kNaN;           // serviced: estimated; abandoned: patience
  double start_service = kNaN;         // NaN unless serviced
  double departure = kNaN;             // NaN for mismatch
  std::vector<ShelterObservation> observed;  // one entry per shelter
};

struct ReplicationResult {
  int replication = 0;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::Baseline;
  std::vector<YouthRecord> youths;
  std::vector<ShelterState> final_states;
};

struct ArrivalEvent {
  double time = 0.0;
  DemographicProfile profile;
  ServiceVector requests;
  double service = 0.0;
  double patience = 0.0;
};

// Poisson arrival times plus per-youth attribute draws over [0, horizon].
// Every youth gets demographics, requests, service, and patience in a fixed
// order, whether or not a later mismatch discards them.
inline std::vector<ArrivalEvent> generate_arrivals(const ScenarioConfig& config,
                                                   std::uint64_t seed,
                                                   std::uint64_t replication) {
  RngStream arrival_rng(seed, replication, kSubstreamArrivals);
  RngStream attribute_rng(seed, replication, kSubstreamAttributes);
  std::vector<ArrivalEvent> events;
  double t = 0.0;
  for (;;) {
    t += sample_interarrival(arrival_rng, config.params);
    if (t > config.params.horizon_days) break;
    ArrivalEvent ev;
    ev.time = t;
    auto youth = sample_youth(attribute_rng, config.population);
    ev.profile = youth.profile;
    ev.requests = std::move(youth.requests);
    ev.service = sample_service(attribute_rng, config.params);
    ev.patience = sample_patience(attribute_rng, config.params);
    events.push_back(std::move(ev));
  }
  return events;
}

inline SystemSnapshot make_snapshot(const std::vector<ShelterState>& states, double now) {
  SystemSnapshot snap;
  snap.now = now;
  snap.shelters.reserve(states.size());
  for (const auto& st : states) {
    ShelterSnapshot s;
    s.beds = st.beds;
    s.in_system = in_system_count(st, now);
    s.queue_length = std::max(s.in_system - st.beds, 0);
    s.idle_beds = std::max(st.beds - s.in_system, 0);
    s.departures = &st.departures;
    snap.shelters.push_back(s);
  }
  return snap;
}

// Deterministic core: routes and resolves a time-ordered arrival sequence
// against warmed-up shelter states. Only tie-breaking consumes `routing_rng`.
inline ReplicationResult process_arrivals(std::vector<ArrivalEvent> events,
                                          Strategy strategy, const ScenarioConfig& config,
                                          std::vector<ShelterState> states,
                                          RngStream& routing_rng) {
  if (states.size() != config.shelters.size())
    throw std::invalid_argument("process_arrivals: state/config shelter count mismatch");
  ReplicationResult out;
  out.strategy = strategy;
  out.youths.reserve(events.size());

  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < events.size(); ++i) {
    ArrivalEvent& ev = events[i];
    if (ev.time < prev)
      throw std::invalid_argument("process_arrivals: arrivals out of time order");
    prev = ev.time;

    const SystemSnapshot snap = make_snapshot(states, ev.time);
    const RoutingDecision decision =
        route(strategy, ev.profile, ev.requests, config.shelters, snap, routing_rng);

    YouthRecord rec;
    rec.id = static_cast<int>(i);
    rec.arrival = ev.time;
    rec.profile = ev.profile;
    rec.requests = std::move(ev.requests);
    rec.service_duration = ev.service;
    rec.patience = ev.patience;
    rec.observed.reserve(snap.shelters.size());
    for (const auto& s : snap.shelters)
      rec.observed.push_back({s.in_system, s.queue_length, s.utilization()});

    if (decision.mismatch()) {
      rec.outcome = Outcome::Mismatch;
    } else {
      const std::size_t s = *decision.shelter;
      ShelterState& st = states[s];
      const double start = start_of_service(st, ev.time);
      const double est = start - ev.time;
      rec.shelter = s;
      rec.estimated_wait = est;
      if (est < ev.patience) {
        rec.outcome = Outcome::Serviced;
        rec.actual_wait = est;
        rec.start_service = start;
        rec.departure = start + ev.service;
      } else {
        rec.outcome = Outcome::Abandoned;
        rec.actual_wait = ev.patience;
        rec.departure = ev.time + ev.patience;
      }
      st.record_arrival(ev.time);
      st.insert_departure(rec.departure);
    }
    out.youths.push_back(std::move(rec));
  }
  out.final_states = std::move(states);
  return out;
}

// One full replication: warm-up, arrival generation, and processing, all
// driven by (seed, replication)-derived streams.
inline ReplicationResult simulate_replication(const ScenarioConfig& config,
                                              Strategy strategy, std::uint64_t seed,
                                              int replication) {
  const auto rep = static_cast<std::uint64_t>(replication);
  RngStream warmup_rng(seed, rep, kSubstreamWarmup);
  auto states = warm_up(config.shelters, config.params, warmup_rng);
  auto events = generate_arrivals(config, seed, rep);
  RngStream routing_rng(seed, rep, kSubstreamRouting);
  ReplicationResult result =
      process_arrivals(std::move(events), strategy, config, std::move(states), routing_rng);
  result.replication = replication;
  result.seed = seed;
  return result;
}

}  // namespace ssim
