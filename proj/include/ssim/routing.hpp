#pragma once

// Routing strategies: given one arriving youth and a snapshot of every
// shelter's state, pick the shelter to route to (or report a mismatch when no
// shelter is eligible). All ties are broken uniformly at random from the
// replication's routing stream, so comparisons under common random numbers
// stay reproducible.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "domain.hpp"
#include "rng.hpp"

namespace ssim {

enum class Strategy : int {
  Baseline = 0,
  Gnnsf,     // greatest needs match, occupancy-blind
  GnnsfId,   // greatest needs match among idle-bed shelters, fallback Gnnsf
  Lnisf,     // largest number of idle beds
  Lisf,      // longest idle time
  Rmi,       // random, proportional to idle fraction
  Sqf,       // shortest queue
};

inline constexpr std::array<Strategy, 7> kAllStrategies = {
    Strategy::Baseline, Strategy::Gnnsf, Strategy::GnnsfId, Strategy::Lnisf,
    Strategy::Lisf,     Strategy::Rmi,   Strategy::Sqf};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Baseline: return "baseline";
    case Strategy::Gnnsf: return "gnnsf";
    case Strategy::GnnsfId: return "gnnsf-id";
    case Strategy::Lnisf: return "lnisf";
    case Strategy::Lisf: return "lisf";
    case Strategy::Rmi: return "rmi";
    case Strategy::Sqf: return "sqf";
  }
  return "?";
}

inline std::optional<Strategy> parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

// One shelter's state as observed at an arrival epoch.
struct ShelterSnapshot {
  int beds = 0;
  int in_system = 0;      // occupants plus queued, including warm-up residents
  int queue_length = 0;   // max(in_system - beds, 0)
  int idle_beds = 0;      // max(beds - in_system, 0)
  const std::vector<double>* departures = nullptr;  // ascending, full history

  double utilization() const {
    return beds == 0 ? 0.0 : static_cast<double>(std::min(in_system, beds)) / beds;
  }
};

struct SystemSnapshot {
  double now = 0.0;
  std::vector<ShelterSnapshot> shelters;
};

// A routing decision: either the index of the chosen shelter, or a mismatch
// (no eligible shelter exists for this youth).
struct RoutingDecision {
  std::optional<std::size_t> shelter;
  bool mismatch() const { return !shelter.has_value(); }
};

namespace detail {

// Uniform pick among the argmax of `score` over `candidates`. Consumes one
// RNG draw only when the argmax is not unique.
template <typename Score>
std::size_t argmax_random_tie(std::span<const std::size_t> candidates, Score&& score,
                              RngStream& rng) {
  std::vector<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t c : candidates) {
    const double v = static_cast<double>(score(c));
    if (best.empty() || v > best_score) {
      best.assign(1, c);
      best_score = v;
    } else if (v == best_score) {
      best.push_back(c);
    }
  }
  if (best.size() == 1) return best.front();
  return best[rng.uniform_index(best.size())];
}

inline std::size_t uniform_pick(std::span<const std::size_t> candidates, RngStream& rng) {
  if (candidates.size() == 1) return candidates.front();
  return candidates[rng.uniform_index(candidates.size())];
}

}  // namespace detail

// Uniform among eligible shelters with an idle bed; if none has an idle bed,
// uniform among all eligible shelters.
inline RoutingDecision route_baseline(const DemographicProfile& youth,
                                      const std::vector<ShelterConfig>& shelters,
                                      const SystemSnapshot& snap, RngStream& rng) {
  const auto eligible = eligible_indices(youth, shelters);
  if (eligible.empty()) return {};
  std::vector<std::size_t> idle;
  for (std::size_t s : eligible) {
    if (snap.shelters[s].idle_beds > 0) idle.push_back(s);
  }
  const auto& pool = idle.empty() ? eligible : idle;
  return {detail::uniform_pick(pool, rng)};
}

// Greatest number of needed services covered, ignoring occupancy entirely.
inline RoutingDecision route_gnnsf(const DemographicProfile& youth,
                                   const ServiceVector& requests,
                                   const std::vector<ShelterConfig>& shelters,
                                   RngStream& rng) {
  const auto eligible = eligible_indices(youth, shelters);
  if (eligible.empty()) return {};
  return {detail::argmax_random_tie(
      eligible,
      [&](std::size_t s) { return needs_match_count(requests, shelters[s].services); }, rng)};
}

// Greatest needs match restricted to eligible shelters with an idle bed;
// falls back to occupancy-blind needs match when every eligible shelter is
// full.
inline RoutingDecision route_gnnsf_id(const DemographicProfile& youth,
                                      const ServiceVector& requests,
                                      const std::vector<ShelterConfig>& shelters,
                                      const SystemSnapshot& snap, RngStream& rng) {
  const auto eligible = eligible_indices(youth, shelters);
  if (eligible.empty()) return {};
  std::vector<std::size_t> idle;
  for (std::size_t s : eligible) {
    if (snap.shelters[s].idle_beds > 0) idle.push_back(s);
  }
  const auto& pool = idle.empty() ? eligible : idle;
  return {detail::argmax_random_tie(
      pool, [&](std::size_t s) { return needs_match_count(requests, shelters[s].services); },
      rng)};
}

// Largest number of idle beds.
inline RoutingDecision route_lnisf(const DemographicProfile& youth,
                                   const std::vector<ShelterConfig>& shelters,
                                   const SystemSnapshot& snap, RngStream& rng) {
  const auto eligible = eligible_indices(youth, shelters);
  if (eligible.empty()) return {};
  return {detail::argmax_random_tie(
      eligible, [&](std::size_t s) { return snap.shelters[s].idle_beds; }, rng)};
}

// Idle time of a shelter: how long its longest-idle bed has been free. With k
// idle beds the k-th most recent completed departure freed that bed. Exit
// times are recorded at admission, so the history also holds entries at or
// after `now` for youths still in the system; those have not freed a bed and
// are skipped. Beds that have never been occupied count as idle since time 0.
// Zero when no bed is idle.
inline double shelter_idle_time(const ShelterSnapshot& shelter, double now) {
  const int k = shelter.idle_beds;
  if (k <= 0) return 0.0;
  const auto& deps = *shelter.departures;
  const auto past =
      static_cast<std::size_t>(std::lower_bound(deps.begin(), deps.end(), now) - deps.begin());
  if (static_cast<std::size_t>(k) > past) return now;  // a never-occupied bed
  return now - deps[past - static_cast<std::size_t>(k)];
}

// Longest idle time.
inline RoutingDecision route_lisf(const DemographicProfile& youth,
                                  const std::vector<ShelterConfig>& shelters,
                                  const SystemSnapshot& snap, RngStream& rng) {
  const auto eligible = eligible_indices(youth, shelters);
  if (eligible.empty()) return {};
  return {detail::argmax_random_tie(
      eligible, [&](std::size_t s) { return shelter_idle_time(snap.shelters[s], snap.now); },
      rng)};
}

// Random pick proportional to idle fraction (idle beds / beds); uniform among
// eligible shelters when none has an idle bed.
inline RoutingDecision route_rmi(const DemographicProfile& youth,
                                 const std::vector<ShelterConfig>& shelters,
                                 const SystemSnapshot& snap, RngStream& rng) {
  const auto eligible = eligible_indices(youth, shelters);
  if (eligible.empty()) return {};
  std::vector<double> weights;
  weights.reserve(eligible.size());
  double total = 0.0;
  for (std::size_t s : eligible) {
    const auto& sh = snap.shelters[s];
    const double w = sh.beds == 0 ? 0.0 : static_cast<double>(sh.idle_beds) / sh.beds;
    weights.push_back(w);
    total += w;
  }
  if (total <= 0.0) return {detail::uniform_pick(eligible, rng)};
  return {eligible[rng.categorical(weights)]};
}

// Shortest queue.
inline RoutingDecision route_sqf(const DemographicProfile& youth,
                                 const std::vector<ShelterConfig>& shelters,
                                 const SystemSnapshot& snap, RngStream& rng) {
  const auto eligible = eligible_indices(youth, shelters);
  if (eligible.empty()) return {};
  return {detail::argmax_random_tie(
      eligible, [&](std::size_t s) { return -snap.shelters[s].queue_length; }, rng)};
}

inline RoutingDecision route(Strategy strategy, const DemographicProfile& youth,
                             const ServiceVector& requests,
                             const std::vector<ShelterConfig>& shelters,
                             const SystemSnapshot& snap, RngStream& rng) {
  switch (strategy) {
    case Strategy::Baseline: return route_baseline(youth, shelters, snap, rng);
    case Strategy::Gnnsf: return route_gnnsf(youth, requests, shelters, rng);
    case Strategy::GnnsfId: return route_gnnsf_id(youth, requests, shelters, snap, rng);
    case Strategy::Lnisf: return route_lnisf(youth, shelters, snap, rng);
    case Strategy::Lisf: return route_lisf(youth, shelters, snap, rng);
    case Strategy::Rmi: return route_rmi(youth, shelters, snap, rng);
    case Strategy::Sqf: return route_sqf(youth, shelters, snap, rng);
  }
  throw std::logic_error("route: unknown strategy");
}

}  // namespace ssim
