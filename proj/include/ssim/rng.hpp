#pragma once

// Deterministic random streams and the scenario's sampling primitives.
//
// All transforms are hand-rolled on top of raw mt19937_64 output so that a
// (seed, stream_id, substream) triple produces the same sequence on every
// platform and compiler; std::*_distribution is deliberately avoided because
// its output sequences are implementation-defined.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>

#include "domain.hpp"

namespace ssim {

// Durations drawn from truncated distributions are kept >= this floor.
inline constexpr double kMinDuration = 1e-6;

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t substream = 0) {
    const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(stream_id), hi(stream_id),
                      lo(substream), hi(substream)};
    engine_.seed(seq);
  }

  // Uniform on the open interval (0,1); never returns 0 or 1 exactly.
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Exponential with the given mean, by inversion; strictly positive.
  double exponential(double mean) { return -mean * std::log(uniform01()); }

  // Box-Muller without a cached spare, so consumption is always two uniforms.
  double normal(double mean, double sd) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // Normal truncated to [kMinDuration, inf) by resampling.
  double positive_normal(double mean, double sd) {
    for (;;) {
      const double x = normal(mean, sd);
      if (x >= kMinDuration) return x;
    }
  }

  // Unbiased integer in [0, n) via rejection.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    const std::uint64_t nn = n;
    const std::uint64_t threshold = (0 - nn) % nn;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return static_cast<std::size_t>(r % nn);
    }
  }

  // Index drawn with probability proportional to its (non-negative) weight.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0 || !std::isfinite(w))
        throw std::invalid_argument("categorical: weights must be finite and non-negative");
      total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("categorical: all weights are zero");
    double u = uniform01() * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] > 0.0) last_positive = i;
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u <= 0.0 && weights[i] > 0.0) return i;
    }
    return last_positive;  // floating-point spill
  }

  bool bernoulli(double p) { return uniform01() < p; }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline double sample_interarrival(RngStream& rng, const SimulationParams& params) {
  return rng.exponential(1.0 / params.arrival_rate_per_day());
}

inline double sample_positive_normal(RngStream& rng, double mean, double sd) {
  return rng.positive_normal(mean, sd);
}

inline double sample_service(RngStream& rng, const SimulationParams& params) {
  if (params.service_distribution == Distribution::Exponential)
    return rng.exponential(params.mean_service_days);
  return rng.positive_normal(params.mean_service_days, params.service_sd_days);
}

inline double sample_patience(RngStream& rng, const SimulationParams& params) {
  if (params.patience_distribution == Distribution::Exponential)
    return rng.exponential(params.mean_patience_days);
  return rng.positive_normal(params.mean_patience_days, params.patience_sd_days);
}

struct SampledYouth {
  DemographicProfile profile;
  ServiceVector requests;
};

// Draws one youth's demographics and service requests. Consumption order is
// fixed (age, gender, immigrant, trafficking, one bernoulli per catalog
// service) so attribute streams stay aligned across routing strategies.
inline SampledYouth sample_youth(RngStream& rng, const PopulationDistribution& pop) {
  SampledYouth y;

  {
    double u = rng.uniform01();
    int last_age = 0;
    bool chosen = false;
    for (const auto& [age, p] : pop.age_pmf) {
      last_age = age;
      u -= p;
      if (u <= 0.0) {
        y.profile.age = age;
        chosen = true;
        break;
      }
    }
    if (!chosen) y.profile.age = last_age;
  }

  {
    double u = rng.uniform01();
    y.profile.gender = static_cast<Gender>(kGenderCount - 1);
    for (int g = 0; g < kGenderCount; ++g) {
      u -= pop.gender_pmf[static_cast<std::size_t>(g)];
      if (u <= 0.0) {
        y.profile.gender = static_cast<Gender>(g);
        break;
      }
    }
  }

  y.profile.immigrant = rng.bernoulli(pop.p_immigrant);
  y.profile.trafficking_victim = rng.bernoulli(pop.p_trafficking);

  y.requests = ServiceVector(pop.service_request_probs.size());
  for (std::size_t i = 0; i < pop.service_request_probs.size(); ++i) {
    y.requests.set(i, rng.bernoulli(pop.service_request_probs[i]));
  }
  return y;
}

}  // namespace ssim
