#pragma once

// Equity/efficiency metrics. Per-replication metrics are arrival-epoch
// averages over youth records (never time averages); cross-replication
// statistics and Welch two-sample tests sit on top. Undefined quantities are
// NaN with a zero count, never a silent zero.

#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "domain.hpp"
#include "engine.hpp"
#include "routing.hpp"

namespace ssim {

inline constexpr int kAgeBandThreshold = 21;  // bands: age <= 21, age > 21

enum class GroupDimension : int {
  Overall = 0,
  Gender3,
  AgeBand,
  Immigrant,
  Trafficking,
  Shelter,
};

inline constexpr std::array<GroupDimension, 6> kAllDimensions = {
    GroupDimension::Overall,   GroupDimension::Gender3,     GroupDimension::AgeBand,
    GroupDimension::Immigrant, GroupDimension::Trafficking, GroupDimension::Shelter};

inline std::string_view to_string(GroupDimension d) {
  switch (d) {
    case GroupDimension::Overall: return "overall";
    case GroupDimension::Gender3: return "gender3";
    case GroupDimension::AgeBand: return "age_band";
    case GroupDimension::Immigrant: return "immigrant";
    case GroupDimension::Trafficking: return "trafficking";
    case GroupDimension::Shelter: return "shelter";
  }
  return "?";
}

struct GroupKey {
  GroupDimension dimension = GroupDimension::Overall;
  int value = 0;  // group code within the dimension; shelter index for Shelter

  auto operator<=>(const GroupKey&) const = default;
};

inline GroupKey overall_group() { return {GroupDimension::Overall, 0}; }
inline GroupKey shelter_group(std::size_t index) {
  return {GroupDimension::Shelter, static_cast<int>(index)};
}

// Human-readable group label for report rows.
inline std::string group_label(const GroupKey& g, const ScenarioConfig& config) {
  switch (g.dimension) {
    case GroupDimension::Overall: return "all";
    case GroupDimension::Gender3: return std::string(to_string(static_cast<Gender3>(g.value)));
    case GroupDimension::AgeBand:
      return g.value == 0 ? "age_le_" + std::to_string(kAgeBandThreshold)
                          : "age_gt_" + std::to_string(kAgeBandThreshold);
    case GroupDimension::Immigrant: return g.value == 0 ? "no" : "yes";
    case GroupDimension::Trafficking: return g.value == 0 ? "no" : "yes";
    case GroupDimension::Shelter:
      return std::to_string(config.shelters.at(static_cast<std::size_t>(g.value)).id);
  }
  return "?";
}

// All group keys reported for a scenario, in a fixed deterministic order.
inline std::vector<GroupKey> default_groups(const ScenarioConfig& config) {
  std::vector<GroupKey> keys;
  keys.push_back(overall_group());
  for (int v = 0; v < 3; ++v) keys.push_back({GroupDimension::Gender3, v});
  for (int v = 0; v < 2; ++v) keys.push_back({GroupDimension::AgeBand, v});
  for (int v = 0; v < 2; ++v) keys.push_back({GroupDimension::Immigrant, v});
  for (int v = 0; v < 2; ++v) keys.push_back({GroupDimension::Trafficking, v});
  for (std::size_t s = 0; s < config.shelters.size(); ++s) keys.push_back(shelter_group(s));
  return keys;
}

inline bool in_group(const YouthRecord& y, const GroupKey& g, const ScenarioConfig& config) {
  switch (g.dimension) {
    case GroupDimension::Overall: return true;
    case GroupDimension::Gender3:
      return config.gender_grouping[static_cast<std::size_t>(y.profile.gender)] ==
             static_cast<Gender3>(g.value);
    case GroupDimension::AgeBand:
      return (y.profile.age > kAgeBandThreshold) == (g.value == 1);
    case GroupDimension::Immigrant: return y.profile.immigrant == (g.value == 1);
    case GroupDimension::Trafficking: return y.profile.trafficking_victim == (g.value == 1);
    case GroupDimension::Shelter:
      return y.shelter.has_value() &&
             *y.shelter == static_cast<std::size_t>(g.value);
  }
  return false;
}

enum class Metric : int {
  MeanWait = 0,
  AbandonmentProportion,
  MismatchProportion,
  MeanInSystem,
  MeanQueue,
  Utilization,
};

inline constexpr std::array<Metric, 6> kAllMetrics = {
    Metric::MeanWait,     Metric::AbandonmentProportion, Metric::MismatchProportion,
    Metric::MeanInSystem, Metric::MeanQueue,             Metric::Utilization};

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::MeanWait: return "mean_wait";
    case Metric::AbandonmentProportion: return "p_abandon";
    case Metric::MismatchProportion: return "p_mismatch";
    case Metric::MeanInSystem: return "mean_in_system";
    case Metric::MeanQueue: return "mean_queue";
    case Metric::Utilization: return "utilization";
  }
  return "?";
}

struct GroupMetrics {
  int n_youths = 0;     // all youths in the group, mismatches included
  int n_routed = 0;     // serviced + abandoned
  int n_serviced = 0;
  int n_abandoned = 0;
  int n_mismatch = 0;
  double mean_wait = kNaN;        // mean actual wait over routed youths
  double p_abandon = kNaN;        // abandoned / routed
  double p_mismatch = kNaN;       // mismatch / all youths in group
  double mean_in_system = kNaN;   // observed at routed youths' assigned shelter
  double mean_queue = kNaN;
  double utilization = kNaN;

  double metric(Metric m) const {
    switch (m) {
      case Metric::MeanWait: return mean_wait;
      case Metric::AbandonmentProportion: return p_abandon;
      case Metric::MismatchProportion: return p_mismatch;
      case Metric::MeanInSystem: return mean_in_system;
      case Metric::MeanQueue: return mean_queue;
      case Metric::Utilization: return utilization;
    }
    return kNaN;
  }
};

using MetricTable = std::map<GroupKey, GroupMetrics>;

inline GroupMetrics group_metrics(std::span<const YouthRecord> youths, const GroupKey& key,
                                  const ScenarioConfig& config) {
  GroupMetrics m;
  double wait_sum = 0.0, x_sum = 0.0, q_sum = 0.0, rho_sum = 0.0;
  for (const auto& y : youths) {
    if (!in_group(y, key, config)) continue;
    ++m.n_youths;
    if (y.outcome == Outcome::Mismatch) {
      ++m.n_mismatch;
      continue;
    }
    ++m.n_routed;
    if (y.outcome == Outcome::Serviced)
      ++m.n_serviced;
    else
      ++m.n_abandoned;
    wait_sum += y.actual_wait;
    const auto& obs = y.observed.at(*y.shelter);
    x_sum += obs.in_system;
    q_sum += obs.queue_length;
    rho_sum += obs.utilization;
  }
  if (m.n_youths > 0) m.p_mismatch = static_cast<double>(m.n_mismatch) / m.n_youths;
  if (m.n_routed > 0) {
    m.mean_wait = wait_sum / m.n_routed;
    m.p_abandon = static_cast<double>(m.n_abandoned) / m.n_routed;
    m.mean_in_system = x_sum / m.n_routed;
    m.mean_queue = q_sum / m.n_routed;
    m.utilization = rho_sum / m.n_routed;
  }
  return m;
}

// One replication's metric table over the default reporting groups.
inline MetricTable replication_metrics(std::span<const YouthRecord> youths,
                                       const ScenarioConfig& config) {
  MetricTable table;
  for (const GroupKey& key : default_groups(config)) {
    table.emplace(key, group_metrics(youths, key, config));
  }
  return table;
}

// --- cross-replication statistics ---------------------------------------

struct SampleSummary {
  int n = 0;
  double mean = kNaN;
  double sd = kNaN;
  double ci_lo = kNaN;  // 95% t-interval
  double ci_hi = kNaN;
};

inline std::vector<double> finite_values(std::span<const double> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

inline double sample_mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs, double mean) {
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return s / static_cast<double>(xs.size() - 1);
}

// Mean, sd, and 95% t confidence interval; NaN entries are dropped first.
inline SampleSummary summarize(std::span<const double> values, double confidence = 0.95) {
  const auto xs = finite_values(values);
  SampleSummary s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  s.mean = sample_mean(xs);
  if (xs.size() == 1) return s;
  s.sd = std::sqrt(sample_variance(xs, s.mean));
  const boost::math::students_t dist(static_cast<double>(xs.size() - 1));
  const double tq = boost::math::quantile(dist, 0.5 + confidence / 2.0);
  const double half = tq * s.sd / std::sqrt(static_cast<double>(xs.size()));
  s.ci_lo = s.mean - half;
  s.ci_hi = s.mean + half;
  return s;
}

struct WelchResult {
  double t = kNaN;
  double df = kNaN;
  double p = kNaN;
};

// Welch two-sample t test (unequal variances). Degenerate case with both
// sample variances zero: p = 1 when the means coincide, else p = 0.
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("welch_t_test: need at least two observations per sample");
  const double ma = sample_mean(a), mb = sample_mean(b);
  const double va = sample_variance(a, ma), vb = sample_variance(b, mb);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  WelchResult r;
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    r.df = na + nb - 2.0;
    if (ma == mb) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = ma > mb ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
  const boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(dist, -std::abs(r.t));
  return r;
}

// Per-strategy collection of per-replication metric tables.
struct StrategyMetrics {
  Strategy strategy = Strategy::Baseline;
  std::vector<MetricTable> per_replication;
};

// Per-replication values of one (group, metric) cell, in replication order.
// Replications where the group is undefined contribute NaN.
inline std::vector<double> metric_series(const StrategyMetrics& run, const GroupKey& group,
                                         Metric metric) {
  std::vector<double> xs;
  xs.reserve(run.per_replication.size());
  for (const auto& table : run.per_replication) {
    const auto it = table.find(group);
    xs.push_back(it == table.end() ? kNaN : it->second.metric(metric));
  }
  return xs;
}

struct SummaryRow {
  Strategy strategy = Strategy::Baseline;
  GroupKey group;
  Metric metric = Metric::MeanWait;
  SampleSummary stats;
};

inline std::vector<SummaryRow> summarize_strategy(const StrategyMetrics& run,
                                                  const ScenarioConfig& config,
                                                  double confidence = 0.95) {
  std::vector<SummaryRow> rows;
  for (const GroupKey& group : default_groups(config)) {
    for (Metric metric : kAllMetrics) {
      SummaryRow row;
      row.strategy = run.strategy;
      row.group = group;
      row.metric = metric;
      row.stats = summarize(metric_series(run, group, metric), confidence);
      rows.push_back(row);
    }
  }
  return rows;
}

struct ComparisonRow {
  Strategy strategy = Strategy::Baseline;
  Strategy baseline = Strategy::Baseline;
  GroupKey group;
  Metric metric = Metric::MeanWait;
  double mean_strategy = kNaN;
  double mean_baseline = kNaN;
  WelchResult test;
  bool significant = false;
};

inline constexpr std::array<Metric, 2> kComparedMetrics = {Metric::MeanWait,
                                                           Metric::AbandonmentProportion};

// Welch tests of every non-reference strategy against the reference, for each
// reporting group and each compared metric. All runs must hold the same
// number of replications.
inline std::vector<ComparisonRow> compare_strategies(const std::vector<StrategyMetrics>& runs,
                                                     std::size_t baseline_index,
                                                     const ScenarioConfig& config,
                                                     double alpha = 0.05) {
  if (runs.size() < 2)
    throw std::invalid_argument("compare_strategies: need at least two strategies");
  if (baseline_index >= runs.size())
    throw std::invalid_argument("compare_strategies: reference index out of range");
  for (const auto& run : runs) {
    if (run.per_replication.size() != runs.front().per_replication.size())
      throw std::invalid_argument("compare_strategies: unequal replication counts");
  }
  std::vector<ComparisonRow> rows;
  const StrategyMetrics& base = runs[baseline_index];
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i == baseline_index) continue;
    for (const GroupKey& group : default_groups(config)) {
      for (Metric metric : kComparedMetrics) {
        ComparisonRow row;
        row.strategy = runs[i].strategy;
        row.baseline = base.strategy;
        row.group = group;
        row.metric = metric;
        const auto xs = finite_values(metric_series(runs[i], group, metric));
        const auto ys = finite_values(metric_series(base, group, metric));
        if (xs.size() >= 2 && ys.size() >= 2) {
          row.mean_strategy = sample_mean(xs);
          row.mean_baseline = sample_mean(ys);
          row.test = welch_t_test(xs, ys);
          row.significant = row.test.p < alpha;
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

}  // namespace ssim
