#pragma once

// File formats: per-replication event-log CSVs, run manifests, and the
// summary / comparison / sample tables. Doubles are written with shortest
// round-trip formatting (std::to_chars), so writing and re-reading an event
// log reproduces the exact same metric values; undefined cells are empty and
// read back as NaN.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "domain.hpp"
#include "engine.hpp"
#include "metrics.hpp"
#include "util.hpp"

namespace ssim {

// --- event logs -----------------------------------------------------------

inline std::string event_log_header(const ScenarioConfig& config) {
  std::string h =
      "id,arrival,age,gender,immigrant,trafficking,requests,shelter,outcome,"
      "service,patience,estimated_wait,actual_wait,start_service,departure";
  for (const auto& s : config.shelters) {
    const std::string sid = std::to_string(s.id);
    h += ",x_" + sid + ",q_" + sid + ",rho_" + sid;
  }
  return h;
}

inline void write_event_log(const std::filesystem::path& path,
                            const ReplicationResult& result,
                            const ScenarioConfig& config) {
  std::ofstream out = open_output(path);
  out << event_log_header(config) << '\n';
  std::string requests(config.catalog.size(), '0');
  for (const YouthRecord& y : result.youths) {
    for (std::size_t i = 0; i < y.requests.size(); ++i) requests[i] = y.requests[i] ? '1' : '0';
    out << y.id << ',' << format_double(y.arrival) << ',' << y.profile.age << ','
        << to_string(y.profile.gender) << ',' << (y.profile.immigrant ? 1 : 0) << ','
        << (y.profile.trafficking_victim ? 1 : 0) << ',' << requests << ',';
    if (y.shelter) out << config.shelters[*y.shelter].id;
    out << ',' << to_string(y.outcome) << ',' << format_double(y.service_duration) << ','
        << format_double(y.patience) << ',' << format_double(y.estimated_wait) << ','
        << format_double(y.actual_wait) << ',' << format_double(y.start_service) << ','
        << format_double(y.departure);
    for (const ShelterObservation& obs : y.observed) {
      out << ',' << obs.in_system << ',' << obs.queue_length << ','
          << format_double(obs.utilization);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

inline std::vector<YouthRecord> read_event_log(const std::filesystem::path& path,
                                               const ScenarioConfig& config) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != event_log_header(config))
    throw IoError(path.string() + ": header does not match this config");

  const std::size_t fixed = 15;
  const std::size_t expected = fixed + 3 * config.shelters.size();
  std::vector<YouthRecord> youths;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != expected)
      throw IoError(path.string() + ": expected " + std::to_string(expected) +
                    " fields, got " + std::to_string(f.size()));
    YouthRecord y;
    y.id = static_cast<int>(parse_long(f[0]));
    y.arrival = parse_double(f[1]);
    y.profile.age = static_cast<int>(parse_long(f[2]));
    const auto gender = parse_gender(f[3]);
    if (!gender) throw IoError(path.string() + ": unknown gender '" + std::string(f[3]) + "'");
    y.profile.gender = *gender;
    y.profile.immigrant = parse_long(f[4]) != 0;
    y.profile.trafficking_victim = parse_long(f[5]) != 0;
    if (f[6].size() != config.catalog.size())
      throw IoError(path.string() + ": request bits do not match catalog size");
    y.requests = ServiceVector(config.catalog.size());
    for (std::size_t i = 0; i < f[6].size(); ++i) y.requests.set(i, f[6][i] == '1');
    if (!f[7].empty()) {
      const auto idx = config.shelter_index_by_id(static_cast<int>(parse_long(f[7])));
      if (!idx) throw IoError(path.string() + ": unknown shelter id " + std::string(f[7]));
      y.shelter = *idx;
    }
    const auto outcome = parse_outcome(f[8]);
    if (!outcome)
      throw IoError(path.string() + ": unknown outcome '" + std::string(f[8]) + "'");
    y.outcome = *outcome;
    y.service_duration = parse_double(f[9]);
    y.patience = parse_double(f[10]);
    y.estimated_wait = parse_double(f[11]);
    y.actual_wait = parse_double(f[12]);
    y.start_service = parse_double(f[13]);
    y.departure = parse_double(f[14]);
    y.observed.reserve(config.shelters.size());
    for (std::size_t s = 0; s < config.shelters.size(); ++s) {
      ShelterObservation obs;
      obs.in_system = static_cast<int>(parse_long(f[fixed + 3 * s]));
      obs.queue_length = static_cast<int>(parse_long(f[fixed + 3 * s + 1]));
      obs.utilization = parse_double(f[fixed + 3 * s + 2]);
      y.observed.push_back(obs);
    }
    youths.push_back(std::move(y));
  }
  return youths;
}

// --- run manifest ---------------------------------------------------------

struct RunManifest {
  std::string format = "shelter-sim-run";
  int version = 1;
  std::string strategy;
  std::uint64_t seed = 0;
  int replications = 0;
  double horizon_days = 0.0;
  std::string config_hash;  // FNV-1a of the normalized config JSON text
  std::string created_utc;
};

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = m.format;
  j["version"] = m.version;
  j["strategy"] = m.strategy;
  j["seed"] = m.seed;
  j["replications"] = m.replications;
  j["horizon_days"] = m.horizon_days;
  j["config_hash"] = m.config_hash;
  j["created_utc"] = m.created_utc;
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  RunManifest m;
  try {
    m.format = j.at("format").get<std::string>();
    m.version = j.at("version").get<int>();
    m.strategy = j.at("strategy").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.replications = j.at("replications").get<int>();
    m.horizon_days = j.at("horizon_days").get<double>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.created_utc = j.value("created_utc", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (m.format != "shelter-sim-run")
    throw IoError(path.string() + ": not a run manifest (format '" + m.format + "')");
  return m;
}

// --- summary / comparison / sample tables ---------------------------------

inline void write_summary_csv(const std::filesystem::path& path,
                              const std::vector<SummaryRow>& rows,
                              const ScenarioConfig& config) {
  std::ofstream out = open_output(path);
  out << "strategy,dimension,group,metric,replications,mean,sd,ci_lo,ci_hi\n";
  for (const SummaryRow& r : rows) {
    out << to_string(r.strategy) << ',' << to_string(r.group.dimension) << ','
        << group_label(r.group, config) << ',' << to_string(r.metric) << ',' << r.stats.n
        << ',' << format_double(r.stats.mean) << ',' << format_double(r.stats.sd) << ','
        << format_double(r.stats.ci_lo) << ',' << format_double(r.stats.ci_hi) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

inline void write_comparisons_csv(const std::filesystem::path& path,
                                  const std::vector<ComparisonRow>& rows,
                                  const ScenarioConfig& config) {
  std::ofstream out = open_output(path);
  out << "strategy,baseline,dimension,group,metric,mean_strategy,mean_baseline,t,df,"
         "p_value,significant\n";
  for (const ComparisonRow& r : rows) {
    out << to_string(r.strategy) << ',' << to_string(r.baseline) << ','
        << to_string(r.group.dimension) << ',' << group_label(r.group, config) << ','
        << to_string(r.metric) << ',' << format_double(r.mean_strategy) << ','
        << format_double(r.mean_baseline) << ',' << format_double(r.test.t) << ','
        << format_double(r.test.df) << ',' << format_double(r.test.p) << ','
        << (r.significant ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

// Long-format per-replication values of one metric, for external plotting.
inline void write_samples_csv(const std::filesystem::path& path,
                              const std::vector<StrategyMetrics>& runs, Metric metric,
                              const ScenarioConfig& config) {
  std::ofstream out = open_output(path);
  out << "strategy,dimension,group,replication,value\n";
  for (const StrategyMetrics& run : runs) {
    for (const GroupKey& group : default_groups(config)) {
      const auto xs = metric_series(run, group, metric);
      for (std::size_t rep = 0; rep < xs.size(); ++rep) {
        out << to_string(run.strategy) << ',' << to_string(group.dimension) << ','
            << group_label(group, config) << ',' << rep << ',' << format_double(xs[rep])
            << '\n';
      }
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace ssim
