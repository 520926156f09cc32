#pragma once

// Scenario configuration: JSON loading, invariant validation, and the
// normalized echo form. A config file has exactly three top-level sections —
// "shelters", "params", and "population" — and the ordered
// population.services array doubles as the service catalog, so every service
// vector in the scenario shares one bit order.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "domain.hpp"
#include "util.hpp"

namespace ssim {

// Invalid schema, failed invariants, or an unreadable config file. Messages
// name the offending JSON path.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

inline constexpr double kPmfTolerance = 1e-6;

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

inline const json& require(const json& j, const std::string& key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) fail(where, "missing required key '" + key + "'");
  return *it;
}

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) fail(where, "unknown key '" + key + "'");
  }
}

inline double number_in(const json& j, const std::string& key, const std::string& where,
                        double lo, double hi) {
  const json& v = require(j, key, where);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  const double x = v.get<double>();
  if (!(x >= lo && x <= hi))
    fail(where + "." + key, "value " + std::to_string(x) + " outside [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return x;
}

inline int integer_in(const json& j, const std::string& key, const std::string& where,
                      long lo, long hi) {
  const json& v = require(j, key, where);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  const long x = v.get<long>();
  if (x < lo || x > hi)
    fail(where + "." + key, "value " + std::to_string(x) + " outside [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(x);
}

inline bool boolean(const json& j, const std::string& key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_boolean()) fail(where + "." + key, "expected true or false");
  return v.get<bool>();
}

inline void check_pmf_sum(double sum, const std::string& where) {
  if (std::abs(sum - 1.0) > kPmfTolerance)
    fail(where, "probabilities sum to " + std::to_string(sum) + ", expected 1");
}

struct DurationSpec {
  Distribution distribution = Distribution::Normal;
  double mean = 0.0;
  double sd = 0.0;
};

inline DurationSpec parse_duration(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  reject_unknown_keys(j, {"distribution", "mean_days", "sd_days"}, where);
  DurationSpec d;
  const json& dist = require(j, "distribution", where);
  if (!dist.is_string()) fail(where + ".distribution", "expected a string");
  const auto parsed = parse_distribution(dist.get<std::string>());
  if (!parsed)
    fail(where + ".distribution",
         "unknown distribution '" + dist.get<std::string>() + "' (normal|exponential)");
  d.distribution = *parsed;
  d.mean = number_in(j, "mean_days", where, 1e-9, 1e9);
  if (d.distribution == Distribution::Normal) {
    d.sd = number_in(j, "sd_days", where, 0.0, 1e9);
  } else if (j.contains("sd_days")) {
    d.sd = number_in(j, "sd_days", where, 0.0, 1e9);
  }
  return d;
}

}  // namespace detail

inline ScenarioConfig config_from_json(const nlohmann::json& root) {
  using detail::fail;
  using detail::require;
  using nlohmann::json;

  if (!root.is_object()) fail("config", "top level must be a JSON object");
  detail::reject_unknown_keys(root, {"shelters", "params", "population"}, "config");

  ScenarioConfig cfg;

  // population.services defines the catalog; parse population first.
  const json& pop = require(root, "population", "config");
  if (!pop.is_object()) fail("population", "expected an object");
  detail::reject_unknown_keys(pop,
                              {"age_pmf", "gender_pmf", "p_immigrant", "p_trafficking",
                               "services", "gender_grouping"},
                              "population");

  {
    const json& services = require(pop, "services", "population");
    if (!services.is_array() || services.empty())
      fail("population.services", "expected a non-empty array");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < services.size(); ++i) {
      const std::string where = "population.services[" + std::to_string(i) + "]";
      const json& entry = services[i];
      if (!entry.is_object()) fail(where, "expected an object");
      detail::reject_unknown_keys(entry, {"name", "request_probability"}, where);
      const json& name = require(entry, "name", where);
      if (!name.is_string() || name.get<std::string>().empty())
        fail(where + ".name", "expected a non-empty string");
      names.push_back(name.get<std::string>());
      cfg.population.service_request_probs.push_back(
          detail::number_in(entry, "request_probability", where, 0.0, 1.0));
    }
    try {
      cfg.catalog = ServiceCatalog(std::move(names));
    } catch (const std::invalid_argument& e) {
      fail("population.services", e.what());
    }
  }

  {
    const json& age = require(pop, "age_pmf", "population");
    if (!age.is_object() || age.empty())
      fail("population.age_pmf", "expected a non-empty object of age -> probability");
    double sum = 0.0;
    for (const auto& [key, value] : age.items()) {
      long a = 0;
      try {
        std::size_t pos = 0;
        a = std::stol(key, &pos);
        if (pos != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        fail("population.age_pmf", "key '" + key + "' is not an integer age");
      }
      if (a < 0 || a > 150) fail("population.age_pmf", "age " + key + " out of range");
      if (!value.is_number() || value.get<double>() < 0.0 || value.get<double>() > 1.0)
        fail("population.age_pmf." + key, "expected a probability in [0, 1]");
      cfg.population.age_pmf[static_cast<int>(a)] = value.get<double>();
      sum += value.get<double>();
    }
    detail::check_pmf_sum(sum, "population.age_pmf");
  }

  {
    const json& gender = require(pop, "gender_pmf", "population");
    if (!gender.is_object()) fail("population.gender_pmf", "expected an object");
    double sum = 0.0;
    for (const auto& [key, value] : gender.items()) {
      const auto g = parse_gender(key);
      if (!g) fail("population.gender_pmf", "unknown gender '" + key + "'");
      if (!value.is_number() || value.get<double>() < 0.0 || value.get<double>() > 1.0)
        fail("population.gender_pmf." + key, "expected a probability in [0, 1]");
      cfg.population.gender_pmf[static_cast<std::size_t>(*g)] = value.get<double>();
      sum += value.get<double>();
    }
    detail::check_pmf_sum(sum, "population.gender_pmf");
  }

  cfg.population.p_immigrant = detail::number_in(pop, "p_immigrant", "population", 0.0, 1.0);
  cfg.population.p_trafficking =
      detail::number_in(pop, "p_trafficking", "population", 0.0, 1.0);

  if (pop.contains("gender_grouping")) {
    const json& grouping = pop["gender_grouping"];
    if (!grouping.is_object()) fail("population.gender_grouping", "expected an object");
    for (const auto& [key, value] : grouping.items()) {
      const auto g = parse_gender(key);
      if (!g) fail("population.gender_grouping", "unknown gender '" + key + "'");
      if (!value.is_string())
        fail("population.gender_grouping." + key, "expected a group name");
      const auto g3 = parse_gender3(value.get<std::string>());
      if (!g3)
        fail("population.gender_grouping." + key,
             "unknown group '" + value.get<std::string>() +
                 "' (man_boy|woman_girl|noncis_lgbtq)");
      cfg.gender_grouping[static_cast<std::size_t>(*g)] = *g3;
    }
  }

  {
    const json& params = require(root, "params", "config");
    if (!params.is_object()) fail("params", "expected an object");
    detail::reject_unknown_keys(params,
                                {"annual_arrivals", "horizon_days", "service", "patience",
                                 "warmup_occupancy", "replications"},
                                "params");
    cfg.params.annual_arrivals =
        detail::number_in(params, "annual_arrivals", "params", 1e-9, 1e12);
    cfg.params.horizon_days = detail::number_in(params, "horizon_days", "params", 1e-9, 1e9);
    const auto service = detail::parse_duration(require(params, "service", "params"),
                                                "params.service");
    cfg.params.service_distribution = service.distribution;
    cfg.params.mean_service_days = service.mean;
    cfg.params.service_sd_days = service.sd;
    const auto patience = detail::parse_duration(require(params, "patience", "params"),
                                                 "params.patience");
    cfg.params.patience_distribution = patience.distribution;
    cfg.params.mean_patience_days = patience.mean;
    cfg.params.patience_sd_days = patience.sd;
    cfg.params.warmup_occupancy =
        detail::number_in(params, "warmup_occupancy", "params", 0.0, 1.0);
    cfg.params.replications = detail::integer_in(params, "replications", "params", 1, 1000000);
  }

  {
    const json& shelters = require(root, "shelters", "config");
    if (!shelters.is_array() || shelters.empty())
      fail("shelters", "expected a non-empty array");
    std::set<int> seen_ids;
    for (std::size_t i = 0; i < shelters.size(); ++i) {
      const std::string where = "shelters[" + std::to_string(i) + "]";
      const json& sj = shelters[i];
      if (!sj.is_object()) fail(where, "expected an object");
      detail::reject_unknown_keys(sj,
                                  {"id", "name", "beds", "age_limit", "accepted_genders",
                                   "accepts_immigrants", "accepts_trafficking_victims",
                                   "services"},
                                  where);
      ShelterConfig s;
      s.id = detail::integer_in(sj, "id", where, 0, 1000000);
      if (!seen_ids.insert(s.id).second)
        fail(where + ".id", "duplicate shelter id " + std::to_string(s.id));
      if (sj.contains("name")) {
        if (!sj["name"].is_string()) fail(where + ".name", "expected a string");
        s.name = sj["name"].get<std::string>();
      } else {
        s.name = "shelter_" + std::to_string(s.id);
      }
      s.beds = detail::integer_in(sj, "beds", where, 1, 1000000);
      s.age_limit = detail::integer_in(sj, "age_limit", where, 0, 150);
      const json& genders = require(sj, "accepted_genders", where);
      if (!genders.is_array() || genders.empty())
        fail(where + ".accepted_genders", "expected a non-empty array");
      for (const json& g : genders) {
        if (!g.is_string()) fail(where + ".accepted_genders", "expected gender names");
        const auto parsed = parse_gender(g.get<std::string>());
        if (!parsed)
          fail(where + ".accepted_genders", "unknown gender '" + g.get<std::string>() + "'");
        if (s.accepted_genders.test(static_cast<std::size_t>(*parsed)))
          fail(where + ".accepted_genders", "duplicate gender '" + g.get<std::string>() + "'");
        s.accepted_genders.set(static_cast<std::size_t>(*parsed));
      }
      s.accepts_immigrants = detail::boolean(sj, "accepts_immigrants", where);
      s.accepts_trafficking_victims =
          detail::boolean(sj, "accepts_trafficking_victims", where);
      const json& services = require(sj, "services", where);
      if (!services.is_array()) fail(where + ".services", "expected an array");
      s.services = ServiceVector(cfg.catalog.size());
      for (const json& name : services) {
        if (!name.is_string()) fail(where + ".services", "expected service names");
        const auto idx = cfg.catalog.index_of(name.get<std::string>());
        if (!idx)
          fail(where + ".services", "service '" + name.get<std::string>() +
                                        "' is not in population.services");
        if (s.services[*idx])
          fail(where + ".services", "duplicate service '" + name.get<std::string>() + "'");
        s.services.set(*idx);
      }
      cfg.shelters.push_back(std::move(s));
    }
  }

  return cfg;
}

// Parses and validates a config file. All failures — unreadable file, JSON
// syntax errors (reported with a line number), schema violations — raise
// ConfigError.
inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    const std::size_t upto = std::min(e.byte, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ": " + e.what());
  }
  try {
    return config_from_json(root);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Canonical JSON form with every default materialized; the config hash is the
// FNV-1a fingerprint of this text, so reformatted or reordered files with the
// same meaning share a hash.
inline nlohmann::ordered_json normalized_json(const ScenarioConfig& cfg) {
  nlohmann::ordered_json root;

  auto& shelters = root["shelters"] = nlohmann::ordered_json::array();
  for (const auto& s : cfg.shelters) {
    nlohmann::ordered_json sj;
    sj["id"] = s.id;
    sj["name"] = s.name;
    sj["beds"] = s.beds;
    sj["age_limit"] = s.age_limit;
    auto& genders = sj["accepted_genders"] = nlohmann::ordered_json::array();
    for (int g = 0; g < kGenderCount; ++g) {
      if (s.accepted_genders.test(static_cast<std::size_t>(g)))
        genders.push_back(to_string(static_cast<Gender>(g)));
    }
    sj["accepts_immigrants"] = s.accepts_immigrants;
    sj["accepts_trafficking_victims"] = s.accepts_trafficking_victims;
    auto& services = sj["services"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < cfg.catalog.size(); ++i) {
      if (s.services[i]) services.push_back(cfg.catalog.name(i));
    }
    shelters.push_back(std::move(sj));
  }

  auto& params = root["params"];
  params["annual_arrivals"] = cfg.params.annual_arrivals;
  params["horizon_days"] = cfg.params.horizon_days;
  params["service"]["distribution"] = std::string(to_string(cfg.params.service_distribution));
  params["service"]["mean_days"] = cfg.params.mean_service_days;
  params["service"]["sd_days"] = cfg.params.service_sd_days;
  params["patience"]["distribution"] =
      std::string(to_string(cfg.params.patience_distribution));
  params["patience"]["mean_days"] = cfg.params.mean_patience_days;
  params["patience"]["sd_days"] = cfg.params.patience_sd_days;
  params["warmup_occupancy"] = cfg.params.warmup_occupancy;
  params["replications"] = cfg.params.replications;

  auto& pop = root["population"];
  auto& age = pop["age_pmf"];
  for (const auto& [a, p] : cfg.population.age_pmf) age[std::to_string(a)] = p;
  auto& gender = pop["gender_pmf"];
  for (int g = 0; g < kGenderCount; ++g)
    gender[std::string(to_string(static_cast<Gender>(g)))] =
        cfg.population.gender_pmf[static_cast<std::size_t>(g)];
  pop["p_immigrant"] = cfg.population.p_immigrant;
  pop["p_trafficking"] = cfg.population.p_trafficking;
  auto& services = pop["services"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cfg.catalog.size(); ++i) {
    nlohmann::ordered_json entry;
    entry["name"] = cfg.catalog.name(i);
    entry["request_probability"] = cfg.population.service_request_probs[i];
    services.push_back(std::move(entry));
  }
  auto& grouping = pop["gender_grouping"];
  for (int g = 0; g < kGenderCount; ++g)
    grouping[std::string(to_string(static_cast<Gender>(g)))] =
        std::string(to_string(cfg.gender_grouping[static_cast<std::size_t>(g)]));

  return root;
}

inline std::string normalized_text(const ScenarioConfig& cfg) {
  return normalized_json(cfg).dump(2);
}

inline std::string config_hash(const ScenarioConfig& cfg) {
  return fnv1a_hex(normalized_text(cfg));
}

}  // namespace ssim
