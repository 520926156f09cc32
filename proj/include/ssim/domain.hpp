#pragma once

// Core vocabulary for the shelter-network simulation: demographics, service
// catalogs, shelter descriptions, eligibility, and scenario parameters.

#include <algorithm>
#include <array>
#include <bitset>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ssim {

inline constexpr int kGenderCount = 6;

enum class Gender : int {
  CisWoman = 0,
  CisMan,
  TransWoman,
  TransMan,
  Genderqueer,
  NonBinary,
};

inline constexpr std::array<std::string_view, kGenderCount> kGenderNames = {
    "cis_woman", "cis_man", "trans_woman", "trans_man", "genderqueer", "non_binary"};

inline std::string_view to_string(Gender g) {
  return kGenderNames[static_cast<std::size_t>(g)];
}

inline std::optional<Gender> parse_gender(std::string_view name) {
  for (int i = 0; i < kGenderCount; ++i) {
    if (kGenderNames[static_cast<std::size_t>(i)] == name) return static_cast<Gender>(i);
  }
  return std::nullopt;
}

using GenderSet = std::bitset<kGenderCount>;

inline GenderSet all_genders() {
  GenderSet s;
  s.set();
  return s;
}

// Coarse three-way grouping used for per-group reporting.
enum class Gender3 : int { ManBoy = 0, WomanGirl, NonCisLgbtq };

inline constexpr std::array<std::string_view, 3> kGender3Names = {"man_boy", "woman_girl",
                                                                 "noncis_lgbtq"};

inline std::string_view to_string(Gender3 g) {
  return kGender3Names[static_cast<std::size_t>(g)];
}

inline std::optional<Gender3> parse_gender3(std::string_view name) {
  for (int i = 0; i < 3; ++i) {
    if (kGender3Names[static_cast<std::size_t>(i)] == name) return static_cast<Gender3>(i);
  }
  return std::nullopt;
}

// Maps each fine-grained gender to its reporting group; overridable in config.
using Gender3Map = std::array<Gender3, kGenderCount>;

inline Gender3Map default_gender3_map() {
  Gender3Map m{};
  m[static_cast<std::size_t>(Gender::CisWoman)] = Gender3::WomanGirl;
  m[static_cast<std::size_t>(Gender::CisMan)] = Gender3::ManBoy;
  m[static_cast<std::size_t>(Gender::TransWoman)] = Gender3::WomanGirl;
  m[static_cast<std::size_t>(Gender::TransMan)] = Gender3::ManBoy;
  m[static_cast<std::size_t>(Gender::Genderqueer)] = Gender3::NonCisLgbtq;
  m[static_cast<std::size_t>(Gender::NonBinary)] = Gender3::NonCisLgbtq;
  return m;
}

struct DemographicProfile {
  int age = 0;
  Gender gender = Gender::CisWoman;
  bool immigrant = false;
  bool trafficking_victim = false;
};

// Ordered list of service names; the order defines bit positions for
// ServiceVector, so every vector in a scenario shares one catalog.
class ServiceCatalog {
 public:
  ServiceCatalog() = default;
  explicit ServiceCatalog(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      for (std::size_t j = i + 1; j < names_.size(); ++j) {
        if (names_[i] == names_[j])
          throw std::invalid_argument("service catalog: duplicate name '" + names_[i] + "'");
      }
    }
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return i;
    }
    return std::nullopt;
  }

 private:
  std::vector<std::string> names_;
};

// Fixed-length bit vector over a service catalog.
class ServiceVector {
 public:
  ServiceVector() = default;
  explicit ServiceVector(std::size_t catalog_size) : bits_(catalog_size, false) {}

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool value = true) { bits_.at(i) = value; }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
  }

  bool operator==(const ServiceVector&) const = default;

 private:
  std::vector<bool> bits_;
};

// Number of requested services the provider covers. Both vectors must come
// from the same catalog (same length).
inline std::size_t needs_match_count(const ServiceVector& requested,
                                     const ServiceVector& provided) {
  if (requested.size() != provided.size()) {
    throw std::invalid_argument("needs_match_count: vectors from different catalogs (" +
                                std::to_string(requested.size()) + " vs " +
                                std::to_string(provided.size()) + " services)");
  }
  std::size_t n = 0;
  for (std::size_t i = 0; i < requested.size(); ++i) {
    if (requested[i] && provided[i]) ++n;
  }
  return n;
}

struct ShelterConfig {
  int id = 0;
  std::string name;
  int beds = 0;
  int age_limit = 0;        // inclusive upper bound on admissible age
  GenderSet accepted_genders;
  bool accepts_immigrants = true;
  bool accepts_trafficking_victims = true;
  ServiceVector services;
};

inline bool is_eligible(const DemographicProfile& youth, const ShelterConfig& shelter) {
  return youth.age <= shelter.age_limit &&
         shelter.accepted_genders.test(static_cast<std::size_t>(youth.gender)) &&
         (shelter.accepts_immigrants || !youth.immigrant) &&
         (shelter.accepts_trafficking_victims || !youth.trafficking_victim);
}

inline std::vector<std::size_t> eligible_indices(const DemographicProfile& youth,
                                                 const std::vector<ShelterConfig>& shelters) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < shelters.size(); ++s) {
    if (is_eligible(youth, shelters[s])) out.push_back(s);
  }
  return out;
}

inline std::vector<int> eligible_shelter_ids(const DemographicProfile& youth,
                                             const std::vector<ShelterConfig>& shelters) {
  std::vector<int> out;
  for (const auto& s : shelters) {
    if (is_eligible(youth, s)) out.push_back(s.id);
  }
  return out;
}

inline int total_beds(const std::vector<ShelterConfig>& shelters) {
  int n = 0;
  for (const auto& s : shelters) n += s.beds;
  return n;
}

enum class Distribution { Normal, Exponential };

inline std::string_view to_string(Distribution d) {
  return d == Distribution::Normal ? "normal" : "exponential";
}

inline std::optional<Distribution> parse_distribution(std::string_view name) {
  if (name == "normal") return Distribution::Normal;
  if (name == "exponential") return Distribution::Exponential;
  return std::nullopt;
}

struct SimulationParams {
  double annual_arrivals = 2160.0;   // Poisson arrivals per 365 days
  double horizon_days = 365.0;
  double mean_service_days = 60.0;
  double service_sd_days = 5.0;
  double mean_patience_days = 5.0;
  double patience_sd_days = 2.0;
  double warmup_occupancy = 0.90;    // fraction of beds occupied at t=0
  int replications = 100;
  Distribution service_distribution = Distribution::Normal;
  Distribution patience_distribution = Distribution::Normal;

  double arrival_rate_per_day() const { return annual_arrivals / 365.0; }
};

struct PopulationDistribution {
  std::map<int, double> age_pmf;                     // age -> probability
  std::array<double, kGenderCount> gender_pmf{};     // indexed by Gender
  double p_immigrant = 0.0;
  double p_trafficking = 0.0;
  std::vector<double> service_request_probs;          // catalog order
};

struct ScenarioConfig {
  ServiceCatalog catalog;
  std::vector<ShelterConfig> shelters;
  SimulationParams params;
  PopulationDistribution population;
  Gender3Map gender_grouping = default_gender3_map();

  std::optional<std::size_t> shelter_index_by_id(int id) const {
    for (std::size_t s = 0; s < shelters.size(); ++s) {
      if (shelters[s].id == id) return s;
    }
    return std::nullopt;
  }
};

}  // namespace ssim
