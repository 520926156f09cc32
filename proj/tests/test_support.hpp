#pragma once

// Shared test helpers: scratch directories and default-config access.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "ssim/config.hpp"

namespace ssim::test {

inline const char* default_config_path() { return SSIM_DEFAULT_CONFIG_PATH; }

inline const ScenarioConfig& default_config() {
  static const ScenarioConfig cfg = load_config(default_config_path());
  return cfg;
}

// Unique scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path = base / ("ssim-test-" + std::to_string(::getpid()) + "-" +
                   std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path file(const std::string& name) const { return path / name; }
};

inline std::filesystem::path write_text(const std::filesystem::path& p,
                                        std::string_view text) {
  std::ofstream out(p);
  out << text;
  return p;
}

}  // namespace ssim::test
