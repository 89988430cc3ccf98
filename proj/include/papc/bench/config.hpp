#pragma once

#include "papc/schedule.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace papc::bench {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key-value text with sections. `[a.b]` followed by `k = v` stores key
/// `a.b.k`; a dotted key at top level is the same entry. `#` starts a comment.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  /// Canonical text: top-level keys first, then one section per prefix, keys sorted.
  std::string serialize() const;

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  std::optional<double> number(const std::string& key) const;
  long long integer(const std::string& key, long long fallback) const;

  void set(const std::string& key, const std::string& value);
  void erase(const std::string& key) { entries_.erase(key); }

  /// Distinct names `x` of keys `prefix.x.*`, in sorted order.
  std::vector<std::string> subsections(const std::string& prefix) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

  /// Paths in values are relative to the config file.
  std::filesystem::path resolve(const std::string& path) const;

  bool operator==(const Config& other) const { return entries_ == other.entries_; }

 private:
  std::map<std::string, std::string> entries_;
  std::filesystem::path base_dir_;
};

double parse_number(const std::string& text, const std::string& what);

struct ScheduleConfig {
  std::optional<double> gamma0;
  double gamma_scale = 0.9;
  double gamma_decay = 0;
  double gamma_limit = 0;
  std::optional<double> tau_cap;
  double tau_scale = 0.9;
  std::optional<double> tau0;
};

struct NoiseConfig {
  std::string kind = "none";
  /// standard deviation at n = 0; the variance schedule starts at sigma0^2
  double sigma0 = 0;
  double epsilon = 1;
  /// polynomial (the default) or constant
  std::string schedule;
  std::string batch_schedule = "constant:1";
};

struct ExperimentConfig {
  Config raw;
  std::string problem;
  Regime regime = Regime::almost_sure;
  ScheduleConfig schedule;
  NoiseConfig noise;
  Index horizon = 10000;
  std::vector<std::uint64_t> seeds{1};
  /// empty: log-spaced with `per_decade` points per decade
  std::vector<Index> checkpoints;
  int per_decade = 20;
  Index trace_stride = 0;
  std::string output = "papc_out";

  /// Validates and types a parsed config; throws ConfigError naming the key.
  static ExperimentConfig from(const Config& cfg);
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text);
Regime parse_regime(const std::string& text);

}  // namespace papc::bench
