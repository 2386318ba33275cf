#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "swgf/io.hpp"
#include "swgf/measures.hpp"
#include "swgf/sets.hpp"

namespace swgf::cli {

/// Every key accepted in config files and as --key overrides.
const std::vector<std::string>& known_keys();

/// Values of the predictive-maintenance case study (plant, degradation, flow defaults).
io::KeyValues case_preset();

/// Typed read access to the merged key-value configuration. Every failure is
/// a kConfig error naming the key.
class Settings {
 public:
  explicit Settings(io::KeyValues values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.contains(key); }

  /// Throws one error listing every missing key.
  void require_keys(std::initializer_list<const char*> keys, const std::string& command) const;

  std::string text(const std::string& key) const;
  std::string text_or(const std::string& key, const std::string& fallback) const;

  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::optional<double> maybe_number(const std::string& key) const;

  std::size_t count(const std::string& key) const;
  std::size_t count_or(const std::string& key, std::size_t fallback) const;

  std::uint64_t u64_or(const std::string& key, std::uint64_t fallback) const;

  /// Comma-separated numbers; a single value is broadcast to `dim` entries.
  Vector vector(const std::string& key, std::size_t dim) const;
  std::vector<double> numbers(const std::string& key) const;

  std::vector<std::string> list(const std::string& key) const;

  /// constraint = box | nonneg_orthant | halfspace | ball | all, with
  /// constraint_lo/_hi, constraint_a/_b or constraint_center/_radius.
  ConvexSet constraint(std::size_t dim) const;

  const io::KeyValues& values() const { return values_; }

 private:
  io::KeyValues values_;
};

}  // namespace swgf::cli
