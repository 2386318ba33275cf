#include "settings.hpp"

#include <charconv>
#include <sstream>

#include "swgf/error.hpp"

namespace swgf::cli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  fail(ErrorKind::kConfig, "config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

template <class Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int v{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || res.ec != std::errc() || res.ptr != value.data() + value.size())
    bad_value(key, value, "a nonnegative integer");
  return v;
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      // scenario
      "a0", "b0", "lambda1", "lambda2", "zeta_min", "period", "dt", "horizon", "eps_half_width", "r", "x0",
      "last_day",
      // flow
      "n_particles", "init_lo", "init_hi", "rho", "tau", "perturb_std", "max_iters", "diag_every",
      "diag_subsample", "checkpoint_every", "on_invalid", "sigma_w2", "constraint", "constraint_lo",
      "constraint_hi", "constraint_a", "constraint_b", "constraint_center", "constraint_radius",
      // prediction
      "rule", "rule_level", "chance_alpha", "band_lo", "band_hi", "t_grid", "day",
      // inputs and execution
      "observations", "particles", "reference", "resume", "seed", "workers"};
  return keys;
}

io::KeyValues case_preset() {
  const auto f = io::format_double;
  return {
      {"a0", "2.5"},
      {"b0", "1"},
      {"lambda1", f(2.0 / 60.0)},
      {"lambda2", f(5.0 / 60.0)},
      {"zeta_min", "0.4"},
      {"period", "5"},
      {"dt", "0.001"},
      {"horizon", "100"},
      {"eps_half_width", "3"},
      {"r", "1"},
      {"x0", "0,0"},
      {"last_day", "45"},
      {"n_particles", "1000"},
      {"init_lo", "0"},
      {"init_hi", f(8.0 / 60.0)},
      {"rho", "0.1"},
      {"perturb_std", "0.02"},
      {"constraint", "nonneg_orthant"},
      {"rule", "percentile"},
      {"rule_level", "0.1"},
      {"t_grid", "0:0.5:60"},
  };
}

void Settings::require_keys(std::initializer_list<const char*> keys, const std::string& command) const {
  std::string missing;
  for (const char* k : keys)
    if (!has(k)) missing += (missing.empty() ? "" : ", ") + std::string(k);
  if (!missing.empty())
    fail(ErrorKind::kConfig,
         command + ": missing required config keys: " + missing + " (set them or pass --paper-preset)");
}

std::string Settings::text(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::kConfig, "missing config key '" + key + "'");
  return it->second;
}

std::string Settings::text_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

double Settings::number(const std::string& key) const {
  const std::string value = text(key);
  try {
    const double v = io::parse_double(value);
    if (!std::isfinite(v)) bad_value(key, value, "a finite number");
    return v;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    bad_value(key, value, "a number");
  }
}

double Settings::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::optional<double> Settings::maybe_number(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return number(key);
}

std::size_t Settings::count(const std::string& key) const { return parse_int<std::size_t>(key, text(key)); }

std::size_t Settings::count_or(const std::string& key, std::size_t fallback) const {
  return has(key) ? count(key) : fallback;
}

std::uint64_t Settings::u64_or(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? parse_int<std::uint64_t>(key, text(key)) : fallback;
}

std::vector<std::string> Settings::list(const std::string& key) const {
  std::vector<std::string> items;
  std::stringstream in(text(key));
  std::string item;
  while (std::getline(in, item, ',')) items.push_back(trim(item));
  return items;
}

std::vector<double> Settings::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : list(key)) {
    try {
      out.push_back(io::parse_double(item));
    } catch (const Error&) {
      bad_value(key, text(key), "comma-separated numbers");
    }
    if (!std::isfinite(out.back())) bad_value(key, text(key), "finite numbers");
  }
  if (out.empty()) bad_value(key, text(key), "comma-separated numbers");
  return out;
}

Vector Settings::vector(const std::string& key, std::size_t dim) const {
  const auto v = numbers(key);
  if (v.size() == 1) return Vector::Constant(static_cast<Eigen::Index>(dim), v[0]);
  if (v.size() != dim) bad_value(key, text(key), std::to_string(dim) + " comma-separated numbers");
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(dim));
}

ConvexSet Settings::constraint(std::size_t dim) const {
  const std::string kind = text_or("constraint", "all");
  try {
    if (kind == "all") return ConvexSet::whole(dim);
    if (kind == "nonneg_orthant") return ConvexSet::nonneg_orthant(dim);
    if (kind == "box") return ConvexSet::box(vector("constraint_lo", dim), vector("constraint_hi", dim));
    if (kind == "halfspace") return ConvexSet::halfspace(vector("constraint_a", dim), number("constraint_b"));
    if (kind == "ball") return ConvexSet::ball(vector("constraint_center", dim), number("constraint_radius"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    fail(ErrorKind::kConfig, std::string("constraint: ") + e.what());
  }
  bad_value("constraint", kind, "one of all, nonneg_orthant, box, halfspace, ball");
}

}  // namespace swgf::cli
