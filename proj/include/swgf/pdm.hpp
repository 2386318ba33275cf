#pragma once

// Predictive maintenance of a second-order plant whose damping degrades
// linearly in time:
//   z'' + a z' + b (z - r + eps) = 0,   a(t) = a0 - l1 t,   b(t) = b0 + l2 t.
// The safe set is {zeta = a / (2 sqrt b) >= zeta_min}.

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "swgf/flow.hpp"
#include "swgf/measures.hpp"

namespace swgf::pdm {

using State = std::array<double, 2>;  // (z, z')

struct PlantParams {
  double a = 2.5;              // damping coefficient [1/s]
  double b = 1.0;              // stiffness coefficient [1/s^2]
  double r = 1.0;              // constant reference
  double dt = 0.001;           // sampling period [s]
  double horizon = 100.0;      // trajectory length [s]
  double eps_half_width = 3.0; // reference noise is uniform on [-w, w]

  /// Spectral radius of the Euler state matrix [[1, dt], [-dt b, 1 - dt a]].
  double spectral_radius() const;

  /// Throws kInvalidArgument on bad values and kNumerical if the
  /// discretization is unstable.
  void validate() const;
};

struct Trajectory {
  std::vector<State> states;
  std::vector<double> reference;  // r_k (noise-free)
};

struct DegradationModel {
  double a0 = 2.5;
  double b0 = 1.0;
  double lambda1 = 2.0 / 60.0;
  double lambda2 = 5.0 / 60.0;
  double zeta_min = 0.4;
  double period = 5.0;  // days between observations (T)

  void validate() const;
};

struct Observation {
  double t = 0.0;  // days since maintenance
  Vector y_hat;    // (a_hat, b_hat)
};

/// floor(horizon/dt) Euler steps of the plant; the noise enters through the
/// reference channel, x_{k+1} = A x_k + B (r + eps_k).
Trajectory simulate_trajectory(const PlantParams& p, const State& x0, std::uint64_t seed);

/// Least-squares (a, b) from the velocity row of the Euler recursion:
/// (v_{k+1} - v_k)/dt = -a v_k + b (r_k - z_k).
Vector ls_estimate(const Trajectory& traj, double dt);

/// (a0 - l1 t, b0 + l2 t)
Vector degrade(const DegradationModel& d, double t);
Vector degrade(const DegradationModel& d, const Vector& lambda, double t);

/// a / (2 sqrt b); kInvalidArgument for b <= 0.
double damping_ratio(const Vector& y);

/// a / (2 sqrt(max(b, 1e-12))), used for belief pushforwards.
double damping_ratio_floored(double a, double b);

/// Time crossing found by bracketing and bisection; `infinite` when the ratio
/// never reaches zeta_min.
struct CrossingTime {
  double t = 0.0;
  bool infinite = false;
  bool unsafe_at_start = false;
};

/// First time the degraded ratio drops below zeta_min (to 1e-6 days).
CrossingTime true_maintenance_time(const DegradationModel& d);
CrossingTime maintenance_time_for(const DegradationModel& d, const Vector& lambda, double tolerance = 1e-6);

/// Consecutive differences of equally spaced observations. Returns W =
/// diag(-T, T) alongside, with parameter theta = (l1, l2).
struct DifferencedStream {
  double period = 0.0;
  std::vector<Vector> increments;
  Matrix w() const;
};
DifferencedStream difference_stream(std::span<const Observation> obs);

struct BandRow {
  double t, lo, mean, hi;
};

/// Percentile band and mean of the damping ratio pushed forward from the
/// belief over (l1, l2).
std::vector<BandRow> predict_damping_band(const ParticleMeasure& m, const DegradationModel& d,
                                          std::span<const double> t_grid, double p_lo, double p_hi);

struct MaintenanceRule {
  enum class Kind { kPercentile, kMean, kChance } kind = Kind::kPercentile;
  double level = 0.1;  // p for percentile, alpha for chance; unused for mean

  static MaintenanceRule percentile(double p) { return {Kind::kPercentile, p}; }
  static MaintenanceRule mean() { return {Kind::kMean, 0.0}; }
  static MaintenanceRule chance(double alpha) { return {Kind::kChance, alpha}; }
};

/// Largest t at which the rule still deems the plant safe, to 1e-3 days.
CrossingTime suggested_maintenance_time(const ParticleMeasure& m, const DegradationModel& d, MaintenanceRule rule);

struct LsBaseline {
  Vector lambda_hat;
  CrossingTime t_star;
  bool negative_component = false;
};

/// Through-origin least squares of the degradation slopes,
/// l1 from (t_k, a0 - a_hat_k) and l2 from (t_k, b_hat_k - b0). Unclamped.
LsBaseline ls_baseline(std::span<const Observation> obs, double a0, double b0, const DegradationModel& d);

// ---------------------------------------------------------------------------
// End-to-end case study.

struct CaseConfig {
  PlantParams plant;
  DegradationModel model;
  State x0{0.0, 0.0};
  double last_day = 45.0;  // observations at 0, T, 2T, ... <= last_day
  std::size_t particles = 1000;
  Vector init_lo = Vector::Zero(2);
  Vector init_hi = Vector::Constant(2, 8.0 / 60.0);
  double rho = 0.1;
  std::optional<double> tau;  // default: half of 1/(2 max(T^2, rho))
  double perturb_std = 0.02;
  MaintenanceRule rule = MaintenanceRule::percentile(0.1);
  std::uint64_t seed = 0;
  unsigned workers = 1;

  double effective_tau() const;
};

/// One noisy observation per day on the grid, each from its own trajectory.
std::vector<Observation> simulate_observations(const CaseConfig& cfg);

struct DayRow {
  double day = 0.0;
  double ours = 0.0;
  double ls = 0.0;
  double truth = 0.0;
  Vector mean_lambda;
};

struct CaseResult {
  std::vector<Observation> observations;
  std::vector<DayRow> days;  // one row per observation from the second on
  ParticleMeasure final_particles;
  FlowTrace trace;
  Vector raw_noise_mean;          // mean of y_hat(t) - y(t) over observations
  double increment_noise_m2 = 0;  // mean |y_tilde - W theta*|^2 over increments
};

/// Simulates observations, runs the flow on their differences and records
/// suggested maintenance times (ours, LS baseline, truth) after every update.
CaseResult run_case(const CaseConfig& cfg);

/// Flow on already available observations (see run_case).
CaseResult run_case_on(const CaseConfig& cfg, std::vector<Observation> observations);

}  // namespace swgf::pdm
