#include "swgf/pdm.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "swgf/error.hpp"
#include "swgf/rng.hpp"

namespace swgf::pdm {

double PlantParams::spectral_radius() const {
  const double trace = 2.0 - dt * a;
  const double det = 1.0 - dt * a + dt * dt * b;
  const double disc = trace * trace - 4.0 * det;
  if (disc < 0.0) return std::sqrt(det);
  const double root = std::sqrt(disc);
  return std::max(std::abs(trace + root), std::abs(trace - root)) / 2.0;
}

void PlantParams::validate() const {
  require(std::isfinite(a) && a > 0.0, "plant: a must be positive");
  require(std::isfinite(b) && b > 0.0, "plant: b must be positive");
  require(std::isfinite(r), "plant: reference must be finite");
  require(std::isfinite(dt) && dt > 0.0, "plant: dt must be positive");
  require(std::isfinite(horizon) && horizon > 0.0, "plant: horizon must be positive");
  require(std::isfinite(eps_half_width) && eps_half_width >= 0.0, "plant: noise half-width must be nonnegative");
  const double rho = spectral_radius();
  if (!(rho < 1.0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "plant: unstable discretization, spectral radius " << rho << " >= 1 (a=" << a << ", b=" << b
        << ", dt=" << dt << ")";
    fail(ErrorKind::kNumerical, msg.str());
  }
}

void DegradationModel::validate() const {
  require(std::isfinite(a0) && std::isfinite(b0) && b0 > 0.0, "degradation: a0 finite and b0 positive required");
  require(lambda1 >= 0.0 && lambda2 >= 0.0, "degradation: decay rates must be nonnegative");
  require(std::isfinite(period) && period > 0.0, "degradation: observation period must be positive");
  require(damping_ratio_floored(a0, b0) >= zeta_min, "degradation: (a0, b0) must lie in the safe set");
}

Trajectory simulate_trajectory(const PlantParams& p, const State& x0, std::uint64_t seed) {
  p.validate();
  require(std::isfinite(x0[0]) && std::isfinite(x0[1]), "simulate_trajectory: initial state must be finite");
  const auto steps = static_cast<std::size_t>(std::floor(p.horizon / p.dt + 1e-9));
  Trajectory traj;
  traj.states.reserve(steps + 1);
  traj.reference.assign(steps + 1, p.r);
  traj.states.push_back(x0);
  CounterRng noise(seed, StreamPurpose::kTrajectoryNoise);
  const double a12 = p.dt;
  const double a21 = -p.dt * p.b;
  const double a22 = 1.0 - p.dt * p.a;
  const double b2 = p.dt * p.b;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto [z, v] = traj.states.back();
    const double eps = p.eps_half_width > 0.0 ? noise.uniform(-p.eps_half_width, p.eps_half_width) : 0.0;
    traj.states.push_back({z + a12 * v, a21 * z + a22 * v + b2 * (traj.reference[k] + eps)});
  }
  return traj;
}

Vector ls_estimate(const Trajectory& traj, double dt) {
  require(dt > 0.0, "ls_estimate: dt must be positive");
  require(traj.states.size() >= 3 && traj.reference.size() >= traj.states.size() - 1,
          "ls_estimate: need at least two transitions");
  // Normal equations for y_k = phi_k . (a, b) with phi_k = (-v_k, r_k - z_k).
  double g11 = 0.0, g12 = 0.0, g22 = 0.0, h1 = 0.0, h2 = 0.0;
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    const auto [z, v] = traj.states[k];
    const double y = (traj.states[k + 1][1] - v) / dt;
    const double p1 = -v;
    const double p2 = traj.reference[k] - z;
    g11 += p1 * p1;
    g12 += p1 * p2;
    g22 += p2 * p2;
    h1 += p1 * y;
    h2 += p2 * y;
  }
  const double det = g11 * g22 - g12 * g12;
  const double scale = g11 + g22;
  if (!(scale > 0.0) || !(det > 1e-12 * scale * scale))
    fail(ErrorKind::kNumerical,
         "ls_estimate: rank-deficient regressor; use a longer trajectory or one that leaves equilibrium");
  Vector ab(2);
  ab << (g22 * h1 - g12 * h2) / det, (g11 * h2 - g12 * h1) / det;
  return ab;
}

Vector degrade(const DegradationModel& d, double t) {
  Vector lambda(2);
  lambda << d.lambda1, d.lambda2;
  return degrade(d, lambda, t);
}

Vector degrade(const DegradationModel& d, const Vector& lambda, double t) {
  require(t >= 0.0, "degrade: time must be nonnegative");
  Vector y(2);
  y << d.a0 - lambda[0] * t, d.b0 + lambda[1] * t;
  return y;
}

double damping_ratio(const Vector& y) {
  require(y.size() == 2, "damping_ratio: expects (a, b)");
  if (!(y[1] > 0.0)) fail(ErrorKind::kInvalidArgument, "damping_ratio: undefined ratio, b must be positive");
  return y[0] / (2.0 * std::sqrt(y[1]));
}

double damping_ratio_floored(double a, double b) { return a / (2.0 * std::sqrt(std::max(b, 1e-12))); }

namespace {

constexpr double kScanStep = 0.25;        // days
constexpr double kScanLimit = 100000.0;   // days
constexpr double kBracketLimit = 1.0e6;   // days

template <class Safe>
CrossingTime bisect(Safe&& safe, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (safe(mid) ? lo : hi) = mid;
  }
  return {lo, false, false};
}

// First crossing of a criterion that need not be monotone: scan, then bisect
// inside the first failing cell.
template <class Safe>
CrossingTime first_crossing(Safe&& safe, double tol) {
  if (!safe(0.0)) return {0.0, false, true};
  for (double t = kScanStep; t <= kScanLimit; t += kScanStep) {
    if (!safe(t)) return bisect(safe, t - kScanStep, t, tol);
  }
  return {std::numeric_limits<double>::infinity(), true, false};
}

// Crossing of a criterion that is nonincreasing in t: doubling bracket, then bisection.
template <class Safe>
CrossingTime monotone_crossing(Safe&& safe, double tol) {
  if (!safe(0.0)) return {0.0, false, true};
  double lo = 0.0, hi = 1.0;
  while (safe(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > kBracketLimit) return {std::numeric_limits<double>::infinity(), true, false};
  }
  return bisect(safe, lo, hi, tol);
}

}  // namespace

CrossingTime maintenance_time_for(const DegradationModel& d, const Vector& lambda, double tolerance) {
  require(lambda.size() == 2, "maintenance_time: expects two decay rates");
  if (lambda[0] == 0.0 && lambda[1] == 0.0) {
    if (damping_ratio_floored(d.a0, d.b0) < d.zeta_min) return {0.0, false, true};
    return {std::numeric_limits<double>::infinity(), true, false};
  }
  auto safe = [&](double t) {
    return damping_ratio_floored(d.a0 - lambda[0] * t, d.b0 + lambda[1] * t) >= d.zeta_min;
  };
  return first_crossing(safe, tolerance);
}

CrossingTime true_maintenance_time(const DegradationModel& d) {
  Vector lambda(2);
  lambda << d.lambda1, d.lambda2;
  return maintenance_time_for(d, lambda, 1e-6);
}

Matrix DifferencedStream::w() const {
  Matrix w = Matrix::Zero(2, 2);
  w(0, 0) = -period;
  w(1, 1) = period;
  return w;
}

DifferencedStream difference_stream(std::span<const Observation> obs) {
  require(obs.size() >= 2, "difference_stream: need at least two observations");
  DifferencedStream out;
  out.period = obs[1].t - obs[0].t;
  if (!(out.period > 0.0)) fail(ErrorKind::kData, "difference_stream: timestamps must be strictly increasing");
  for (std::size_t k = 0; k + 1 < obs.size(); ++k) {
    const double gap = obs[k + 1].t - obs[k].t;
    if (std::abs(gap - out.period) > 1e-9) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "difference_stream: irregular spacing between t=" << obs[k].t << " and t=" << obs[k + 1].t << " (gap "
          << gap << ", expected " << out.period << ")";
      fail(ErrorKind::kData, msg.str());
    }
    if (obs[k].y_hat.size() != 2 || obs[k + 1].y_hat.size() != 2)
      fail(ErrorKind::kData, "difference_stream: observations must be (a_hat, b_hat)");
    out.increments.push_back(obs[k + 1].y_hat - obs[k].y_hat);
  }
  return out;
}

namespace {

std::vector<double> ratios_at(const ParticleMeasure& m, const DegradationModel& d, double t) {
  std::vector<double> z(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto p = m.point(i);
    z[i] = damping_ratio_floored(d.a0 - p[0] * t, d.b0 + p[1] * t);
  }
  return z;
}

}  // namespace

std::vector<BandRow> predict_damping_band(const ParticleMeasure& m, const DegradationModel& d,
                                          std::span<const double> t_grid, double p_lo, double p_hi) {
  require(m.dim() == 2, "predict_damping_band: belief must be over (lambda1, lambda2)");
  std::vector<BandRow> rows;
  rows.reserve(t_grid.size());
  for (double t : t_grid) {
    require(t >= 0.0, "predict_damping_band: times must be nonnegative");
    auto z = ratios_at(m, d, t);
    double total = 0.0;
    for (double v : z) total += v;
    const double avg = total / static_cast<double>(z.size());
    const double lo = nearest_rank(z, p_lo);
    const double hi = nearest_rank(std::move(z), p_hi);
    rows.push_back({t, lo, avg, hi});
  }
  return rows;
}

CrossingTime suggested_maintenance_time(const ParticleMeasure& m, const DegradationModel& d, MaintenanceRule rule) {
  require(m.dim() == 2, "suggested_maintenance_time: belief must be over (lambda1, lambda2)");
  switch (rule.kind) {
    case MaintenanceRule::Kind::kPercentile: {
      require(rule.level >= 0.0 && rule.level <= 1.0, "percentile rule: p must lie in [0, 1]");
      return monotone_crossing([&](double t) { return nearest_rank(ratios_at(m, d, t), rule.level) >= d.zeta_min; },
                               1e-3);
    }
    case MaintenanceRule::Kind::kMean: {
      const Vector mu = mean(m);
      return monotone_crossing(
          [&](double t) { return damping_ratio_floored(d.a0 - mu[0] * t, d.b0 + mu[1] * t) >= d.zeta_min; }, 1e-3);
    }
    case MaintenanceRule::Kind::kChance: {
      require(rule.level >= 0.0 && rule.level < 1.0, "chance rule: alpha must lie in [0, 1)");
      const double needed = (1.0 - rule.level) * static_cast<double>(m.size());
      return monotone_crossing(
          [&](double t) {
            const auto z = ratios_at(m, d, t);
            const auto ok = std::count_if(z.begin(), z.end(), [&](double v) { return v >= d.zeta_min; });
            return static_cast<double>(ok) >= needed - 1e-9;
          },
          1e-3);
    }
  }
  fail(ErrorKind::kInvalidArgument, "suggested_maintenance_time: unknown rule");
}

LsBaseline ls_baseline(std::span<const Observation> obs, double a0, double b0, const DegradationModel& d) {
  require(obs.size() >= 2, "ls_baseline: need at least two observations");
  double tt = 0.0, ta = 0.0, tb = 0.0;
  for (const auto& o : obs) {
    tt += o.t * o.t;
    ta += o.t * (a0 - o.y_hat[0]);
    tb += o.t * (o.y_hat[1] - b0);
  }
  if (!(tt > 0.0)) fail(ErrorKind::kNumerical, "ls_baseline: rank-deficient, all observation times are zero");
  LsBaseline out;
  out.lambda_hat = Vector(2);
  out.lambda_hat << ta / tt, tb / tt;
  out.negative_component = (out.lambda_hat.array() < 0.0).any();
  DegradationModel model = d;
  model.a0 = a0;
  model.b0 = b0;
  out.t_star = maintenance_time_for(model, out.lambda_hat, 1e-6);
  return out;
}

double CaseConfig::effective_tau() const {
  if (tau) return *tau;
  return 0.5 / (2.0 * std::max(model.period * model.period, rho));
}

std::vector<Observation> simulate_observations(const CaseConfig& cfg) {
  cfg.model.validate();
  require(cfg.last_day >= cfg.model.period, "case: need at least two observation days");
  std::vector<Observation> obs;
  const auto days = static_cast<std::size_t>(std::floor(cfg.last_day / cfg.model.period + 1e-9));
  for (std::size_t j = 0; j <= days; ++j) {
    const double t = static_cast<double>(j) * cfg.model.period;
    const Vector y = degrade(cfg.model, t);
    PlantParams plant = cfg.plant;
    plant.a = y[0];
    plant.b = y[1];
    const std::uint64_t traj_seed = CounterRng(cfg.seed, StreamPurpose::kObservationNoise, j).next_u64();
    obs.push_back({t, ls_estimate(simulate_trajectory(plant, cfg.x0, traj_seed), plant.dt)});
  }
  return obs;
}

CaseResult run_case(const CaseConfig& cfg) { return run_case_on(cfg, simulate_observations(cfg)); }

CaseResult run_case_on(const CaseConfig& cfg, std::vector<Observation> observations) {
  cfg.model.validate();
  const DifferencedStream stream = difference_stream(observations);
  Vector theta_star(2);
  theta_star << cfg.model.lambda1, cfg.model.lambda2;
  const Matrix w = stream.w();

  Vector raw_noise = Vector::Zero(2);
  for (const auto& o : observations) raw_noise += o.y_hat - degrade(cfg.model, o.t);
  raw_noise /= static_cast<double>(observations.size());
  double m2 = 0.0;
  for (const auto& inc : stream.increments) m2 += (inc - w * theta_star).squaredNorm();
  m2 /= static_cast<double>(stream.increments.size());

  StreamingLSObjective obj(w, cfg.rho, theta_star, m2);
  FlowConfig flow;
  flow.tau = cfg.effective_tau();
  flow.max_iters = stream.increments.size();
  flow.seed = cfg.seed;
  flow.perturb_std = cfg.perturb_std;
  flow.constraint = ConvexSet::nonneg_orthant(2);
  flow.workers = cfg.workers;
  FlowRunner runner(init_uniform_box(cfg.init_lo, cfg.init_hi, cfg.particles, cfg.seed), obj, flow,
                    ParticleMeasure::dirac(theta_star));

  const CrossingTime truth = true_maintenance_time(cfg.model);
  CaseResult result{observations, {}, runner.current(), {}, raw_noise, m2};
  for (std::size_t k = 0; k < stream.increments.size(); ++k) {
    runner.advance(stream.increments[k]);
    const auto seen = std::span<const Observation>(observations).first(k + 2);
    DayRow row;
    row.day = observations[k + 1].t;
    row.ours = suggested_maintenance_time(runner.current(), cfg.model, cfg.rule).t;
    row.ls = ls_baseline(seen, cfg.model.a0, cfg.model.b0, cfg.model).t_star.t;
    row.truth = truth.t;
    row.mean_lambda = mean(runner.current());
    result.days.push_back(std::move(row));
  }
  runner.finish();
  result.final_particles = runner.current();
  result.trace = runner.trace();
  return result;
}

}  // namespace swgf::pdm
