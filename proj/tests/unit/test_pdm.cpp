#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "swgf/error.hpp"
#include "swgf/pdm.hpp"
#include "swgf/rng.hpp"

namespace swgf::pdm {
namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

PlantParams noise_free(double a, double b) {
  PlantParams p;
  p.a = a;
  p.b = b;
  p.eps_half_width = 0.0;
  return p;
}

// Reference crossing: bisection on 2.5 - t/30 = 0.8 sqrt(1 + t/12) written
// independently of the library.
double crossing_oracle() {
  auto f = [](double t) { return (2.5 - t / 30.0) - 0.8 * std::sqrt(1.0 + t / 12.0); };
  double lo = 0.0, hi = 60.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return lo;
}

TEST(Plant, StabilityCheck) {
  PlantParams p;
  EXPECT_LT(p.spectral_radius(), 1.0);
  EXPECT_NO_THROW(p.validate());
  p.dt = 1.5;
  try {
    p.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("spectral radius"), std::string::npos);
  }
  PlantParams neg;
  neg.a = -1.0;
  EXPECT_THROW(neg.validate(), Error);
}

TEST(Plant, SimulationExamples) {
  PlantParams p = noise_free(2.5, 1.0);
  const auto eq = simulate_trajectory(p, {p.r, 0.0}, 1);
  EXPECT_EQ(eq.states.size(), 100001u);
  for (const auto& s : eq.states) {
    ASSERT_EQ(s[0], p.r);
    ASSERT_EQ(s[1], 0.0);
  }
  const auto one = simulate_trajectory(p, {0.0, 0.0}, 1);
  EXPECT_EQ(one.states[1][0], 0.0);
  EXPECT_DOUBLE_EQ(one.states[1][1], 0.001);
  EXPECT_LT(std::abs(one.states.back()[0] - p.r), 1e-3);
}

TEST(Plant, SimulationDeterministicAndNoiseBounded) {
  PlantParams p;
  const auto a = simulate_trajectory(p, {0.0, 0.0}, 5);
  const auto b = simulate_trajectory(p, {0.0, 0.0}, 5);
  EXPECT_EQ(a.states, b.states);
  EXPECT_NE(simulate_trajectory(p, {0.0, 0.0}, 6).states, a.states);
  // The noise can be read back from the velocity row and must stay in [-w, w].
  for (std::size_t k = 0; k + 1 < a.states.size(); k += 997) {
    const auto [z, v] = a.states[k];
    const double eps = (a.states[k + 1][1] - (-p.dt * p.b) * z - (1 - p.dt * p.a) * v) / (p.dt * p.b) - p.r;
    ASSERT_LE(std::abs(eps), p.eps_half_width + 1e-6);
  }
}

TEST(LsEstimate, NoiseFreeRecovery) {
  for (auto [a, b] : {std::pair{2.5, 1.0}, std::pair{1.5, 3.5}}) {
    const auto traj = simulate_trajectory(noise_free(a, b), {0.0, 0.0}, 0);
    const Vector est = ls_estimate(traj, 0.001);
    EXPECT_NEAR(est[0], a, 1e-8);
    EXPECT_NEAR(est[1], b, 1e-8);
  }
}

TEST(LsEstimate, RankDeficient) {
  PlantParams p = noise_free(2.5, 1.0);
  const auto traj = simulate_trajectory(p, {p.r, 0.0}, 0);
  try {
    ls_estimate(traj, p.dt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("longer"), std::string::npos);
  }
  Trajectory tiny{{{0.0, 0.0}, {0.0, 0.001}}, {1.0, 1.0}};
  EXPECT_THROW(ls_estimate(tiny, 0.001), Error);
}

TEST(LsEstimate, ErrorShrinksWithNoise) {
  double prev = INFINITY;
  for (double width : {3.0, 0.3, 0.03}) {
    std::vector<double> errs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      PlantParams p;
      p.eps_half_width = width;
      p.horizon = 20.0;
      errs.push_back((ls_estimate(simulate_trajectory(p, {0.0, 0.0}, seed), p.dt) - v2(2.5, 1.0)).norm());
    }
    std::nth_element(errs.begin(), errs.begin() + 10, errs.end());
    EXPECT_LT(errs[10], prev);
    prev = errs[10];
  }
}

TEST(Degradation, Examples) {
  const DegradationModel d;
  EXPECT_EQ(degrade(d, 0.0), v2(2.5, 1.0));
  const Vector y30 = degrade(d, 30.0);
  EXPECT_NEAR(y30[0], 1.5, 1e-14);
  EXPECT_NEAR(y30[1], 3.5, 1e-14);
  const Vector y60 = degrade(d, 60.0);
  EXPECT_NEAR(y60[0], 0.5, 1e-14);
  EXPECT_NEAR(y60[1], 6.0, 1e-14);
  EXPECT_EQ(damping_ratio(degrade(d, 0.0)), 1.25);
  EXPECT_NEAR(damping_ratio(y30), 0.4009, 1e-4);
  EXPECT_NEAR(damping_ratio(y60), 0.102, 1e-3);
  EXPECT_THROW(damping_ratio(v2(1.0, 0.0)), Error);
  EXPECT_THROW(degrade(d, -1.0), Error);
  for (double b : {0.3, 1.0, 7.0})
    for (double c : {-0.5, 0.4, 2.0}) EXPECT_NEAR(damping_ratio(v2(2 * std::sqrt(b) * c, b)), c, 1e-15);
}

TEST(Degradation, RatioStrictlyDecreasing) {
  const DegradationModel d;
  const double tstar = true_maintenance_time(d).t;
  double prev = INFINITY;
  for (double t = 0.0; t <= tstar + 10.0; t += 0.01) {
    const double z = damping_ratio(degrade(d, t));
    ASSERT_LT(z, prev);
    prev = z;
  }
}

TEST(MaintenanceTime, Examples) {
  DegradationModel d;
  const auto t = true_maintenance_time(d);
  EXPECT_NEAR(t.t, 30.05, 0.1);
  EXPECT_NEAR(t.t, crossing_oracle(), 1e-6);
  EXPECT_FALSE(t.infinite);

  DegradationModel edge = d;
  edge.zeta_min = 1.25;
  EXPECT_EQ(true_maintenance_time(edge).t, 0.0);

  DegradationModel flat = d;
  flat.lambda1 = flat.lambda2 = 0.0;
  const auto inf = true_maintenance_time(flat);
  EXPECT_TRUE(inf.infinite);
  EXPECT_TRUE(std::isinf(inf.t));
}

TEST(DifferenceStream, Examples) {
  const DegradationModel d;
  std::vector<Observation> obs;
  for (int k = 0; k < 3; ++k) obs.push_back({5.0 * k, degrade(d, 5.0 * k)});
  const auto s = difference_stream(obs);
  ASSERT_EQ(s.increments.size(), 2u);
  const Vector theta = v2(d.lambda1, d.lambda2);
  for (const auto& inc : s.increments) {
    EXPECT_NEAR(inc[0], -1.0 / 6.0, 1e-14);
    EXPECT_NEAR(inc[1], 5.0 / 12.0, 1e-14);
    EXPECT_LE((inc - s.w() * theta).norm(), 1e-14);
  }
  EXPECT_EQ(difference_stream(std::span(obs).first(2)).increments.size(), 1u);
  obs[2].t = 11.0;
  try {
    difference_stream(obs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    EXPECT_NE(std::string(e.what()).find("gap"), std::string::npos);
  }
}

ParticleMeasure straddle(const Vector& center, double offset, std::size_t copies = 1) {
  std::vector<double> c;
  for (std::size_t i = 0; i < copies; ++i) {
    for (double s : {-1.0, 1.0}) {
      c.push_back(center[0] + s * offset * center[0]);
      c.push_back(center[1] + s * offset * center[1]);
    }
  }
  return ParticleMeasure(2, c);
}

TEST(Band, Examples) {
  const DegradationModel d;
  const Vector truth = v2(d.lambda1, d.lambda2);
  const std::vector<double> grid = {0.0, 10.0, 30.0, 60.0};
  for (const auto& row : predict_damping_band(ParticleMeasure::dirac(truth, 5), d, grid, 0.1, 0.9)) {
    const double z = damping_ratio(degrade(d, row.t));
    EXPECT_NEAR(row.lo, z, 1e-14);
    EXPECT_NEAR(row.mean, z, 1e-14);
    EXPECT_NEAR(row.hi, z, 1e-14);
  }
  const auto m = init_uniform_box(Vector::Zero(2), Vector::Constant(2, 8.0 / 60), 300, 3);
  const auto rows = predict_damping_band(m, d, grid, 0.1, 0.9);
  EXPECT_EQ(rows[0].lo, 1.25);
  EXPECT_EQ(rows[0].hi, 1.25);
  EXPECT_DOUBLE_EQ(rows[0].mean, 1.25);

  const Vector mu = mean(m);
  const auto tight = pushforward(m, [&](const Vector& x) { return Vector(mu + 0.5 * (x - mu)); });
  const auto tight_rows = predict_damping_band(tight, d, grid, 0.1, 0.9);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    EXPECT_LE(rows[i].lo, rows[i].mean);
    EXPECT_LE(rows[i].mean, rows[i].hi);
    EXPECT_LT(tight_rows[i].hi - tight_rows[i].lo, rows[i].hi - rows[i].lo);
  }
}

TEST(SuggestedTime, DiracCollapsesToTruth) {
  const DegradationModel d;
  const double tstar = true_maintenance_time(d).t;
  const auto dirac = ParticleMeasure::dirac(v2(d.lambda1, d.lambda2), 3);
  for (auto rule : {MaintenanceRule::percentile(0.1), MaintenanceRule::mean(), MaintenanceRule::chance(0.1)})
    EXPECT_NEAR(suggested_maintenance_time(dirac, d, rule).t, tstar, 1e-3);
}

TEST(SuggestedTime, OrderingOnUniformClouds) {
  const DegradationModel d;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = init_uniform_box(Vector::Zero(2), Vector::Constant(2, 8.0 / 60), 200, seed);
    const double lo = suggested_maintenance_time(m, d, MaintenanceRule::percentile(0.1)).t;
    const double mid = suggested_maintenance_time(m, d, MaintenanceRule::mean()).t;
    const double hi = suggested_maintenance_time(m, d, MaintenanceRule::percentile(0.9)).t;
    EXPECT_LE(lo, mid + 1e-3);
    EXPECT_LE(mid, hi + 1e-3);
  }
}

TEST(SuggestedTime, QuantileOrderingCanFailForSkewedClouds) {
  // 95% of the mass at no decay and 5% far out: the mean parameter decays
  // fast enough to cross before the 90% percentile does.
  std::vector<double> c;
  for (int i = 0; i < 95; ++i) c.insert(c.end(), {0.0, 0.0});
  for (int i = 0; i < 5; ++i) c.insert(c.end(), {10.0, 10.0});
  const ParticleMeasure m(2, c);
  const DegradationModel d;
  const auto p90 = suggested_maintenance_time(m, d, MaintenanceRule::percentile(0.9));
  const auto mid = suggested_maintenance_time(m, d, MaintenanceRule::mean());
  EXPECT_TRUE(p90.infinite);
  EXPECT_FALSE(mid.infinite);
}

TEST(SuggestedTime, ChanceBetweenSingleParticleAnswers) {
  const DegradationModel d;
  const Vector truth = v2(d.lambda1, d.lambda2);
  const auto pair = straddle(truth, 0.3);
  auto single = [&](std::size_t i) {
    return maintenance_time_for(d, pair.point_vector(i)).t;
  };
  const double a = std::min(single(0), single(1)), b = std::max(single(0), single(1));
  const double t = suggested_maintenance_time(pair, d, MaintenanceRule::chance(0.5)).t;
  EXPECT_GE(t, a - 1e-3);
  EXPECT_LE(t, b + 1e-3);
}

TEST(SuggestedTime, ConservativeCollapse) {
  const DegradationModel d;
  const Vector truth = v2(d.lambda1, d.lambda2);
  const double tstar = true_maintenance_time(d).t;
  double prev = -1.0;
  for (double scale : {1.0, 0.1, 0.01}) {
    const double t = suggested_maintenance_time(straddle(truth, 0.2 * scale, 10), d, MaintenanceRule::percentile(0.1)).t;
    EXPECT_LE(t, tstar + 1e-3);
    EXPECT_GT(t, prev);
    prev = t;
  }
  EXPECT_NEAR(prev, tstar, 0.1);
}

TEST(SuggestedTime, UnsafeAtStart) {
  DegradationModel d;
  d.zeta_min = 1.3;
  const auto r = suggested_maintenance_time(ParticleMeasure::dirac(v2(0.1, 0.1)), d, MaintenanceRule::mean());
  EXPECT_EQ(r.t, 0.0);
  EXPECT_TRUE(r.unsafe_at_start);
}

TEST(LsBaseline, ExactOnNoiseFreeData) {
  const DegradationModel d;
  std::vector<Observation> obs;
  for (int k = 0; k < 5; ++k) obs.push_back({5.0 * k, degrade(d, 5.0 * k)});
  const auto r = ls_baseline(obs, d.a0, d.b0, d);
  EXPECT_NEAR(r.lambda_hat[0], d.lambda1, 1e-14);
  EXPECT_NEAR(r.lambda_hat[1], d.lambda2, 1e-14);
  EXPECT_NEAR(r.t_star.t, true_maintenance_time(d).t, 1e-5);
  const auto pair = ls_baseline(std::span(obs).subspan(1, 2), d.a0, d.b0, d);
  EXPECT_NEAR(pair.lambda_hat[0], d.lambda1, 1e-14);
  EXPECT_FALSE(pair.negative_component);
}

TEST(LsBaseline, NegativeSlopeIsKeptAndFlagged) {
  const DegradationModel d;
  // Noisy day-5 estimate that makes b look like it decreased.
  std::vector<Observation> obs = {{0.0, v2(2.5, 1.0)}, {5.0, v2(2.2, 0.9)}};
  const auto r = ls_baseline(obs, d.a0, d.b0, d);
  EXPECT_TRUE(r.negative_component);
  EXPECT_NEAR(r.lambda_hat[1], -0.02, 1e-15);
  EXPECT_GT(r.t_star.t, 0.0);
  std::vector<Observation> zero = {{0.0, v2(2.5, 1.0)}, {0.0, v2(2.4, 1.1)}};
  EXPECT_THROW(ls_baseline(zero, d.a0, d.b0, d), Error);
}

TEST(Case, DeterministicAndShaped) {
  CaseConfig cfg;
  cfg.particles = 200;
  cfg.seed = 4;
  const auto a = run_case(cfg);
  EXPECT_EQ(a.observations.size(), 10u);
  EXPECT_EQ(a.days.size(), 9u);
  EXPECT_EQ(a.days.front().day, 5.0);
  EXPECT_EQ(a.days.back().day, 45.0);
  for (double v : a.final_particles.coords()) EXPECT_GE(v, 0.0);
  cfg.workers = 3;
  const auto b = run_case(cfg);
  EXPECT_EQ(a.final_particles, b.final_particles);
  for (std::size_t i = 0; i < a.days.size(); ++i) EXPECT_EQ(a.days[i].ours, b.days[i].ours);
}

TEST(Case, NoiseFreeObservationsConverge) {
  CaseConfig cfg;
  cfg.particles = 100;
  cfg.perturb_std = 0.0;
  std::vector<Observation> obs;
  for (int k = 0; k <= 80; ++k) obs.push_back({5.0 * k, degrade(cfg.model, 5.0 * k)});
  const auto r = run_case_on(cfg, obs);
  EXPECT_LE((mean(r.final_particles) - v2(cfg.model.lambda1, cfg.model.lambda2)).norm(), 1e-4);
  EXPECT_EQ(r.increment_noise_m2 < 1e-25, true);
}

}  // namespace
}  // namespace swgf::pdm
