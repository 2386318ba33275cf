#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "swgf/error.hpp"
#include "swgf/flow.hpp"
#include "swgf/rng.hpp"
#include "swgf/transport.hpp"

namespace swgf {
namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Matrix preset_w() {
  Matrix w = Matrix::Zero(2, 2);
  w(0, 0) = -5;
  w(1, 1) = 5;
  return w;
}

const Vector kThetaStar = v2(2.0 / 60, 5.0 / 60);

double w2_to_dirac(const ParticleMeasure& m, const Vector& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += (m.point_vector(i) - x).squaredNorm();
  return std::sqrt(s / static_cast<double>(m.size()));
}

TEST(ValidateTau, Examples) {
  const auto r = validate_tau(Matrix::Identity(2, 2), 1.0, 1.0, 0.1);
  EXPECT_DOUBLE_EQ(r.alpha, 1.0);
  EXPECT_DOUBLE_EQ(r.c, 4.0);
  EXPECT_DOUBLE_EQ(r.tau_max, 0.5);
  EXPECT_DOUBLE_EQ(r.eta, 4.0);
  EXPECT_NEAR(r.ball_radius, std::sqrt(0.4), 1e-15);
  EXPECT_NEAR(r.ball_radius, 0.6325, 1e-4);
  EXPECT_TRUE(r.tau_valid);
  EXPECT_FALSE(validate_tau(Matrix::Identity(2, 2), 1.0, 1.0, 0.5).tau_valid);
  EXPECT_FALSE(validate_tau(Matrix::Identity(2, 2), 1.0, 1.0, 0.0).tau_valid);

  const auto p = validate_tau(preset_w(), 0.1, 0.0, 0.01);
  EXPECT_DOUBLE_EQ(p.alpha, 25.0);
  EXPECT_DOUBLE_EQ(p.c, 100.0);
  EXPECT_DOUBLE_EQ(p.tau_max, 0.02);
  EXPECT_DOUBLE_EQ(p.tau_cap_simple, 0.02);
  EXPECT_DOUBLE_EQ(p.per_step_rate, 0.75);

  Matrix singular = Matrix::Identity(2, 2);
  singular(1, 1) = 0.0;
  try {
    validate_tau(singular, 0.1, 0.0, 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
  }
}

TEST(ConvergenceBound, Examples) {
  StepBoundReport r;
  r.alpha = 1.0;
  r.tau = 0.1;
  r.sigma2 = 4.0;
  EXPECT_EQ(convergence_bound(r, 1.7, 0), 1.7 * 1.7);
  EXPECT_NEAR(convergence_bound(r, 1.0, 1), 0.94, 1e-15);
  EXPECT_NEAR(convergence_bound(r, 1.0, 100000), 0.4, 1e-12);
  double prev = convergence_bound(r, 1.0, 0);
  for (std::size_t k = 1; k < 50; ++k) {
    const double b = convergence_bound(r, 1.0, k);
    EXPECT_LE(b, prev);
    prev = b;
  }
  prev = convergence_bound(r, 0.1, 0);
  for (std::size_t k = 1; k < 50; ++k) {
    const double b = convergence_bound(r, 0.1, k);
    EXPECT_GE(b, prev);
    prev = b;
  }
}

TEST(Step, Examples) {
  const ParticleMeasure m(2, {-1, 2, 0.5, -0.5});
  const auto orthant = ConvexSet::nonneg_orthant(2);
  const std::vector<double> zero(4, 0.0);
  EXPECT_EQ(step(m, zero, 0.3, orthant), project_measure(orthant, m));

  const ParticleMeasure x(2, {0.1, 0.1});
  EXPECT_EQ(step(x, std::vector<double>{1.0, 0.0}, 0.5, orthant), ParticleMeasure(2, {0.0, 0.1}));

  Vector theta = v2(1.0, -2.0);
  const Vector target = v2(0.25, 0.5);
  for (int k = 0; k < 10; ++k) {
    const ParticleMeasure d = ParticleMeasure::dirac(theta);
    const Vector g = theta - target;
    const Vector expected = theta - 0.2 * g;
    theta = step(d, std::vector<double>(g.data(), g.data() + 2), 0.2, ConvexSet::whole(2)).point_vector(0);
    EXPECT_EQ(theta, expected);
  }
  EXPECT_THROW(step(m, std::vector<double>(3, 0.0), 0.1, orthant), Error);
}

TEST(LipschitzGap, Examples) {
  CounterRng rng(1, StreamPurpose::kTest);
  auto norm = [](const Vector& x) { return x.norm(); };
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> a(40), b(40);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal() + 0.1 * trial;
    const ParticleMeasure ma(2, a), mb(2, b);
    EXPECT_EQ(lipschitz_norm_gap(ma, ma, norm, 1.0), 0.0);
    EXPECT_EQ(lipschitz_norm_gap(ma, mb, [](const Vector&) { return -3.0; }, 1.0), 0.0);
    EXPECT_LE(lipschitz_norm_gap(ma, mb, norm, 1.0), w2_exact(ma, mb).distance + 1e-8);
  }
}

FlowConfig preset_config() {
  FlowConfig cfg;
  cfg.tau = 0.01;
  cfg.max_iters = 200;
  cfg.constraint = ConvexSet::nonneg_orthant(2);
  cfg.diag_subsample = 64;
  return cfg;
}

TEST(Run, EmptyStream) {
  const auto m0 = init_uniform_box(Vector::Zero(2), Vector::Constant(2, 0.2), 32, 1);
  const StreamingLSObjective obj(preset_w(), 0.1, kThetaStar, 0.0);
  const auto r = run(m0, obj, {}, preset_config());
  EXPECT_EQ(r.final, m0);
  EXPECT_TRUE(r.trace.rows.empty());
}

TEST(Run, NoiseFreeContractionEveryStep) {
  const auto m0 = init_uniform_box(Vector::Zero(2), Vector::Constant(2, 8.0 / 60), 128, 2);
  const StreamingLSObjective obj(preset_w(), 0.1, kThetaStar, 0.0);
  FlowConfig cfg = preset_config();
  FlowRunner runner(m0, obj, cfg, ParticleMeasure::dirac(kThetaStar));
  const Vector y = preset_w() * kThetaStar;
  const double rate = runner.bounds().per_step_rate;
  const double w0 = w2_to_dirac(m0, kThetaStar);
  for (std::size_t k = 0; k < 40; ++k) {
    const double before = w2_to_dirac(runner.current(), kThetaStar);
    runner.advance(y);
    const double after = w2_to_dirac(runner.current(), kThetaStar);
    ASSERT_LE(after, std::sqrt(rate) * before * (1 + 1e-8) + 1e-300) << "k=" << k;
    ASSERT_LE(after * after, convergence_bound(runner.bounds(), w0, k + 1) + 1e-8);
    for (double v : runner.current().coords()) ASSERT_GE(v, 0.0);
  }
  EXPECT_LT(w2_to_dirac(runner.current(), kThetaStar), 1e-6);
}

TEST(Run, TraceRowsAndCsv) {
  const auto m0 = init_uniform_box(Vector::Zero(2), Vector::Constant(2, 0.2), 50, 3);
  const StreamingLSObjective obj(preset_w(), 0.1, kThetaStar, 0.0);
  FlowConfig cfg = preset_config();
  cfg.diag_every = 3;
  cfg.max_iters = 10;
  const std::vector<Vector> stream(12, preset_w() * kThetaStar);
  const auto r = run(m0, obj, stream, cfg, ParticleMeasure::dirac(kThetaStar));
  std::vector<std::size_t> ks;
  for (const auto& row : r.trace.rows) ks.push_back(row.k);
  EXPECT_EQ(ks, (std::vector<std::size_t>{0, 3, 6, 9, 10}));
  EXPECT_TRUE(r.trace.rows.front().grad_norm.has_value());
  EXPECT_FALSE(r.trace.rows.back().grad_norm.has_value());
  EXPECT_EQ(r.trace.iterations, 10u);
  std::ostringstream csv;
  write_trace_csv(csv, r.trace, 2);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "k,objective,w2_ref,mean_1,mean_2,grad_norm");
  EXPECT_NE(csv.str().find(",\n"), std::string::npos);  // final row has an empty grad_norm

  const auto short_run = run(m0, obj, std::span(stream).first(4), cfg);
  EXPECT_EQ(short_run.trace.iterations, 4u);
  ASSERT_FALSE(short_run.trace.notes.empty());
  EXPECT_NE(short_run.trace.notes.back().find("exhausted"), std::string::npos);
  EXPECT_FALSE(short_run.trace.rows.front().w2_ref.has_value());
}

TEST(Run, RefusesUnsafeTauUnlessAllowed) {
  const auto m0 = init_uniform_box(Vector::Zero(2), Vector::Constant(2, 0.2), 10, 3);
  const StreamingLSObjective obj(preset_w(), 0.1, kThetaStar, 0.0);
  FlowConfig cfg = preset_config();
  cfg.tau = 0.02;
  try {
    FlowRunner runner(m0, obj, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnsafeStep);
  }
  cfg.allow_unsafe_tau = true;
  EXPECT_NO_THROW(FlowRunner(m0, obj, cfg));
}

TEST(Run, InvalidObservationPolicy) {
  const auto m0 = init_uniform_box(Vector::Zero(2), Vector::Constant(2, 0.2), 10, 3);
  const StreamingLSObjective obj(preset_w(), 0.1, kThetaStar, 0.0);
  FlowConfig cfg = preset_config();
  std::vector<Vector> stream(3, preset_w() * kThetaStar);
  stream[1][0] = NAN;
  try {
    run(m0, obj, stream, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
  cfg.on_invalid = InvalidObservationPolicy::kSkip;
  const auto r = run(m0, obj, stream, cfg);
  EXPECT_EQ(r.trace.skipped, 1u);
  EXPECT_EQ(r.trace.iterations, 2u);
}

TEST(Run, DeterministicAcrossWorkersWithPerturbation) {
  const auto m0 = init_uniform_box(Vector::Zero(2), Vector::Constant(2, 8.0 / 60), 1000, 4);
  const StreamingLSObjective obj(preset_w(), 0.1, kThetaStar, 0.0);
  CounterRng rng(5, StreamPurpose::kTest);
  std::vector<Vector> stream;
  for (int k = 0; k < 20; ++k) stream.push_back(preset_w() * kThetaStar + v2(0.2 * rng.normal(), 0.2 * rng.normal()));
  FlowConfig cfg = preset_config();
  cfg.perturb_std = 0.02;
  cfg.seed = 9;
  cfg.workers = 1;
  const auto a = run(m0, obj, stream, cfg);
  cfg.workers = 5;
  const auto b = run(m0, obj, stream, cfg);
  EXPECT_EQ(a.final, b.final);
  cfg.seed = 10;
  EXPECT_NE(run(m0, obj, stream, cfg).final, a.final);
}

TEST(Checkpoint, ResumeReproducesUninterruptedRun) {
  const auto m0 = init_uniform_box(Vector::Zero(2), Vector::Constant(2, 8.0 / 60), 200, 6);
  const StreamingLSObjective obj(preset_w(), 0.1, kThetaStar, 0.0);
  CounterRng rng(7, StreamPurpose::kTest);
  std::vector<Vector> stream;
  for (int k = 0; k < 12; ++k) stream.push_back(preset_w() * kThetaStar + v2(0.2 * rng.normal(), 0.2 * rng.normal()));
  FlowConfig cfg = preset_config();
  cfg.perturb_std = 0.02;
  cfg.seed = 3;

  FlowRunner full(m0, obj, cfg);
  for (const auto& y : stream) full.advance(y);

  FlowRunner first(m0, obj, cfg);
  for (int k = 0; k < 5; ++k) first.advance(stream[static_cast<std::size_t>(k)]);
  const auto dir = std::filesystem::temp_directory_path() / "swgf_ckpt_test";
  std::filesystem::create_directories(dir);
  write_checkpoint(dir / "cp", first.checkpoint());
  const Checkpoint cp = read_checkpoint(dir / "cp");
  EXPECT_EQ(cp.k, 5u);
  EXPECT_EQ(cp.particles, first.current());
  FlowRunner second = FlowRunner::resume(cp, obj, cfg);
  while (second.iteration() < stream.size()) second.advance(stream[second.iteration()]);
  EXPECT_EQ(second.current(), full.current());

  FlowConfig other = cfg;
  other.seed = 4;
  EXPECT_THROW(FlowRunner::resume(cp, obj, other), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace swgf
