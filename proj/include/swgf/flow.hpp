#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swgf/functionals.hpp"
#include "swgf/measures.hpp"
#include "swgf/sets.hpp"

namespace swgf {

enum class InvalidObservationPolicy { kAbort, kSkip };

struct FlowConfig {
  double tau = 0.01;
  std::size_t max_iters = 1000;
  std::uint64_t seed = 0;
  double perturb_std = 0.0;
  ConvexSet constraint = ConvexSet::whole(1);
  std::size_t diag_every = 1;
  /// Particles used for the W2-to-reference diagnostic; 0 means the whole
  /// cloud, values above N are clamped to N.
  std::size_t diag_subsample = 256;
  unsigned workers = 1;
  InvalidObservationPolicy on_invalid = InvalidObservationPolicy::kAbort;
  /// Run even if tau lies outside the convergence interval.
  bool allow_unsafe_tau = false;
};

/// Constants of the convergence analysis for the streaming objective.
struct StepBoundReport {
  double alpha = 0.0;          // geodesic convexity modulus sigma_min(W)^2
  double c = 0.0;              // 4 max(sigma_max(W)^2, rho)
  double sigma2 = 0.0;         // c * sigma_w2
  double eta = 0.0;            // c / alpha
  double tau_max = 0.0;        // min(1/alpha, 2/c)
  double tau_cap_simple = 0.0; // 1 / (2 max(sigma_max(W)^2, rho))
  double tau = 0.0;
  double ball_radius = 0.0;    // sqrt(sigma_w2) sqrt(eta tau) = sqrt(tau sigma2 / alpha)
  double per_step_rate = 0.0;  // 1 - alpha tau
  bool tau_valid = false;      // 0 < tau < tau_max
};

StepBoundReport validate_tau(const Matrix& w, double rho, double sigma_w2, double tau);
StepBoundReport validate_tau(const StreamingLSObjective& obj, double tau);

/// Right-hand side of the finite-time bound on E W2(mu_k, mu*)^2:
/// (1 - tau alpha)^k (w2_0^2 - tau sigma2 / alpha) + tau sigma2 / alpha.
double convergence_bound(const StepBoundReport& report, double w2_0, std::size_t k);

/// One particle update x_i -> proj_S(x_i - tau * field_i). field_values is
/// row-major N x d.
ParticleMeasure step(const ParticleMeasure& m, std::span<const double> field_values, double tau, const ConvexSet& set);

/// |(E_m phi^2)^1/2 - (E_ref phi^2)^1/2|; bounded by L * W2(m, ref) for
/// L-Lipschitz phi.
double lipschitz_norm_gap(const ParticleMeasure& m, const ParticleMeasure& ref, const ScalarMap& phi, double lipschitz);

struct FlowTraceRow {
  std::size_t k = 0;
  std::optional<double> objective;
  std::optional<double> w2_ref;
  Vector mean;
  double covariance_trace = 0.0;
  std::optional<double> grad_norm;  // sqrt((1/N) sum |xi_i|^2) of the step taken at k
};

struct FlowTrace {
  std::vector<FlowTraceRow> rows;
  std::size_t iterations = 0;  // steps actually taken
  std::size_t skipped = 0;     // invalid observations skipped
  std::vector<std::string> notes;
};

/// Trace CSV: k,objective,w2_ref,mean_1..mean_d,grad_norm (absent values empty).
void write_trace_csv(std::ostream& out, const FlowTrace& trace, std::size_t dim);

struct Checkpoint {
  ParticleMeasure particles;
  std::size_t k = 0;  // observations consumed so far
  std::uint64_t seed = 0;
};

/// Writes <stem>.csv (particle format) and <stem>.meta (key = value).
void write_checkpoint(const std::filesystem::path& stem, const Checkpoint& cp);
Checkpoint read_checkpoint(const std::filesystem::path& stem);

/// Incremental driver of the stochastic projected Wasserstein gradient flow:
/// each observation triggers mean freeze, per-particle stochastic gradient,
/// optional Gaussian perturbation and a projected step.
///
/// Per-particle randomness is keyed by (seed, iteration, particle), so the
/// cloud after k steps depends only on (m0, config, first k observations).
class FlowRunner {
 public:
  FlowRunner(ParticleMeasure m0, StreamingLSObjective obj, FlowConfig cfg,
             std::optional<ParticleMeasure> reference = std::nullopt);

  static FlowRunner resume(const Checkpoint& cp, StreamingLSObjective obj, FlowConfig cfg,
                           std::optional<ParticleMeasure> reference = std::nullopt);

  /// Consumes one observation. Returns false if it was skipped as invalid;
  /// a skipped observation still advances iteration().
  bool advance(const Vector& y_hat);

  /// Records the diagnostics row of the current iterate if not yet recorded.
  void finish();

  const ParticleMeasure& current() const { return current_; }
  std::size_t iteration() const { return k_; }
  const FlowTrace& trace() const { return trace_; }
  const StepBoundReport& bounds() const { return bounds_; }
  Checkpoint checkpoint() const { return {current_, k_, cfg_.seed}; }

  /// W2 from the (subsampled) current cloud to the reference; nullopt
  /// without reference.
  std::optional<double> w2_to_reference() const;

 private:
  FlowRunner(ParticleMeasure m0, std::size_t k0, StreamingLSObjective obj, FlowConfig cfg,
             std::optional<ParticleMeasure> reference);
  void record(std::optional<double> grad_norm);

  ParticleMeasure current_;
  std::size_t k_;
  StreamingLSObjective obj_;
  FlowConfig cfg_;
  StepBoundReport bounds_;
  std::optional<ParticleMeasure> reference_;
  std::vector<std::size_t> diag_indices_;
  FlowTrace trace_;
};

struct FlowResult {
  ParticleMeasure final;
  FlowTrace trace;
};

/// Runs min(max_iters, stream.size()) iterations.
FlowResult run(const ParticleMeasure& m0, const StreamingLSObjective& obj, std::span<const Vector> stream,
               const FlowConfig& cfg, std::optional<ParticleMeasure> reference = std::nullopt);

}  // namespace swgf
