#include "swgf/flow.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "swgf/error.hpp"
#include "swgf/io.hpp"
#include "swgf/parallel.hpp"
#include "swgf/simd/kernels.hpp"
#include "swgf/transport.hpp"

namespace swgf {

StepBoundReport validate_tau(const Matrix& w, double rho, double sigma_w2, double tau) {
  return validate_tau(StreamingLSObjective(w, rho, std::nullopt, sigma_w2), tau);
}

StepBoundReport validate_tau(const StreamingLSObjective& obj, double tau) {
  require(std::isfinite(tau), "validate_tau: tau must be finite");
  StepBoundReport r;
  const double smax2 = obj.sigma_max() * obj.sigma_max();
  r.alpha = obj.sigma_min() * obj.sigma_min();
  r.c = 4.0 * std::max(smax2, obj.rho);
  r.sigma2 = r.c * obj.sigma_w2;
  r.eta = r.c / r.alpha;
  r.tau_max = std::min(1.0 / r.alpha, 2.0 / r.c);
  r.tau_cap_simple = 1.0 / (2.0 * std::max(smax2, obj.rho));
  r.tau = tau;
  r.ball_radius = std::sqrt(obj.sigma_w2) * std::sqrt(r.eta * tau);
  r.per_step_rate = 1.0 - r.alpha * tau;
  r.tau_valid = tau > 0.0 && tau < r.tau_max;
  return r;
}

double convergence_bound(const StepBoundReport& report, double w2_0, std::size_t k) {
  require(w2_0 >= 0.0, "convergence_bound: w2_0 must be nonnegative");
  const double floor = report.tau * report.sigma2 / report.alpha;
  if (k == 0) return w2_0 * w2_0;
  return std::pow(1.0 - report.tau * report.alpha, static_cast<double>(k)) * (w2_0 * w2_0 - floor) + floor;
}

ParticleMeasure step(const ParticleMeasure& m, std::span<const double> field_values, double tau, const ConvexSet& set) {
  if (field_values.size() != m.coords().size())
    fail(ErrorKind::kInvalidArgument, "step: expected " + std::to_string(m.coords().size()) +
                                          " field values, got " + std::to_string(field_values.size()));
  if (set.dim() != m.dim()) fail(ErrorKind::kInvalidArgument, "step: constraint dimension mismatch");
  std::vector<double> next(m.coords().size());
  simd::active_kernels().sub_scaled(m.coords(), field_values, tau, next);
  set.project_coords(next);
  return ParticleMeasure(m.dim(), std::move(next));
}

double lipschitz_norm_gap(const ParticleMeasure& m, const ParticleMeasure& ref, const ScalarMap& phi, double lipschitz) {
  require(lipschitz > 0.0, "lipschitz_norm_gap: Lipschitz constant must be positive");
  return std::abs(l2_norm(m, phi) - l2_norm(ref, phi));
}

void write_trace_csv(std::ostream& out, const FlowTrace& trace, std::size_t dim) {
  std::vector<std::string> header{"k", "objective", "w2_ref"};
  for (std::size_t j = 0; j < dim; ++j) header.push_back("mean_" + std::to_string(j + 1));
  header.push_back("grad_norm");
  io::write_csv_row(out, header);
  auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); };
  for (const auto& row : trace.rows) {
    std::vector<std::string> fields{std::to_string(row.k), opt(row.objective), opt(row.w2_ref)};
    for (Eigen::Index j = 0; j < row.mean.size(); ++j) fields.push_back(io::format_double(row.mean[j]));
    fields.push_back(opt(row.grad_norm));
    io::write_csv_row(out, fields);
  }
}

void write_checkpoint(const std::filesystem::path& stem, const Checkpoint& cp) {
  auto csv = stem;
  csv += ".csv";
  auto meta = stem;
  meta += ".meta";
  io::write_particles_file(csv, cp.particles);
  std::ostringstream out;
  io::write_key_values(out, {{"k", std::to_string(cp.k)},
                             {"seed", std::to_string(cp.seed)},
                             {"particles", std::to_string(cp.particles.size())},
                             {"dim", std::to_string(cp.particles.dim())},
                             {"rng", "counter(seed,purpose,iteration,particle)"},
                             {"rng_next_iteration", std::to_string(cp.k)}});
  io::write_file_atomically(meta, out.str());
}

Checkpoint read_checkpoint(const std::filesystem::path& stem) {
  auto csv = stem;
  csv += ".csv";
  auto meta = stem;
  meta += ".meta";
  const auto kv = io::read_key_values_file(meta);
  auto get = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorKind::kData, meta.string() + ": missing key '" + key + "'");
    return it->second;
  };
  Checkpoint cp{io::read_particles_file(csv), 0, 0};
  try {
    cp.k = std::stoull(get("k"));
    cp.seed = std::stoull(get("seed"));
    if (std::stoull(get("particles")) != cp.particles.size())
      fail(ErrorKind::kData, meta.string() + ": particle count does not match " + csv.string());
  } catch (const std::logic_error&) {
    fail(ErrorKind::kData, meta.string() + ": malformed k, seed or particles");
  }
  return cp;
}

FlowRunner::FlowRunner(ParticleMeasure m0, StreamingLSObjective obj, FlowConfig cfg,
                       std::optional<ParticleMeasure> reference)
    : FlowRunner(std::move(m0), 0, std::move(obj), std::move(cfg), std::move(reference)) {}

FlowRunner FlowRunner::resume(const Checkpoint& cp, StreamingLSObjective obj, FlowConfig cfg,
                              std::optional<ParticleMeasure> reference) {
  if (cp.seed != cfg.seed)
    fail(ErrorKind::kConfig, "resume: checkpoint seed " + std::to_string(cp.seed) + " differs from configured seed " +
                                 std::to_string(cfg.seed));
  return FlowRunner(cp.particles, cp.k, std::move(obj), std::move(cfg), std::move(reference));
}

FlowRunner::FlowRunner(ParticleMeasure m0, std::size_t k0, StreamingLSObjective obj, FlowConfig cfg,
                       std::optional<ParticleMeasure> reference)
    : current_(std::move(m0)), k_(k0), obj_(std::move(obj)), cfg_(std::move(cfg)) {
  if (current_.dim() != obj_.dim()) fail(ErrorKind::kInvalidArgument, "flow: measure and objective dimensions differ");
  if (cfg_.constraint.dim() != obj_.dim()) fail(ErrorKind::kInvalidArgument, "flow: constraint dimension mismatch");
  require(cfg_.tau > 0.0, "flow: tau must be positive");
  require(cfg_.max_iters >= 1, "flow: max_iters must be at least 1");
  require(cfg_.diag_every >= 1, "flow: diag_every must be at least 1");
  require(cfg_.perturb_std >= 0.0, "flow: perturb_std must be nonnegative");
  bounds_ = validate_tau(obj_, cfg_.tau);
  if (!bounds_.tau_valid && !cfg_.allow_unsafe_tau) {
    std::ostringstream msg;
    msg << "flow: step size " << cfg_.tau << " is outside the convergence interval (0, " << bounds_.tau_max << ")";
    fail(ErrorKind::kUnsafeStep, msg.str());
  }

  const std::size_t n = current_.size();
  const std::size_t count = cfg_.diag_subsample == 0 ? n : std::min(cfg_.diag_subsample, n);
  diag_indices_ = subsample_indices(n, count, cfg_.seed);
  if (reference) {
    if (reference->dim() != current_.dim())
      fail(ErrorKind::kInvalidArgument, "flow: reference dimension mismatch");
    if (reference->size() == 1) {
      reference_ = ParticleMeasure::dirac(reference->point_vector(0), count);
    } else if (reference->size() == count) {
      reference_ = std::move(reference);
    } else if (reference->size() > count) {
      reference_ = reference->subset(subsample_indices(reference->size(), count, cfg_.seed ^ 0x5DEECE66DULL));
    } else {
      fail(ErrorKind::kInvalidArgument, "flow: reference has fewer particles than the diagnostic subsample");
    }
  }
}

std::optional<double> FlowRunner::w2_to_reference() const {
  if (!reference_) return std::nullopt;
  return w2_exact(current_.subset(diag_indices_), *reference_).distance;
}

void FlowRunner::record(std::optional<double> grad_norm) {
  FlowTraceRow row;
  row.k = k_;
  if (obj_.theta_star) row.objective = evaluate_objective(obj_, current_);
  row.w2_ref = w2_to_reference();
  row.mean = mean(current_);
  row.covariance_trace = covariance(current_).trace();
  row.grad_norm = grad_norm;
  trace_.rows.push_back(std::move(row));
}

bool FlowRunner::advance(const Vector& y_hat) {
  if (static_cast<std::size_t>(y_hat.size()) != obj_.dim() || !y_hat.allFinite()) {
    std::string what = "flow: invalid observation at iteration " + std::to_string(k_);
    if (cfg_.on_invalid == InvalidObservationPolicy::kAbort) fail(ErrorKind::kData, what);
    ++trace_.skipped;
    trace_.notes.push_back(what + " skipped");
    ++k_;
    return false;
  }
  const std::size_t n = current_.size();
  const std::size_t d = current_.dim();

  // The mean is frozen before the sweep: every particle sees the same field.
  const GradientField field = stochastic_gradient_field(obj_, y_hat, mean(current_));
  std::vector<double> values = field.evaluate(current_, cfg_.workers);
  if (cfg_.perturb_std > 0.0) {
    parallel_for(n, cfg_.workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        CounterRng stream(cfg_.seed, StreamPurpose::kPerturbation, k_, i);
        Eigen::Map<Vector> xi(values.data() + i * d, static_cast<Eigen::Index>(d));
        xi = perturbed_gradient(xi, cfg_.perturb_std, stream);
      }
    });
  }

  if (k_ % cfg_.diag_every == 0) {
    double sq = 0.0;
    for (double v : values) sq += v * v;
    record(std::sqrt(sq / static_cast<double>(n)));
  }
  current_ = step(current_, values, cfg_.tau, cfg_.constraint);
  ++k_;
  ++trace_.iterations;
  return true;
}

void FlowRunner::finish() {
  if (trace_.rows.empty() || trace_.rows.back().k != k_) record(std::nullopt);
}

FlowResult run(const ParticleMeasure& m0, const StreamingLSObjective& obj, std::span<const Vector> stream,
               const FlowConfig& cfg, std::optional<ParticleMeasure> reference) {
  FlowRunner runner(m0, obj, cfg, std::move(reference));
  const std::size_t steps = std::min(cfg.max_iters, stream.size());
  for (std::size_t k = 0; k < steps; ++k) runner.advance(stream[k]);
  FlowTrace trace = runner.trace();
  if (stream.empty()) return {m0, std::move(trace)};
  runner.finish();
  trace = runner.trace();
  if (stream.size() < cfg.max_iters)
    trace.notes.push_back("stream exhausted after " + std::to_string(stream.size()) + " of " +
                          std::to_string(cfg.max_iters) + " iterations");
  return {runner.current(), std::move(trace)};
}

}  // namespace swgf
