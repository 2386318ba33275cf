#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "settings.hpp"
#include "swgf/cli.hpp"
#include "swgf/error.hpp"
#include "swgf/flow.hpp"
#include "swgf/io.hpp"
#include "swgf/pdm.hpp"
#include "swgf/transport.hpp"

namespace swgf::cli {
namespace {

namespace fs = std::filesystem;
using io::format_double;

struct Context {
  Settings settings;
  fs::path out_dir;
  bool force = false;
  std::ostream& out;
};

std::string fmt_or_empty(std::optional<double> v) { return v ? format_double(*v) : std::string(); }

void write_output(const fs::path& path, const std::string& contents) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  io::write_file_atomically(path, contents);
}

fs::path input_path(const Context& ctx, const std::string& key, const std::string& fallback_name) {
  fs::path p = ctx.settings.has(key) ? fs::path(ctx.settings.text(key)) : ctx.out_dir / fallback_name;
  if (!fs::exists(p)) fail(ErrorKind::kConfig, "input file '" + p.string() + "' (key '" + key + "') does not exist");
  return p;
}

struct Scenario {
  pdm::DegradationModel model;
  bool has_truth = false;
  Vector theta_star() const {
    Vector t(2);
    t << model.lambda1, model.lambda2;
    return t;
  }
};

Scenario scenario(const Settings& s, bool need_truth, const std::string& command) {
  s.require_keys({"a0", "b0", "zeta_min", "period"}, command);
  if (need_truth) s.require_keys({"lambda1", "lambda2"}, command);
  Scenario sc;
  sc.model.a0 = s.number("a0");
  sc.model.b0 = s.number("b0");
  sc.model.zeta_min = s.number("zeta_min");
  sc.model.period = s.number("period");
  sc.has_truth = s.has("lambda1") && s.has("lambda2");
  sc.model.lambda1 = sc.has_truth ? s.number("lambda1") : 0.0;
  sc.model.lambda2 = sc.has_truth ? s.number("lambda2") : 0.0;
  sc.model.validate();
  return sc;
}

pdm::PlantParams plant(const Settings& s) {
  s.require_keys({"dt", "horizon", "eps_half_width", "r"}, "simulate");
  pdm::PlantParams p;
  p.dt = s.number("dt");
  p.horizon = s.number("horizon");
  p.eps_half_width = s.number("eps_half_width");
  p.r = s.number("r");
  return p;
}

std::vector<pdm::Observation> read_observations(const fs::path& path) {
  const auto table = io::read_csv_file(path);
  if (table.header != std::vector<std::string>{"t", "a_hat", "b_hat"})
    fail(ErrorKind::kData, path.string() + ": expected header t,a_hat,b_hat");
  std::vector<pdm::Observation> obs;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != 3)
      fail(ErrorKind::kData, path.string() + ": row " + std::to_string(i + 2) + " does not have 3 fields");
    Vector y(2);
    y << io::parse_double(row[1]), io::parse_double(row[2]);
    obs.push_back({io::parse_double(row[0]), y});
  }
  return obs;
}

pdm::MaintenanceRule rule(const Settings& s) {
  const std::string kind = s.text_or("rule", "percentile");
  if (kind == "percentile") return pdm::MaintenanceRule::percentile(s.number_or("rule_level", 0.1));
  if (kind == "mean") return pdm::MaintenanceRule::mean();
  if (kind == "chance") return pdm::MaintenanceRule::chance(s.number_or("rule_level", 0.1));
  fail(ErrorKind::kConfig, "config key 'rule': expected percentile, mean or chance, got '" + kind + "'");
}

std::vector<double> time_grid(const Settings& s) {
  const std::string spec = s.text_or("t_grid", "0:0.5:60");
  if (spec.find(':') == std::string::npos) return s.numbers("t_grid");
  std::vector<double> parts;
  std::stringstream in(spec);
  std::string item;
  while (std::getline(in, item, ':')) {
    try {
      parts.push_back(io::parse_double(item));
    } catch (const Error&) {
      parts.clear();
      break;
    }
  }
  if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0] || parts[0] < 0.0)
    fail(ErrorKind::kConfig, "config key 't_grid': expected start:step:stop with step > 0, got '" + spec + "'");
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(parts[0] + static_cast<double>(i) * parts[1]);
  return grid;
}

/// Default step: half of the simple cap 1/(2 max(sigma_max(W)^2, rho)).
double step_size(const Settings& s, const StreamingLSObjective& obj) {
  if (s.has("tau")) return s.number("tau");
  return 0.5 / (2.0 * std::max(obj.sigma_max() * obj.sigma_max(), obj.rho));
}

/// Mean squared residual of the differenced stream around W theta*.
double increment_noise(const pdm::DifferencedStream& stream, const Vector& theta_star) {
  double m2 = 0.0;
  for (const auto& inc : stream.increments) m2 += (inc - stream.w() * theta_star).squaredNorm();
  return m2 / static_cast<double>(stream.increments.size());
}

void print_bounds(std::ostream& out, const StepBoundReport& r) {
  out << "alpha = " << format_double(r.alpha) << "\n"
      << "c = " << format_double(r.c) << "\n"
      << "sigma2 = " << format_double(r.sigma2) << "\n"
      << "eta = " << format_double(r.eta) << "\n"
      << "tau_max = " << format_double(r.tau_max) << "\n"
      << "tau_cap_simple = " << format_double(r.tau_cap_simple) << "\n"
      << "tau = " << format_double(r.tau) << "\n"
      << "tau_valid = " << (r.tau_valid ? "true" : "false") << "\n"
      << "ball_radius = " << format_double(r.ball_radius) << "\n"
      << "per_step_rate = " << format_double(r.per_step_rate) << "\n";
}

// ---------------------------------------------------------------------------

int cmd_simulate(Context& ctx) {
  const Settings& s = ctx.settings;
  const Scenario sc = scenario(s, true, "simulate");
  s.require_keys({"last_day", "x0"}, "simulate");
  pdm::CaseConfig cfg;
  cfg.plant = plant(s);
  cfg.model = sc.model;
  const Vector x0 = s.vector("x0", 2);
  cfg.x0 = {x0[0], x0[1]};
  cfg.last_day = s.number("last_day");
  cfg.seed = s.u64_or("seed", 0);

  const auto obs = pdm::simulate_observations(cfg);
  std::ostringstream csv;
  io::write_csv_row(csv, {"t", "a_hat", "b_hat"});
  for (const auto& o : obs) io::write_csv_row(csv, {format_double(o.t), format_double(o.y_hat[0]), format_double(o.y_hat[1])});
  write_output(ctx.out_dir / "observations.csv", csv.str());
  ctx.out << "observations = " << obs.size() << "\n"
          << "written = " << (ctx.out_dir / "observations.csv").string() << "\n";
  return kExitOk;
}

int cmd_flow(Context& ctx) {
  const Settings& s = ctx.settings;
  const Scenario sc = scenario(s, false, "flow");
  s.require_keys({"rho", "perturb_std"}, "flow");
  const auto obs = read_observations(input_path(ctx, "observations", "observations.csv"));
  const auto stream = pdm::difference_stream(obs);
  if (std::abs(stream.period - sc.model.period) > 1e-9)
    fail(ErrorKind::kData, "observation spacing " + format_double(stream.period) + " differs from configured period " +
                               format_double(sc.model.period));

  std::optional<Vector> theta_star;
  if (sc.has_truth) theta_star = sc.theta_star();
  const double sigma_w2 = s.has("sigma_w2") ? s.number("sigma_w2")
                          : theta_star      ? increment_noise(stream, *theta_star)
                                            : 0.0;
  StreamingLSObjective obj(stream.w(), s.number("rho"), theta_star, sigma_w2);

  FlowConfig cfg;
  cfg.tau = step_size(s, obj);
  cfg.seed = s.u64_or("seed", 0);
  const std::size_t requested = s.count_or("max_iters", stream.increments.size());
  cfg.max_iters = std::max<std::size_t>(1, requested);
  cfg.perturb_std = s.number("perturb_std");
  cfg.constraint = s.constraint(2);
  cfg.diag_every = s.count_or("diag_every", 1);
  cfg.diag_subsample = s.count_or("diag_subsample", 256);
  cfg.workers = static_cast<unsigned>(s.count_or("workers", 1));
  const std::string policy = s.text_or("on_invalid", "abort");
  if (policy != "abort" && policy != "skip")
    fail(ErrorKind::kConfig, "config key 'on_invalid': expected abort or skip, got '" + policy + "'");
  cfg.on_invalid = policy == "skip" ? InvalidObservationPolicy::kSkip : InvalidObservationPolicy::kAbort;
  cfg.allow_unsafe_tau = ctx.force;
  const std::size_t checkpoint_every = s.count_or("checkpoint_every", 0);

  std::optional<ParticleMeasure> reference;
  if (theta_star) reference = ParticleMeasure::dirac(*theta_star);

  auto make_runner = [&]() {
    if (s.has("resume")) {
      const fs::path stem = fs::path(s.text("resume")).replace_extension();
      return FlowRunner::resume(read_checkpoint(stem), obj, cfg, reference);
    }
    s.require_keys({"n_particles", "init_lo", "init_hi"}, "flow");
    return FlowRunner(init_uniform_box(s.vector("init_lo", 2), s.vector("init_hi", 2), s.count("n_particles"), cfg.seed),
                      obj, cfg, reference);
  };
  FlowRunner runner = make_runner();
  if (runner.bounds().tau_valid == false)
    ctx.out << "warning = step size outside the convergence interval (forced)\n";

  const std::size_t stop = std::min(requested, stream.increments.size());
  while (runner.iteration() < stop) {
    runner.advance(stream.increments[runner.iteration()]);
    if (checkpoint_every > 0 && runner.iteration() % checkpoint_every == 0)
      write_checkpoint(ctx.out_dir / ("checkpoint_" + std::to_string(runner.iteration())), runner.checkpoint());
  }
  runner.finish();

  fs::create_directories(ctx.out_dir);
  write_checkpoint(ctx.out_dir / "particles", runner.checkpoint());
  std::ostringstream trace;
  write_trace_csv(trace, runner.trace(), 2);
  write_output(ctx.out_dir / "trace.csv", trace.str());

  print_bounds(ctx.out, runner.bounds());
  const Vector m = mean(runner.current());
  ctx.out << "iterations = " << runner.iteration() << "\n"
          << "skipped = " << runner.trace().skipped << "\n"
          << "mean = " << format_double(m[0]) << "," << format_double(m[1]) << "\n";
  for (const auto& note : runner.trace().notes) ctx.out << "note = " << note << "\n";
  return kExitOk;
}

int cmd_predict(Context& ctx) {
  const Settings& s = ctx.settings;
  const Scenario sc = scenario(s, false, "predict");
  const auto main_rule = rule(s);
  const double band_lo = s.number_or("band_lo", 0.1);
  const double band_hi = s.number_or("band_hi", 0.9);
  const double chance_alpha = s.number_or("chance_alpha", 0.1);
  if (!(band_lo >= 0.0 && band_lo <= band_hi && band_hi <= 1.0))
    fail(ErrorKind::kConfig, "band levels must satisfy 0 <= band_lo <= band_hi <= 1");
  const auto grid = time_grid(s);

  std::vector<fs::path> files;
  if (s.has("particles")) {
    for (const auto& p : s.list("particles")) {
      if (!fs::exists(p)) fail(ErrorKind::kConfig, "input file '" + p + "' (key 'particles') does not exist");
      files.emplace_back(p);
    }
  } else {
    files.push_back(input_path(ctx, "particles", "particles.csv"));
  }
  if (s.has("day") && files.size() != 1) fail(ErrorKind::kConfig, "key 'day' applies to a single particle file only");

  std::vector<pdm::Observation> obs;
  if (s.has("observations") || fs::exists(ctx.out_dir / "observations.csv"))
    obs = read_observations(input_path(ctx, "observations", "observations.csv"));

  struct Belief {
    double day;
    ParticleMeasure m;
  };
  std::vector<Belief> beliefs;
  for (const auto& file : files) {
    ParticleMeasure m = io::read_particles_file(file);
    if (m.dim() != 2) fail(ErrorKind::kData, file.string() + ": particles must be 2-dimensional (lambda1, lambda2)");
    for (double v : m.coords())
      if (v < 0.0) fail(ErrorKind::kData, file.string() + ": particles must lie in the nonnegative orthant");
    double day = 0.0;
    if (s.has("day")) {
      day = s.number("day");
    } else {
      auto meta = fs::path(file).replace_extension(".meta");
      if (!fs::exists(meta))
        fail(ErrorKind::kConfig, "cannot determine the day of '" + file.string() + "': no " + meta.string() +
                                     "; set --day");
      const auto kv = io::read_key_values_file(meta);
      if (!kv.contains("k")) fail(ErrorKind::kData, meta.string() + ": missing key 'k'");
      day = static_cast<double>(std::stoull(kv.at("k"))) * sc.model.period;
    }
    beliefs.push_back({day, std::move(m)});
  }

  std::optional<double> truth;
  if (sc.has_truth) truth = pdm::true_maintenance_time(sc.model).t;

  std::ostringstream tstar, rules, band;
  io::write_csv_row(tstar, {"day", "ours", "ls", "true"});
  io::write_csv_row(rules, {"day", "percentile", "mean", "chance"});
  for (const auto& b : beliefs) {
    std::optional<double> ls;
    std::vector<pdm::Observation> seen;
    for (const auto& o : obs)
      if (o.t <= b.day + 1e-9) seen.push_back(o);
    if (seen.size() >= 2) ls = pdm::ls_baseline(seen, sc.model.a0, sc.model.b0, sc.model).t_star.t;
    io::write_csv_row(tstar, {format_double(b.day), format_double(pdm::suggested_maintenance_time(b.m, sc.model, main_rule).t),
                              fmt_or_empty(ls), fmt_or_empty(truth)});
    io::write_csv_row(
        rules, {format_double(b.day),
                format_double(pdm::suggested_maintenance_time(b.m, sc.model, pdm::MaintenanceRule::percentile(band_lo)).t),
                format_double(pdm::suggested_maintenance_time(b.m, sc.model, pdm::MaintenanceRule::mean()).t),
                format_double(pdm::suggested_maintenance_time(b.m, sc.model, pdm::MaintenanceRule::chance(chance_alpha)).t)});
  }

  io::write_csv_row(band, {"t", "p10", "mean", "p90", "zeta_true"});
  for (const auto& row : pdm::predict_damping_band(beliefs.back().m, sc.model, grid, band_lo, band_hi)) {
    std::optional<double> z;
    if (sc.has_truth) {
      const Vector y = pdm::degrade(sc.model, row.t);
      z = pdm::damping_ratio_floored(y[0], y[1]);
    }
    io::write_csv_row(band, {format_double(row.t), format_double(row.lo), format_double(row.mean),
                             format_double(row.hi), fmt_or_empty(z)});
  }

  write_output(ctx.out_dir / "tstar.csv", tstar.str());
  write_output(ctx.out_dir / "rules.csv", rules.str());
  write_output(ctx.out_dir / "prediction.csv", band.str());
  ctx.out << "beliefs = " << beliefs.size() << "\n"
          << "zeta_min = " << format_double(sc.model.zeta_min) << "\n";
  if (truth) ctx.out << "true_maintenance_time = " << format_double(*truth) << "\n";
  return kExitOk;
}

int cmd_diagnose(Context& ctx) {
  const Settings& s = ctx.settings;
  const Scenario sc = scenario(s, false, "diagnose");
  s.require_keys({"rho"}, "diagnose");
  const ParticleMeasure m = io::read_particles_file(input_path(ctx, "particles", "particles.csv"));

  std::optional<ParticleMeasure> ref_cloud;
  if (s.has("reference")) {
    ref_cloud = io::read_particles_file(input_path(ctx, "reference", ""));
  } else if (!sc.has_truth) {
    fail(ErrorKind::kConfig, "diagnose: set 'reference' or the true parameters lambda1, lambda2");
  }
  if (ref_cloud && ref_cloud->dim() != m.dim())
    fail(ErrorKind::kData, "diagnose: particle dimension " + std::to_string(m.dim()) +
                               " differs from reference dimension " + std::to_string(ref_cloud->dim()));
  if (!ref_cloud && m.dim() != 2) fail(ErrorKind::kData, "diagnose: particles must be (lambda1, lambda2)");

  Matrix w = Matrix::Zero(2, 2);
  w(0, 0) = -sc.model.period;
  w(1, 1) = sc.model.period;
  if (m.dim() != 2) fail(ErrorKind::kData, "diagnose: the streaming model is 2-dimensional");

  double sigma_w2 = 0.0;
  if (s.has("sigma_w2")) {
    sigma_w2 = s.number("sigma_w2");
  } else if (sc.has_truth && (s.has("observations") || fs::exists(ctx.out_dir / "observations.csv"))) {
    sigma_w2 = increment_noise(pdm::difference_stream(read_observations(input_path(ctx, "observations", "observations.csv"))),
                               sc.theta_star());
  } else {
    fail(ErrorKind::kConfig, "diagnose: set 'sigma_w2' (or provide observations and the true parameters)");
  }
  StreamingLSObjective obj(w, s.number("rho"), std::nullopt, sigma_w2);
  const StepBoundReport report = validate_tau(obj, step_size(s, obj));

  // Both clouds are reduced to a common size for the exact transport problem.
  const std::uint64_t seed = s.u64_or("seed", 0);
  std::size_t k = s.count_or("diag_subsample", 256);
  const std::size_t n_ref = ref_cloud ? ref_cloud->size() : m.size();
  if (k == 0 || k > std::min(m.size(), n_ref)) k = std::min(m.size(), n_ref);
  auto reduce = [&](const ParticleMeasure& cloud) {
    if (cloud.size() == k) return cloud;
    return cloud.subset(subsample_indices(cloud.size(), k, seed));
  };
  const ParticleMeasure a = reduce(m);
  const ParticleMeasure b = ref_cloud ? reduce(*ref_cloud) : ParticleMeasure::dirac(sc.theta_star(), k);

  const double w2 = w2_exact(a, b).distance;
  const double gelbrich = gelbrich_lower_bound(a, b);
  const double mean_gap = (mean(a) - mean(b)).norm();
  const double bures_gap = bures_distance(covariance(a), covariance(b));
  const double lip_gap =
      lipschitz_norm_gap(a, b, [](const Vector& x) { return x.norm(); }, 1.0);

  print_bounds(ctx.out, report);
  std::vector<std::pair<std::string, double>> rows = {
      {"alpha", report.alpha},
      {"c", report.c},
      {"sigma2", report.sigma2},
      {"eta", report.eta},
      {"tau_max", report.tau_max},
      {"tau_cap_simple", report.tau_cap_simple},
      {"tau", report.tau},
      {"tau_valid", report.tau_valid ? 1.0 : 0.0},
      {"ball_radius", report.ball_radius},
      {"per_step_rate", report.per_step_rate},
      {"sigma_w2", sigma_w2},
      {"subsample", static_cast<double>(k)},
      {"w2", w2},
      {"gelbrich", gelbrich},
      {"mean_gap", mean_gap},
      {"bures_gap", bures_gap},
      {"lipschitz_gap", lip_gap},
  };
  std::ostringstream csv;
  io::write_csv_row(csv, {"quantity", "value"});
  for (const auto& [name, value] : rows) io::write_csv_row(csv, {name, format_double(value)});
  write_output(ctx.out_dir / "diagnostics.csv", csv.str());
  ctx.out << "subsample = " << k << "\n"
          << "w2 = " << format_double(w2) << "\n"
          << "gelbrich = " << format_double(gelbrich) << "\n"
          << "mean_gap = " << format_double(mean_gap) << "\n"
          << "bures_gap = " << format_double(bures_gap) << "\n"
          << "lipschitz_gap = " << format_double(lip_gap) << "\n";
  return kExitOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kConfig:
      return kExitConfig;
    case ErrorKind::kData:
      return kExitData;
    case ErrorKind::kNumerical:
      return kExitNumerical;
    case ErrorKind::kUnsafeStep:
      return kExitUnsafeStep;
  }
  return kExitConfig;
}

/// Collects `--key value` and `--key=value` pairs left over by the parser.
io::KeyValues overrides(const std::vector<std::string>& extras) {
  io::KeyValues kv;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() < 3)
      fail(ErrorKind::kConfig, "unexpected argument '" + arg + "'");
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      kv[arg.substr(2, eq - 2)] = arg.substr(eq + 1);
    } else {
      if (i + 1 >= extras.size()) fail(ErrorKind::kConfig, "option '" + arg + "' needs a value");
      kv[arg.substr(2)] = extras[++i];
    }
  }
  return kv;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic Wasserstein gradient flow estimation and predictive maintenance"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool preset = false, force = false;
  std::vector<CLI::App*> subs;
  for (const char* name : {"simulate", "flow", "predict", "diagnose"}) {
    static const std::map<std::string, std::string> help = {
        {"simulate", "simulate noisy daily (a, b) estimates -> observations.csv"},
        {"flow", "run the particle flow on differenced observations -> particles.csv, trace.csv"},
        {"predict", "damping-ratio band and maintenance times -> prediction.csv, tstar.csv, rules.csv"},
        {"diagnose", "step-size constants and distances to a reference -> diagnostics.csv"}};
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->allow_extras();
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--seed", seed, "global seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--paper-preset", preset, "load the constants of the paper's case study");
    sub->add_flag("--force", force, "run even if the step size is outside the convergence interval");
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    CLI::App* sub = *std::find_if(subs.begin(), subs.end(), [](CLI::App* a) { return a->parsed(); });
    io::KeyValues merged = preset ? case_preset() : io::KeyValues{};
    io::KeyValues user;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) fail(ErrorKind::kConfig, "config file '" + config_path + "' does not exist");
      user = io::read_key_values_file(config_path);
    }
    for (auto& [k, v] : overrides(sub->remaining())) user[k] = v;
    if (seed) user["seed"] = std::to_string(*seed);
    const auto& known = known_keys();
    for (const auto& [k, v] : user) {
      if (std::find(known.begin(), known.end(), k) == known.end())
        fail(ErrorKind::kConfig, "unknown config key '" + k + "'");
      merged[k] = v;
    }

    Context ctx{Settings(std::move(merged)), fs::path(out_dir), force, out};
    const std::string name = sub->get_name();
    if (name == "simulate") return cmd_simulate(ctx);
    if (name == "flow") return cmd_flow(ctx);
    if (name == "predict") return cmd_predict(ctx);
    return cmd_diagnose(ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace swgf::cli
