#include "papc/bench/runner.hpp"

#include "papc/bench/matrix_io.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

namespace papc::bench {

namespace {

using json = nlohmann::ordered_json;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

/// lambda_max of the step-size coupling the cap is measured against.
double coupling_bound(const ZooInstance& inst) {
  double lambda = power_iteration<double>(symmetrized_coupling(inst.saddle.U, inst.saddle.L, inst.saddle.P), 1e-13,
                                          500000, Rng(0x0c1e))
                      .estimate;
  if (inst.composite)
    for (const auto& b : inst.composite->blocks) lambda = std::max(lambda, b.U.norm() * b.L.norm() * b.L.norm());
  return lambda;
}

std::optional<double> noise_c0(const ZooInstance& inst, const ExperimentConfig& cfg, const Schedules<double>& sched) {
  if (cfg.noise.kind == "none") return 0.0;
  if (cfg.noise.kind == "gaussian") {
    const auto rep = summability_certificate(make_variance(cfg.noise, cfg.regime), sched.gamma, cfg.horizon);
    return c0_from_schedule(rep, inst.primal_dim());
  }
  return std::nullopt;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

// --- configuration to objects ------------------------------------------------------

Schedules<double> make_schedules(const ZooInstance& inst, const ScheduleConfig& cfg) {
  const double beta = inst.beta();
  const double gamma0 = cfg.gamma0.value_or(cfg.gamma_scale * beta);
  const auto gamma = cfg.gamma_decay == 0 ? Sequence<double>::constant(gamma0)
                                          : Sequence<double>::polynomial(gamma0, cfg.gamma_limit, cfg.gamma_decay);
  const double lambda = coupling_bound(inst);
  const double cap = cfg.tau_cap.value_or(lambda > 0 ? cfg.tau_scale / lambda : 1.0);
  const double tau0 = cfg.tau0.value_or(cap);
  const auto tau = tau0 == cap ? Sequence<double>::constant(cap) : Sequence<double>::polynomial(tau0, cap, 1.0);
  return Schedules<double>{gamma, tau, cap, beta};
}

VarianceSchedule<double> make_variance(const NoiseConfig& noise, Regime regime) {
  const double s2 = noise.sigma0 * noise.sigma0;
  if (noise.schedule == "constant") return VarianceSchedule<double>::constant(s2, regime);
  return VarianceSchedule<double>::polynomial(s2, noise.epsilon, regime);
}

std::function<Index(Index)> make_batch_schedule(const std::string& spec, Index components) {
  const auto parts = split(spec, ':');
  auto count = [&](const std::string& s) {
    const double b = parse_number(s, "noise.batch_schedule");
    if (b < 1 || b != std::floor(b)) throw ConfigError("noise.batch_schedule: batch sizes are positive integers");
    return static_cast<Index>(b);
  };
  if (parts.size() == 2 && parts[0] == "constant") {
    const Index b = std::min(count(parts[1]), components);
    return [b](Index) { return b; };
  }
  if (parts.size() == 3 && parts[0] == "grow") {
    const Index b0 = count(parts[1]);
    const double rate = parse_number(parts[2], "noise.batch_schedule");
    if (!(rate >= 1)) throw ConfigError("noise.batch_schedule: growth rate must be at least 1");
    return [b0, rate, components](Index n) {
      const double b = std::ceil(static_cast<double>(b0) * std::pow(rate, static_cast<double>(n)));
      return b >= static_cast<double>(components) ? components : static_cast<Index>(b);
    };
  }
  throw ConfigError("noise.batch_schedule: expected constant:<b> or grow:<b0>:<rate>, got '" + spec + "'");
}

StochasticOracle<double> make_oracle(const ZooInstance& inst, const NoiseConfig& noise, Regime regime,
                                     std::uint64_t seed) {
  auto grad = CocoerciveMap<double>::gradient(inst.h);
  if (noise.kind == "none") return StochasticOracle<double>::deterministic(std::move(grad));
  if (noise.kind == "gaussian")
    return StochasticOracle<double>::gaussian(std::move(grad), make_variance(noise, regime), seed);
  if (!inst.least_squares)
    throw ConfigError("noise.kind = minibatch needs a least-squares h; problem " + inst.name + " has none");
  const auto& ls = *inst.least_squares;
  const Index m = ls.D.rows();
  std::vector<StochasticOracle<double>::Component> comps;
  for (Index j = 0; j < m; ++j) {
    const Vecd row = ls.D.row(j).transpose();
    const double a = ls.a(j);
    comps.push_back([row, a, m](const Vecd& x) -> Vecd { return static_cast<double>(m) * (row.dot(x) - a) * row; });
  }
  return StochasticOracle<double>::minibatch(std::move(comps), inst.beta(), make_batch_schedule(noise.batch_schedule, m),
                                             inst.primal_dim(), seed);
}

HypothesisCertificate<double> validate_experiment(const ZooInstance& inst, const ExperimentConfig& cfg,
                                                  const Schedules<double>& sched) {
  HypothesisCertificate<double> cert;
  if (inst.composite) {
    auto cc = validate_composite(*inst.composite, sched, cfg.horizon, cfg.regime);
    cert = std::move(cc.hypotheses);
    if (cc.discrepancy) cert.notes.push_back(*cc.discrepancy);
  } else {
    cert = validate_hypotheses(inst.saddle, sched, cfg.horizon, cfg.regime);
  }
  if (cfg.noise.kind == "gaussian") {
    const auto rep = summability_certificate(make_variance(cfg.noise, cfg.regime), sched.gamma, cfg.horizon);
    cert.conditions.push_back(Condition{"noise summability", rep.certified(), rep.certified() ? "" : rep.message});
  } else if (cfg.noise.kind == "minibatch") {
    if (!inst.least_squares) throw ConfigError("noise.kind = minibatch needs a least-squares h");
    const Index m = inst.least_squares->D.rows();
    const auto batch = make_batch_schedule(cfg.noise.batch_schedule, m);
    const bool full = batch(cfg.horizon) >= m;
    cert.conditions.push_back(
        Condition{"noise summability", full, full ? "" : "batch never reaches all " + std::to_string(m) + " rows"});
  }
  return cert;
}

// --- one seed ------------------------------------------------------------------------

SeedOutcome run_seed(const SeedContext& ctx, std::uint64_t seed, std::ostream* trace) {
  const auto start = std::chrono::steady_clock::now();
  const ZooInstance& inst = *ctx.instance;
  const ExperimentConfig& cfg = *ctx.config;
  const Schedules<double>& sched = *ctx.schedules;
  const Index horizon = cfg.horizon;
  const Index stride = cfg.trace_stride > 0 ? cfg.trace_stride : default_stride(horizon);

  SeedOutcome out;
  out.seed = seed;
  const auto oracle = make_oracle(inst, cfg.noise, cfg.regime, seed);
  const auto inclusion = inst.inclusion();
  const auto& s = inst.saddle;
  const Vecd x0 = Vecd::Zero(inst.primal_dim());
  const Vecd v0 = Vecd::Zero(inst.dual_dim());
  const bool assert_fejer = oracle.is_deterministic() && ctx.certificate && ctx.certificate->passed();

  GradientGapTracker<double> grad_gap(oracle.base(), inst.x_bar, horizon, stride);
  std::optional<double> prev_phi;
  double slack = 0;
  auto row = [&](Index n, const PapcState<double>& st, double gamma, double tau) {
    if (n % stride != 0 && n != horizon) return;
    const Vecd xl = inst.lift_x(st.x);
    const auto kkt = kkt_residual(xl, st.v, inclusion);
    const double phi = s.primal().norm_sq(Vecd(xl - inst.lift_x(inst.x_bar))) +
                       weighted_norm_sq(Vecd(st.v - inst.v_bar), s.U, tau, gamma, s.L, s.P);
    if (!prev_phi) slack = 1e-10 * (1 + phi);
    else out.fejer_worst_excess = std::max(out.fejer_worst_excess, phi - *prev_phi - slack);
    prev_phi = phi;
    if (trace) {
      *trace << n << ',' << format_double(gamma) << ',' << format_double(tau) << ',' << format_double(kkt.primal) << ','
             << format_double(kkt.dual) << ',' << format_double(phi) << ',' << format_double((st.x - inst.x_bar).norm())
             << ',' << format_double(s.dual().norm(Vecd(st.v - inst.v_bar))) << ',' << format_double(grad_gap.total())
             << '\n';
    }
  };
  if (trace) *trace << kTraceHeader << '\n';

  RunOptions<double> opts;
  opts.horizon = horizon;
  opts.checkpoints = ctx.checkpoints;
  opts.stride = stride;
  opts.keep_trace = false;
  opts.callbacks = {grad_gap.callback(), row};

  RunRecord<double> rec;
  try {
    rec = inst.composite ? run(*inst.composite, sched, oracle, x0, v0, opts) : run(s, sched, oracle, x0, v0, opts);
  } catch (const std::exception& e) {
    rec.failure = e.what();
    rec.terminal = initial_state(OrthoProjector<double>::full(inst.primal_dim()), x0, v0);
  }
  out.failure = rec.failure;
  out.steps = rec.terminal.n;
  out.noise_energy = rec.noise_energy;
  out.grad_gap_total = grad_gap.total();
  out.grad_gap_last_decile = grad_gap.last_decile_fraction();
  if (assert_fejer && out.ok()) out.fejer_monotone = out.fejer_worst_excess <= 0;

  const auto& t = rec.terminal;
  if (t.x.allFinite() && t.v.allFinite()) {
    out.dist_x = (t.x - inst.x_bar).norm();
    out.dist_v = s.dual().norm(Vecd(t.v - inst.v_bar));
    out.kkt = kkt_residual(inst.lift_x(t.x), t.v, inclusion);
  } else {
    out.dist_x = out.dist_v = nan();
    out.kkt = KktResidual<double>{nan(), nan()};
  }

  if (out.ok()) {
    for (auto& cp : rec.checkpoints) cp.x_avg = inst.lift_x(cp.x_avg);
    const auto c0 = noise_c0(inst, cfg, sched);
    const GapConstant<double> gapc(s, sched, inst.lift_x(x0), v0, c0.value_or(0.0));
    out.gaps = gap_and_bound(rec, SaddleFunction<double>::from(s), inst.lift_x(inst.x_bar), inst.v_bar, gapc);
    for (auto& g : out.gaps) {
      if (!c0) g.bound = nan();
      if (!g.flagged && std::isfinite(g.bound) && !(g.gap <= g.bound)) out.gap_within_bound = false;
    }
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<GapTableRow> gap_table(const std::vector<SeedOutcome>& outcomes) {
  std::vector<std::vector<GapRow<double>>> tables;
  for (const auto& o : outcomes)
    if (o.ok() && !o.gaps.empty()) tables.push_back(o.gaps);
  if (tables.empty()) return {};
  const auto avg = average_gaps(tables);
  std::vector<GapTableRow> out;
  std::vector<std::pair<double, double>> series;
  for (std::size_t j = 0; j < avg.size(); ++j) {
    GapTableRow r{avg[j], tables.front()[j].sum_gamma, nan()};
    series.emplace_back(static_cast<double>(avg[j].N), avg[j].mean);
    try {
      const double hi = static_cast<double>(avg[j].N);
      r.slope_window = rate_fit(series, hi / 10, hi);
    } catch (const std::invalid_argument&) {
    }
    out.push_back(r);
  }
  return out;
}

// --- experiment --------------------------------------------------------------------

namespace {

json certificate_json(const HypothesisCertificate<double>& cert, bool forced) {
  json conds = json::array();
  for (const auto& c : cert.conditions) conds.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  json out = {{"regime", to_string(cert.regime)}, {"passed", cert.passed()}, {"forced", forced}, {"conditions", conds}};
  if (cert.tau) out["tau_scaled_spectrum"] = num(cert.tau->scaled);
  if (!cert.notes.empty()) out["notes"] = cert.notes;
  return out;
}

json seed_json(const SeedOutcome& o) {
  json fejer = {{"asserted", o.fejer_monotone.has_value()},
                {"monotone", o.fejer_monotone ? json(*o.fejer_monotone) : json(nullptr)},
                {"worst_excess", num(o.fejer_worst_excess)}};
  return {{"seed", o.seed},
          {"status", o.ok() ? "ok" : "failed"},
          {"failure", o.failure ? json(*o.failure) : json(nullptr)},
          {"steps", o.steps},
          {"terminal",
           {{"dist_x_oracle", num(o.dist_x)},
            {"dist_v_oracle", num(o.dist_v)},
            {"primal_res", num(o.kkt.primal)},
            {"dual_res", num(o.kkt.dual)}}},
          {"fejer", fejer},
          {"grad_gap", {{"total", num(o.grad_gap_total)}, {"last_decile_fraction", num(o.grad_gap_last_decile)}}},
          {"noise_energy", num(o.noise_energy)},
          {"gap_within_bound", o.gap_within_bound}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg_in, const RunSettings& settings) {
  ExperimentResult result;
  ExperimentConfig cfg = cfg_in;
  if (settings.seed_override) cfg.seeds = {*settings.seed_override};
  result.directory = settings.out ? *settings.out : std::filesystem::path(cfg.output);

  std::optional<ZooInstance> inst;
  try {
    inst = build_problem(cfg.raw);
  } catch (const OracleError& e) {
    result.exit_code = 1;
    result.message = e.what();
    return result;
  } catch (const std::invalid_argument& e) {
    result.exit_code = 2;
    result.message = e.what();
    return result;
  } catch (const ConfigError& e) {
    result.exit_code = 2;
    result.message = e.what();
    return result;
  }

  Schedules<double> sched;
  HypothesisCertificate<double> cert;
  try {
    sched = make_schedules(*inst, cfg.schedule);
    cert = validate_experiment(*inst, cfg, sched);
  } catch (const std::exception& e) {
    result.exit_code = 2;
    result.message = e.what();
    return result;
  }
  if (!cert.passed() && !settings.force) {
    result.exit_code = 2;
    result.message = "hypotheses rejected:";
    for (const auto& f : cert.failures()) result.message += "\n  " + f;
    return result;
  }

  SeedContext ctx{&*inst, &cfg, &sched, &cert,
                  cfg.checkpoints.empty() ? log_checkpoints(cfg.horizon, cfg.per_decade) : cfg.checkpoints};
  std::filesystem::create_directories(result.directory);
  const auto& dir = result.directory;
  write_text(dir / "config.ini", cfg.raw.serialize());

  const auto start = std::chrono::steady_clock::now();
  result.outcomes.resize(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      const auto seed = cfg.seeds[i];
      std::ostringstream trace;
      result.outcomes[i] = run_seed(ctx, seed, &trace);
      write_text(dir / ("trace_seed" + std::to_string(seed) + ".csv"), trace.str());
    }
  };
  const int jobs = std::max(1, std::min<int>(settings.jobs, static_cast<int>(cfg.seeds.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  result.gaps = gap_table(result.outcomes);
  std::vector<std::pair<double, double>> series;
  for (const auto& g : result.gaps) series.emplace_back(static_cast<double>(g.row.N), g.row.mean);
  try {
    result.gap_slope = rate_fit(series, 100.0, static_cast<double>(cfg.horizon));
  } catch (const std::invalid_argument&) {
  }

  std::ostringstream gap_csv;
  gap_csv << "N,gap,bound,sum_gamma,slope_window,std_error,samples\n";
  for (const auto& g : result.gaps)
    gap_csv << g.row.N << ',' << format_double(g.row.mean) << ',' << format_double(g.row.bound) << ','
            << format_double(g.sum_gamma) << ',' << format_double(g.slope_window) << ','
            << format_double(g.row.std_error) << ',' << g.row.samples << '\n';
  write_text(dir / "gap.csv", gap_csv.str());

  int failed = 0;
  double max_dx = 0, max_dv = 0, max_kkt = 0;
  bool all_within = true, mean_within = true;
  json runs = json::array();
  json timing = json::array();
  for (const auto& o : result.outcomes) {
    runs.push_back(seed_json(o));
    timing.push_back({{"seed", o.seed}, {"wall_seconds", o.wall_seconds}});
    if (!o.ok()) {
      ++failed;
      continue;
    }
    max_dx = std::max(max_dx, o.dist_x);
    max_dv = std::max(max_dv, o.dist_v);
    max_kkt = std::max(max_kkt, o.kkt.max());
    all_within = all_within && o.gap_within_bound;
  }
  for (const auto& g : result.gaps)
    if (std::isfinite(g.row.bound) && !g.row.within_bound()) mean_within = false;

  const json summary = {
      {"problem", inst->name},
      {"regime", to_string(cfg.regime)},
      {"horizon", cfg.horizon},
      {"seeds", cfg.seeds},
      {"oracle", {{"method", inst->oracle_method}, {"kkt_residual", num(inst->oracle_kkt)}}},
      {"schedule",
       {{"beta", num(sched.beta)},
        {"gamma0", num(sched.gamma(0))},
        {"gamma_limit", num(sched.gamma.limit())},
        {"gamma_decay", num(cfg.schedule.gamma_decay)},
        {"tau0", num(sched.tau(0))},
        {"tau_cap", num(sched.tau_cap)}}},
      {"noise",
       {{"kind", cfg.noise.kind},
        {"sigma0", num(cfg.noise.sigma0)},
        {"epsilon", num(cfg.noise.epsilon)},
        {"batch_schedule", cfg.noise.batch_schedule}}},
      {"certificate", certificate_json(cert, settings.force && !cert.passed())},
      {"runs", runs},
      {"aggregate",
       {{"failed_seeds", failed},
        {"max_terminal_dist_x", num(max_dx)},
        {"max_terminal_dist_v", num(max_dv)},
        {"max_terminal_kkt", num(max_kkt)},
        {"gap_slope", result.gap_slope ? num(*result.gap_slope) : json(nullptr)},
        {"every_seed_gap_within_bound", all_within},
        {"mean_gap_within_bound", mean_within},
        {"final_mean_gap", result.gaps.empty() ? json(nullptr) : num(result.gaps.back().row.mean)},
        {"final_bound", result.gaps.empty() ? json(nullptr) : num(result.gaps.back().row.bound)}}},
  };
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  write_text(dir / "timing.json", json{{"wall_seconds", wall}, {"seeds", timing}}.dump(2) + "\n");

  result.exit_code = failed > 0 ? 1 : 0;
  result.message = failed > 0 ? std::to_string(failed) + " seed(s) failed" : "ok";
  return result;
}

}  // namespace papc::bench
