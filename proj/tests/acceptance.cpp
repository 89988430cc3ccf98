// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "papc/bench/runner.hpp"
#include "papc/prox_library.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

using namespace papc;
using namespace papc::bench;
using Vd = Vec<double>;
using Md = Mat<double>;
namespace fs = std::filesystem;

#ifndef PAPC_CONFIG_DIR
#define PAPC_CONFIG_DIR "configs"
#endif
#ifndef PAPC_WORK_DIR
#define PAPC_WORK_DIR "acceptance_out"
#endif

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig load(const std::string& name) {
  return ExperimentConfig::from(Config::load(fs::path(PAPC_CONFIG_DIR) / name));
}

ExperimentResult run_config(const ExperimentConfig& cfg, const std::string& out, int jobs = 1) {
  RunSettings s;
  s.out = fs::path(PAPC_WORK_DIR) / out;
  s.jobs = jobs;
  fs::remove_all(*s.out);
  return run_experiment(cfg, s);
}

const std::vector<std::string> kZooConfigs{"cls.ini", "lasso.ini", "fused.ini", "multi.ini", "composite.ini"};

/// Deterministic 10^4-step runs of every zoo config, shared by several criteria.
const std::vector<std::pair<std::string, ExperimentResult>>& deterministic_runs() {
  static const auto runs = [] {
    std::vector<std::pair<std::string, ExperimentResult>> out;
    for (const auto& name : kZooConfigs) {
      const auto cfg = load(name);
      out.emplace_back(name, run_config(cfg, "det_" + cfg.problem));
    }
    return out;
  }();
  return runs;
}

const ExperimentResult& noisy_lasso() {
  static const ExperimentResult res = [] {
    const int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return run_config(load("lasso_noisy.ini"), "lasso_noisy", jobs);
  }();
  return res;
}

double noisy_lasso_seconds = 0;

// --- 1 -----------------------------------------------------------------------------

Verdict operator_calculus() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0;
  auto track = [&](double err, const std::string& what) {
    worst = std::max(worst, err);
    v.require(err <= 1e-10, what + " error " + num(err));
  };

  Md basis = Eigen::HouseholderQR<Md>(random_gaussian<double>(24, rng).reshaped(6, 4)).householderQ() *
             Md::Identity(6, 4);
  Vd w(3);
  w << 0.2, 0.5, 0.3;
  const std::vector<std::pair<std::string, OrthoProjector<double>>> projectors{
      {"full", OrthoProjector<double>::full(6)},
      {"subspace", OrthoProjector<double>::from_basis(basis)},
      {"weighted averaging", OrthoProjector<double>::averaging(w, 2)},
  };
  for (const auto& [name, p] : projectors) {
    const auto rep = projector_check(p, 200, rng);
    track(rep.max_idempotence_error, name + " projector idempotence");
    track(rep.max_self_adjoint_error, name + " projector self-adjointness");
  }

  const Space<double> weighted(6, Vd(Vd::Constant(3, 0.2).replicate(2, 1) + Vd::LinSpaced(6, 0.1, 0.6)));
  const std::vector<std::pair<std::string, LinearMap<double>>> maps{
      {"matrix", LinearMap<double>::from_matrix(random_gaussian<double>(20, rng).reshaped(4, 5))},
      {"difference", LinearMap<double>::from_matrix(difference_matrix(8))},
      {"weighted", LinearMap<double>::from_matrix(random_gaussian<double>(36, rng).reshaped(6, 6), weighted, weighted)},
      {"composition", compose(LinearMap<double>::from_matrix(difference_matrix(5)),
                              LinearMap<double>::from_matrix(random_gaussian<double>(15, rng).reshaped(5, 3)))},
      {"lifted block diagonal", lift(multi_problem(multi_data(1))).spec.L},
  };
  for (const auto& [name, m] : maps) v.require(adjoint_consistency_check(m, 200, rng), name + " adjoint");

  const Md a = random_gaussian<double>(15, rng).reshaped(5, 3);
  const std::vector<ProxFunction<double>> fs{
      prox::zero<double>(3),
      prox::squared_distance<double>(Vd::LinSpaced(3, -1, 2)),
      prox::l1<double>(Vd::LinSpaced(3, 0.1, 1.0)),
      prox::box<double>(3, -1.0, 1.5),
      prox::singleton<double>(Vd::Ones(3)),
      prox::box_support<double>(Vd::Constant(3, -1), Vd::Constant(3, 2)),
      prox::least_squares<double>(a, Vd::Ones(5)),
      ProxFunction<double>::separable_sum({prox::l1<double>(1, 0.7), prox::squared_distance<double>(Vd::Ones(2))}),
  };
  for (const auto& f : fs) {
    const auto blk = MonotoneBlock<double>::subdifferential(f);
    for (double lam : {0.1, 1.0, 10.0}) {
      const std::string tag = f.name() + " at lambda " + num(lam);
      track(std::max(0.0, firm_nonexpansiveness_gap<double>([&](const Vd& x) { return blk.resolvent(lam, x); }, 3,
                                                            200, 3.0, rng)),
            tag + " prox firm nonexpansiveness");
      track(std::max(0.0, firm_nonexpansiveness_gap<double>(
                              [&](const Vd& x) { return conjugate_prox_via_moreau(f, lam, x); }, 3, 200, 3.0, rng)),
            tag + " conjugate prox firm nonexpansiveness");

      // Moreau: x = p + lambda q with q = prox_{g/lambda}(x/lambda). Since p is in dg(q),
      // the values must also meet Fenchel-Young with equality: g(q) + g*(p) = <q, p>.
      for (int k = 0; k < 200; ++k) {
        const Vd x = 3 * random_gaussian<double>(3, rng);
        const Vd p = conjugate_prox_via_moreau(f, lam, x);
        const Vd q = f.prox(1 / lam, Vd(x / lam));
        track((p + lam * q - x).norm() / (1 + x.norm()), tag + " Moreau identity");
        const auto gq = f.value(q);
        if (!gq.is_finite()) {
          v.require(false, tag + ": infinite value at a prox point");
        } else if (f.has_conjugate_value()) {
          const auto gs = f.conjugate_value(p);
          v.require(gs.is_finite(), tag + ": infinite conjugate at a prox point");
          if (gs.is_finite())
            track(std::abs(gq.value() + gs.value() - q.dot(p)) / (1 + std::abs(q.dot(p)) + std::abs(gq.value())),
                  tag + " Fenchel-Young at the Moreau pair");
        } else if (k % 10 == 0) {
          // no conjugate oracle: test p in dg(q) through the subgradient inequality
          for (int j = 0; j < 20; ++j) {
            const Vd y = q + random_gaussian<double>(3, rng);
            const auto gy = f.value(y);
            if (!gy.is_finite()) continue;
            const double slack = gq.value() + p.dot(y - q) - gy.value();
            track(std::max(0.0, slack) / (1 + std::abs(gy.value())), tag + " subgradient inequality");
          }
        }
      }
    }
  }

  // closed-form conjugate proxes: l1 -> clip, box support -> projection, quadratic -> shrink
  const Vd lo = Vd::Constant(3, -1), hi = Vd::Constant(3, 2), wts = Vd::LinSpaced(3, 0.1, 1.0),
           b = Vd::LinSpaced(3, -1, 2);
  for (double lam : {0.1, 1.0, 10.0})
    for (int k = 0; k < 50; ++k) {
      const Vd x = 3 * random_gaussian<double>(3, rng);
      track((conjugate_prox_via_moreau(fs[2], lam, x) - x.cwiseMax(-wts).cwiseMin(wts)).norm(), "l1 conjugate prox");
      track((conjugate_prox_via_moreau(fs[5], lam, x) - x.cwiseMax(lo).cwiseMin(hi)).norm(),
            "box support conjugate prox");
      track((conjugate_prox_via_moreau(fs[1], lam, x) - (x - lam * b) / (1 + lam)).norm(), "quadratic conjugate prox");
    }

  const double t = seconds_since(t0);
  v.require(t < 10, "runtime " + num(t) + " s");
  if (v.pass) v.detail = "max error " + num(worst) + ", " + num(t) + " s";
  return v;
}

// --- 2 -----------------------------------------------------------------------------

Verdict hypotheses_gate() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  int agree = 0, accepted = 0;
  for (int t = 0; t < 20; ++t) {
    const Index n = 2 + static_cast<Index>(rng() % 19), k = 1 + static_cast<Index>(rng() % 20);
    const Md lm = random_gaussian<double>(k * n, rng).reshaped(k, n);
    const Index r = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    const Md basis = Eigen::HouseholderQR<Md>(random_gaussian<double>(n * r, rng).reshaped(n, r)).householderQ() *
                     Md::Identity(n, r);
    Md um;
    SpdOperator<double> u = SpdOperator<double>::scalar(k, 1.0);
    if (t % 2 == 0) {
      const Vd d = (random_gaussian<double>(k, rng).array().abs() + 0.2).matrix();
      um = d.asDiagonal();
      u = SpdOperator<double>::diagonal(Space<double>(k), d);
    } else {
      const Md g = random_gaussian<double>(k * k, rng).reshaped(k, k);
      um = g * g.transpose() / static_cast<double>(k) + 0.3 * Md::Identity(k, k);
      u = SpdOperator<double>::dense(um);
    }
    // (tau U)^{-1} - L P L* > 0 iff tau mu < 1 for the largest mu of L P L* w = mu U^{-1} w
    const Md lpl = lm * basis * basis.transpose() * lm.transpose();
    const Eigen::GeneralizedSelfAdjointEigenSolver<Md> ges(lpl, Md(um.inverse()), Eigen::EigenvaluesOnly);
    const double mu = ges.eigenvalues().maxCoeff();
    const double tau = (0.5 + static_cast<double>(rng() % 1000) / 1000.0) / mu;
    const bool oracle = tau * mu < 1 - 1e-6;
    const auto cert = validate_tau(u, LinearMap<double>::from_matrix(lm), OrthoProjector<double>::from_basis(basis),
                                   tau, 1e-6);
    agree += cert.accepted() == oracle && cert.status != TauStatus::indeterminate;
    accepted += oracle;
  }
  v.require(agree == 20, std::to_string(agree) + "/20 instances agree");
  const double t = seconds_since(t0);
  v.require(t < 5, "runtime " + num(t) + " s");
  if (v.pass) v.detail = "20/20 agree (" + std::to_string(accepted) + " accepted), " + num(t) + " s";
  return v;
}

// --- 3 -----------------------------------------------------------------------------

Verdict deterministic_convergence() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  for (const char* name : {"cls.ini", "lasso.ini"}) {
    const auto cfg = load(name);
    v.require(cfg.horizon <= 10000 && cfg.noise.kind == "none", std::string(name) + ": not a 10^4-step exact run");
    const auto res = run_config(cfg, "conv_" + cfg.problem);
    v.require(res.exit_code == 0 && res.outcomes.size() == 1, std::string(name) + ": " + res.message);
    if (res.outcomes.empty()) continue;
    const auto& o = res.outcomes[0];
    v.require(o.dist_x <= 1e-8, cfg.problem + ": |x - x*| = " + num(o.dist_x));
    v.require(o.kkt.max() <= 1e-7, cfg.problem + ": kkt = " + num(o.kkt.max()));
    detail += cfg.problem + " |x - x*| " + num(o.dist_x) + " kkt " + num(o.kkt.max()) + "; ";
  }
  const double t = seconds_since(t0);
  v.require(t < 30, "runtime " + num(t) + " s");
  if (v.pass) v.detail = detail + num(t) + " s";
  return v;
}

// --- 4, 5, 7 ------------------------------------------------------------------------

Verdict fejer_monotone() {
  Verdict v;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [name, res] : deterministic_runs()) {
    v.require(res.exit_code == 0 && !res.outcomes.empty(), name + ": " + res.message);
    for (const auto& o : res.outcomes) {
      v.require(o.steps == 10000, name + ": horizon is not 10^4");
      v.require(o.fejer_monotone.has_value(), name + ": monotonicity not asserted");
      v.require(o.fejer_monotone.value_or(false), name + ": excess " + num(o.fejer_worst_excess));
      worst = std::max(worst, o.fejer_worst_excess);
    }
  }
  if (v.pass) v.detail = std::to_string(kZooConfigs.size()) + " problems, largest excess over slack " + num(worst);
  return v;
}

Verdict gradient_gap() {
  Verdict v;
  double worst = 0;
  for (const auto& [name, res] : deterministic_runs())
    for (const auto& o : res.outcomes) {
      v.require(o.grad_gap_total > 0, name + ": empty partial sum");
      v.require(o.grad_gap_last_decile <= 1e-10, name + ": last decile fraction " + num(o.grad_gap_last_decile));
      worst = std::max(worst, o.grad_gap_last_decile);
    }
  if (v.pass) v.detail = "largest last-decile fraction " + num(worst);
  return v;
}

Verdict ergodic_gap() {
  Verdict v;
  double slope = -std::numeric_limits<double>::infinity();
  for (const auto& [name, res] : deterministic_runs()) {
    for (const auto& o : res.outcomes) v.require(o.gap_within_bound, name + ": gap above bound");
    v.require(res.gap_slope.has_value(), name + ": no gap slope");
    if (res.gap_slope) {
      v.require(*res.gap_slope <= -0.9, name + ": gap slope " + num(*res.gap_slope));
      slope = std::max(slope, *res.gap_slope);
    }
  }
  const auto& noisy = noisy_lasso();
  v.require(noisy.outcomes.size() == 20, "noisy lasso: " + noisy.message);
  int rows = 0;
  for (const auto& g : noisy.gaps) {
    v.require(g.row.samples == 20, "noisy lasso: flagged gap at N = " + std::to_string(g.row.N));
    v.require(g.row.within_bound(), "noisy lasso: mean gap " + num(g.row.mean) + " above bound " + num(g.row.bound) +
                                        " + 2 se at N = " + std::to_string(g.row.N));
    ++rows;
  }
  v.require(rows > 0, "noisy lasso: empty gap table");
  if (v.pass)
    v.detail = "deterministic slopes <= " + num(slope) + "; 20-seed mean within bound at " + std::to_string(rows) +
               " checkpoints";
  return v;
}

// --- 6 -----------------------------------------------------------------------------

Verdict almost_sure_proxy() {
  Verdict v;
  const auto cfg = load("lasso_noisy.ini");
  v.require(cfg.seeds.size() == 20 && cfg.horizon == 100000 && cfg.noise.kind == "gaussian" &&
                cfg.noise.sigma0 == 1 && cfg.noise.epsilon == 1,
            "config is not the 20-seed, 10^5-step, sigma0 = 1, epsilon = 1 experiment");
  const auto t0 = std::chrono::steady_clock::now();
  const auto& res = noisy_lasso();
  noisy_lasso_seconds = seconds_since(t0);
  v.require(res.outcomes.size() == 20, res.message);
  double worst = 0;
  for (const auto& o : res.outcomes) {
    v.require(o.ok(), "seed " + std::to_string(o.seed) + " failed");
    v.require(o.dist_x <= 1e-2, "seed " + std::to_string(o.seed) + ": |x - x*| = " + num(o.dist_x));
    worst = std::max(worst, o.dist_x);
  }
  v.require(noisy_lasso_seconds < 300, "runtime " + num(noisy_lasso_seconds) + " s");
  if (v.pass) v.detail = "max |x - x*| " + num(worst) + ", " + num(noisy_lasso_seconds) + " s";
  return v;
}

// --- 8 -----------------------------------------------------------------------------

Verdict product_space() {
  Verdict v;
  const auto cp = multi_problem(multi_data(1));
  const auto inst = make_multi(multi_data(1));
  const auto sched = make_schedules(inst, ScheduleConfig{});
  double worst = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto oracle =
        StochasticOracle<double>::gaussian(cp.C, VarianceSchedule<double>::polynomial(1.0, 1.0), seed);
    const auto rep = lift_flat_equivalence(cp, sched, oracle, 100);
    v.require(rep.steps == 100 && rep.relative() <= 1e-12, "seed " + std::to_string(seed) + ": " + num(rep.relative()));
    worst = std::max(worst, rep.relative());
  }
  RunOptions<double> opts;
  opts.horizon = 10000;
  opts.keep_trace = false;
  const auto rec = run(cp, sched, StochasticOracle<double>::deterministic(cp.C), Vd(Vd::Zero(cp.primal_dim())),
                       Vd(Vd::Zero(cp.dual_dim())), opts);
  v.require(rec.ok(), "composite run failed");
  const auto res = composite_residuals(cp, rec.terminal.x, rec.terminal.v);
  v.require(res.stationarity <= 1e-6, "stationarity " + num(res.stationarity));
  v.require(res.max_block() <= 1e-6, "block residual " + num(res.max_block()));
  if (v.pass)
    v.detail = "deviation " + num(worst) + "; residuals " + num(res.stationarity) + ", " + num(res.max_block());
  return v;
}

// --- 9 -----------------------------------------------------------------------------

Verdict gradient_check() {
  Verdict v;
  Rng rng(909);
  double worst = 0;
  // the gradient is the Riesz representer in the space's inner product, so the
  // coordinate derivatives are compared with <grad h(x), e_i>
  struct Case {
    std::string name;
    SmoothFunction<double> h;
    Space<double> space;
  };
  std::vector<Case> hs;
  for (const auto& name : kZooConfigs) {
    const auto inst = build_problem(load(name).raw);
    hs.push_back({inst.name, inst.h, Space<double>(inst.h.dim())});
    if (inst.composite) hs.push_back({inst.name + " lifted", inst.saddle.h, inst.saddle.L.domain()});
  }
  hs.push_back({"fused constant", make_fused(fused_data(7, 0.3, "constant")).h, Space<double>(7)});
  for (const auto& [name, h, space] : hs) {
    for (int k = 0; k < 10; ++k) {
      const Vd x = 2 * random_gaussian<double>(h.dim(), rng);
      const Vd g = h.gradient(x);
      Vd fd(h.dim()), dg(h.dim());
      for (Index i = 0; i < h.dim(); ++i) {
        const double step = 1e-5 * (1 + std::abs(x(i)));
        Vd xp = x, xm = x;
        xp(i) += step;
        xm(i) -= step;
        fd(i) = (h.value(xp) - h.value(xm)) / (xp(i) - xm(i));
        dg(i) = space.dot(g, Vd(Vd::Unit(h.dim(), i)));
      }
      const double err = (fd - dg).norm() / std::max(1.0, dg.norm());
      worst = std::max(worst, err);
      v.require(err <= 1e-6, name + ": relative error " + num(err));
    }
  }
  if (v.pass) v.detail = std::to_string(hs.size()) + " functions, max relative error " + num(worst);
  return v;
}

// --- 10 ----------------------------------------------------------------------------

Verdict reproducibility() {
  Verdict v;
  for (const char* name : {"lasso_noisy.ini", "multi.ini"}) {
    auto cfg = load(name);
    cfg.seeds.resize(std::min<std::size_t>(cfg.seeds.size(), 2));
    cfg.horizon = std::min<Index>(cfg.horizon, 5000);
    cfg.checkpoints.clear();
    const auto a = run_config(cfg, "repro_a_" + cfg.problem);
    const auto b = run_config(cfg, "repro_b_" + cfg.problem);
    v.require(a.exit_code == 0 && b.exit_code == 0, std::string(name) + ": run failed");
    for (auto seed : cfg.seeds) {
      const std::string f = "trace_seed" + std::to_string(seed) + ".csv";
      const auto x = slurp(a.directory / f), y = slurp(b.directory / f);
      v.require(!x.empty() && x == y, std::string(name) + ": " + f + " differs");
    }
    v.require(slurp(a.directory / "gap.csv") == slurp(b.directory / "gap.csv"), std::string(name) + ": gap.csv differs");
  }
  if (v.pass) v.detail = "traces and gap tables byte-identical";
  return v;
}

}  // namespace

int main() {
  fs::create_directories(PAPC_WORK_DIR);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"operator calculus", operator_calculus},
      {"step-size gate vs dense eigensolver", hypotheses_gate},
      {"deterministic convergence on cls and lasso", deterministic_convergence},
      {"Fejer monotonicity on every zoo problem", fejer_monotone},
      {"gradient-gap summability", gradient_gap},
      {"20-seed noisy lasso convergence", almost_sure_proxy},
      {"ergodic gap bound", ergodic_gap},
      {"product-space equivalence", product_space},
      {"finite-difference gradients", gradient_check},
      {"byte-identical reruns", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failed += !v.pass;
    std::printf("criterion %zu: %s  %s (%s)\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
