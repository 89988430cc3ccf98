#pragma once

#include "papc/monotone.hpp"
#include "papc/schedule.hpp"
#include "papc/stochastic.hpp"

#include <concepts>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace papc {

template <typename O, typename Scalar>
concept GradientOracle = requires(const O& o, const Vec<Scalar>& x, Index n) {
  { o.sample(x, n) } -> std::convertible_to<Vec<Scalar>>;
  { o.mean(x) } -> std::convertible_to<Vec<Scalar>>;
};

/// Inclusion datum: find x in V with 0 in Bx + L* A(Lx) + N_V x.
template <typename Scalar>
struct ProblemSpec {
  CocoerciveMap<Scalar> B;
  MonotoneBlock<Scalar> A;
  LinearMap<Scalar> L;
  OrthoProjector<Scalar> P;
  SpdOperator<Scalar> U;

  const Space<Scalar>& primal() const { return L.domain(); }
  const Space<Scalar>& dual() const { return L.codomain(); }

  void check() const {
    if (B.dim() != primal().dim() || !(P.space() == primal()))
      throw DimensionError("ProblemSpec: B, P and the domain of L disagree");
    if (A.dim() != dual().dim() || !(U.space() == dual()))
      throw DimensionError("ProblemSpec: A, U and the codomain of L disagree");
  }
};

/// Saddle datum: minimize_{x in V} h(x) + g(Lx).
template <typename Scalar>
struct SaddleSpec {
  SmoothFunction<Scalar> h;
  ProxFunction<Scalar> g;
  LinearMap<Scalar> L;
  OrthoProjector<Scalar> P;
  SpdOperator<Scalar> U;

  const Space<Scalar>& primal() const { return L.domain(); }
  const Space<Scalar>& dual() const { return L.codomain(); }

  /// B = grad h, A = dg.
  ProblemSpec<Scalar> to_inclusion() const {
    ProblemSpec<Scalar> spec{CocoerciveMap<Scalar>::gradient(h), MonotoneBlock<Scalar>::subdifferential(g),
                             L, P, U};
    spec.check();
    return spec;
  }
};

template <typename Scalar>
struct PapcState {
  Index n = 0;
  Vec<Scalar> x;
  Vec<Scalar> v;
  Vec<Scalar> p;
  Vec<Scalar> last_r;
};

template <typename Scalar>
PapcState<Scalar> initial_state(const OrthoProjector<Scalar>& projector, const Vec<Scalar>& x0,
                                const Vec<Scalar>& v0) {
  PapcState<Scalar> s;
  s.x = projector.apply(x0);
  s.v = v0;
  s.p = s.x;
  s.last_r = Vec<Scalar>::Zero(x0.size());
  return s;
}

// --- hypotheses ----------------------------------------------------------------

struct Condition {
  std::string name;
  bool passed = true;
  std::string detail;
};

template <typename Scalar>
struct HypothesisCertificate {
  Regime regime = Regime::almost_sure;
  std::vector<Condition> conditions;
  std::optional<TauCertificate<Scalar>> tau;
  /// remarks that do not gate the run
  std::vector<std::string> notes;

  bool passed() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.passed; });
  }

  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (const auto& c : conditions)
      if (!c.passed) out.push_back(c.name + (c.detail.empty() ? "" : ": " + c.detail));
    return out;
  }

  const Condition* find(const std::string& name) const {
    for (const auto& c : conditions)
      if (c.name == name) return &c;
    return nullptr;
  }
};

/// Step-size hypotheses over n = 0..horizon. Monotonicity is non-strict. The
/// almost-sure regime needs (tau U)^{-1} - L P L* positive definite and gamma
/// bounded away from zero; the ergodic regime accepts semidefinite.
template <typename Scalar>
HypothesisCertificate<Scalar> validate_hypotheses(const SpdOperator<Scalar>& u, const LinearMap<Scalar>& l,
                                                  const OrthoProjector<Scalar>& p, Scalar beta,
                                                  const Schedules<Scalar>& sched, Index horizon,
                                                  Regime regime, Scalar margin = Scalar(1e-6)) {
  HypothesisCertificate<Scalar> cert;
  cert.regime = regime;
  auto add = [&](std::string name, bool ok, std::string detail = {}) {
    cert.conditions.push_back(Condition{std::move(name), ok, ok ? std::string() : std::move(detail)});
  };
  auto fmt = [](Scalar v) { return std::to_string(static_cast<double>(v)); };

  bool gamma_pos = true, tau_pos = true, gamma_mono = true, tau_mono = true, capped = true;
  Index first_bad = -1;
  Scalar gamma_min = std::numeric_limits<Scalar>::infinity();
  const Scalar rel = Scalar(1e-15);
  for (Index n = 0; n <= horizon; ++n) {
    const Scalar g = sched.gamma(n), t = sched.tau(n);
    gamma_min = std::min(gamma_min, g);
    if (!(g > 0)) gamma_pos = false;
    if (!(t > 0)) tau_pos = false;
    if (t > sched.tau_cap * (1 + rel)) capped = false;
    if (n < horizon) {
      if (sched.gamma(n + 1) > g * (1 + rel)) {
        if (gamma_mono) first_bad = n;
        gamma_mono = false;
      }
      if (sched.tau(n + 1) < t * (1 - rel)) tau_mono = false;
    }
  }
  add("gamma positive", gamma_pos, "some gamma_n <= 0");
  add("tau positive", tau_pos, "some tau_n <= 0");
  add("gamma non-increasing", gamma_mono, "gamma increases after n = " + std::to_string(first_bad));
  add("tau non-decreasing", tau_mono, "tau decreases over the horizon");
  add("tau within cap", capped, "some tau_n exceeds tau = " + fmt(sched.tau_cap));
  const Scalar g0 = sched.gamma(0);
  add("gamma0 below beta", g0 < beta, "gamma0 exceeds beta (" + fmt(g0) + " >= " + fmt(beta) + ")");
  if (regime == Regime::almost_sure) {
    const bool bounded = gamma_min > 0 && sched.gamma.limit() > 0;
    add("gamma bounded away from zero", bounded, "inf gamma_n is zero");
  }
  const bool strict = regime == Regime::almost_sure;
  cert.tau = validate_tau(u, l, p, sched.tau_cap, strict ? margin : Scalar(0), strict);
  std::string what = strict ? "(tau U)^{-1} - L P L* not positive definite"
                            : "(tau U)^{-1} - L P L* not positive semidefinite";
  if (cert.tau->status == TauStatus::indeterminate) what = "spectral estimate indeterminate";
  add("tau condition", cert.tau->accepted(),
      what + " (tau*lambda = " + fmt(cert.tau->scaled) + ")");
  return cert;
}

template <typename Scalar>
HypothesisCertificate<Scalar> validate_hypotheses(const ProblemSpec<Scalar>& spec, const Schedules<Scalar>& sched,
                                                  Index horizon, Regime regime) {
  return validate_hypotheses(spec.U, spec.L, spec.P, spec.B.beta(), sched, horizon, regime);
}

template <typename Scalar>
HypothesisCertificate<Scalar> validate_hypotheses(const SaddleSpec<Scalar>& spec, const Schedules<Scalar>& sched,
                                                  Index horizon, Regime regime) {
  return validate_hypotheses(spec.U, spec.L, spec.P, spec.h.beta(), sched, horizon, regime);
}

// --- iteration -----------------------------------------------------------------

namespace detail {

template <typename Scalar>
void require_finite(const Vec<Scalar>& v, const char* what, Index n) {
  if (!v.allFinite()) throw DivergenceError(what, n);
}

/// One predictor/corrector sweep. The single oracle sample feeds both primal lines;
/// `dual(c, y)` is the resolvent of c U A^{-1} at y.
template <typename Scalar, typename Oracle, typename DualUpdate>
PapcState<Scalar> primal_dual_step(const PapcState<Scalar>& s, const LinearMap<Scalar>& l,
                                   const OrthoProjector<Scalar>& proj, const SpdOperator<Scalar>& u,
                                   Scalar gamma, Scalar tau, const Oracle& oracle, DualUpdate&& dual) {
  PapcState<Scalar> next;
  next.n = s.n + 1;
  next.last_r = oracle.sample(s.x, s.n);
  require_finite(next.last_r, "r", s.n);
  next.p = proj.apply(s.x - gamma * (l.adjoint_apply(s.v) + next.last_r));
  require_finite(next.p, "p", s.n);
  const Scalar c = tau / gamma;
  next.v = dual(c, Vec<Scalar>(s.v + c * u.apply(l.apply(next.p))));
  require_finite(next.v, "v", s.n);
  next.x = proj.apply(s.x - gamma * (l.adjoint_apply(next.v) + next.last_r));
  require_finite(next.x, "x", s.n);
  return next;
}

}  // namespace detail

/// x_n -> x_{n+1} for the inclusion problem, with dual step J_{(tau/gamma) U A^{-1}}.
template <typename Scalar, GradientOracle<Scalar> Oracle>
PapcState<Scalar> papc_step(const PapcState<Scalar>& state, const ProblemSpec<Scalar>& spec,
                            const Schedules<Scalar>& sched, const Oracle& oracle) {
  return detail::primal_dual_step(state, spec.L, spec.P, spec.U, sched.gamma(state.n), sched.tau(state.n),
                                  oracle, [&](Scalar c, const Vec<Scalar>& y) {
                                    return metric_inverse_resolvent(spec.A, spec.U, c, y);
                                  });
}

/// Saddle variant: dual step prox^{U^{-1}}_{(tau/gamma) g*} by the Moreau route.
template <typename Scalar, GradientOracle<Scalar> Oracle>
PapcState<Scalar> saddle_step(const PapcState<Scalar>& state, const SaddleSpec<Scalar>& spec,
                              const Schedules<Scalar>& sched, const Oracle& oracle) {
  return detail::primal_dual_step(state, spec.L, spec.P, spec.U, sched.gamma(state.n), sched.tau(state.n),
                                  oracle, [&](Scalar c, const Vec<Scalar>& y) {
                                    return metric_conjugate_prox(spec.g, spec.U, c, y);
                                  });
}

// --- ergodic averages ----------------------------------------------------------

template <typename Scalar>
struct ErgodicAccumulator {
  Scalar weight_sum = 0;
  Vec<Scalar> x_avg;
  Vec<Scalar> v_avg;
};

/// Adds gamma_n-weighted (x_{n+1}, v_{n+1}) to the running averages.
template <typename Scalar>
ErgodicAccumulator<Scalar> ergodic_update(ErgodicAccumulator<Scalar> acc, Scalar gamma_n,
                                          const Vec<Scalar>& x_next, const Vec<Scalar>& v_next) {
  if (!(gamma_n > 0)) throw std::invalid_argument("ergodic_update: gamma_n must be positive");
  acc.weight_sum += gamma_n;
  if (acc.x_avg.size() == 0) {
    acc.x_avg = x_next;
    acc.v_avg = v_next;
    return acc;
  }
  const Scalar w = gamma_n / acc.weight_sum;
  acc.x_avg += w * (x_next - acc.x_avg);
  acc.v_avg += w * (v_next - acc.v_avg);
  return acc;
}

// --- driver ----------------------------------------------------------------------

template <typename Scalar>
struct TraceRow {
  Index n = 0;
  Scalar gamma = 0;
  Scalar tau = 0;
  Vec<Scalar> x;
  Vec<Scalar> v;
};

template <typename Scalar>
struct Checkpoint {
  /// averages over n = 0..N of (x_{n+1}, v_{n+1})
  Index N = 0;
  Scalar sum_gamma = 0;
  Vec<Scalar> x_avg;
  Vec<Scalar> v_avg;
};

template <typename Scalar>
struct RunRecord {
  std::vector<TraceRow<Scalar>> trace;
  Index stride = 1;
  PapcState<Scalar> terminal;
  std::vector<Checkpoint<Scalar>> checkpoints;
  /// sum_n gamma_n^2 ||r_n - B x_n||^2 along this path
  Scalar noise_energy = 0;
  std::optional<std::string> failure;

  bool ok() const { return !failure.has_value(); }
};

template <typename Scalar>
using StepCallback = std::function<void(Index, const PapcState<Scalar>&, Scalar, Scalar)>;

template <typename Scalar>
struct RunOptions {
  Index horizon = 1000;
  /// N values at which ergodic averages are recorded (sorted or not)
  std::vector<Index> checkpoints;
  /// 0 picks full traces up to 1e5 steps and ceil(horizon / 1e5) above
  Index stride = 0;
  bool keep_trace = true;
  std::vector<StepCallback<Scalar>> callbacks;
};

inline Index default_stride(Index horizon) {
  constexpr Index full = 100000;
  return horizon <= full ? 1 : (horizon + full - 1) / full;
}

namespace detail {

template <typename Scalar, typename Step, typename Mean>
RunRecord<Scalar> run_loop(PapcState<Scalar> state, const Schedules<Scalar>& sched,
                           const RunOptions<Scalar>& opts, Step&& step, Mean&& mean) {
  RunRecord<Scalar> rec;
  rec.stride = opts.stride > 0 ? opts.stride : default_stride(opts.horizon);
  std::vector<Index> cps = opts.checkpoints;
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  auto next_cp = cps.begin();
  ErgodicAccumulator<Scalar> acc;

  auto observe = [&](const PapcState<Scalar>& s) {
    const Scalar g = sched.gamma(s.n), t = sched.tau(s.n);
    for (const auto& cb : opts.callbacks) cb(s.n, s, g, t);
    if (opts.keep_trace && (s.n % rec.stride == 0 || s.n == opts.horizon))
      rec.trace.push_back(TraceRow<Scalar>{s.n, g, t, s.x, s.v});
  };

  observe(state);
  try {
    for (Index n = 0; n < opts.horizon; ++n) {
      const Scalar g = sched.gamma(n);
      PapcState<Scalar> next = step(state);
      rec.noise_energy += g * g * (next.last_r - mean(state.x)).squaredNorm();
      acc = ergodic_update(std::move(acc), g, next.x, next.v);
      while (next_cp != cps.end() && *next_cp < n) ++next_cp;
      if (next_cp != cps.end() && *next_cp == n) {
        rec.checkpoints.push_back(Checkpoint<Scalar>{n, acc.weight_sum, acc.x_avg, acc.v_avg});
        ++next_cp;
      }
      state = std::move(next);
      observe(state);
    }
  } catch (const DivergenceError& e) {
    rec.failure = e.what();
  }
  rec.terminal = std::move(state);
  return rec;
}

}  // namespace detail

/// Iterates papc_step for `horizon` steps from (P_V x0, v0). A divergence stops the
/// run and is reported in RunRecord::failure with the partial trace kept.
template <typename Scalar, GradientOracle<Scalar> Oracle>
RunRecord<Scalar> run(const ProblemSpec<Scalar>& spec, const Schedules<Scalar>& sched, const Oracle& oracle,
                      const Vec<Scalar>& x0, const Vec<Scalar>& v0, const RunOptions<Scalar>& opts) {
  spec.check();
  return detail::run_loop(
      initial_state(spec.P, x0, v0), sched, opts,
      [&](const PapcState<Scalar>& s) { return papc_step(s, spec, sched, oracle); },
      [&](const Vec<Scalar>& x) { return oracle.mean(x); });
}

template <typename Scalar, GradientOracle<Scalar> Oracle>
RunRecord<Scalar> run(const SaddleSpec<Scalar>& spec, const Schedules<Scalar>& sched, const Oracle& oracle,
                      const Vec<Scalar>& x0, const Vec<Scalar>& v0, const RunOptions<Scalar>& opts) {
  return detail::run_loop(
      initial_state(spec.P, x0, v0), sched, opts,
      [&](const PapcState<Scalar>& s) { return saddle_step(s, spec, sched, oracle); },
      [&](const Vec<Scalar>& x) { return oracle.mean(x); });
}

}  // namespace papc
