#pragma once

#include "papc/solver.hpp"

#include <variant>

namespace papc {

/// One composite term: A_i (or g_i with A_i = dg_i), L_i and the dual metric U_i.
template <typename Scalar>
struct CompositeBlock {
  std::variant<MonotoneBlock<Scalar>, ProxFunction<Scalar>> op;
  LinearMap<Scalar> L;
  SpdOperator<Scalar> U;

  Index dual_dim() const { return L.codomain().dim(); }

  MonotoneBlock<Scalar> monotone() const {
    if (const auto* g = std::get_if<ProxFunction<Scalar>>(&op)) return MonotoneBlock<Scalar>::subdifferential(*g);
    return std::get<MonotoneBlock<Scalar>>(op);
  }

  const ProxFunction<Scalar>* function() const { return std::get_if<ProxFunction<Scalar>>(&op); }
};

/// 0 in sum_i w_i L_i* A_i(L_i x) + C x.
template <typename Scalar>
struct CompositeProblem {
  Vec<Scalar> weights;
  CocoerciveMap<Scalar> C;
  std::vector<CompositeBlock<Scalar>> blocks;

  Index m() const { return static_cast<Index>(blocks.size()); }
  Index primal_dim() const { return C.dim(); }
  Scalar mu() const { return C.beta(); }

  std::vector<Index> dual_dims() const {
    std::vector<Index> out;
    for (const auto& b : blocks) out.push_back(b.dual_dim());
    return out;
  }

  Index dual_dim() const {
    Index total = 0;
    for (const auto& b : blocks) total += b.dual_dim();
    return total;
  }

  void check() const {
    if (blocks.empty()) throw std::invalid_argument("CompositeProblem needs at least one block");
    if (weights.size() != m()) throw DimensionError("CompositeProblem: one weight per block");
    if ((weights.array() < 0).any() || (weights.array() > 1).any())
      throw std::invalid_argument("CompositeProblem: weights must lie in [0, 1]");
    if (std::abs(weights.sum() - Scalar(1)) > Scalar(1e-12))
      throw std::invalid_argument("CompositeProblem: weights must sum to 1");
    for (Index i = 0; i < m(); ++i) {
      const auto& b = blocks[static_cast<std::size_t>(i)];
      const std::string tag = "block " + std::to_string(i);
      if (b.L.domain().dim() != primal_dim()) throw DimensionError(tag + ": L_i domain differs from C");
      if (b.monotone().dim() != b.dual_dim()) throw DimensionError(tag + ": A_i and L_i codomain differ");
      if (b.U.dim() != b.dual_dim()) throw DimensionError(tag + ": U_i and L_i codomain differ");
      if (!(b.L.norm() > 0)) throw std::invalid_argument(tag + ": L_i must be nonzero");
    }
  }
};

// --- lifting ----------------------------------------------------------------

/// Replicates one base-space sample across the m copies of the diagonal.
template <typename Scalar, GradientOracle<Scalar> Oracle>
class ReplicatedOracle {
 public:
  ReplicatedOracle(const Oracle& base, Index m, Index block_dim) : base_(&base), m_(m), d_(block_dim) {}

  Vec<Scalar> sample(const Vec<Scalar>& x, Index n) const {
    return replicate(base_->sample(Vec<Scalar>(x.head(d_)), n));
  }

  Vec<Scalar> mean(const Vec<Scalar>& x) const {
    Vec<Scalar> out(m_ * d_);
    for (Index i = 0; i < m_; ++i) out.segment(i * d_, d_) = base_->mean(Vec<Scalar>(x.segment(i * d_, d_)));
    return out;
  }

  Vec<Scalar> replicate(const Vec<Scalar>& r) const { return r.replicate(m_, 1); }

 private:
  const Oracle* base_;
  Index m_;
  Index d_;
};

template <typename Scalar>
struct LiftedSpec {
  ProblemSpec<Scalar> spec;
  Index m = 1;
  Index block_dim = 0;

  /// x -> (x, ..., x)
  Vec<Scalar> lift_primal(const Vec<Scalar>& x) const { return x.replicate(m, 1); }
  /// any diagonal coordinate; the first is used
  Vec<Scalar> read_primal(const Vec<Scalar>& xx) const { return xx.head(block_dim); }
  Vec<Scalar> read_primal(const Vec<Scalar>& xx, Index copy) const { return xx.segment(copy * block_dim, block_dim); }

  template <GradientOracle<Scalar> Oracle>
  ReplicatedOracle<Scalar, Oracle> oracle(const Oracle& base) const {
    return ReplicatedOracle<Scalar, Oracle>(base, m, block_dim);
  }
};

/// Product-space problem on H^m (w-weighted inner product) with V the diagonal,
/// block-diagonal A, C, L and U. Needs every w_i > 0 and diagonal U_i.
template <typename Scalar>
LiftedSpec<Scalar> lift(const CompositeProblem<Scalar>& cp) {
  cp.check();
  if ((cp.weights.array() <= 0).any())
    throw std::invalid_argument("lift: zero weights give a degenerate inner product; drop those blocks");
  const Index m = cp.m(), d = cp.primal_dim();
  auto proj = OrthoProjector<Scalar>::averaging(cp.weights, d);
  const Space<Scalar> primal = proj.space();

  const Index k = cp.dual_dim();
  Vec<Scalar> dual_w(k), u_diag(k);
  std::vector<LinearMap<Scalar>> ls;
  std::vector<MonotoneBlock<Scalar>> as;
  Index off = 0;
  for (Index i = 0; i < m; ++i) {
    const auto& b = cp.blocks[static_cast<std::size_t>(i)];
    if (!b.U.is_diagonal()) throw UnsupportedMetric("lift: U_i must be diagonal");
    const Index ki = b.dual_dim();
    dual_w.segment(off, ki).setConstant(cp.weights(i));
    u_diag.segment(off, ki) = b.U.diagonal();
    ls.push_back(b.L);
    as.push_back(b.monotone());
    off += ki;
  }
  const Space<Scalar> dual(k, dual_w);

  auto c = cp.C;
  CocoerciveMap<Scalar> bold_c(
      m * d,
      [c, m, d](const Vec<Scalar>& x) -> Vec<Scalar> {
        Vec<Scalar> out(m * d);
        for (Index i = 0; i < m; ++i) out.segment(i * d, d) = c.apply(Vec<Scalar>(x.segment(i * d, d)));
        return out;
      },
      cp.mu());

  LiftedSpec<Scalar> out{ProblemSpec<Scalar>{std::move(bold_c), MonotoneBlock<Scalar>::product(std::move(as)),
                                             LinearMap<Scalar>::block_diagonal(std::move(ls), primal, dual),
                                             std::move(proj), SpdOperator<Scalar>::diagonal(dual, u_diag)},
                         m, d};
  out.spec.check();
  return out;
}

// --- hypotheses ----------------------------------------------------------------

template <typename Scalar>
struct CompositeCertificate {
  HypothesisCertificate<Scalar> hypotheses;
  std::vector<TauCertificate<Scalar>> blockwise;
  /// set when the blockwise and lifted step-size tests disagree
  std::optional<std::string> discrepancy;

  bool passed() const { return hypotheses.passed(); }
};

/// Step-size hypotheses on the lifted operators plus the blockwise test
/// (tau U_i)^{-1} - L_i L_i* > 0; a run needs both.
template <typename Scalar>
CompositeCertificate<Scalar> validate_composite(const CompositeProblem<Scalar>& cp, const Schedules<Scalar>& sched,
                                                Index horizon, Regime regime, Scalar margin = Scalar(1e-6)) {
  const auto lifted = lift(cp);
  CompositeCertificate<Scalar> cert;
  cert.hypotheses =
      validate_hypotheses(lifted.spec.U, lifted.spec.L, lifted.spec.P, cp.mu(), sched, horizon, regime, margin);
  const bool strict = regime == Regime::almost_sure;
  bool all_blocks = true;
  std::string failing;
  for (Index i = 0; i < cp.m(); ++i) {
    const auto& b = cp.blocks[static_cast<std::size_t>(i)];
    cert.blockwise.push_back(validate_tau(b.U, b.L, OrthoProjector<Scalar>::full(b.L.domain()), sched.tau_cap,
                                          strict ? margin : Scalar(0), strict));
    if (!cert.blockwise.back().accepted()) {
      all_blocks = false;
      failing += (failing.empty() ? "" : ", ") + std::to_string(i);
    }
  }
  cert.hypotheses.conditions.push_back(
      Condition{"blockwise tau condition", all_blocks,
                all_blocks ? std::string() : "(tau U_i)^{-1} - L_i L_i* fails on block " + failing});
  const bool lifted_ok = cert.hypotheses.tau && cert.hypotheses.tau->accepted();
  if (lifted_ok != all_blocks)
    cert.discrepancy = std::string("blockwise test ") + (all_blocks ? "accepts" : "rejects") +
                       " but lifted test " + (lifted_ok ? "accepts" : "rejects");
  return cert;
}

// --- flat iteration --------------------------------------------------------------

namespace detail {

/// p = x - gamma sum_i w_i (L_i* v_i + r), then per-block duals, then the correction.
template <typename Scalar, typename Oracle, typename DualUpdate>
PapcState<Scalar> composite_sweep(const PapcState<Scalar>& s, const CompositeProblem<Scalar>& cp, Scalar gamma,
                                  Scalar tau, const Oracle& oracle, DualUpdate&& dual) {
  const Index d = cp.primal_dim();
  auto forward = [&](const Vec<Scalar>& v, const Vec<Scalar>& r) {
    Vec<Scalar> acc = Vec<Scalar>::Zero(d);
    Index off = 0;
    for (Index i = 0; i < cp.m(); ++i) {
      const auto& b = cp.blocks[static_cast<std::size_t>(i)];
      acc += cp.weights(i) * (b.L.adjoint_apply(Vec<Scalar>(v.segment(off, b.dual_dim()))) + r);
      off += b.dual_dim();
    }
    return Vec<Scalar>(s.x - gamma * acc);
  };

  PapcState<Scalar> next;
  next.n = s.n + 1;
  next.last_r = oracle.sample(s.x, s.n);
  require_finite(next.last_r, "r", s.n);
  next.p = forward(s.v, next.last_r);
  require_finite(next.p, "p", s.n);
  const Scalar c = tau / gamma;
  next.v.resize(s.v.size());
  Index off = 0;
  for (Index i = 0; i < cp.m(); ++i) {
    const auto& b = cp.blocks[static_cast<std::size_t>(i)];
    const Index k = b.dual_dim();
    const Vec<Scalar> y = s.v.segment(off, k) + c * b.U.apply(b.L.apply(next.p));
    next.v.segment(off, k) = dual(b, c, y);
    off += k;
  }
  require_finite(next.v, "v", s.n);
  next.x = forward(next.v, next.last_r);
  require_finite(next.x, "x", s.n);
  return next;
}

}  // namespace detail

/// One flat step on H x G_1 x ... x G_m; the duals are stacked in state.v.
template <typename Scalar, GradientOracle<Scalar> Oracle>
PapcState<Scalar> composite_step(const PapcState<Scalar>& state, const CompositeProblem<Scalar>& cp,
                                 const Schedules<Scalar>& sched, const Oracle& oracle) {
  return detail::composite_sweep(state, cp, sched.gamma(state.n), sched.tau(state.n), oracle,
                                 [](const CompositeBlock<Scalar>& b, Scalar c, const Vec<Scalar>& y) {
                                   return metric_inverse_resolvent(b.monotone(), b.U, c, y);
                                 });
}

/// composite_step for A_i = dg_i with the dual line as a conjugate prox.
template <typename Scalar, GradientOracle<Scalar> Oracle>
PapcState<Scalar> structured_min_step(const PapcState<Scalar>& state, const CompositeProblem<Scalar>& cp,
                                      const Schedules<Scalar>& sched, const Oracle& oracle) {
  return detail::composite_sweep(state, cp, sched.gamma(state.n), sched.tau(state.n), oracle,
                                 [](const CompositeBlock<Scalar>& b, Scalar c, const Vec<Scalar>& y) {
                                   const auto* g = b.function();
                                   if (!g) throw std::invalid_argument("structured_min_step: block has no g_i");
                                   return metric_conjugate_prox(*g, b.U, c, y);
                                 });
}

template <typename Scalar, GradientOracle<Scalar> Oracle>
RunRecord<Scalar> run(const CompositeProblem<Scalar>& cp, const Schedules<Scalar>& sched, const Oracle& oracle,
                      const Vec<Scalar>& x0, const Vec<Scalar>& v0, const RunOptions<Scalar>& opts) {
  cp.check();
  PapcState<Scalar> s0;
  s0.x = x0;
  s0.v = v0;
  s0.p = x0;
  s0.last_r = Vec<Scalar>::Zero(x0.size());
  const bool all_g = std::all_of(cp.blocks.begin(), cp.blocks.end(), [](const auto& b) { return b.function(); });
  return detail::run_loop(
      std::move(s0), sched, opts,
      [&](const PapcState<Scalar>& s) {
        return all_g ? structured_min_step(s, cp, sched, oracle) : composite_step(s, cp, sched, oracle);
      },
      [&](const Vec<Scalar>& x) { return oracle.mean(x); });
}

// --- checks ----------------------------------------------------------------------

template <typename Scalar>
struct EquivalenceReport {
  Scalar max_deviation = 0;
  /// largest |coordinate| seen on either path
  Scalar magnitude = 0;
  Index steps = 0;

  Scalar relative() const { return max_deviation / (1 + magnitude); }
};

/// Runs the flat step on `flat` and the lifted step on lift(`lifted`) in lockstep from
/// (x0, v0), both driven by `oracle`. Passing different problems is a negative control.
template <typename Scalar, GradientOracle<Scalar> Oracle>
EquivalenceReport<Scalar> lift_flat_equivalence(const CompositeProblem<Scalar>& flat,
                                                const CompositeProblem<Scalar>& lifted_problem,
                                                const Schedules<Scalar>& sched, const Oracle& oracle, Index steps,
                                                const Vec<Scalar>& x0, const Vec<Scalar>& v0) {
  const auto lifted = lift(lifted_problem);
  const auto rep_oracle = lifted.oracle(oracle);
  PapcState<Scalar> a;
  a.x = x0;
  a.v = v0;
  auto b = initial_state(lifted.spec.P, lifted.lift_primal(x0), v0);
  EquivalenceReport<Scalar> rep;
  auto compare = [&] {
    for (Index i = 0; i < lifted.m; ++i)
      rep.max_deviation = std::max(rep.max_deviation, (a.x - lifted.read_primal(b.x, i)).cwiseAbs().maxCoeff());
    rep.max_deviation = std::max(rep.max_deviation, (a.v - b.v).cwiseAbs().maxCoeff());
    rep.magnitude = std::max({rep.magnitude, a.x.cwiseAbs().maxCoeff(), a.v.cwiseAbs().maxCoeff(),
                              b.x.cwiseAbs().maxCoeff(), b.v.cwiseAbs().maxCoeff()});
  };
  compare();
  for (Index n = 0; n < steps; ++n) {
    a = composite_step(a, flat, sched, oracle);
    b = papc_step(b, lifted.spec, sched, rep_oracle);
    compare();
    ++rep.steps;
  }
  return rep;
}

template <typename Scalar, GradientOracle<Scalar> Oracle>
EquivalenceReport<Scalar> lift_flat_equivalence(const CompositeProblem<Scalar>& cp, const Schedules<Scalar>& sched,
                                                const Oracle& oracle, Index steps) {
  return lift_flat_equivalence(cp, cp, sched, oracle, steps, Vec<Scalar>(Vec<Scalar>::Zero(cp.primal_dim())),
                               Vec<Scalar>(Vec<Scalar>::Zero(cp.dual_dim())));
}

template <typename Scalar>
struct CompositeResiduals {
  /// ||sum_i w_i L_i* v_i + C x||
  Scalar stationarity = 0;
  /// ||v_i - J_{A_i^{-1}}(v_i + L_i x)|| per block
  std::vector<Scalar> block;

  Scalar max_block() const { return block.empty() ? Scalar(0) : *std::max_element(block.begin(), block.end()); }
};

template <typename Scalar>
CompositeResiduals<Scalar> composite_residuals(const CompositeProblem<Scalar>& cp, const Vec<Scalar>& x,
                                               const Vec<Scalar>& v) {
  CompositeResiduals<Scalar> out;
  Vec<Scalar> acc = cp.C.apply(x);
  Index off = 0;
  for (Index i = 0; i < cp.m(); ++i) {
    const auto& b = cp.blocks[static_cast<std::size_t>(i)];
    const Index k = b.dual_dim();
    const Vec<Scalar> vi = v.segment(off, k);
    acc += cp.weights(i) * b.L.adjoint_apply(vi);
    out.block.push_back((vi - inverse_resolvent(b.monotone(), Scalar(1), Vec<Scalar>(vi + b.L.apply(x)))).norm());
    off += k;
  }
  out.stationarity = acc.norm();
  return out;
}

}  // namespace papc
