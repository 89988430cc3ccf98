#pragma once

#include "papc/solver.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace papc {

template <typename Scalar>
struct KktResidual {
  Scalar primal = 0;
  Scalar dual = 0;

  Scalar max() const { return std::max(primal, dual); }
};

/// primal = ||x - P x|| + ||P(Bx + L* v)||, dual = ||v - J_{A^{-1}}(v + Lx)||.
template <typename Scalar>
KktResidual<Scalar> kkt_residual(const Vec<Scalar>& x, const Vec<Scalar>& v, const ProblemSpec<Scalar>& spec) {
  const auto& h = spec.primal();
  const auto& g = spec.dual();
  KktResidual<Scalar> r;
  r.primal = h.norm(x - spec.P.apply(x)) + h.norm(spec.P.apply(spec.B.apply(x) + spec.L.adjoint_apply(v)));
  r.dual = g.norm(v - inverse_resolvent(spec.A, Scalar(1), Vec<Scalar>(v + spec.L.apply(x))));
  return r;
}

/// K(x, v) = h(x) + i_V(x) + <Lx, v> - g*(v)
template <typename Scalar>
struct SaddleFunction {
  SmoothFunction<Scalar> h;
  ProxFunction<Scalar> g;
  LinearMap<Scalar> L;
  OrthoProjector<Scalar> P;

  static SaddleFunction from(const SaddleSpec<Scalar>& s) { return SaddleFunction{s.h, s.g, s.L, s.P}; }
};

template <typename Scalar>
ExtendedReal<Scalar> saddle_value(const SaddleFunction<Scalar>& k, const Vec<Scalar>& x, const Vec<Scalar>& v) {
  using E = ExtendedReal<Scalar>;
  const auto& h = k.L.domain();
  const bool in_v = h.norm(x - k.P.apply(x)) <= Scalar(1e-10) * (1 + h.norm(x));
  const E gstar = k.g.conjugate_value(v);
  if (!in_v && gstar.is_plus_infinity())
    throw IndeterminateValue("saddle_value: x outside V and v outside dom g*");
  if (!in_v) return E::plus_infinity();
  if (gstar.is_plus_infinity()) return E::minus_infinity();
  return E(k.h.value(x) + k.L.codomain().dot(k.L.apply(x), v) - gstar.value());
}

// --- gap bound -------------------------------------------------------------------

/// c(x, v) = ||x_0 - x||^2 + gamma_0^2 ||v_0 - v||^2_{G_0}
///           + 2((tau gamma_0 ||U||)^{1/2} ||L||^2 + 1) c_0,
/// with G_0 = (tau_0 U)^{-1} - L P L*.
template <typename Scalar>
class GapConstant {
 public:
  GapConstant(const SaddleSpec<Scalar>& spec, const Schedules<Scalar>& sched, const Vec<Scalar>& x0,
              const Vec<Scalar>& v0, Scalar c0)
      : spec_(spec), sched_(sched), x0_(spec.P.apply(x0)), v0_(v0), c0_(c0),
        u_norm_(spec.U.norm()), l_norm_(spec.L.norm()) {
    if (c0 < 0) throw std::invalid_argument("GapConstant: c0 must be nonnegative");
  }

  Scalar c0() const { return c0_; }

  /// gamma_n ((tau_n gamma_n ||U||)^{1/2} ||L||^2 + 1)
  Scalar sigma(Index n) const {
    const Scalar g = sched_.gamma(n);
    return g * (std::sqrt(sched_.tau(n) * g * u_norm_) * l_norm_ * l_norm_ + 1);
  }

  Scalar operator()(const Vec<Scalar>& x, const Vec<Scalar>& v) const {
    const Scalar g0 = sched_.gamma(0);
    const Scalar primal = spec_.primal().norm_sq(x0_ - x);
    const Scalar dual = weighted_norm_sq(Vec<Scalar>(v0_ - v), spec_.U, sched_.tau(0), g0, spec_.L, spec_.P);
    const Scalar noise = 2 * (std::sqrt(sched_.tau_cap * g0 * u_norm_) * l_norm_ * l_norm_ + 1) * c0_;
    return primal + dual + noise;
  }

 private:
  SaddleSpec<Scalar> spec_;
  Schedules<Scalar> sched_;
  Vec<Scalar> x0_;
  Vec<Scalar> v0_;
  Scalar c0_;
  Scalar u_norm_;
  Scalar l_norm_;
};

/// c_0 = sum gamma_n^2 E||r_n - grad h(x_n)||^2 for an additive oracle with the
/// given per-coordinate variances.
template <typename Scalar>
Scalar c0_from_schedule(const SummabilityReport<Scalar>& report, Index dim) {
  return report.weighted_total() * Scalar(dim);
}

template <typename Scalar>
struct GapRow {
  Index N = 0;
  Scalar sum_gamma = 0;
  Scalar gap = 0;
  Scalar bound = 0;
  /// K was infinite at this checkpoint; gap is meaningless
  bool flagged = false;
};

/// gap_N = K(x~_N, v) - K(x, v~_N) against bound_N = c(x, v) / (2 sum_{n <= N} gamma_n).
template <typename Scalar>
std::vector<GapRow<Scalar>> gap_and_bound(const RunRecord<Scalar>& record, const SaddleFunction<Scalar>& k,
                                          const Vec<Scalar>& x_ref, const Vec<Scalar>& v_ref,
                                          const GapConstant<Scalar>& gapc) {
  const Scalar c = gapc(x_ref, v_ref);
  std::vector<GapRow<Scalar>> out;
  for (const auto& cp : record.checkpoints) {
    GapRow<Scalar> row;
    row.N = cp.N;
    row.sum_gamma = cp.sum_gamma;
    row.bound = c / (2 * cp.sum_gamma);
    try {
      const auto a = saddle_value(k, cp.x_avg, v_ref);
      const auto b = saddle_value(k, x_ref, cp.v_avg);
      if (a.is_finite() && b.is_finite()) {
        row.gap = a.value() - b.value();
      } else {
        row.flagged = true;
        row.gap = std::numeric_limits<Scalar>::quiet_NaN();
      }
    } catch (const IndeterminateValue&) {
      row.flagged = true;
      row.gap = std::numeric_limits<Scalar>::quiet_NaN();
    }
    out.push_back(row);
  }
  return out;
}

template <typename Scalar>
struct AveragedGapRow {
  Index N = 0;
  Scalar mean = 0;
  Scalar std_error = 0;
  Scalar bound = 0;
  int samples = 0;

  bool within_bound() const { return mean <= bound + 2 * std_error; }
};

/// Seed average of per-seed gap tables sharing the same checkpoints.
template <typename Scalar>
std::vector<AveragedGapRow<Scalar>> average_gaps(const std::vector<std::vector<GapRow<Scalar>>>& tables) {
  if (tables.empty()) throw std::invalid_argument("average_gaps: no tables");
  const std::size_t rows = tables.front().size();
  std::vector<AveragedGapRow<Scalar>> out(rows);
  for (std::size_t j = 0; j < rows; ++j) {
    Scalar sum = 0, sum_sq = 0;
    int cnt = 0;
    for (const auto& t : tables) {
      if (t.size() != rows || t[j].N != tables.front()[j].N)
        throw std::invalid_argument("average_gaps: tables have different checkpoints");
      if (t[j].flagged) continue;
      sum += t[j].gap;
      sum_sq += t[j].gap * t[j].gap;
      ++cnt;
      out[j].bound = std::max(out[j].bound, t[j].bound);
    }
    out[j].N = tables.front()[j].N;
    out[j].samples = cnt;
    if (cnt > 0) out[j].mean = sum / cnt;
    if (cnt > 1) {
      const Scalar var = std::max(Scalar(0), (sum_sq - cnt * out[j].mean * out[j].mean) / (cnt - 1));
      out[j].std_error = std::sqrt(var / cnt);
    }
  }
  return out;
}

template <typename Scalar>
struct EpsilonSaddle {
  /// first checkpoint whose sup-gap over the saddle set is at most eps
  std::optional<Index> observed;
  /// first checkpoint whose bound c / (2 sum gamma) is at most eps, for the largest c
  std::optional<Index> certified;

  bool reached() const { return observed.has_value(); }
};

/// One gap table per known saddle point, all on the same checkpoints.
template <typename Scalar>
EpsilonSaddle<Scalar> epsilon_saddle_check(const std::vector<std::vector<GapRow<Scalar>>>& tables, Scalar eps) {
  if (tables.empty()) throw std::invalid_argument("epsilon_saddle_check: empty saddle set");
  EpsilonSaddle<Scalar> out;
  if (!(eps > 0)) return out;
  const std::size_t rows = tables.front().size();
  for (std::size_t j = 0; j < rows; ++j) {
    Scalar sup_gap = -std::numeric_limits<Scalar>::infinity();
    Scalar sup_bound = 0;
    bool flagged = false;
    for (const auto& t : tables) {
      if (t.size() != rows) throw std::invalid_argument("epsilon_saddle_check: tables differ in length");
      flagged = flagged || t[j].flagged;
      sup_gap = std::max(sup_gap, t[j].gap);
      sup_bound = std::max(sup_bound, t[j].bound);
    }
    const Index n = tables.front()[j].N;
    if (!out.observed && !flagged && sup_gap <= eps) out.observed = n;
    if (!out.certified && sup_bound <= eps) out.certified = n;
  }
  return out;
}

// --- Fejer quantity ----------------------------------------------------------------

enum class FejerMode { deterministic, stochastic };

template <typename Scalar>
struct FejerSeries {
  std::vector<Index> n;
  std::vector<Scalar> phi;
  /// set only for certified deterministic runs
  std::optional<bool> monotone;
  /// largest Phi_{k+1} - Phi_k - 1e-10 (1 + Phi_0) over consecutive rows
  Scalar worst_excess = -std::numeric_limits<Scalar>::infinity();
  std::string note;
};

/// Phi_n = ||x_n - x||^2 + ||v_n - v||^2_{R_n} over the recorded trace.
template <typename Scalar>
FejerSeries<Scalar> fejer_tracker(const RunRecord<Scalar>& record, const Vec<Scalar>& x_ref,
                                  const Vec<Scalar>& v_ref, const SpdOperator<Scalar>& u,
                                  const LinearMap<Scalar>& l, const OrthoProjector<Scalar>& p,
                                  const HypothesisCertificate<Scalar>* certificate, FejerMode mode) {
  FejerSeries<Scalar> out;
  const auto& h = l.domain();
  for (const auto& row : record.trace) {
    out.n.push_back(row.n);
    out.phi.push_back(h.norm_sq(row.x - x_ref) +
                      weighted_norm_sq(Vec<Scalar>(row.v - v_ref), u, row.tau, row.gamma, l, p));
  }
  if (mode == FejerMode::stochastic) {
    out.note = "stochastic run: reported only";
    return out;
  }
  if (!certificate || !certificate->passed()) {
    out.note = "no step-size certificate: monotonicity not asserted";
    return out;
  }
  if (out.phi.empty()) return out;
  const Scalar slack = Scalar(1e-10) * (1 + out.phi.front());
  for (std::size_t k = 1; k < out.phi.size(); ++k)
    out.worst_excess = std::max(out.worst_excess, out.phi[k] - out.phi[k - 1] - slack);
  out.monotone = out.phi.size() < 2 || out.worst_excess <= 0;
  return out;
}

/// Partial sums sum_{k <= n} ||B x_k - B x||^2, sampled on the trace rows of a run.
template <typename Scalar>
class GradientGapTracker {
 public:
  GradientGapTracker(CocoerciveMap<Scalar> b, Vec<Scalar> x_ref, Index horizon, Index stride)
      : b_(std::move(b)), bx_ref_(b_.apply(x_ref)), horizon_(horizon), stride_(stride) {}

  StepCallback<Scalar> callback() {
    return [this](Index n, const PapcState<Scalar>& s, Scalar, Scalar) {
      total_ += (b_.apply(s.x) - bx_ref_).squaredNorm();
      if (n % stride_ == 0 || n == horizon_) rows_.emplace_back(n, total_);
    };
  }

  const std::vector<std::pair<Index, Scalar>>& rows() const { return rows_; }
  Scalar total() const { return total_; }

  /// (S_N - S_{M}) / S_N with M the last row at or before 0.9 N
  Scalar last_decile_fraction() const {
    if (rows_.empty() || total_ == 0) return Scalar(0);
    const Index cut = rows_.back().first - rows_.back().first / 10;
    Scalar at_cut = 0;
    for (const auto& [n, s] : rows_)
      if (n <= cut) at_cut = s;
    return (total_ - at_cut) / total_;
  }

 private:
  CocoerciveMap<Scalar> b_;
  Vec<Scalar> bx_ref_;
  Index horizon_;
  Index stride_;
  Scalar total_ = 0;
  std::vector<std::pair<Index, Scalar>> rows_;
};

// --- rates -----------------------------------------------------------------------

/// Least-squares slope of log(value) against log(N) over N in [lo, hi]. Nonpositive
/// values and N are dropped; fewer than 10 points left is an error.
template <typename Scalar>
Scalar rate_fit(const std::vector<std::pair<Scalar, Scalar>>& series, Scalar lo, Scalar hi) {
  std::vector<Scalar> xs, ys;
  for (const auto& [n, value] : series) {
    if (n < lo || n > hi || !(n > 0) || !(value > 0) || !std::isfinite(value)) continue;
    xs.push_back(std::log(n));
    ys.push_back(std::log(value));
  }
  if (xs.size() < 10) throw std::invalid_argument("rate_fit: fewer than 10 positive points in window");
  const Scalar k = static_cast<Scalar>(xs.size());
  const Scalar mx = std::accumulate(xs.begin(), xs.end(), Scalar(0)) / k;
  const Scalar my = std::accumulate(ys.begin(), ys.end(), Scalar(0)) / k;
  Scalar sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0) throw std::invalid_argument("rate_fit: window spans a single N");
  return sxy / sxx;
}

/// Log-spaced checkpoints 0, 1, ... up to horizon - 1, about `per_decade` per decade.
inline std::vector<Index> log_checkpoints(Index horizon, int per_decade = 20) {
  std::vector<Index> out{0};
  if (horizon <= 1) return out;
  const double step = std::pow(10.0, 1.0 / per_decade);
  double t = 1.0;
  while (static_cast<Index>(t) < horizon) {
    const Index n = static_cast<Index>(t);
    if (n > out.back()) out.push_back(n);
    t *= step;
  }
  if (out.back() != horizon - 1) out.push_back(horizon - 1);
  return out;
}

}  // namespace papc
