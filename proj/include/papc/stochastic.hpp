#pragma once

#include "papc/monotone.hpp"
#include "papc/schedule.hpp"

#include <cstdint>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

namespace papc {

/// Per-coordinate noise variance sigma_n^2 of an additive oracle.
template <typename Scalar>
class VarianceSchedule {
 public:
  enum class Kind { constant, polynomial, table };

  static VarianceSchedule constant(Scalar sigma0_sq, Regime regime = Regime::ergodic) {
    return VarianceSchedule(Kind::constant, sigma0_sq, Scalar(0), {}, regime);
  }

  /// sigma_n^2 = sigma0^2 / (n + 1)^{1 + epsilon}
  static VarianceSchedule polynomial(Scalar sigma0_sq, Scalar epsilon,
                                     Regime regime = Regime::almost_sure) {
    return VarianceSchedule(Kind::polynomial, sigma0_sq, epsilon, {}, regime);
  }

  /// Explicit values; the last entry repeats past the end of the table.
  static VarianceSchedule table(std::vector<Scalar> values, Regime regime) {
    if (values.empty()) throw std::invalid_argument("variance table must not be empty");
    return VarianceSchedule(Kind::table, Scalar(0), Scalar(0), std::move(values), regime);
  }

  Kind kind() const { return kind_; }
  Regime intended_regime() const { return regime_; }
  Scalar sigma0_sq() const { return sigma0_sq_; }
  Scalar epsilon() const { return epsilon_; }
  const std::vector<Scalar>& values() const { return table_; }

  Scalar operator()(Index n) const {
    switch (kind_) {
      case Kind::constant: return sigma0_sq_;
      case Kind::polynomial: return sigma0_sq_ / std::pow(Scalar(n + 1), 1 + epsilon_);
      case Kind::table:
        return table_[std::min<std::size_t>(static_cast<std::size_t>(n), table_.size() - 1)];
    }
    return Scalar(0);
  }

  /// sum_n sigma_n^2 < infinity
  bool summable() const {
    switch (kind_) {
      case Kind::constant: return sigma0_sq_ == 0;
      case Kind::polynomial: return sigma0_sq_ == 0 || epsilon_ > 0;
      case Kind::table: return table_.back() == 0;
    }
    return false;
  }

  /// Exponent p with sigma_n^2 = O(n^{-p}); zero for non-decaying schedules.
  Scalar decay() const {
    if (kind_ == Kind::polynomial) return 1 + epsilon_;
    return Scalar(0);
  }

  /// Bound on sum_{n > N} sigma_n^2, when one is known in closed form.
  std::optional<Scalar> tail_bound(Index horizon) const {
    if (kind_ == Kind::polynomial && epsilon_ > 0)
      return sigma0_sq_ / (epsilon_ * std::pow(Scalar(horizon + 1), epsilon_));
    if (summable() && kind_ != Kind::polynomial) return Scalar(0);
    return std::nullopt;
  }

 private:
  VarianceSchedule(Kind kind, Scalar s0, Scalar eps, std::vector<Scalar> table, Regime regime)
      : kind_(kind), sigma0_sq_(s0), epsilon_(eps), table_(std::move(table)), regime_(regime) {
    if (s0 < 0 || eps < 0) throw std::invalid_argument("variance parameters must be nonnegative");
  }

  Kind kind_;
  Scalar sigma0_sq_;
  Scalar epsilon_;
  std::vector<Scalar> table_;
  Regime regime_;
};

/// Fresh generator for (seed, n, replicate): the noise at step n never depends on
/// earlier draws.
inline Rng substream(std::uint64_t seed, std::uint64_t n, std::uint64_t replicate = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32),
                    static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32)};
  return Rng(seq);
}

/// Unbiased stochastic estimate r_n of B x_n.
template <typename Scalar>
class StochasticOracle {
 public:
  using Vector = Vec<Scalar>;
  using Component = std::function<Vector(const Vector&)>;

  struct Gaussian {
    VarianceSchedule<Scalar> schedule;
  };
  struct Minibatch {
    std::shared_ptr<const std::vector<Component>> components;
    std::function<Index(Index)> batch_size;
  };

  static StochasticOracle deterministic(CocoerciveMap<Scalar> b) {
    return StochasticOracle(std::move(b), std::monostate{}, 0);
  }

  static StochasticOracle gaussian(CocoerciveMap<Scalar> b, VarianceSchedule<Scalar> schedule,
                                   std::uint64_t seed) {
    return StochasticOracle(std::move(b), Gaussian{std::move(schedule)}, seed);
  }

  /// B = (1/m) sum_j B_j; r_n averages a batch of b_n distinct components drawn
  /// uniformly without replacement.
  static StochasticOracle minibatch(std::vector<Component> components, Scalar beta,
                                    std::function<Index(Index)> batch_size, Index dim,
                                    std::uint64_t seed) {
    if (components.empty()) throw std::invalid_argument("minibatch needs at least one component");
    auto comps = std::make_shared<const std::vector<Component>>(std::move(components));
    CocoerciveMap<Scalar> mean(
        dim,
        [comps](const Vector& x) -> Vector {
          Vector acc = (*comps)[0](x);
          for (std::size_t j = 1; j < comps->size(); ++j) acc += (*comps)[j](x);
          return acc / Scalar(comps->size());
        },
        beta);
    return StochasticOracle(std::move(mean), Minibatch{comps, std::move(batch_size)}, seed);
  }

  const CocoerciveMap<Scalar>& base() const { return base_; }
  Scalar beta() const { return base_.beta(); }
  std::uint64_t seed() const { return seed_; }
  Index dim() const { return base_.dim(); }

  bool is_deterministic() const { return std::holds_alternative<std::monostate>(noise_); }
  const Gaussian* gaussian_model() const { return std::get_if<Gaussian>(&noise_); }
  const Minibatch* minibatch_model() const { return std::get_if<Minibatch>(&noise_); }

  /// Exact B x.
  Vector mean(const Vector& x) const { return base_.apply(x); }

  /// r_n at x; a function of (seed, n, replicate, x) only.
  Vector sample(const Vector& x, Index n, std::uint64_t replicate = 0) const {
    if (const auto* g = gaussian_model()) {
      Vector r = base_.apply(x);
      const Scalar var = g->schedule(n);
      if (var == 0) return r;
      Rng rng = substream(seed_, static_cast<std::uint64_t>(n), replicate);
      return r + std::sqrt(var) * random_gaussian<Scalar>(x.size(), rng);
    }
    if (const auto* mb = minibatch_model()) {
      const auto& comps = *mb->components;
      const Index m = static_cast<Index>(comps.size());
      const Index b = std::clamp<Index>(mb->batch_size(n), 1, m);
      if (b == m) return base_.apply(x);
      std::vector<Index> idx(static_cast<std::size_t>(m));
      std::iota(idx.begin(), idx.end(), Index(0));
      Rng rng = substream(seed_, static_cast<std::uint64_t>(n), replicate);
      for (Index k = 0; k < b; ++k) {
        std::uniform_int_distribution<Index> pick(k, m - 1);
        std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
      }
      Vector acc = comps[static_cast<std::size_t>(idx[0])](x);
      for (Index k = 1; k < b; ++k) acc += comps[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])](x);
      return acc / Scalar(b);
    }
    return base_.apply(x);
  }

  /// Scheduled per-coordinate variance of r_n - B x_n (Gaussian and exact oracles).
  std::optional<Scalar> scheduled_variance(Index n) const {
    if (is_deterministic()) return Scalar(0);
    if (const auto* g = gaussian_model()) return g->schedule(n);
    return std::nullopt;
  }

 private:
  using Noise = std::variant<std::monostate, Gaussian, Minibatch>;

  StochasticOracle(CocoerciveMap<Scalar> b, Noise noise, std::uint64_t seed)
      : base_(std::move(b)), noise_(std::move(noise)), seed_(seed) {}

  CocoerciveMap<Scalar> base_;
  Noise noise_;
  std::uint64_t seed_;
};

/// Unbiased sample variance of r - B x at fixed (x, n), averaged over coordinates.
template <typename Scalar>
Scalar empirical_variance(const StochasticOracle<Scalar>& oracle, const Vec<Scalar>& x, Index n,
                          int trials) {
  if (trials < 2) throw std::invalid_argument("empirical_variance needs at least two trials");
  const Index d = x.size();
  Vec<Scalar> mean = Vec<Scalar>::Zero(d);
  Vec<Scalar> m2 = Vec<Scalar>::Zero(d);
  for (int t = 0; t < trials; ++t) {
    const Vec<Scalar> r = oracle.sample(x, n, static_cast<std::uint64_t>(t));
    const Vec<Scalar> delta = r - mean;
    mean += delta / Scalar(t + 1);
    m2 += (delta.array() * (r - mean).array()).matrix();
  }
  return m2.sum() / (Scalar(trials - 1) * Scalar(d));
}

template <typename Scalar>
struct SummabilityReport {
  enum class Status { certified, finite_horizon, violated };

  Status status = Status::violated;
  Regime regime = Regime::almost_sure;
  Index horizon = 0;
  /// sum_{n <= N} sigma_n^2
  Scalar variance_sum = 0;
  /// sum_{n <= N} gamma_n^2 sigma_n^2
  Scalar weighted_sum = 0;
  std::optional<Scalar> variance_tail_bound;
  std::optional<Scalar> weighted_tail_bound;
  std::string message;

  bool certified() const { return status == Status::certified; }
  bool usable() const { return status != Status::violated; }

  /// weighted_sum plus the tail bound when known: an upper estimate of the full series.
  Scalar weighted_total() const { return weighted_sum + weighted_tail_bound.value_or(Scalar(0)); }
};

/// Partial sums and closed-form tails for the noise conditions: summable variances
/// (almost-sure regime) or summable gamma_n^2 sigma_n^2 (ergodic regime).
template <typename Scalar>
SummabilityReport<Scalar> summability_certificate(const VarianceSchedule<Scalar>& schedule,
                                                  const Sequence<Scalar>& gamma, Index horizon) {
  using Report = SummabilityReport<Scalar>;
  Report rep;
  rep.regime = schedule.intended_regime();
  rep.horizon = horizon;
  Scalar gamma_sup = 0;
  for (Index n = 0; n <= horizon; ++n) {
    const Scalar var = schedule(n);
    const Scalar g = gamma(n);
    gamma_sup = std::max(gamma_sup, std::abs(g));
    rep.variance_sum += var;
    rep.weighted_sum += g * g * var;
  }
  gamma_sup = std::max(gamma_sup, std::abs(gamma.limit()));
  rep.variance_tail_bound = schedule.tail_bound(horizon);
  if (rep.variance_tail_bound) rep.weighted_tail_bound = gamma_sup * gamma_sup * *rep.variance_tail_bound;

  if (rep.regime == Regime::almost_sure) {
    if (schedule.summable()) {
      rep.status = Report::Status::certified;
      rep.message = "variances summable";
    } else {
      rep.status = Report::Status::violated;
      rep.message = "regime violation: variances are not summable";
    }
    return rep;
  }

  // ergodic regime
  const bool gamma_decays = gamma.limit() == 0 && gamma.decay() > 0;
  if (schedule.summable()) {
    rep.status = Report::Status::certified;
    rep.message = "variances summable and steps bounded";
  } else if (gamma_decays && 2 * gamma.decay() + schedule.decay() > 1) {
    rep.status = Report::Status::certified;
    rep.message = "gamma_n^2 sigma_n^2 is a convergent p-series";
    rep.weighted_tail_bound.reset();
  } else {
    rep.status = Report::Status::finite_horizon;
    rep.weighted_tail_bound.reset();
    rep.message = "series diverges; c0 is the finite-horizon partial sum";
  }
  return rep;
}

}  // namespace papc
