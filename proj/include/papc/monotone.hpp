#pragma once

#include "papc/linop.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace papc {

/// Proper lsc convex f exposed through prox_{lambda f} and, optionally, its value
/// and the value of its conjugate. A separable sum over consecutive coordinate
/// blocks keeps its parts so metric proxes can act blockwise.
template <typename Scalar>
class ProxFunction {
 public:
  using Vector = Vec<Scalar>;
  using Value = ExtendedReal<Scalar>;
  using ProxFn = std::function<Vector(Scalar, const Vector&)>;
  using ValueFn = std::function<Value(const Vector&)>;
  using MetricProxFn = std::function<Vector(const SpdOperator<Scalar>&, const Vector&)>;

  struct Ops {
    std::string name;
    Index dim = 0;
    ProxFn prox;
    ValueFn value;            // optional
    ValueFn conjugate_value;  // optional
    MetricProxFn metric_prox; // optional
  };

  explicit ProxFunction(Ops ops) : ops_(std::make_shared<const Ops>(std::move(ops))) {
    if (ops_->dim <= 0) throw DimensionError("ProxFunction dimension must be positive");
    if (!ops_->prox) throw std::invalid_argument("ProxFunction needs a prox");
  }

  /// f(x_1, ..., x_k) = sum_i w_i f_i(x_i) on the product space with inner product
  /// sum_i w_i <x_i, y_i>, where the prox stays blockwise. No weights means w = 1.
  static ProxFunction separable_sum(std::vector<ProxFunction> parts, std::vector<Scalar> weights = {}) {
    if (!weights.empty() && weights.size() != parts.size())
      throw DimensionError("separable_sum: one weight per part");
    for (Scalar w : weights)
      if (!(w > 0)) throw std::invalid_argument("separable_sum: weights must be positive");
    auto shared = std::make_shared<const std::vector<ProxFunction>>(std::move(parts));
    Index dim = 0;
    std::string name = "sum(";
    bool has_value = true, has_conj = true;
    for (const auto& p : *shared) {
      dim += p.dim();
      name += p.name() + (&p == &shared->back() ? ")" : ",");
      has_value = has_value && p.has_value();
      has_conj = has_conj && p.has_conjugate_value();
    }
    Ops ops;
    ops.name = name;
    ops.dim = dim;
    ops.prox = [shared, dim](Scalar lambda, const Vector& x) -> Vector {
      Vector out(dim);
      Index off = 0;
      for (const auto& p : *shared) {
        out.segment(off, p.dim()) = p.prox(lambda, x.segment(off, p.dim()));
        off += p.dim();
      }
      return out;
    };
    auto sum_of = [shared, weights](bool conj) {
      return [shared, weights, conj](const Vector& x) -> Value {
        Value acc(Scalar(0));
        Index off = 0;
        for (std::size_t i = 0; i < shared->size(); ++i) {
          const auto& p = (*shared)[i];
          const Vector xi = x.segment(off, p.dim());
          Value term = conj ? p.conjugate_value(xi) : p.value(xi);
          if (!weights.empty() && term.is_finite()) term = Value(weights[i] * term.value());
          acc = acc + term;
          off += p.dim();
        }
        return acc;
      };
    };
    if (has_value) ops.value = sum_of(false);
    if (has_conj) ops.conjugate_value = sum_of(true);
    ProxFunction out(std::move(ops));
    out.parts_ = shared;
    return out;
  }

  const std::string& name() const { return ops_->name; }
  Index dim() const { return ops_->dim; }

  Vector prox(Scalar lambda, const Vector& x) const {
    if (!(lambda > 0)) throw std::invalid_argument("prox: lambda must be positive");
    require(x);
    return ops_->prox(lambda, x);
  }

  bool has_value() const { return static_cast<bool>(ops_->value); }
  bool has_conjugate_value() const { return static_cast<bool>(ops_->conjugate_value); }
  bool has_metric_prox() const { return static_cast<bool>(ops_->metric_prox); }

  Value value(const Vector& x) const {
    if (!has_value()) throw std::logic_error(name() + ": no value oracle");
    require(x);
    return ops_->value(x);
  }

  Value conjugate_value(const Vector& a) const {
    if (!has_conjugate_value()) throw std::logic_error(name() + ": no conjugate value oracle");
    require(a);
    return ops_->conjugate_value(a);
  }

  Vector metric_prox(const SpdOperator<Scalar>& u, const Vector& x) const {
    return ops_->metric_prox(u, x);
  }

  bool is_separable_sum() const { return parts_ != nullptr; }
  const std::vector<ProxFunction>& parts() const { return *parts_; }

 private:
  void require(const Vector& x) const {
    if (x.size() != dim())
      throw DimensionError(name() + ": expected dimension " + std::to_string(dim()) + ", got " +
                           std::to_string(x.size()));
  }

  std::shared_ptr<const Ops> ops_;
  std::shared_ptr<const std::vector<ProxFunction>> parts_;
};

/// Convex differentiable h with Lipschitz gradient (constant 1/beta).
template <typename Scalar>
class SmoothFunction {
 public:
  using Vector = Vec<Scalar>;

  SmoothFunction(std::string name, Index dim, std::function<Scalar(const Vector&)> value,
                 std::function<Vector(const Vector&)> gradient, Scalar beta)
      : name_(std::move(name)), dim_(dim), value_(std::move(value)), gradient_(std::move(gradient)),
        beta_(beta) {
    if (!(beta > 0)) throw std::invalid_argument("SmoothFunction: beta must be positive");
  }

  const std::string& name() const { return name_; }
  Index dim() const { return dim_; }
  Scalar beta() const { return beta_; }
  Scalar value(const Vector& x) const { return value_(x); }
  Vector gradient(const Vector& x) const { return gradient_(x); }

 private:
  std::string name_;
  Index dim_;
  std::function<Scalar(const Vector&)> value_;
  std::function<Vector(const Vector&)> gradient_;
  Scalar beta_;
};

/// Maximally monotone A, exchanged only through its resolvent J_{lambda A}.
template <typename Scalar>
class MonotoneBlock {
 public:
  using Vector = Vec<Scalar>;
  using ResolventFn = std::function<Vector(Scalar, const Vector&)>;

  MonotoneBlock(std::string name, Index dim, ResolventFn resolvent)
      : name_(std::move(name)), dim_(dim), resolvent_(std::move(resolvent)) {
    if (dim <= 0) throw DimensionError("MonotoneBlock dimension must be positive");
  }

  /// A = subdifferential of f; J_{lambda A} = prox_{lambda f}.
  static MonotoneBlock subdifferential(const ProxFunction<Scalar>& f) {
    MonotoneBlock out("d" + f.name(), f.dim(),
                      [f](Scalar lambda, const Vector& x) { return f.prox(lambda, x); });
    out.potential_ = f;
    if (f.is_separable_sum()) {
      std::vector<MonotoneBlock> parts;
      for (const auto& p : f.parts()) parts.push_back(subdifferential(p));
      out.parts_ = std::make_shared<const std::vector<MonotoneBlock>>(std::move(parts));
    }
    return out;
  }

  /// A = M for a positive semidefinite matrix M; J_{lambda A} = (Id + lambda M)^{-1}.
  static MonotoneBlock linear(const Mat<Scalar>& m) {
    auto mat = std::make_shared<const Mat<Scalar>>(m);
    return MonotoneBlock("linear", m.rows(), [mat](Scalar lambda, const Vector& x) -> Vector {
      Mat<Scalar> sys = lambda * (*mat);
      sys.diagonal().array() += Scalar(1);
      return sys.partialPivLu().solve(x);
    });
  }

  static MonotoneBlock zero(Index dim) {
    return MonotoneBlock("zero", dim, [](Scalar, const Vector& x) { return x; });
  }

  /// A = A_1 x ... x A_k acting on consecutive coordinate blocks.
  static MonotoneBlock product(std::vector<MonotoneBlock> blocks) {
    auto shared = std::make_shared<const std::vector<MonotoneBlock>>(std::move(blocks));
    Index dim = 0;
    for (const auto& b : *shared) dim += b.dim();
    MonotoneBlock out("product", dim, [shared, dim](Scalar lambda, const Vector& x) -> Vector {
      Vector y(dim);
      Index off = 0;
      for (const auto& b : *shared) {
        y.segment(off, b.dim()) = b.resolvent(lambda, x.segment(off, b.dim()));
        off += b.dim();
      }
      return y;
    });
    bool all_potential = true;
    std::vector<ProxFunction<Scalar>> fs;
    for (const auto& b : *shared) {
      if (!b.potential()) {
        all_potential = false;
        break;
      }
      fs.push_back(*b.potential());
    }
    if (all_potential) out.potential_ = ProxFunction<Scalar>::separable_sum(std::move(fs));
    out.parts_ = shared;
    return out;
  }

  const std::string& name() const { return name_; }
  Index dim() const { return dim_; }

  Vector resolvent(Scalar lambda, const Vector& x) const {
    if (!(lambda > 0)) throw std::invalid_argument("resolvent: lambda must be positive");
    if (x.size() != dim_) throw DimensionError(name_ + ": resolvent dimension mismatch");
    return resolvent_(lambda, x);
  }

  /// The convex function when A = df.
  const std::optional<ProxFunction<Scalar>>& potential() const { return potential_; }

  bool is_product() const { return parts_ != nullptr; }
  const std::vector<MonotoneBlock>& parts() const { return *parts_; }

  /// Resolvent of c U A^{-1} for a non-scalar metric U, when the caller has one.
  void set_metric_inverse_resolvent(
      std::function<Vector(Scalar, const SpdOperator<Scalar>&, const Vector&)> fn) {
    metric_inverse_resolvent_ = std::move(fn);
  }
  const auto& metric_inverse_resolvent() const { return metric_inverse_resolvent_; }

 private:
  std::string name_;
  Index dim_;
  ResolventFn resolvent_;
  std::optional<ProxFunction<Scalar>> potential_;
  std::shared_ptr<const std::vector<MonotoneBlock>> parts_;
  std::function<Vector(Scalar, const SpdOperator<Scalar>&, const Vector&)> metric_inverse_resolvent_;
};

/// beta-cocoercive single-valued B.
template <typename Scalar>
class CocoerciveMap {
 public:
  using Vector = Vec<Scalar>;

  CocoerciveMap(Index dim, std::function<Vector(const Vector&)> apply, Scalar beta)
      : dim_(dim), apply_(std::move(apply)), beta_(beta) {
    if (!(beta > 0)) throw std::invalid_argument("cocoercivity constant must be positive");
  }

  static CocoerciveMap gradient(const SmoothFunction<Scalar>& h) {
    return CocoerciveMap(h.dim(), [h](const Vector& x) { return h.gradient(x); }, h.beta());
  }

  /// Symmetric PSD M is 1/lambda_max(M)-cocoercive.
  static CocoerciveMap linear(const Mat<Scalar>& m) {
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> eig(m, Eigen::EigenvaluesOnly);
    const Scalar top = eig.eigenvalues().maxCoeff();
    auto mat = std::make_shared<const Mat<Scalar>>(m);
    return CocoerciveMap(m.rows(), [mat](const Vector& x) -> Vector { return (*mat) * x; },
                         top > 0 ? 1 / top : std::numeric_limits<Scalar>::infinity());
  }

  static CocoerciveMap zero(Index dim) {
    return CocoerciveMap(dim, [dim](const Vector&) -> Vector { return Vector::Zero(dim); },
                         std::numeric_limits<Scalar>::infinity());
  }

  Index dim() const { return dim_; }
  Scalar beta() const { return beta_; }
  Vector apply(const Vector& x) const {
    if (x.size() != dim_) throw DimensionError("CocoerciveMap::apply dimension mismatch");
    return apply_(x);
  }

 private:
  Index dim_;
  std::function<Vector(const Vector&)> apply_;
  Scalar beta_;
};

// --- resolvent calculus -----------------------------------------------------

template <typename Scalar>
Vec<Scalar> resolvent(const MonotoneBlock<Scalar>& a, Scalar lambda, const Vec<Scalar>& x) {
  return a.resolvent(lambda, x);
}

/// J_{lambda A^{-1}}(x) = x - lambda J_{A/lambda}(x / lambda).
template <typename Scalar>
Vec<Scalar> inverse_resolvent(const MonotoneBlock<Scalar>& a, Scalar lambda, const Vec<Scalar>& x) {
  if (!(lambda > 0)) throw std::invalid_argument("inverse_resolvent: lambda must be positive");
  return x - lambda * a.resolvent(1 / lambda, x / lambda);
}

/// prox_{lambda g*}(x) = x - lambda prox_{g/lambda}(x / lambda).
template <typename Scalar>
Vec<Scalar> conjugate_prox_via_moreau(const ProxFunction<Scalar>& g, Scalar lambda,
                                      const Vec<Scalar>& x) {
  if (!(lambda > 0)) throw std::invalid_argument("conjugate_prox_via_moreau: lambda must be positive");
  return x - lambda * g.prox(1 / lambda, x / lambda);
}

namespace detail {

/// Per-block scalars of a diagonal U over consecutive blocks of the given sizes.
template <typename Scalar>
std::optional<std::vector<Scalar>> block_scalars(const SpdOperator<Scalar>& u,
                                                 const std::vector<Index>& dims) {
  if (!u.is_diagonal()) return std::nullopt;
  std::vector<Scalar> out;
  Index off = 0;
  for (Index d : dims) {
    const auto seg = u.diagonal().segment(off, d);
    if (!(seg.array() == seg(0)).all()) return std::nullopt;
    out.push_back(seg(0));
    off += d;
  }
  return out;
}

}  // namespace detail

/// argmin_y f(y) + 1/2 ||x - y||_U^2 for scalar U, or block-scalar U matching the
/// blocks of a separable f. Anything else needs a user-supplied metric prox.
template <typename Scalar>
Vec<Scalar> prox_in_metric(const ProxFunction<Scalar>& f, const SpdOperator<Scalar>& u,
                           const Vec<Scalar>& x) {
  if (u.dim() != f.dim()) throw DimensionError("prox_in_metric: U and f dimensions differ");
  if (auto s = u.scalar_value()) return f.prox(1 / *s, x);
  if (f.is_separable_sum()) {
    std::vector<Index> dims;
    for (const auto& p : f.parts()) dims.push_back(p.dim());
    if (auto sig = detail::block_scalars(u, dims)) {
      Vec<Scalar> out(x.size());
      Index off = 0;
      for (std::size_t i = 0; i < dims.size(); ++i) {
        out.segment(off, dims[i]) = f.parts()[i].prox(1 / (*sig)[i], x.segment(off, dims[i]));
        off += dims[i];
      }
      return out;
    }
  }
  if (f.has_metric_prox()) return f.metric_prox(u, x);
  throw UnsupportedMetric("prox_in_metric: " + f.name() + " has no prox in this metric");
}

/// J_{c U A^{-1}}(y). Scalar U = sigma Id reduces to J_{c sigma A^{-1}}; block-scalar
/// U reduces blockwise when A is a product over the same blocks.
template <typename Scalar>
Vec<Scalar> metric_inverse_resolvent(const MonotoneBlock<Scalar>& a, const SpdOperator<Scalar>& u,
                                     Scalar c, const Vec<Scalar>& y) {
  if (u.dim() != a.dim()) throw DimensionError("metric_inverse_resolvent: U and A dimensions differ");
  if (auto s = u.scalar_value()) return inverse_resolvent(a, c * *s, y);
  if (a.is_product()) {
    std::vector<Index> dims;
    for (const auto& p : a.parts()) dims.push_back(p.dim());
    if (auto sig = detail::block_scalars(u, dims)) {
      Vec<Scalar> out(y.size());
      Index off = 0;
      for (std::size_t i = 0; i < dims.size(); ++i) {
        out.segment(off, dims[i]) =
            inverse_resolvent(a.parts()[i], c * (*sig)[i], Vec<Scalar>(y.segment(off, dims[i])));
        off += dims[i];
      }
      return out;
    }
  }
  if (a.metric_inverse_resolvent()) return a.metric_inverse_resolvent()(c, u, y);
  throw UnsupportedMetric("metric_inverse_resolvent: " + a.name() + " has no resolvent in this metric");
}

/// prox^{(cU)^{-1}}_{g*}(y), i.e. J_{c U dg*}(y), through the Moreau route.
template <typename Scalar>
Vec<Scalar> metric_conjugate_prox(const ProxFunction<Scalar>& g, const SpdOperator<Scalar>& u,
                                  Scalar c, const Vec<Scalar>& y) {
  if (u.dim() != g.dim()) throw DimensionError("metric_conjugate_prox: U and g dimensions differ");
  if (auto s = u.scalar_value()) return conjugate_prox_via_moreau(g, c * *s, y);
  if (g.is_separable_sum()) {
    std::vector<Index> dims;
    for (const auto& p : g.parts()) dims.push_back(p.dim());
    if (auto sig = detail::block_scalars(u, dims)) {
      Vec<Scalar> out(y.size());
      Index off = 0;
      for (std::size_t i = 0; i < dims.size(); ++i) {
        out.segment(off, dims[i]) = conjugate_prox_via_moreau(
            g.parts()[i], c * (*sig)[i], Vec<Scalar>(y.segment(off, dims[i])));
        off += dims[i];
      }
      return out;
    }
  }
  throw UnsupportedMetric("metric_conjugate_prox: " + g.name() + " has no conjugate prox in this metric");
}

// --- empirical checks --------------------------------------------------------

template <typename Scalar>
struct ViolationReport {
  Scalar max_violation = -std::numeric_limits<Scalar>::infinity();
  int samples = 0;
  bool passed = false;
};

/// Checks f(p) - f(y) <= <y - p, U(p - x)> for p = prox^U_f(x) on every
/// (x, y) sample. Passes iff the largest violation is at most 1e-9.
template <typename Scalar>
ViolationReport<Scalar> prox_inequality_check(
    const ProxFunction<Scalar>& f, const SpdOperator<Scalar>& u,
    const std::vector<std::pair<Vec<Scalar>, Vec<Scalar>>>& samples,
    const std::function<Vec<Scalar>(const Vec<Scalar>&)>& prox_override = {}) {
  ViolationReport<Scalar> rep;
  for (const auto& [x, y] : samples) {
    const Vec<Scalar> p = prox_override ? prox_override(x) : prox_in_metric(f, u, x);
    const auto fp = f.value(p);
    const auto fy = f.value(y);
    if (fy.is_plus_infinity()) continue;  // inequality is vacuous
    if (!fp.is_finite()) {
      rep.max_violation = std::numeric_limits<Scalar>::infinity();
      ++rep.samples;
      continue;
    }
    const Scalar lhs = fp.value() - fy.value();
    const Scalar rhs = u.space().dot(y - p, u.apply(p - x));
    rep.max_violation = std::max(rep.max_violation, lhs - rhs);
    ++rep.samples;
  }
  rep.passed = rep.samples > 0 && rep.max_violation <= Scalar(1e-9);
  return rep;
}

/// Largest ||Tx - Ty||^2 - <x - y, Tx - Ty> over sampled pairs.
template <typename Scalar>
Scalar firm_nonexpansiveness_gap(const std::function<Vec<Scalar>(const Vec<Scalar>&)>& op, Index dim,
                                 int pairs, Scalar spread, Rng& rng) {
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (int k = 0; k < pairs; ++k) {
    const Vec<Scalar> x = spread * random_gaussian<Scalar>(dim, rng);
    const Vec<Scalar> y = spread * random_gaussian<Scalar>(dim, rng);
    const Vec<Scalar> d = op(x) - op(y);
    worst = std::max(worst, d.squaredNorm() - (x - y).dot(d));
  }
  return worst;
}

/// Largest beta ||Bx - By||^2 - <Bx - By, x - y> - 1e-10 (1 + ||x - y||^2); a
/// cocoercive map keeps this at or below zero.
template <typename Scalar>
Scalar cocoercivity_gap(const CocoerciveMap<Scalar>& b, const Space<Scalar>& space, int pairs,
                        Scalar spread, Rng& rng) {
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  const Scalar beta = std::isfinite(b.beta()) ? b.beta() : Scalar(0);
  for (int k = 0; k < pairs; ++k) {
    const Vec<Scalar> x = spread * random_gaussian<Scalar>(space.dim(), rng);
    const Vec<Scalar> y = spread * random_gaussian<Scalar>(space.dim(), rng);
    const Vec<Scalar> d = b.apply(x) - b.apply(y);
    worst = std::max(worst, beta * space.norm_sq(d) - space.dot(d, x - y) -
                                Scalar(1e-10) * (1 + space.norm_sq(x - y)));
  }
  return worst;
}

}  // namespace papc
