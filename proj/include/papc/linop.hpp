#pragma once

#include "papc/core.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace papc {

template <typename Scalar>
class LinearMap;

template <typename Scalar>
struct PowerResult {
  Scalar estimate = Scalar(0);
  Index iterations = 0;
  Scalar residual = Scalar(0);
  bool converged = false;
};

template <typename Scalar, typename Generator = Rng>
PowerResult<Scalar> power_iteration(const LinearMap<Scalar>& op, Scalar tol, Index max_iter,
                                    Generator rng);

/// Bounded linear operator between finite-dimensional spaces, carried as an
/// apply/adjoint pair. The adjoint is taken with respect to the inner products of
/// the domain and codomain spaces.
template <typename Scalar>
class LinearMap {
 public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;
  using Fn = std::function<Vector(const Vector&)>;

  LinearMap(Space<Scalar> domain, Space<Scalar> codomain, Fn apply, Fn adjoint_apply)
      : domain_(std::move(domain)),
        codomain_(std::move(codomain)),
        apply_(std::move(apply)),
        adjoint_(std::move(adjoint_apply)),
        norm_cache_(std::make_shared<NormCache>()) {}

  static LinearMap from_matrix(const Matrix& m) {
    return from_matrix(m, Space<Scalar>(m.cols()), Space<Scalar>(m.rows()));
  }

  /// Dense matrix M in coordinates. Its adjoint in weighted spaces is
  /// W_dom^{-1} M^T W_cod.
  static LinearMap from_matrix(const Matrix& m, Space<Scalar> domain, Space<Scalar> codomain) {
    if (m.cols() != domain.dim() || m.rows() != codomain.dim())
      throw DimensionError("matrix shape does not match domain/codomain");
    auto mat = std::make_shared<const Matrix>(m);
    Fn fwd = [mat](const Vector& x) -> Vector { return (*mat) * x; };
    Fn adj;
    if (domain.is_euclidean() && codomain.is_euclidean()) {
      adj = [mat](const Vector& y) -> Vector { return mat->transpose() * y; };
    } else {
      Vector wd = domain.is_euclidean() ? Vector::Ones(domain.dim()) : domain.weights();
      Vector wc = codomain.is_euclidean() ? Vector::Ones(codomain.dim()) : codomain.weights();
      adj = [mat, wd, wc](const Vector& y) -> Vector {
        Vector t = mat->transpose() * (wc.array() * y.array()).matrix();
        return (t.array() / wd.array()).matrix();
      };
    }
    LinearMap out(std::move(domain), std::move(codomain), std::move(fwd), std::move(adj));
    out.matrix_ = m;
    return out;
  }

  static LinearMap identity(const Space<Scalar>& space) {
    LinearMap out(space, space, [](const Vector& x) { return x; }, [](const Vector& y) { return y; });
    out.matrix_ = Matrix::Identity(space.dim(), space.dim());
    return out;
  }

  static LinearMap identity(Index dim) { return identity(Space<Scalar>(dim)); }

  static LinearMap zero(const Space<Scalar>& domain, const Space<Scalar>& codomain) {
    const Index n = domain.dim();
    const Index m = codomain.dim();
    LinearMap out(domain, codomain, [m](const Vector&) -> Vector { return Vector::Zero(m); },
                  [n](const Vector&) -> Vector { return Vector::Zero(n); });
    out.matrix_ = Matrix::Zero(m, n);
    return out;
  }

  static LinearMap zero(Index domain_dim, Index codomain_dim) {
    return zero(Space<Scalar>(domain_dim), Space<Scalar>(codomain_dim));
  }

  /// (x_1, ..., x_m) -> (L_1 x_1, ..., L_m x_m) between the given product spaces.
  static LinearMap block_diagonal(std::vector<LinearMap> blocks, Space<Scalar> domain,
                                  Space<Scalar> codomain) {
    Index din = 0, dout = 0;
    for (const auto& b : blocks) {
      din += b.domain().dim();
      dout += b.codomain().dim();
    }
    if (din != domain.dim() || dout != codomain.dim())
      throw DimensionError("block dimensions do not add up to the product spaces");
    auto shared = std::make_shared<const std::vector<LinearMap>>(std::move(blocks));
    Fn fwd = [shared, dout](const Vector& x) -> Vector {
      Vector out(dout);
      Index i = 0, o = 0;
      for (const auto& b : *shared) {
        const Index n = b.domain().dim(), m = b.codomain().dim();
        out.segment(o, m) = b.apply(x.segment(i, n));
        i += n;
        o += m;
      }
      return out;
    };
    // Per-block weights are constant within a block, so the weighted adjoint of a
    // block-diagonal map is blockwise the adjoint of each block.
    Fn adj = [shared, din](const Vector& y) -> Vector {
      Vector out(din);
      Index i = 0, o = 0;
      for (const auto& b : *shared) {
        const Index n = b.domain().dim(), m = b.codomain().dim();
        out.segment(i, n) = b.adjoint_apply(y.segment(o, m));
        i += n;
        o += m;
      }
      return out;
    };
    return LinearMap(std::move(domain), std::move(codomain), std::move(fwd), std::move(adj));
  }

  const Space<Scalar>& domain() const { return domain_; }
  const Space<Scalar>& codomain() const { return codomain_; }

  Vector apply(const Vector& x) const {
    domain_.require(x, "LinearMap::apply input");
    Vector y = apply_(x);
    codomain_.require(y, "LinearMap::apply output");
    return y;
  }

  Vector adjoint_apply(const Vector& y) const {
    codomain_.require(y, "LinearMap::adjoint_apply input");
    Vector x = adjoint_(y);
    domain_.require(x, "LinearMap::adjoint_apply output");
    return x;
  }

  LinearMap adjoint() const {
    LinearMap out(codomain_, domain_, adjoint_, apply_);
    if (matrix_ && domain_.is_euclidean() && codomain_.is_euclidean())
      out.matrix_ = matrix_->transpose();
    return out;
  }

  /// Dense coordinate matrix when the map was built from one.
  const std::optional<Matrix>& matrix() const { return matrix_; }

  /// Dense coordinate matrix, materialized column by column if necessary.
  Matrix to_dense() const {
    if (matrix_) return *matrix_;
    Matrix out(codomain_.dim(), domain_.dim());
    for (Index j = 0; j < domain_.dim(); ++j)
      out.col(j) = apply(Vector::Unit(domain_.dim(), j));
    return out;
  }

  /// ||L|| = sqrt(lambda_max(L* L)), estimated once by power iteration and cached.
  Scalar norm() const;

 private:
  struct NormCache {
    std::once_flag once;
    Scalar value = Scalar(0);
  };

  Space<Scalar> domain_;
  Space<Scalar> codomain_;
  Fn apply_;
  Fn adjoint_;
  std::optional<Matrix> matrix_;
  std::shared_ptr<NormCache> norm_cache_;
};

/// A ∘ B.
template <typename Scalar>
LinearMap<Scalar> compose(const LinearMap<Scalar>& a, const LinearMap<Scalar>& b) {
  if (!(b.codomain() == a.domain())) throw DimensionError("compose: incompatible spaces");
  using V = Vec<Scalar>;
  return LinearMap<Scalar>(
      b.domain(), a.codomain(), [a, b](const V& x) -> V { return a.apply(b.apply(x)); },
      [a, b](const V& y) -> V { return b.adjoint_apply(a.adjoint_apply(y)); });
}

template <typename Scalar, typename Generator>
PowerResult<Scalar> power_iteration(const LinearMap<Scalar>& op, Scalar tol, Index max_iter,
                                    Generator rng) {
  const auto& space = op.domain();
  if (!(op.codomain() == space)) throw DimensionError("power_iteration needs a square operator");
  if (max_iter <= 0) throw std::invalid_argument("power_iteration: max_iter must be positive");

  Vec<Scalar> v = random_gaussian<Scalar>(space.dim(), rng);
  v /= space.norm(v);

  PowerResult<Scalar> result;
  for (Index k = 1; k <= max_iter; ++k) {
    const Vec<Scalar> w = op.apply(v);
    const Scalar lambda = space.dot(v, w);
    const Scalar wnorm = space.norm(w);
    result.iterations = k;
    result.estimate = std::max(lambda, Scalar(0));
    result.residual = space.norm(w - lambda * v);
    if (wnorm == Scalar(0) || result.residual <= tol * std::max(Scalar(1), std::abs(lambda))) {
      result.converged = true;
      return result;
    }
    v = w / wnorm;
  }
  return result;
}

template <typename Scalar>
Scalar LinearMap<Scalar>::norm() const {
  std::call_once(norm_cache_->once, [this] {
    const LinearMap& self = *this;
    LinearMap<Scalar> gram(domain_, domain_,
                           [self](const Vector& x) { return self.adjoint_apply(self.apply(x)); },
                           [self](const Vector& x) { return self.adjoint_apply(self.apply(x)); });
    auto res = power_iteration<Scalar>(gram, Scalar(1e-12), 200000, Rng(0x5eed));
    norm_cache_->value = std::sqrt(res.estimate);
  });
  return norm_cache_->value;
}

/// True iff |<Lx, y> - <x, L*y>| <= 1e-10 (1 + ||x|| ||y||) for every sampled pair.
template <typename Scalar>
bool adjoint_consistency_check(const LinearMap<Scalar>& map, int trials, Rng& rng) {
  for (int t = 0; t < trials; ++t) {
    const Vec<Scalar> x = random_gaussian<Scalar>(map.domain().dim(), rng);
    const Vec<Scalar> y = random_gaussian<Scalar>(map.codomain().dim(), rng);
    const Scalar lhs = map.codomain().dot(map.apply(x), y);
    const Scalar rhs = map.domain().dot(x, map.adjoint_apply(y));
    const Scalar scale = 1 + map.domain().norm(x) * map.codomain().norm(y);
    if (!(std::abs(lhs - rhs) <= Scalar(1e-10) * scale)) return false;
  }
  return true;
}

/// Orthogonal projector onto a subspace V of a (possibly weighted) coordinate space.
template <typename Scalar>
class OrthoProjector {
 public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;
  enum class Kind { full, matrix, basis, averaging };

  static OrthoProjector full(const Space<Scalar>& space) {
    return OrthoProjector(space, Kind::full, [](const Vector& x) { return x; });
  }
  static OrthoProjector full(Index dim) { return full(Space<Scalar>(dim)); }

  /// Explicit symmetric idempotent matrix (Euclidean space).
  static OrthoProjector from_matrix(const Matrix& p) {
    if (p.rows() != p.cols()) throw DimensionError("projector matrix must be square");
    const Scalar tol = Scalar(1e-10) * (1 + p.norm());
    if ((p - p.transpose()).norm() > tol || (p * p - p).norm() > tol)
      throw std::invalid_argument("projector matrix must be symmetric and idempotent");
    auto mat = std::make_shared<const Matrix>(p);
    return OrthoProjector(Space<Scalar>(p.rows()), Kind::matrix,
                          [mat](const Vector& x) -> Vector { return (*mat) * x; });
  }

  /// P = Q Q^T for a matrix Q with orthonormal columns spanning V.
  static OrthoProjector from_basis(const Matrix& q) {
    const Matrix gram = q.transpose() * q;
    if (!gram.isApprox(Matrix::Identity(q.cols(), q.cols()), Scalar(1e-10)))
      throw std::invalid_argument("basis columns must be orthonormal");
    auto basis = std::make_shared<const Matrix>(q);
    return OrthoProjector(Space<Scalar>(q.rows()), Kind::basis, [basis](const Vector& x) -> Vector {
      return (*basis) * (basis->transpose() * x);
    });
  }

  /// Diagonal subspace {x_1 = ... = x_m} of H^m with the weighted inner product
  /// sum_i w_i <x_i, y_i>: (P x)_k = sum_i w_i x_i.
  static OrthoProjector averaging(const Vector& weights, Index block_dim) {
    const Index m = weights.size();
    if (m <= 0 || block_dim <= 0) throw DimensionError("averaging projector needs m, dim > 0");
    if (std::abs(weights.sum() - Scalar(1)) > Scalar(1e-12))
      throw std::invalid_argument("averaging weights must sum to 1");
    Vector w(m * block_dim);
    for (Index i = 0; i < m; ++i) w.segment(i * block_dim, block_dim).setConstant(weights(i));
    Space<Scalar> space(m * block_dim, w);
    return OrthoProjector(space, Kind::averaging, [weights, block_dim, m](const Vector& x) -> Vector {
      Vector mean = Vector::Zero(block_dim);
      for (Index i = 0; i < m; ++i) mean += weights(i) * x.segment(i * block_dim, block_dim);
      Vector out(m * block_dim);
      for (Index i = 0; i < m; ++i) out.segment(i * block_dim, block_dim) = mean;
      return out;
    });
  }

  const Space<Scalar>& space() const { return space_; }
  Index dim() const { return space_.dim(); }
  Kind kind() const { return kind_; }

  Vector apply(const Vector& x) const {
    space_.require(x, "OrthoProjector::apply");
    return apply_(x);
  }

  LinearMap<Scalar> as_map() const {
    auto fn = apply_;
    return LinearMap<Scalar>(space_, space_, fn, fn);
  }

 private:
  OrthoProjector(Space<Scalar> space, Kind kind, std::function<Vector(const Vector&)> fn)
      : space_(std::move(space)), kind_(kind), apply_(std::move(fn)) {}

  Space<Scalar> space_;
  Kind kind_;
  std::function<Vector(const Vector&)> apply_;
};

template <typename Scalar>
struct ProjectorReport {
  Scalar max_idempotence_error = 0;
  Scalar max_self_adjoint_error = 0;
  bool passed = false;
};

/// Idempotence and self-adjointness on random vectors, both at 1e-12 relative.
template <typename Scalar>
ProjectorReport<Scalar> projector_check(const OrthoProjector<Scalar>& p, int trials, Rng& rng) {
  ProjectorReport<Scalar> rep;
  const auto& s = p.space();
  for (int t = 0; t < trials; ++t) {
    const Vec<Scalar> x = random_gaussian<Scalar>(s.dim(), rng);
    const Vec<Scalar> y = random_gaussian<Scalar>(s.dim(), rng);
    const Vec<Scalar> px = p.apply(x);
    rep.max_idempotence_error =
        std::max(rep.max_idempotence_error, s.norm(p.apply(px) - px) / (1 + s.norm(x)));
    rep.max_self_adjoint_error =
        std::max(rep.max_self_adjoint_error,
                 std::abs(s.dot(px, y) - s.dot(x, p.apply(y))) / (1 + s.norm(x) * s.norm(y)));
  }
  rep.passed = rep.max_idempotence_error <= Scalar(1e-12) && rep.max_self_adjoint_error <= Scalar(1e-12);
  return rep;
}

/// Self-adjoint strongly positive operator U. Diagonal storage covers the scalar,
/// diagonal and block-scalar cases; a dense SPD matrix covers the rest.
template <typename Scalar>
class SpdOperator {
 public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;

  static SpdOperator scalar(const Space<Scalar>& space, Scalar sigma) {
    return diagonal(space, Vector::Constant(space.dim(), sigma));
  }
  static SpdOperator scalar(Index dim, Scalar sigma) { return scalar(Space<Scalar>(dim), sigma); }

  static SpdOperator diagonal(const Space<Scalar>& space, const Vector& d) {
    if (d.size() != space.dim()) throw DimensionError("diagonal length differs from dimension");
    if ((d.array() <= Scalar(0)).any() || !d.allFinite())
      throw std::invalid_argument("SPD diagonal must be strictly positive");
    SpdOperator out(space);
    out.diag_ = d;
    out.norm_ = d.maxCoeff();
    out.chi_ = d.minCoeff();
    return out;
  }

  /// sigma_i * Id on the i-th block.
  static SpdOperator block_scalar(const Space<Scalar>& space, const std::vector<Scalar>& sigmas,
                                  const std::vector<Index>& block_dims) {
    if (sigmas.size() != block_dims.size()) throw DimensionError("one sigma per block");
    Vector d(space.dim());
    Index off = 0;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      if (off + block_dims[i] > space.dim()) throw DimensionError("blocks exceed dimension");
      d.segment(off, block_dims[i]).setConstant(sigmas[i]);
      off += block_dims[i];
    }
    if (off != space.dim()) throw DimensionError("blocks do not cover the space");
    return diagonal(space, d);
  }

  /// Dense SPD matrix on a Euclidean space.
  static SpdOperator dense(const Matrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("SPD matrix must be square");
    if (!m.isApprox(m.transpose(), Scalar(1e-12)))
      throw std::invalid_argument("SPD matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    if (eig.eigenvalues().minCoeff() <= Scalar(0))
      throw std::invalid_argument("matrix is not positive definite");
    SpdOperator out(Space<Scalar>(m.rows()));
    out.dense_ = std::make_shared<const DenseParts>(
        DenseParts{m, m.inverse(), eig.operatorSqrt()});
    out.norm_ = eig.eigenvalues().maxCoeff();
    out.chi_ = eig.eigenvalues().minCoeff();
    return out;
  }

  const Space<Scalar>& space() const { return space_; }
  Index dim() const { return space_.dim(); }
  bool is_diagonal() const { return dense_ == nullptr; }
  const Vector& diagonal() const { return diag_; }

  /// sigma when U = sigma Id.
  std::optional<Scalar> scalar_value() const {
    if (!is_diagonal()) return std::nullopt;
    if ((diag_.array() == diag_(0)).all()) return diag_(0);
    return std::nullopt;
  }

  /// ||U||
  Scalar norm() const { return norm_; }
  /// Strong positivity constant chi with <Uv, v> >= chi ||v||^2.
  Scalar chi() const { return chi_; }

  Vector apply(const Vector& v) const {
    space_.require(v, "SpdOperator::apply");
    if (is_diagonal()) return (diag_.array() * v.array()).matrix();
    return dense_->m * v;
  }
  Vector apply_inverse(const Vector& v) const {
    space_.require(v, "SpdOperator::apply_inverse");
    if (is_diagonal()) return (v.array() / diag_.array()).matrix();
    return dense_->inv * v;
  }
  Vector apply_sqrt(const Vector& v) const {
    space_.require(v, "SpdOperator::apply_sqrt");
    if (is_diagonal()) return (diag_.array().sqrt() * v.array()).matrix();
    return dense_->sqrt * v;
  }

  Matrix to_dense() const {
    if (is_diagonal()) return diag_.asDiagonal();
    return dense_->m;
  }

 private:
  struct DenseParts {
    Matrix m, inv, sqrt;
  };

  explicit SpdOperator(Space<Scalar> space) : space_(std::move(space)) {}

  Space<Scalar> space_;
  Vector diag_;
  std::shared_ptr<const DenseParts> dense_;
  Scalar norm_ = 0;
  Scalar chi_ = 0;
};

template <typename Scalar>
struct SpdReport {
  Scalar min_ratio = std::numeric_limits<Scalar>::infinity();
  Scalar max_inverse_error = 0;
  bool passed = false;
};

template <typename Scalar>
SpdReport<Scalar> spd_check(const SpdOperator<Scalar>& u, int trials, Rng& rng) {
  SpdReport<Scalar> rep;
  const auto& s = u.space();
  for (int t = 0; t < trials; ++t) {
    const Vec<Scalar> v = random_gaussian<Scalar>(s.dim(), rng);
    rep.min_ratio = std::min(rep.min_ratio, s.dot(u.apply(v), v) / s.norm_sq(v));
    rep.max_inverse_error = std::max(
        rep.max_inverse_error, s.norm(u.apply(u.apply_inverse(v)) - v) / (1 + s.norm(v)));
  }
  rep.passed = rep.min_ratio >= u.chi() * (1 - Scalar(1e-12)) && rep.max_inverse_error <= Scalar(1e-10);
  return rep;
}

enum class TauStatus { accepted, rejected, indeterminate };

template <typename Scalar>
struct TauCertificate {
  TauStatus status = TauStatus::indeterminate;
  /// lambda_max(U^{1/2} L P L* U^{1/2})
  Scalar spectral_estimate = 0;
  /// tau * spectral_estimate, compared against 1 - margin
  Scalar scaled = 0;
  Scalar threshold = 1;
  bool strict = true;
  PowerResult<Scalar> power;

  bool accepted() const { return status == TauStatus::accepted; }
};

/// Operator v -> U^{1/2} L P L* U^{1/2} v on the dual space.
template <typename Scalar>
LinearMap<Scalar> symmetrized_coupling(const SpdOperator<Scalar>& u, const LinearMap<Scalar>& l,
                                       const OrthoProjector<Scalar>& p) {
  if (!(u.space() == l.codomain()) || !(p.space() == l.domain()))
    throw DimensionError("symmetrized_coupling: inconsistent spaces");
  if (!u.is_diagonal() && !u.space().is_euclidean())
    throw UnsupportedMetric("dense U on a weighted space");
  using V = Vec<Scalar>;
  auto fn = [u, l, p](const V& v) -> V {
    return u.apply_sqrt(l.apply(p.apply(l.adjoint_apply(u.apply_sqrt(v)))));
  };
  return LinearMap<Scalar>(u.space(), u.space(), fn, fn);
}

/// Step-size admissibility: is (tau U)^{-1} - L P L* positive definite (strict) or
/// semidefinite (non-strict)? Decided as tau * lambda_max(U^{1/2} L P L* U^{1/2})
/// against 1 - margin. Unconverged or borderline spectral estimates come back
/// indeterminate.
template <typename Scalar>
TauCertificate<Scalar> validate_tau(const SpdOperator<Scalar>& u, const LinearMap<Scalar>& l,
                                    const OrthoProjector<Scalar>& p, Scalar tau,
                                    Scalar margin = Scalar(1e-6), bool strict = true,
                                    Scalar tol = Scalar(1e-10), Index max_iter = 200000,
                                    std::uint64_t seed = 0x7a0) {
  if (!(tau > 0)) throw std::invalid_argument("validate_tau: tau must be positive");
  TauCertificate<Scalar> cert;
  cert.strict = strict;
  cert.threshold = 1 - margin;
  cert.power = power_iteration<Scalar>(symmetrized_coupling(u, l, p), tol, max_iter, Rng(seed));
  cert.spectral_estimate = cert.power.estimate;
  cert.scaled = tau * cert.spectral_estimate;
  if (!cert.power.converged) {
    cert.status = TauStatus::indeterminate;
    return cert;
  }
  const Scalar err = tau * tol * std::max(Scalar(1), cert.spectral_estimate);
  if (std::abs(cert.scaled - cert.threshold) <= err) {
    cert.status = TauStatus::indeterminate;
  } else if (strict) {
    cert.status = cert.scaled < cert.threshold ? TauStatus::accepted : TauStatus::rejected;
  } else {
    cert.status = cert.scaled <= cert.threshold ? TauStatus::accepted : TauStatus::rejected;
  }
  return cert;
}

/// ||v||^2_{R_n} with R_n = gamma_n^2 ((tau_n U)^{-1} - L P L*).
template <typename Scalar>
Scalar weighted_norm_sq(const Vec<Scalar>& v, const SpdOperator<Scalar>& u, Scalar tau_n,
                        Scalar gamma_n, const LinearMap<Scalar>& l,
                        const OrthoProjector<Scalar>& p) {
  const auto& g = u.space();
  g.require(v, "weighted_norm_sq");
  const Scalar metric = g.dot(u.apply_inverse(v), v) / tau_n;
  const Vec<Scalar> lstar = l.adjoint_apply(v);
  // <L P L* v, v>_G = <P L* v, L* v>_H
  const Scalar coupling = l.domain().dot(p.apply(lstar), lstar);
  const Scalar out = gamma_n * gamma_n * (metric - coupling);
  if (out < -Scalar(1e-12) * g.norm_sq(v) * std::max(Scalar(1), gamma_n * gamma_n))
    throw std::domain_error("weighted_norm_sq: negative value, step-size condition violated");
  return out;
}

}  // namespace papc
