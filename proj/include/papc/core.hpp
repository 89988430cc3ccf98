#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace papc {

using Index = Eigen::Index;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Rng = std::mt19937_64;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedMetric : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterate picks up a non-finite coordinate.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string quantity, Index iteration)
      : std::runtime_error("divergence: non-finite " + quantity + " at iteration " +
                           std::to_string(iteration)),
        quantity_(std::move(quantity)),
        iteration_(iteration) {}

  const std::string& quantity() const { return quantity_; }
  Index iteration() const { return iteration_; }

 private:
  std::string quantity_;
  Index iteration_;
};

class IndeterminateValue : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Value in R ∪ {−∞, +∞}. Infinities are explicit, never encoded as floats.
template <typename Scalar>
class ExtendedReal {
 public:
  enum class Kind { finite, plus_infinity, minus_infinity };

  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(Scalar value) : value_(value) {}  // NOLINT: implicit by intent

  static constexpr ExtendedReal plus_infinity() { return ExtendedReal(Kind::plus_infinity); }
  static constexpr ExtendedReal minus_infinity() { return ExtendedReal(Kind::minus_infinity); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::finite; }
  bool is_plus_infinity() const { return kind_ == Kind::plus_infinity; }
  bool is_minus_infinity() const { return kind_ == Kind::minus_infinity; }

  Scalar value() const {
    if (!is_finite()) throw IndeterminateValue("value() on an infinite extended real");
    return value_;
  }

  /// Float view, for reporting only.
  Scalar to_scalar() const {
    switch (kind_) {
      case Kind::plus_infinity: return std::numeric_limits<Scalar>::infinity();
      case Kind::minus_infinity: return -std::numeric_limits<Scalar>::infinity();
      default: return value_;
    }
  }

  friend ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.is_finite() && b.is_finite()) return ExtendedReal(a.value_ + b.value_);
    if ((a.is_plus_infinity() && b.is_minus_infinity()) ||
        (a.is_minus_infinity() && b.is_plus_infinity()))
      throw IndeterminateValue("+inf + -inf");
    return a.is_finite() ? b : a;
  }

  friend ExtendedReal operator-(const ExtendedReal& a) {
    switch (a.kind_) {
      case Kind::plus_infinity: return minus_infinity();
      case Kind::minus_infinity: return plus_infinity();
      default: return ExtendedReal(-a.value_);
    }
  }

  friend ExtendedReal operator-(const ExtendedReal& a, const ExtendedReal& b) { return a + (-b); }

 private:
  constexpr explicit ExtendedReal(Kind kind) : kind_(kind) {}

  Kind kind_ = Kind::finite;
  Scalar value_ = Scalar(0);
};

/// Finite-dimensional real coordinate space with an optional diagonal inner-product
/// weight: <x, y> = sum_k w_k x_k y_k. Empty weights mean the Euclidean product.
template <typename Scalar>
class Space {
 public:
  Space() = default;
  explicit Space(Index dim) : dim_(dim) {
    if (dim <= 0) throw DimensionError("space dimension must be positive");
  }
  Space(Index dim, Vec<Scalar> weights) : dim_(dim), weights_(std::move(weights)) {
    if (dim <= 0) throw DimensionError("space dimension must be positive");
    if (weights_.size() != dim) throw DimensionError("weight vector length differs from dimension");
    if ((weights_.array() <= Scalar(0)).any())
      throw std::invalid_argument("inner-product weights must be strictly positive");
  }

  Index dim() const { return dim_; }
  bool is_euclidean() const { return weights_.size() == 0; }
  const Vec<Scalar>& weights() const { return weights_; }

  template <typename A, typename B>
  Scalar dot(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) const {
    if (is_euclidean()) return x.dot(y);
    return (weights_.array() * x.array() * y.array()).sum();
  }

  template <typename A>
  Scalar norm_sq(const Eigen::MatrixBase<A>& x) const { return dot(x, x); }

  template <typename A>
  Scalar norm(const Eigen::MatrixBase<A>& x) const { return std::sqrt(norm_sq(x)); }

  void require(const Vec<Scalar>& x, const char* what) const {
    if (x.size() != dim_)
      throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(dim_) +
                           ", got " + std::to_string(x.size()));
  }

  friend bool operator==(const Space& a, const Space& b) {
    return a.dim_ == b.dim_ && a.weights_.size() == b.weights_.size() &&
           (a.weights_.size() == 0 || a.weights_ == b.weights_);
  }

 private:
  Index dim_ = 0;
  Vec<Scalar> weights_;
};

template <typename Scalar>
Vec<Scalar> random_gaussian(Index dim, Rng& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Vec<Scalar> out(dim);
  for (Index i = 0; i < dim; ++i) out(i) = normal(rng);
  return out;
}

template <typename Scalar>
bool all_finite(const Vec<Scalar>& x) {
  return x.allFinite();
}

}  // namespace papc
