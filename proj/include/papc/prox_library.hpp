#pragma once

#include "papc/monotone.hpp"

namespace papc::prox {

namespace detail {

template <typename Scalar>
constexpr Scalar membership_tol(Scalar scale) {
  return Scalar(1e-12) * (1 + scale);
}

template <typename Scalar>
bool in_box(const Vec<Scalar>& x, const Vec<Scalar>& lo, const Vec<Scalar>& hi) {
  for (Index i = 0; i < x.size(); ++i) {
    if (x(i) < lo(i) - membership_tol(std::abs(lo(i)))) return false;
    if (x(i) > hi(i) + membership_tol(std::abs(hi(i)))) return false;
  }
  return true;
}

template <typename Scalar>
Scalar box_support_value(const Vec<Scalar>& a, const Vec<Scalar>& lo, const Vec<Scalar>& hi) {
  return (lo.array() * a.array()).max(hi.array() * a.array()).sum();
}

}  // namespace detail

/// f = 0
template <typename Scalar>
ProxFunction<Scalar> zero(Index dim) {
  using V = Vec<Scalar>;
  using E = ExtendedReal<Scalar>;
  typename ProxFunction<Scalar>::Ops ops;
  ops.name = "zero";
  ops.dim = dim;
  ops.prox = [](Scalar, const V& x) { return x; };
  ops.value = [](const V&) { return E(Scalar(0)); };
  ops.conjugate_value = [](const V& a) {
    return a.cwiseAbs().maxCoeff() <= detail::membership_tol(Scalar(0)) ? E(Scalar(0))
                                                                          : E::plus_infinity();
  };
  return ProxFunction<Scalar>(std::move(ops));
}

/// f(x) = 1/2 ||x - b||^2
template <typename Scalar>
ProxFunction<Scalar> squared_distance(const Vec<Scalar>& b) {
  using V = Vec<Scalar>;
  using E = ExtendedReal<Scalar>;
  typename ProxFunction<Scalar>::Ops ops;
  ops.name = "sqdist";
  ops.dim = b.size();
  ops.prox = [b](Scalar lambda, const V& x) -> V { return (x + lambda * b) / (1 + lambda); };
  ops.value = [b](const V& x) { return E(Scalar(0.5) * (x - b).squaredNorm()); };
  ops.conjugate_value = [b](const V& a) { return E(Scalar(0.5) * a.squaredNorm() + a.dot(b)); };
  return ProxFunction<Scalar>(std::move(ops));
}

/// f(x) = sum_i w_i |x_i|
template <typename Scalar>
ProxFunction<Scalar> l1(const Vec<Scalar>& weights) {
  using V = Vec<Scalar>;
  using E = ExtendedReal<Scalar>;
  if ((weights.array() < 0).any()) throw std::invalid_argument("l1 weights must be nonnegative");
  typename ProxFunction<Scalar>::Ops ops;
  ops.name = "l1";
  ops.dim = weights.size();
  ops.prox = [weights](Scalar lambda, const V& x) -> V {
    const V t = lambda * weights;
    return (x.array().sign() * (x.array().abs() - t.array()).max(Scalar(0))).matrix();
  };
  ops.value = [weights](const V& x) { return E((weights.array() * x.array().abs()).sum()); };
  ops.conjugate_value = [weights](const V& a) {
    return detail::in_box<Scalar>(a, -weights, weights) ? E(Scalar(0)) : E::plus_infinity();
  };
  return ProxFunction<Scalar>(std::move(ops));
}

template <typename Scalar>
ProxFunction<Scalar> l1(Index dim, Scalar weight) {
  return l1<Scalar>(Vec<Scalar>::Constant(dim, weight));
}

/// f = indicator of [lo, hi]
template <typename Scalar>
ProxFunction<Scalar> box(const Vec<Scalar>& lo, const Vec<Scalar>& hi) {
  using V = Vec<Scalar>;
  using E = ExtendedReal<Scalar>;
  if (lo.size() != hi.size() || (lo.array() > hi.array()).any())
    throw std::invalid_argument("box: need lo <= hi of equal length");
  typename ProxFunction<Scalar>::Ops ops;
  ops.name = "box";
  ops.dim = lo.size();
  ops.prox = [lo, hi](Scalar, const V& x) -> V { return x.cwiseMax(lo).cwiseMin(hi); };
  ops.value = [lo, hi](const V& x) {
    return detail::in_box<Scalar>(x, lo, hi) ? E(Scalar(0)) : E::plus_infinity();
  };
  ops.conjugate_value = [lo, hi](const V& a) { return E(detail::box_support_value<Scalar>(a, lo, hi)); };
  return ProxFunction<Scalar>(std::move(ops));
}

template <typename Scalar>
ProxFunction<Scalar> box(Index dim, Scalar lo, Scalar hi) {
  return box<Scalar>(Vec<Scalar>::Constant(dim, lo), Vec<Scalar>::Constant(dim, hi));
}

/// f = indicator of {c}
template <typename Scalar>
ProxFunction<Scalar> singleton(const Vec<Scalar>& c) {
  using V = Vec<Scalar>;
  using E = ExtendedReal<Scalar>;
  typename ProxFunction<Scalar>::Ops ops;
  ops.name = "singleton";
  ops.dim = c.size();
  ops.prox = [c](Scalar, const V&) -> V { return c; };
  ops.value = [c](const V& x) {
    return (x - c).cwiseAbs().maxCoeff() <= detail::membership_tol(c.cwiseAbs().maxCoeff())
               ? E(Scalar(0))
               : E::plus_infinity();
  };
  ops.conjugate_value = [c](const V& a) { return E(a.dot(c)); };
  return ProxFunction<Scalar>(std::move(ops));
}

/// f(y) = sup_{z in [lo, hi]} <z, y>, the conjugate of the box indicator.
template <typename Scalar>
ProxFunction<Scalar> box_support(const Vec<Scalar>& lo, const Vec<Scalar>& hi) {
  using V = Vec<Scalar>;
  using E = ExtendedReal<Scalar>;
  if (lo.size() != hi.size() || (lo.array() > hi.array()).any())
    throw std::invalid_argument("box_support: need lo <= hi of equal length");
  typename ProxFunction<Scalar>::Ops ops;
  ops.name = "box_support";
  ops.dim = lo.size();
  // prox_{lambda sigma_C}(x) = x - lambda P_C(x / lambda)
  ops.prox = [lo, hi](Scalar lambda, const V& x) -> V {
    const V z = (x / lambda).cwiseMax(lo).cwiseMin(hi);
    return x - lambda * z;
  };
  ops.value = [lo, hi](const V& y) { return E(detail::box_support_value<Scalar>(y, lo, hi)); };
  ops.conjugate_value = [lo, hi](const V& a) {
    return detail::in_box<Scalar>(a, lo, hi) ? E(Scalar(0)) : E::plus_infinity();
  };
  return ProxFunction<Scalar>(std::move(ops));
}

/// f(x) = 1/2 ||A x - b||^2 as a proximable function.
template <typename Scalar>
ProxFunction<Scalar> least_squares(const Mat<Scalar>& a, const Vec<Scalar>& b) {
  using V = Vec<Scalar>;
  using E = ExtendedReal<Scalar>;
  if (a.rows() != b.size()) throw DimensionError("least_squares: A rows differ from b length");
  auto gram = std::make_shared<const Mat<Scalar>>(a.transpose() * a);
  auto atb = std::make_shared<const V>(a.transpose() * b);
  typename ProxFunction<Scalar>::Ops ops;
  ops.name = "least_squares";
  ops.dim = a.cols();
  ops.prox = [gram, atb](Scalar lambda, const V& x) -> V {
    Mat<Scalar> sys = lambda * (*gram);
    sys.diagonal().array() += Scalar(1);
    return sys.llt().solve(x + lambda * (*atb));
  };
  ops.value = [a, b](const V& x) { return E(Scalar(0.5) * (a * x - b).squaredNorm()); };
  return ProxFunction<Scalar>(std::move(ops));
}

/// h(x) = 1/2 ||A x - b||^2 as a smooth function; its gradient is 1/||A||^2-cocoercive.
template <typename Scalar>
SmoothFunction<Scalar> smooth_least_squares(const Mat<Scalar>& a, const Vec<Scalar>& b) {
  using V = Vec<Scalar>;
  if (a.rows() != b.size()) throw DimensionError("smooth_least_squares: A rows differ from b length");
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> eig(a.transpose() * a, Eigen::EigenvaluesOnly);
  const Scalar lip = eig.eigenvalues().maxCoeff();
  auto am = std::make_shared<const Mat<Scalar>>(a);
  return SmoothFunction<Scalar>(
      "least_squares", a.cols(),
      [am, b](const V& x) { return Scalar(0.5) * ((*am) * x - b).squaredNorm(); },
      [am, b](const V& x) -> V { return am->transpose() * ((*am) * x - b); },
      lip > 0 ? 1 / lip : std::numeric_limits<Scalar>::infinity());
}

/// h(x) = 1/2 ||x - b||^2
template <typename Scalar>
SmoothFunction<Scalar> smooth_squared_distance(const Vec<Scalar>& b) {
  using V = Vec<Scalar>;
  return SmoothFunction<Scalar>(
      "sqdist", b.size(), [b](const V& x) { return Scalar(0.5) * (x - b).squaredNorm(); },
      [b](const V& x) -> V { return x - b; }, Scalar(1));
}

}  // namespace papc::prox
