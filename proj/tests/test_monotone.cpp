#include "doctest.h"
#include "papc/prox_library.hpp"

using namespace papc;
using Vd = Vec<double>;
using Md = Mat<double>;

namespace {

Vd v1(double a) { return Vd::Constant(1, a); }

Vd v3(double a, double b, double c) {
  Vd out(3);
  out << a, b, c;
  return out;
}

std::vector<std::pair<Vd, Vd>> samples(Index dim, int count, double spread, Rng& rng) {
  std::vector<std::pair<Vd, Vd>> out;
  for (int k = 0; k < count; ++k)
    out.emplace_back(spread * random_gaussian<double>(dim, rng), spread * random_gaussian<double>(dim, rng));
  return out;
}

}  // namespace

TEST_CASE("resolvent examples") {
  CHECK(resolvent(MonotoneBlock<double>::linear(Md::Identity(1, 1)), 1.0, v1(2))(0) == doctest::Approx(1.0));
  CHECK(resolvent(MonotoneBlock<double>::zero(1), 0.7, v1(-3))(0) == -3.0);
  const auto abs = MonotoneBlock<double>::subdifferential(prox::l1<double>(1, 1.0));
  CHECK(resolvent(abs, 0.5, v1(2))(0) == doctest::Approx(1.5));
  CHECK_THROWS(resolvent(abs, 0.0, v1(2)));
}

TEST_CASE("inverse resolvent examples") {
  CHECK(inverse_resolvent(MonotoneBlock<double>::linear(Md::Identity(1, 1)), 1.0, v1(2))(0) ==
        doctest::Approx(1.0));
  const auto abs = MonotoneBlock<double>::subdifferential(prox::l1<double>(1, 1.0));
  CHECK(inverse_resolvent(abs, 1.0, v1(2))(0) == doctest::Approx(1.0));
  CHECK(inverse_resolvent(abs, 1.0, v1(0.3))(0) == doctest::Approx(0.3));
}

TEST_CASE("prox in metric") {
  Rng rng(1);
  const Vd x = random_gaussian<double>(3, rng);
  CHECK(prox_in_metric(prox::zero<double>(3), SpdOperator<double>::scalar(3, 5.0), x) == x);
  CHECK(prox_in_metric(prox::l1<double>(1, 1.0), SpdOperator<double>::scalar(1, 1.0), v1(2))(0) ==
        doctest::Approx(1.0));
  // metric weight 1/2: prox of 2 f with f = 1/2 |.|^2
  CHECK(prox_in_metric(prox::squared_distance<double>(Vd::Zero(1)), SpdOperator<double>::scalar(1, 0.5), v1(3))(0) ==
        doctest::Approx(1.0));

  Vd d(3);
  d << 1, 2, 3;
  CHECK_THROWS_AS(prox_in_metric(prox::l1<double>(3, 1.0), SpdOperator<double>::diagonal(Space<double>(3), d), x),
                  UnsupportedMetric);

  auto sep = ProxFunction<double>::separable_sum({prox::l1<double>(1, 1.0), prox::box<double>(2, -1.0, 1.0)});
  Vd u(3);
  u << 0.5, 2, 2;
  const Vd p = prox_in_metric(sep, SpdOperator<double>::diagonal(Space<double>(3), u), v3(3, 4, -0.2));
  CHECK(p(0) == doctest::Approx(1.0));
  CHECK(p(1) == doctest::Approx(1.0));
  CHECK(p(2) == doctest::Approx(-0.2));
}

TEST_CASE("conjugate prox via Moreau") {
  CHECK(conjugate_prox_via_moreau(prox::l1<double>(1, 1.0), 1.0, v1(2))(0) == doctest::Approx(1.0));
  CHECK(conjugate_prox_via_moreau(prox::squared_distance<double>(Vd::Zero(1)), 1.0, v1(4))(0) ==
        doctest::Approx(2.0));
  const Vd p = conjugate_prox_via_moreau(prox::l1<double>(3, 1.0), 2.0, v3(3, -0.5, 1));
  CHECK(p(0) == doctest::Approx(1.0));
  CHECK(p(1) == doctest::Approx(-0.5));
  CHECK(p(2) == doctest::Approx(1.0));
}

TEST_CASE("prox library examples") {
  CHECK(prox::box<double>(1, -1.0, 1.0).prox(1.0, v1(5))(0) == 1.0);
  CHECK(prox::squared_distance<double>(Vd::Zero(1)).prox(1.0, v1(2))(0) == doctest::Approx(1.0));
  CHECK(prox::l1<double>(1, 2.0).prox(1.0, v1(3))(0) == doctest::Approx(1.0));
  CHECK(prox::singleton<double>(v3(1, 2, 3)).prox(0.3, v3(0, 0, 0)) == v3(1, 2, 3));
  const Vd lo = Vd::Constant(3, -1), hi = Vd::Constant(3, 2);
  // support of [lo, hi] is the conjugate of the box indicator: prox via Moreau must agree
  const Vd x = v3(3, -4, 0.5);
  CHECK((prox::box_support<double>(lo, hi).prox(0.7, x) - conjugate_prox_via_moreau(prox::box<double>(lo, hi), 0.7, x))
            .norm() <= 1e-14);
}

TEST_CASE("extended values of indicators") {
  const auto b = prox::box<double>(2, -1.0, 1.0);
  CHECK(b.value(Vd::Constant(2, 0.5)).value() == 0.0);
  CHECK(b.value(Vd::Constant(2, 1.5)).is_plus_infinity());
  CHECK(prox::l1<double>(2, 1.0).conjugate_value(Vd::Constant(2, 3.0)).is_plus_infinity());
  CHECK(prox::l1<double>(2, 1.0).conjugate_value(Vd::Constant(2, 0.3)).value() == 0.0);
  CHECK_THROWS_AS(b.value(Vd::Constant(2, 1.5)).value(), IndeterminateValue);
}

TEST_CASE("prox inequality") {
  Rng rng(2);
  const auto id1 = SpdOperator<double>::scalar(1, 1.0);
  CHECK(prox_inequality_check(prox::zero<double>(1), id1, samples(1, 20, 1.0, rng)).passed);
  CHECK(prox_inequality_check(prox::l1<double>(1, 1.0), id1, samples(1, 100, 3.0, rng)).passed);
  const auto l1 = prox::l1<double>(1, 1.0);
  const auto broken = prox_inequality_check<double>(
      l1, id1, samples(1, 100, 3.0, rng), [&](const Vd& x) -> Vd { return l1.prox(1.0, x).array() + 0.1; });
  CHECK_FALSE(broken.passed);

  const auto u = SpdOperator<double>::scalar(4, 0.4);
  const Md a = Md::Random(5, 4);
  for (const auto& f : {prox::squared_distance<double>(Vd::Ones(4)), prox::l1<double>(4, 0.7),
                        prox::box<double>(4, -0.5, 2.0), prox::box_support<double>(Vd::Constant(4, -1), Vd::Ones(4)),
                        prox::least_squares<double>(a, Vd::Ones(5))}) {
    CAPTURE(f.name());
    CHECK(prox_inequality_check(f, u, samples(4, 100, 2.0, rng)).passed);
  }
}

TEST_CASE("firm nonexpansiveness of shipped resolvents") {
  Rng rng(3);
  const Md a = Md::Random(5, 3);
  std::vector<ProxFunction<double>> fs{prox::zero<double>(3),
                                       prox::squared_distance<double>(Vd::Ones(3)),
                                       prox::l1<double>(3, 0.5),
                                       prox::box<double>(3, -1.0, 1.0),
                                       prox::singleton<double>(Vd::Ones(3)),
                                       prox::box_support<double>(Vd::Constant(3, -1), Vd::Constant(3, 2)),
                                       prox::least_squares<double>(a, Vd::Ones(5))};
  for (const auto& f : fs) {
    const auto blk = MonotoneBlock<double>::subdifferential(f);
    for (double lam : {0.1, 1.0, 10.0}) {
      CAPTURE(f.name());
      CAPTURE(lam);
      CHECK(firm_nonexpansiveness_gap<double>([&](const Vd& x) { return blk.resolvent(lam, x); }, 3, 200, 3.0,
                                              rng) <= 1e-10);
      CHECK(firm_nonexpansiveness_gap<double>([&](const Vd& x) { return inverse_resolvent(blk, lam, x); }, 3, 200,
                                              3.0, rng) <= 1e-10);
    }
  }
}

TEST_CASE("Moreau decomposition") {
  Rng rng(4);
  std::vector<ProxFunction<double>> fs{prox::squared_distance<double>(v3(1, -2, 0.5)), prox::l1<double>(3, 0.5),
                                       prox::box<double>(3, -1.0, 1.0),
                                       prox::box_support<double>(Vd::Constant(3, -1), Vd::Constant(3, 2))};
  for (const auto& g : fs) {
    for (double lam : {0.1, 1.0, 10.0}) {
      for (int k = 0; k < 50; ++k) {
        const Vd x = 3 * random_gaussian<double>(3, rng);
        const Vd lhs = conjugate_prox_via_moreau(g, lam, x) + lam * g.prox(1 / lam, Vd(x / lam));
        CHECK((lhs - x).norm() <= 1e-10);
      }
    }
  }
}

TEST_CASE("cocoercive maps") {
  Rng rng(5);
  const Md a = Md::Random(6, 3);
  const auto h = prox::smooth_least_squares<double>(a, Vd::Ones(6));
  const auto b = CocoerciveMap<double>::gradient(h);
  CHECK(cocoercivity_gap(b, Space<double>(3), 200, 3.0, rng) <= 0.0);
  const auto too_big = CocoerciveMap<double>(3, [&](const Vd& x) { return b.apply(x); }, 2 * b.beta());
  CHECK(cocoercivity_gap(too_big, Space<double>(3), 200, 3.0, rng) > 0.0);
  CHECK(std::isinf(CocoerciveMap<double>::zero(3).beta()));
}

TEST_CASE("metric resolvents of products reduce blockwise") {
  const auto g = ProxFunction<double>::separable_sum({prox::l1<double>(1, 1.0), prox::squared_distance<double>(Vd::Zero(2))});
  const auto a = MonotoneBlock<double>::subdifferential(g);
  Vd d(3);
  d << 2, 0.5, 0.5;
  const auto u = SpdOperator<double>::diagonal(Space<double>(3), d);
  const Vd y = v3(3, 1, -1);
  const Vd via_a = metric_inverse_resolvent(a, u, 0.8, y);
  const Vd via_g = metric_conjugate_prox(g, u, 0.8, y);
  CHECK(via_a == via_g);
  CHECK(via_a(0) == doctest::Approx(1.0));
  // g* = 1/2|.|^2 on the quadratic block: prox_{0.4 g*}(1) = 1/1.4
  CHECK(via_a(1) == doctest::Approx(1 / 1.4));
}
