#include "doctest.h"
#include "papc/bench/zoo.hpp"
#include "papc/prox_library.hpp"

using namespace papc;
using namespace papc::bench;
using Vd = Vec<double>;
using Md = Mat<double>;

namespace {

Schedules<double> constant_schedules(double gamma, double tau, double beta) {
  return Schedules<double>{Sequence<double>::constant(gamma), Sequence<double>::constant(tau), tau, beta};
}

Vd vec(std::initializer_list<double> xs) {
  Vd out(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}

/// Step sizes certified for the flat problem: gamma = 0.9 mu, tau = 0.9 / max_i sigma_i ||L_i||^2.
Schedules<double> certified_schedules(const CompositeProblem<double>& cp) {
  double lambda = 0;
  for (const auto& b : cp.blocks) lambda = std::max(lambda, b.U.norm() * b.L.norm() * b.L.norm());
  return constant_schedules(0.9 * cp.mu(), 0.9 / lambda, cp.mu());
}

StochasticOracle<double> noisy(const CompositeProblem<double>& cp, std::uint64_t seed) {
  return StochasticOracle<double>::gaussian(cp.C, VarianceSchedule<double>::polynomial(1.0, 1.0), seed);
}

/// h = 1/2 ||x - c||^2, g_1 = 0.4 ||.||_1, g_2 = 0.3 ||D .||_1 with D first differences.
CompositeProblem<double> fused_lasso_2(const Vd& c, const Vd& omega) {
  const Index d = c.size();
  std::vector<CompositeBlock<double>> blocks;
  blocks.push_back({prox::l1<double>(d, 0.4), LinearMap<double>::identity(d), SpdOperator<double>::scalar(d, 1.0)});
  blocks.push_back({prox::l1<double>(d - 1, 0.3), LinearMap<double>::from_matrix(difference_matrix(d)),
                    SpdOperator<double>::scalar(d - 1, 1.0)});
  return CompositeProblem<double>{omega, CocoerciveMap<double>::gradient(prox::smooth_squared_distance<double>(c)),
                                  std::move(blocks)};
}

/// One block: h = 1/2 ||D x - a||^2, g = weighted l1, L = Id.
CompositeProblem<double> single_block(const LassoData& data) {
  const Index d = data.D.cols();
  std::vector<CompositeBlock<double>> blocks;
  blocks.push_back({prox::l1<double>(data.weights), LinearMap<double>::identity(d), SpdOperator<double>::scalar(d, 1.0)});
  return CompositeProblem<double>{Vd::Ones(1),
                                  CocoerciveMap<double>::gradient(prox::smooth_least_squares<double>(data.D, data.a)),
                                  std::move(blocks)};
}

}  // namespace

TEST_CASE("lift with one block is the base problem") {
  const auto data = lasso_data(2, 3, 1.0);
  const auto cp = single_block(data);
  const auto lifted = lift(cp);
  CHECK(lifted.m == 1);
  CHECK(lifted.block_dim == 3);
  Rng rng(5);
  for (int k = 0; k < 5; ++k) {
    const Vd x = random_gaussian<double>(3, rng);
    const Vd v = random_gaussian<double>(3, rng);
    CHECK(lifted.spec.P.apply(x) == x);
    CHECK(lifted.spec.B.apply(x) == cp.C.apply(x));
    CHECK(lifted.spec.L.apply(x) == x);
    CHECK(lifted.spec.L.adjoint_apply(v) == v);
  }
}

TEST_CASE("averaging projector on the lifted space") {
  const auto p = OrthoProjector<double>::averaging(vec({0.5, 0.5}), 1);
  CHECK((p.apply(vec({1, 3})) - vec({2, 2})).norm() <= 1e-15);

  const auto q = OrthoProjector<double>::averaging(vec({0.25, 0.75}), 1);
  CHECK((q.apply(vec({4, 0})) - vec({1, 1})).norm() <= 1e-15);

  // blocks of dimension 2 average coordinatewise
  const auto r = OrthoProjector<double>::averaging(vec({0.25, 0.75}), 2);
  CHECK((r.apply(vec({4, 8, 0, 0})) - vec({1, 2, 1, 2})).norm() <= 1e-15);
}

TEST_CASE("lift rejects zero weights and dense metrics") {
  auto cp = fused_lasso_2(vec({1, 2, 3}), vec({1.0, 0.0}));
  CHECK_THROWS_AS(lift(cp), std::invalid_argument);

  auto dense = fused_lasso_2(vec({1, 2, 3}), vec({0.5, 0.5}));
  Md u = Md::Identity(3, 3);
  u(0, 1) = u(1, 0) = 0.2;
  dense.blocks[0].U = SpdOperator<double>::dense(u);
  CHECK_THROWS_AS(lift(dense), UnsupportedMetric);
}

TEST_CASE("composite_step with one block is papc_step") {
  const auto data = lasso_data(3, 4, 0.7);
  const auto cp = single_block(data);
  const auto sched = certified_schedules(cp);
  const ProblemSpec<double> spec{cp.C, cp.blocks[0].monotone(), cp.blocks[0].L, OrthoProjector<double>::full(4),
                                 cp.blocks[0].U};
  const auto oracle = noisy(cp, 11);
  auto a = initial_state(spec.P, Vd(Vd::Zero(4)), Vd(Vd::Zero(4)));
  auto b = a;
  for (int n = 0; n < 50; ++n) {
    a = composite_step(a, cp, sched, oracle);
    b = papc_step(b, spec, sched, oracle);
    REQUIRE((a.x - b.x).cwiseAbs().maxCoeff() <= 1e-14);
    REQUIRE((a.v - b.v).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("zero operators give a fixed point") {
  const Index d = 3;
  std::vector<CompositeBlock<double>> blocks;
  blocks.push_back({MonotoneBlock<double>::zero(2), LinearMap<double>::from_matrix(Md::Ones(2, d)),
                    SpdOperator<double>::scalar(2, 1.0)});
  blocks.push_back({MonotoneBlock<double>::zero(1), LinearMap<double>::from_matrix(Md::Ones(1, d)),
                    SpdOperator<double>::scalar(1, 1.0)});
  const CompositeProblem<double> cp{vec({0.5, 0.5}), CocoerciveMap<double>::zero(d), std::move(blocks)};
  const auto sched = constant_schedules(0.5, 0.1, 1.0);
  const auto oracle = StochasticOracle<double>::deterministic(cp.C);
  PapcState<double> s;
  s.x = vec({1, -2, 0.5});
  s.v = Vd::Zero(3);
  s.p = s.x;
  s.last_r = Vd::Zero(d);
  // A_i = 0 means the duals stay at zero and x never moves
  for (int n = 0; n < 10; ++n) {
    const auto next = composite_step(s, cp, sched, oracle);
    CHECK(next.x == s.x);
    CHECK(next.v == s.v);
    s = next;
  }
}

TEST_CASE("structured_min_step with zero duals and zero gradient is a fixed point") {
  const auto cp = fused_lasso_2(vec({0, 0, 0}), vec({0.5, 0.5}));
  const CompositeProblem<double> flat{cp.weights, CocoerciveMap<double>::zero(3), cp.blocks};
  const auto oracle = StochasticOracle<double>::deterministic(flat.C);
  const auto s = initial_state(OrthoProjector<double>::full(3), Vd(Vd::Zero(3)), Vd(Vd::Zero(5)));
  const auto next = structured_min_step(s, flat, constant_schedules(0.5, 0.4, 1.0), oracle);
  CHECK(next.x == s.x);
  CHECK(next.v == s.v);
}

TEST_CASE("fused lasso with two blocks: one flat step equals the lifted step") {
  const auto cp = fused_lasso_2(vec({0.2, 1.5, 1.4, -0.3, 0.8}), vec({0.4, 0.6}));
  const auto sched = certified_schedules(cp);
  const auto oracle = StochasticOracle<double>::deterministic(cp.C);
  const auto lifted = lift(cp);
  const auto rep_oracle = lifted.oracle(oracle);

  const auto a = composite_step(initial_state(OrthoProjector<double>::full(5), Vd(Vd::Zero(5)), Vd(Vd::Zero(9))), cp,
                                sched, oracle);
  const auto b = papc_step(initial_state(lifted.spec.P, Vd(Vd::Zero(10)), Vd(Vd::Zero(9))), lifted.spec, sched,
                           rep_oracle);
  for (Index i = 0; i < 2; ++i) CHECK((a.x - lifted.read_primal(b.x, i)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((a.v - b.v).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(a.x.norm() > 0.1);
}

TEST_CASE("lift_flat_equivalence on composite problems") {
  const auto multi = multi_problem(multi_data(1));
  const auto fl = fused_lasso_2(vec({0.2, 1.5, 1.4, -0.3, 0.8, 0.9}), vec({0.4, 0.6}));
  Config cfg = Config::parse(
      "[problem]\nname = composite\ndim = 6\nseed = 3\n"
      "[block.a]\ng = sqdist\nL = random:2\nweight = 0.25\nsigma = 2\n"
      "[block.b]\ng = l1:0.3\nL = difference\nweight = 0.5\n"
      "[block.c]\ng = box_support:-0.2:0.4\nL = random:2\nweight = 0.25\nsigma = 0.5\n");
  const auto configured = composite_problem(composite_data(cfg));

  for (const auto* cp : {&multi, &fl, &configured}) {
    const auto sched = certified_schedules(*cp);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto rep = lift_flat_equivalence(*cp, sched, noisy(*cp, seed), 100);
      CAPTURE(seed);
      CHECK(rep.steps == 100);
      CHECK(rep.relative() <= 1e-12);
      CHECK(rep.magnitude > 0);
    }
  }
}

TEST_CASE("lift_flat_equivalence on single-block zoo problems is exact") {
  const auto lasso = single_block(lasso_data(1, 4, 1.0));
  const auto fd = fused_data(20, 0.5, "steps");
  std::vector<CompositeBlock<double>> blocks;
  blocks.push_back({prox::l1<double>(19, fd.lambda), LinearMap<double>::from_matrix(difference_matrix(20)),
                    SpdOperator<double>::scalar(19, 1.0)});
  const CompositeProblem<double> fused{Vd::Ones(1),
                                       CocoerciveMap<double>::gradient(prox::smooth_squared_distance<double>(fd.y)),
                                       std::move(blocks)};
  for (const auto* cp : {&lasso, &fused}) {
    const auto sched = certified_schedules(*cp);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto rep = lift_flat_equivalence(*cp, sched, noisy(*cp, seed), 100);
      CHECK(rep.max_deviation == 0.0);
    }
  }
}

TEST_CASE("mismatched weights break the equivalence") {
  const auto a = fused_lasso_2(vec({0.2, 1.5, 1.4, -0.3, 0.8}), vec({0.4, 0.6}));
  const auto b = fused_lasso_2(vec({0.2, 1.5, 1.4, -0.3, 0.8}), vec({0.6, 0.4}));
  const auto sched = certified_schedules(a);
  const auto oracle = StochasticOracle<double>::deterministic(a.C);
  const auto rep = lift_flat_equivalence(a, b, sched, oracle, 100, Vd(Vd::Zero(5)), Vd(Vd::Zero(9)));
  CHECK(rep.relative() > 1e-6);
}

TEST_CASE("structured_min_step with g_i = 0 is gradient descent on h") {
  const Vd c = vec({1.0, -2.0, 0.5});
  std::vector<CompositeBlock<double>> blocks;
  blocks.push_back({prox::zero<double>(2), LinearMap<double>::from_matrix(Md::Ones(2, 3)),
                    SpdOperator<double>::scalar(2, 1.0)});
  blocks.push_back({prox::zero<double>(3), LinearMap<double>::identity(3), SpdOperator<double>::scalar(3, 2.0)});
  const CompositeProblem<double> cp{vec({0.3, 0.7}),
                                    CocoerciveMap<double>::gradient(prox::smooth_squared_distance<double>(c)),
                                    std::move(blocks)};
  const double gamma = 0.5;
  const auto sched = constant_schedules(gamma, 0.05, 1.0);
  const auto oracle = StochasticOracle<double>::deterministic(cp.C);
  auto s = initial_state(OrthoProjector<double>::full(3), vec({4, 4, 4}), vec({1, 1, -1, 2, 0.5}));
  Vd x = s.x;
  for (int n = 0; n < 20; ++n) {
    s = structured_min_step(s, cp, sched, oracle);
    // the first dual line already lands on zero, so the primal line sees no coupling
    CHECK(s.v.cwiseAbs().maxCoeff() == 0.0);
    x = x - gamma * (x - c);
    CHECK((s.x - x).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("structured_min_step with one block is saddle_step") {
  const auto data = lasso_data(4, 3, 0.8);
  const auto cp = single_block(data);
  const auto spec = lasso_saddle(data);
  const auto sched = certified_schedules(cp);
  const auto oracle = noisy(cp, 7);
  auto a = initial_state(spec.P, Vd(Vd::Zero(3)), Vd(Vd::Zero(3)));
  auto b = a;
  for (int n = 0; n < 30; ++n) {
    a = structured_min_step(a, cp, sched, oracle);
    b = saddle_step(b, spec, sched, oracle);
    REQUIRE((a.x - b.x).cwiseAbs().maxCoeff() <= 1e-14);
    REQUIRE((a.v - b.v).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("lifted C is cocoercive with the base constant") {
  const auto cp = multi_problem(multi_data(2));
  const auto lifted = lift(cp);
  CHECK(lifted.spec.B.beta() == doctest::Approx(cp.mu()));
  Rng rng(21);
  CHECK(cocoercivity_gap(lifted.spec.B, lifted.spec.P.space(), 200, 3.0, rng) <= 0);

  const auto ls = single_block(lasso_data(5, 5, 1.0));
  const auto l2 = lift(ls);
  CHECK(cocoercivity_gap(l2.spec.B, l2.spec.P.space(), 200, 3.0, rng) <= 0);
}

TEST_CASE("deterministic composite run reaches the dual inclusion") {
  for (const auto& [name, cp] : {std::pair{"multi", multi_problem(multi_data(1))},
                                 std::pair{"fused lasso", fused_lasso_2(vec({0.2, 1.5, 1.4, -0.3, 0.8}), vec({0.4, 0.6}))}}) {
    CAPTURE(name);
    const auto sched = certified_schedules(cp);
    RunOptions<double> opts;
    opts.horizon = 20000;
    opts.keep_trace = false;
    const auto rec = run(cp, sched, StochasticOracle<double>::deterministic(cp.C), Vd(Vd::Zero(cp.primal_dim())),
                         Vd(Vd::Zero(cp.dual_dim())), opts);
    REQUIRE(rec.ok());
    const auto res = composite_residuals(cp, rec.terminal.x, rec.terminal.v);
    CHECK(res.stationarity <= 1e-6);
    CHECK(res.max_block() <= 1e-6);
  }
}

TEST_CASE("validate_composite checks every block") {
  const auto cp = fused_lasso_2(vec({0.2, 1.5, 1.4, -0.3, 0.8}), vec({0.4, 0.6}));
  // ||Id||^2 = 1 and ||D||^2 < 4
  const auto ok = validate_composite(cp, constant_schedules(0.9, 0.2, 1.0), 100, Regime::almost_sure);
  CHECK(ok.passed());
  CHECK(ok.blockwise.size() == 2);
  CHECK_FALSE(ok.discrepancy);

  // tau = 0.5 passes the identity block and fails the difference block
  const auto bad = validate_composite(cp, constant_schedules(0.9, 0.5, 1.0), 100, Regime::almost_sure);
  CHECK_FALSE(bad.passed());
  CHECK(bad.blockwise[0].accepted());
  CHECK_FALSE(bad.blockwise[1].accepted());
  CHECK(bad.hypotheses.find("blockwise tau condition")->detail.find("block 1") != std::string::npos);

  // the lifted coupling is 0.4 + 0.6 ||D||^2 < ||D||^2, so tau = 0.3 splits the two tests
  const auto split = validate_composite(cp, constant_schedules(0.9, 0.3, 1.0), 100, Regime::almost_sure);
  CHECK_FALSE(split.passed());
  REQUIRE(split.hypotheses.tau);
  CHECK(split.hypotheses.tau->accepted());
  REQUIRE(split.discrepancy);
  CHECK(split.discrepancy->find("lifted test accepts") != std::string::npos);

  // gamma0 must stay below mu = 1
  CHECK_FALSE(validate_composite(cp, constant_schedules(1.2, 0.2, 1.0), 100, Regime::almost_sure).passed());
}

TEST_CASE("composite config grammar") {
  const auto base = std::string("[problem]\nname = composite\ndim = 4\n");
  CHECK_NOTHROW(composite_data(Config::parse(base + "[block.a]\ng = l1:0.5\n")));
  CHECK_THROWS_AS(composite_data(Config::parse(base)), ConfigError);
  CHECK_THROWS_AS(composite_data(Config::parse(base + "[block.a]\ng = huber:1\n")), ConfigError);
  CHECK_THROWS_AS(composite_data(Config::parse(base + "[block.a]\ng = l1:1\nL = random:0\n")), ConfigError);
  CHECK_THROWS_AS(composite_data(Config::parse(base + "[block.a]\ng = l1:1\ncolour = red\n")), ConfigError);
  CHECK_THROWS_AS(composite_data(Config::parse(base + "[block.a]\ng = zero\nweight = 0.4\n")), ConfigError);
  CHECK_THROWS_AS(composite_data(Config::parse(base + "[block.a]\ng = zero\nsigma = 0\n")), ConfigError);

  // default weights are uniform
  const auto two = composite_data(Config::parse(base + "[block.a]\ng = zero\n[block.b]\ng = sqdist:1\nL = difference\n"));
  REQUIRE(two.blocks.size() == 2);
  CHECK(two.blocks[0].omega == 0.5);
  CHECK(two.blocks[1].L.rows() == 3);
  CHECK(two.blocks[1].w == Vd::Ones(3));

  // block sections belong to the composite problem only
  CHECK_THROWS_AS(build_problem(Config::parse("[problem]\nname = lasso\n[block.a]\ng = zero\n")), ConfigError);
}
