#include "papc/bench/zoo.hpp"

#include "papc/bench/matrix_io.hpp"
#include "papc/prox_library.hpp"

#include <cstring>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace papc::bench {

namespace {

constexpr double kSelfCheck = 1e-8;

// Portable draws: the raw mt19937_64 stream is fully specified, the standard
// distributions are not.
double unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Matd uniform_matrix(Index rows, Index cols, Rng& rng) {
  Matd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = 2 * unit(rng) - 1;
  return m;
}

Vecd uniform_vector(Index n, Rng& rng) { return uniform_matrix(n, 1, rng).col(0); }

void self_check(const std::string& name, double kkt) {
  if (!(kkt <= kSelfCheck))
    throw OracleError(name + ": oracle self-check failed (KKT residual " + format_double(kkt) + ")");
}

double coupling_norm(const SaddleSpec<double>& spec) {
  const auto op = symmetrized_coupling(spec.U, spec.L, spec.P);
  return power_iteration<double>(op, 1e-13, 500000, Rng(0x0c1e)).estimate;
}

std::string cache_key(const std::string& tag, std::initializer_list<const Matd*> parts) {
  std::string key = tag;
  for (const Matd* m : parts) key += "|" + format_matrix(*m);
  return key;
}

/// Long-run solutions are costly; identical problems share one.
OracleSolution cached_long_run(const std::string& key, const SaddleSpec<double>& spec) {
  static std::mutex mu;
  static std::map<std::string, OracleSolution> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  OracleSolution sol = long_run_oracle(spec);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(sol)).first->second;
}

}  // namespace

KktResidual<double> ZooInstance::kkt(const Vecd& x, const Vecd& v) const {
  return kkt_residual(lift_x(x), v, inclusion());
}

// --- data ------------------------------------------------------------------------

ClsData cls_data(std::uint64_t seed) {
  Rng rng(seed);
  ClsData d;
  d.D = Matd::Zero(8, 6);
  d.D.topRows(6) = Matd::Identity(6, 6) + 0.3 * uniform_matrix(6, 6, rng);
  d.D.bottomRows(2) = uniform_matrix(2, 6, rng);
  d.a = 2 * uniform_vector(8, rng);
  d.L = uniform_matrix(4, 6, rng);
  d.b = uniform_vector(4, rng);
  const Matd raw = uniform_matrix(6, 4, rng);
  d.basis = Eigen::HouseholderQR<Matd>(raw).householderQ() * Matd::Identity(6, 4);
  return d;
}

LassoData lasso_data(std::uint64_t seed, Index dim, double weight) {
  if (dim < 1 || dim > 5) throw ZooError("lasso: dim must lie in 1..5");
  if (!(weight > 0)) throw ZooError("lasso: weight must be positive");
  Rng rng(seed);
  LassoData d;
  d.D = Matd::Zero(dim + 2, dim);
  d.D.topRows(dim) = Matd::Identity(dim, dim) + 0.3 * uniform_matrix(dim, dim, rng);
  d.D.bottomRows(2) = 0.5 * uniform_matrix(2, dim, rng);
  d.a = 3 * uniform_vector(dim + 2, rng);
  d.weights = Vecd::Constant(dim, weight);
  return d;
}

FusedData fused_data(Index n, double lambda, const std::string& signal) {
  if (n < 2 || n > 30) throw ZooError("fused: n must lie in 2..30");
  if (!(lambda > 0)) throw ZooError("fused: lambda must be positive");
  FusedData d;
  d.lambda = lambda;
  if (signal == "constant") {
    d.y = Vecd::Constant(n, 1.5);
  } else if (signal == "steps") {
    d.y.resize(n);
    for (Index k = 0; k < n; ++k) {
      const double level = k < n / 3 ? 0.0 : (k < 2 * n / 3 ? 2.0 : 1.0);
      d.y(k) = level + 0.3 * std::sin(1.7 * static_cast<double>(k));
    }
  } else {
    throw ZooError("fused: signal must be steps or constant");
  }
  return d;
}

MultiData multi_data(std::uint64_t seed) {
  Rng rng(seed);
  MultiData d;
  d.c = 2 * uniform_vector(5, rng);
  d.omega = Vecd(3);
  d.omega << 0.5, 0.3, 0.2;
  d.L1 = uniform_matrix(2, 5, rng);
  d.w1 = Vecd::Constant(2, 0.4);
  d.L2 = uniform_matrix(2, 5, rng);
  d.lo = Vecd(2);
  d.lo << -0.3, -0.2;
  d.hi = Vecd(2);
  d.hi << 0.5, 0.3;
  d.L3 = uniform_matrix(1, 5, rng);
  d.b3 = uniform_vector(1, rng);
  return d;
}

CompositeData to_composite(const MultiData& data) {
  using K = DualBlock::Kind;
  CompositeData out{data.c, {}};
  out.blocks.push_back({K::l1, data.L1, data.w1, {}, {}, data.omega(0), 1.0});
  out.blocks.push_back({K::box_support, data.L2, {}, data.lo, data.hi, data.omega(1), 1.0});
  out.blocks.push_back({K::sqdist, data.L3, data.b3, {}, {}, data.omega(2), 1.0});
  return out;
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

CompositeData composite_data(const Config& cfg) {
  using K = DualBlock::Kind;
  const long long seed = cfg.integer("problem.seed", 1);
  if (seed < 0) throw ConfigError("problem.seed must be nonnegative");
  const long long dim = cfg.integer("problem.dim", 5);
  if (dim < 1 || dim > 50) throw ZooError("composite: dim must lie in 1..50");
  const auto names = cfg.subsections("block");
  if (names.empty()) throw ConfigError("composite: at least one [block.<name>] section is required");
  static const std::set<std::string> keys{"g", "L", "weight", "sigma"};
  for (const auto& [k, v] : cfg.entries()) {
    if (k.rfind("block.", 0) != 0) continue;
    const auto dot = k.rfind('.');
    if (dot == 5 || !keys.count(k.substr(dot + 1)) || k.find('.', 6) != dot)
      throw ConfigError("unknown block key '" + k + "'");
  }

  Rng rng(static_cast<std::uint64_t>(seed));
  CompositeData d;
  d.c = 2 * uniform_vector(dim, rng);
  double total = 0;
  for (const auto& name : names) {
    const std::string pre = "block." + name + ".";
    DualBlock b{K::zero, {}, {}, {}, {}, 1, 1};

    const std::string lspec = cfg.get_or(pre + "L", "identity");
    const auto lparts = split(lspec, ':');
    if (lparts[0] == "identity" && lparts.size() == 1) {
      b.L = Matd::Identity(dim, dim);
    } else if (lparts[0] == "difference" && lparts.size() == 1) {
      if (dim < 2) throw ZooError(pre + "L: difference needs dim >= 2");
      b.L = difference_matrix(dim);
    } else if (lparts[0] == "random" && lparts.size() == 2) {
      const double rows = parse_number(lparts[1], pre + "L");
      if (rows < 1 || rows > 50 || rows != static_cast<double>(static_cast<Index>(rows)))
        throw ConfigError(pre + "L: row count must be an integer in 1..50");
      b.L = uniform_matrix(static_cast<Index>(rows), dim, rng);
    } else if (lparts[0] == "file" && lparts.size() >= 2) {
      const auto path = cfg.resolve(lspec.substr(5));
      try {
        b.L = read_matrix(path);
      } catch (const std::exception& e) {
        throw ConfigError(pre + "L: " + e.what());
      }
      if (b.L.cols() != dim)
        throw ConfigError(pre + "L: " + path.string() + " has " + std::to_string(b.L.cols()) + " columns, dim is " +
                          std::to_string(dim));
    } else {
      throw ConfigError(pre + "L: expected identity, difference, random:<rows> or file:<path>, got '" + lspec + "'");
    }
    const Index k = b.L.rows();

    const auto g = cfg.get(pre + "g");
    if (!g) throw ConfigError(pre + "g is required");
    const auto gparts = split(*g, ':');
    if (gparts[0] == "l1" && gparts.size() == 2) {
      b.kind = K::l1;
      const double w = parse_number(gparts[1], pre + "g");
      if (!(w >= 0)) throw ConfigError(pre + "g: l1 weight must be nonnegative");
      b.w = Vecd::Constant(k, w);
    } else if (gparts[0] == "box_support" && gparts.size() == 3) {
      b.kind = K::box_support;
      const double lo = parse_number(gparts[1], pre + "g"), hi = parse_number(gparts[2], pre + "g");
      if (!(lo <= hi)) throw ConfigError(pre + "g: box_support needs lo <= hi");
      b.lo = Vecd::Constant(k, lo);
      b.hi = Vecd::Constant(k, hi);
    } else if (gparts[0] == "sqdist" && gparts.size() <= 2) {
      b.kind = K::sqdist;
      b.w = gparts.size() == 2 ? Vecd(Vecd::Constant(k, parse_number(gparts[1], pre + "g"))) : uniform_vector(k, rng);
    } else if (gparts[0] == "zero" && gparts.size() == 1) {
      b.kind = K::zero;
    } else {
      throw ConfigError(pre + "g: expected l1:<w>, box_support:<lo>:<hi>, sqdist[:<b>] or zero, got '" + *g + "'");
    }

    b.omega = cfg.number(pre + "weight", 1.0 / static_cast<double>(names.size()));
    b.sigma = cfg.number(pre + "sigma", 1.0);
    if (!(b.omega > 0 && b.omega <= 1)) throw ConfigError(pre + "weight must lie in (0, 1]");
    if (!(b.sigma > 0)) throw ConfigError(pre + "sigma must be positive");
    total += b.omega;
    d.blocks.push_back(std::move(b));
  }
  if (std::abs(total - 1) > 1e-12) throw ConfigError("composite: block weights must sum to 1, got " + format_double(total));
  return d;
}

Matd difference_matrix(Index n) {
  Matd m = Matd::Zero(n - 1, n);
  for (Index k = 0; k + 1 < n; ++k) {
    m(k, k) = -1;
    m(k, k + 1) = 1;
  }
  return m;
}

// --- oracles -----------------------------------------------------------------------

OracleSolution cls_kkt_oracle(const ClsData& data) {
  const Index d = data.D.cols();
  const Matd q = data.basis.size() == 0 ? Matd(Matd::Identity(d, d)) : data.basis;
  const Matd hess = data.D.transpose() * data.D + data.L.transpose() * data.L;
  const Vecd rhs = data.D.transpose() * data.a + data.L.transpose() * data.b;
  const Vecd z = (q.transpose() * hess * q).ldlt().solve(q.transpose() * rhs);
  OracleSolution sol;
  sol.x = q * z;
  sol.v = data.L * sol.x - data.b;
  sol.work = 1;
  return sol;
}

OracleSolution lasso_enumeration_oracle(const LassoData& data) {
  const Index d = data.D.cols();
  const Matd gram = data.D.transpose() * data.D;
  const Vecd q = data.D.transpose() * data.a;
  const Vecd& w = data.weights;
  const double tol = 1e-12;

  OracleSolution best;
  best.kkt = std::numeric_limits<double>::infinity();
  Index patterns = 1;
  for (Index k = 0; k < d; ++k) patterns *= 3;
  std::vector<int> sign(static_cast<std::size_t>(d));
  for (Index code = 0; code < patterns; ++code) {
    Index rest = code;
    std::vector<Index> free;
    for (Index k = 0; k < d; ++k) {
      sign[static_cast<std::size_t>(k)] = static_cast<int>(rest % 3) - 1;
      rest /= 3;
      if (sign[static_cast<std::size_t>(k)] != 0) free.push_back(k);
    }
    Vecd x = Vecd::Zero(d);
    if (!free.empty()) {
      const Index f = static_cast<Index>(free.size());
      Matd sys(f, f);
      Vecd rhs(f);
      for (Index i = 0; i < f; ++i) {
        rhs(i) = q(free[i]) - w(free[i]) * sign[static_cast<std::size_t>(free[i])];
        for (Index j = 0; j < f; ++j) sys(i, j) = gram(free[i], free[j]);
      }
      const Vecd xf = sys.ldlt().solve(rhs);
      bool consistent = true;
      for (Index i = 0; i < f; ++i) {
        if (!(sign[static_cast<std::size_t>(free[i])] * xf(i) > 0)) consistent = false;
        x(free[i]) = xf(i);
      }
      if (!consistent) continue;
    }
    const Vecd v = q - gram * x;
    bool feasible = true;
    double residual = 0;
    for (Index k = 0; k < d; ++k) {
      const int s = sign[static_cast<std::size_t>(k)];
      if (s == 0) {
        if (std::abs(v(k)) > w(k) * (1 + tol) + tol) feasible = false;
      } else {
        residual = std::max(residual, std::abs(v(k) - s * w(k)));
      }
    }
    if (feasible && residual < best.kkt) {
      best.x = x;
      best.v = v;
      best.kkt = residual;
    }
  }
  if (best.x.size() == 0) throw OracleError("lasso: no sign pattern satisfies the subgradient conditions");
  best.work = patterns;
  return best;
}

OracleSolution long_run_oracle(const SaddleSpec<double>& spec, const LongRunOptions& opts) {
  const double beta = spec.h.beta();
  const double lambda = coupling_norm(spec);
  const double gamma = opts.gamma_scale * beta;
  const double tau = lambda > 0 ? opts.tau_scale / lambda : 1.0;
  const Schedules<double> sched{Sequence<double>::constant(gamma), Sequence<double>::constant(tau), tau, beta};
  const auto oracle = StochasticOracle<double>::deterministic(CocoerciveMap<double>::gradient(spec.h));
  const auto inclusion = spec.to_inclusion();

  auto state = initial_state(spec.P, Vecd(Vecd::Zero(spec.primal().dim())), Vecd(Vecd::Zero(spec.dual().dim())));
  double res = kkt_residual(state.x, state.v, inclusion).max();
  Index n = 0;
  while (n < opts.max_steps && res > opts.target) {
    state = saddle_step(state, spec, sched, oracle);
    ++n;
    if (n % opts.check_every == 0) res = kkt_residual(state.x, state.v, inclusion).max();
  }
  res = kkt_residual(state.x, state.v, inclusion).max();
  if (!(res <= opts.accept))
    throw OracleError("long-run oracle: KKT residual " + format_double(res) + " after " + std::to_string(n) +
                      " steps");
  return OracleSolution{state.x, state.v, res, n};
}

OracleSolution dual_projected_gradient(const Vecd& c, const std::vector<DualBlock>& blocks, Index max_steps,
                                       double tol) {
  double lip = 0;
  Index total = 0;
  for (const auto& b : blocks) {
    const double s = Eigen::JacobiSVD<Matd>(b.L).singularValues()(0);
    lip += b.omega * s * s;
    total += b.L.rows();
  }
  const double t = lip > 0 ? 1 / lip : 1.0;
  Vecd v = Vecd::Zero(total);
  auto primal = [&](const Vecd& vv) {
    Vecd x = c;
    Index off = 0;
    for (const auto& b : blocks) {
      x -= b.omega * b.L.transpose() * vv.segment(off, b.L.rows());
      off += b.L.rows();
    }
    return x;
  };
  Index n = 0;
  for (; n < max_steps; ++n) {
    const Vecd x = primal(v);
    Vecd next(total);
    Index off = 0;
    for (const auto& b : blocks) {
      const Index k = b.L.rows();
      const Vecd z = v.segment(off, k) + t * b.L * x;
      switch (b.kind) {
        case DualBlock::Kind::l1: next.segment(off, k) = z.cwiseMax(-b.w).cwiseMin(b.w); break;
        case DualBlock::Kind::box_support: next.segment(off, k) = z.cwiseMax(b.lo).cwiseMin(b.hi); break;
        case DualBlock::Kind::sqdist: next.segment(off, k) = (z - t * b.w) / (1 + t); break;
        case DualBlock::Kind::zero: next.segment(off, k).setZero(); break;
      }
      off += k;
    }
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (change <= tol * (1 + v.cwiseAbs().maxCoeff())) break;
  }
  return OracleSolution{primal(v), v, 0, n};
}

// --- builders ------------------------------------------------------------------------

ZooInstance make_cls(const ClsData& data) {
  const Index d = data.D.cols();
  auto proj = data.basis.size() == 0 ? OrthoProjector<double>::full(d) : OrthoProjector<double>::from_basis(data.basis);
  SaddleSpec<double> spec{prox::smooth_least_squares<double>(data.D, data.a), prox::squared_distance<double>(data.b),
                          LinearMap<double>::from_matrix(data.L), std::move(proj),
                          SpdOperator<double>::scalar(data.L.rows(), 1.0)};
  const auto sol = cls_kkt_oracle(data);
  ZooInstance inst{"cls", spec, std::nullopt, 1, spec.h, LeastSquaresData{data.D, data.a},
                   sol.x, sol.v, "dense KKT solve on V", 0};
  inst.oracle_kkt = inst.kkt(sol.x, sol.v).max();
  self_check("cls", inst.oracle_kkt);
  return inst;
}

SaddleSpec<double> lasso_saddle(const LassoData& data) {
  const Index d = data.D.cols();
  return SaddleSpec<double>{prox::smooth_least_squares<double>(data.D, data.a), prox::l1<double>(data.weights),
                            LinearMap<double>::identity(d), OrthoProjector<double>::full(d),
                            SpdOperator<double>::scalar(d, 1.0)};
}

ZooInstance make_lasso(const LassoData& data) {
  const auto spec = lasso_saddle(data);
  const auto sol = lasso_enumeration_oracle(data);
  ZooInstance inst{"lasso", spec, std::nullopt, 1, spec.h, LeastSquaresData{data.D, data.a},
                   sol.x, sol.v, "sign-pattern enumeration", 0};
  inst.oracle_kkt = inst.kkt(sol.x, sol.v).max();
  self_check("lasso", inst.oracle_kkt);
  return inst;
}

SaddleSpec<double> fused_saddle(const FusedData& data) {
  const Index n = data.y.size();
  return SaddleSpec<double>{prox::smooth_squared_distance<double>(data.y), prox::l1<double>(n - 1, data.lambda),
                            LinearMap<double>::from_matrix(difference_matrix(n)), OrthoProjector<double>::full(n),
                            SpdOperator<double>::scalar(n - 1, 1.0)};
}

ZooInstance make_fused(const FusedData& data) {
  const auto spec = fused_saddle(data);
  const Matd lam = Matd::Constant(1, 1, data.lambda);
  const Matd y = data.y;
  const auto sol = cached_long_run(cache_key("fused", {&y, &lam}), spec);
  ZooInstance inst{"fused", spec, std::nullopt, 1, spec.h, std::nullopt,
                   sol.x, sol.v, "long deterministic run", 0};
  inst.oracle_kkt = inst.kkt(sol.x, sol.v).max();
  self_check("fused", inst.oracle_kkt);
  return inst;
}

CompositeProblem<double> composite_problem(const CompositeData& data) {
  using LM = LinearMap<double>;
  using SO = SpdOperator<double>;
  using K = DualBlock::Kind;
  std::vector<CompositeBlock<double>> blocks;
  Vecd omega(static_cast<Index>(data.blocks.size()));
  for (std::size_t i = 0; i < data.blocks.size(); ++i) {
    const auto& b = data.blocks[i];
    const Index k = b.L.rows();
    ProxFunction<double> g = prox::zero<double>(k);
    switch (b.kind) {
      case K::l1: g = prox::l1<double>(b.w); break;
      case K::box_support: g = prox::box_support<double>(b.lo, b.hi); break;
      case K::sqdist: g = prox::squared_distance<double>(b.w); break;
      case K::zero: break;
    }
    blocks.push_back({std::move(g), LM::from_matrix(b.L), SO::scalar(k, b.sigma)});
    omega(static_cast<Index>(i)) = b.omega;
  }
  CompositeProblem<double> cp{omega, CocoerciveMap<double>::gradient(prox::smooth_squared_distance<double>(data.c)),
                              std::move(blocks)};
  cp.check();
  return cp;
}

CompositeProblem<double> multi_problem(const MultiData& data) { return composite_problem(to_composite(data)); }

namespace {

/// The composite problem as one saddle problem on H^m: h and g pick up the weights
/// of the product inner products.
SaddleSpec<double> lifted_saddle(const CompositeProblem<double>& cp, const SmoothFunction<double>& h) {
  const auto lifted = lift(cp);
  const Index m = cp.m(), d = cp.primal_dim();
  const Vecd w = cp.weights;
  SmoothFunction<double> hh(
      "lifted " + h.name(), m * d,
      [h, w, m, d](const Vecd& x) {
        double acc = 0;
        for (Index i = 0; i < m; ++i) acc += w(i) * h.value(Vecd(x.segment(i * d, d)));
        return acc;
      },
      [h, m, d](const Vecd& x) -> Vecd {
        Vecd out(m * d);
        for (Index i = 0; i < m; ++i) out.segment(i * d, d) = h.gradient(Vecd(x.segment(i * d, d)));
        return out;
      },
      h.beta());

  std::vector<ProxFunction<double>> gs;
  for (const auto& b : cp.blocks) gs.push_back(*b.function());
  auto g = ProxFunction<double>::separable_sum(std::move(gs), std::vector<double>(w.data(), w.data() + w.size()));
  return SaddleSpec<double>{std::move(hh), std::move(g), lifted.spec.L, lifted.spec.P,
                            lifted.spec.U};
}

}  // namespace

ZooInstance make_composite(const CompositeData& data, const std::string& name) {
  const auto cp = composite_problem(data);
  const auto h = prox::smooth_squared_distance<double>(data.c);
  const auto spec = lifted_saddle(cp, h);
  std::string key = "composite|" + format_matrix(Matd(data.c));
  for (const auto& b : data.blocks) {
    key += "|" + std::to_string(static_cast<int>(b.kind)) + ":" + format_double(b.omega) + ":" +
           format_double(b.sigma) + "|" + format_matrix(b.L) + format_matrix(Matd(b.w)) + format_matrix(Matd(b.lo)) +
           format_matrix(Matd(b.hi));
  }
  const auto sol = cached_long_run(key, spec);
  const Vecd x = sol.x.head(cp.primal_dim());
  ZooInstance inst{name, spec, cp, cp.m(), h, std::nullopt, x, sol.v, "long deterministic run (lifted)", 0};
  inst.oracle_kkt = inst.kkt(x, sol.v).max();
  self_check(name, inst.oracle_kkt);
  return inst;
}

ZooInstance make_multi(const MultiData& data) { return make_composite(to_composite(data), "multi"); }

// --- registry ------------------------------------------------------------------------

namespace {

std::uint64_t seed_param(const Config& cfg, std::uint64_t fallback) {
  const long long s = cfg.integer("problem.seed", static_cast<long long>(fallback));
  if (s < 0) throw ConfigError("problem.seed must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

}  // namespace

const std::vector<ZooEntry>& zoo() {
  static const std::vector<ZooEntry> entries{
      {"cls", "constrained least squares on a 4-dim subspace of R^6", {"seed"},
       [](const Config& c) { return make_cls(cls_data(seed_param(c, 1))); }},
      {"lasso", "least squares with weighted l1, dim <= 5", {"seed", "dim", "weight"},
       [](const Config& c) {
         return make_lasso(lasso_data(seed_param(c, 1), c.integer("problem.dim", 4), c.number("problem.weight", 1.0)));
       }},
      {"fused", "1-D total-variation denoising", {"n", "lambda", "signal"},
       [](const Config& c) {
         return make_fused(
             fused_data(c.integer("problem.n", 20), c.number("problem.lambda", 0.5), c.get_or("problem.signal", "steps")));
       }},
      {"multi", "three weighted composite terms (l1, box support, quadratic)", {"seed"},
       [](const Config& c) { return make_multi(multi_data(seed_param(c, 1))); }},
      {"composite", "1/2 ||x - c||^2 plus the weighted [block.<name>] terms", {"seed", "dim"},
       [](const Config& c) { return make_composite(composite_data(c)); }},
  };
  return entries;
}

const ZooEntry& find_problem(const std::string& name) {
  std::string names;
  for (const auto& e : zoo()) {
    if (e.name == name) return e;
    names += (names.empty() ? "" : ", ") + e.name;
  }
  throw ZooError("unknown problem '" + name + "'; available: " + names);
}

ZooInstance build_problem(const Config& cfg) {
  const auto name = cfg.get("problem.name");
  if (!name) throw ConfigError("problem.name is required");
  const auto& entry = find_problem(*name);
  const std::set<std::string> allowed(entry.parameters.begin(), entry.parameters.end());
  for (const auto& [k, v] : cfg.entries()) {
    if (k.rfind("problem.", 0) != 0 || k == "problem.name") continue;
    if (!allowed.count(k.substr(8))) throw ConfigError("unknown parameter '" + k + "' for problem " + *name);
  }
  if (entry.name != "composite")
    for (const auto& [k, v] : cfg.entries())
      if (k.rfind("block.", 0) == 0) throw ConfigError("'" + k + "': block sections apply only to problem composite");
  return entry.build(cfg);
}

}  // namespace papc::bench
