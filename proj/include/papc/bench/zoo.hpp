#pragma once

#include "papc/bench/config.hpp"
#include "papc/composite.hpp"
#include "papc/diagnostics.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace papc::bench {

using Vecd = Vec<double>;
using Matd = Mat<double>;

class ZooError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An oracle that could not certify its own answer.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// h(x) = 1/2 ||D x - a||^2, kept for row-sampled gradients.
struct LeastSquaresData {
  Matd D;
  Vecd a;
};

/// A zoo problem with its reference solution. Composite problems carry the flat
/// problem and run as such; `saddle` is then the lifted problem on H^m, and base
/// primal vectors enter it through lift_x.
struct ZooInstance {
  std::string name;
  SaddleSpec<double> saddle;
  std::optional<CompositeProblem<double>> composite;
  Index copies = 1;
  /// h on the base space
  SmoothFunction<double> h;
  std::optional<LeastSquaresData> least_squares;

  Vecd x_bar;
  Vecd v_bar;
  std::string oracle_method;
  double oracle_kkt = 0;

  Index primal_dim() const { return h.dim(); }
  Index dual_dim() const { return saddle.dual().dim(); }
  double beta() const { return h.beta(); }
  Vecd lift_x(const Vecd& x) const { return x.replicate(copies, 1); }
  ProblemSpec<double> inclusion() const { return saddle.to_inclusion(); }

  /// KKT residual of a base primal point and a dual point.
  KktResidual<double> kkt(const Vecd& x, const Vecd& v) const;
};

// --- problem data ----------------------------------------------------------------

/// h = 1/2 ||D x - a||^2, g = 1/2 ||y - b||^2, V spanned by the orthonormal columns
/// of `basis` (empty: V = H).
struct ClsData {
  Matd D;
  Vecd a;
  Matd L;
  Vecd b;
  Matd basis;
};

/// h = 1/2 ||D x - a||^2, g = sum_k w_k |y_k|, L = Id.
struct LassoData {
  Matd D;
  Vecd a;
  Vecd weights;
};

/// h = 1/2 ||x - y||^2, g = lambda ||.||_1, L = first differences.
struct FusedData {
  Vecd y;
  double lambda = 0.5;
};

/// One composite term omega g(L x) with the dual metric sigma Id.
struct DualBlock {
  enum class Kind { l1, box_support, sqdist, zero };
  Kind kind;
  Matd L;
  /// l1 weights, or b for sqdist
  Vecd w;
  Vecd lo;
  Vecd hi;
  double omega = 1;
  double sigma = 1;
};

/// h = 1/2 ||x - c||^2 plus sum_i omega_i g_i(L_i x).
struct CompositeData {
  Vecd c;
  std::vector<DualBlock> blocks;
};

/// h = 1/2 ||x - c||^2 with three composite terms: w1 ||L1 x||_1 (weighted l1),
/// the support function of [lo, hi] at L2 x, and 1/2 ||L3 x - b3||^2.
struct MultiData {
  Vecd c;
  Vecd omega;
  Matd L1;
  Vecd w1;
  Matd L2;
  Vecd lo;
  Vecd hi;
  Matd L3;
  Vecd b3;
};

ClsData cls_data(std::uint64_t seed);
LassoData lasso_data(std::uint64_t seed, Index dim, double weight);
FusedData fused_data(Index n, double lambda, const std::string& signal);
MultiData multi_data(std::uint64_t seed);
CompositeData to_composite(const MultiData& data);

/// Composite data from problem.dim, problem.seed and [block.<name>] sections with keys
/// g (l1:<w> | box_support:<lo>:<hi> | sqdist | sqdist:<b> | zero),
/// L (random:<rows> | identity | difference | file:<path>), weight and sigma. Paths are
/// relative to the config file.
/// Random draws take c first, then each block in name order.
CompositeData composite_data(const Config& cfg);

Matd difference_matrix(Index n);

ZooInstance make_cls(const ClsData& data);
ZooInstance make_lasso(const LassoData& data);
ZooInstance make_fused(const FusedData& data);
ZooInstance make_multi(const MultiData& data);
ZooInstance make_composite(const CompositeData& data, const std::string& name = "composite");

/// Plain saddle instances without a reference solution, for oracle comparisons.
SaddleSpec<double> lasso_saddle(const LassoData& data);
SaddleSpec<double> fused_saddle(const FusedData& data);
CompositeProblem<double> multi_problem(const MultiData& data);
CompositeProblem<double> composite_problem(const CompositeData& data);

// --- independent oracles -------------------------------------------------------

struct OracleSolution {
  Vecd x;
  Vecd v;
  double kkt = 0;
  Index work = 0;
};

/// Dense linear solve of the stationarity system restricted to V.
OracleSolution cls_kkt_oracle(const ClsData& data);

/// Tries all 3^dim sign patterns; keeps the pattern whose reduced solve satisfies the
/// subgradient conditions with the smallest KKT residual.
OracleSolution lasso_enumeration_oracle(const LassoData& data);

struct LongRunOptions {
  Index max_steps = 1000000;
  double gamma_scale = 0.5;
  double tau_scale = 0.5;
  /// stop once the residual is this small
  double target = 1e-12;
  /// accept the result only below this residual
  double accept = 1e-9;
  Index check_every = 500;
};

/// Deterministic run at conservative step sizes from zero, stopped at `target` or
/// after max_steps; throws OracleError above `accept`.
OracleSolution long_run_oracle(const SaddleSpec<double>& spec, const LongRunOptions& opts = {});


/// Proximal gradient on the dual of min 1/2 ||x - c||^2 + sum_i omega_i g_i(L_i x),
/// x = c - sum_i omega_i L_i^T v_i. A method independent of the primal-dual iteration;
/// the block metrics sigma do not enter.
OracleSolution dual_projected_gradient(const Vecd& c, const std::vector<DualBlock>& blocks,
                                       Index max_steps = 2000000, double tol = 1e-14);

// --- registry --------------------------------------------------------------------

struct ZooEntry {
  std::string name;
  std::string summary;
  std::vector<std::string> parameters;
  std::function<ZooInstance(const Config&)> build;
};

const std::vector<ZooEntry>& zoo();

/// Throws ZooError listing the registered names.
const ZooEntry& find_problem(const std::string& name);

/// Builds problem.name with its problem.* parameters; unknown parameters are errors.
ZooInstance build_problem(const Config& cfg);

}  // namespace papc::bench
