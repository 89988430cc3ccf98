#pragma once

#include "papc/core.hpp"
#include "papc/linop.hpp"
#include "papc/monotone.hpp"
#include "papc/prox_library.hpp"
#include "papc/schedule.hpp"
#include "papc/stochastic.hpp"
#include "papc/solver.hpp"
#include "papc/composite.hpp"
#include "papc/diagnostics.hpp"

namespace papc {

using Vecd = Vec<double>;
using Matd = Mat<double>;

}  // namespace papc
