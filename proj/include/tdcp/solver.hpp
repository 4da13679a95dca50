#pragma once

#include <bitset>
#include <string>
#include <vector>

#include "tdcp/factors.hpp"

namespace tdcp {

struct SolverOptions {
  int max_iterations = 20;
  double cost_rel_tol = 1e-6;
  double trust_radius_init = 1.0;
  double trust_radius_max = 100.0;
};

struct SolverSummary {
  int iterations = 0;  ///< steps evaluated, accepted or rejected
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> accepted_costs;  ///< cost after each accepted step
  bool converged = false;
};

/// Total cost 0.5 * sum over factors of |e|^2, or of dcs_cost(|e|^2) for robust factors.
double total_cost(const std::vector<StateNode>& nodes, const std::vector<FactorPtr>& factors);

/// Dogleg Gauss-Newton over the free nodes. `fixed[i]` holds node i constant. DCS
/// weights are recomputed at every linearization. Throws InvalidArgument when no node
/// is free and NumericalError when the normal equations cannot be factorized.
SolverSummary solve_window(std::vector<StateNode>& nodes, const std::vector<bool>& fixed,
                           const std::vector<FactorPtr>& factors, const SolverOptions& opts = {});

/// Free tangent components of a node, in retract order (rho, phi, twist).
using DofMask = std::bitset<kNodeDim>;

/// As above with per-component freedom. A node whose translation block is held keeps
/// its origin exactly, since exp of a pure rotation has no translation.
SolverSummary solve_window(std::vector<StateNode>& nodes, const std::vector<DofMask>& free,
                           const std::vector<FactorPtr>& factors, const SolverOptions& opts = {});

}  // namespace tdcp
