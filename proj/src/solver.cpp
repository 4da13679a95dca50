#include "tdcp/solver.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include <Eigen/Dense>

#include "tdcp/error.hpp"

namespace tdcp {

namespace {

double factor_cost(const Factor& f, const Eigen::VectorXd& e) {
  const double chi2 = e.squaredNorm();
  return f.robust_phi() > 0.0 ? dcs_cost(chi2, f.robust_phi()) : chi2;
}

struct LinearSystem {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  double cost = 0.0;
};

// Global column of each free tangent component, -1 when held.
using ColumnMap = std::vector<std::array<int, kNodeDim>>;

LinearSystem linearize(const std::vector<StateNode>& nodes, const ColumnMap& cols,
                       const std::vector<FactorPtr>& factors, int dim) {
  LinearSystem sys;
  sys.h = Eigen::MatrixXd::Zero(dim, dim);
  sys.g = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd e;
  std::vector<NodeJacobian> jac;
  for (const auto& f : factors) {
    f->evaluate(nodes, e, &jac);
    const double chi2 = e.squaredNorm();
    sys.cost += 0.5 * factor_cost(*f, e);
    double s = 1.0;
    if (f->robust_phi() > 0.0) s = dcs_scale(chi2, f->robust_phi());
    const double w = s * s;
    const auto& keys = f->keys();
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const auto& ci = cols[keys[i]];
      const Eigen::VectorXd gi = w * jac[i].transpose() * e;
      for (int a = 0; a < kNodeDim; ++a) {
        if (ci[a] >= 0) sys.g[ci[a]] += gi[a];
      }
      for (std::size_t j = 0; j < keys.size(); ++j) {
        const auto& cj = cols[keys[j]];
        const Eigen::Matrix<double, kNodeDim, kNodeDim> hij = w * jac[i].transpose() * jac[j];
        for (int a = 0; a < kNodeDim; ++a) {
          if (ci[a] < 0) continue;
          for (int b = 0; b < kNodeDim; ++b) {
            if (cj[b] >= 0) sys.h(ci[a], cj[b]) += hij(a, b);
          }
        }
      }
    }
  }
  return sys;
}

std::vector<StateNode> apply_step(const std::vector<StateNode>& nodes, const ColumnMap& cols,
                                  const Eigen::VectorXd& step) {
  std::vector<StateNode> out = nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    NodeVector delta = NodeVector::Zero();
    bool any = false;
    for (int a = 0; a < kNodeDim; ++a) {
      if (cols[i][a] < 0) continue;
      delta[a] = step[cols[i][a]];
      any = true;
    }
    if (!any) continue;
    out[i] = retract(nodes[i], delta);
    if (out[i].pose.orthonormality_error() > 1e-12) out[i].pose.orthonormalize();
  }
  return out;
}

}  // namespace

double total_cost(const std::vector<StateNode>& nodes, const std::vector<FactorPtr>& factors) {
  double cost = 0.0;
  Eigen::VectorXd e;
  for (const auto& f : factors) {
    f->evaluate(nodes, e, nullptr);
    cost += 0.5 * factor_cost(*f, e);
  }
  return cost;
}

SolverSummary solve_window(std::vector<StateNode>& nodes, const std::vector<bool>& fixed,
                           const std::vector<FactorPtr>& factors, const SolverOptions& opts) {
  if (fixed.size() != nodes.size()) throw InvalidArgument("solve_window: fixed mask size mismatch");
  std::vector<DofMask> free(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!fixed[i]) free[i].set();
  }
  return solve_window(nodes, free, factors, opts);
}

SolverSummary solve_window(std::vector<StateNode>& nodes, const std::vector<DofMask>& free,
                           const std::vector<FactorPtr>& factors, const SolverOptions& opts) {
  if (free.size() != nodes.size()) throw InvalidArgument("solve_window: mask size mismatch");
  ColumnMap offset(nodes.size());
  int dim = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (int a = 0; a < kNodeDim; ++a) offset[i][a] = free[i][a] ? dim++ : -1;
  }
  if (dim == 0) throw InvalidArgument("solve_window: no free nodes");
  for (const auto& f : factors) {
    for (int k : f->keys()) {
      if (k < 0 || k >= static_cast<int>(nodes.size())) throw InvalidArgument("solve_window: factor key out of range");
    }
  }

  SolverSummary summary;
  double radius = opts.trust_radius_init;
  LinearSystem sys = linearize(nodes, offset, factors, dim);
  summary.initial_cost = sys.cost;
  double cost = sys.cost;
  bool relinearize = false;

  while (summary.iterations < opts.max_iterations) {
    if (relinearize) {
      sys = linearize(nodes, offset, factors, dim);
      cost = sys.cost;
      relinearize = false;
    }
    if (cost < 1e-24) {
      summary.converged = true;
      break;
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(sys.h);
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    const double dmin = d.minCoeff();
    if (ldlt.info() != Eigen::Success || !(dmax > 0.0) || !(dmin > 1e-14 * dmax)) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "solve_window: normal equations not positive definite (dim %d, min pivot %.3e, max pivot %.3e)",
                    dim, dmin, dmax);
      throw NumericalError(buf);
    }
    const Eigen::VectorXd h_gn = ldlt.solve(-sys.g);
    const double gnorm = sys.g.norm();
    if (gnorm < 1e-15 || h_gn.norm() < 1e-12) {
      summary.converged = true;
      break;
    }

    // Dogleg step inside the trust region.
    Eigen::VectorXd step;
    if (h_gn.norm() <= radius) {
      step = h_gn;
    } else {
      const double alpha = sys.g.squaredNorm() / sys.g.dot(sys.h * sys.g);
      const Eigen::VectorXd h_sd = -alpha * sys.g;
      if (h_sd.norm() >= radius) {
        step = -(radius / gnorm) * sys.g;
      } else {
        const Eigen::VectorXd diff = h_gn - h_sd;
        const double a = diff.squaredNorm();
        const double b = 2.0 * h_sd.dot(diff);
        const double c = h_sd.squaredNorm() - radius * radius;
        const double beta = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
        step = h_sd + beta * diff;
      }
    }

    const double predicted = -sys.g.dot(step) - 0.5 * step.dot(sys.h * step);
    std::vector<StateNode> candidate = apply_step(nodes, offset, step);
    const double new_cost = total_cost(candidate, factors);
    ++summary.iterations;
    const double gain = predicted > 0.0 ? (cost - new_cost) / predicted : -1.0;

    if (gain > 0.25 && new_cost <= cost) {
      const double prev = cost;
      nodes = std::move(candidate);
      cost = new_cost;
      summary.accepted_costs.push_back(cost);
      relinearize = true;
      if (gain > 0.75) radius = std::min(opts.trust_radius_max, std::max(radius, 3.0 * step.norm()));
      if (prev - new_cost <= opts.cost_rel_tol * prev) {
        summary.converged = true;
        break;
      }
    } else {
      radius = 0.5 * std::min(radius, step.norm());
      if (radius < 1e-12) {
        summary.converged = true;
        break;
      }
    }
  }
  summary.final_cost = cost;
  return summary;
}

}  // namespace tdcp
