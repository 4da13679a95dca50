#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "tdcp/observation.hpp"
#include "tdcp/trajectory.hpp"

namespace tdcp {

/// Node tangent: (rho, phi) applied on the right of the pose, then (dv, domega) added
/// to the twist.
constexpr int kNodeDim = 12;
using NodeVector = Eigen::Matrix<double, kNodeDim, 1>;
using NodeJacobian = Eigen::Matrix<double, Eigen::Dynamic, kNodeDim>;
using Matrix12d = Eigen::Matrix<double, 12, 12>;
using Vector12d = Eigen::Matrix<double, 12, 1>;

StateNode retract(const StateNode& node, const NodeVector& delta);

/// Double difference between epochs a and b of the phases of `other_prn` against
/// `ref_prn`. Phase ranges are already corrected for the broadcast satellite clock.
struct TdcpPairMeasurement {
  GpsTime t_a;
  GpsTime t_b;
  int ref_prn = 0;
  int other_prn = 0;
  double phi_dd = 0.0;  ///< m: (Phi_o(b) - Phi_o(a)) - (Phi_r(b) - Phi_r(a))
  Eigen::Vector3d u_ref = Eigen::Vector3d::UnitZ();    ///< receiver -> satellite, ENU, at t_a
  Eigen::Vector3d u_other = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d sat_ref_a = Eigen::Vector3d::Zero();  ///< emission positions, ENU m
  Eigen::Vector3d sat_ref_b = Eigen::Vector3d::Zero();
  Eigen::Vector3d sat_other_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d sat_other_b = Eigen::Vector3d::Zero();
  double atmo_dd = 0.0;  ///< modelled T_dd - I_dd, m
  double weight = 1e4;   ///< 1 / sigma^2, 1/m^2

  /// Throws InvalidArgument when the unit vectors are not normalized or t_b <= t_a.
  void validate() const;
};

/// Double-differenced geometric range for receiver positions r_a, r_b (ENU).
double double_differenced_range(const TdcpPairMeasurement& m, const Eigen::Vector3d& r_a, const Eigen::Vector3d& r_b);

struct ScalarResidual {
  double e = 0.0;
  Eigen::Matrix<double, 1, kNodeDim> j_a = Eigen::Matrix<double, 1, kNodeDim>::Zero();
  Eigen::Matrix<double, 1, kNodeDim> j_b = Eigen::Matrix<double, 1, kNodeDim>::Zero();
};

/// Unwhitened TDCP residual e = phi_dd - rho_dd - atmo_dd with its Jacobians.
ScalarResidual tdcp_residual(const TdcpPairMeasurement& m, const StateNode& a, const StateNode& b,
                             const Eigen::Vector3d& lever_arm);

/// Q(dt) for a white-noise-on-acceleration prior with power spectral density Qc.
Matrix12d wnoa_covariance(double dt, const Matrix6d& qc);

struct WnoaResidual {
  Vector12d e = Vector12d::Zero();  ///< unwhitened
  Matrix12d j_k = Matrix12d::Zero();
  Matrix12d j_k1 = Matrix12d::Zero();
};

/// e = [log(T_k^-1 T_k1) - dt w_k; w_k1 - w_k]. Throws InvalidArgument when dt <= 0.
WnoaResidual wnoa_residual(const StateNode& k, const StateNode& k1);

struct NonholonomicResidual {
  Eigen::Vector2d e = Eigen::Vector2d::Zero();  ///< whitened
  Eigen::Matrix<double, 2, kNodeDim> j = Eigen::Matrix<double, 2, kNodeDim>::Zero();
};

NonholonomicResidual nonholonomic_residual(const StateNode& node, double sigma_y, double sigma_z);

struct RelPoseResidual {
  Vector6d e = Vector6d::Zero();  ///< whitened
  Eigen::Matrix<double, 6, kNodeDim> j_a = Eigen::Matrix<double, 6, kNodeDim>::Zero();
  Eigen::Matrix<double, 6, kNodeDim> j_b = Eigen::Matrix<double, 6, kNodeDim>::Zero();
};

/// e = L^-1 log(T_ab^-1 T_a^-1 T_b) with covariance = L L^T. Throws InvalidArgument when
/// the node timestamps differ from the measurement's by more than 1e-3 s.
RelPoseResidual rel_pose_residual(const RelPoseMeasurement& m, const StateNode& a, const StateNode& b);

struct PositionPriorResidual {
  Eigen::Vector3d e = Eigen::Vector3d::Zero();  ///< whitened
  Eigen::Matrix<double, 3, kNodeDim> j = Eigen::Matrix<double, 3, kNodeDim>::Zero();
};

/// e = (T lever_arm - prior) / sigma.
PositionPriorResidual position_prior_residual(const StateNode& node, const Eigen::Vector3d& prior, double sigma,
                                              const Eigen::Vector3d& lever_arm);

/// Dynamic covariance scaling factor s = min(1, 2 Phi / (Phi + chi2)).
double dcs_scale(double chi2, double phi);
/// Cost whose iteratively reweighted form is DCS: chi2 below Phi, Phi(3 chi2 - Phi)/(Phi + chi2) above.
double dcs_cost(double chi2, double phi);

// ---------------------------------------------------------------------------
// Solver-facing factor objects. Residuals and Jacobians are whitened.

class Factor {
 public:
  virtual ~Factor() = default;
  /// Window indices of the nodes this factor touches.
  virtual const std::vector<int>& keys() const = 0;
  virtual int dim() const = 0;
  /// jacobians has one dim x 12 block per key, or is null when only e is needed.
  virtual void evaluate(const std::vector<StateNode>& nodes, Eigen::VectorXd& e,
                        std::vector<NodeJacobian>* jacobians) const = 0;
  /// DCS kernel parameter, or 0 for a plain quadratic cost.
  virtual double robust_phi() const { return 0.0; }
};

using FactorPtr = std::shared_ptr<const Factor>;

FactorPtr make_tdcp_factor(int a, int b, const TdcpPairMeasurement& m, const Eigen::Vector3d& lever_arm,
                           double dcs_phi);
FactorPtr make_wnoa_factor(int k, int k1, const Matrix6d& qc, double dt);
FactorPtr make_nonholonomic_factor(int k, double sigma_y, double sigma_z);
FactorPtr make_rel_pose_factor(int a, int b, const RelPoseMeasurement& m);
FactorPtr make_position_prior_factor(int k, const Eigen::Vector3d& prior, double sigma,
                                     const Eigen::Vector3d& lever_arm);
/// Prior on the rotation and twist of one node: sigmas (roll, pitch, yaw, v, omega);
/// a non-positive sigma leaves that component unconstrained.
FactorPtr make_state_prior_factor(int k, const Eigen::Matrix3d& rotation, const Vector6d& twist,
                                  const Eigen::Vector3d& rot_sigmas, const Vector6d& twist_sigmas);

}  // namespace tdcp
