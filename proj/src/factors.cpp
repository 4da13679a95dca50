#include "tdcp/factors.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "tdcp/error.hpp"

namespace tdcp {

StateNode retract(const StateNode& node, const NodeVector& delta) {
  StateNode out = node;
  out.pose = node.pose * se3_exp(delta.head<6>());
  out.twist = node.twist + delta.tail<6>();
  return out;
}

void TdcpPairMeasurement::validate() const {
  if (!(t_b > t_a)) throw InvalidArgument("TdcpPairMeasurement: t_b must be after t_a");
  if (std::abs(u_ref.norm() - 1.0) > 1e-12 || std::abs(u_other.norm() - 1.0) > 1e-12) {
    throw InvalidArgument("TdcpPairMeasurement: unit vectors not normalized");
  }
  if (ref_prn == other_prn) throw InvalidArgument("TdcpPairMeasurement: reference equals other satellite");
}

namespace {

// |x_b| - |x_a| without cancellation between two ~2e7 m norms.
double range_change(const Eigen::Vector3d& x_a, const Eigen::Vector3d& x_b) {
  return (x_b - x_a).dot(x_b + x_a) / (x_b.norm() + x_a.norm());
}

// d(receiver position)/d(node tangent) for r = p + R l.
Eigen::Matrix<double, 3, kNodeDim> receiver_jacobian(const StateNode& n, const Eigen::Vector3d& lever) {
  Eigen::Matrix<double, 3, kNodeDim> j = Eigen::Matrix<double, 3, kNodeDim>::Zero();
  const Eigen::Matrix3d& r = n.pose.rotation();
  j.block<3, 3>(0, 0) = r;
  j.block<3, 3>(0, 3) = -r * hat(lever);
  return j;
}

Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& phi) { return so3_left_jacobian_inverse(-phi); }

}  // namespace

double double_differenced_range(const TdcpPairMeasurement& m, const Eigen::Vector3d& r_a, const Eigen::Vector3d& r_b) {
  const double d_other = range_change(m.sat_other_a - r_a, m.sat_other_b - r_b);
  const double d_ref = range_change(m.sat_ref_a - r_a, m.sat_ref_b - r_b);
  return d_other - d_ref;
}

ScalarResidual tdcp_residual(const TdcpPairMeasurement& m, const StateNode& a, const StateNode& b,
                             const Eigen::Vector3d& lever_arm) {
  const Eigen::Vector3d r_a = a.receiver_position(lever_arm);
  const Eigen::Vector3d r_b = b.receiver_position(lever_arm);
  ScalarResidual out;
  out.e = m.phi_dd - double_differenced_range(m, r_a, r_b) - m.atmo_dd;

  const Eigen::Vector3d uo_a = (m.sat_other_a - r_a).normalized();
  const Eigen::Vector3d ur_a = (m.sat_ref_a - r_a).normalized();
  const Eigen::Vector3d uo_b = (m.sat_other_b - r_b).normalized();
  const Eigen::Vector3d ur_b = (m.sat_ref_b - r_b).normalized();
  out.j_b = (uo_b - ur_b).transpose() * receiver_jacobian(b, lever_arm);
  out.j_a = -(uo_a - ur_a).transpose() * receiver_jacobian(a, lever_arm);
  return out;
}

Matrix12d wnoa_covariance(double dt, const Matrix6d& qc) {
  if (!(dt > 0.0)) throw InvalidArgument("wnoa_covariance: dt must be > 0");
  Matrix12d q;
  q.block<6, 6>(0, 0) = dt * dt * dt / 3.0 * qc;
  q.block<6, 6>(0, 6) = dt * dt / 2.0 * qc;
  q.block<6, 6>(6, 0) = dt * dt / 2.0 * qc;
  q.block<6, 6>(6, 6) = dt * qc;
  return q;
}

WnoaResidual wnoa_residual(const StateNode& k, const StateNode& k1) {
  const double dt = k1.t - k.t;
  if (!(dt > 0.0)) throw InvalidArgument("wnoa_residual: node times must increase");
  const Pose rel = k.pose.inverse() * k1.pose;
  const Vector6d xi = se3_log(rel);
  WnoaResidual out;
  out.e.head<6>() = xi - dt * k.twist;
  out.e.tail<6>() = k1.twist - k.twist;

  const Matrix6d jr_inv = se3_right_jacobian_inverse(xi);
  out.j_k1.block<6, 6>(0, 0) = jr_inv;
  out.j_k.block<6, 6>(0, 0) = -jr_inv * adjoint(rel.inverse());
  out.j_k.block<6, 6>(0, 6) = -dt * Matrix6d::Identity();
  out.j_k.block<6, 6>(6, 6) = -Matrix6d::Identity();
  out.j_k1.block<6, 6>(6, 6) = Matrix6d::Identity();
  return out;
}

NonholonomicResidual nonholonomic_residual(const StateNode& node, double sigma_y, double sigma_z) {
  if (!(sigma_y > 0.0) || !(sigma_z > 0.0)) throw InvalidArgument("nonholonomic_residual: sigmas must be > 0");
  NonholonomicResidual out;
  out.e << node.twist[1] / sigma_y, node.twist[2] / sigma_z;
  out.j(0, 7) = 1.0 / sigma_y;
  out.j(1, 8) = 1.0 / sigma_z;
  return out;
}

namespace {

Matrix6d whitening_from_covariance(const Matrix6d& cov) {
  Eigen::LLT<Matrix6d> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidArgument("covariance is not positive definite");
  return llt.matrixL().solve(Matrix6d::Identity());
}

RelPoseResidual rel_pose_eval(const RelPoseMeasurement& m, const Matrix6d& whiten, const StateNode& a,
                              const StateNode& b) {
  const Pose ab = a.pose.inverse() * b.pose;
  const Pose err = m.t_ab.inverse() * ab;
  const Vector6d xi = se3_log(err);
  const Matrix6d jr_inv = se3_right_jacobian_inverse(xi);
  RelPoseResidual out;
  out.e = whiten * xi;
  out.j_b.block<6, 6>(0, 0) = whiten * jr_inv;
  out.j_a.block<6, 6>(0, 0) = -whiten * jr_inv * adjoint(ab.inverse());
  return out;
}

}  // namespace

RelPoseResidual rel_pose_residual(const RelPoseMeasurement& m, const StateNode& a, const StateNode& b) {
  if (std::abs(a.t - m.t_a) > 1e-3 || std::abs(b.t - m.t_b) > 1e-3) {
    throw InvalidArgument("rel_pose_residual: measurement times do not match the nodes");
  }
  return rel_pose_eval(m, whitening_from_covariance(m.covariance), a, b);
}

PositionPriorResidual position_prior_residual(const StateNode& node, const Eigen::Vector3d& prior, double sigma,
                                              const Eigen::Vector3d& lever_arm) {
  if (!(sigma > 0.0)) throw InvalidArgument("position_prior_residual: sigma must be > 0");
  PositionPriorResidual out;
  out.e = (node.receiver_position(lever_arm) - prior) / sigma;
  out.j = receiver_jacobian(node, lever_arm) / sigma;
  return out;
}

double dcs_scale(double chi2, double phi) { return std::min(1.0, 2.0 * phi / (phi + chi2)); }

double dcs_cost(double chi2, double phi) {
  if (chi2 <= phi) return chi2;
  return phi * (3.0 * chi2 - phi) / (phi + chi2);
}

namespace {

class TdcpFactor final : public Factor {
 public:
  TdcpFactor(int a, int b, const TdcpPairMeasurement& m, const Eigen::Vector3d& lever, double phi)
      : keys_{a, b}, m_(m), lever_(lever), sqrt_w_(std::sqrt(m.weight)), phi_(phi) {}
  const std::vector<int>& keys() const override { return keys_; }
  int dim() const override { return 1; }
  double robust_phi() const override { return phi_; }
  void evaluate(const std::vector<StateNode>& nodes, Eigen::VectorXd& e,
                std::vector<NodeJacobian>* jac) const override {
    const ScalarResidual r = tdcp_residual(m_, nodes[keys_[0]], nodes[keys_[1]], lever_);
    e.resize(1);
    e[0] = sqrt_w_ * r.e;
    if (jac) {
      jac->assign({sqrt_w_ * r.j_a, sqrt_w_ * r.j_b});
    }
  }

 private:
  std::vector<int> keys_;
  TdcpPairMeasurement m_;
  Eigen::Vector3d lever_;
  double sqrt_w_;
  double phi_;
};

class WnoaFactor final : public Factor {
 public:
  WnoaFactor(int k, int k1, const Matrix6d& qc, double dt) : keys_{k, k1} {
    Eigen::LLT<Matrix12d> llt(wnoa_covariance(dt, qc));
    if (llt.info() != Eigen::Success) throw InvalidArgument("WNOA: Qc must be positive definite");
    whiten_ = llt.matrixL().solve(Matrix12d::Identity());
  }
  const std::vector<int>& keys() const override { return keys_; }
  int dim() const override { return 12; }
  void evaluate(const std::vector<StateNode>& nodes, Eigen::VectorXd& e,
                std::vector<NodeJacobian>* jac) const override {
    const WnoaResidual r = wnoa_residual(nodes[keys_[0]], nodes[keys_[1]]);
    e = whiten_ * r.e;
    if (jac) jac->assign({whiten_ * r.j_k, whiten_ * r.j_k1});
  }

 private:
  std::vector<int> keys_;
  Matrix12d whiten_;
};

class NonholonomicFactor final : public Factor {
 public:
  NonholonomicFactor(int k, double sy, double sz) : keys_{k}, sy_(sy), sz_(sz) {}
  const std::vector<int>& keys() const override { return keys_; }
  int dim() const override { return 2; }
  void evaluate(const std::vector<StateNode>& nodes, Eigen::VectorXd& e,
                std::vector<NodeJacobian>* jac) const override {
    const NonholonomicResidual r = nonholonomic_residual(nodes[keys_[0]], sy_, sz_);
    e = r.e;
    if (jac) jac->assign({r.j});
  }

 private:
  std::vector<int> keys_;
  double sy_, sz_;
};

class RelPoseFactor final : public Factor {
 public:
  RelPoseFactor(int a, int b, const RelPoseMeasurement& m)
      : keys_{a, b}, m_(m), whiten_(whitening_from_covariance(m.covariance)) {}
  const std::vector<int>& keys() const override { return keys_; }
  int dim() const override { return 6; }
  void evaluate(const std::vector<StateNode>& nodes, Eigen::VectorXd& e,
                std::vector<NodeJacobian>* jac) const override {
    const RelPoseResidual r = rel_pose_eval(m_, whiten_, nodes[keys_[0]], nodes[keys_[1]]);
    e = r.e;
    if (jac) jac->assign({r.j_a, r.j_b});
  }

 private:
  std::vector<int> keys_;
  RelPoseMeasurement m_;
  Matrix6d whiten_;
};

class PositionPriorFactor final : public Factor {
 public:
  PositionPriorFactor(int k, const Eigen::Vector3d& prior, double sigma, const Eigen::Vector3d& lever)
      : keys_{k}, prior_(prior), sigma_(sigma), lever_(lever) {}
  const std::vector<int>& keys() const override { return keys_; }
  int dim() const override { return 3; }
  void evaluate(const std::vector<StateNode>& nodes, Eigen::VectorXd& e,
                std::vector<NodeJacobian>* jac) const override {
    const PositionPriorResidual r = position_prior_residual(nodes[keys_[0]], prior_, sigma_, lever_);
    e = r.e;
    if (jac) jac->assign({r.j});
  }

 private:
  std::vector<int> keys_;
  Eigen::Vector3d prior_;
  double sigma_;
  Eigen::Vector3d lever_;
};

class StatePriorFactor final : public Factor {
 public:
  StatePriorFactor(int k, const Eigen::Matrix3d& rot, const Vector6d& twist, const Eigen::Vector3d& rot_sigmas,
                   const Vector6d& twist_sigmas)
      : keys_{k}, rot_(rot), twist_(twist) {
    for (int i = 0; i < 3; ++i) {
      if (rot_sigmas[i] > 0.0) rows_.push_back({i, 1.0 / rot_sigmas[i]});
    }
    for (int i = 0; i < 6; ++i) {
      if (twist_sigmas[i] > 0.0) rows_.push_back({3 + i, 1.0 / twist_sigmas[i]});
    }
  }
  const std::vector<int>& keys() const override { return keys_; }
  int dim() const override { return static_cast<int>(rows_.size()); }
  void evaluate(const std::vector<StateNode>& nodes, Eigen::VectorXd& e,
                std::vector<NodeJacobian>* jac) const override {
    const StateNode& n = nodes[keys_[0]];
    const Eigen::Vector3d phi = so3_log(rot_.transpose() * n.pose.rotation());
    Eigen::Matrix<double, 9, 1> full;
    full << phi, n.twist - twist_;
    Eigen::Matrix<double, 9, kNodeDim> jfull = Eigen::Matrix<double, 9, kNodeDim>::Zero();
    jfull.block<3, 3>(0, 3) = so3_right_jacobian_inverse(phi);
    jfull.block<6, 6>(3, 6) = Matrix6d::Identity();
    e.resize(dim());
    NodeJacobian j(dim(), kNodeDim);
    for (int r = 0; r < dim(); ++r) {
      e[r] = rows_[r].second * full[rows_[r].first];
      j.row(r) = rows_[r].second * jfull.row(rows_[r].first);
    }
    if (jac) jac->assign({j});
  }

 private:
  std::vector<int> keys_;
  Eigen::Matrix3d rot_;
  Vector6d twist_;
  std::vector<std::pair<int, double>> rows_;
};

}  // namespace

FactorPtr make_tdcp_factor(int a, int b, const TdcpPairMeasurement& m, const Eigen::Vector3d& lever_arm,
                           double dcs_phi) {
  return std::make_shared<TdcpFactor>(a, b, m, lever_arm, dcs_phi);
}

FactorPtr make_wnoa_factor(int k, int k1, const Matrix6d& qc, double dt) {
  return std::make_shared<WnoaFactor>(k, k1, qc, dt);
}

FactorPtr make_nonholonomic_factor(int k, double sigma_y, double sigma_z) {
  if (!(sigma_y > 0.0) || !(sigma_z > 0.0)) throw InvalidArgument("nonholonomic factor: sigmas must be > 0");
  return std::make_shared<NonholonomicFactor>(k, sigma_y, sigma_z);
}

FactorPtr make_rel_pose_factor(int a, int b, const RelPoseMeasurement& m) {
  return std::make_shared<RelPoseFactor>(a, b, m);
}

FactorPtr make_position_prior_factor(int k, const Eigen::Vector3d& prior, double sigma,
                                     const Eigen::Vector3d& lever_arm) {
  if (!(sigma > 0.0)) throw InvalidArgument("position prior: sigma must be > 0");
  return std::make_shared<PositionPriorFactor>(k, prior, sigma, lever_arm);
}

FactorPtr make_state_prior_factor(int k, const Eigen::Matrix3d& rotation, const Vector6d& twist,
                                  const Eigen::Vector3d& rot_sigmas, const Vector6d& twist_sigmas) {
  return std::make_shared<StatePriorFactor>(k, rotation, twist, rot_sigmas, twist_sigmas);
}

}  // namespace tdcp
