#pragma once

#include <Eigen/Core>

namespace tdcp {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Rigid transform T = (R, t). As a state it is T_gv: vehicle frame expressed in the
/// global frame. Tangent vectors are ordered (translation, rotation).
class Pose {
 public:
  Pose() : rot_(Eigen::Matrix3d::Identity()), trans_(Eigen::Vector3d::Zero()) {}
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rot_(rotation), trans_(translation) {}

  static Pose identity() { return {}; }
  static Pose from_yaw(double yaw, const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());

  const Eigen::Matrix3d& rotation() const { return rot_; }
  const Eigen::Vector3d& translation() const { return trans_; }

  Pose operator*(const Pose& other) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const { return rot_ * point + trans_; }
  Pose inverse() const;

  /// 4x4 homogeneous matrix.
  Eigen::Matrix4d matrix() const;

  /// Project the rotation back onto SO(3) (SVD).
  void orthonormalize();
  /// Max deviation of R^T R from identity.
  double orthonormality_error() const;

  /// Heading of the vehicle x axis in the global frame (atan2 of its ENU components).
  double yaw() const;

 private:
  Eigen::Matrix3d rot_;
  Eigen::Vector3d trans_;
};

Eigen::Matrix3d hat(const Eigen::Vector3d& v);
Eigen::Matrix4d hat(const Vector6d& xi);

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi);
/// Rotation vector of R; valid for angles up to pi.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rot);
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& phi);
Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& phi);

Pose se3_exp(const Vector6d& xi);
/// Throws NumericalError when the rotation angle is within 1e-6 of pi.
Vector6d se3_log(const Pose& pose);

/// Left Jacobian of SE(3); the right Jacobian is se3_left_jacobian(-xi).
Matrix6d se3_left_jacobian(const Vector6d& xi);
Matrix6d se3_left_jacobian_inverse(const Vector6d& xi);
inline Matrix6d se3_right_jacobian_inverse(const Vector6d& xi) { return se3_left_jacobian_inverse(-xi); }

/// Ad(T) such that T exp(xi) T^-1 = exp(Ad(T) xi).
Matrix6d adjoint(const Pose& pose);

/// Composition that re-orthonormalizes every 100 products.
class PoseChain {
 public:
  PoseChain() = default;
  explicit PoseChain(const Pose& start) : pose_(start) {}
  void append(const Pose& increment);
  const Pose& pose() const { return pose_; }

 private:
  Pose pose_;
  int since_orthonormalize_ = 0;
};

}  // namespace tdcp
