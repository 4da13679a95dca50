#include "tdcp/lie.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "tdcp/error.hpp"

namespace tdcp {
namespace {

constexpr double kSmallAngle = 1e-8;
// Below this angle the SE(3) Jacobian coefficients use Taylor series.
constexpr double kSeriesAngle = 1e-2;

}  // namespace

Pose Pose::from_yaw(double yaw, const Eigen::Vector3d& translation) {
  return {so3_exp(Eigen::Vector3d(0.0, 0.0, yaw)), translation};
}

Pose Pose::operator*(const Pose& other) const {
  return {rot_ * other.rot_, rot_ * other.trans_ + trans_};
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rot_.transpose();
  return {rt, -(rt * trans_)};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rot_;
  m.topRightCorner<3, 1>() = trans_;
  return m;
}

void Pose::orthonormalize() {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(rot_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  rot_ = r;
}

double Pose::orthonormality_error() const {
  return (rot_.transpose() * rot_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

double Pose::yaw() const { return std::atan2(rot_(1, 0), rot_(0, 0)); }

Eigen::Matrix3d hat(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix4d hat(const Vector6d& xi) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.topLeftCorner<3, 3>() = hat(Eigen::Vector3d(xi.tail<3>()));
  m.topRightCorner<3, 1>() = xi.head<3>();
  return m;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = hat(phi);
  if (theta < kSmallAngle) {
    return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& rot) {
  const double cos_theta = std::clamp(0.5 * (rot.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Eigen::Vector3d vee(rot(2, 1) - rot(1, 2), rot(0, 2) - rot(2, 0), rot(1, 0) - rot(0, 1));
  if (theta < kSmallAngle) {
    return 0.5 * vee;
  }
  if (theta > M_PI - 1e-4) {
    // Near pi the antisymmetric part vanishes; recover the axis from the symmetric part.
    const Eigen::Matrix3d s = 0.5 * (rot + Eigen::Matrix3d::Identity());
    int col = 0;
    s.diagonal().maxCoeff(&col);
    Eigen::Vector3d axis = s.col(col) / std::sqrt(std::max(s(col, col), 1e-300));
    axis.normalize();
    if (axis.dot(vee) < 0.0) axis = -axis;
    return theta * axis;
  }
  return theta / (2.0 * std::sin(theta)) * vee;
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = hat(phi);
  if (theta < kSeriesAngle) {
    const double t2 = theta * theta;
    return Eigen::Matrix3d::Identity() + (0.5 - t2 / 24.0 + t2 * t2 / 720.0) * k +
           (1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0) * k * k;
  }
  const double t2 = theta * theta;
  return Eigen::Matrix3d::Identity() + (1.0 - std::cos(theta)) / t2 * k +
         (theta - std::sin(theta)) / (t2 * theta) * k * k;
}

Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = hat(phi);
  double c;
  if (theta < kSeriesAngle) {
    const double t2 = theta * theta;
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    c = 1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() - 0.5 * k + c * k * k;
}

Pose se3_exp(const Vector6d& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  return {so3_exp(phi), so3_left_jacobian(phi) * rho};
}

Vector6d se3_log(const Pose& pose) {
  const Eigen::Vector3d phi = so3_log(pose.rotation());
  if (phi.norm() > M_PI - 1e-6) {
    throw NumericalError("se3_log: rotation angle too close to pi");
  }
  Vector6d xi;
  xi.head<3>() = so3_left_jacobian_inverse(phi) * pose.translation();
  xi.tail<3>() = phi;
  return xi;
}

namespace {

// Translation/rotation coupling block of the SE(3) left Jacobian.
Eigen::Matrix3d se3_q_matrix(const Eigen::Vector3d& rho, const Eigen::Vector3d& phi) {
  const Eigen::Matrix3d rx = hat(rho);
  const Eigen::Matrix3d px = hat(phi);
  const double theta = phi.norm();
  const double t2 = theta * theta;
  double c1, c2, c3;
  if (theta < kSeriesAngle) {
    c1 = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    c2 = 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
    c3 = 1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0;
  } else {
    const double s = std::sin(theta), c = std::cos(theta);
    c1 = (theta - s) / (t2 * theta);
    c2 = (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t2 * theta);
  }
  const Eigen::Matrix3d pr = px * rx;
  const Eigen::Matrix3d rp = rx * px;
  const Eigen::Matrix3d prp = pr * px;
  return 0.5 * rx + c1 * (pr + rp + prp) + c2 * (px * pr + rp * px - 3.0 * prp) +
         c3 * (prp * px + px * prp);
}

}  // namespace

Matrix6d se3_left_jacobian(const Vector6d& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  const Eigen::Matrix3d j = so3_left_jacobian(phi);
  Matrix6d out = Matrix6d::Zero();
  out.topLeftCorner<3, 3>() = j;
  out.bottomRightCorner<3, 3>() = j;
  out.topRightCorner<3, 3>() = se3_q_matrix(rho, phi);
  return out;
}

Matrix6d se3_left_jacobian_inverse(const Vector6d& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  const Eigen::Matrix3d ji = so3_left_jacobian_inverse(phi);
  Matrix6d out = Matrix6d::Zero();
  out.topLeftCorner<3, 3>() = ji;
  out.bottomRightCorner<3, 3>() = ji;
  out.topRightCorner<3, 3>() = -ji * se3_q_matrix(rho, phi) * ji;
  return out;
}

Matrix6d adjoint(const Pose& pose) {
  Matrix6d ad = Matrix6d::Zero();
  ad.topLeftCorner<3, 3>() = pose.rotation();
  ad.bottomRightCorner<3, 3>() = pose.rotation();
  ad.topRightCorner<3, 3>() = hat(pose.translation()) * pose.rotation();
  return ad;
}

void PoseChain::append(const Pose& increment) {
  pose_ = pose_ * increment;
  if (++since_orthonormalize_ >= 100) {
    pose_.orthonormalize();
    since_orthonormalize_ = 0;
  }
}

}  // namespace tdcp
