#pragma once

#include <filesystem>
#include <random>

#include <Eigen/Core>

#include "tdcp/lie.hpp"

namespace tdcp::test {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(TDCP_TEST_DATA) / name; }

inline Eigen::Vector3d random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Vector6d random_twist(std::mt19937_64& rng, double scale) {
  Vector6d xi;
  xi << random_vec(rng, scale), random_vec(rng, scale);
  return xi;
}

inline Pose random_pose(std::mt19937_64& rng, double trans = 10.0, double rot = 1.0) {
  Vector6d xi;
  xi << random_vec(rng, trans), random_vec(rng, rot);
  return se3_exp(xi);
}

inline double rot_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return so3_log(a.transpose() * b).norm();
}

}  // namespace tdcp::test
