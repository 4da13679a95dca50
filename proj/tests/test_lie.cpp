#include <cmath>
#include <random>

#include <doctest.h>
#include <Eigen/Dense>

#include "tdcp/constants.hpp"
#include "tdcp/error.hpp"
#include "tdcp/lie.hpp"
#include "tdcp/trajectory.hpp"
#include "test_util.hpp"

using namespace tdcp;
using namespace tdcp::test;
using constants::kPi;

namespace {

Eigen::Matrix4d series_exp(const Eigen::Matrix4d& a, int terms) {
  Eigen::Matrix4d sum = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d term = Eigen::Matrix4d::Identity();
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

double pose_distance(const Pose& a, const Pose& b) {
  return (a.translation() - b.translation()).norm() + rot_angle_between(a.rotation(), b.rotation());
}

Trajectory two_node(const Pose& a, const Pose& b) {
  const GpsTime t0(2223, 1000.0);
  return Trajectory({StateNode{t0, a, Vector6d::Zero()}, StateNode{t0 + 1.0, b, Vector6d::Zero()}});
}

}  // namespace

TEST_SUITE("lie") {
  TEST_CASE("se3_exp examples") {
    CHECK(pose_distance(se3_exp(Vector6d::Zero()), Pose()) == 0.0);

    Vector6d xi;
    xi << 1, 2, 3, 0, 0, 0;
    const Pose t = se3_exp(xi);
    CHECK((t.rotation() - Eigen::Matrix3d::Identity()).norm() == 0.0);
    CHECK((t.translation() - Eigen::Vector3d(1, 2, 3)).norm() < 1e-15);

    xi << 0, 0, 0, 0, 0, kPi / 2.0;
    // Twenty terms: the truncation error at |xi| = pi/2 is about 1e-15.
    const Eigen::Matrix4d oracle = series_exp(hat(xi), 20);
    CHECK((se3_exp(xi).matrix() - oracle).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(se3_exp(xi).yaw() == doctest::Approx(kPi / 2.0));
  }

  TEST_CASE("se3_exp matches a long matrix-exponential series on random twists") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 500; ++i) {
      const Vector6d xi = random_twist(rng, 0.5);
      CHECK((se3_exp(xi).matrix() - series_exp(hat(xi), 25)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("se3_log examples") {
    CHECK(se3_log(Pose()).norm() == 0.0);
    const Vector6d v = se3_log(Pose::from_yaw(kPi / 2.0));
    CHECK(v.head<3>().norm() < 1e-15);
    CHECK(v[5] == doctest::Approx(kPi / 2.0).epsilon(1e-14));
  }

  TEST_CASE("exp/log inverse pair") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 10000; ++i) {
      Vector6d xi = random_twist(rng, 1.0);
      if (xi.norm() >= 1.0) xi *= 0.99 / xi.norm();
      REQUIRE((se3_log(se3_exp(xi)) - xi).norm() < 1e-9);
    }
    for (int i = 0; i < 2000; ++i) {
      Vector6d xi = random_twist(rng, 2.0);
      if (xi.norm() > 2.0) xi *= 2.0 / xi.norm();
      REQUIRE((se3_log(se3_exp(xi)) - xi).norm() < 1e-9);
    }
  }

  TEST_CASE("small-angle branch stays accurate") {
    Vector6d xi;
    xi << 0.3, -0.2, 0.1, 1e-9, -2e-9, 3e-10;
    CHECK((se3_log(se3_exp(xi)) - xi).norm() < 1e-14);
    CHECK((se3_exp(xi).matrix() - series_exp(hat(xi), 20)).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("log rejects rotations at pi") {
    const Pose flip(so3_exp(Eigen::Vector3d(0, 0, kPi)), Eigen::Vector3d::Zero());
    CHECK_THROWS_AS(se3_log(flip), NumericalError);
  }

  TEST_CASE("composition is associative and inverse is exact") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
      const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
      CHECK(((a * b) * c).matrix().isApprox((a * (b * c)).matrix(), 1e-9));
      CHECK(pose_distance(a * a.inverse(), Pose()) < 1e-9);
      CHECK(pose_distance(a.inverse() * a, Pose()) < 1e-9);
    }
  }

  TEST_CASE("left Jacobian matches finite differences") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
      const Vector6d xi = random_twist(rng, 1.0);
      const Matrix6d jl = se3_left_jacobian(xi);
      Matrix6d fd;
      const double h = 1e-6;
      for (int k = 0; k < 6; ++k) {
        Vector6d d = Vector6d::Zero();
        d[k] = h;
        // exp(xi + d) = exp(J_l d) exp(xi) to first order.
        const Vector6d plus = se3_log(se3_exp(xi + d) * se3_exp(xi).inverse());
        const Vector6d minus = se3_log(se3_exp(xi - d) * se3_exp(xi).inverse());
        fd.col(k) = (plus - minus) / (2.0 * h);
      }
      CHECK((fd - jl).norm() / jl.norm() < 1e-7);
      CHECK((se3_left_jacobian_inverse(xi) * jl - Matrix6d::Identity()).norm() < 1e-9);
      const Eigen::Vector3d phi = xi.tail<3>();
      CHECK((so3_left_jacobian_inverse(phi) * so3_left_jacobian(phi) - Eigen::Matrix3d::Identity()).norm() < 1e-9);
    }
  }

  TEST_CASE("adjoint moves twists across a transform") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
      const Pose t = random_pose(rng);
      const Vector6d xi = random_twist(rng, 0.5);
      const Pose lhs = t * se3_exp(xi) * t.inverse();
      CHECK(lhs.matrix().isApprox(se3_exp(adjoint(t) * xi).matrix(), 1e-9));
    }
  }

  TEST_CASE("pose chain stays orthonormal") {
    std::mt19937_64 rng(6);
    PoseChain chain;
    Pose naive;
    for (int i = 0; i < 5000; ++i) {
      const Pose inc = se3_exp(random_twist(rng, 0.05));
      chain.append(inc);
      naive = naive * inc;
    }
    CHECK(chain.pose().orthonormality_error() < 1e-12);
    CHECK(pose_distance(chain.pose(), naive) < 1e-6);
  }

  TEST_CASE("interpolate_pose examples") {
    const Trajectory straight = two_node(Pose(), Pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(2, 0, 0)));
    const GpsTime t0 = straight.start_time();
    CHECK(pose_distance(interpolate_pose(straight, t0 + 0.5), Pose(Eigen::Matrix3d::Identity(), {1, 0, 0})) < 1e-12);
    CHECK(pose_distance(interpolate_pose(straight, t0), straight[0].pose) == 0.0);
    CHECK(pose_distance(interpolate_pose(straight, t0 + 1.0), straight[1].pose) == 0.0);

    const Trajectory turn = two_node(Pose(), Pose::from_yaw(kPi / 2.0));
    const Pose mid = interpolate_pose(turn, t0 + 0.5);
    CHECK(mid.yaw() == doctest::Approx(kPi / 4.0).epsilon(1e-12));
    // log/exp oracle
    const Pose oracle = se3_exp(0.5 * se3_log(turn[1].pose));
    CHECK(pose_distance(mid, oracle) < 1e-12);

    CHECK_THROWS_AS(interpolate_pose(turn, t0 - 0.1), InvalidArgument);
    CHECK_THROWS_AS(interpolate_pose(turn, t0 + 1.1), InvalidArgument);
  }

  TEST_CASE("interpolate_pose is continuous across nodes") {
    std::mt19937_64 rng(8);
    std::vector<StateNode> nodes;
    GpsTime t(2223, 5000.0);
    Pose p;
    for (int i = 0; i < 20; ++i) {
      nodes.push_back({t, p, Vector6d::Zero()});
      p = p * se3_exp(random_twist(rng, 0.3));
      t = t + 1.0;
    }
    const Trajectory traj(nodes);
    for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
      const Pose a = interpolate_pose(traj, nodes[i].t - 1e-6);
      const Pose b = interpolate_pose(traj, nodes[i].t + 1e-6);
      CHECK((a.translation() - b.translation()).norm() < 1e-5);
      CHECK(rot_angle_between(a.rotation(), b.rotation()) < 1e-6);
    }
  }

  TEST_CASE("trajectory requires increasing timestamps") {
    const GpsTime t(2223, 0.0);
    CHECK_THROWS_AS(Trajectory({StateNode{t + 1.0, Pose(), {}}, StateNode{t, Pose(), {}}}), InvalidArgument);
    Trajectory traj;
    traj.push_back({t, Pose(), {}});
    CHECK_THROWS_AS(traj.push_back({t, Pose(), {}}), InvalidArgument);
  }
}
