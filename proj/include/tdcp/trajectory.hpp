#pragma once

#include <vector>

#include "tdcp/gps_time.hpp"
#include "tdcp/lie.hpp"

namespace tdcp {

/// Estimation vertex: pose T_gv and body-frame generalized velocity w = (v, omega),
/// with kinematics dT/dt = T w^.
struct StateNode {
  GpsTime t;
  Pose pose;
  Vector6d twist = Vector6d::Zero();

  /// Receiver antenna position in the global frame for a given lever arm.
  Eigen::Vector3d receiver_position(const Eigen::Vector3d& lever_arm) const { return pose * lever_arm; }
};

/// Time-ordered sequence of states with geodesic pose interpolation.
class Trajectory {
 public:
  Trajectory() = default;
  /// Throws InvalidArgument unless timestamps are strictly increasing.
  explicit Trajectory(std::vector<StateNode> nodes);

  void push_back(const StateNode& node);

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  const StateNode& operator[](std::size_t i) const { return nodes_[i]; }
  const std::vector<StateNode>& nodes() const { return nodes_; }
  const StateNode& front() const { return nodes_.front(); }
  const StateNode& back() const { return nodes_.back(); }

  GpsTime start_time() const { return nodes_.front().t; }
  GpsTime end_time() const { return nodes_.back().t; }

 private:
  std::vector<StateNode> nodes_;
};

/// T(t) = T_k exp(alpha log(T_k^-1 T_k+1)), alpha = (t - t_k) / (t_k+1 - t_k).
/// Throws InvalidArgument when t lies outside the trajectory span.
Pose interpolate_pose(const Trajectory& traj, const GpsTime& t);

}  // namespace tdcp
