#include "tdcp/trajectory.hpp"

#include <algorithm>

#include <Eigen/Dense>

#include "tdcp/error.hpp"

namespace tdcp {

Trajectory::Trajectory(std::vector<StateNode> nodes) : nodes_(std::move(nodes)) {
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i - 1].t < nodes_[i].t)) {
      throw InvalidArgument("Trajectory: timestamps must be strictly increasing");
    }
  }
}

void Trajectory::push_back(const StateNode& node) {
  if (!nodes_.empty() && !(nodes_.back().t < node.t)) {
    throw InvalidArgument("Trajectory: timestamps must be strictly increasing");
  }
  nodes_.push_back(node);
}

Pose interpolate_pose(const Trajectory& traj, const GpsTime& t) {
  if (traj.empty() || t < traj.start_time() || t > traj.end_time()) {
    throw InvalidArgument("interpolate_pose: time " + t.to_string() + " outside trajectory span");
  }
  const auto& nodes = traj.nodes();
  auto it = std::lower_bound(nodes.begin(), nodes.end(), t,
                             [](const StateNode& n, const GpsTime& q) { return n.t < q; });
  if (it->t == t) return it->pose;
  const StateNode& hi = *it;
  const StateNode& lo = *(it - 1);
  const double alpha = (t - lo.t) / (hi.t - lo.t);
  const Vector6d xi = se3_log(lo.pose.inverse() * hi.pose);
  return lo.pose * se3_exp(alpha * xi);
}

}  // namespace tdcp
