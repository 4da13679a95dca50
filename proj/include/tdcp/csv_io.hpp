#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tdcp/frames.hpp"
#include "tdcp/observation.hpp"
#include "tdcp/trajectory.hpp"

namespace tdcp {

// All CSV files may start with "# enu_origin,<lat_deg>,<lon_deg>,<h_m>" naming the ENU
// frame their positions are expressed in. Other '#' lines are ignored.

struct GroundTruthFile {
  std::vector<GroundTruthSample> samples;
  std::optional<Geodetic> enu_origin;
};

/// `week,sow,east_m,north_m,up_m,flag`. Throws ParseError on malformed rows and on
/// duplicate or decreasing timestamps.
GroundTruthFile parse_ground_truth(std::istream& in);
GroundTruthFile parse_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::vector<GroundTruthSample>& samples, std::ostream& out,
                        const std::optional<Geodetic>& enu_origin = std::nullopt);
void write_ground_truth(const std::vector<GroundTruthSample>& samples, const std::filesystem::path& path,
                        const std::optional<Geodetic>& enu_origin = std::nullopt);

/// `week_a,sow_a,week_b,sow_b,xi1..xi6,cov11..cov66` with xi = se3_log(T_ab).
std::vector<RelPoseMeasurement> parse_rel_pose(std::istream& in);
std::vector<RelPoseMeasurement> parse_rel_pose(const std::filesystem::path& path);
void write_rel_pose(const std::vector<RelPoseMeasurement>& meas, std::ostream& out);
void write_rel_pose(const std::vector<RelPoseMeasurement>& meas, const std::filesystem::path& path);

struct TrajectoryFile {
  Trajectory trajectory;
  std::vector<Eigen::Vector3d> receiver_positions;  ///< east/north/up columns
  std::optional<Geodetic> enu_origin;

  /// Lever arm implied by the first row: R^T (receiver - p).
  Eigen::Vector3d lever_arm() const;
};

/// `week,sow,east_m,north_m,up_m,px,py,pz,rx,ry,rz,v1,v2,v3,w1,w2,w3`: receiver
/// position, vehicle pose tangent log(T_gv) and body twist. Throws InvalidArgument for
/// an empty trajectory.
void write_trajectory(const Trajectory& traj, const Eigen::Vector3d& lever_arm, std::ostream& out,
                      const std::optional<Geodetic>& enu_origin = std::nullopt);
void write_trajectory(const Trajectory& traj, const Eigen::Vector3d& lever_arm, const std::filesystem::path& path,
                      const std::optional<Geodetic>& enu_origin = std::nullopt);
TrajectoryFile read_trajectory(std::istream& in);
TrajectoryFile read_trajectory(const std::filesystem::path& path);

/// Receiver positions of a trajectory file as time-tagged samples (flag 0).
std::vector<GroundTruthSample> receiver_track(const TrajectoryFile& file);

}  // namespace tdcp
