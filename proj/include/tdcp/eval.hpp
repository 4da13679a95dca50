#pragma once

#include <string>
#include <vector>

#include "tdcp/frames.hpp"
#include "tdcp/observation.hpp"
#include "tdcp/trajectory.hpp"

namespace tdcp {

/// Rigid transform taking coordinates in the `from` ENU frame to the `to` ENU frame.
Pose enu_transform(const EnuFrame& from, const EnuFrame& to);
/// Left-multiplies every pose by T.
Trajectory transform_trajectory(const Trajectory& traj, const Pose& transform);

/// Estimated receiver track: vehicle states plus the antenna lever arm.
struct EstimateTrack {
  Trajectory trajectory;
  Eigen::Vector3d lever_arm = Eigen::Vector3d::Zero();

  /// Receiver position from the geodesically interpolated pose.
  Eigen::Vector3d receiver_at(const GpsTime& t) const;
  bool covers(const GpsTime& t) const;
};

/// Cumulative arc length of a truth track, starting at 0.
std::vector<double> arc_length(const std::vector<GroundTruthSample>& truth);

struct Alignment {
  Pose transform;         ///< truth ~= transform * estimate
  bool fallback = false;  ///< collinear span, position + heading only
  double rmse_before = 0.0;
  double rmse_after = 0.0;
};

enum class AlignmentMode {
  kRigid,    ///< full 3D rotation
  kHeading,  ///< rotation about the up axis only
};

/// Least-squares rigid fit of `est` onto `truth` (rotation + translation, no scale).
/// Points collinear within 1e-3 m fall back to a centroid shift plus a yaw rotation.
/// Throws InvalidArgument with fewer than three points. Heading mode suits tracks whose
/// vertical drifts: a short, nearly straight span leaves the roll of a 3D fit to noise.
Alignment align_points(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& truth,
                       AlignmentMode mode = AlignmentMode::kRigid);

/// Rigid alignment over the truth samples whose arc length lies in [s0, s0 + span].
Alignment align_segment(const EstimateTrack& est, const std::vector<GroundTruthSample>& truth,
                        const std::vector<double>& arc, double s0, double span,
                        AlignmentMode mode = AlignmentMode::kRigid);

struct DriftOptions {
  int sections = 15;
  double section_length = 50.0;  ///< m
  double align_span = 10.0;      ///< m
  AlignmentMode alignment = AlignmentMode::kRigid;

  void validate() const;
};

struct SectionResult {
  int id = 0;
  double start = 0.0;  ///< arc length where the aligned section begins, m
  std::vector<double> distance;
  std::vector<double> error;     ///< horizontal, m
  std::vector<double> error_3d;  ///< m
  double error_25 = 0.0;
  double error_50 = 0.0;  ///< horizontal error at the section end
  double error_3d_end = 0.0;
  double r2 = 1.0;  ///< linear fit of error against distance
  bool fallback_alignment = false;
};

struct DriftReport {
  std::string algorithm;
  DriftOptions options;
  std::vector<SectionResult> sections;
  double mean_error_25 = 0.0;
  double mean_error_50 = 0.0;
  double mean_drift_percent = 0.0;
  double median_drift_percent = 0.0;
  double p90_drift_percent = 0.0;
  double mean_r2 = 0.0;
  double median_r2 = 0.0;
  double min_r2 = 0.0;

  /// Recomputes the aggregate fields from `sections`.
  void aggregate();
  std::string to_json() const;
};

/// Error value at `d` by linear interpolation of the section curve.
double error_at(const SectionResult& s, double d);
/// Coefficient of determination of a least-squares line y = a + b x (1 when y is constant).
double linear_r2(const std::vector<double>& x, const std::vector<double>& y);

/// One section: align over [s0, s0 + align_span], then record error over the next
/// section_length metres. Throws InvalidArgument if truth or the estimate is too short.
SectionResult section_drift(const EstimateTrack& est, const std::vector<GroundTruthSample>& truth,
                            const std::vector<double>& arc, double s0, const DriftOptions& opts, int id = 0);

/// `opts.sections` sections at equal arc-length spacing over the truth track.
DriftReport drift_metrics(const EstimateTrack& est, const std::vector<GroundTruthSample>& truth,
                          const DriftOptions& opts, const std::string& algorithm = "");

/// Horizontal error at the last truth sample covered by the estimate after removing the
/// translation offset at the first covered sample.
double final_error(const EstimateTrack& est, const std::vector<GroundTruthSample>& truth);

/// Horizontal error accumulated between t0 and t1: the estimated displacement of the
/// receiver over the interval compared with the true one.
double interval_error(const EstimateTrack& est, const std::vector<GroundTruthSample>& truth, const GpsTime& t0,
                      const GpsTime& t1);

}  // namespace tdcp
