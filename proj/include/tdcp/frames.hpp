#pragma once

#include <Eigen/Core>

namespace tdcp {

class Pose;

/// Frames used by the estimator. Every frame-tagged quantity carries exactly one tag.
enum class FrameTag {
  kGlobal,     ///< g: local ENU frame tangent to the Earth at the start position
  kVehicle,    ///< v: vehicle centre at axle height
  kReceiver,   ///< r: GPS antenna phase centre on the vehicle
  kSatellite,  ///< s: satellite antenna phase centre
  kCamera,     ///< c: left stereo camera (carried for completeness, unused)
};

char frame_letter(FrameTag tag);

/// Earth-centred Earth-fixed point, metres.
struct EcefPoint {
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();

  EcefPoint() = default;
  explicit EcefPoint(const Eigen::Vector3d& v) : xyz(v) {}
  EcefPoint(double x, double y, double z) : xyz(x, y, z) {}

  double x() const { return xyz.x(); }
  double y() const { return xyz.y(); }
  double z() const { return xyz.z(); }
  double norm() const { return xyz.norm(); }
};

/// WGS-84 geodetic coordinates: radians, radians, metres above the ellipsoid.
struct Geodetic {
  double lat = 0.0;
  double lon = 0.0;
  double height = 0.0;
};

EcefPoint geodetic_to_ecef(const Geodetic& g);

/// Iterative inverse of geodetic_to_ecef. Throws NumericalError after 20 iterations
/// without convergence and InvalidArgument for points within 1000 km of the geocentre.
Geodetic ecef_to_geodetic(const EcefPoint& p);

/// Rotation taking ECEF vectors into the ENU axes at the given geodetic point.
Eigen::Matrix3d ecef_to_enu_rotation(double lat, double lon);

/// Local east-north-up frame anchored at a geodetic origin.
class EnuFrame {
 public:
  EnuFrame() : EnuFrame(Geodetic{}) {}
  explicit EnuFrame(const Geodetic& origin);
  static EnuFrame at(const EcefPoint& origin) { return EnuFrame(ecef_to_geodetic(origin)); }

  const Geodetic& origin_geodetic() const { return origin_; }
  const EcefPoint& origin_ecef() const { return origin_ecef_; }
  const Eigen::Matrix3d& rotation_ecef_to_enu() const { return rot_; }

  Eigen::Vector3d to_enu(const EcefPoint& p) const { return rot_ * (p.xyz - origin_ecef_.xyz); }
  Eigen::Vector3d vector_to_enu(const Eigen::Vector3d& v) const { return rot_ * v; }
  EcefPoint to_ecef(const Eigen::Vector3d& enu) const {
    return EcefPoint(origin_ecef_.xyz + rot_.transpose() * enu);
  }

 private:
  Geodetic origin_;
  EcefPoint origin_ecef_;
  Eigen::Matrix3d rot_;
};

/// Convenience wrapper around EnuFrame::to_enu.
inline Eigen::Vector3d ecef_to_enu(const EnuFrame& frame, const EcefPoint& p) { return frame.to_enu(p); }

struct AzEl {
  double azimuth = 0.0;    ///< rad, clockwise from north
  double elevation = 0.0;  ///< rad
};

/// Azimuth/elevation of a line of sight expressed in local ENU axes.
AzEl azimuth_elevation(const Eigen::Vector3d& los_enu);

/// Azimuth/elevation of a satellite seen from a receiver, both in ECEF.
AzEl azimuth_elevation(const EcefPoint& receiver, const EcefPoint& satellite);

/// Sensor mounting on the vehicle.
struct Extrinsics {
  /// Antenna lever arm r_rv_v: receiver position in the vehicle frame, metres.
  Eigen::Vector3d lever_arm = Eigen::Vector3d(0.5, 0.0, 1.0);

  /// Throws InvalidArgument when the lever arm is implausible (norm >= 5 m).
  void validate() const;
};

}  // namespace tdcp
