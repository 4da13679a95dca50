#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "tdcp/constants.hpp"
#include "tdcp/frames.hpp"
#include "tdcp/gps_time.hpp"

namespace tdcp {

/// GPS LNAV broadcast ephemeris for one satellite.
struct BroadcastEphemeris {
  int prn = 0;
  GpsTime toe;
  GpsTime toc;
  double sqrt_a = 0.0;  ///< m^1/2
  double e = 0.0;
  double i0 = 0.0;
  double omega0 = 0.0;  ///< longitude of ascending node at weekly epoch, rad
  double omega = 0.0;   ///< argument of perigee, rad
  double m0 = 0.0;
  double delta_n = 0.0;
  double idot = 0.0;
  double omega_dot = 0.0;
  double cuc = 0.0, cus = 0.0;
  double crc = 0.0, crs = 0.0;
  double cic = 0.0, cis = 0.0;
  double af0 = 0.0, af1 = 0.0, af2 = 0.0;
  double tgd = 0.0;
  int iode = 0;
  int health = 0;

  /// Throws InvalidArgument if the elements are outside GPS plausibility bounds.
  void validate() const;
};

struct EphemerisOptions {
  bool relativistic_clock = true;
  double earth_rotation_rate = constants::kEarthRotationRate;
  /// Maximum |t - toe| in seconds before the ephemeris is considered stale.
  double validity_seconds = 4.0 * 3600.0;
};

struct SatelliteState {
  EcefPoint position;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  ///< ECEF, m/s
  double clock_bias = 0.0;                             ///< s
  double clock_drift = 0.0;                            ///< s/s
  double eccentric_anomaly = 0.0;
};

/// Satellite ECEF position/velocity and clock at time t. Throws Error when the
/// ephemeris is stale and NumericalError if Kepler's equation does not converge.
SatelliteState sat_state(const BroadcastEphemeris& eph, const GpsTime& t,
                         const EphemerisOptions& opts = {});

/// Velocity in the non-rotating frame instantaneously aligned with ECEF.
Eigen::Vector3d inertial_velocity(const SatelliteState& s,
                                  double earth_rotation_rate = constants::kEarthRotationRate);

struct EmissionState {
  /// Position at emission time, rotated into the ECEF frame of the receive time.
  EcefPoint position;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  double clock_bias = 0.0;
  double clock_drift = 0.0;
  GpsTime emission_time;
  double travel_time = 0.0;  ///< s
};

/// Satellite state at signal emission for a signal received at receive_time by a
/// receiver near approx_receiver (two light-time iterations plus Earth rotation).
EmissionState signal_emission_state(const BroadcastEphemeris& eph, const GpsTime& receive_time,
                                    const EcefPoint& approx_receiver, const EphemerisOptions& opts = {});

/// Record whose toe is nearest to t for the satellite; ties go to the earlier record.
const BroadcastEphemeris* select_ephemeris(const std::vector<BroadcastEphemeris>& ephs, int prn,
                                           const GpsTime& t);

}  // namespace tdcp
