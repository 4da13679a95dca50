#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "tdcp/atmosphere.hpp"
#include "tdcp/ephemeris.hpp"
#include "tdcp/gps_time.hpp"
#include "tdcp/lie.hpp"

namespace tdcp {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// L1 observables of one GPS satellite at one epoch.
struct SatObservation {
  int prn = 0;
  double phase_cycles = kMissing;  ///< carrier phase; phase range = lambda * cycles
  double pseudorange = kMissing;   ///< m
  double doppler_hz = kMissing;    ///< positive when the range is shrinking
  bool lock_lost = false;          ///< loss of lock since the previous epoch (LLI bit 0)
  double snr = kMissing;           ///< dB-Hz
};

/// All satellites tracked at one receiver time tag.
struct ObservationEpoch {
  GpsTime t;
  std::vector<SatObservation> sats;

  const SatObservation* find(int prn) const;
  /// Throws InvalidArgument if PRNs repeat or a locked record has no finite phase.
  void validate() const;
};

/// Parsed navigation file contents.
struct NavigationData {
  std::vector<BroadcastEphemeris> ephemerides;
  std::optional<KlobucharParams> klobuchar;

  const BroadcastEphemeris* select(int prn, const GpsTime& t) const {
    return select_ephemeris(ephemerides, prn, t);
  }
};

/// Reference receiver position sample (RTK-class ground truth), ENU metres.
struct GroundTruthSample {
  GpsTime t;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  int flag = 0;
};

/// Relative vehicle motion from frame a to frame b with its 6x6 covariance
/// (tangent ordering: translation, rotation).
struct RelPoseMeasurement {
  GpsTime t_a;
  GpsTime t_b;
  Pose t_ab;
  Matrix6d covariance = Matrix6d::Identity();

  /// Throws InvalidArgument unless t_b > t_a and the covariance is symmetric positive definite.
  void validate() const;
};

}  // namespace tdcp
