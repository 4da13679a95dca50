#pragma once

#include <optional>
#include <vector>

#include "tdcp/frames.hpp"
#include "tdcp/observation.hpp"
#include "tdcp/trajectory.hpp"

namespace tdcp {

struct PseudorangeOptions {
  bool use_iono = true;
  bool use_tropo = true;
  double mask_angle = 10.0 * constants::kPi / 180.0;
  int max_iterations = 20;
  double step_tolerance = 1e-4;  ///< m
};

struct PseudorangeFix {
  EcefPoint position;
  double clock_bias = 0.0;  ///< m
  int satellites = 0;
  int iterations = 0;
};

/// Iterated least squares over (x, y, z, c dt) with emission time, Earth rotation,
/// satellite clock and atmosphere corrections. Throws Error with fewer than four usable
/// satellites and NumericalError on divergence or singular geometry.
PseudorangeFix pseudorange_fix(const ObservationEpoch& epoch, const NavigationData& nav,
                               const PseudorangeOptions& opts = {});

/// Single-epoch fixes for every epoch with enough satellites, as an identity-attitude
/// trajectory in `frame`.
Trajectory pseudorange_track(const std::vector<ObservationEpoch>& epochs, const NavigationData& nav,
                             const EnuFrame& frame, const PseudorangeOptions& opts = {});

struct DopplerVelocity {
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  ///< ECEF m/s
  double clock_drift = 0.0;                            ///< m/s
  int satellites = 0;
};

/// Receiver velocity and clock drift from Doppler. Throws Error with fewer than four
/// satellites.
DopplerVelocity doppler_velocity(const ObservationEpoch& epoch, const NavigationData& nav, const EcefPoint& receiver,
                                 const PseudorangeOptions& opts = {});

struct DopplerTrack {
  Trajectory trajectory;       ///< identity attitude, translation = receiver position in `frame`
  std::vector<bool> held;      ///< velocity held from the previous epoch
  EnuFrame frame;
};

/// Trapezoidal integration of Doppler velocities from the first pseudorange fix, which
/// also defines the ENU frame unless one is supplied.
DopplerTrack doppler_odometry(const std::vector<ObservationEpoch>& epochs, const NavigationData& nav,
                              const std::optional<EnuFrame>& frame = std::nullopt,
                              const PseudorangeOptions& opts = {});

}  // namespace tdcp
