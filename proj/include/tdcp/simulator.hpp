#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tdcp/constants.hpp"
#include "tdcp/frames.hpp"
#include "tdcp/observation.hpp"
#include "tdcp/trajectory.hpp"

namespace tdcp {

/// Measurement error model. Systematic terms are per-satellite constants or rates
/// drawn once per run; white noise is drawn per epoch.
struct ErrorBudget {
  double phase_noise_sigma = 0.002;        ///< m
  double pseudorange_noise_sigma = 0.5;    ///< m
  double doppler_noise_sigma = 0.05;       ///< m/s
  double receiver_clock_bias = 300.0;      ///< m, c * initial offset
  double receiver_clock_drift = 3.0;       ///< m/s
  double receiver_clock_random_walk = 0.1; ///< m/sqrt(s)
  bool random_ambiguity = true;            ///< integer cycles drawn per lock segment
  double cycle_slip_rate = 0.0;            ///< events per satellite per minute
  double multipath_code_sigma = 1.2;       ///< m, first-order Gauss-Markov
  double multipath_phase_sigma = 0.005;    ///< m
  double multipath_tau = 10.0;             ///< s
  bool apply_iono = true;
  bool apply_tropo = true;
  bool apply_eph_error = true;
  double eph_error_sigma = 0.1;            ///< m per axis
  double eph_error_rate_sigma = 2e-4;      ///< m/s per axis
  double sat_clock_error_sigma = 0.1;      ///< m
  double sat_clock_error_rate_sigma = 3e-4;///< m/s
  double iono_scale_sigma = 0.02;          ///< relative error of the Klobuchar model, per satellite
  double iono_rate_sigma = 2e-3;           ///< m/s, unmodelled slant delay drift per satellite
  double tropo_scale_sigma = 0.05;         ///< relative error of the tropo model, per run
  bool quantize = true;                    ///< round observables to RINEX resolution (1e-3)

  /// Every error source off: observations are exact functions of geometry.
  static ErrorBudget zero();
  /// Throws InvalidArgument when a sigma is negative or non-finite.
  void validate() const;
};

struct DropoutWindow {
  double start = 0.0;     ///< s after scenario start
  double duration = 0.0;  ///< s
  int surviving = 0;      ///< satellites kept (highest elevation)
};

struct PhaseOutlier {
  double time = 0.0;       ///< s after scenario start
  double magnitude = 5.0;  ///< m added to one satellite's phase for one epoch
};

enum class PathKind { kWeave, kCircle, kPolyline };

struct PathSpec {
  PathKind kind = PathKind::kWeave;
  double heading = constants::kPi / 6.0;  ///< initial heading, rad from east
  double weave_amplitude = 0.55;        ///< rad
  double weave_period = 70.0;           ///< m
  double circle_radius = 20.0;          ///< m, positive turns left
  std::vector<Eigen::Vector2d> waypoints;  ///< ENU m, polyline only
};

/// Stand-in odometry between consecutive epochs.
struct RelPoseNoise {
  bool enabled = true;
  double scale_error_sigma = 0.005;  ///< per-run translation scale error
  double translation_sigma = 0.005;  ///< m per step per axis
  double yaw_sigma = 0.004;          ///< rad per step
  double tilt_sigma = 0.001;         ///< rad per step, roll and pitch
  double reported_drift = 0.02;      ///< translation uncertainty reported per metre travelled
};

struct ScenarioConfig {
  PathSpec path;
  double speed = 1.0;       ///< m/s
  double epoch_rate = 1.0;  ///< Hz
  double duration = 250.0;  ///< s
  double truth_rate = 4.0;  ///< Hz
  Geodetic origin{43.782 * constants::kPi / 180.0, -79.466 * constants::kPi / 180.0, 150.0};
  CalendarTime start{2022, 8, 16, 19, 0, 18.0};
  Extrinsics extrinsics;
  std::vector<BroadcastEphemeris> constellation;  ///< empty: synthetic constellation
  std::optional<KlobucharParams> klobuchar;       ///< empty: default_klobuchar()
  int synthetic_sats = 8;
  double mask_angle = 10.0 * constants::kPi / 180.0;
  double occlusion_rate = 0.0;              ///< blockage onsets per satellite per second
  double occlusion_mean_duration = 10.0;    ///< s
  int min_visible = 5;                      ///< occlusion never drops below this count
  std::vector<DropoutWindow> dropouts;
  std::vector<PhaseOutlier> outliers;
  RelPoseNoise rel_pose;
  std::uint64_t seed = 1;

  GpsTime start_time() const { return GpsTime::from_calendar(start); }
  /// Throws InvalidArgument on inconsistent values.
  void validate() const;
};

struct Scenario {
  ScenarioConfig config;
  ErrorBudget budget;
};

/// Key-value text format, one `key = value` per line, '#' starts a comment.
Scenario parse_scenario(std::istream& in);
Scenario parse_scenario(const std::filesystem::path& path);
std::string format_scenario(const Scenario& s);

struct VisibilityStats {
  int min = 0;
  double median = 0.0;
  int max = 0;
};

struct SimulationResult {
  std::vector<ObservationEpoch> observations;
  NavigationData nav;
  std::vector<GroundTruthSample> truth;  ///< receiver positions at truth_rate, ENU of `frame`
  Trajectory truth_states;               ///< vehicle states at the epoch times
  std::vector<RelPoseMeasurement> rel_pose;
  EnuFrame frame;
  Eigen::Vector3d lever_arm = Eigen::Vector3d::Zero();
  VisibilityStats visibility;  ///< outside dropout windows
};

/// Nominal 31-satellite constellation, keeping the `count` highest at `start` above
/// the origin. Elements are quantized to RINEX precision.
std::vector<BroadcastEphemeris> synthetic_constellation(const GpsTime& start, const Geodetic& site, int count);
KlobucharParams default_klobuchar();

/// Deterministic for a given seed. Throws InvalidArgument when fewer than 4 satellites
/// are visible at an epoch outside a dropout window.
SimulationResult simulate(const ScenarioConfig& cfg, const ErrorBudget& budget);

VisibilityStats visibility_stats(const std::vector<ObservationEpoch>& epochs);

/// Writes obs.rnx, nav.rnx, truth.csv, truth_states.csv, rel_pose.csv and summary.json.
void write_simulation(const SimulationResult& sim, const std::filesystem::path& dir);

}  // namespace tdcp
