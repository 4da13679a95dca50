#pragma once

#include <deque>
#include <functional>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "tdcp/baselines.hpp"
#include "tdcp/factors.hpp"
#include "tdcp/frames.hpp"
#include "tdcp/observation.hpp"
#include "tdcp/solver.hpp"
#include "tdcp/trajectory.hpp"

namespace tdcp {

enum class TdcpTopology { kConsecutive, kDense };

struct GraphConfig {
  TdcpTopology tdcp_topology = TdcpTopology::kConsecutive;
  double window_length = 10.0;  ///< s
  bool use_rel_pose_factors = false;
  bool use_iono = true;
  bool use_tropo = true;
  SolverOptions solver;
  double sigma_dd = 0.03;            ///< m, double-differenced phase
  bool elevation_weighting = false;  ///< scale sigma_dd by 1/sin(el) of the lower satellite
  double dcs_phi = 4.0;
  double sigma_lateral = 0.05;   ///< m/s
  double sigma_vertical = 0.05;  ///< m/s
  Matrix6d qc = (Vector6d() << 0.1, 0.01, 0.01, 0.001, 0.001, 0.01).finished().asDiagonal();
  double mask_angle = 10.0 * constants::kPi / 180.0;
  double init_position_sigma = 2.0;  ///< m
  Eigen::Vector3d lever_arm = Extrinsics{}.lever_arm;

  /// Throws InvalidArgument on inconsistent values (window shorter than 2 s, ...).
  void validate() const;
};

/// Lock segments per satellite: a new segment starts whenever a satellite appears after
/// a gap, reports loss of lock or has no phase. Two epochs can be differenced for a
/// satellite iff they carry the same segment.
class PhaseLockTracker {
 public:
  /// Registers an epoch and returns its satellite -> segment map.
  const std::map<int, long>& observe(const ObservationEpoch& epoch);
  /// Segment of `prn` at a registered epoch time, or -1.
  long segment(int prn, const GpsTime& t) const;
  bool eligible(int prn, const GpsTime& t_a, const GpsTime& t_b) const;
  /// Forget epochs before t.
  void prune(const GpsTime& t);

 private:
  std::map<GpsTime, std::map<int, long>> epochs_;
  std::map<int, long> current_;
  std::map<int, GpsTime> last_seen_;
  std::optional<GpsTime> last_epoch_;
  long next_segment_ = 0;
};

/// Per-epoch satellite quantities cached when a node is created.
struct SatView {
  int prn = 0;
  Eigen::Vector3d sat_enu = Eigen::Vector3d::Zero();  ///< emission position, ENU
  double phase_range = 0.0;                           ///< lambda * cycles + c * sat clock, m
  double elevation = 0.0;
  double azimuth = 0.0;
  SlantDelays atmo;
};

struct EpochView {
  GpsTime t;  ///< node time
  std::map<int, SatView> sats;
};

/// Builds the satellite view of an epoch for a receiver near `receiver_enu`.
EpochView make_epoch_view(const ObservationEpoch& epoch, const GpsTime& node_time, const NavigationData& nav,
                          const EnuFrame& frame, const Eigen::Vector3d& receiver_enu, const GraphConfig& cfg);

/// TDCP pairs between two epochs against the highest common satellite at t_a (ties to the
/// lowest PRN). `eligible` filters satellites that kept phase lock.
std::vector<TdcpPairMeasurement> make_tdcp_pairs(const EpochView& a, const EpochView& b,
                                                 const Eigen::Vector3d& receiver_a_enu, const GraphConfig& cfg,
                                                 const std::function<bool(int)>& eligible);

/// Least-squares receiver displacement from TDCP pairs with r_a held fixed. Returns
/// nullopt with fewer than three pairs.
std::optional<Eigen::Vector3d> tdcp_displacement(const std::vector<TdcpPairMeasurement>& pairs,
                                                 const Eigen::Vector3d& r_a, const Eigen::Vector3d& r_b_guess);

struct PipelineStats {
  std::size_t epochs = 0;
  std::size_t tdcp_factors = 0;
  std::size_t rel_pose_factors = 0;
  std::size_t solver_iterations = 0;
};

/// Forward-only sliding-window TDCP odometry.
class TdcpOdometry {
 public:
  TdcpOdometry(NavigationData nav, GraphConfig cfg);

  void set_rel_pose(std::vector<RelPoseMeasurement> meas);

  /// ENU origin at the first pseudorange fix. Throws Error("cannot initialize") with
  /// fewer than four pseudoranges.
  void initialize(const ObservationEpoch& first);
  /// Adds a node for the epoch (initializing on the first call) and re-solves the
  /// window. Returns the new node's estimate. Epochs mapping to an existing node time
  /// only update lock tracking.
  StateNode add_epoch(const ObservationEpoch& epoch);

  bool initialized() const { return initialized_; }
  const EnuFrame& frame() const { return frame_; }
  /// Estimates as reported when each node was added.
  const Trajectory& trajectory() const { return causal_; }
  std::vector<StateNode> window() const;
  const SolverSummary& last_summary() const { return last_summary_; }
  const PipelineStats& stats() const { return stats_; }
  const GraphConfig& config() const { return cfg_; }

 private:
  struct Node {
    StateNode state;
    EpochView view;
    std::map<int, long> segments;
    bool is_first = false;
  };

  std::vector<FactorPtr> build_factors(const std::vector<Node>& nodes) const;
  std::vector<TdcpPairMeasurement> pairs_between(const Node& a, const Node& b) const;

  NavigationData nav_;
  GraphConfig cfg_;
  std::vector<RelPoseMeasurement> rel_pose_;
  bool initialized_ = false;
  bool yaw_initialized_ = false;
  EnuFrame frame_;
  PhaseLockTracker tracker_;
  std::deque<Node> window_;
  Trajectory causal_;
  SolverSummary last_summary_;
  PipelineStats stats_;
};

/// Runs the pipeline over all epochs.
Trajectory run_tdcp(const std::vector<ObservationEpoch>& epochs, const NavigationData& nav, const GraphConfig& cfg,
                    const std::vector<RelPoseMeasurement>& rel_pose = {}, EnuFrame* frame_out = nullptr);

/// CSV export of the receiver-frame trajectory (see write_trajectory).
void export_trajectory(const Trajectory& traj, const EnuFrame& frame, const Eigen::Vector3d& lever_arm,
                       const std::filesystem::path& path);

}  // namespace tdcp
