#include "tdcp/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "tdcp/constants.hpp"
#include "tdcp/csv_io.hpp"
#include "tdcp/error.hpp"

namespace tdcp {

using constants::kL1Wavelength;
using constants::kSpeedOfLight;

void GraphConfig::validate() const {
  if (!(window_length >= 2.0)) throw InvalidArgument("GraphConfig: window_length must be >= 2 s");
  if (!(sigma_dd > 0.0) || !(dcs_phi > 0.0) || !(sigma_lateral > 0.0) || !(sigma_vertical > 0.0) ||
      !(init_position_sigma > 0.0)) {
    throw InvalidArgument("GraphConfig: sigmas and the DCS parameter must be positive");
  }
  Eigen::LLT<Matrix6d> llt(qc);
  if (llt.info() != Eigen::Success) throw InvalidArgument("GraphConfig: Qc must be positive definite");
  if (solver.max_iterations < 1 || !(solver.trust_radius_init > 0.0) ||
      !(solver.trust_radius_max >= solver.trust_radius_init)) {
    throw InvalidArgument("GraphConfig: bad solver settings");
  }
}

// ---------------------------------------------------------------------------

const std::map<int, long>& PhaseLockTracker::observe(const ObservationEpoch& epoch) {
  std::map<int, long> now;
  for (const auto& s : epoch.sats) {
    if (!std::isfinite(s.phase_cycles)) continue;
    const auto it = current_.find(s.prn);
    const bool continuous = it != current_.end() && !s.lock_lost && last_epoch_ &&
                            last_seen_.count(s.prn) && last_seen_.at(s.prn) == *last_epoch_;
    now[s.prn] = continuous ? it->second : next_segment_++;
    last_seen_[s.prn] = epoch.t;
  }
  current_ = now;
  last_epoch_ = epoch.t;
  return epochs_[epoch.t] = std::move(now);
}

long PhaseLockTracker::segment(int prn, const GpsTime& t) const {
  const auto e = epochs_.find(t);
  if (e == epochs_.end()) return -1;
  const auto s = e->second.find(prn);
  return s == e->second.end() ? -1 : s->second;
}

bool PhaseLockTracker::eligible(int prn, const GpsTime& t_a, const GpsTime& t_b) const {
  const long a = segment(prn, t_a);
  return a >= 0 && a == segment(prn, t_b);
}

void PhaseLockTracker::prune(const GpsTime& t) { epochs_.erase(epochs_.begin(), epochs_.lower_bound(t)); }

// ---------------------------------------------------------------------------

EpochView make_epoch_view(const ObservationEpoch& epoch, const GpsTime& node_time, const NavigationData& nav,
                          const EnuFrame& frame, const Eigen::Vector3d& receiver_enu, const GraphConfig& cfg) {
  EpochView view;
  view.t = node_time;
  const EcefPoint rx = frame.to_ecef(receiver_enu);
  const Geodetic origin = frame.origin_geodetic();
  const Geodetic user{origin.lat, origin.lon, origin.height + receiver_enu.z()};
  for (const auto& s : epoch.sats) {
    if (!std::isfinite(s.phase_cycles)) continue;
    const BroadcastEphemeris* eph = nav.select(s.prn, epoch.t);
    if (!eph || eph->health != 0) continue;
    const EmissionState em = signal_emission_state(*eph, epoch.t, rx);
    SatView v;
    v.prn = s.prn;
    v.sat_enu = frame.to_enu(em.position);
    v.phase_range = kL1Wavelength * s.phase_cycles + kSpeedOfLight * em.clock_bias;
    const AzEl azel = azimuth_elevation(rx, em.position);
    v.elevation = azel.elevation;
    v.azimuth = azel.azimuth;
    if (cfg.use_tropo && azel.elevation > 0.06) {
      v.atmo.tropo = tropo_delay({origin.lat, epoch.t.day_of_year(), user.height}, azel.elevation);
    }
    if (cfg.use_iono && nav.klobuchar && azel.elevation > 0.0) {
      v.atmo.iono = klobuchar_delay(*nav.klobuchar, user, azel.azimuth, azel.elevation, epoch.t);
    }
    view.sats[s.prn] = v;
  }
  return view;
}

std::vector<TdcpPairMeasurement> make_tdcp_pairs(const EpochView& a, const EpochView& b,
                                                 const Eigen::Vector3d& receiver_a_enu, const GraphConfig& cfg,
                                                 const std::function<bool(int)>& eligible) {
  std::vector<const SatView*> common_a, common_b;
  for (const auto& [prn, va] : a.sats) {
    const auto it = b.sats.find(prn);
    if (it == b.sats.end() || !eligible(prn)) continue;
    if (va.elevation < cfg.mask_angle || it->second.elevation < cfg.mask_angle) continue;
    common_a.push_back(&va);
    common_b.push_back(&it->second);
  }
  std::vector<TdcpPairMeasurement> out;
  if (common_a.size() < 2) return out;
  std::size_t ref = 0;
  for (std::size_t i = 1; i < common_a.size(); ++i) {
    if (common_a[i]->elevation > common_a[ref]->elevation) ref = i;  // map order breaks ties by PRN
  }
  const SatView& ra = *common_a[ref];
  const SatView& rb = *common_b[ref];
  for (std::size_t i = 0; i < common_a.size(); ++i) {
    if (i == ref) continue;
    const SatView& oa = *common_a[i];
    const SatView& ob = *common_b[i];
    TdcpPairMeasurement m;
    m.t_a = a.t;
    m.t_b = b.t;
    m.ref_prn = ra.prn;
    m.other_prn = oa.prn;
    m.phi_dd = (ob.phase_range - oa.phase_range) - (rb.phase_range - ra.phase_range);
    m.sat_ref_a = ra.sat_enu;
    m.sat_ref_b = rb.sat_enu;
    m.sat_other_a = oa.sat_enu;
    m.sat_other_b = ob.sat_enu;
    m.u_ref = (ra.sat_enu - receiver_a_enu).normalized();
    m.u_other = (oa.sat_enu - receiver_a_enu).normalized();
    m.atmo_dd = differenced_atmo_correction(ra.atmo, rb.atmo, oa.atmo, ob.atmo, cfg.use_iono);
    double sigma = cfg.sigma_dd;
    if (cfg.elevation_weighting) sigma /= std::max(0.1, std::sin(std::min(oa.elevation, ra.elevation)));
    m.weight = 1.0 / (sigma * sigma);
    out.push_back(m);
  }
  return out;
}

std::optional<Eigen::Vector3d> tdcp_displacement(const std::vector<TdcpPairMeasurement>& pairs,
                                                 const Eigen::Vector3d& r_a, const Eigen::Vector3d& r_b_guess) {
  std::vector<bool> use(pairs.size(), true);
  Eigen::Vector3d r_b = r_b_guess;
  for (int pass = 0; pass < 2; ++pass) {
    const int n = static_cast<int>(std::count(use.begin(), use.end(), true));
    if (n < 3) return std::nullopt;
    r_b = r_b_guess;
    for (int it = 0; it < 4; ++it) {
      Eigen::MatrixXd j(n, 3);
      Eigen::VectorXd e(n);
      int row = 0;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!use[i]) continue;
        const auto& m = pairs[i];
        j.row(row) = ((m.sat_other_b - r_b).normalized() - (m.sat_ref_b - r_b).normalized()).transpose();
        e[row] = m.phi_dd - double_differenced_range(m, r_a, r_b) - m.atmo_dd;
        ++row;
      }
      const Eigen::Matrix3d n_mat = j.transpose() * j;
      Eigen::LDLT<Eigen::Matrix3d> ldlt(n_mat);
      if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < 1e-6 * ldlt.vectorD().maxCoeff()) {
        return std::nullopt;
      }
      r_b -= ldlt.solve(j.transpose() * e);
    }
    // One outlier rejection pass.
    double worst = 0.0;
    std::size_t worst_i = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!use[i]) continue;
      const auto& m = pairs[i];
      const double e = std::abs(m.phi_dd - double_differenced_range(m, r_a, r_b) - m.atmo_dd);
      if (e > worst) {
        worst = e;
        worst_i = i;
      }
    }
    if (worst < 0.2) return r_b;
    use[worst_i] = false;
  }
  return r_b;
}

// ---------------------------------------------------------------------------

namespace {

GpsTime node_time_of(const GpsTime& t) {
  const double sow = t.sow();
  return t + (std::round(sow) - sow);
}

constexpr double kTimeMatch = 1e-3;

}  // namespace

TdcpOdometry::TdcpOdometry(NavigationData nav, GraphConfig cfg) : nav_(std::move(nav)), cfg_(std::move(cfg)) {
  cfg_.validate();
}

void TdcpOdometry::set_rel_pose(std::vector<RelPoseMeasurement> meas) {
  for (const auto& m : meas) m.validate();
  std::sort(meas.begin(), meas.end(), [](const auto& x, const auto& y) { return x.t_b < y.t_b; });
  rel_pose_ = std::move(meas);
}

void TdcpOdometry::initialize(const ObservationEpoch& first) {
  PseudorangeOptions po;
  po.use_iono = cfg_.use_iono;
  po.use_tropo = cfg_.use_tropo;
  po.mask_angle = cfg_.mask_angle;
  PseudorangeFix fix;
  try {
    fix = pseudorange_fix(first, nav_, po);
  } catch (const Error& e) {
    throw Error(std::string("cannot initialize: ") + e.what());
  }
  frame_ = EnuFrame::at(fix.position);
  Node n;
  n.state.t = node_time_of(first.t);
  n.state.pose = Pose(Eigen::Matrix3d::Identity(), -cfg_.lever_arm);
  n.segments = tracker_.observe(first);
  n.view = make_epoch_view(first, n.state.t, nav_, frame_, Eigen::Vector3d::Zero(), cfg_);
  n.is_first = true;
  window_.push_back(n);
  causal_.push_back(n.state);
  initialized_ = true;
  stats_.epochs = 1;
}

std::vector<TdcpPairMeasurement> TdcpOdometry::pairs_between(const Node& a, const Node& b) const {
  auto eligible = [&](int prn) {
    const auto ia = a.segments.find(prn);
    const auto ib = b.segments.find(prn);
    return ia != a.segments.end() && ib != b.segments.end() && ia->second == ib->second;
  };
  return make_tdcp_pairs(a.view, b.view, a.state.receiver_position(cfg_.lever_arm), cfg_, eligible);
}

std::vector<FactorPtr> TdcpOdometry::build_factors(const std::vector<Node>& nodes) const {
  std::vector<FactorPtr> factors;
  const int n = static_cast<int>(nodes.size());
  for (int j = 1; j < n; ++j) {
    const int first_i = cfg_.tdcp_topology == TdcpTopology::kDense ? 0 : j - 1;
    for (int i = first_i; i < j; ++i) {
      for (const auto& m : pairs_between(nodes[i], nodes[j])) {
        factors.push_back(make_tdcp_factor(i, j, m, cfg_.lever_arm, cfg_.dcs_phi));
      }
    }
    factors.push_back(make_wnoa_factor(j - 1, j, cfg_.qc, nodes[j].state.t - nodes[j - 1].state.t));
  }
  for (int i = 0; i < n; ++i) factors.push_back(make_nonholonomic_factor(i, cfg_.sigma_lateral, cfg_.sigma_vertical));

  if (nodes.front().is_first) {
    factors.push_back(make_position_prior_factor(0, Eigen::Vector3d::Zero(), cfg_.init_position_sigma, cfg_.lever_arm));
    // Weak bootstrap prior: level attitude near the initial heading, modest motion.
    const Eigen::Matrix3d level = Pose::from_yaw(nodes.front().state.pose.yaw()).rotation();
    factors.push_back(make_state_prior_factor(0, level, Vector6d::Zero(), Eigen::Vector3d(0.05, 0.05, 1.0),
                                              (Vector6d() << 3.0, 3.0, 3.0, 1.0, 1.0, 1.0).finished()));
  }

  if (cfg_.use_rel_pose_factors && !rel_pose_.empty()) {
    for (int j = 1; j < n; ++j) {
      const GpsTime tb = nodes[j].state.t;
      auto it = std::lower_bound(rel_pose_.begin(), rel_pose_.end(), tb - kTimeMatch,
                                 [](const RelPoseMeasurement& m, const GpsTime& t) { return m.t_b < t; });
      for (; it != rel_pose_.end() && std::abs(it->t_b - tb) <= kTimeMatch; ++it) {
        for (int i = 0; i < j; ++i) {
          if (std::abs(it->t_a - nodes[i].state.t) <= kTimeMatch) factors.push_back(make_rel_pose_factor(i, j, *it));
        }
      }
    }
  }
  return factors;
}

StateNode TdcpOdometry::add_epoch(const ObservationEpoch& epoch) {
  if (!initialized_) {
    initialize(epoch);
    return causal_.back();
  }
  const GpsTime t = node_time_of(epoch.t);
  if (t <= window_.back().state.t) {
    tracker_.observe(epoch);
    return causal_.back();
  }
  ++stats_.epochs;

  // Constant-twist prediction, refined by the TDCP displacement from the previous node.
  Node& prev = window_.back();
  Node node;
  node.state.t = t;
  const double dt = t - prev.state.t;
  node.state.pose = prev.state.pose * se3_exp(dt * prev.state.twist);
  node.state.twist = prev.state.twist;
  node.segments = tracker_.observe(epoch);
  node.view = make_epoch_view(epoch, t, nav_, frame_, node.state.receiver_position(cfg_.lever_arm), cfg_);

  const Eigen::Vector3d r_prev = prev.state.receiver_position(cfg_.lever_arm);
  if (auto r_new = tdcp_displacement(pairs_between(prev, node), r_prev, node.state.receiver_position(cfg_.lever_arm))) {
    const Eigen::Vector3d d = *r_new - r_prev;
    if (!yaw_initialized_ && d.head<2>().norm() > 0.2 * dt) {
      // Heading from the first resolved displacement; roll and pitch start level.
      const double yaw = std::atan2(d.y(), d.x());
      const Eigen::Matrix3d rot = Pose::from_yaw(yaw).rotation();
      for (auto& w : window_) {
        const Eigen::Vector3d r = w.state.receiver_position(cfg_.lever_arm);
        w.state.pose = Pose(rot, r - rot * cfg_.lever_arm);
        w.state.twist = Vector6d::Zero();
        w.state.twist[0] = d.head<2>().norm() / dt;
      }
      node.state.pose = Pose(rot, node.state.pose.translation());
      node.state.twist = window_.back().state.twist;
      yaw_initialized_ = true;
    }
    node.state.pose = Pose(node.state.pose.rotation(), *r_new - node.state.pose.rotation() * cfg_.lever_arm);
  }

  window_.push_back(std::move(node));
  while (window_.size() > 1 && window_.front().state.t < t - cfg_.window_length - 1e-9) window_.pop_front();

  std::vector<Node> nodes(window_.begin(), window_.end());
  // The oldest node is the gauge. The exact double-difference range depends weakly on
  // absolute position, so a free first window drifts by metres under the loose prior;
  // the first node keeps only its origin so its bootstrap heading can still settle.
  // Settling rotates the antenna about that origin, so the window is then shifted to put
  // the first antenna back where the pseudorange fix placed it.
  std::vector<DofMask> free(nodes.size(), DofMask().set());
  free[0].reset();
  if (nodes.front().is_first) {
    for (int a = 3; a < kNodeDim; ++a) free[0].set(a);
  }
  if (nodes.size() > 1) {
    const std::vector<FactorPtr> factors = build_factors(nodes);
    std::vector<StateNode> states;
    states.reserve(nodes.size());
    for (const auto& n : nodes) states.push_back(n.state);
    const Eigen::Vector3d anchor = states.front().receiver_position(cfg_.lever_arm);
    last_summary_ = solve_window(states, free, factors, cfg_.solver);
    if (nodes.front().is_first) {
      const Eigen::Vector3d shift = anchor - states.front().receiver_position(cfg_.lever_arm);
      for (StateNode& st : states) st.pose = Pose(st.pose.rotation(), st.pose.translation() + shift);
    }
    stats_.solver_iterations += last_summary_.iterations;
    for (const auto& f : factors) {
      if (f->robust_phi() > 0.0 && f->keys().back() == static_cast<int>(nodes.size()) - 1) ++stats_.tdcp_factors;
      if (f->dim() == 6 && f->keys().size() == 2 && f->keys().back() == static_cast<int>(nodes.size()) - 1) {
        ++stats_.rel_pose_factors;
      }
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) window_[i].state = states[i];
  }
  causal_.push_back(window_.back().state);
  tracker_.prune(window_.front().state.t - 1.0);
  return causal_.back();
}

std::vector<StateNode> TdcpOdometry::window() const {
  std::vector<StateNode> out;
  for (const auto& n : window_) out.push_back(n.state);
  return out;
}

Trajectory run_tdcp(const std::vector<ObservationEpoch>& epochs, const NavigationData& nav, const GraphConfig& cfg,
                    const std::vector<RelPoseMeasurement>& rel_pose, EnuFrame* frame_out) {
  TdcpOdometry odo(nav, cfg);
  if (!rel_pose.empty()) odo.set_rel_pose(rel_pose);
  for (const auto& e : epochs) odo.add_epoch(e);
  if (frame_out) *frame_out = odo.frame();
  return odo.trajectory();
}

void export_trajectory(const Trajectory& traj, const EnuFrame& frame, const Eigen::Vector3d& lever_arm,
                       const std::filesystem::path& path) {
  write_trajectory(traj, lever_arm, path, frame.origin_geodetic());
}

}  // namespace tdcp
