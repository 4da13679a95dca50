#include "tdcp/baselines.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "tdcp/atmosphere.hpp"
#include "tdcp/constants.hpp"
#include "tdcp/error.hpp"

namespace tdcp {

using constants::kL1Wavelength;
using constants::kSpeedOfLight;

namespace {

bool usable_position(const EcefPoint& p) { return p.norm() > 6.0e6 && p.norm() < 7.0e6; }

SlantDelays model_delays(const NavigationData& nav, const EcefPoint& receiver, const AzEl& azel, const GpsTime& t,
                         const PseudorangeOptions& opts) {
  SlantDelays d;
  if (!usable_position(receiver) || azel.elevation <= 0.06) return d;
  const Geodetic g = ecef_to_geodetic(receiver);
  if (opts.use_tropo) d.tropo = tropo_delay({g.lat, t.day_of_year(), g.height}, azel.elevation);
  if (opts.use_iono && nav.klobuchar) d.iono = klobuchar_delay(*nav.klobuchar, g, azel.azimuth, azel.elevation, t);
  return d;
}

}  // namespace

PseudorangeFix pseudorange_fix(const ObservationEpoch& epoch, const NavigationData& nav,
                               const PseudorangeOptions& opts) {
  struct Usable {
    const SatObservation* obs;
    const BroadcastEphemeris* eph;
  };
  std::vector<Usable> sats;
  for (const auto& s : epoch.sats) {
    if (!std::isfinite(s.pseudorange)) continue;
    const BroadcastEphemeris* eph = nav.select(s.prn, epoch.t);
    if (eph && eph->health == 0) sats.push_back({&s, eph});
  }
  if (sats.size() < 4) throw Error("pseudorange_fix: fewer than 4 satellites with pseudoranges");

  Eigen::Vector4d x = Eigen::Vector4d::Zero();
  PseudorangeFix fix;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const EcefPoint rx(x.head<3>());
    const bool located = usable_position(rx);
    Eigen::MatrixXd h(sats.size(), 4);
    Eigen::VectorXd r(sats.size());
    int rows = 0;
    for (const auto& u : sats) {
      const EmissionState em = signal_emission_state(*u.eph, epoch.t, rx);
      const Eigen::Vector3d los = em.position.xyz - rx.xyz;
      const double range = los.norm();
      double corrected = u.obs->pseudorange + kSpeedOfLight * em.clock_bias;
      if (located) {
        const AzEl azel = azimuth_elevation(rx, em.position);
        if (azel.elevation < opts.mask_angle) continue;
        const SlantDelays d = model_delays(nav, rx, azel, epoch.t, opts);
        corrected -= d.tropo + d.iono;
      }
      h.row(rows) << -(los / range).transpose(), 1.0;
      r[rows] = corrected - (range + x[3]);
      ++rows;
    }
    if (rows < 4) throw Error("pseudorange_fix: fewer than 4 satellites above the elevation mask");
    const Eigen::MatrixXd hr = h.topRows(rows);
    const Eigen::Matrix4d n = hr.transpose() * hr;
    Eigen::LDLT<Eigen::Matrix4d> ldlt(n);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-10 * ldlt.vectorD().maxCoeff()) {
      throw NumericalError("pseudorange_fix: singular geometry");
    }
    const Eigen::Vector4d dx = ldlt.solve(hr.transpose() * r.head(rows));
    x += dx;
    fix.satellites = rows;
    fix.iterations = it;
    if (!x.allFinite()) throw NumericalError("pseudorange_fix: diverged");
    if (dx.head<3>().norm() < opts.step_tolerance && usable_position(EcefPoint(x.head<3>())) && it > 1) {
      fix.position = EcefPoint(x.head<3>());
      fix.clock_bias = x[3];
      return fix;
    }
  }
  throw NumericalError("pseudorange_fix: no convergence in " + std::to_string(opts.max_iterations) + " iterations");
}

Trajectory pseudorange_track(const std::vector<ObservationEpoch>& epochs, const NavigationData& nav,
                             const EnuFrame& frame, const PseudorangeOptions& opts) {
  Trajectory traj;
  for (const auto& e : epochs) {
    PseudorangeFix fix;
    try {
      fix = pseudorange_fix(e, nav, opts);
    } catch (const Error&) {
      continue;
    }
    StateNode n;
    n.t = e.t;
    n.pose = Pose(Eigen::Matrix3d::Identity(), frame.to_enu(fix.position));
    traj.push_back(n);
  }
  return traj;
}

DopplerVelocity doppler_velocity(const ObservationEpoch& epoch, const NavigationData& nav, const EcefPoint& receiver,
                                 const PseudorangeOptions& opts) {
  Eigen::MatrixXd h(epoch.sats.size(), 4);
  Eigen::VectorXd r(epoch.sats.size());
  int rows = 0;
  for (const auto& s : epoch.sats) {
    if (!std::isfinite(s.doppler_hz)) continue;
    const BroadcastEphemeris* eph = nav.select(s.prn, epoch.t);
    if (!eph || eph->health != 0) continue;
    const EmissionState em = signal_emission_state(*eph, epoch.t, receiver);
    const AzEl azel = azimuth_elevation(receiver, em.position);
    if (azel.elevation < opts.mask_angle) continue;
    const Eigen::Vector3d e = (em.position.xyz - receiver.xyz).normalized();
    // Range rate with the light-time factor rho_dot = e.(v_s - v_r) / k. The emission point moves
    // with the satellite and with the transit rotation, so k uses the inertial velocity.
    const Eigen::Vector3d v_light = em.velocity + Eigen::Vector3d(0.0, 0.0, constants::kEarthRotationRate).cross(em.position.xyz);
    const double k = 1.0 + e.dot(v_light) / kSpeedOfLight;
    double rate = -kL1Wavelength * s.doppler_hz + kSpeedOfLight * em.clock_drift;
    // Modelled atmosphere rate by central difference over one second.
    const SlantDelays before = model_delays(nav, receiver, azel, epoch.t - 0.5, opts);
    const SlantDelays after = model_delays(nav, receiver, azel, epoch.t + 0.5, opts);
    rate -= (after.tropo - before.tropo) - (after.iono - before.iono);
    h.row(rows) << -e.transpose() / k, 1.0;
    r[rows] = rate - e.dot(em.velocity) / k;
    ++rows;
  }
  if (rows < 4) throw Error("doppler_velocity: fewer than 4 satellites with Doppler");
  const Eigen::MatrixXd hr = h.topRows(rows);
  const Eigen::Vector4d x = (hr.transpose() * hr).ldlt().solve(hr.transpose() * r.head(rows));
  if (!x.allFinite()) throw NumericalError("doppler_velocity: singular geometry");
  return {x.head<3>(), x[3], rows};
}

DopplerTrack doppler_odometry(const std::vector<ObservationEpoch>& epochs, const NavigationData& nav,
                              const std::optional<EnuFrame>& frame, const PseudorangeOptions& opts) {
  if (epochs.empty()) throw InvalidArgument("doppler_odometry: no epochs");
  const PseudorangeFix first = pseudorange_fix(epochs.front(), nav, opts);
  DopplerTrack out;
  out.frame = frame ? *frame : EnuFrame::at(first.position);
  Eigen::Vector3d pos = out.frame.to_enu(first.position);
  Eigen::Vector3d prev_vel = Eigen::Vector3d::Zero();
  bool have_prev = false;
  for (std::size_t k = 0; k < epochs.size(); ++k) {
    const auto& e = epochs[k];
    Eigen::Vector3d vel = prev_vel;
    bool held = true;
    const double dt = k > 0 ? e.t - epochs[k - 1].t : 0.0;
    // Linearize at the predicted position: a metre of error here costs ~1e-4 m/s in velocity.
    const Eigen::Vector3d predicted = pos + prev_vel * dt;
    try {
      const DopplerVelocity dv = doppler_velocity(e, nav, out.frame.to_ecef(predicted), opts);
      vel = out.frame.vector_to_enu(dv.velocity);
      held = false;
    } catch (const Error&) {
    }
    pos += 0.5 * (prev_vel + vel) * dt;
    if (!have_prev && held) vel = Eigen::Vector3d::Zero();
    prev_vel = vel;
    have_prev = true;
    StateNode n;
    n.t = e.t;
    n.pose = Pose(Eigen::Matrix3d::Identity(), pos);
    n.twist.head<3>() = vel;
    out.trajectory.push_back(n);
    out.held.push_back(held);
  }
  return out;
}

}  // namespace tdcp
