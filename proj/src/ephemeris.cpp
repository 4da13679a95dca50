#include "tdcp/ephemeris.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "tdcp/constants.hpp"
#include "tdcp/error.hpp"

namespace tdcp {

using constants::kGm;
using constants::kSpeedOfLight;

void BroadcastEphemeris::validate() const {
  if (!(e >= 0.0 && e <= 0.05)) throw InvalidArgument("ephemeris: eccentricity out of range");
  if (!(sqrt_a >= 5000.0 && sqrt_a <= 5500.0)) throw InvalidArgument("ephemeris: sqrt(A) out of range");
  if (!(std::abs(af0) < 1e-3)) throw InvalidArgument("ephemeris: clock bias af0 out of range");
}

namespace {

// State at t + offset. The offset stays in floating point so light-time corrections are not
// rounded to the nanosecond grid of GpsTime.
SatelliteState state_at(const BroadcastEphemeris& eph, const GpsTime& t, double offset, const EphemerisOptions& opts) {
  const double tk = (t - eph.toe) + offset;
  if (std::abs(tk) > opts.validity_seconds) {
    throw Error("sat_state: stale ephemeris for PRN " + std::to_string(eph.prn) + " (|t - toe| = " +
                std::to_string(std::abs(tk)) + " s)");
  }
  const double a = eph.sqrt_a * eph.sqrt_a;
  const double n = std::sqrt(kGm / (a * a * a)) + eph.delta_n;
  const double mk = eph.m0 + n * tk;

  double ek = mk;
  bool converged = false;
  for (int it = 0; it < 30; ++it) {
    const double f = ek - eph.e * std::sin(ek) - mk;
    const double step = f / (1.0 - eph.e * std::cos(ek));
    ek -= step;
    if (std::abs(step) < 1e-13) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericalError("sat_state: Kepler iteration did not converge");

  const double sin_e = std::sin(ek), cos_e = std::cos(ek);
  const double one_minus = 1.0 - eph.e * cos_e;
  const double root = std::sqrt(1.0 - eph.e * eph.e);
  const double ek_dot = n / one_minus;
  const double nu = std::atan2(root * sin_e, cos_e - eph.e);
  const double nu_dot = root * ek_dot / one_minus;
  const double phi = nu + eph.omega;
  const double s2 = std::sin(2.0 * phi), c2 = std::cos(2.0 * phi);

  const double u = phi + eph.cus * s2 + eph.cuc * c2;
  const double r = a * one_minus + eph.crs * s2 + eph.crc * c2;
  const double inc = eph.i0 + eph.idot * tk + eph.cis * s2 + eph.cic * c2;
  const double u_dot = nu_dot * (1.0 + 2.0 * (eph.cus * c2 - eph.cuc * s2));
  const double r_dot = a * eph.e * sin_e * ek_dot + 2.0 * nu_dot * (eph.crs * c2 - eph.crc * s2);
  const double inc_dot = eph.idot + 2.0 * nu_dot * (eph.cis * c2 - eph.cic * s2);

  const double we = opts.earth_rotation_rate;
  const double omega_k = eph.omega0 + (eph.omega_dot - we) * tk - we * eph.toe.sow();
  const double omega_k_dot = eph.omega_dot - we;

  const double xp = r * std::cos(u), yp = r * std::sin(u);
  const double xp_dot = r_dot * std::cos(u) - r * u_dot * std::sin(u);
  const double yp_dot = r_dot * std::sin(u) + r * u_dot * std::cos(u);
  const double co = std::cos(omega_k), so = std::sin(omega_k);
  const double ci = std::cos(inc), si = std::sin(inc);

  SatelliteState out;
  const double x = xp * co - yp * ci * so;
  const double y = xp * so + yp * ci * co;
  const double z = yp * si;
  out.position = EcefPoint(x, y, z);
  out.velocity.x() = xp_dot * co - yp_dot * ci * so + yp * si * so * inc_dot - y * omega_k_dot;
  out.velocity.y() = xp_dot * so + yp_dot * ci * co - yp * si * co * inc_dot + x * omega_k_dot;
  out.velocity.z() = yp_dot * si + yp * ci * inc_dot;

  const double dt = (t - eph.toc) + offset;
  out.clock_bias = eph.af0 + eph.af1 * dt + eph.af2 * dt * dt;
  out.clock_drift = eph.af1 + 2.0 * eph.af2 * dt;
  if (opts.relativistic_clock) {
    out.clock_bias += constants::kRelativisticF * eph.e * eph.sqrt_a * sin_e;
    out.clock_drift += constants::kRelativisticF * eph.e * eph.sqrt_a * cos_e * ek_dot;
  }
  out.eccentric_anomaly = ek;
  return out;
}

}  // namespace

SatelliteState sat_state(const BroadcastEphemeris& eph, const GpsTime& t, const EphemerisOptions& opts) {
  return state_at(eph, t, 0.0, opts);
}

Eigen::Vector3d inertial_velocity(const SatelliteState& s, double earth_rotation_rate) {
  return s.velocity + Eigen::Vector3d(0.0, 0.0, earth_rotation_rate).cross(s.position.xyz);
}

EmissionState signal_emission_state(const BroadcastEphemeris& eph, const GpsTime& receive_time,
                                    const EcefPoint& approx_receiver, const EphemerisOptions& opts) {
  SatelliteState st = sat_state(eph, receive_time, opts);
  double tau = (st.position.xyz - approx_receiver.xyz).norm() / kSpeedOfLight;
  for (int it = 0; it < 2; ++it) {
    st = state_at(eph, receive_time, -tau, opts);
    tau = (st.position.xyz - approx_receiver.xyz).norm() / kSpeedOfLight;
  }
  st = state_at(eph, receive_time, -tau, opts);

  // Earth rotation during transit (Sagnac).
  const double angle = opts.earth_rotation_rate * tau;
  const double ca = std::cos(angle), sa = std::sin(angle);
  Eigen::Matrix3d rz;
  rz << ca, sa, 0.0,
        -sa, ca, 0.0,
        0.0, 0.0, 1.0;

  EmissionState out;
  out.position = EcefPoint(rz * st.position.xyz);
  out.velocity = rz * st.velocity;
  out.clock_bias = st.clock_bias;
  out.clock_drift = st.clock_drift;
  out.emission_time = receive_time - tau;
  out.travel_time = tau;
  return out;
}

const BroadcastEphemeris* select_ephemeris(const std::vector<BroadcastEphemeris>& ephs, int prn,
                                           const GpsTime& t) {
  const BroadcastEphemeris* best = nullptr;
  double best_dt = std::numeric_limits<double>::infinity();
  for (const auto& eph : ephs) {
    if (eph.prn != prn) continue;
    const double dt = std::abs(t - eph.toe);
    if (dt < best_dt || (dt == best_dt && eph.toe < best->toe)) {
      best = &eph;
      best_dt = dt;
    }
  }
  return best;
}

}  // namespace tdcp
