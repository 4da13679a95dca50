#include "tdcp/simulator.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tdcp/constants.hpp"
#include "tdcp/csv_io.hpp"
#include "tdcp/error.hpp"
#include "tdcp/rinex.hpp"

namespace tdcp {

using constants::kL1Wavelength;
using constants::kPi;
using constants::kSpeedOfLight;

namespace {

constexpr double kDeg = kPi / 180.0;

void check_sigma(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) throw InvalidArgument(std::string("ErrorBudget: ") + name + " must be >= 0");
}

// Independent generator per purpose so that, for a given seed, adding a dropout or an
// outlier does not perturb the other random draws.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream, 0x7d3cu};
  return std::mt19937_64(seq);
}

double normal(std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> d(0.0, 1.0);
  const double z = d(rng);
  return sigma * z;
}

double uniform(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double round_to(double v, double quantum) { return std::round(v / quantum) * quantum; }

struct PathPoint {
  Eigen::Vector2d position;
  double heading = 0.0;
  double curvature = 0.0;
};

// Vehicle path parameterized by arc length.
class ScenarioPath {
 public:
  ScenarioPath(const PathSpec& spec, double max_length) : spec_(spec) {
    if (spec_.kind == PathKind::kWeave) {
      const int n = static_cast<int>(std::ceil(std::max(max_length, 1.0))) + 2;
      table_.resize(n + 1);
      table_[0] = Eigen::Vector2d::Zero();
      for (int k = 0; k < n; ++k) table_[k + 1] = table_[k] + integrate(k, k + 1.0);
    } else if (spec_.kind == PathKind::kPolyline) {
      if (spec_.waypoints.size() < 2) throw InvalidArgument("polyline path needs at least two waypoints");
      cumulative_.push_back(0.0);
      for (std::size_t i = 1; i < spec_.waypoints.size(); ++i) {
        const double len = (spec_.waypoints[i] - spec_.waypoints[i - 1]).norm();
        if (len <= 0.0) throw InvalidArgument("polyline path has repeated waypoints");
        cumulative_.push_back(cumulative_.back() + len);
      }
    }
  }

  PathPoint at(double s) const {
    PathPoint p;
    switch (spec_.kind) {
      case PathKind::kWeave: {
        const double w = 2.0 * kPi / spec_.weave_period;
        p.heading = spec_.heading + spec_.weave_amplitude * std::sin(w * s);
        p.curvature = spec_.weave_amplitude * w * std::cos(w * s);
        const int k = std::clamp(static_cast<int>(std::floor(s)), 0, static_cast<int>(table_.size()) - 2);
        p.position = table_[k] + integrate(k, s);
        break;
      }
      case PathKind::kCircle: {
        const double r = spec_.circle_radius;
        p.heading = spec_.heading + s / r;
        p.curvature = 1.0 / r;
        p.position = r * Eigen::Vector2d(std::sin(p.heading) - std::sin(spec_.heading),
                                         -std::cos(p.heading) + std::cos(spec_.heading));
        break;
      }
      case PathKind::kPolyline: {
        std::size_t i = 1;
        while (i + 1 < cumulative_.size() && s > cumulative_[i]) ++i;
        const Eigen::Vector2d a = spec_.waypoints[i - 1];
        const Eigen::Vector2d dir = (spec_.waypoints[i] - a).normalized();
        p.heading = std::atan2(dir.y(), dir.x());
        p.position = a + dir * (s - cumulative_[i - 1]);
        break;
      }
    }
    return p;
  }

 private:
  // Integral of (cos psi, sin psi) over [a, b] by 8-point Gauss-Legendre.
  Eigen::Vector2d integrate(double a, double b) const {
    static constexpr std::array<double, 4> x{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                             0.9602898564975363};
    static constexpr std::array<double, 4> w{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                             0.1012285362903763};
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    const double omega = 2.0 * kPi / spec_.weave_period;
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (int i = 0; i < 4; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double s = mid + sign * half * x[i];
        const double psi = spec_.heading + spec_.weave_amplitude * std::sin(omega * s);
        sum += w[i] * Eigen::Vector2d(std::cos(psi), std::sin(psi));
      }
    }
    return half * sum;
  }

  PathSpec spec_;
  std::vector<Eigen::Vector2d> table_;
  std::vector<double> cumulative_;
};

struct SatTruth {
  Eigen::Vector3d eph_bias = Eigen::Vector3d::Zero();
  Eigen::Vector3d eph_rate = Eigen::Vector3d::Zero();
  double clock_bias = 0.0;
  double clock_rate = 0.0;
  double iono_scale = 1.0;
  double iono_rate = 0.0;
  double mp_code = 0.0;
  double mp_phase = 0.0;
  long long ambiguity = 0;
  bool tracked = false;
  double occluded_for = 0.0;
};

const DropoutWindow* active_dropout(const ScenarioConfig& cfg, double rel_t) {
  for (const auto& d : cfg.dropouts) {
    if (rel_t >= d.start && rel_t < d.start + d.duration) return &d;
  }
  return nullptr;
}

VisibilityStats stats_of(std::vector<int> counts) {
  VisibilityStats s;
  if (counts.empty()) return s;
  std::sort(counts.begin(), counts.end());
  s.min = counts.front();
  s.max = counts.back();
  const std::size_t n = counts.size();
  s.median = n % 2 ? counts[n / 2] : 0.5 * (counts[n / 2 - 1] + counts[n / 2]);
  return s;
}

}  // namespace

ErrorBudget ErrorBudget::zero() {
  ErrorBudget b;
  b.phase_noise_sigma = 0.0;
  b.pseudorange_noise_sigma = 0.0;
  b.doppler_noise_sigma = 0.0;
  b.receiver_clock_random_walk = 0.0;
  b.cycle_slip_rate = 0.0;
  b.multipath_code_sigma = 0.0;
  b.multipath_phase_sigma = 0.0;
  b.apply_iono = false;
  b.apply_tropo = false;
  b.apply_eph_error = false;
  b.eph_error_sigma = 0.0;
  b.eph_error_rate_sigma = 0.0;
  b.sat_clock_error_sigma = 0.0;
  b.sat_clock_error_rate_sigma = 0.0;
  b.iono_scale_sigma = 0.0;
  b.iono_rate_sigma = 0.0;
  b.tropo_scale_sigma = 0.0;
  b.quantize = false;
  return b;
}

void ErrorBudget::validate() const {
  check_sigma(phase_noise_sigma, "phase_noise_sigma");
  check_sigma(pseudorange_noise_sigma, "pseudorange_noise_sigma");
  check_sigma(doppler_noise_sigma, "doppler_noise_sigma");
  check_sigma(receiver_clock_random_walk, "receiver_clock_random_walk");
  check_sigma(cycle_slip_rate, "cycle_slip_rate");
  check_sigma(multipath_code_sigma, "multipath_code_sigma");
  check_sigma(multipath_phase_sigma, "multipath_phase_sigma");
  check_sigma(eph_error_sigma, "eph_error_sigma");
  check_sigma(eph_error_rate_sigma, "eph_error_rate_sigma");
  check_sigma(sat_clock_error_sigma, "sat_clock_error_sigma");
  check_sigma(sat_clock_error_rate_sigma, "sat_clock_error_rate_sigma");
  check_sigma(iono_scale_sigma, "iono_scale_sigma");
  check_sigma(iono_rate_sigma, "iono_rate_sigma");
  check_sigma(tropo_scale_sigma, "tropo_scale_sigma");
  if (!(multipath_tau > 0.0)) throw InvalidArgument("ErrorBudget: multipath_tau must be > 0");
  if (!std::isfinite(receiver_clock_bias) || !std::isfinite(receiver_clock_drift)) {
    throw InvalidArgument("ErrorBudget: non-finite receiver clock");
  }
}

void ScenarioConfig::validate() const {
  if (!(duration > 0.0)) throw InvalidArgument("scenario: duration must be > 0");
  if (!(speed >= 0.0) || !(epoch_rate > 0.0) || !(truth_rate > 0.0)) {
    throw InvalidArgument("scenario: speed, epoch_rate and truth_rate must be positive");
  }
  if (!(mask_angle >= 0.0 && mask_angle < kPi / 2)) throw InvalidArgument("scenario: bad mask angle");
  if (synthetic_sats < 4 || synthetic_sats > 31) throw InvalidArgument("scenario: synthetic_sats must be in [4, 31]");
  if (min_visible < 0 || occlusion_rate < 0.0 || !(occlusion_mean_duration > 0.0)) {
    throw InvalidArgument("scenario: bad occlusion settings");
  }
  for (const auto& d : dropouts) {
    if (d.surviving < 0 || !(d.duration > 0.0)) throw InvalidArgument("scenario: bad dropout window");
  }
  if (path.kind == PathKind::kWeave && !(path.weave_period > 0.0)) throw InvalidArgument("scenario: bad weave period");
  if (path.kind == PathKind::kCircle && !(std::abs(path.circle_radius) > 0.5)) {
    throw InvalidArgument("scenario: circle radius too small");
  }
  const RelPoseNoise& vo = rel_pose;
  for (double v : {vo.scale_error_sigma, vo.translation_sigma, vo.yaw_sigma, vo.tilt_sigma, vo.reported_drift}) {
    if (!(v >= 0.0)) throw InvalidArgument("scenario: rel-pose noise settings must be >= 0");
  }
  extrinsics.validate();
}

KlobucharParams default_klobuchar() {
  KlobucharParams k;
  k.alpha = {1.1176e-08, 7.4506e-09, -5.9605e-08, -5.9605e-08};
  k.beta = {9.0112e+04, 0.0, -1.9661e+05, -6.5536e+04};
  return quantize_for_rinex(k);
}

std::vector<BroadcastEphemeris> synthetic_constellation(const GpsTime& start, const Geodetic& site, int count) {
  double toe_sow = std::round(start.sow() / 7200.0) * 7200.0;
  if (toe_sow >= 604800.0) toe_sow -= 7200.0;
  const GpsTime toe(start.week(), toe_sow);
  const EcefPoint receiver = geodetic_to_ecef(site);
  struct Candidate {
    BroadcastEphemeris eph;
    double elevation;
  };
  std::vector<Candidate> all;
  int prn = 1;
  for (int plane = 0; plane < 6; ++plane) {
    const int slots = plane == 0 ? 6 : 5;
    for (int j = 0; j < slots; ++j, ++prn) {
      BroadcastEphemeris e;
      e.prn = prn;
      e.toe = toe;
      e.toc = toe;
      e.sqrt_a = std::sqrt(26559.7e3 + 1.5e3 * std::sin(prn));
      e.e = 0.002 + 0.0004 * (prn % 9);
      e.i0 = (55.0 + 0.6 * std::cos(1.7 * prn)) * kDeg;
      e.omega = (37.0 * prn) * kDeg;
      const double node_longitude = (plane * 60.0 + 11.0) * kDeg;
      e.omega0 = std::remainder(node_longitude + constants::kEarthRotationRate * toe.sow(), 2.0 * kPi);
      const double arg_latitude = (j * 360.0 / slots + plane * 17.0) * kDeg;
      e.m0 = std::remainder(arg_latitude - e.omega, 2.0 * kPi);
      e.delta_n = 4.5e-9;
      e.omega_dot = -8.1e-9;
      e.idot = 1.0e-10 * ((prn % 5) - 2);
      e.cuc = 1.2e-6 * std::sin(prn);
      e.cus = 6.0e-6 * std::cos(prn);
      e.crc = 220.0 + 10.0 * std::sin(prn);
      e.crs = 25.0 * std::cos(prn);
      e.cic = 8.0e-8 * std::sin(2.0 * prn);
      e.cis = -6.0e-8 * std::cos(2.0 * prn);
      e.af0 = 1.0e-5 * ((prn % 7) - 3);
      e.af1 = 1.0e-12 * ((prn % 5) - 2);
      e.af2 = 0.0;
      e.iode = prn + 10;
      e = quantize_for_rinex(e);
      const SatelliteState s = sat_state(e, start);
      all.push_back({e, azimuth_elevation(receiver, s.position).elevation});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) { return a.elevation > b.elevation; });
  std::vector<BroadcastEphemeris> out;
  for (int i = 0; i < count && i < static_cast<int>(all.size()); ++i) out.push_back(all[i].eph);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.prn < b.prn; });
  return out;
}

VisibilityStats visibility_stats(const std::vector<ObservationEpoch>& epochs) {
  std::vector<int> counts;
  for (const auto& e : epochs) counts.push_back(static_cast<int>(e.sats.size()));
  return stats_of(counts);
}

SimulationResult simulate(const ScenarioConfig& cfg, const ErrorBudget& budget) {
  cfg.validate();
  budget.validate();

  SimulationResult out;
  const GpsTime t0 = cfg.start_time();
  out.frame = EnuFrame(cfg.origin);
  out.nav.ephemerides =
      cfg.constellation.empty() ? synthetic_constellation(t0, cfg.origin, cfg.synthetic_sats) : cfg.constellation;
  out.nav.klobuchar = cfg.klobuchar ? quantize_for_rinex(*cfg.klobuchar) : default_klobuchar();
  const auto& sats = out.nav.ephemerides;
  const std::size_t n_sats = sats.size();

  const double dt = 1.0 / cfg.epoch_rate;
  const int n_epochs = static_cast<int>(std::floor(cfg.duration * cfg.epoch_rate + 1e-9)) + 1;
  const ScenarioPath path(cfg.path, cfg.speed * cfg.duration + 2.0);
  const Eigen::Vector3d lever = cfg.extrinsics.lever_arm;
  out.lever_arm = lever;

  auto vehicle_pose = [&](double rel_t) {
    const PathPoint p = path.at(cfg.speed * rel_t);
    return Pose::from_yaw(p.heading, Eigen::Vector3d(p.position.x(), p.position.y(), 0.0));
  };
  auto vehicle_twist = [&](double rel_t) {
    const PathPoint p = path.at(cfg.speed * rel_t);
    Vector6d w = Vector6d::Zero();
    w[0] = cfg.speed;
    w[5] = cfg.speed * p.curvature;
    return w;
  };
  auto receiver_ecef = [&](double rel_t) { return out.frame.to_ecef(vehicle_pose(rel_t) * lever); };

  auto sys_rng = make_stream(cfg.seed, 1);
  auto noise_rng = make_stream(cfg.seed, 2);
  auto occl_rng = make_stream(cfg.seed, 3);
  auto amb_rng = make_stream(cfg.seed, 4);
  auto vo_rng = make_stream(cfg.seed, 5);
  auto outlier_rng = make_stream(cfg.seed, 6);

  std::vector<SatTruth> truth(n_sats);
  for (auto& s : truth) {
    for (int i = 0; i < 3; ++i) s.eph_bias[i] = normal(sys_rng, budget.eph_error_sigma);
    for (int i = 0; i < 3; ++i) s.eph_rate[i] = normal(sys_rng, budget.eph_error_rate_sigma);
    s.clock_bias = normal(sys_rng, budget.sat_clock_error_sigma);
    s.clock_rate = normal(sys_rng, budget.sat_clock_error_rate_sigma);
    s.iono_scale = 1.0 + normal(sys_rng, budget.iono_scale_sigma);
    s.iono_rate = normal(sys_rng, budget.iono_rate_sigma);
    s.mp_code = normal(sys_rng, budget.multipath_code_sigma);
    s.mp_phase = normal(sys_rng, budget.multipath_phase_sigma);
  }
  const double tropo_scale = 1.0 + normal(sys_rng, budget.tropo_scale_sigma);
  const TropoState tropo_base{cfg.origin.lat, t0.day_of_year(), cfg.origin.height};

  // Deterministic part of the carrier phase range (no ambiguity, multipath or noise).
  struct Geometry {
    EcefPoint sat;
    double range = 0.0;
    AzEl azel;
    double phase_range = 0.0;
    double tropo = 0.0;
    double iono = 0.0;
    double sat_clock = 0.0;  // c * (broadcast clock + residual), m
  };
  auto geometry = [&](std::size_t i, double rel_t, double clock_m) {
    const EcefPoint rx = receiver_ecef(rel_t);
    const GpsTime t = t0 + rel_t;
    const EmissionState em = signal_emission_state(sats[i], t, rx);
    Geometry g;
    g.sat = em.position;
    double sat_clock = em.clock_bias * kSpeedOfLight;
    if (budget.apply_eph_error) {
      g.sat.xyz += truth[i].eph_bias + truth[i].eph_rate * rel_t;
      sat_clock += truth[i].clock_bias + truth[i].clock_rate * rel_t;
    }
    g.sat_clock = sat_clock;
    g.range = (g.sat.xyz - rx.xyz).norm();
    g.azel = azimuth_elevation(rx, g.sat);
    const Eigen::Vector3d rx_enu = out.frame.to_enu(rx);
    if (budget.apply_tropo && g.azel.elevation > 0.06) {
      TropoState ts = tropo_base;
      ts.height += rx_enu.z();
      g.tropo = tropo_scale * tropo_delay(ts, g.azel.elevation);
    }
    if (budget.apply_iono && g.azel.elevation > 0.0) {
      const Geodetic user{cfg.origin.lat, cfg.origin.lon, cfg.origin.height + rx_enu.z()};
      g.iono = truth[i].iono_scale * klobuchar_delay(*out.nav.klobuchar, user, g.azel.azimuth, g.azel.elevation, t) +
               truth[i].iono_rate * rel_t;
    }
    g.phase_range = g.range + clock_m - sat_clock + g.tropo - g.iono;
    return g;
  };

  const double quantum = budget.quantize ? 1e-3 : 0.0;
  auto quantize = [quantum](double v) { return quantum > 0.0 ? round_to(v, quantum) : v; };
  const double gm_phi = std::exp(-dt / budget.multipath_tau);
  const double gm_q = std::sqrt(1.0 - gm_phi * gm_phi);
  const double slip_prob = budget.cycle_slip_rate / 60.0 * dt;
  const double occl_prob = cfg.occlusion_rate * dt;

  double clock_rw = 0.0;
  std::vector<int> counts_outside_dropout;
  const double clock_noise_step = budget.receiver_clock_random_walk * std::sqrt(dt);

  for (int k = 0; k < n_epochs; ++k) {
    const double rel_t = k * dt;
    const GpsTime t = t0 + rel_t;
    if (k > 0) clock_rw += normal(noise_rng, clock_noise_step);
    const double clock_det = budget.receiver_clock_bias + budget.receiver_clock_drift * rel_t;
    const double clock_m = clock_det + clock_rw;

    std::vector<Geometry> geo(n_sats);
    std::vector<bool> candidate(n_sats);
    for (std::size_t i = 0; i < n_sats; ++i) {
      geo[i] = geometry(i, rel_t, clock_m);
      candidate[i] = geo[i].azel.elevation >= cfg.mask_angle;
    }

    // Per-satellite draws happen for every satellite every epoch so that matched
    // seeds share noise regardless of which satellites end up tracked.
    std::vector<double> phase_noise(n_sats), code_noise(n_sats), doppler_noise(n_sats), occl_u(n_sats),
        occl_len(n_sats), slip_u(n_sats);
    std::vector<long long> amb_draw(n_sats), slip_jump(n_sats);
    for (std::size_t i = 0; i < n_sats; ++i) {
      phase_noise[i] = normal(noise_rng, budget.phase_noise_sigma);
      code_noise[i] = normal(noise_rng, budget.pseudorange_noise_sigma);
      doppler_noise[i] = normal(noise_rng, budget.doppler_noise_sigma);
      if (k > 0) {
        truth[i].mp_code = gm_phi * truth[i].mp_code + gm_q * normal(noise_rng, budget.multipath_code_sigma);
        truth[i].mp_phase = gm_phi * truth[i].mp_phase + gm_q * normal(noise_rng, budget.multipath_phase_sigma);
      }
      occl_u[i] = uniform(occl_rng);
      occl_len[i] = -cfg.occlusion_mean_duration * std::log(1.0 - uniform(occl_rng));
      slip_u[i] = uniform(amb_rng);
      amb_draw[i] = budget.random_ambiguity
                        ? std::uniform_int_distribution<long long>(-2'000'000, 2'000'000)(amb_rng)
                        : 0;
      slip_jump[i] = std::uniform_int_distribution<long long>(1, 50)(amb_rng);
    }

    // Occlusion: onsets only while enough satellites remain visible.
    int visible_count = 0;
    for (std::size_t i = 0; i < n_sats; ++i) {
      if (truth[i].occluded_for > 0.0) truth[i].occluded_for -= dt;
      if (candidate[i] && truth[i].occluded_for <= 1e-9) ++visible_count;
    }
    for (std::size_t i = 0; i < n_sats; ++i) {
      if (!candidate[i] || truth[i].occluded_for > 1e-9) continue;
      if (k > 0 && occl_u[i] < occl_prob && visible_count > cfg.min_visible) {
        truth[i].occluded_for = std::max(dt, occl_len[i]);
        --visible_count;
      }
    }
    if (visible_count < cfg.min_visible) {
      std::vector<std::size_t> blocked;
      for (std::size_t i = 0; i < n_sats; ++i) {
        if (candidate[i] && truth[i].occluded_for > 1e-9) blocked.push_back(i);
      }
      std::stable_sort(blocked.begin(), blocked.end(),
                       [&](std::size_t a, std::size_t b) { return geo[a].azel.elevation > geo[b].azel.elevation; });
      for (std::size_t i : blocked) {
        if (visible_count >= cfg.min_visible) break;
        truth[i].occluded_for = 0.0;
        ++visible_count;
      }
    }

    std::vector<std::size_t> visible;
    for (std::size_t i = 0; i < n_sats; ++i) {
      if (candidate[i] && truth[i].occluded_for <= 1e-9) visible.push_back(i);
    }
    if (const DropoutWindow* d = active_dropout(cfg, rel_t)) {
      std::stable_sort(visible.begin(), visible.end(),
                       [&](std::size_t a, std::size_t b) { return geo[a].azel.elevation > geo[b].azel.elevation; });
      if (static_cast<int>(visible.size()) > d->surviving) visible.resize(d->surviving);
      std::sort(visible.begin(), visible.end());
    } else {
      if (visible.size() < 4) {
        throw InvalidArgument("simulate: only " + std::to_string(visible.size()) + " satellites visible at " +
                              t.to_string());
      }
      counts_outside_dropout.push_back(static_cast<int>(visible.size()));
    }

    std::vector<bool> is_visible(n_sats, false);
    for (std::size_t i : visible) is_visible[i] = true;

    int outlier_index = -1;
    double outlier_magnitude = 0.0;
    for (const auto& o : cfg.outliers) {
      if (std::abs(o.time - rel_t) < 0.5 * dt && !visible.empty()) {
        outlier_index = static_cast<int>(visible[std::uniform_int_distribution<std::size_t>(0, visible.size() - 1)(
            outlier_rng)]);
        outlier_magnitude = o.magnitude;
      }
    }

    ObservationEpoch epoch;
    epoch.t = t;
    for (std::size_t i = 0; i < n_sats; ++i) {
      SatTruth& st = truth[i];
      if (!is_visible[i]) {
        st.tracked = false;
        continue;
      }
      SatObservation obs;
      obs.prn = sats[i].prn;
      if (!st.tracked) {
        st.ambiguity = amb_draw[i];
        obs.lock_lost = k > 0;
        st.tracked = true;
      } else if (slip_u[i] < slip_prob) {
        st.ambiguity += slip_jump[i];
        obs.lock_lost = true;
      }
      const Geometry& g = geo[i];
      double phase_m = g.phase_range + st.mp_phase + phase_noise[i];
      if (static_cast<int>(i) == outlier_index) phase_m += outlier_magnitude;
      obs.phase_cycles = quantize(phase_m / kL1Wavelength + static_cast<double>(st.ambiguity));
      obs.pseudorange = quantize(g.phase_range + 2.0 * g.iono + st.mp_code + code_noise[i]);

      const double h = 1e-3;
      const double clock_plus = clock_det + budget.receiver_clock_drift * h;
      const double clock_minus = clock_det - budget.receiver_clock_drift * h;
      const double rate =
          (geometry(i, rel_t + h, clock_plus).phase_range - geometry(i, rel_t - h, clock_minus).phase_range) /
          (2.0 * h);
      obs.doppler_hz = quantize(-(rate + doppler_noise[i]) / kL1Wavelength);
      obs.snr = quantize(32.0 + 18.0 * std::sin(g.azel.elevation));
      epoch.sats.push_back(obs);
    }
    out.observations.push_back(std::move(epoch));

    StateNode node;
    node.t = t;
    node.pose = vehicle_pose(rel_t);
    node.twist = vehicle_twist(rel_t);
    out.truth_states.push_back(node);
  }
  out.visibility = stats_of(counts_outside_dropout);

  const int n_truth = static_cast<int>(std::floor(cfg.duration * cfg.truth_rate + 1e-9)) + 1;
  for (int j = 0; j < n_truth; ++j) {
    const double rel_t = j / cfg.truth_rate;
    out.truth.push_back({t0 + rel_t, vehicle_pose(rel_t) * lever, 0});
  }

  if (cfg.rel_pose.enabled) {
    const RelPoseNoise& vo = cfg.rel_pose;
    const double scale = 1.0 + normal(vo_rng, vo.scale_error_sigma);
    const auto& nodes = out.truth_states.nodes();
    for (std::size_t k = 1; k < nodes.size(); ++k) {
      const Pose rel = nodes[k - 1].pose.inverse() * nodes[k].pose;
      Eigen::Vector3d dtrans;
      for (int i = 0; i < 3; ++i) dtrans[i] = normal(vo_rng, vo.translation_sigma);
      const Eigen::Vector3d drot(normal(vo_rng, vo.tilt_sigma), normal(vo_rng, vo.tilt_sigma),
                                 normal(vo_rng, vo.yaw_sigma));
      RelPoseMeasurement m;
      m.t_a = nodes[k - 1].t;
      m.t_b = nodes[k].t;
      m.t_ab = Pose(rel.rotation() * so3_exp(drot), rel.translation() * scale + dtrans);
      const double step = rel.translation().norm();
      const double trans_var = vo.translation_sigma * vo.translation_sigma +
                               std::pow(std::max(vo.scale_error_sigma, vo.reported_drift) * step, 2) + 1e-12;
      Vector6d diag;
      diag << trans_var, trans_var, trans_var, vo.tilt_sigma * vo.tilt_sigma + 1e-12,
          vo.tilt_sigma * vo.tilt_sigma + 1e-12, vo.yaw_sigma * vo.yaw_sigma + 1e-12;
      m.covariance = diag.asDiagonal();
      out.rel_pose.push_back(m);
    }
  }
  return out;
}

void write_simulation(const SimulationResult& sim, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  RinexWriteOptions opts;
  if (!sim.truth.empty()) opts.approx_position = sim.frame.to_ecef(sim.truth.front().position).xyz;
  write_rinex_obs(sim.observations, dir / "obs.rnx", opts);
  write_rinex_nav(sim.nav, dir / "nav.rnx");
  const Geodetic origin = sim.frame.origin_geodetic();
  write_ground_truth(sim.truth, dir / "truth.csv", origin);
  write_trajectory(sim.truth_states, sim.lever_arm, dir / "truth_states.csv", origin);
  write_rel_pose(sim.rel_pose, dir / "rel_pose.csv");

  nlohmann::ordered_json j;
  j["epochs"] = sim.observations.size();
  j["satellites"] = sim.nav.ephemerides.size();
  j["visible_min"] = sim.visibility.min;
  j["visible_median"] = sim.visibility.median;
  j["visible_max"] = sim.visibility.max;
  j["rel_pose_measurements"] = sim.rel_pose.size();
  std::ofstream f(dir / "summary.json", std::ios::binary);
  if (!f) throw Error("cannot write " + (dir / "summary.json").string());
  f << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Scenario text format

namespace {

std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_num(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ParseError("scenario: bad number for " + key + ": '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(d)) throw ParseError("scenario: bad number for " + key + ": '" + v + "'");
  return d;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("scenario: bad boolean for " + key + ": '" + v + "'");
}

std::vector<double> parse_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_num(trim_copy(item), key));
  return out;
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
  Scenario s;
  ScenarioConfig& c = s.config;
  ErrorBudget& b = s.budget;
  const std::map<std::string, double*> doubles{
      {"speed", &c.speed},
      {"epoch_rate", &c.epoch_rate},
      {"duration", &c.duration},
      {"truth_rate", &c.truth_rate},
      {"weave_period", &c.path.weave_period},
      {"circle_radius", &c.path.circle_radius},
      {"occlusion_rate", &c.occlusion_rate},
      {"occlusion_mean_duration", &c.occlusion_mean_duration},
      {"origin_height", &c.origin.height},
      {"relpose_scale_sigma", &c.rel_pose.scale_error_sigma},
      {"relpose_translation_sigma", &c.rel_pose.translation_sigma},
      {"relpose_yaw_sigma", &c.rel_pose.yaw_sigma},
      {"relpose_tilt_sigma", &c.rel_pose.tilt_sigma},
      {"relpose_reported_drift", &c.rel_pose.reported_drift},
      {"phase_noise", &b.phase_noise_sigma},
      {"pseudorange_noise", &b.pseudorange_noise_sigma},
      {"doppler_noise", &b.doppler_noise_sigma},
      {"clock_bias", &b.receiver_clock_bias},
      {"clock_drift", &b.receiver_clock_drift},
      {"clock_random_walk", &b.receiver_clock_random_walk},
      {"cycle_slip_rate", &b.cycle_slip_rate},
      {"multipath_code", &b.multipath_code_sigma},
      {"multipath_phase", &b.multipath_phase_sigma},
      {"multipath_tau", &b.multipath_tau},
      {"eph_error", &b.eph_error_sigma},
      {"eph_error_rate", &b.eph_error_rate_sigma},
      {"sat_clock_error", &b.sat_clock_error_sigma},
      {"sat_clock_error_rate", &b.sat_clock_error_rate_sigma},
      {"iono_scale_sigma", &b.iono_scale_sigma},
      {"iono_rate_sigma", &b.iono_rate_sigma},
      {"tropo_scale_sigma", &b.tropo_scale_sigma},
  };
  const std::map<std::string, double*> degrees{
      {"heading_deg", &c.path.heading},
      {"weave_amplitude_deg", &c.path.weave_amplitude},
      {"mask_deg", &c.mask_angle},
      {"origin_lat_deg", &c.origin.lat},
      {"origin_lon_deg", &c.origin.lon},
  };
  const std::map<std::string, bool*> bools{
      {"apply_iono", &b.apply_iono},         {"apply_tropo", &b.apply_tropo},
      {"apply_eph_error", &b.apply_eph_error}, {"random_ambiguity", &b.random_ambiguity},
      {"rel_pose", &c.rel_pose.enabled},      {"quantize", &b.quantize},
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim_copy(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("scenario line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim_copy(line.substr(0, eq));
    const std::string value = trim_copy(line.substr(eq + 1));
    if (auto it = doubles.find(key); it != doubles.end()) {
      *it->second = parse_num(value, key);
    } else if (auto it2 = degrees.find(key); it2 != degrees.end()) {
      *it2->second = parse_num(value, key) * kDeg;
    } else if (auto it3 = bools.find(key); it3 != bools.end()) {
      *it3->second = parse_bool(value, key);
    } else if (key == "seed") {
      const double v = parse_num(value, key);
      if (v < 0 || v != std::floor(v) || v > 9e15) throw ParseError("scenario: seed must be a non-negative integer");
      c.seed = static_cast<std::uint64_t>(v);
    } else if (key == "synthetic_sats" || key == "min_visible") {
      const double v = parse_num(value, key);
      if (v != std::floor(v)) throw ParseError("scenario: " + key + " must be an integer");
      (key == "synthetic_sats" ? c.synthetic_sats : c.min_visible) = static_cast<int>(v);
    } else if (key == "path") {
      if (value == "weave") {
        c.path.kind = PathKind::kWeave;
      } else if (value == "circle") {
        c.path.kind = PathKind::kCircle;
      } else if (value == "polyline") {
        c.path.kind = PathKind::kPolyline;
      } else {
        throw ParseError("scenario: unknown path '" + value + "'");
      }
    } else if (key == "waypoint") {
      const auto v = parse_list(value, key);
      if (v.size() != 2) throw ParseError("scenario: waypoint needs east,north");
      c.path.waypoints.emplace_back(v[0], v[1]);
    } else if (key == "dropout") {
      const auto v = parse_list(value, key);
      if (v.size() != 3) throw ParseError("scenario: dropout needs start,duration,surviving");
      c.dropouts.push_back({v[0], v[1], static_cast<int>(v[2])});
    } else if (key == "outlier") {
      const auto v = parse_list(value, key);
      if (v.size() != 2) throw ParseError("scenario: outlier needs time,magnitude");
      c.outliers.push_back({v[0], v[1]});
    } else if (key == "lever_arm") {
      const auto v = parse_list(value, key);
      if (v.size() != 3) throw ParseError("scenario: lever_arm needs x,y,z");
      c.extrinsics.lever_arm = Eigen::Vector3d(v[0], v[1], v[2]);
    } else if (key == "start") {
      CalendarTime cal;
      if (std::sscanf(value.c_str(), "%d-%d-%dT%d:%d:%lf", &cal.year, &cal.month, &cal.day, &cal.hour, &cal.minute,
                      &cal.second) != 6) {
        throw ParseError("scenario: start must be YYYY-MM-DDTHH:MM:SS (GPS time)");
      }
      c.start = cal;
    } else if (key == "error_budget") {
      if (value == "zero") {
        b = ErrorBudget::zero();
      } else if (value != "default") {
        throw ParseError("scenario: error_budget must be default or zero");
      }
    } else {
      throw ParseError("scenario line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  try {
    c.validate();
    b.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
  return s;
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_scenario(in);
}

std::string format_scenario(const Scenario& s) {
  const ScenarioConfig& c = s.config;
  const ErrorBudget& b = s.budget;
  std::ostringstream o;
  const char* kinds[] = {"weave", "circle", "polyline"};
  o << "seed = " << c.seed << "\n";
  o << "duration = " << num(c.duration) << "\n";
  o << "speed = " << num(c.speed) << "\n";
  o << "epoch_rate = " << num(c.epoch_rate) << "\n";
  o << "truth_rate = " << num(c.truth_rate) << "\n";
  o << "path = " << kinds[static_cast<int>(c.path.kind)] << "\n";
  o << "heading_deg = " << num(c.path.heading / kDeg) << "\n";
  o << "weave_amplitude_deg = " << num(c.path.weave_amplitude / kDeg) << "\n";
  o << "weave_period = " << num(c.path.weave_period) << "\n";
  o << "circle_radius = " << num(c.path.circle_radius) << "\n";
  for (const auto& w : c.path.waypoints) o << "waypoint = " << num(w.x()) << "," << num(w.y()) << "\n";
  o << "origin_lat_deg = " << num(c.origin.lat / kDeg) << "\n";
  o << "origin_lon_deg = " << num(c.origin.lon / kDeg) << "\n";
  o << "origin_height = " << num(c.origin.height) << "\n";
  char start[64];
  std::snprintf(start, sizeof(start), "%04d-%02d-%02dT%02d:%02d:%06.3f", c.start.year, c.start.month, c.start.day,
                c.start.hour, c.start.minute, c.start.second);
  o << "start = " << start << "\n";
  const auto& l = c.extrinsics.lever_arm;
  o << "lever_arm = " << num(l.x()) << "," << num(l.y()) << "," << num(l.z()) << "\n";
  o << "synthetic_sats = " << c.synthetic_sats << "\n";
  o << "mask_deg = " << num(c.mask_angle / kDeg) << "\n";
  o << "occlusion_rate = " << num(c.occlusion_rate) << "\n";
  o << "occlusion_mean_duration = " << num(c.occlusion_mean_duration) << "\n";
  o << "min_visible = " << c.min_visible << "\n";
  for (const auto& d : c.dropouts) o << "dropout = " << num(d.start) << "," << num(d.duration) << "," << d.surviving << "\n";
  for (const auto& x : c.outliers) o << "outlier = " << num(x.time) << "," << num(x.magnitude) << "\n";
  o << "rel_pose = " << (c.rel_pose.enabled ? "true" : "false") << "\n";
  o << "relpose_scale_sigma = " << num(c.rel_pose.scale_error_sigma) << "\n";
  o << "relpose_translation_sigma = " << num(c.rel_pose.translation_sigma) << "\n";
  o << "relpose_yaw_sigma = " << num(c.rel_pose.yaw_sigma) << "\n";
  o << "relpose_tilt_sigma = " << num(c.rel_pose.tilt_sigma) << "\n";
  o << "relpose_reported_drift = " << num(c.rel_pose.reported_drift) << "\n";
  o << "phase_noise = " << num(b.phase_noise_sigma) << "\n";
  o << "pseudorange_noise = " << num(b.pseudorange_noise_sigma) << "\n";
  o << "doppler_noise = " << num(b.doppler_noise_sigma) << "\n";
  o << "clock_bias = " << num(b.receiver_clock_bias) << "\n";
  o << "clock_drift = " << num(b.receiver_clock_drift) << "\n";
  o << "clock_random_walk = " << num(b.receiver_clock_random_walk) << "\n";
  o << "random_ambiguity = " << (b.random_ambiguity ? "true" : "false") << "\n";
  o << "cycle_slip_rate = " << num(b.cycle_slip_rate) << "\n";
  o << "multipath_code = " << num(b.multipath_code_sigma) << "\n";
  o << "multipath_phase = " << num(b.multipath_phase_sigma) << "\n";
  o << "multipath_tau = " << num(b.multipath_tau) << "\n";
  o << "apply_iono = " << (b.apply_iono ? "true" : "false") << "\n";
  o << "apply_tropo = " << (b.apply_tropo ? "true" : "false") << "\n";
  o << "apply_eph_error = " << (b.apply_eph_error ? "true" : "false") << "\n";
  o << "eph_error = " << num(b.eph_error_sigma) << "\n";
  o << "eph_error_rate = " << num(b.eph_error_rate_sigma) << "\n";
  o << "sat_clock_error = " << num(b.sat_clock_error_sigma) << "\n";
  o << "sat_clock_error_rate = " << num(b.sat_clock_error_rate_sigma) << "\n";
  o << "iono_scale_sigma = " << num(b.iono_scale_sigma) << "\n";
  o << "iono_rate_sigma = " << num(b.iono_rate_sigma) << "\n";
  o << "tropo_scale_sigma = " << num(b.tropo_scale_sigma) << "\n";
  o << "quantize = " << (b.quantize ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace tdcp
