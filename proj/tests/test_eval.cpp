#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include <doctest.h>
#include <Eigen/Dense>

#include "tdcp/baselines.hpp"
#include "tdcp/error.hpp"
#include "tdcp/eval.hpp"
#include "tdcp/experiment.hpp"
#include "tdcp/simulator.hpp"
#include "test_util.hpp"

using namespace tdcp;
using namespace tdcp::test;

namespace {

// Truth sampled at the epoch times so that the estimate interpolates exactly.
const SimulationResult& weave_sim() {
  static const SimulationResult sim = [] {
    ScenarioConfig cfg;
    cfg.truth_rate = 1.0;
    return simulate(cfg, ErrorBudget::zero());
  }();
  return sim;
}

EstimateTrack truth_track(const SimulationResult& sim) { return {sim.truth_states, sim.lever_arm}; }

Trajectory map_positions(const Trajectory& traj, const std::function<Eigen::Vector3d(std::size_t, const Eigen::Vector3d&)>& f) {
  Trajectory out;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    StateNode n = traj[i];
    n.pose = Pose(n.pose.rotation(), f(i, n.pose.translation()));
    out.push_back(n);
  }
  return out;
}

std::vector<Eigen::Vector3d> random_cloud(std::mt19937_64& rng, int n) {
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < n; ++i) pts.push_back(random_vec(rng, 20.0));
  return pts;
}

double yaw_of(const Eigen::Matrix3d& r) { return std::atan2(r(1, 0), r(0, 0)); }

DriftOptions one_section() {
  DriftOptions o;
  o.sections = 1;
  return o;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("alignment of identical points is the identity") {
    std::mt19937_64 rng(41);
    const auto pts = random_cloud(rng, 30);
    for (AlignmentMode mode : {AlignmentMode::kRigid, AlignmentMode::kHeading}) {
      const Alignment a = align_points(pts, pts, mode);
      CHECK((a.transform.matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-12);
      CHECK(a.rmse_after < 1e-12);
    }
    CHECK_THROWS_AS(align_points({pts[0], pts[1]}, {pts[0], pts[1]}), InvalidArgument);
  }

  TEST_CASE("alignment recovers a 10 degree rotation") {
    std::mt19937_64 rng(42);
    const auto est = random_cloud(rng, 30);
    const Pose t = Pose::from_yaw(10.0 * M_PI / 180.0, Eigen::Vector3d(3.0, -2.0, 0.5));
    std::vector<Eigen::Vector3d> truth;
    for (const auto& p : est) truth.push_back(t * p);
    for (AlignmentMode mode : {AlignmentMode::kRigid, AlignmentMode::kHeading}) {
      const Alignment a = align_points(est, truth, mode);
      CHECK(std::abs(yaw_of(a.transform.rotation()) - 10.0 * M_PI / 180.0) < 1e-6);
      CHECK(rot_angle_between(a.transform.rotation(), t.rotation()) < 1e-6);
      CHECK(a.rmse_after < 1e-9);
      CHECK(a.rmse_before > 1.0);
    }
  }

  TEST_CASE("alignment never increases the RMSE") {
    std::mt19937_64 rng(43);
    for (int i = 0; i < 200; ++i) {
      const auto est = random_cloud(rng, 12);
      std::vector<Eigen::Vector3d> truth;
      const Pose t = random_pose(rng, 5.0, 0.5);
      for (const auto& p : est) truth.push_back(t * p + random_vec(rng, 0.5));
      for (AlignmentMode mode : {AlignmentMode::kRigid, AlignmentMode::kHeading}) {
        const Alignment a = align_points(est, truth, mode);
        CHECK(a.rmse_after <= a.rmse_before + 1e-12);
      }
    }
  }

  TEST_CASE("collinear spans fall back to position and heading") {
    std::vector<Eigen::Vector3d> est, truth;
    for (int i = 0; i < 10; ++i) {
      est.emplace_back(i, 0.0, 0.0);
      truth.emplace_back(5.0, 2.0 + i, 0.0);
    }
    const Alignment a = align_points(est, truth);
    CHECK(a.fallback);
    CHECK(a.rmse_after < 1e-9);
  }

  TEST_CASE("drift of the truth itself is zero") {
    const SimulationResult& sim = weave_sim();
    DriftOptions opts;
    opts.sections = 4;
    const DriftReport r = drift_metrics(truth_track(sim), sim.truth, opts);
    REQUIRE(r.sections.size() == 4);
    for (const SectionResult& s : r.sections) {
      for (double e : s.error) CHECK(e < 1e-6);
    }
    CHECK(r.mean_error_50 < 1e-6);
  }

  TEST_CASE("a step offset after the alignment span shows as a flat error") {
    const SimulationResult& sim = weave_sim();
    const GpsTime t0 = sim.truth_states[0].t;
    // At 1 m/s the 10 m alignment span ends at about 10 s.
    const Trajectory shifted = map_positions(sim.truth_states, [&](std::size_t i, const Eigen::Vector3d& p) {
      return sim.truth_states[i].t - t0 > 12.0 ? Eigen::Vector3d(p + Eigen::Vector3d(0.3, 0.0, 0.0)) : p;
    });
    const SectionResult s = section_drift({shifted, sim.lever_arm}, sim.truth, arc_length(sim.truth), 0.0, one_section());
    CHECK(s.error_25 == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(s.error_50 == doctest::Approx(0.3).epsilon(1e-6));
  }

  TEST_CASE("section error grows with the scale error") {
    const SimulationResult& sim = weave_sim();
    const Eigen::Vector3d origin = sim.truth_states[0].pose.translation();
    double prev = -1.0;
    for (double k : {0.0, 0.002, 0.01, 0.05}) {
      const Trajectory scaled = map_positions(sim.truth_states, [&](std::size_t, const Eigen::Vector3d& p) {
        return Eigen::Vector3d(origin + (1.0 + k) * (p - origin));
      });
      DriftOptions opts;
      opts.sections = 3;
      const DriftReport r = drift_metrics({scaled, sim.lever_arm}, sim.truth, opts);
      CHECK(r.mean_error_50 > prev);
      prev = r.mean_error_50;
    }
  }

  TEST_CASE("drift metrics are invariant to a rigid transform of the estimate") {
    const SimulationResult sim = simulate(ScenarioConfig{}, ErrorBudget{});
    const AlgorithmOutput out = run_algorithm(Algorithm::kDoppler, sim, GraphConfig{});
    const EstimateTrack track = to_truth_frame(out, sim);
    std::mt19937_64 rng(44);
    DriftOptions opts;
    opts.sections = 4;
    const DriftReport a = drift_metrics(track, sim.truth, opts);
    const EstimateTrack moved{transform_trajectory(track.trajectory, random_pose(rng, 100.0, 1.0)), track.lever_arm};
    const DriftReport b = drift_metrics(moved, sim.truth, opts);
    for (std::size_t i = 0; i < a.sections.size(); ++i) {
      REQUIRE(a.sections[i].error.size() == b.sections[i].error.size());
      for (std::size_t j = 0; j < a.sections[i].error.size(); ++j) {
        CHECK(std::abs(a.sections[i].error[j] - b.sections[i].error[j]) < 1e-9);
      }
    }
  }

  TEST_CASE("linear fit coefficient of determination") {
    CHECK(linear_r2({0, 1, 2, 3}, {1, 3, 5, 7}) == doctest::Approx(1.0));
    CHECK(linear_r2({0, 1, 2}, {2, 2, 2}) == 1.0);
    CHECK(linear_r2({0, 1, 2, 3}, {0, 1, 0, 1}) == doctest::Approx(0.2));
  }

  TEST_CASE("final and interval errors") {
    const SimulationResult& sim = weave_sim();
    const EstimateTrack exact = truth_track(sim);
    CHECK(final_error(exact, sim.truth) < 1e-9);
    const Trajectory offset = map_positions(sim.truth_states, [](std::size_t, const Eigen::Vector3d& p) {
      return Eigen::Vector3d(p + Eigen::Vector3d(4.0, -3.0, 1.0));
    });
    CHECK(final_error({offset, sim.lever_arm}, sim.truth) < 1e-9);
    const GpsTime t0 = sim.truth_states[0].t;
    const Trajectory late = map_positions(sim.truth_states, [&](std::size_t i, const Eigen::Vector3d& p) {
      return sim.truth_states[i].t - t0 > 100.0 ? Eigen::Vector3d(p + Eigen::Vector3d(0.0, 0.5, 0.0)) : p;
    });
    CHECK(final_error({late, sim.lever_arm}, sim.truth) == doctest::Approx(0.5));
    CHECK(interval_error({late, sim.lever_arm}, sim.truth, t0 + 95.0, t0 + 110.0) == doctest::Approx(0.5));
    CHECK(interval_error({late, sim.lever_arm}, sim.truth, t0 + 120.0, t0 + 140.0) < 1e-9);
    CHECK_THROWS_AS(interval_error(exact, sim.truth, t0 - 50.0, t0 + 10.0), InvalidArgument);
  }

  TEST_CASE("pseudorange fix with zero noise") {
    const SimulationResult& sim = weave_sim();
    PseudorangeOptions opts;
    opts.use_iono = false;
    opts.use_tropo = false;
    for (std::size_t k = 0; k < sim.observations.size(); k += 50) {
      const PseudorangeFix fix = pseudorange_fix(sim.observations[k], sim.nav, opts);
      const EcefPoint truth = sim.frame.to_ecef(sim.truth_states[k].pose * sim.lever_arm);
      CHECK((fix.position.xyz - truth.xyz).norm() < 1e-3);
      CHECK(fix.satellites == static_cast<int>(sim.observations[k].sats.size()));
    }
    ObservationEpoch few = sim.observations[0];
    few.sats.resize(3);
    CHECK_THROWS_AS(pseudorange_fix(few, sim.nav, opts), Error);
  }

  TEST_CASE("Doppler odometry is exact for constant velocity") {
    ScenarioConfig cfg;
    cfg.duration = 60.0;
    cfg.path.weave_amplitude = 0.0;
    const SimulationResult sim = simulate(cfg, ErrorBudget::zero());
    PseudorangeOptions opts;
    opts.use_iono = false;
    opts.use_tropo = false;
    const DopplerTrack d = doppler_odometry(sim.observations, sim.nav, sim.frame, opts);
    REQUIRE(d.trajectory.size() == sim.observations.size());
    const Eigen::Vector3d start = d.trajectory[0].pose.translation();
    const Eigen::Vector3d truth_start = sim.truth_states[0].pose * sim.lever_arm;
    for (std::size_t k = 0; k < d.trajectory.size(); k += 10) {
      const Eigen::Vector3d est = d.trajectory[k].pose.translation() - start;
      const Eigen::Vector3d truth = sim.truth_states[k].pose * sim.lever_arm - truth_start;
      CHECK((est - truth).norm() < 1e-3);
    }
  }

  TEST_CASE("Doppler odometry of a stationary receiver stays put") {
    ScenarioConfig cfg;
    cfg.duration = 60.0;
    cfg.speed = 0.0;
    const SimulationResult sim = simulate(cfg, ErrorBudget{});
    const DopplerTrack d = doppler_odometry(sim.observations, sim.nav);
    const Eigen::Vector3d drift = d.trajectory[d.trajectory.size() - 1].pose.translation() - d.trajectory[0].pose.translation();
    CHECK(drift.head<2>().norm() < 0.5);
  }

  TEST_CASE("suite files") {
    std::istringstream in(
        "seeds = 2\n"
        "sections = 3\n"
        "alignment = heading\n"
        "algorithms = tdcp, doppler\n"
        "duration = 80\n"
        "[nominal]\n"
        "[dropout]\n"
        "dropout = 40, 10, 0\n");
    const SuiteConfig s = parse_suite(in);
    CHECK(s.seeds == 2);
    CHECK(s.drift.sections == 3);
    CHECK(s.drift.alignment == AlignmentMode::kHeading);
    REQUIRE(s.algorithms.size() == 2);
    CHECK(s.algorithms[1] == Algorithm::kDoppler);
    REQUIRE(s.variants.size() == 2);
    CHECK(s.variants[0].name == "nominal");
    CHECK(s.variants[0].scenario.config.duration == 80.0);
    CHECK(s.variants[0].scenario.config.dropouts.empty());
    CHECK(s.variants[1].scenario.config.dropouts.size() == 1);

    std::istringstream bad_alg("algorithms = kalman\n");
    CHECK_THROWS_AS(parse_suite(bad_alg), ParseError);
    std::istringstream late_key("[a]\nseeds = 3\n");
    CHECK_THROWS_AS(parse_suite(late_key), ParseError);
    CHECK(parse_algorithm(to_string(Algorithm::kTdcpDense)) == Algorithm::kTdcpDense);
  }

  TEST_CASE("suite results do not depend on the thread count") {
    std::istringstream in(
        "seeds = 2\n"
        "sections = 2\n"
        "section_length = 20\n"
        "algorithms = tdcp, doppler, pseudorange\n"
        "duration = 60\n");
    SuiteConfig s = parse_suite(in);
    s.threads = 1;
    const auto a = run_suite(s);
    s.threads = 4;
    const auto b = run_suite(s);
    REQUIRE(a.size() == 6);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].ok);
      CHECK(a[i].seed == b[i].seed);
      CHECK(a[i].algorithm == b[i].algorithm);
      CHECK(a[i].final_error == b[i].final_error);
      CHECK(a[i].drift.mean_error_50 == b[i].drift.mean_error_50);
    }
  }
}
