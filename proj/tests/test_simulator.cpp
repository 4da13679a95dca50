#include <algorithm>
#include <cmath>
#include <sstream>

#include <doctest.h>
#include <Eigen/Dense>

#include "tdcp/constants.hpp"
#include "tdcp/error.hpp"
#include "tdcp/rinex.hpp"
#include "tdcp/simulator.hpp"

using namespace tdcp;

namespace {

struct Decomposed {
  double phase_range = 0.0;  ///< lambda * cycles + c * sat clock
  double range = 0.0;        ///< brute-force geometric range from truth
};

// Receiver ECEF position at an epoch, from the truth vehicle state and the lever arm.
EcefPoint receiver_at(const SimulationResult& sim, std::size_t k) {
  const StateNode& n = sim.truth_states[k];
  return sim.frame.to_ecef(n.pose * sim.lever_arm);
}

Decomposed decompose(const SimulationResult& sim, std::size_t k, int prn) {
  const ObservationEpoch& ep = sim.observations[k];
  const SatObservation* s = ep.find(prn);
  const BroadcastEphemeris* e = sim.nav.select(prn, ep.t);
  const EcefPoint rx = receiver_at(sim, k);
  const EmissionState em = signal_emission_state(*e, ep.t, rx);
  Decomposed d;
  d.phase_range = constants::kL1Wavelength * s->phase_cycles + constants::kSpeedOfLight * em.clock_bias;
  d.range = (em.position.xyz - rx.xyz).norm();
  return d;
}

// Largest |phase DD - range DD| over all epoch pairs (0, k) and satellites common to both.
double worst_dd_residual(const SimulationResult& sim) {
  double worst = 0.0;
  for (std::size_t k = 1; k < sim.observations.size(); ++k) {
    const int ref = sim.observations[0].sats.front().prn;
    if (!sim.observations[k].find(ref)) continue;
    const Decomposed ra = decompose(sim, 0, ref), rb = decompose(sim, k, ref);
    for (const SatObservation& s : sim.observations[0].sats) {
      if (s.prn == ref || !sim.observations[k].find(s.prn)) continue;
      const Decomposed oa = decompose(sim, 0, s.prn), ob = decompose(sim, k, s.prn);
      const double phi_dd = (ob.phase_range - oa.phase_range) - (rb.phase_range - ra.phase_range);
      const double rho_dd = (ob.range - oa.range) - (rb.range - ra.range);
      worst = std::max(worst, std::abs(phi_dd - rho_dd));
    }
  }
  return worst;
}

ScenarioConfig short_config(double duration = 30.0) {
  ScenarioConfig cfg;
  cfg.duration = duration;
  return cfg;
}

std::string obs_text(const SimulationResult& sim) {
  std::stringstream ss;
  write_rinex_obs(sim.observations, ss);
  write_rinex_nav(sim.nav, ss);
  return ss.str();
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("zero budget, static receiver: phase double differences equal range double differences") {
    ScenarioConfig cfg = short_config();
    cfg.speed = 0.0;
    ErrorBudget b = ErrorBudget::zero();
    b.random_ambiguity = false;
    const SimulationResult sim = simulate(cfg, b);
    CHECK(worst_dd_residual(sim) < 1e-9);
  }

  TEST_CASE("zero budget, moving receiver: residual at true states below a micrometre") {
    const SimulationResult sim = simulate(short_config(), ErrorBudget::zero());
    CHECK(worst_dd_residual(sim) < 1e-6);
  }

  TEST_CASE("default budget leaves centimetre-level double-difference residuals") {
    const SimulationResult sim = simulate(short_config(), ErrorBudget{});
    const double w = worst_dd_residual(sim);
    CHECK(w > 1e-3);
    CHECK(w < 1.0);
  }

  TEST_CASE("ambiguities cancel in time differences") {
    ErrorBudget with = ErrorBudget::zero(), without = ErrorBudget::zero();
    with.random_ambiguity = true;
    without.random_ambiguity = false;
    const SimulationResult a = simulate(short_config(), with);
    const SimulationResult b = simulate(short_config(), without);
    REQUIRE(a.observations.size() == b.observations.size());
    bool any_ambiguity = false;
    for (std::size_t k = 1; k < a.observations.size(); ++k) {
      for (const SatObservation& s : a.observations[0].sats) {
        const SatObservation* a1 = a.observations[k].find(s.prn);
        const SatObservation* b0 = b.observations[0].find(s.prn);
        const SatObservation* b1 = b.observations[k].find(s.prn);
        if (!a1 || !b0 || !b1) continue;
        any_ambiguity |= std::abs(s.phase_cycles - b0->phase_cycles) > 0.5;
        const double da = a1->phase_cycles - s.phase_cycles;
        const double db = b1->phase_cycles - b0->phase_cycles;
        CHECK(std::abs(da - db) < 1e-6);
      }
    }
    CHECK(any_ambiguity);
  }

  TEST_CASE("same seed gives identical output, different seed differs") {
    const ScenarioConfig cfg = short_config();
    const std::string a = obs_text(simulate(cfg, ErrorBudget{}));
    const std::string b = obs_text(simulate(cfg, ErrorBudget{}));
    CHECK(a == b);
    ScenarioConfig other = cfg;
    other.seed = 2;
    CHECK(obs_text(simulate(other, ErrorBudget{})) != a);
  }

  TEST_CASE("default scenario visibility") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      ScenarioConfig cfg;
      cfg.seed = seed;
      const SimulationResult sim = simulate(cfg, ErrorBudget{});
      CHECK(sim.visibility.median == doctest::Approx(7.0).epsilon(0.15));
      CHECK(sim.visibility.min >= 4);
      CHECK(sim.visibility.max <= 9);
    }
  }

  TEST_CASE("dropout windows restrict the visible set and break lock") {
    ScenarioConfig cfg = short_config(60.0);
    cfg.dropouts.push_back({20.0, 10.0, 2});
    const SimulationResult sim = simulate(cfg, ErrorBudget{});
    const GpsTime t0 = cfg.start_time();
    bool saw_relock = false;
    for (std::size_t k = 0; k < sim.observations.size(); ++k) {
      const double rel = sim.observations[k].t - t0;
      if (rel >= 20.0 && rel < 30.0) CHECK(sim.observations[k].sats.size() == 2);
      if (rel >= 30.0 && rel < 31.0) {
        for (const SatObservation& s : sim.observations[k].sats) {
          if (!sim.observations[k - 1].find(s.prn)) {
            CHECK(s.lock_lost);
            saw_relock = true;
          }
        }
      }
    }
    CHECK(saw_relock);

    ScenarioConfig full = short_config(60.0);
    full.dropouts.push_back({20.0, 10.0, 0});
    const SimulationResult blank = simulate(full, ErrorBudget{});
    for (const ObservationEpoch& e : blank.observations) {
      const double rel = e.t - t0;
      if (rel >= 20.0 && rel < 30.0) CHECK(e.sats.empty());
    }
  }

  TEST_CASE("cycle slips set the loss-of-lock flag") {
    ErrorBudget b;
    b.cycle_slip_rate = 0.0;
    const SimulationResult clean = simulate(short_config(60.0), b);
    for (std::size_t k = 1; k < clean.observations.size(); ++k) {
      for (const SatObservation& s : clean.observations[k].sats) {
        if (clean.observations[k - 1].find(s.prn)) CHECK_FALSE(s.lock_lost);
      }
    }
    b.cycle_slip_rate = 2.0;
    const SimulationResult slipped = simulate(short_config(60.0), b);
    int flags = 0;
    for (const ObservationEpoch& e : slipped.observations) {
      for (const SatObservation& s : e.sats) flags += s.lock_lost;
    }
    CHECK(flags > 5);
  }

  TEST_CASE("rel-pose measurements link consecutive epochs") {
    const SimulationResult sim = simulate(short_config(), ErrorBudget{});
    REQUIRE(sim.rel_pose.size() + 1 == sim.observations.size());
    for (std::size_t i = 0; i < sim.rel_pose.size(); ++i) {
      const RelPoseMeasurement& m = sim.rel_pose[i];
      CHECK_NOTHROW(m.validate());
      const Pose truth = sim.truth_states[i].pose.inverse() * sim.truth_states[i + 1].pose;
      CHECK((m.t_ab.translation() - truth.translation()).norm() < 0.1);
    }
  }

  TEST_CASE("scenario text round trip") {
    Scenario s;
    s.config.speed = 1.5;
    s.config.duration = 123.0;
    s.config.seed = 42;
    s.config.path.weave_period = 40.0;
    s.config.dropouts.push_back({110.0, 15.0, 2});
    s.config.outliers.push_back({30.0, 5.0});
    s.budget.phase_noise_sigma = 0.003;
    s.budget.apply_iono = false;
    const std::string text = format_scenario(s);
    std::istringstream in(text);
    const Scenario back = parse_scenario(in);
    CHECK(format_scenario(back) == text);
    CHECK(back.config.seed == 42);
    CHECK(back.config.dropouts.size() == 1);
    CHECK(back.config.dropouts[0].surviving == 2);
    CHECK_FALSE(back.budget.apply_iono);

    std::istringstream bad("speed = fast\n");
    CHECK_THROWS_AS(parse_scenario(bad), ParseError);
    std::istringstream unknown("colour = red\n");
    CHECK_THROWS_AS(parse_scenario(unknown), ParseError);
  }

  TEST_CASE("invalid configurations are rejected") {
    ScenarioConfig cfg = short_config();
    cfg.duration = -1.0;
    CHECK_THROWS_AS(simulate(cfg, ErrorBudget{}), InvalidArgument);
    ErrorBudget b;
    b.phase_noise_sigma = -0.1;
    CHECK_THROWS_AS(simulate(short_config(), b), InvalidArgument);
    ScenarioConfig few = short_config();
    few.synthetic_sats = 3;
    CHECK_THROWS_AS(simulate(few, ErrorBudget{}), InvalidArgument);
  }
}
