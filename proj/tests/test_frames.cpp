#include <cmath>
#include <random>

#include <doctest.h>
#include <Eigen/Dense>

#include "tdcp/constants.hpp"
#include "tdcp/error.hpp"
#include "tdcp/frames.hpp"
#include "tdcp/gps_time.hpp"

using namespace tdcp;
using constants::kPi;

namespace {

// Closed-form ECEF -> geodetic (Heikkinen), independent of the iterative inverse.
Geodetic heikkinen(const Eigen::Vector3d& p) {
  const double a = constants::kWgs84A, b = constants::kWgs84B, e2 = constants::kWgs84E2;
  const double ep2 = (a * a - b * b) / (b * b);
  const double r = std::hypot(p.x(), p.y());
  const double z = p.z();
  const double f = 54.0 * b * b * z * z;
  const double g = r * r + (1.0 - e2) * z * z - e2 * (a * a - b * b);
  const double c = e2 * e2 * f * r * r / (g * g * g);
  const double s = std::cbrt(1.0 + c + std::sqrt(c * c + 2.0 * c));
  const double k = s + 1.0 + 1.0 / s;
  const double pp = f / (3.0 * k * k * g * g);
  const double q = std::sqrt(1.0 + 2.0 * e2 * e2 * pp);
  const double r0 = -pp * e2 * r / (1.0 + q) +
                    std::sqrt(0.5 * a * a * (1.0 + 1.0 / q) - pp * (1.0 - e2) * z * z / (q * (1.0 + q)) - 0.5 * pp * r * r);
  const double u = std::hypot(r - e2 * r0, z);
  const double v = std::sqrt((r - e2 * r0) * (r - e2 * r0) + (1.0 - e2) * z * z);
  const double z0 = b * b * z / (a * v);
  return {std::atan((z + ep2 * z0) / r), std::atan2(p.y(), p.x()), u * (1.0 - b * b / (a * v))};
}

}  // namespace

TEST_SUITE("frames") {
  TEST_CASE("geodetic_to_ecef reference points") {
    const EcefPoint eq = geodetic_to_ecef({0.0, 0.0, 0.0});
    CHECK(eq.x() == doctest::Approx(6378137.0).epsilon(1e-15));
    CHECK(std::abs(eq.y()) < 1e-9);
    CHECK(std::abs(eq.z()) < 1e-9);

    const EcefPoint pole = geodetic_to_ecef({kPi / 2.0, 1.234, 0.0});
    CHECK(std::hypot(pole.x(), pole.y()) < 1e-6);
    CHECK(pole.z() == doctest::Approx(constants::kWgs84B).epsilon(1e-12));
  }

  TEST_CASE("ecef_to_geodetic reference points") {
    const Geodetic g = ecef_to_geodetic(EcefPoint(6378137.0, 0.0, 0.0));
    CHECK(std::abs(g.lat) < 1e-12);
    CHECK(std::abs(g.lon) < 1e-12);
    CHECK(std::abs(g.height) < 1e-6);

    const Geodetic in{0.76, -1.38, 150.0};
    const Geodetic out = ecef_to_geodetic(geodetic_to_ecef(in));
    CHECK(out.lat == doctest::Approx(in.lat).epsilon(1e-12));
    CHECK(out.lon == doctest::Approx(in.lon).epsilon(1e-12));
    CHECK(out.height == doctest::Approx(150.0).epsilon(1e-9));

    const Geodetic high = ecef_to_geodetic(geodetic_to_ecef({0.3, 2.0, 2.02e7}));
    CHECK(high.height == doctest::Approx(2.02e7).epsilon(1e-12));
  }

  TEST_CASE("ecef_to_geodetic agrees with the closed-form inverse") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lat(-1.5, 1.5), lon(-kPi, kPi), h(-100.0, 3e7);
    for (int i = 0; i < 2000; ++i) {
      const EcefPoint p = geodetic_to_ecef({lat(rng), lon(rng), h(rng)});
      const Geodetic a = ecef_to_geodetic(p);
      const Geodetic b = heikkinen(p.xyz);
      REQUIRE(a.lat == doctest::Approx(b.lat).epsilon(1e-10));
      REQUIRE(a.height == doctest::Approx(b.height).epsilon(1e-9).scale(1.0));
    }
  }

  TEST_CASE("geodetic round trip below a micrometre over 10^4 samples") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lat(-kPi / 2.0, kPi / 2.0), lon(-kPi, kPi), h(-100.0, 3e7);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const EcefPoint p = geodetic_to_ecef({lat(rng), lon(rng), h(rng)});
      const EcefPoint q = geodetic_to_ecef(ecef_to_geodetic(p));
      worst = std::max(worst, (p.xyz - q.xyz).norm());
    }
    CHECK(worst < 1e-6);
  }

  TEST_CASE("ecef_to_geodetic rejects points near the geocentre") {
    CHECK_THROWS_AS(ecef_to_geodetic(EcefPoint(1000.0, 0.0, 0.0)), InvalidArgument);
  }

  TEST_CASE("ENU origin and a point 100 m north") {
    const Geodetic origin{43.782 * kPi / 180.0, -79.466 * kPi / 180.0, 150.0};
    const EnuFrame frame(origin);
    CHECK(frame.to_enu(frame.origin_ecef()).norm() < 1e-9);

    // Meridian radius of curvature gives the latitude step for 100 m of arc.
    const double s = std::sin(origin.lat);
    const double m = constants::kWgs84A * (1.0 - constants::kWgs84E2) /
                     std::pow(1.0 - constants::kWgs84E2 * s * s, 1.5);
    const Eigen::Vector3d north = frame.to_enu(geodetic_to_ecef({origin.lat + 100.0 / m, origin.lon, origin.height}));
    CHECK(std::abs(north.x()) < 0.01);
    CHECK(std::abs(north.y() - 100.0) < 0.01);
    CHECK(std::abs(north.z()) < 0.01);
  }

  TEST_CASE("ENU conversion is an isometry with a proper rotation") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lat(-1.5, 1.5), lon(-kPi, kPi), d(-5e4, 5e4);
    for (int i = 0; i < 200; ++i) {
      const EnuFrame frame(Geodetic{lat(rng), lon(rng), 100.0});
      CHECK(frame.rotation_ecef_to_enu().determinant() == doctest::Approx(1.0).epsilon(1e-12));
      const EcefPoint a(frame.origin_ecef().xyz + Eigen::Vector3d(d(rng), d(rng), d(rng)));
      const EcefPoint b(frame.origin_ecef().xyz + Eigen::Vector3d(d(rng), d(rng), d(rng)));
      const double before = (a.xyz - b.xyz).norm();
      const double after = (frame.to_enu(a) - frame.to_enu(b)).norm();
      CHECK(std::abs(before - after) < 1e-7);
      CHECK((frame.to_ecef(frame.to_enu(a)).xyz - a.xyz).norm() < 1e-7);
    }
  }

  TEST_CASE("azimuth and elevation of simple lines of sight") {
    const AzEl up = azimuth_elevation(Eigen::Vector3d(0.0, 0.0, 1.0));
    CHECK(up.elevation == doctest::Approx(kPi / 2.0));
    const AzEl east = azimuth_elevation(Eigen::Vector3d(5.0, 0.0, 0.0));
    CHECK(east.azimuth == doctest::Approx(kPi / 2.0));
    CHECK(std::abs(east.elevation) < 1e-12);
    const AzEl ne = azimuth_elevation(Eigen::Vector3d(1.0, 1.0, std::sqrt(2.0)));
    CHECK(ne.azimuth == doctest::Approx(kPi / 4.0));
    CHECK(ne.elevation == doctest::Approx(kPi / 4.0));
  }

  TEST_CASE("lever arm validation") {
    Extrinsics e;
    CHECK_NOTHROW(e.validate());
    e.lever_arm = Eigen::Vector3d(6.0, 0.0, 0.0);
    CHECK_THROWS_AS(e.validate(), InvalidArgument);
  }

  TEST_CASE("GPS time calendar conversion") {
    const GpsTime epoch0 = GpsTime::from_calendar({1980, 1, 6, 0, 0, 0.0});
    CHECK(epoch0.week() == 0);
    CHECK(epoch0.nanos_of_week() == 0);
    // 2022-08-16 is a Tuesday of week 2223 (Sunday 2022-08-14).
    const GpsTime t = GpsTime::from_calendar({2022, 8, 16, 19, 0, 18.0});
    CHECK(t.week() == 2223);
    CHECK(t.sow() == doctest::Approx(2 * 86400.0 + 19 * 3600.0 + 18.0));
    const CalendarTime c = t.to_calendar();
    CHECK(c.year == 2022);
    CHECK(c.month == 8);
    CHECK(c.day == 16);
    CHECK(c.hour == 19);
    CHECK(c.second == doctest::Approx(18.0));
    CHECK(t.day_of_year() == 228);
  }

  TEST_CASE("GPS time arithmetic is exact") {
    const GpsTime t(2223, 604799.5);
    const GpsTime u = t + 1.0;
    CHECK(u.week() == 2224);
    CHECK(u.sow() == doctest::Approx(0.5));
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<long> k(-4'000'000, 4'000'000);
    for (int i = 0; i < 10000; ++i) {
      const double dt = static_cast<double>(k(rng)) * 0.25;
      CHECK((t + dt) - t == dt);
    }
    GpsTime acc = t;
    for (int i = 0; i < 300; ++i) acc = acc + 1.0;
    CHECK(acc - t == 300.0);
    CHECK(t < u);
  }
}
