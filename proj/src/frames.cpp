#include "tdcp/frames.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "tdcp/constants.hpp"
#include "tdcp/error.hpp"

namespace tdcp {

using constants::kWgs84A;
using constants::kWgs84E2;

char frame_letter(FrameTag tag) {
  switch (tag) {
    case FrameTag::kGlobal: return 'g';
    case FrameTag::kVehicle: return 'v';
    case FrameTag::kReceiver: return 'r';
    case FrameTag::kSatellite: return 's';
    case FrameTag::kCamera: return 'c';
  }
  return '?';
}

EcefPoint geodetic_to_ecef(const Geodetic& g) {
  const double sin_lat = std::sin(g.lat);
  const double cos_lat = std::cos(g.lat);
  const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sin_lat * sin_lat);
  return {(n + g.height) * cos_lat * std::cos(g.lon), (n + g.height) * cos_lat * std::sin(g.lon),
          (n * (1.0 - kWgs84E2) + g.height) * sin_lat};
}

Geodetic ecef_to_geodetic(const EcefPoint& p) {
  const double r2 = p.x() * p.x() + p.y() * p.y();
  if (!std::isfinite(r2) || !std::isfinite(p.z()) || r2 + p.z() * p.z() < 1e12) {
    throw InvalidArgument("ecef_to_geodetic: point must be finite and more than 1000 km from the geocentre");
  }
  // Iterate on the z-intercept of the ellipsoid normal; well behaved at the poles.
  double z = p.z();
  double v = kWgs84A;
  double sin_phi = 0.0;
  bool converged = false;
  for (int it = 0; it < 20; ++it) {
    const double zk = z;
    sin_phi = z / std::sqrt(r2 + z * z);
    v = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sin_phi * sin_phi);
    z = p.z() + v * kWgs84E2 * sin_phi;
    // 1e-9 m, relaxed to the rounding floor for points far above the surface.
    if (std::abs(z - zk) < 1e-9 * std::max(1.0, std::abs(z) * 1e-6)) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericalError("ecef_to_geodetic: no convergence in 20 iterations");
  Geodetic g;
  g.lat = std::atan2(z, std::sqrt(r2));
  g.lon = r2 > 0.0 ? std::atan2(p.y(), p.x()) : 0.0;
  g.height = std::sqrt(r2 + z * z) - v;
  return g;
}

Eigen::Matrix3d ecef_to_enu_rotation(double lat, double lon) {
  const double sl = std::sin(lat), cl = std::cos(lat);
  const double so = std::sin(lon), co = std::cos(lon);
  Eigen::Matrix3d r;
  r << -so, co, 0.0,
       -sl * co, -sl * so, cl,
       cl * co, cl * so, sl;
  return r;
}

EnuFrame::EnuFrame(const Geodetic& origin)
    : origin_(origin), origin_ecef_(geodetic_to_ecef(origin)), rot_(ecef_to_enu_rotation(origin.lat, origin.lon)) {}

AzEl azimuth_elevation(const Eigen::Vector3d& los_enu) {
  const double horiz = std::hypot(los_enu.x(), los_enu.y());
  AzEl ae;
  ae.elevation = std::atan2(los_enu.z(), horiz);
  ae.azimuth = std::atan2(los_enu.x(), los_enu.y());
  if (ae.azimuth < 0.0) ae.azimuth += 2.0 * M_PI;
  return ae;
}

AzEl azimuth_elevation(const EcefPoint& receiver, const EcefPoint& satellite) {
  const Geodetic g = ecef_to_geodetic(receiver);
  return azimuth_elevation(ecef_to_enu_rotation(g.lat, g.lon) * (satellite.xyz - receiver.xyz));
}

void Extrinsics::validate() const {
  if (!lever_arm.allFinite() || lever_arm.norm() >= 5.0) {
    throw InvalidArgument("Extrinsics: lever arm norm must be below 5 m");
  }
}

}  // namespace tdcp
