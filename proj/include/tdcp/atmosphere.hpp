#pragma once

#include <array>

#include "tdcp/frames.hpp"
#include "tdcp/gps_time.hpp"

namespace tdcp {

/// Broadcast ionosphere coefficients from the GPS navigation message.
struct KlobucharParams {
  std::array<double, 4> alpha{};  ///< s, s/semicircle, s/semicircle^2, s/semicircle^3
  std::array<double, 4> beta{};   ///< s, s/semicircle, ...

  void validate() const;
};

/// Klobuchar single-frequency L1 slant ionospheric delay in metres (non-negative).
/// el must lie in (0, pi/2].
double klobuchar_delay(const KlobucharParams& params, const Geodetic& user, double azimuth, double elevation,
                       const GpsTime& t);

struct TropoState {
  double latitude = 0.0;  ///< rad
  int day_of_year = 1;    ///< 1..366
  double height = 0.0;    ///< m

  void validate() const;
};

struct ZenithTropo {
  double hydrostatic = 0.0;  ///< m
  double wet = 0.0;          ///< m
};

struct NiellMapping {
  double hydrostatic = 1.0;
  double wet = 1.0;
};

/// UNB3 zenith hydrostatic and wet delays.
ZenithTropo unb3_zenith_delay(const TropoState& s);

/// Niell hydrostatic (with height correction) and wet mapping functions.
NiellMapping niell_mapping(const TropoState& s, double elevation);

/// Slant tropospheric delay (UNB3 zenith delays mapped by Niell), metres.
/// Throws InvalidArgument for elevations at or below 0.05 rad.
double tropo_delay(const TropoState& s, double elevation);

/// Modelled slant delays for one satellite at one epoch.
struct SlantDelays {
  double tropo = 0.0;  ///< m, lengthens the phase range
  double iono = 0.0;   ///< m, shortens the phase range
};

/// Double difference (epoch b - a, other - ref) of the modelled phase-range delays,
/// T_dd - I_dd. The ionosphere term is dropped when use_iono is false.
double differenced_atmo_correction(const SlantDelays& ref_a, const SlantDelays& ref_b, const SlantDelays& other_a,
                                   const SlantDelays& other_b, bool use_iono);

}  // namespace tdcp
