#pragma once

// WGS-84 and GPS interface constants (IS-GPS-200 values).

namespace tdcp::constants {

inline constexpr double kPi = 3.1415926535898;  // GPS ICD value of pi
inline constexpr double kSpeedOfLight = 299792458.0;          // m/s
inline constexpr double kWgs84A = 6378137.0;                  // semi-major axis, m
inline constexpr double kWgs84F = 1.0 / 298.257223563;        // flattening
inline constexpr double kWgs84E2 = kWgs84F * (2.0 - kWgs84F); // first eccentricity squared
inline constexpr double kWgs84B = kWgs84A * (1.0 - kWgs84F);  // semi-minor axis, m
inline constexpr double kGm = 3.986005e14;                    // m^3/s^2
inline constexpr double kEarthRotationRate = 7.2921151467e-5; // rad/s
inline constexpr double kL1Frequency = 1575.42e6;             // Hz
inline constexpr double kL1Wavelength = kSpeedOfLight / kL1Frequency;
// Relativistic clock term coefficient, -2 sqrt(mu) / c^2.
inline constexpr double kRelativisticF = -4.442807633e-10;
inline constexpr int kGpsMinusUtcSeconds = 18;
inline constexpr double kSecondsPerWeek = 604800.0;

}  // namespace tdcp::constants
