#include "tdcp/atmosphere.hpp"

#include <algorithm>
#include <cmath>

#include "tdcp/constants.hpp"
#include "tdcp/error.hpp"

namespace tdcp {

using constants::kPi;
using constants::kSpeedOfLight;

void KlobucharParams::validate() const {
  for (double v : alpha) {
    if (!std::isfinite(v)) throw InvalidArgument("Klobuchar: non-finite alpha");
  }
  for (double v : beta) {
    if (!std::isfinite(v)) throw InvalidArgument("Klobuchar: non-finite beta");
  }
  if (!(std::abs(alpha[0]) < 1e-7)) throw InvalidArgument("Klobuchar: implausible alpha0");
}

double klobuchar_delay(const KlobucharParams& p, const Geodetic& user, double azimuth, double elevation,
                       const GpsTime& t) {
  // IS-GPS-200 20.3.3.5.2.5, angles in semicircles.
  const double el = elevation / kPi;
  const double psi = 0.0137 / (el + 0.11) - 0.022;
  double phi_i = user.lat / kPi + psi * std::cos(azimuth);
  phi_i = std::clamp(phi_i, -0.416, 0.416);
  const double lambda_i = user.lon / kPi + psi * std::sin(azimuth) / std::cos(phi_i * kPi);
  const double phi_m = phi_i + 0.064 * std::cos((lambda_i - 1.617) * kPi);

  double local = 43200.0 * lambda_i + t.sow();
  local = std::fmod(local, 86400.0);
  if (local < 0.0) local += 86400.0;

  const double f = 1.0 + 16.0 * std::pow(0.53 - el, 3);
  double amp = 0.0, per = 0.0, pm = 1.0;
  for (int n = 0; n < 4; ++n) {
    amp += p.alpha[n] * pm;
    per += p.beta[n] * pm;
    pm *= phi_m;
  }
  amp = std::max(amp, 0.0);
  per = std::max(per, 72000.0);

  const double x = 2.0 * kPi * (local - 50400.0) / per;
  double delay_s = 5e-9;
  if (std::abs(x) < 1.57) {
    const double x2 = x * x;
    delay_s += amp * (1.0 - x2 / 2.0 + x2 * x2 / 24.0);
  }
  return kSpeedOfLight * f * delay_s;
}

void TropoState::validate() const {
  if (day_of_year < 1 || day_of_year > 366) throw InvalidArgument("TropoState: day of year out of range");
}

namespace {

// UNB3 meteorological table (Collins & Langley 1997): rows at |lat| = 15,30,45,60,75 deg;
// columns P [mbar], T [K], e [mbar], beta [K/m], lambda.
constexpr double kUnb3Avg[5][5] = {
    {1013.25, 299.65, 26.31, 6.30e-3, 2.77},
    {1017.25, 294.15, 21.79, 6.05e-3, 3.15},
    {1015.75, 283.15, 11.66, 5.58e-3, 2.57},
    {1011.75, 272.15, 6.78, 5.39e-3, 1.81},
    {1013.00, 263.65, 4.11, 4.53e-3, 1.55},
};
constexpr double kUnb3Amp[5][5] = {
    {0.00, 0.00, 0.00, 0.00e-3, 0.00},
    {-3.75, 7.00, 8.85, 0.25e-3, 0.33},
    {-2.25, 11.00, 7.24, 0.32e-3, 0.46},
    {-1.75, 15.00, 5.36, 0.81e-3, 0.74},
    {-0.50, 14.50, 3.39, 0.62e-3, 0.30},
};

// Niell (1996) coefficients at the same latitude nodes: hydrostatic a,b,c average,
// hydrostatic a,b,c amplitude, wet a,b,c.
constexpr double kNmf[9][5] = {
    {1.2769934e-3, 1.2683230e-3, 1.2465397e-3, 1.2196049e-3, 1.2045996e-3},
    {2.9153695e-3, 2.9152299e-3, 2.9288445e-3, 2.9022565e-3, 2.9024912e-3},
    {62.610505e-3, 62.837393e-3, 63.721774e-3, 63.824265e-3, 64.258455e-3},
    {0.0000000e-0, 1.2709626e-5, 2.6523662e-5, 3.4000452e-5, 4.1202191e-5},
    {0.0000000e-0, 2.1414979e-5, 3.0160779e-5, 7.2562722e-5, 11.723375e-5},
    {0.0000000e-0, 9.0128400e-5, 4.3497037e-5, 84.795348e-5, 170.37206e-5},
    {5.8021897e-4, 5.6794847e-4, 5.8118019e-4, 5.9727542e-4, 6.1641693e-4},
    {1.4275268e-3, 1.5138625e-3, 1.4572752e-3, 1.5007428e-3, 1.7599082e-3},
    {4.3472961e-2, 4.6729510e-2, 4.3908931e-2, 4.4626982e-2, 5.4736038e-2},
};
constexpr double kNmfHeight[3] = {2.53e-5, 5.49e-3, 1.14e-3};

// Linear interpolation across the 15-degree latitude nodes, clamped at the ends.
double interp_lat(const double (&row)[5], double lat_deg) {
  if (lat_deg <= 15.0) return row[0];
  if (lat_deg >= 75.0) return row[4];
  const int i = static_cast<int>((lat_deg - 15.0) / 15.0);
  const double w = (lat_deg - 15.0 - 15.0 * i) / 15.0;
  return row[i] * (1.0 - w) + row[i + 1] * w;
}

double marini(double sin_el, double a, double b, double c) {
  return (1.0 + a / (1.0 + b / (1.0 + c))) / (sin_el + a / (sin_el + b / (sin_el + c)));
}

double seasonal_year_fraction(const TropoState& s) {
  double doy = s.day_of_year;
  if (s.latitude < 0.0) doy += 182.625;
  return (doy - 28.0) / 365.25;
}

}  // namespace

ZenithTropo unb3_zenith_delay(const TropoState& s) {
  s.validate();
  const double lat_deg = std::abs(s.latitude) * 180.0 / M_PI;
  const double cos_phase = std::cos(2.0 * M_PI * seasonal_year_fraction(s));
  double met[5];
  for (int k = 0; k < 5; ++k) {
    double avg[5], amp[5];
    for (int r = 0; r < 5; ++r) {
      avg[r] = kUnb3Avg[r][k];
      amp[r] = kUnb3Amp[r][k];
    }
    met[k] = interp_lat(avg, lat_deg) - interp_lat(amp, lat_deg) * cos_phase;
  }
  const double pressure = met[0], temp = met[1], vapour = met[2], beta = met[3], lambda = met[4];

  constexpr double k1 = 77.604, k2 = 16.6, k3 = 377600.0;
  constexpr double rd = 287.054, gm = 9.784, g = 9.80665;
  const double lambda1 = lambda + 1.0;
  const double tm = temp * (1.0 - beta * rd / (gm * lambda1));

  const double zhd0 = 1e-6 * k1 * rd * pressure / gm;
  const double zwd0 = 1e-6 * (tm * k2 + k3) * rd / (gm * lambda1 - beta * rd) * vapour / temp;

  const double base = std::max(1.0 - beta * s.height / temp, 1e-6);
  ZenithTropo z;
  z.hydrostatic = zhd0 * std::pow(base, g / (rd * beta));
  z.wet = zwd0 * std::pow(base, lambda1 * g / (rd * beta) - 1.0);
  return z;
}

NiellMapping niell_mapping(const TropoState& s, double elevation) {
  const double lat_deg = std::abs(s.latitude) * 180.0 / M_PI;
  const double cos_phase = std::cos(2.0 * M_PI * seasonal_year_fraction(s));
  double ah[3], aw[3];
  for (int i = 0; i < 3; ++i) {
    ah[i] = interp_lat(kNmf[i], lat_deg) - interp_lat(kNmf[i + 3], lat_deg) * cos_phase;
    aw[i] = interp_lat(kNmf[i + 6], lat_deg);
  }
  const double sin_el = std::sin(elevation);
  const double height_corr =
      (1.0 / sin_el - marini(sin_el, kNmfHeight[0], kNmfHeight[1], kNmfHeight[2])) * s.height / 1000.0;
  NiellMapping m;
  m.hydrostatic = marini(sin_el, ah[0], ah[1], ah[2]) + height_corr;
  m.wet = marini(sin_el, aw[0], aw[1], aw[2]);
  return m;
}

double tropo_delay(const TropoState& s, double elevation) {
  if (!(elevation > 0.05 && elevation <= M_PI / 2.0 + 1e-12)) {
    throw InvalidArgument("tropo_delay: elevation must lie in (0.05, pi/2] rad");
  }
  const ZenithTropo z = unb3_zenith_delay(s);
  const NiellMapping m = niell_mapping(s, elevation);
  return z.hydrostatic * m.hydrostatic + z.wet * m.wet;
}

double differenced_atmo_correction(const SlantDelays& ref_a, const SlantDelays& ref_b, const SlantDelays& other_a,
                                   const SlantDelays& other_b, bool use_iono) {
  auto dd = [&](auto field) {
    return (field(other_b) - field(other_a)) - (field(ref_b) - field(ref_a));
  };
  double out = dd([](const SlantDelays& d) { return d.tropo; });
  if (use_iono) out -= dd([](const SlantDelays& d) { return d.iono; });
  return out;
}

}  // namespace tdcp
