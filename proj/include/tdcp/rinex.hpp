#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tdcp/observation.hpp"

namespace tdcp {

struct ObsParseResult {
  double version = 0.0;
  std::vector<ObservationEpoch> epochs;
  /// Lines or fields that could not be decoded and were skipped.
  std::size_t skipped = 0;
};

/// RINEX 2.11 / 3.x observation file, GPS L1 observables only. Throws ParseError on a
/// missing header, unsupported version or when no epoch could be decoded.
ObsParseResult parse_rinex_obs(std::istream& in);
ObsParseResult parse_rinex_obs(const std::filesystem::path& path);

/// RINEX 2.x / 3.x GPS navigation file. Klobuchar coefficients are optional.
NavigationData parse_rinex_nav(std::istream& in);
NavigationData parse_rinex_nav(const std::filesystem::path& path);

struct RinexWriteOptions {
  std::string marker_name = "SIM";
  std::string program = "tdcp_odom";
  Eigen::Vector3d approx_position = Eigen::Vector3d::Zero();  ///< ECEF, m
};

/// RINEX 2.11 observation output with C1 L1 D1 S1. Throws InvalidArgument for an
/// empty epoch list and Error on I/O failure.
void write_rinex_obs(const std::vector<ObservationEpoch>& epochs, std::ostream& out,
                     const RinexWriteOptions& opts = {});
void write_rinex_obs(const std::vector<ObservationEpoch>& epochs, const std::filesystem::path& path,
                     const RinexWriteOptions& opts = {});

/// RINEX 2.11 GPS navigation output.
void write_rinex_nav(const NavigationData& nav, std::ostream& out);
void write_rinex_nav(const NavigationData& nav, const std::filesystem::path& path);

/// Round every field to the precision RINEX 2.11 navigation output carries, so that
/// in-memory and file-based runs see bit-identical orbits.
BroadcastEphemeris quantize_for_rinex(const BroadcastEphemeris& eph);
KlobucharParams quantize_for_rinex(const KlobucharParams& k);

}  // namespace tdcp
