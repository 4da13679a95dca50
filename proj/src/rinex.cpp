#include "tdcp/rinex.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>

#include "tdcp/error.hpp"

namespace tdcp {
namespace {

// Raised for a single undecodable field; always caught inside this file.
struct FieldError {};

std::string_view field(std::string_view line, std::size_t pos, std::size_t len) {
  if (pos >= line.size()) return {};
  return line.substr(pos, std::min(len, line.size() - pos));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> opt_double(std::string_view raw) {
  const std::string_view t = trim(raw);
  if (t.empty()) return std::nullopt;
  std::string s(t);
  std::replace(s.begin(), s.end(), 'D', 'E');
  std::replace(s.begin(), s.end(), 'd', 'e');
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) throw FieldError{};
  return v;
}

double req_double(std::string_view raw) {
  auto v = opt_double(raw);
  if (!v) throw FieldError{};
  return *v;
}

int req_int(std::string_view raw) {
  const std::string_view t = trim(raw);
  int v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) throw FieldError{};
  return v;
}

std::string_view label_of(std::string_view line) { return trim(field(line, 60, 20)); }

GpsTime make_time(int year, int month, int day, int hour, int minute, double sec) {
  if (year < 100) year += year < 80 ? 2000 : 1900;
  if (year < 1980 || year > 2200 || month < 1 || month > 12 || day < 1 || day > 31 || hour < 0 || hour > 23 ||
      minute < 0 || minute > 59 || !(sec >= 0.0 && sec < 61.0)) {
    throw FieldError{};
  }
  return GpsTime::from_calendar({year, month, day, hour, minute, sec});
}

struct ObsLayout {
  int n_types = 0;
  int code = -1, phase = -1, doppler = -1, snr = -1;
};

void assign_index(ObsLayout& layout, const std::string& type, int idx, bool v3) {
  if (v3) {
    if (type.size() < 2 || type[1] != '1') return;
    if (type[0] == 'C' && (layout.code < 0 || type == "C1C")) layout.code = idx;
    if (type[0] == 'L' && (layout.phase < 0 || type == "L1C")) layout.phase = idx;
    if (type[0] == 'D' && (layout.doppler < 0 || type == "D1C")) layout.doppler = idx;
    if (type[0] == 'S' && (layout.snr < 0 || type == "S1C")) layout.snr = idx;
  } else {
    if (type == "C1" || (type == "P1" && layout.code < 0)) layout.code = idx;
    if (type == "L1") layout.phase = idx;
    if (type == "D1") layout.doppler = idx;
    if (type == "S1") layout.snr = idx;
  }
}

struct LineReader {
  std::istream& in;
  std::string line;
  bool next() {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
};

// Decodes one 16-character observation slot; returns false when the field is corrupt.
bool decode_slot(std::string_view slot, std::optional<double>& value, int& lli) {
  lli = 0;
  try {
    value = opt_double(field(slot, 0, 14));
    const std::string_view l = field(slot, 14, 1);
    if (!l.empty() && l[0] != ' ') {
      if (l[0] < '0' || l[0] > '9') return false;
      lli = l[0] - '0';
    }
  } catch (const FieldError&) {
    value.reset();
    return false;
  }
  return true;
}

SatObservation build_record(int prn, const ObsLayout& layout, const std::vector<std::optional<double>>& values,
                            const std::vector<int>& llis) {
  SatObservation s;
  s.prn = prn;
  auto get = [&](int idx) { return idx >= 0 && values[idx] ? *values[idx] : kMissing; };
  s.pseudorange = get(layout.code);
  s.phase_cycles = get(layout.phase);
  s.doppler_hz = get(layout.doppler);
  s.snr = get(layout.snr);
  s.lock_lost = layout.phase >= 0 && (llis[layout.phase] & 1) != 0;
  if (!std::isfinite(s.phase_cycles)) s.lock_lost = true;
  return s;
}

// Parses "Gnn" / " nn" satellite identifiers; returns 0 for non-GPS systems.
int parse_sat_id(std::string_view id) {
  if (id.size() < 3) throw FieldError{};
  const char sys = id[0];
  if (sys != 'G' && sys != ' ') return 0;
  const int prn = req_int(id.substr(1, 2));
  if (prn < 1 || prn > 99) throw FieldError{};
  return prn;
}

void finish_epoch(ObsParseResult& result, ObservationEpoch&& epoch) {
  // Drop duplicate PRNs rather than rejecting the epoch.
  std::vector<SatObservation> unique;
  for (auto& s : epoch.sats) {
    if (std::none_of(unique.begin(), unique.end(), [&](const SatObservation& u) { return u.prn == s.prn; })) {
      unique.push_back(s);
    } else {
      ++result.skipped;
    }
  }
  epoch.sats = std::move(unique);
  if (!epoch.sats.empty()) result.epochs.push_back(std::move(epoch));
}

void parse_obs_body_v2(LineReader& reader, const ObsLayout& layout, ObsParseResult& result) {
  const int lines_per_sat = std::max(1, (layout.n_types + 4) / 5);
  while (reader.next()) {
    const std::string head = reader.line;
    if (trim(head).empty()) continue;
    int flag = 0, nsat = 0;
    GpsTime t;
    std::vector<std::string> ids;
    try {
      const int yy = req_int(field(head, 0, 3));
      const int mo = req_int(field(head, 3, 3));
      const int dd = req_int(field(head, 6, 3));
      const int hh = req_int(field(head, 9, 3));
      const int mi = req_int(field(head, 12, 3));
      const double ss = req_double(field(head, 15, 11));
      flag = req_int(field(head, 26, 3));
      nsat = req_int(field(head, 29, 3));
      if (flag < 0 || flag > 6 || nsat < 0 || nsat > 999) throw FieldError{};
      if (flag > 1) {
        // Event record: nsat header lines follow.
        for (int i = 0; i < nsat && reader.next(); ++i) {
        }
        continue;
      }
      t = make_time(yy, mo, dd, hh, mi, ss);
      std::string ids_line = head;
      for (int i = 0; i < nsat; ++i) {
        const int col = i % 12;
        if (i > 0 && col == 0) {
          if (!reader.next()) throw FieldError{};
          ids_line = reader.line;
        }
        const std::string_view id = field(ids_line, 32 + 3 * col, 3);
        if (id.size() < 3) throw FieldError{};
        ids.emplace_back(id);
      }
    } catch (const FieldError&) {
      ++result.skipped;
      continue;
    }

    ObservationEpoch epoch;
    epoch.t = t;
    for (const auto& id : ids) {
      std::vector<std::optional<double>> values(layout.n_types);
      std::vector<int> llis(layout.n_types, 0);
      bool ok = true;
      for (int l = 0; l < lines_per_sat; ++l) {
        if (!reader.next()) {
          ok = false;
          break;
        }
        for (int k = 0; k < 5; ++k) {
          const int idx = 5 * l + k;
          if (idx >= layout.n_types) break;
          if (!decode_slot(field(reader.line, 16 * k, 16), values[idx], llis[idx])) ++result.skipped;
        }
      }
      if (!ok) break;
      try {
        const int prn = parse_sat_id(id);
        if (prn > 0) epoch.sats.push_back(build_record(prn, layout, values, llis));
      } catch (const FieldError&) {
        ++result.skipped;
      }
    }
    finish_epoch(result, std::move(epoch));
  }
}

void parse_obs_body_v3(LineReader& reader, const ObsLayout& layout, ObsParseResult& result) {
  bool have_line = reader.next();
  while (have_line) {
    const std::string head = reader.line;
    if (head.empty() || head[0] != '>') {
      if (!trim(head).empty()) ++result.skipped;
      have_line = reader.next();
      continue;
    }
    int flag = 0, nsat = 0;
    GpsTime t;
    try {
      const int yy = req_int(field(head, 2, 4));
      const int mo = req_int(field(head, 6, 3));
      const int dd = req_int(field(head, 9, 3));
      const int hh = req_int(field(head, 12, 3));
      const int mi = req_int(field(head, 15, 3));
      const double ss = req_double(field(head, 18, 11));
      flag = req_int(field(head, 29, 3));
      nsat = req_int(field(head, 32, 3));
      if (flag < 0 || flag > 6 || nsat < 0 || nsat > 999) throw FieldError{};
      if (flag <= 1) t = make_time(yy, mo, dd, hh, mi, ss);
    } catch (const FieldError&) {
      ++result.skipped;
      have_line = reader.next();
      continue;
    }
    ObservationEpoch epoch;
    epoch.t = t;
    have_line = reader.next();
    for (int i = 0; i < nsat && have_line; ++i) {
      const std::string& line = reader.line;
      if (!line.empty() && line[0] == '>') break;  // truncated epoch
      if (flag <= 1) {
        try {
          const int prn = parse_sat_id(field(line, 0, 3));
          std::vector<std::optional<double>> values(layout.n_types);
          std::vector<int> llis(layout.n_types, 0);
          for (int k = 0; k < layout.n_types; ++k) {
            if (!decode_slot(field(line, 3 + 16 * k, 16), values[k], llis[k])) ++result.skipped;
          }
          if (prn > 0) epoch.sats.push_back(build_record(prn, layout, values, llis));
        } catch (const FieldError&) {
          ++result.skipped;
        }
      }
      have_line = reader.next();
    }
    if (flag <= 1) finish_epoch(result, std::move(epoch));
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string header_line(const std::string& content, const std::string& label) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%-60.60s%-20.20s", content.c_str(), label.c_str());
  std::string s(buf);
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s + "\n";
}

std::string fmt_d(double v, int width, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%*.*E", width, precision, v);
  std::string s(buf);
  std::replace(s.begin(), s.end(), 'E', 'D');
  return s;
}

double requantize(double v, int width, int precision) {
  return *opt_double(fmt_d(v, width, precision));
}

}  // namespace

ObsParseResult parse_rinex_obs(std::istream& in) {
  LineReader reader{in, {}};
  ObsParseResult result;
  bool have_version = false, end_of_header = false;
  bool v3 = false;
  ObsLayout layout;
  std::vector<std::string> types;
  int declared_types = 0;
  char current_sys = ' ';

  while (reader.next()) {
    const std::string& line = reader.line;
    const std::string_view label = label_of(line);
    try {
      if (label == "RINEX VERSION / TYPE") {
        result.version = req_double(field(line, 0, 9));
        const std::string_view type = field(line, 20, 1);
        if (type.empty() || type[0] != 'O') throw ParseError("RINEX: not an observation file");
        if (!(result.version >= 2.0 && result.version < 4.0)) {
          throw ParseError("RINEX: unsupported version " + std::to_string(result.version));
        }
        v3 = result.version >= 3.0;
        have_version = true;
      } else if (label == "# / TYPES OF OBSERV" && !v3) {
        const std::string_view count = trim(field(line, 0, 6));
        if (!count.empty()) declared_types = req_int(count);
        for (int k = 0; k < 9; ++k) {
          const std::string t(trim(field(line, 6 + 6 * k, 6)));
          if (!t.empty()) types.push_back(t);
        }
      } else if (label == "SYS / # / OBS TYPES" && v3) {
        const std::string_view sys = field(line, 0, 1);
        if (!sys.empty() && sys[0] != ' ') {
          current_sys = sys[0];
          if (current_sys == 'G') declared_types = req_int(field(line, 3, 3));
        }
        if (current_sys == 'G') {
          for (int k = 0; k < 13; ++k) {
            const std::string t(trim(field(line, 7 + 4 * k, 3)));
            if (!t.empty()) types.push_back(t);
          }
        }
      } else if (label == "END OF HEADER") {
        end_of_header = true;
        break;
      }
    } catch (const FieldError&) {
      throw ParseError("RINEX: malformed header line: " + line);
    }
    if (!have_version) throw ParseError("RINEX: missing RINEX VERSION / TYPE header");
  }
  if (!have_version || !end_of_header) throw ParseError("RINEX: missing or incomplete header");
  if (types.empty() || declared_types <= 0 || declared_types > 99) {
    throw ParseError("RINEX: no GPS observation types declared");
  }
  layout.n_types = std::min<int>(declared_types, static_cast<int>(types.size()));
  for (int i = 0; i < layout.n_types; ++i) assign_index(layout, types[i], i, v3);
  if (layout.phase < 0) throw ParseError("RINEX: no L1 carrier phase observable");

  if (v3) {
    parse_obs_body_v3(reader, layout, result);
  } else {
    parse_obs_body_v2(reader, layout, result);
  }
  if (result.epochs.empty()) throw ParseError("RINEX: zero epochs parsed");
  return result;
}

ObsParseResult parse_rinex_obs(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_rinex_obs(in);
}

NavigationData parse_rinex_nav(std::istream& in) {
  LineReader reader{in, {}};
  NavigationData nav;
  double version = 0.0;
  bool have_version = false, end_of_header = false;
  KlobucharParams klob;
  bool have_alpha = false, have_beta = false;

  while (reader.next()) {
    const std::string& line = reader.line;
    const std::string_view label = label_of(line);
    try {
      if (label == "RINEX VERSION / TYPE") {
        version = req_double(field(line, 0, 9));
        const std::string_view type = field(line, 20, 1);
        if (type.empty() || (type[0] != 'N' && type[0] != 'G')) throw ParseError("RINEX: not a navigation file");
        if (type[0] != 'N' && version < 3.0) throw ParseError("RINEX: not a GPS navigation file");
        if (!(version >= 2.0 && version < 4.0)) throw ParseError("RINEX: unsupported navigation version");
        if (version >= 3.0) {
          const std::string_view sys = field(line, 40, 1);
          if (!sys.empty() && sys[0] != 'G' && sys[0] != 'M' && sys[0] != ' ') {
            throw ParseError("RINEX: navigation file carries no GPS records");
          }
        }
        have_version = true;
      } else if (label == "ION ALPHA" || label == "ION BETA") {
        auto& dst = label == "ION ALPHA" ? klob.alpha : klob.beta;
        for (int k = 0; k < 4; ++k) dst[k] = req_double(field(line, 2 + 12 * k, 12));
        (label == "ION ALPHA" ? have_alpha : have_beta) = true;
      } else if (label == "IONOSPHERIC CORR") {
        const std::string_view kind = trim(field(line, 0, 4));
        if (kind == "GPSA" || kind == "GPSB") {
          auto& dst = kind == "GPSA" ? klob.alpha : klob.beta;
          for (int k = 0; k < 4; ++k) dst[k] = req_double(field(line, 5 + 12 * k, 12));
          (kind == "GPSA" ? have_alpha : have_beta) = true;
        }
      } else if (label == "END OF HEADER") {
        end_of_header = true;
        break;
      }
    } catch (const FieldError&) {
      throw ParseError("RINEX: malformed navigation header line: " + line);
    }
    if (!have_version) throw ParseError("RINEX: missing RINEX VERSION / TYPE header");
  }
  if (!have_version || !end_of_header) throw ParseError("RINEX: missing or incomplete navigation header");
  if (have_alpha && have_beta) nav.klobuchar = klob;

  const bool v3 = version >= 3.0;
  const std::size_t first_col = v3 ? 4 : 3;
  bool have_line = reader.next();
  while (have_line) {
    const std::string head = reader.line;
    if (trim(head).empty()) {
      have_line = reader.next();
      continue;
    }
    if (v3 && head[0] != 'G') {
      // Other constellations: skip to the next record start.
      while ((have_line = reader.next()) && (reader.line.empty() || reader.line[0] == ' ')) {
      }
      continue;
    }
    std::vector<std::string> body;
    while ((have_line = reader.next())) {
      if (!reader.line.empty() && reader.line[0] != ' ') break;
      if (body.size() == 7) break;
      body.push_back(reader.line);
    }
    if (body.size() < 7) continue;
    try {
      BroadcastEphemeris e;
      GpsTime toc;
      double v[32] = {};
      if (v3) {
        e.prn = req_int(field(head, 1, 2));
        toc = make_time(req_int(field(head, 4, 4)), req_int(field(head, 9, 2)), req_int(field(head, 12, 2)),
                        req_int(field(head, 15, 2)), req_int(field(head, 18, 2)), req_double(field(head, 21, 2)));
        for (int k = 0; k < 3; ++k) v[1 + k] = req_double(field(head, 23 + 19 * k, 19));
      } else {
        e.prn = req_int(field(head, 0, 2));
        toc = make_time(req_int(field(head, 3, 2)), req_int(field(head, 6, 2)), req_int(field(head, 9, 2)),
                        req_int(field(head, 12, 2)), req_int(field(head, 15, 2)), req_double(field(head, 17, 5)));
        for (int k = 0; k < 3; ++k) v[1 + k] = req_double(field(head, 22 + 19 * k, 19));
      }
      for (int l = 0; l < 7; ++l) {
        for (int k = 0; k < 4; ++k) {
          auto value = opt_double(field(body[l], first_col + 19 * k, 19));
          v[4 + 4 * l + k] = value.value_or(0.0);
        }
      }
      e.toc = toc;
      e.af0 = v[1];
      e.af1 = v[2];
      e.af2 = v[3];
      e.iode = static_cast<int>(v[4]);
      e.crs = v[5];
      e.delta_n = v[6];
      e.m0 = v[7];
      e.cuc = v[8];
      e.e = v[9];
      e.cus = v[10];
      e.sqrt_a = v[11];
      const double toe_sow = v[12];
      e.cic = v[13];
      e.omega0 = v[14];
      e.cis = v[15];
      e.i0 = v[16];
      e.crc = v[17];
      e.omega = v[18];
      e.omega_dot = v[19];
      e.idot = v[20];
      const int week = static_cast<int>(v[22]);
      e.health = static_cast<int>(v[25]);
      e.tgd = v[26];
      if (e.prn < 1 || e.prn > 99 || !(toe_sow >= 0.0 && toe_sow < 604800.0) || week < 0 || week > 10000) {
        throw FieldError{};
      }
      e.toe = GpsTime(week, toe_sow);
      // Align toe week with toc when the broadcast week rolled over.
      if (e.toe - toc > 302400.0) e.toe = GpsTime(week - 1, toe_sow);
      if (e.toe - toc < -302400.0) e.toe = GpsTime(week + 1, toe_sow);
      nav.ephemerides.push_back(e);
    } catch (const FieldError&) {
      continue;
    } catch (const InvalidArgument&) {
      continue;
    }
  }
  return nav;
}

NavigationData parse_rinex_nav(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_rinex_nav(in);
}

void write_rinex_obs(const std::vector<ObservationEpoch>& epochs, std::ostream& out, const RinexWriteOptions& opts) {
  if (epochs.empty()) throw InvalidArgument("write_rinex_obs: no epochs to write");
  char buf[128];
  out << header_line("     2.11           OBSERVATION DATA    G (GPS)", "RINEX VERSION / TYPE");
  const CalendarTime c0 = epochs.front().t.to_calendar();
  std::snprintf(buf, sizeof(buf), "%-20.20s%-20.20s%04d%02d%02d %02d%02d%02d GPS", opts.program.c_str(), "sim",
                c0.year, c0.month, c0.day, c0.hour, c0.minute, static_cast<int>(c0.second));
  out << header_line(buf, "PGM / RUN BY / DATE");
  out << header_line(opts.marker_name, "MARKER NAME");
  std::snprintf(buf, sizeof(buf), "%14.4f%14.4f%14.4f", opts.approx_position.x(), opts.approx_position.y(),
                opts.approx_position.z());
  out << header_line(buf, "APPROX POSITION XYZ");
  out << header_line("     1     1", "WAVELENGTH FACT L1/2");
  out << header_line("     4    C1    L1    D1    S1", "# / TYPES OF OBSERV");
  std::snprintf(buf, sizeof(buf), "%6d%6d%6d%6d%6d%13.7f     GPS", c0.year, c0.month, c0.day, c0.hour, c0.minute,
                c0.second);
  out << header_line(buf, "TIME OF FIRST OBS");
  out << header_line("", "END OF HEADER");

  auto slot = [&](double value, bool lli, double snr) {
    std::string s;
    if (std::isfinite(value)) {
      std::snprintf(buf, sizeof(buf), "%14.3f", value);
      s = buf;
    } else {
      s = std::string(14, ' ');
    }
    s += lli ? '1' : ' ';
    if (std::isfinite(snr)) {
      s += static_cast<char>('0' + std::clamp(static_cast<int>(snr / 6.0), 1, 9));
    } else {
      s += ' ';
    }
    return s;
  };

  for (const auto& ep : epochs) {
    const CalendarTime c = ep.t.to_calendar();
    std::snprintf(buf, sizeof(buf), " %02d %2d %2d %2d %2d%11.7f  0%3d", c.year % 100, c.month, c.day, c.hour,
                  c.minute, c.second, static_cast<int>(ep.sats.size()));
    std::string line = buf;
    for (std::size_t i = 0; i < ep.sats.size(); ++i) {
      if (i > 0 && i % 12 == 0) {
        out << line << "\n";
        line = std::string(32, ' ');
      }
      std::snprintf(buf, sizeof(buf), "G%02d", ep.sats[i].prn);
      line += buf;
    }
    out << line << "\n";
    for (const auto& s : ep.sats) {
      std::string obs = slot(s.pseudorange, false, s.snr) + slot(s.phase_cycles, s.lock_lost, s.snr) +
                        slot(s.doppler_hz, false, s.snr) + slot(s.snr, false, kMissing);
      while (!obs.empty() && obs.back() == ' ') obs.pop_back();
      out << obs << "\n";
    }
  }
  if (!out) throw Error("write_rinex_obs: I/O failure");
}

void write_rinex_obs(const std::vector<ObservationEpoch>& epochs, const std::filesystem::path& path,
                     const RinexWriteOptions& opts) {
  if (epochs.empty()) throw InvalidArgument("write_rinex_obs: no epochs to write");
  auto out = open_output(path);
  write_rinex_obs(epochs, out, opts);
}

void write_rinex_nav(const NavigationData& nav, std::ostream& out) {
  out << header_line("     2.11           N: GPS NAV DATA", "RINEX VERSION / TYPE");
  out << header_line("tdcp_odom           sim", "PGM / RUN BY / DATE");
  if (nav.klobuchar) {
    std::string a = "  ", b = "  ";
    for (int k = 0; k < 4; ++k) {
      a += fmt_d(nav.klobuchar->alpha[k], 12, 4);
      b += fmt_d(nav.klobuchar->beta[k], 12, 4);
    }
    out << header_line(a, "ION ALPHA");
    out << header_line(b, "ION BETA");
  }
  out << header_line("    18", "LEAP SECONDS");
  out << header_line("", "END OF HEADER");
  char buf[128];
  for (const auto& e : nav.ephemerides) {
    const CalendarTime c = e.toc.to_calendar();
    std::snprintf(buf, sizeof(buf), "%2d %02d %2d %2d %2d %2d%5.1f", e.prn, c.year % 100, c.month, c.day, c.hour,
                  c.minute, c.second);
    out << buf << fmt_d(e.af0, 19, 12) << fmt_d(e.af1, 19, 12) << fmt_d(e.af2, 19, 12) << "\n";
    const double rows[7][4] = {
        {static_cast<double>(e.iode), e.crs, e.delta_n, e.m0},
        {e.cuc, e.e, e.cus, e.sqrt_a},
        {e.toe.sow(), e.cic, e.omega0, e.cis},
        {e.i0, e.crc, e.omega, e.omega_dot},
        {e.idot, 1.0, static_cast<double>(e.toe.week()), 0.0},
        {2.0, static_cast<double>(e.health), e.tgd, static_cast<double>(e.iode)},
        {e.toe.sow(), 4.0, 0.0, 0.0},
    };
    for (const auto& row : rows) {
      out << "   ";
      for (double v : row) out << fmt_d(v, 19, 12);
      out << "\n";
    }
  }
  if (!out) throw Error("write_rinex_nav: I/O failure");
}

void write_rinex_nav(const NavigationData& nav, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_rinex_nav(nav, out);
}

BroadcastEphemeris quantize_for_rinex(const BroadcastEphemeris& eph) {
  BroadcastEphemeris q = eph;
  for (double* f : {&q.sqrt_a, &q.e, &q.i0, &q.omega0, &q.omega, &q.m0, &q.delta_n, &q.idot, &q.omega_dot, &q.cuc,
                    &q.cus, &q.crc, &q.crs, &q.cic, &q.cis, &q.af0, &q.af1, &q.af2, &q.tgd}) {
    *f = requantize(*f, 19, 12);
  }
  return q;
}

KlobucharParams quantize_for_rinex(const KlobucharParams& k) {
  KlobucharParams q = k;
  for (auto& v : q.alpha) v = requantize(v, 12, 4);
  for (auto& v : q.beta) v = requantize(v, 12, 4);
  return q;
}

}  // namespace tdcp
