#include "tdcp/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "tdcp/constants.hpp"
#include "tdcp/error.hpp"

namespace tdcp {
namespace {

constexpr double kRadToDeg = 180.0 / constants::kPi;

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, std::size_t line_no) {
  const char* begin = s.c_str();
  while (*begin == ' ') ++begin;
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && (*end == ' ' || *end == '\r')) ++end;
  if (end == begin || *end != '\0' || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

GpsTime to_time(const std::string& week, const std::string& sow, std::size_t line_no) {
  const double w = to_double(week, line_no);
  const double s = to_double(sow, line_no);
  if (w != std::floor(w) || w < 0 || w > 1e5 || s < 0.0 || s >= 604800.0) {
    throw ParseError("line " + std::to_string(line_no) + ": bad GPS time");
  }
  return GpsTime(static_cast<int>(w), s);
}

struct CsvReader {
  std::istream& in;
  std::optional<Geodetic> origin;
  std::size_t line_no = 0;
  bool header_seen = false;

  // Next data row; header and comment lines are consumed along the way.
  bool next(std::vector<std::string>& cells) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '#') {
        if (line.rfind("# enu_origin,", 0) == 0) {
          auto c = split(line.substr(13));
          if (c.size() != 3) throw ParseError("line " + std::to_string(line_no) + ": bad enu_origin");
          origin = Geodetic{to_double(c[0], line_no) / kRadToDeg, to_double(c[1], line_no) / kRadToDeg,
                            to_double(c[2], line_no)};
        }
        continue;
      }
      if (!header_seen) {
        header_seen = true;
        if (line.rfind("week", 0) == 0) continue;
      }
      cells = split(line);
      return true;
    }
    return false;
  }
};

void write_origin(std::ostream& out, const std::optional<Geodetic>& origin) {
  if (!origin) return;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "# enu_origin,%.10f,%.10f,%.4f\n", origin->lat * kRadToDeg,
                origin->lon * kRadToDeg, origin->height);
  out << buf;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sow_str(const GpsTime& t) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9f", t.sow());
  return buf;
}

template <typename F>
auto with_input(const std::filesystem::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return f(in);
}

template <typename F>
void with_output(const std::filesystem::path& path, F&& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  f(out);
  if (!out) throw Error("I/O failure writing " + path.string());
}

}  // namespace

GroundTruthFile parse_ground_truth(std::istream& in) {
  CsvReader reader{in, std::nullopt};
  GroundTruthFile file;
  std::vector<std::string> c;
  while (reader.next(c)) {
    if (c.size() != 6) throw ParseError("line " + std::to_string(reader.line_no) + ": expected 6 columns");
    GroundTruthSample s;
    s.t = to_time(c[0], c[1], reader.line_no);
    s.position = {to_double(c[2], reader.line_no), to_double(c[3], reader.line_no), to_double(c[4], reader.line_no)};
    s.flag = static_cast<int>(to_double(c[5], reader.line_no));
    if (!file.samples.empty() && !(s.t > file.samples.back().t)) {
      throw ParseError("line " + std::to_string(reader.line_no) + ": timestamps must be strictly increasing");
    }
    file.samples.push_back(s);
  }
  if (file.samples.empty()) throw ParseError("ground truth: no samples");
  file.enu_origin = reader.origin;
  return file;
}

GroundTruthFile parse_ground_truth(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return parse_ground_truth(in); });
}

void write_ground_truth(const std::vector<GroundTruthSample>& samples, std::ostream& out,
                        const std::optional<Geodetic>& enu_origin) {
  write_origin(out, enu_origin);
  out << "week,sow,east_m,north_m,up_m,flag\n";
  char buf[160];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof(buf), "%d,%.9f,%.6f,%.6f,%.6f,%d\n", s.t.week(), s.t.sow(), s.position.x(),
                  s.position.y(), s.position.z(), s.flag);
    out << buf;
  }
}

void write_ground_truth(const std::vector<GroundTruthSample>& samples, const std::filesystem::path& path,
                        const std::optional<Geodetic>& enu_origin) {
  with_output(path, [&](std::ostream& out) { write_ground_truth(samples, out, enu_origin); });
}

std::vector<RelPoseMeasurement> parse_rel_pose(std::istream& in) {
  CsvReader reader{in, std::nullopt};
  std::vector<RelPoseMeasurement> out;
  std::vector<std::string> c;
  while (reader.next(c)) {
    if (c.size() != 46) throw ParseError("line " + std::to_string(reader.line_no) + ": expected 46 columns");
    RelPoseMeasurement m;
    m.t_a = to_time(c[0], c[1], reader.line_no);
    m.t_b = to_time(c[2], c[3], reader.line_no);
    Vector6d xi;
    for (int i = 0; i < 6; ++i) xi[i] = to_double(c[4 + i], reader.line_no);
    m.t_ab = se3_exp(xi);
    for (int i = 0; i < 36; ++i) m.covariance(i / 6, i % 6) = to_double(c[10 + i], reader.line_no);
    try {
      m.validate();
    } catch (const InvalidArgument& e) {
      throw ParseError("line " + std::to_string(reader.line_no) + ": " + e.what());
    }
    out.push_back(m);
  }
  return out;
}

std::vector<RelPoseMeasurement> parse_rel_pose(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return parse_rel_pose(in); });
}

void write_rel_pose(const std::vector<RelPoseMeasurement>& meas, std::ostream& out) {
  out << "week_a,sow_a,week_b,sow_b,xi1,xi2,xi3,xi4,xi5,xi6";
  for (int i = 1; i <= 6; ++i) {
    for (int j = 1; j <= 6; ++j) out << ",cov" << i << j;
  }
  out << "\n";
  for (const auto& m : meas) {
    out << m.t_a.week() << ',' << sow_str(m.t_a) << ',' << m.t_b.week() << ',' << sow_str(m.t_b);
    const Vector6d xi = se3_log(m.t_ab);
    for (int i = 0; i < 6; ++i) out << ',' << g17(xi[i]);
    for (int i = 0; i < 36; ++i) out << ',' << g17(m.covariance(i / 6, i % 6));
    out << "\n";
  }
}

void write_rel_pose(const std::vector<RelPoseMeasurement>& meas, const std::filesystem::path& path) {
  with_output(path, [&](std::ostream& out) { write_rel_pose(meas, out); });
}

void write_trajectory(const Trajectory& traj, const Eigen::Vector3d& lever_arm, std::ostream& out,
                      const std::optional<Geodetic>& enu_origin) {
  if (traj.empty()) throw InvalidArgument("write_trajectory: empty trajectory");
  write_origin(out, enu_origin);
  out << "week,sow,east_m,north_m,up_m,px,py,pz,rx,ry,rz,v1,v2,v3,w1,w2,w3\n";
  for (const auto& n : traj.nodes()) {
    const Eigen::Vector3d r = n.receiver_position(lever_arm);
    const Vector6d xi = se3_log(n.pose);
    out << n.t.week() << ',' << sow_str(n.t);
    for (int i = 0; i < 3; ++i) out << ',' << g17(r[i]);
    for (int i = 0; i < 6; ++i) out << ',' << g17(xi[i]);
    for (int i = 0; i < 6; ++i) out << ',' << g17(n.twist[i]);
    out << "\n";
  }
}

void write_trajectory(const Trajectory& traj, const Eigen::Vector3d& lever_arm, const std::filesystem::path& path,
                      const std::optional<Geodetic>& enu_origin) {
  if (traj.empty()) throw InvalidArgument("write_trajectory: empty trajectory");
  with_output(path, [&](std::ostream& out) { write_trajectory(traj, lever_arm, out, enu_origin); });
}

TrajectoryFile read_trajectory(std::istream& in) {
  CsvReader reader{in, std::nullopt};
  std::vector<StateNode> nodes;
  std::vector<Eigen::Vector3d> receiver;
  std::vector<std::string> c;
  while (reader.next(c)) {
    if (c.size() != 17) throw ParseError("line " + std::to_string(reader.line_no) + ": expected 17 columns");
    StateNode n;
    n.t = to_time(c[0], c[1], reader.line_no);
    Vector6d xi;
    for (int i = 0; i < 6; ++i) xi[i] = to_double(c[5 + i], reader.line_no);
    for (int i = 0; i < 6; ++i) n.twist[i] = to_double(c[11 + i], reader.line_no);
    n.pose = se3_exp(xi);
    if (!nodes.empty() && !(n.t > nodes.back().t)) {
      throw ParseError("line " + std::to_string(reader.line_no) + ": timestamps must be strictly increasing");
    }
    nodes.push_back(n);
    receiver.emplace_back(to_double(c[2], reader.line_no), to_double(c[3], reader.line_no),
                          to_double(c[4], reader.line_no));
  }
  if (nodes.empty()) throw ParseError("trajectory: no rows");
  return {Trajectory(std::move(nodes)), std::move(receiver), reader.origin};
}

TrajectoryFile read_trajectory(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return read_trajectory(in); });
}

Eigen::Vector3d TrajectoryFile::lever_arm() const {
  if (trajectory.empty()) return Eigen::Vector3d::Zero();
  const Pose& p = trajectory.front().pose;
  return p.rotation().transpose() * (receiver_positions.front() - p.translation());
}

std::vector<GroundTruthSample> receiver_track(const TrajectoryFile& file) {
  std::vector<GroundTruthSample> out;
  out.reserve(file.trajectory.size());
  for (std::size_t i = 0; i < file.trajectory.size(); ++i) {
    out.push_back({file.trajectory[i].t, file.receiver_positions[i], 0});
  }
  return out;
}

}  // namespace tdcp
