#include "tdcp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "tdcp/error.hpp"

namespace tdcp {

Pose enu_transform(const EnuFrame& from, const EnuFrame& to) {
  const Eigen::Matrix3d rot = to.rotation_ecef_to_enu() * from.rotation_ecef_to_enu().transpose();
  return Pose(rot, to.to_enu(from.origin_ecef()));
}

Trajectory transform_trajectory(const Trajectory& traj, const Pose& transform) {
  std::vector<StateNode> nodes = traj.nodes();
  for (auto& n : nodes) n.pose = transform * n.pose;
  return Trajectory(std::move(nodes));
}

Eigen::Vector3d EstimateTrack::receiver_at(const GpsTime& t) const {
  return interpolate_pose(trajectory, t) * lever_arm;
}

bool EstimateTrack::covers(const GpsTime& t) const {
  return !trajectory.empty() && trajectory.start_time() <= t && t <= trajectory.end_time();
}

std::vector<double> arc_length(const std::vector<GroundTruthSample>& truth) {
  std::vector<double> s(truth.size(), 0.0);
  for (std::size_t i = 1; i < truth.size(); ++i) s[i] = s[i - 1] + (truth[i].position - truth[i - 1].position).norm();
  return s;
}

namespace {

struct LineFit {
  Eigen::Vector3d centroid;
  Eigen::Vector3d direction;
  double max_offset = 0.0;
};

LineFit fit_line(const std::vector<Eigen::Vector3d>& pts) {
  LineFit f;
  f.centroid = Eigen::Vector3d::Zero();
  for (const auto& p : pts) f.centroid += p;
  f.centroid /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) cov += (p - f.centroid) * (p - f.centroid).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  f.direction = es.eigenvectors().col(2);
  if (f.direction.dot(pts.back() - pts.front()) < 0.0) f.direction = -f.direction;
  for (const auto& p : pts) {
    const Eigen::Vector3d d = p - f.centroid;
    f.max_offset = std::max(f.max_offset, (d - d.dot(f.direction) * f.direction).norm());
  }
  return f;
}

double rmse(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& truth, const Pose& t) {
  double ss = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) ss += (t * est[i] - truth[i]).squaredNorm();
  return std::sqrt(ss / static_cast<double>(est.size()));
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

Alignment align_points(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& truth,
                       AlignmentMode mode) {
  if (est.size() != truth.size()) throw InvalidArgument("align_points: size mismatch");
  if (est.size() < 3) throw InvalidArgument("align_points: need at least three points");
  Alignment a;
  a.rmse_before = rmse(est, truth, Pose());

  const LineFit le = fit_line(est);
  const LineFit lt = fit_line(truth);
  if (le.max_offset < 1e-3 || lt.max_offset < 1e-3) {
    a.fallback = true;
    double yaw = 0.0;
    if (le.direction.head<2>().norm() > 1e-6 && lt.direction.head<2>().norm() > 1e-6) {
      yaw = std::atan2(lt.direction.y(), lt.direction.x()) - std::atan2(le.direction.y(), le.direction.x());
    }
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    a.transform = Pose(rot, lt.centroid - rot * le.centroid);
  } else if (mode == AlignmentMode::kHeading) {
    double sin_sum = 0.0, cos_sum = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
      const Eigen::Vector3d p = est[i] - le.centroid;
      const Eigen::Vector3d q = truth[i] - lt.centroid;
      sin_sum += p.x() * q.y() - p.y() * q.x();
      cos_sum += p.x() * q.x() + p.y() * q.y();
    }
    const Eigen::Matrix3d rot =
        Eigen::AngleAxisd(std::atan2(sin_sum, cos_sum), Eigen::Vector3d::UnitZ()).toRotationMatrix();
    a.transform = Pose(rot, lt.centroid - rot * le.centroid);
  } else {
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < est.size(); ++i) h += (est[i] - le.centroid) * (truth[i] - lt.centroid).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix3d rot = svd.matrixV() * d * svd.matrixU().transpose();
    a.transform = Pose(rot, lt.centroid - rot * le.centroid);
  }
  a.rmse_after = rmse(est, truth, a.transform);
  return a;
}

Alignment align_segment(const EstimateTrack& est, const std::vector<GroundTruthSample>& truth,
                        const std::vector<double>& arc, double s0, double span, AlignmentMode mode) {
  std::vector<Eigen::Vector3d> e, t;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (arc[i] < s0 - 1e-9 || arc[i] > s0 + span + 1e-9) continue;
    if (!est.covers(truth[i].t)) throw InvalidArgument("align_segment: estimate does not cover the alignment span");
    e.push_back(est.receiver_at(truth[i].t));
    t.push_back(truth[i].position);
  }
  if (e.size() < 3) throw InvalidArgument("align_segment: fewer than three truth samples in the alignment span");
  return align_points(e, t, mode);
}

void DriftOptions::validate() const {
  if (sections < 1) throw InvalidArgument("DriftOptions: sections must be >= 1");
  if (!(section_length > 0.0) || !(align_span > 0.0)) throw InvalidArgument("DriftOptions: lengths must be positive");
}

double error_at(const SectionResult& s, double d) {
  if (s.distance.empty()) throw InvalidArgument("error_at: empty section");
  if (d <= s.distance.front()) return s.error.front();
  for (std::size_t i = 1; i < s.distance.size(); ++i) {
    if (d <= s.distance[i]) {
      const double span = s.distance[i] - s.distance[i - 1];
      const double w = span > 0.0 ? (d - s.distance[i - 1]) / span : 1.0;
      return s.error[i - 1] + w * (s.error[i] - s.error[i - 1]);
    }
  }
  return s.error.back();
}

double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return 1.0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (syy <= 1e-300) return 1.0;
  if (sxx <= 0.0) return 0.0;
  return std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
}

SectionResult section_drift(const EstimateTrack& est, const std::vector<GroundTruthSample>& truth,
                            const std::vector<double>& arc, double s0, const DriftOptions& opts, int id) {
  const double begin = s0 + opts.align_span;
  const double end = begin + opts.section_length;
  if (arc.empty() || arc.back() < end - 1e-9) throw InvalidArgument("section_drift: truth shorter than the section");
  SectionResult r;
  r.id = id;
  r.start = begin;
  const Alignment a = align_segment(est, truth, arc, s0, opts.align_span, opts.alignment);
  r.fallback_alignment = a.fallback;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (arc[i] < begin - 1e-9) continue;
    if (!est.covers(truth[i].t)) throw InvalidArgument("section_drift: estimate does not cover the section");
    const Eigen::Vector3d d = a.transform * est.receiver_at(truth[i].t) - truth[i].position;
    r.distance.push_back(arc[i] - begin);
    r.error.push_back(d.head<2>().norm());
    r.error_3d.push_back(d.norm());
    if (arc[i] >= end - 1e-9) break;  // first sample at or past the end brackets it
  }
  r.error_25 = error_at(r, 0.5 * opts.section_length);
  r.error_50 = error_at(r, opts.section_length);
  SectionResult r3 = r;
  r3.error = r.error_3d;
  r.error_3d_end = error_at(r3, opts.section_length);
  r.r2 = linear_r2(r.distance, r.error);
  return r;
}

void DriftReport::aggregate() {
  std::vector<double> e25, e50, pct, r2;
  for (const auto& s : sections) {
    e25.push_back(s.error_25);
    e50.push_back(s.error_50);
    pct.push_back(100.0 * s.error_50 / options.section_length);
    r2.push_back(s.r2);
  }
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  mean_error_25 = mean(e25);
  mean_error_50 = mean(e50);
  mean_drift_percent = mean(pct);
  median_drift_percent = percentile(pct, 0.5);
  p90_drift_percent = percentile(pct, 0.9);
  mean_r2 = mean(r2);
  median_r2 = percentile(r2, 0.5);
  min_r2 = r2.empty() ? 0.0 : *std::min_element(r2.begin(), r2.end());
}

std::string DriftReport::to_json() const {
  nlohmann::ordered_json j;
  j["algorithm"] = algorithm;
  j["section_length"] = options.section_length;
  j["align_span"] = options.align_span;
  j["alignment"] = options.alignment == AlignmentMode::kHeading ? "heading" : "rigid";
  j["mean_error_25"] = mean_error_25;
  j["mean_error_50"] = mean_error_50;
  j["mean_drift_percent"] = mean_drift_percent;
  j["median_drift_percent"] = median_drift_percent;
  j["p90_drift_percent"] = p90_drift_percent;
  j["mean_r2"] = mean_r2;
  j["median_r2"] = median_r2;
  j["min_r2"] = min_r2;
  auto& arr = j["sections"] = nlohmann::ordered_json::array();
  for (const auto& s : sections) {
    nlohmann::ordered_json js;
    js["id"] = s.id;
    js["start"] = s.start;
    js["error_25"] = s.error_25;
    js["error_50"] = s.error_50;
    js["error_3d_end"] = s.error_3d_end;
    js["r2"] = s.r2;
    js["fallback_alignment"] = s.fallback_alignment;
    js["distance"] = s.distance;
    js["error"] = s.error;
    arr.push_back(js);
  }
  return j.dump(2) + "\n";
}

DriftReport drift_metrics(const EstimateTrack& est, const std::vector<GroundTruthSample>& truth,
                          const DriftOptions& opts, const std::string& algorithm) {
  opts.validate();
  const std::vector<double> arc = arc_length(truth);
  const double need = opts.align_span + opts.section_length;
  if (arc.empty() || arc.back() < need - 1e-9) throw InvalidArgument("drift_metrics: truth shorter than one section");
  DriftReport rep;
  rep.algorithm = algorithm;
  rep.options = opts;
  const double spare = arc.back() - need;
  for (int i = 0; i < opts.sections; ++i) {
    const double s0 = opts.sections == 1 ? 0.0 : spare * i / (opts.sections - 1);
    rep.sections.push_back(section_drift(est, truth, arc, s0, opts, i));
  }
  rep.aggregate();
  return rep;
}

double final_error(const EstimateTrack& est, const std::vector<GroundTruthSample>& truth) {
  const GroundTruthSample* first = nullptr;
  const GroundTruthSample* last = nullptr;
  for (const auto& s : truth) {
    if (!est.covers(s.t)) continue;
    if (!first) first = &s;
    last = &s;
  }
  if (!first) throw InvalidArgument("final_error: estimate does not overlap the truth");
  const Eigen::Vector3d offset = est.receiver_at(first->t) - first->position;
  return (est.receiver_at(last->t) - offset - last->position).head<2>().norm();
}

namespace {

Eigen::Vector3d truth_at(const std::vector<GroundTruthSample>& truth, const GpsTime& t) {
  if (truth.empty() || t < truth.front().t || truth.back().t < t) {
    throw InvalidArgument("interval_error: time outside the truth track");
  }
  const auto it = std::lower_bound(truth.begin(), truth.end(), t,
                                   [](const GroundTruthSample& s, const GpsTime& x) { return s.t < x; });
  if (it == truth.begin()) return it->position;
  const auto prev = it - 1;
  const double span = it->t - prev->t;
  const double w = span > 0.0 ? (t - prev->t) / span : 1.0;
  return prev->position + w * (it->position - prev->position);
}

}  // namespace

double interval_error(const EstimateTrack& est, const std::vector<GroundTruthSample>& truth, const GpsTime& t0,
                      const GpsTime& t1) {
  if (!est.covers(t0) || !est.covers(t1)) throw InvalidArgument("interval_error: estimate does not cover the interval");
  const Eigen::Vector3d d_est = est.receiver_at(t1) - est.receiver_at(t0);
  const Eigen::Vector3d d_true = truth_at(truth, t1) - truth_at(truth, t0);
  return (d_est - d_true).head<2>().norm();
}

}  // namespace tdcp
