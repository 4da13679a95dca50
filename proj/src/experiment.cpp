#include "tdcp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tdcp/baselines.hpp"
#include "tdcp/error.hpp"

namespace tdcp {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kTdcp: return "tdcp";
    case Algorithm::kTdcpRelPose: return "tdcp_relpose";
    case Algorithm::kTdcpDense: return "tdcp_dense";
    case Algorithm::kDoppler: return "doppler";
    case Algorithm::kPseudorange: return "pseudorange";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::kTdcp, Algorithm::kTdcpRelPose, Algorithm::kTdcpDense, Algorithm::kDoppler,
                      Algorithm::kPseudorange}) {
    if (to_string(a) == name) return a;
  }
  throw InvalidArgument("unknown algorithm '" + name + "'");
}

void SuiteConfig::validate() const {
  if (variants.empty()) throw InvalidArgument("suite: no scenario variants");
  if (seeds < 1) throw InvalidArgument("suite: seeds must be >= 1");
  if (threads < 0) throw InvalidArgument("suite: threads must be >= 0");
  if (algorithms.empty()) throw InvalidArgument("suite: no algorithms");
  drift.validate();
  graph.validate();
  std::map<std::string, int> names;
  for (const auto& v : variants) {
    if (++names[v.name] > 1) throw InvalidArgument("suite: duplicate variant '" + v.name + "'");
    v.scenario.config.validate();
    v.scenario.budget.validate();
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double suite_number(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ParseError("suite: bad number for " + key + ": '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(d)) throw ParseError("suite: bad number for " + key + ": '" + v + "'");
  return d;
}

int suite_int(const std::string& key, const std::string& v) {
  const double d = suite_number(key, v);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw ParseError("suite: " + key + " must be an integer");
  return static_cast<int>(d);
}

// Consumes a suite-level key; false when the line belongs to the scenario.
bool apply_suite_key(SuiteConfig& s, const std::string& key, const std::string& value) {
  if (key == "seeds") {
    s.seeds = suite_int(key, value);
  } else if (key == "first_seed") {
    const int v = suite_int(key, value);
    if (v < 0) throw ParseError("suite: first_seed must be >= 0");
    s.first_seed = static_cast<std::uint64_t>(v);
  } else if (key == "threads") {
    s.threads = suite_int(key, value);
  } else if (key == "sections") {
    s.drift.sections = suite_int(key, value);
  } else if (key == "section_length") {
    s.drift.section_length = suite_number(key, value);
  } else if (key == "align_span") {
    s.drift.align_span = suite_number(key, value);
  } else if (key == "alignment") {
    if (value != "rigid" && value != "heading") throw ParseError("suite: alignment must be rigid or heading");
    s.drift.alignment = value == "heading" ? AlignmentMode::kHeading : AlignmentMode::kRigid;
  } else if (key == "window") {
    s.graph.window_length = suite_number(key, value);
  } else if (key == "sigma_dd") {
    s.graph.sigma_dd = suite_number(key, value);
  } else if (key == "algorithms") {
    s.algorithms.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      try {
        s.algorithms.push_back(parse_algorithm(item));
      } catch (const InvalidArgument& e) {
        throw ParseError(std::string("suite: ") + e.what());
      }
    }
  } else {
    return false;
  }
  return true;
}

}  // namespace

SuiteConfig parse_suite(std::istream& in) {
  SuiteConfig s;
  std::string shared;
  std::vector<std::pair<std::string, std::string>> blocks;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string raw = line;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ParseError("suite line " + std::to_string(lineno) + ": bad header");
      blocks.emplace_back(trim(line.substr(1, line.size() - 2)), std::string{});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("suite line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (apply_suite_key(s, key, value)) {
      if (!blocks.empty()) throw ParseError("suite line " + std::to_string(lineno) + ": " + key + " must precede variants");
      continue;
    }
    (blocks.empty() ? shared : blocks.back().second) += raw + "\n";
  }
  if (blocks.empty()) blocks.emplace_back("default", std::string{});
  for (const auto& [name, text] : blocks) {
    std::istringstream scenario_text(shared + text);
    try {
      s.variants.push_back({name, parse_scenario(scenario_text)});
    } catch (const ParseError& e) {
      throw ParseError("suite variant '" + name + "': " + e.what());
    }
  }
  s.validate();
  return s;
}

SuiteConfig parse_suite(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_suite(in);
}

AlgorithmOutput run_algorithm(Algorithm a, const SimulationResult& sim, const GraphConfig& graph) {
  AlgorithmOutput out;
  switch (a) {
    case Algorithm::kTdcp:
    case Algorithm::kTdcpRelPose:
    case Algorithm::kTdcpDense: {
      GraphConfig g = graph;
      g.lever_arm = sim.lever_arm;
      g.tdcp_topology = a == Algorithm::kTdcpDense ? TdcpTopology::kDense : TdcpTopology::kConsecutive;
      g.use_rel_pose_factors = a == Algorithm::kTdcpRelPose;
      const auto rel = a == Algorithm::kTdcpRelPose ? sim.rel_pose : std::vector<RelPoseMeasurement>{};
      out.trajectory = run_tdcp(sim.observations, sim.nav, g, rel, &out.frame);
      out.lever_arm = sim.lever_arm;
      break;
    }
    case Algorithm::kDoppler: {
      PseudorangeOptions opts;
      opts.mask_angle = graph.mask_angle;
      DopplerTrack track = doppler_odometry(sim.observations, sim.nav, std::nullopt, opts);
      out.trajectory = std::move(track.trajectory);
      out.frame = track.frame;
      break;
    }
    case Algorithm::kPseudorange: {
      if (sim.observations.empty()) throw InvalidArgument("pseudorange: no epochs");
      PseudorangeOptions opts;
      opts.mask_angle = graph.mask_angle;
      out.frame = EnuFrame::at(pseudorange_fix(sim.observations.front(), sim.nav, opts).position);
      out.trajectory = pseudorange_track(sim.observations, sim.nav, out.frame, opts);
      break;
    }
  }
  return out;
}

EstimateTrack to_truth_frame(const AlgorithmOutput& out, const SimulationResult& sim) {
  return EstimateTrack{transform_trajectory(out.trajectory, enu_transform(out.frame, sim.frame)), out.lever_arm};
}

namespace {

double horizontal_rms(const EstimateTrack& est, const std::vector<GroundTruthSample>& truth) {
  double ss = 0.0;
  int n = 0;
  for (const auto& s : truth) {
    if (!est.covers(s.t)) continue;
    ss += (est.receiver_at(s.t) - s.position).head<2>().squaredNorm();
    ++n;
  }
  if (n == 0) throw InvalidArgument("estimate does not overlap the truth track");
  return std::sqrt(ss / n);
}

RunResult evaluate(Algorithm a, const SimulationResult& sim, const std::vector<DropoutWindow>& dropouts,
                   const SuiteConfig& suite) {
  RunResult r;
  r.algorithm = a;
  r.visible_median = sim.visibility.median;
  const EstimateTrack est = to_truth_frame(run_algorithm(a, sim, suite.graph), sim);
  r.final_error = final_error(est, sim.truth);
  r.horizontal_rms = horizontal_rms(est, sim.truth);
  if (!dropouts.empty()) {
    const GpsTime t0 = sim.truth.front().t + dropouts.front().start;
    r.dropout_error = interval_error(est, sim.truth, t0, t0 + dropouts.front().duration);
  }
  r.drift = drift_metrics(est, sim.truth, suite.drift, to_string(a));
  r.ok = true;
  return r;
}

template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  auto loop = [&]() {
    for (std::size_t i = next++; i < n; i = next++) f(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<RunResult> run_suite(const SuiteConfig& suite) {
  suite.validate();
  const std::size_t nv = suite.variants.size();
  const auto ns = static_cast<std::size_t>(suite.seeds);
  const std::size_t na = suite.algorithms.size();

  std::vector<SimulationResult> sims(nv * ns);
  std::vector<std::string> sim_errors(nv * ns);
  parallel_for(nv * ns, suite.threads, [&](std::size_t i) {
    ScenarioConfig cfg = suite.variants[i / ns].scenario.config;
    cfg.seed = suite.first_seed + i % ns;
    try {
      sims[i] = simulate(cfg, suite.variants[i / ns].scenario.budget);
    } catch (const std::exception& e) {
      sim_errors[i] = std::string("simulate: ") + e.what();
    }
  });

  std::vector<RunResult> results(nv * ns * na);
  parallel_for(results.size(), suite.threads, [&](std::size_t i) {
    const std::size_t job = i / na;
    const Algorithm a = suite.algorithms[i % na];
    RunResult r;
    if (sim_errors[job].empty()) {
      try {
        r = evaluate(a, sims[job], suite.variants[job / ns].scenario.config.dropouts, suite);
      } catch (const std::exception& e) {
        r = RunResult{};
        r.error = e.what();
      }
    } else {
      r.error = sim_errors[job];
    }
    r.variant = suite.variants[job / ns].name;
    r.seed = suite.first_seed + job % ns;
    r.algorithm = a;
    results[i] = std::move(r);
  });
  return results;
}

namespace {

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string csv_text(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    if (c != '\n' && c != '\r') out += c;
  }
  return out + "\"";
}

// Mean section error at each whole metre of the section.
std::vector<double> mean_curve(const std::vector<const RunResult*>& runs, double length) {
  const int n = static_cast<int>(std::floor(length)) + 1;
  std::vector<double> sum(n, 0.0);
  int count = 0;
  for (const RunResult* r : runs) {
    for (const auto& s : r->drift.sections) {
      for (int d = 0; d < n; ++d) sum[d] += error_at(s, d);
      ++count;
    }
  }
  if (count > 0) {
    for (double& v : sum) v /= count;
  }
  return sum;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string curves_svg(const std::string& title, const std::vector<std::pair<std::string, std::vector<double>>>& curves) {
  const double w = 640, h = 400, left = 60, right = 150, top = 30, bottom = 50;
  double xmax = 1.0, ymax = 0.0;
  for (const auto& [name, c] : curves) {
    xmax = std::max(xmax, static_cast<double>(c.size() - 1));
    for (double v : c) ymax = std::max(ymax, v);
  }
  ymax = ymax > 0.0 ? ymax * 1.1 : 1.0;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](double x) { return fmt(left + pw * x / xmax, 2); };
  auto py = [&](double y) { return fmt(top + ph * (1.0 - y / ymax), 2); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << left << "\" y=\"18\">" << title << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmax * i / 5.0, yv = ymax * i / 5.0;
    o << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << fmt(xv, 0) << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) << "\" text-anchor=\"end\">" << fmt(yv, 2) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">distance travelled (m)</text>\n";
  o << "<text x=\"14\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 14 " << top + ph / 2
    << ")\" text-anchor=\"middle\">horizontal error (m)</text>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const char* colour = kPalette[k % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    const auto& c = curves[k].second;
    for (std::size_t i = 0; i < c.size(); ++i) o << (i ? " " : "") << px(static_cast<double>(i)) << "," << py(c[i]);
    o << "\"/>\n";
    const double ly = top + 10 + 18.0 * k;
    o << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 30 << "\" y2=\"" << ly
      << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 4 << "\">" << curves[k].first << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("cannot write " + path.string());
}

}  // namespace

void write_suite_outputs(const SuiteConfig& suite, const std::vector<RunResult>& results,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::ostringstream runs;
  runs << "variant,seed,algorithm,ok,final_error_m,horizontal_rms_m,dropout_error_m,mean_error_25_m,mean_error_50_m,"
          "mean_drift_percent,median_r2,visible_median,error\n";
  std::ostringstream sections;
  sections << "variant,seed,algorithm,section,start_m,error_25_m,error_50_m,error_3d_50_m,r2,fallback_alignment\n";
  for (const auto& r : results) {
    runs << r.variant << "," << r.seed << "," << to_string(r.algorithm) << "," << (r.ok ? 1 : 0) << ","
         << fmt(r.final_error) << "," << fmt(r.horizontal_rms) << "," << (r.dropout_error >= 0.0 ? fmt(r.dropout_error) : "")
         << "," << fmt(r.drift.mean_error_25) << "," << fmt(r.drift.mean_error_50) << ","
         << fmt(r.drift.mean_drift_percent) << "," << fmt(r.drift.median_r2) << "," << fmt(r.visible_median, 1) << ","
         << csv_text(r.error) << "\n";
    for (const auto& s : r.drift.sections) {
      sections << r.variant << "," << r.seed << "," << to_string(r.algorithm) << "," << s.id << "," << fmt(s.start, 2)
               << "," << fmt(s.error_25) << "," << fmt(s.error_50) << "," << fmt(s.error_3d_end) << "," << fmt(s.r2)
               << "," << (s.fallback_alignment ? 1 : 0) << "\n";
    }
  }
  write_file(dir / "runs.csv", runs.str());
  write_file(dir / "sections.csv", sections.str());

  nlohmann::ordered_json summary;
  summary["seeds"] = suite.seeds;
  summary["first_seed"] = suite.first_seed;
  summary["sections"] = suite.drift.sections;
  summary["section_length_m"] = suite.drift.section_length;
  summary["align_span_m"] = suite.drift.align_span;
  summary["alignment"] = suite.drift.alignment == AlignmentMode::kHeading ? "heading" : "rigid";
  std::ostringstream curves_csv;
  curves_csv << "variant,algorithm,distance_m,mean_error_m\n";

  for (const auto& v : suite.variants) {
    nlohmann::ordered_json jv;
    std::vector<std::pair<std::string, std::vector<double>>> curves;
    std::map<Algorithm, std::vector<const RunResult*>> by_alg;
    for (const auto& r : results) {
      if (r.variant == v.name && r.ok) by_alg[r.algorithm].push_back(&r);
    }
    for (Algorithm a : suite.algorithms) {
      const auto& runs_a = by_alg[a];
      std::vector<double> fe, rms, de, e25, e50, pct, r2;
      for (const RunResult* r : runs_a) {
        fe.push_back(r->final_error);
        rms.push_back(r->horizontal_rms);
        if (r->dropout_error >= 0.0) de.push_back(r->dropout_error);
        e25.push_back(r->drift.mean_error_25);
        e50.push_back(r->drift.mean_error_50);
        pct.push_back(r->drift.mean_drift_percent);
        for (const auto& s : r->drift.sections) r2.push_back(s.r2);
      }
      nlohmann::ordered_json ja;
      ja["runs"] = runs_a.size();
      ja["failed"] = static_cast<std::size_t>(suite.seeds) - runs_a.size();
      ja["mean_final_error_m"] = mean_of(fe);
      ja["median_final_error_m"] = median_of(fe);
      ja["mean_horizontal_rms_m"] = mean_of(rms);
      if (!de.empty()) ja["mean_dropout_error_m"] = mean_of(de);
      ja["mean_error_25_m"] = mean_of(e25);
      ja["mean_error_50_m"] = mean_of(e50);
      ja["mean_drift_percent"] = mean_of(pct);
      ja["median_section_r2"] = median_of(r2);
      jv[to_string(a)] = ja;

      const auto curve = mean_curve(runs_a, suite.drift.section_length);
      for (std::size_t d = 0; d < curve.size(); ++d) {
        curves_csv << v.name << "," << to_string(a) << "," << d << "," << fmt(curve[d]) << "\n";
      }
      curves.emplace_back(to_string(a), curve);
    }
    summary["variants"][v.name] = jv;
    write_file(dir / ("curves_" + v.name + ".svg"), curves_svg(v.name + ": mean error over " +
                                                                   fmt(suite.drift.section_length, 0) + " m sections",
                                                               curves));
  }
  write_file(dir / "curves.csv", curves_csv.str());
  write_file(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace tdcp
