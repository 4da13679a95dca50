#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdcp/baselines.hpp"
#include "tdcp/csv_io.hpp"
#include "tdcp/error.hpp"
#include "tdcp/eval.hpp"
#include "tdcp/experiment.hpp"
#include "tdcp/pipeline.hpp"
#include "tdcp/rinex.hpp"
#include "tdcp/simulator.hpp"

namespace fs = std::filesystem;
using namespace tdcp;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kParse = 3, kNumerical = 4, kInvalid = 5 };

int report(const char* kind, const std::string& message, int code) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << "\n";
  return code;
}

struct Inputs {
  std::vector<ObservationEpoch> epochs;
  NavigationData nav;
};

Inputs load_inputs(const std::string& obs, const std::string& nav) {
  Inputs in;
  ObsParseResult r = parse_rinex_obs(fs::path(obs));
  if (r.skipped > 0) std::cerr << "warning: skipped " << r.skipped << " undecodable records in " << obs << "\n";
  in.epochs = std::move(r.epochs);
  in.nav = parse_rinex_nav(fs::path(nav));
  return in;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

Eigen::Vector3d parse_vector(const std::string& text) {
  Eigen::Vector3d v;
  char c1 = 0, c2 = 0;
  std::istringstream ss(text);
  if (!(ss >> v.x() >> c1 >> v.y() >> c2 >> v.z()) || c1 != ',' || c2 != ',' || !(ss >> std::ws).eof()) {
    throw InvalidArgument("expected x,y,z but got '" + text + "'");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-differenced carrier phase GPS odometry"};
  app.require_subcommand(1);

  std::string config, out_dir;
  long long seed = -1;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a receiver run and write RINEX, truth and odometry files");
  sim_cmd->add_option("--config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  sim_cmd->add_option("--seed", seed, "Override the scenario seed")->check(CLI::NonNegativeNumber);

  std::string obs, nav, rel_pose, out, topology = "consecutive", lever = "";
  double window = 10.0;
  bool no_iono = false, no_tropo = false;
  auto* est_cmd = app.add_subcommand("estimate", "Run sliding-window TDCP odometry");
  est_cmd->add_option("--obs", obs, "RINEX observation file")->required()->check(CLI::ExistingFile);
  est_cmd->add_option("--nav", nav, "RINEX navigation file")->required()->check(CLI::ExistingFile);
  est_cmd->add_option("--rel-pose", rel_pose, "Relative pose CSV")->check(CLI::ExistingFile);
  est_cmd->add_option("--topology", topology, "TDCP factor topology")->check(CLI::IsMember({"consecutive", "dense"}));
  est_cmd->add_option("--window", window, "Window length, s");
  est_cmd->add_flag("--no-iono", no_iono, "Skip the ionosphere correction");
  est_cmd->add_flag("--no-tropo", no_tropo, "Skip the troposphere correction");
  est_cmd->add_option("--lever-arm", lever, "Antenna offset in the vehicle frame, x,y,z m");
  est_cmd->add_option("--out", out, "Trajectory CSV")->required();

  std::string method;
  auto* base_cmd = app.add_subcommand("baseline", "Single-receiver pseudorange or integrated Doppler track");
  base_cmd->add_option("--method", method, "Baseline")->required()->check(CLI::IsMember({"pseudorange", "doppler"}));
  base_cmd->add_option("--obs", obs, "RINEX observation file")->required()->check(CLI::ExistingFile);
  base_cmd->add_option("--nav", nav, "RINEX navigation file")->required()->check(CLI::ExistingFile);
  base_cmd->add_option("--out", out, "Trajectory CSV")->required();

  std::string estimate, truth;
  DriftOptions drift;
  auto* eval_cmd = app.add_subcommand("eval", "Drift over aligned sections of a truth track");
  eval_cmd->add_option("--estimate", estimate, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--truth", truth, "Ground truth CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--sections", drift.sections, "Number of sections");
  eval_cmd->add_option("--length", drift.section_length, "Section length, m");
  eval_cmd->add_option("--align", drift.align_span, "Alignment span before each section, m");
  std::string alignment = "rigid";
  eval_cmd->add_option("--alignment", alignment, "Section alignment")->check(CLI::IsMember({"rigid", "heading"}));
  eval_cmd->add_option("--out", out, "JSON report")->required();

  std::string suite_path;
  int threads = -1;
  auto* exp_cmd = app.add_subcommand("experiment", "Simulate, estimate and evaluate a suite of matched seeds");
  exp_cmd->add_option("--suite", suite_path, "Suite file")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  exp_cmd->add_option("--threads", threads, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim_cmd) {
      Scenario s = parse_scenario(fs::path(config));
      if (seed >= 0) s.config.seed = static_cast<std::uint64_t>(seed);
      const SimulationResult sim = simulate(s.config, s.budget);
      write_simulation(sim, out_dir);
      std::ofstream(fs::path(out_dir) / "scenario.txt", std::ios::binary) << format_scenario(s);
    } else if (*est_cmd) {
      const Inputs in = load_inputs(obs, nav);
      GraphConfig g;
      g.window_length = window;
      g.tdcp_topology = topology == "dense" ? TdcpTopology::kDense : TdcpTopology::kConsecutive;
      g.use_iono = !no_iono;
      g.use_tropo = !no_tropo;
      if (!lever.empty()) g.lever_arm = parse_vector(lever);
      std::vector<RelPoseMeasurement> rel;
      if (!rel_pose.empty()) {
        rel = parse_rel_pose(fs::path(rel_pose));
        g.use_rel_pose_factors = true;
      }
      g.validate();
      EnuFrame frame;
      const Trajectory traj = run_tdcp(in.epochs, in.nav, g, rel, &frame);
      ensure_parent(out);
      export_trajectory(traj, frame, g.lever_arm, out);
    } else if (*base_cmd) {
      const Inputs in = load_inputs(obs, nav);
      if (in.epochs.empty()) throw InvalidArgument("no epochs in " + obs);
      ensure_parent(out);
      if (method == "doppler") {
        const DopplerTrack track = doppler_odometry(in.epochs, in.nav);
        write_trajectory(track.trajectory, Eigen::Vector3d::Zero(), fs::path(out), track.frame.origin_geodetic());
      } else {
        const EnuFrame frame = EnuFrame::at(pseudorange_fix(in.epochs.front(), in.nav).position);
        const Trajectory traj = pseudorange_track(in.epochs, in.nav, frame);
        write_trajectory(traj, Eigen::Vector3d::Zero(), fs::path(out), frame.origin_geodetic());
      }
    } else if (*eval_cmd) {
      drift.alignment = alignment == "heading" ? AlignmentMode::kHeading : AlignmentMode::kRigid;
      drift.validate();
      const TrajectoryFile est_file = read_trajectory(fs::path(estimate));
      const GroundTruthFile truth_file = parse_ground_truth(fs::path(truth));
      Trajectory traj = est_file.trajectory;
      if (est_file.enu_origin && truth_file.enu_origin) {
        traj = transform_trajectory(traj, enu_transform(EnuFrame(*est_file.enu_origin), EnuFrame(*truth_file.enu_origin)));
      } else if (est_file.enu_origin.has_value() != truth_file.enu_origin.has_value()) {
        throw InvalidArgument("only one of the estimate and truth files names its ENU origin");
      }
      const EstimateTrack track{traj, est_file.lever_arm()};
      const DriftReport rep = drift_metrics(track, truth_file.samples, drift, fs::path(estimate).stem().string());
      nlohmann::ordered_json j = nlohmann::ordered_json::parse(rep.to_json());
      j["final_error_m"] = final_error(track, truth_file.samples);
      ensure_parent(out);
      std::ofstream f(out, std::ios::binary);
      if (!f) throw Error("cannot write " + out);
      f << j.dump(2) << "\n";
    } else if (*exp_cmd) {
      SuiteConfig suite = parse_suite(fs::path(suite_path));
      if (threads >= 0) suite.threads = threads;
      const auto results = run_suite(suite);
      write_suite_outputs(suite, results, out_dir);
      int failed = 0;
      for (const auto& r : results) failed += r.ok ? 0 : 1;
      if (failed > 0) std::cerr << "warning: " << failed << " of " << results.size() << " runs failed, see runs.csv\n";
    }
  } catch (const ParseError& e) {
    return report("parse", e.what(), kParse);
  } catch (const NumericalError& e) {
    return report("numerical", e.what(), kNumerical);
  } catch (const InvalidArgument& e) {
    return report("invalid_argument", e.what(), kInvalid);
  } catch (const std::exception& e) {
    return report("failure", e.what(), kFailure);
  }
  return kOk;
}
