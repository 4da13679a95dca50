#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tdcp/eval.hpp"
#include "tdcp/pipeline.hpp"
#include "tdcp/simulator.hpp"

namespace tdcp {

enum class Algorithm { kTdcp, kTdcpRelPose, kTdcpDense, kDoppler, kPseudorange };

std::string to_string(Algorithm a);
/// Accepts tdcp, tdcp_relpose, tdcp_dense, doppler, pseudorange.
Algorithm parse_algorithm(const std::string& name);

struct SuiteVariant {
  std::string name;
  Scenario scenario;
};

/// Suite file: `key = value` lines. Suite keys (seeds, first_seed, threads, sections,
/// section_length, align_span, alignment, algorithms, window, sigma_dd) are consumed;
/// every other line is scenario text. A `[name]` header starts a variant whose lines are appended
/// to the shared scenario lines before it.
struct SuiteConfig {
  std::vector<SuiteVariant> variants;
  int seeds = 5;
  std::uint64_t first_seed = 1;
  int threads = 0;  ///< 0: hardware concurrency
  DriftOptions drift;
  GraphConfig graph;
  std::vector<Algorithm> algorithms{Algorithm::kTdcp, Algorithm::kTdcpRelPose, Algorithm::kDoppler,
                                    Algorithm::kPseudorange};

  void validate() const;
};

SuiteConfig parse_suite(std::istream& in);
SuiteConfig parse_suite(const std::filesystem::path& path);

/// Estimate of one algorithm on one simulated run, in the estimator's own frame.
struct AlgorithmOutput {
  Trajectory trajectory;
  EnuFrame frame;
  Eigen::Vector3d lever_arm = Eigen::Vector3d::Zero();
};

/// TDCP variants take `graph` with topology and rel-pose use overridden by the algorithm.
AlgorithmOutput run_algorithm(Algorithm a, const SimulationResult& sim, const GraphConfig& graph);

/// Estimate moved into the simulation frame.
EstimateTrack to_truth_frame(const AlgorithmOutput& out, const SimulationResult& sim);

struct RunResult {
  std::string variant;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::kTdcp;
  bool ok = false;
  std::string error;
  double final_error = 0.0;
  double horizontal_rms = 0.0;  ///< absolute, no alignment
  double dropout_error = -1.0;  ///< interval error over the first dropout, -1 without one
  double visible_median = 0.0;
  DriftReport drift;
};

/// Every (variant, seed, algorithm) combination, simulated once per (variant, seed).
/// Results are ordered by variant, seed and algorithm regardless of thread count.
std::vector<RunResult> run_suite(const SuiteConfig& suite);

/// runs.csv, sections.csv, curves.csv, summary.json and one curves_<variant>.svg each.
void write_suite_outputs(const SuiteConfig& suite, const std::vector<RunResult>& results,
                         const std::filesystem::path& dir);

}  // namespace tdcp
