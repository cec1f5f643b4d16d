#pragma once

#include <cstdint>
#include <string>
#include <utility>

namespace so3sr {

// One experiment invocation: the subcommand plus every knob it may read.
// Fields left at their zero value pick per-subcommand defaults (N, near_mesh,
// lambda, out).
struct ExperimentConfig {
  std::string subcommand;
  int s = 8;
  int N = 0;            // 0 picks the per-subcommand default
  double nu = 36.0;
  double b = 28.0;
  int M = 3;
  std::uint64_t seed = 0;
  long samples = 10000;          // localization / offdiag probe count
  std::string patterns = "all";  // "all" or a positive count
  double near_mesh = 0.0;        // 0 picks pi/(8(N+1))
  long far_samples = 2000;
  double margin = 1e-3;
  double eps = 0.0;     // off-diagonal wobble fraction
  double resolution = 0.5;
  double lambda = 0.0;  // <= 0: auto, see RecoveryConfig
  int iters = 2000;
  std::string out;      // output path; "" picks the subcommand default
};

// Fills the per-subcommand defaults (constants: N = 20, localization: 64,
// offdiag/certificate: 40, recover: 24; default artifact names).
ExperimentConfig with_defaults(ExperimentConfig config);

// Checks every field against the hypothesis ranges of the module the
// subcommand feeds; throws std::invalid_argument naming the violated
// hypothesis.
void validate_config(const ExperimentConfig& config);

// Payload builders.  Deterministic given the config; the bool is the
// hard-assertion verdict that becomes the exit status.  JSON builders place
// a "timestamp" field when one is supplied (the one byte-level difference
// permitted between reruns).
std::string constants_csv(const ExperimentConfig& config);
std::pair<bool, std::string> localization_csv(const ExperimentConfig& config);
std::pair<bool, std::string> offdiag_csv(const ExperimentConfig& config);
std::pair<bool, std::string> certificate_json(const ExperimentConfig& config,
                                              const std::string& timestamp = "");
std::pair<bool, std::string> recovery_json(const ExperimentConfig& config,
                                           const std::string& timestamp = "");

// Temp file + rename in the target directory.
void write_atomic(const std::string& path, const std::string& payload);

struct RunOutcome {
  int exit_code = 0;  // 0 iff the suite's hard assertions passed
  std::string artifact;
};

// with_defaults + validate_config + payload + atomic write.
RunOutcome run_experiment(const ExperimentConfig& config);

}  // namespace so3sr
