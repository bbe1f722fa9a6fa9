#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lpvh2::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kInfeasible = 2,
  kSolverFailure = 3,
  kVerificationFailed = 4,
  kSingularAttitude = 5,
};

/// Parameters of one run. The manifest records them with defaults resolved.
struct RunConfig {
  std::string command;
  std::string plant;
  std::optional<double> epsilon;
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 200;
  /// Unset selects the command default: 1e-3 s for simulate, 1e-4 s for
  /// demo-innerloop; horizon 10 s for both.
  std::optional<double> dt;
  std::optional<double> horizon;
  std::string out = "lpvh2_out";
  std::vector<double> gains = {4.0, 4.0, 4.0, 4.0, 2.0};
  std::vector<double> cmd = {0.2, -0.1, 0.3};
  std::vector<double> inertia = {0.0123, 0.0123, 0.0224};
  std::vector<double> init = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  std::string gain_file;
  std::string result_file;
  std::string dump_sdp;
};

int cmd_synth(const RunConfig& config);
int cmd_verify(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_demo_innerloop(const RunConfig& config);

/// Parses arguments (without the program name) and dispatches. Messages go
/// to `err`; LPVH2_LOG (trace, debug, info, warn, error, off) sets the log
/// level, default warn.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace lpvh2::cli
