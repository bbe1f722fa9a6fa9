#include "lpvh2_cli.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "lpvh2/attitude_dynamics.h"
#include "lpvh2/errors.h"
#include "lpvh2/h2_analysis.h"
#include "lpvh2/inner_loop.h"
#include "lpvh2/lmi_synthesis.h"
#include "lpvh2/lpv_model.h"
#include "lpvh2/numeric_format.h"
#include "lpvh2/plant_io.h"
#include "lpvh2/sdp.h"

namespace lpvh2::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = std::make_shared<spdlog::logger>(
        "lpvh2", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("lpvh2 [%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("LPVH2_LOG")) {
      level = spdlog::level::from_str(env);
    }
    l->set_level(level);
    return l;
  }();
  return log;
}

// Sends log output to `os` until destroyed.
class LogRedirect {
 public:
  explicit LogRedirect(std::ostream& os) : saved_(logger()->sinks()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(os, true);
    sink->set_pattern("lpvh2 [%l] %v");
    logger()->sinks() = {sink};
  }
  ~LogRedirect() { logger()->sinks() = saved_; }
  LogRedirect(const LogRedirect&) = delete;
  LogRedirect& operator=(const LogRedirect&) = delete;

 private:
  std::vector<spdlog::sink_ptr> saved_;
};

json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_significant(v);
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw InvalidArgument("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

template <class Writer>
void write_with(const fs::path& path, Writer writer) {
  std::ostringstream os;
  writer(os);
  write_file(path, os.str());
}

double resolved_dt(const RunConfig& c) {
  if (c.dt) return *c.dt;
  return c.command == "demo-innerloop" ? 1e-4 : 1e-3;
}

double resolved_horizon(const RunConfig& c) { return c.horizon.value_or(10.0); }

json parameters_json(const RunConfig& c) {
  json p;
  p["command"] = c.command;
  if (c.command == "synth" || c.command == "verify") {
    p["plant"] = c.plant;
  }
  if (c.command == "synth") {
    p["epsilon"] = c.epsilon ? number(*c.epsilon) : json("default");
    p["feas_tol"] = number(c.feas_tol);
    p["gap_tol"] = number(c.gap_tol);
    p["max_iter"] = c.max_iter;
    if (!c.dump_sdp.empty()) p["dump_sdp"] = c.dump_sdp;
  }
  if (c.command == "verify") {
    p["gain"] = c.gain_file;
    p["result"] = c.result_file.empty() ? json(nullptr) : json(c.result_file);
    p["feas_tol"] = number(c.feas_tol);
    p["gap_tol"] = number(c.gap_tol);
    p["max_iter"] = c.max_iter;
  }
  if (c.command == "simulate" || c.command == "demo-innerloop") {
    p["dt"] = number(resolved_dt(c));
    p["horizon"] = number(resolved_horizon(c));
    p["gains"] = vector_json(c.gains);
    p["cmd"] = vector_json(c.cmd);
    p["inertia"] = vector_json(c.inertia);
    p["init"] = vector_json(c.init);
  }
  p["out"] = c.out;
  return p;
}

void write_manifest(const RunConfig& c, const std::vector<std::string>& outputs,
                    int exit_code) {
  json m;
  m["tool"] = "lpvh2";
  m["command"] = c.command;
  m["exit_code"] = exit_code;
  m["parameters"] = parameters_json(c);
  m["outputs"] = outputs;
  m["metadata"] = {{"timestamp", utc_timestamp()}};
  write_json(fs::path(c.out) / "manifest.json", m);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const Infeasible*>(&e)) return kInfeasible;
  if (dynamic_cast<const SingularAttitude*>(&e)) return kSingularAttitude;
  if (dynamic_cast<const SolverFailure*>(&e) ||
      dynamic_cast<const IllConditioned*>(&e) ||
      dynamic_cast<const NonFiniteState*>(&e) ||
      dynamic_cast<const RegularityViolated*>(&e)) {
    return kSolverFailure;
  }
  return kConfigError;
}

// Runs `body`, mapping exceptions to exit codes.
int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    logger()->error("{}", e.what());
    return exit_code_for(e);
  }
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be a positive number");
  }
}

void require_size(const std::vector<double>& v, std::size_t n, const char* name) {
  if (v.size() != n) {
    throw InvalidArgument(std::string(name) + " takes " + std::to_string(n) +
                          " comma-separated values, got " +
                          std::to_string(v.size()));
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidArgument(std::string(name) + " must be finite");
  }
}

void prepare_output(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec || !fs::is_directory(c.out)) {
    throw InvalidArgument("cannot create output directory " + c.out);
  }
}

SdpTolerances tolerances(const RunConfig& c) {
  require_positive(c.feas_tol, "--feas-tol");
  require_positive(c.gap_tol, "--gap-tol");
  if (c.max_iter < 1) throw InvalidArgument("--max-iter must be >= 1");
  SdpTolerances t;
  t.feas_tol = c.feas_tol;
  t.gap_tol = c.gap_tol;
  t.max_iter = c.max_iter;
  return t;
}

json vertex_reports_json(const std::vector<VertexReport>& reports) {
  json out = json::array();
  for (const VertexReport& r : reports) {
    out.push_back({{"index", r.vertex_index},
                   {"h2_norm", number(r.h2_norm)},
                   {"lyapunov_max_eig", number(r.lyapunov_max_eig)},
                   {"closed_loop_abscissa", number(r.closed_loop_abscissa)}});
  }
  return out;
}

// Common Lyapunov matrix for the closed-loop vertices:
//   min tr(P)  s.t.  P >= I,  -(Ac_i' P + P Ac_i) >= I.
// The conditions are homogeneous in P, so the unit margins lose nothing.
std::optional<Eigen::MatrixXd> find_common_lyapunov(
    const std::vector<ClosedLoopVertex>& closed, const SdpTolerances& tol) {
  const int n = static_cast<int>(closed.front().ac.rows());
  const int nv = svec_size(n);
  SdpProblem problem;
  problem.num_vars = nv;
  problem.objective = svec(Eigen::MatrixXd::Identity(n, n));

  std::vector<Eigen::MatrixXd> basis;
  for (int k = 0; k < nv; ++k) basis.push_back(smat(Eigen::VectorXd::Unit(nv, k)));

  PsdConstraint positive;
  positive.dim = n;
  positive.label = "P";
  positive.constant = svec(-Eigen::MatrixXd::Identity(n, n));
  positive.coefficients = Eigen::MatrixXd::Identity(nv, nv);
  problem.psd_constraints.push_back(positive);

  for (std::size_t i = 0; i < closed.size(); ++i) {
    PsdConstraint decay;
    decay.dim = n;
    decay.label = "decay_" + std::to_string(i);
    decay.constant = svec(-Eigen::MatrixXd::Identity(n, n));
    decay.coefficients.resize(nv, nv);
    const Eigen::MatrixXd& a = closed[i].ac;
    for (int k = 0; k < nv; ++k) {
      decay.coefficients.col(k) = svec(-(a.transpose() * basis[k] + basis[k] * a));
    }
    problem.psd_constraints.push_back(decay);
  }
  const SdpSolution s = solve_sdp(problem, tol);
  logger()->info("common Lyapunov search: {} after {} iterations",
                 to_string(s.status), s.iterations);
  if (s.status != SdpStatus::kOptimal) return std::nullopt;
  const Eigen::MatrixXd p = smat(s.x);
  return 0.5 * (p + p.transpose());
}

struct ResultFile {
  Eigen::MatrixXd x;
  std::optional<double> gamma;
};

ResultFile read_result_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError(path, 0, "cannot open file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FileFormatError(path, 0, e.what());
  }
  ResultFile r;
  if (!j.is_object() || !j.contains("X") || !j["X"].is_array() || j["X"].empty()) {
    throw FileFormatError(path, 0, "expected an object with matrix \"X\"");
  }
  const auto& rows = j["X"];
  r.x.resize(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != rows.size()) {
      throw FileFormatError(path, 0, "\"X\" must be a square matrix");
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (!rows[i][k].is_number()) {
        throw FileFormatError(path, 0, "\"X\" entries must be numbers");
      }
      r.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          rows[i][k].get<double>();
    }
  }
  if (j.contains("gamma") && j["gamma"].is_number()) r.gamma = j["gamma"].get<double>();
  return r;
}

InnerLoopGains gains_from(const RunConfig& c) {
  require_size(c.gains, 5, "--gains");
  return InnerLoopGains(Eigen::Vector2d(c.gains[0], c.gains[1]),
                        Eigen::Vector3d(c.gains[2], c.gains[3], c.gains[4]));
}

InnerLoopCommand command_from(const RunConfig& c) {
  require_size(c.cmd, 3, "--cmd");
  const InnerLoopCommand cmd{c.cmd[0], c.cmd[1], c.cmd[2]};
  check_command(cmd);
  return cmd;
}

RigidBodyParams inertia_from(const RunConfig& c) {
  require_size(c.inertia, 3, "--inertia");
  return RigidBodyParams(Eigen::Vector3d(c.inertia[0], c.inertia[1], c.inertia[2])
                             .asDiagonal()
                             .toDenseMatrix());
}

AttitudeState init_from(const RunConfig& c) {
  require_size(c.init, 6, "--init");
  AttitudeState s;
  s.lambda = Eigen::Vector3d(c.init[0], c.init[1], c.init[2]);
  s.omega = Eigen::Vector3d(c.init[3], c.init[4], c.init[5]);
  check_admissible(s.lambda);
  return s;
}

Trajectory simulate_inner_loop(const RunConfig& c, const AttitudeState& s0,
                               const InnerLoopCommand& cmd,
                               const InnerLoopGains& gains,
                               const RigidBodyParams& params) {
  require_positive(resolved_dt(c), "--dt");
  require_positive(resolved_horizon(c), "--horizon");
  return integrate(
      s0,
      [&](double, const AttitudeState& s) {
        return feedback_linearizing_torque(s, cmd, gains, params);
      },
      params, resolved_dt(c), resolved_horizon(c));
}

InnerLoopTrajectory projected(const Trajectory& traj) {
  InnerLoopTrajectory out;
  out.reserve(traj.size());
  for (const TimedState& row : traj) out.push_back({row.t, inner_loop_state(row.state)});
  return out;
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, delim)) parts.push_back(part);
  if (!s.empty() && s.back() == delim) parts.emplace_back();
  return parts;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  for (const std::string& field : split(text, ',')) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || *end != '\0') {
      throw InvalidArgument(std::string(flag) + ": invalid number \"" + field + "\"");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

int cmd_synth(const RunConfig& config) {
  RunConfig c = config;
  c.command = "synth";
  return guarded([&] {
    if (c.plant.empty()) throw InvalidArgument("--plant is required");
    if (c.epsilon) require_positive(*c.epsilon, "--epsilon");
    SynthesisOptions options;
    options.epsilon = c.epsilon;
    options.tolerances = tolerances(c);
    const PolytopicLpvPlant plant = read_plant_file(c.plant);
    const std::vector<LpvVertexSystem> vertices = instantiate_vertices(plant);
    prepare_output(c);
    std::vector<std::string> outputs;

    if (!c.dump_sdp.empty()) {
      const double eps = c.epsilon.value_or(default_epsilon(vertices));
      const LpvVertexSystem& v0 = vertices.front();
      const SdpProblem problem =
          to_sdp(assemble_lmis(vertices, eps),
                 VariableLayout(v0.num_states(), v0.num_inputs(), v0.num_outputs()));
      write_with(c.dump_sdp, [&](std::ostream& os) { write_sdp_dump(os, problem); });
    }

    json result;
    result["plant"] = plant.name;
    result["num_vertices"] = static_cast<int>(vertices.size());
    int code = kOk;
    try {
      const SynthesisResult r = synthesize(vertices, options);
      result["status"] = "optimal";
      result["gamma"] = number(r.gamma);
      result["gamma_squared"] = number(r.gamma * r.gamma);
      result["epsilon"] = number(r.epsilon);
      result["K"] = matrix_json(r.k);
      result["X"] = matrix_json(r.x);
      result["W"] = matrix_json(r.w);
      result["Y"] = matrix_json(r.y);
      result["solver"] = {{"status", to_string(r.solver_status)},
                          {"iterations", r.iterations},
                          {"relative_gap", number(r.relative_gap)},
                          {"max_psd_violation", number(r.max_psd_violation)}};
      result["x_condition"] = number(r.x_condition);
      result["ill_conditioned"] = r.ill_conditioned;
      result["vertices"] = vertex_reports_json(r.vertices);
      write_with(fs::path(c.out) / "K.csv",
                 [&](std::ostream& os) { write_matrix_csv(os, r.k); });
      outputs.push_back("K.csv");
      logger()->info("gamma = {} over {} vertices", format_number(r.gamma),
                     vertices.size());
      if (r.ill_conditioned) {
        logger()->warn("X is ill-conditioned (cond = {})", format_number(r.x_condition));
      }
    } catch (const Infeasible& e) {
      result["status"] = "infeasible";
      result["message"] = e.what();
      logger()->error("{}", e.what());
      code = kInfeasible;
    } catch (const SolverFailure& e) {
      result["status"] = "solver_failure";
      result["message"] = e.what();
      logger()->error("{}", e.what());
      code = kSolverFailure;
    }
    write_json(fs::path(c.out) / "result.json", result);
    outputs.insert(outputs.begin(), "result.json");
    outputs.push_back("manifest.json");
    write_manifest(c, outputs, code);
    return code;
  });
}

int cmd_verify(const RunConfig& config) {
  RunConfig c = config;
  c.command = "verify";
  return guarded([&] {
    if (c.plant.empty()) throw InvalidArgument("--plant is required");
    if (c.gain_file.empty()) throw InvalidArgument("--gain is required");
    const SdpTolerances tol = tolerances(c);
    const PolytopicLpvPlant plant = read_plant_file(c.plant);
    const Eigen::MatrixXd k = read_matrix_csv_file(c.gain_file);
    if (k.rows() != plant.num_inputs() || k.cols() != plant.num_states()) {
      throw FileFormatError(c.gain_file, 0,
                            "gain must be " + std::to_string(plant.num_inputs()) +
                                "x" + std::to_string(plant.num_states()));
    }
    std::optional<ResultFile> stored;
    if (!c.result_file.empty()) {
      stored = read_result_file(c.result_file);
      if (stored->x.rows() != plant.num_states()) {
        throw FileFormatError(c.result_file, 0, "X does not match the plant size");
      }
    }
    prepare_output(c);

    const std::vector<LpvVertexSystem> vertices = instantiate_vertices(plant);
    const std::vector<ClosedLoopVertex> closed = close_loop(vertices, k);
    bool passed = true;

    json report;
    report["plant"] = plant.name;
    std::optional<Eigen::MatrixXd> lyapunov;
    if (stored) {
      report["lyapunov_source"] = "result";
      Eigen::LDLT<Eigen::MatrixXd> ldlt(stored->x);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::MatrixXd p =
            ldlt.solve(Eigen::MatrixXd::Identity(stored->x.rows(), stored->x.rows()));
        lyapunov = 0.5 * (p + p.transpose());
      }
    } else {
      report["lyapunov_source"] = "search";
      lyapunov = find_common_lyapunov(closed, tol);
    }
    json qs;
    if (lyapunov) {
      const StabilityCertificate cert = verify_quadratic_stability(*lyapunov, closed, 0.0);
      qs["valid"] = cert.valid();
      qs["p_min_eig"] = number(cert.x_min_eig);
      qs["per_vertex_max_eig"] = vector_json(cert.per_vertex_max_eig);
      passed = passed && cert.valid();
    } else {
      qs["valid"] = false;
      qs["message"] = "no common Lyapunov matrix found";
      passed = false;
    }
    report["quadratic_stability"] = qs;

    json per_vertex = json::array();
    for (std::size_t i = 0; i < closed.size(); ++i) {
      json v;
      v["index"] = static_cast<int>(i);
      const double abscissa =
          Eigen::EigenSolver<Eigen::MatrixXd>(closed[i].ac, false)
              .eigenvalues()
              .real()
              .maxCoeff();
      v["closed_loop_abscissa"] = number(abscissa);
      double h2 = std::numeric_limits<double>::infinity();
      if (abscissa < -kHurwitzMargin) h2 = h2_norm(closed[i]);
      v["h2_norm"] = number(h2);
      if (!std::isfinite(h2)) passed = false;
      if (stored && stored->gamma) {
        const bool below = h2 < *stored->gamma;
        v["below_gamma"] = below;
        passed = passed && below;
      }
      per_vertex.push_back(std::move(v));
    }
    report["gamma"] = stored && stored->gamma ? number(*stored->gamma) : json(nullptr);
    report["vertices"] = per_vertex;
    report["passed"] = passed;
    write_json(fs::path(c.out) / "verification.json", report);
    const int code = passed ? kOk : kVerificationFailed;
    write_manifest(c, {"verification.json", "manifest.json"}, code);
    if (!passed) logger()->error("verification failed");
    return code;
  });
}

int cmd_simulate(const RunConfig& config) {
  RunConfig c = config;
  c.command = "simulate";
  return guarded([&] {
    const InnerLoopGains gains = gains_from(c);
    const InnerLoopCommand cmd = command_from(c);
    const RigidBodyParams params = inertia_from(c);
    const AttitudeState s0 = init_from(c);
    prepare_output(c);
    const Trajectory traj = simulate_inner_loop(c, s0, cmd, gains, params);
    write_with(fs::path(c.out) / "trajectory.csv",
               [&](std::ostream& os) { write_trajectory_csv(os, traj); });
    write_with(fs::path(c.out) / "x_il.csv",
               [&](std::ostream& os) { write_inner_loop_csv(os, projected(traj)); });
    write_manifest(c, {"trajectory.csv", "x_il.csv", "manifest.json"}, kOk);
    return static_cast<int>(kOk);
  });
}

int cmd_demo_innerloop(const RunConfig& config) {
  RunConfig c = config;
  c.command = "demo-innerloop";
  return guarded([&] {
    const InnerLoopGains gains = gains_from(c);
    const InnerLoopCommand cmd = command_from(c);
    const RigidBodyParams params = inertia_from(c);
    const AttitudeState s0 = init_from(c);
    prepare_output(c);
    const Trajectory traj = simulate_inner_loop(c, s0, cmd, gains, params);
    const InnerLoopTrajectory nonlinear = projected(traj);
    const InnerLoopTrajectory reference = simulate_reference_model(
        cmd, gains, inner_loop_state(s0), resolved_dt(c), resolved_horizon(c));

    Vector5d worst = Vector5d::Zero();
    for (std::size_t i = 0; i < nonlinear.size(); ++i) {
      worst = worst.cwiseMax((nonlinear[i].x - reference[i].x).cwiseAbs());
    }
    json report;
    report["samples"] = static_cast<int>(nonlinear.size());
    report["max_deviation"] = number(worst.maxCoeff());
    report["max_deviation_per_state"] = {
        {"phi", number(worst(0))},    {"theta", number(worst(1))},
        {"dphi", number(worst(2))},   {"dtheta", number(worst(3))},
        {"dpsi", number(worst(4))}};
    const Vector5d& last = nonlinear.back().x;
    const Eigen::Vector3d final_error(last(0) - cmd.u_phi, last(1) - cmd.u_theta,
                                      last(4) - cmd.u_psi_dot);
    report["final_tracking_error"] = number(final_error.norm());
    report["reference_spectral_abscissa"] =
        number(spectral_abscissa(build_inner_loop_lti(gains).a));

    write_with(fs::path(c.out) / "trajectory.csv",
               [&](std::ostream& os) { write_trajectory_csv(os, traj); });
    write_with(fs::path(c.out) / "x_il_nonlinear.csv",
               [&](std::ostream& os) { write_inner_loop_csv(os, nonlinear); });
    write_with(fs::path(c.out) / "x_il_reference.csv",
               [&](std::ostream& os) { write_inner_loop_csv(os, reference); });
    write_json(fs::path(c.out) / "comparison.json", report);
    write_manifest(c,
                   {"trajectory.csv", "x_il_nonlinear.csv", "x_il_reference.csv",
                    "comparison.json", "manifest.json"},
                   kOk);
    logger()->info("max deviation {}", format_number(worst.maxCoeff()));
    return static_cast<int>(kOk);
  });
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"H2 state-feedback synthesis for polytopic LPV plants and a "
               "feedback-linearized attitude loop"};
  app.name("lpvh2");
  app.require_subcommand(1);

  RunConfig c;
  double epsilon = 0.0, dt = 0.0, horizon = 0.0;
  std::string gains, cmd, inertia, init;

  auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--feas-tol", c.feas_tol, "SDP feasibility tolerance");
    sub->add_option("--gap-tol", c.gap_tol, "SDP relative duality gap tolerance");
    sub->add_option("--max-iter", c.max_iter, "SDP iteration limit");
  };
  std::vector<CLI::Option*> epsilon_opts, dt_opts, horizon_opts;
  auto given = [](const std::vector<CLI::Option*>& opts) {
    for (const CLI::Option* o : opts) {
      if (o->count()) return true;
    }
    return false;
  };
  auto add_sim = [&](CLI::App* sub) {
    dt_opts.push_back(sub->add_option("--dt", dt, "RK4 step, s"));
    horizon_opts.push_back(sub->add_option("--horizon", horizon, "simulated time, s"));
    sub->add_option("--gains", gains, "k_phi,k_theta,k_dphi,k_dtheta,k_dpsi");
    sub->add_option("--cmd", cmd, "u_phi,u_theta,u_dpsi");
    sub->add_option("--inertia", inertia, "Jxx,Jyy,Jzz, kg m^2");
    sub->add_option("--init", init, "phi,theta,psi,p,q,r initial state");
  };

  CLI::App* synth = app.add_subcommand("synth", "synthesize an H2 state-feedback gain");
  synth->add_option("--plant", c.plant, "plant file (JSON)")->required();
  epsilon_opts.push_back(
      synth->add_option("--epsilon", epsilon, "LMI strictness margin"));
  synth->add_option("--dump-sdp", c.dump_sdp, "write the SDP in dump format");
  add_solver(synth);

  CLI::App* verify = app.add_subcommand("verify", "check a gain against a plant");
  verify->add_option("--plant", c.plant, "plant file (JSON)")->required();
  verify->add_option("--gain", c.gain_file, "gain matrix K (CSV)")->required();
  verify->add_option("--result", c.result_file, "result.json providing X and gamma");
  add_solver(verify);

  CLI::App* simulate =
      app.add_subcommand("simulate", "simulate the nonlinear attitude loop");
  add_sim(simulate);

  CLI::App* demo = app.add_subcommand(
      "demo-innerloop", "compare the nonlinear attitude loop with its LTI model");
  add_sim(demo);

  for (CLI::App* sub : {synth, verify, simulate, demo}) {
    sub->add_option("--out", c.out, "output directory");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "lpvh2: " << e.what() << "\n";
    return kConfigError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    if (given(epsilon_opts)) c.epsilon = epsilon;
    if (given(dt_opts)) c.dt = dt;
    if (given(horizon_opts)) c.horizon = horizon;
    if (!gains.empty()) c.gains = parse_list(gains, "--gains");
    if (!cmd.empty()) c.cmd = parse_list(cmd, "--cmd");
    if (!inertia.empty()) c.inertia = parse_list(inertia, "--inertia");
    if (!init.empty()) c.init = parse_list(init, "--init");
  } catch (const InvalidArgument& e) {
    err << "lpvh2: " << e.what() << "\n";
    return kConfigError;
  }

  LogRedirect redirect(err);
  if (chosen == synth) return cmd_synth(c);
  if (chosen == verify) return cmd_verify(c);
  if (chosen == simulate) return cmd_simulate(c);
  return cmd_demo_innerloop(c);
}

}  // namespace lpvh2::cli
