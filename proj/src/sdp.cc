#include "lpvh2/sdp.h"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lpvh2/errors.h"
#include "lpvh2/numeric_format.h"

namespace lpvh2 {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
}  // namespace

int svec_size(int dim) { return dim * (dim + 1) / 2; }

int smat_dimension(Eigen::Index length) {
  int d = 0;
  while (svec_size(d) < length) ++d;
  if (svec_size(d) != length) {
    throw DimensionMismatch("svec length " + std::to_string(length) +
                            " is not triangular");
  }
  return d;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("svec needs a square matrix");
  const auto d = static_cast<int>(m.rows());
  Eigen::VectorXd v(svec_size(d));
  int k = 0;
  for (int j = 0; j < d; ++j) {
    v(k++) = m(j, j);
    for (int i = j + 1; i < d; ++i) v(k++) = kSqrt2 * 0.5 * (m(i, j) + m(j, i));
  }
  return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v) {
  const int d = smat_dimension(v.size());
  Eigen::MatrixXd m(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    m(j, j) = v(k++);
    for (int i = j + 1; i < d; ++i) {
      m(i, j) = v(k++) / kSqrt2;
      m(j, i) = m(i, j);
    }
  }
  return m;
}

void SdpProblem::validate() const {
  if (num_vars < 0) throw InvalidArgument("negative variable count");
  if (objective.size() != num_vars) {
    throw DimensionMismatch("objective has length " +
                            std::to_string(objective.size()) + ", expected " +
                            std::to_string(num_vars));
  }
  if (!objective.allFinite()) throw InvalidArgument("objective is not finite");
  for (std::size_t j = 0; j < psd_constraints.size(); ++j) {
    const PsdConstraint& c = psd_constraints[j];
    const std::string where = "constraint " + std::to_string(j);
    if (c.dim < 1) throw InvalidArgument(where + " has dimension < 1");
    if (c.constant.size() != svec_size(c.dim) ||
        c.coefficients.rows() != svec_size(c.dim)) {
      throw DimensionMismatch(where + " svec length does not match dimension");
    }
    if (c.coefficients.cols() != num_vars) {
      throw DimensionMismatch(where + " does not consume exactly num_vars");
    }
    if (!c.constant.allFinite() || !c.coefficients.allFinite()) {
      throw InvalidArgument(where + " has non-finite data");
    }
  }
  for (const VariableBound& bound : bounds) {
    if (bound.index < 0 || bound.index >= num_vars) {
      throw InvalidArgument("variable bound index out of range");
    }
    if ((bound.lower && !std::isfinite(*bound.lower)) ||
        (bound.upper && !std::isfinite(*bound.upper))) {
      throw InvalidArgument("variable bounds must be finite");
    }
  }
}

int SdpProblem::total_svec_dimension() const {
  int total = 0;
  for (const PsdConstraint& c : psd_constraints) total += svec_size(c.dim);
  return total;
}

const char* to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::kOptimal:
      return "Optimal";
    case SdpStatus::kInfeasible:
      return "Infeasible";
    case SdpStatus::kUnbounded:
      return "Unbounded";
    case SdpStatus::kIterationLimit:
      return "IterationLimit";
    case SdpStatus::kNumericalError:
      return "NumericalError";
  }
  return "Unknown";
}

ViolationReport check_solution(const SdpProblem& problem,
                               const Eigen::VectorXd& x) {
  if (x.size() != problem.num_vars) {
    throw DimensionMismatch("solution has " + std::to_string(x.size()) +
                            " entries, problem has " +
                            std::to_string(problem.num_vars) + " variables");
  }
  ViolationReport report;
  double worst = 0.0;
  for (const PsdConstraint& c : problem.psd_constraints) {
    const Eigen::MatrixXd f = smat(c.constant + c.coefficients * x);
    const double min_eig =
        f.allFinite()
            ? Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                  f, Eigen::EigenvaluesOnly)
                  .eigenvalues()
                  .minCoeff()
            : -std::numeric_limits<double>::infinity();
    report.block_min_eig.push_back(min_eig);
    worst = std::max(worst, -min_eig);
  }
  for (const VariableBound& bound : problem.bounds) {
    const double v = x(bound.index);
    if (bound.lower) {
      report.block_min_eig.push_back(v - *bound.lower);
      worst = std::max(worst, *bound.lower - v);
    }
    if (bound.upper) {
      report.block_min_eig.push_back(*bound.upper - v);
      worst = std::max(worst, v - *bound.upper);
    }
  }
  report.max_violation = worst;
  return report;
}

void write_sdp_dump(std::ostream& os, const SdpProblem& problem) {
  problem.validate();
  os << "lpvh2-sdp 1\n";
  os << "num_vars " << problem.num_vars << '\n';
  os << "objective";
  for (Eigen::Index i = 0; i < problem.objective.size(); ++i) {
    os << ' ' << format_number(problem.objective(i));
  }
  os << '\n';
  os << "blocks " << problem.psd_constraints.size() << '\n';
  for (const PsdConstraint& c : problem.psd_constraints) {
    os << "block " << c.dim << ' ' << (c.label.empty() ? "-" : c.label) << '\n';
    os << "constant";
    for (Eigen::Index k = 0; k < c.constant.size(); ++k) {
      os << ' ' << format_number(c.constant(k));
    }
    os << '\n';
    for (Eigen::Index i = 0; i < c.coefficients.cols(); ++i) {
      if (c.coefficients.col(i).isZero(0.0)) continue;
      os << "coef " << i;
      for (Eigen::Index k = 0; k < c.coefficients.rows(); ++k) {
        os << ' ' << format_number(c.coefficients(k, i));
      }
      os << '\n';
    }
    os << "end\n";
  }
  os << "bounds " << problem.bounds.size() << '\n';
  for (const VariableBound& b : problem.bounds) {
    os << "bound " << b.index << ' '
       << (b.lower ? format_number(*b.lower) : std::string("-inf")) << ' '
       << (b.upper ? format_number(*b.upper) : std::string("inf")) << '\n';
  }
}

namespace {

[[noreturn]] void dump_error(int line, const std::string& what) {
  throw FileFormatError("<sdp dump>", line, what);
}

double parse_double(const std::string& token, int line) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    dump_error(line, "expected a number, got '" + token + "'");
  }
  if (used != token.size()) dump_error(line, "trailing characters in number");
  return value;
}

}  // namespace

SdpProblem read_sdp_dump(std::istream& is) {
  SdpProblem problem;
  std::string raw;
  int line_no = 0;
  auto next_line = [&](const std::string& keyword) {
    while (std::getline(is, raw)) {
      ++line_no;
      if (raw.empty() || raw[0] == '#') continue;
      std::istringstream tokens(raw);
      std::string head;
      tokens >> head;
      if (head != keyword) {
        dump_error(line_no, "expected '" + keyword + "', got '" + head + "'");
      }
      std::vector<std::string> rest;
      for (std::string t; tokens >> t;) rest.push_back(t);
      return rest;
    }
    dump_error(line_no, "unexpected end of input, expected '" + keyword + "'");
  };
  auto to_int = [&](const std::string& token) {
    const double v = parse_double(token, line_no);
    if (v != std::floor(v) || v < 0) dump_error(line_no, "expected a count");
    return static_cast<int>(v);
  };

  auto header = next_line("lpvh2-sdp");
  if (header.size() != 1 || header[0] != "1") {
    dump_error(line_no, "unsupported dump version");
  }
  auto nv = next_line("num_vars");
  if (nv.size() != 1) dump_error(line_no, "num_vars takes one value");
  problem.num_vars = to_int(nv[0]);
  auto obj = next_line("objective");
  if (static_cast<int>(obj.size()) != problem.num_vars) {
    dump_error(line_no, "objective length does not match num_vars");
  }
  problem.objective.resize(problem.num_vars);
  for (int i = 0; i < problem.num_vars; ++i) {
    problem.objective(i) = parse_double(obj[static_cast<std::size_t>(i)], line_no);
  }
  auto nb = next_line("blocks");
  if (nb.size() != 1) dump_error(line_no, "blocks takes one value");
  const int num_blocks = to_int(nb[0]);
  for (int j = 0; j < num_blocks; ++j) {
    auto head = next_line("block");
    if (head.size() != 2) dump_error(line_no, "block takes dimension and label");
    PsdConstraint c;
    c.dim = to_int(head[0]);
    c.label = head[1] == "-" ? std::string() : head[1];
    const int len = svec_size(c.dim);
    auto constant = next_line("constant");
    if (static_cast<int>(constant.size()) != len) {
      dump_error(line_no, "constant has the wrong svec length");
    }
    c.constant.resize(len);
    for (int k = 0; k < len; ++k) {
      c.constant(k) = parse_double(constant[static_cast<std::size_t>(k)], line_no);
    }
    c.coefficients = Eigen::MatrixXd::Zero(len, problem.num_vars);
    while (true) {
      if (!std::getline(is, raw)) dump_error(line_no, "unterminated block");
      ++line_no;
      std::istringstream tokens(raw);
      std::string kw;
      tokens >> kw;
      if (kw == "end") break;
      if (kw != "coef") dump_error(line_no, "expected 'coef' or 'end'");
      std::vector<std::string> rest;
      for (std::string t; tokens >> t;) rest.push_back(t);
      if (static_cast<int>(rest.size()) != len + 1) {
        dump_error(line_no, "coef line has the wrong length");
      }
      const int var = to_int(rest[0]);
      if (var >= problem.num_vars) dump_error(line_no, "variable out of range");
      for (int k = 0; k < len; ++k) {
        c.coefficients(k, var) =
            parse_double(rest[static_cast<std::size_t>(k) + 1], line_no);
      }
    }
    problem.psd_constraints.push_back(std::move(c));
  }
  auto nbounds = next_line("bounds");
  if (nbounds.size() != 1) dump_error(line_no, "bounds takes one value");
  const int num_bounds = to_int(nbounds[0]);
  for (int j = 0; j < num_bounds; ++j) {
    auto b = next_line("bound");
    if (b.size() != 3) dump_error(line_no, "bound takes index, lower, upper");
    VariableBound bound;
    bound.index = to_int(b[0]);
    if (b[1] != "-inf") bound.lower = parse_double(b[1], line_no);
    if (b[2] != "inf") bound.upper = parse_double(b[2], line_no);
    problem.bounds.push_back(bound);
  }
  try {
    problem.validate();
  } catch (const Error& e) {
    dump_error(line_no, e.what());
  }
  return problem;
}

}  // namespace lpvh2
