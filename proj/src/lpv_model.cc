#include "lpvh2/lpv_model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/QR>

#include "lpvh2/errors.h"
#include "lpvh2/numeric_format.h"

namespace lpvh2 {

namespace {

std::string shape_string(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void expect_shape(const char* name, const Eigen::MatrixXd& m, Eigen::Index rows,
                  Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionMismatch(std::string("matrix ") + name + " is " +
                            shape_string(m) + ", expected " +
                            std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

ParameterPolytope ParameterPolytope::box(const Eigen::VectorXd& lower,
                                         const Eigen::VectorXd& upper) {
  if (lower.size() != upper.size()) {
    throw DimensionMismatch("box bounds have different lengths");
  }
  const auto p = static_cast<int>(lower.size());
  if (p < 1 || p > kMaxParameters) {
    throw InvalidArgument("box must have between 1 and " +
                          std::to_string(kMaxParameters) + " parameters");
  }
  if (!lower.allFinite() || !upper.allFinite() ||
      (upper - lower).minCoeff() < 0.0) {
    throw InvalidArgument("box bounds must be finite with lower <= upper");
  }
  ParameterPolytope polytope;
  polytope.kind_ = Kind::kBox;
  polytope.dimension_ = p;
  polytope.lower_ = lower;
  polytope.upper_ = upper;
  const int count = 1 << p;
  polytope.vertices_.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd v(p);
    for (int k = 0; k < p; ++k) v(k) = ((i >> k) & 1) ? upper(k) : lower(k);
    polytope.vertices_.push_back(std::move(v));
  }
  return polytope;
}

ParameterPolytope ParameterPolytope::from_vertices(
    std::vector<Eigen::VectorXd> vertices) {
  if (vertices.empty()) {
    throw InvalidArgument("polytope needs at least one vertex");
  }
  const auto p = static_cast<int>(vertices.front().size());
  if (p < 1 || p > kMaxParameters) {
    throw InvalidArgument("polytope dimension must be between 1 and " +
                          std::to_string(kMaxParameters));
  }
  if (vertices.size() > (std::size_t{1} << kMaxParameters)) {
    throw InvalidArgument("too many polytope vertices");
  }
  ParameterPolytope polytope;
  polytope.kind_ = Kind::kVertexList;
  polytope.dimension_ = p;
  polytope.lower_ = vertices.front();
  polytope.upper_ = vertices.front();
  for (const Eigen::VectorXd& v : vertices) {
    if (v.size() != p) {
      throw DimensionMismatch("polytope vertices have different dimensions");
    }
    if (!v.allFinite()) throw InvalidArgument("polytope vertex is not finite");
    polytope.lower_ = polytope.lower_.cwiseMin(v);
    polytope.upper_ = polytope.upper_.cwiseMax(v);
  }
  polytope.vertices_ = std::move(vertices);
  return polytope;
}

Eigen::VectorXd ParameterPolytope::convex_coordinates(
    const Eigen::VectorXd& xi) const {
  if (xi.size() != dimension_) {
    throw DimensionMismatch("parameter vector has length " +
                            std::to_string(xi.size()) + ", expected " +
                            std::to_string(dimension_));
  }
  if (!xi.allFinite()) throw ParameterOutOfRegion("parameter is not finite");

  if (kind_ == Kind::kBox) {
    for (int k = 0; k < dimension_; ++k) {
      if (xi(k) < lower_(k) || xi(k) > upper_(k)) {
        throw ParameterOutOfRegion(
            "parameter " + std::to_string(k) + " = " + format_number(xi(k)) +
            " is outside [" + format_number(lower_(k)) + ", " +
            format_number(upper_(k)) + "]");
      }
    }
    // Multilinear weights: product over parameters of (1 - t_k) or t_k.
    Eigen::VectorXd t(dimension_);
    for (int k = 0; k < dimension_; ++k) {
      const double width = upper_(k) - lower_(k);
      t(k) = width > 0.0 ? (xi(k) - lower_(k)) / width : 0.0;
    }
    Eigen::VectorXd mu(num_vertices());
    for (int i = 0; i < num_vertices(); ++i) {
      double w = 1.0;
      for (int k = 0; k < dimension_; ++k) {
        w *= ((i >> k) & 1) ? t(k) : 1.0 - t(k);
      }
      mu(i) = w;
    }
    return mu;
  }

  const int count = num_vertices();
  Eigen::MatrixXd m(dimension_ + 1, count);
  for (int i = 0; i < count; ++i) {
    m.col(i).head(dimension_) = vertices_[static_cast<std::size_t>(i)];
    m(dimension_, i) = 1.0;
  }
  Eigen::VectorXd y(dimension_ + 1);
  y << xi, 1.0;
  Eigen::VectorXd mu = nonnegative_least_squares(m, y);
  const double residual = (m * mu - y).norm();
  if (!(residual <= kMembershipTolerance)) {
    throw ParameterOutOfRegion("parameter is outside the polytope (residual " +
                               format_number(residual) + ")");
  }
  return mu / mu.sum();
}

bool ParameterPolytope::contains(const Eigen::VectorXd& xi) const {
  try {
    convex_coordinates(xi);
    return true;
  } catch (const ParameterOutOfRegion&) {
    return false;
  }
}

void LpvVertexSystem::validate() const {
  const Eigen::Index n = a.rows();
  expect_shape("A", a, n, n);
  expect_shape("Bw", bw, n, bw.cols());
  expect_shape("B", b, n, b.cols());
  expect_shape("C", c, c.rows(), n);
  expect_shape("D", d, c.rows(), bw.cols());
  expect_shape("E", e, c.rows(), b.cols());
  if (!a.allFinite() || !bw.allFinite() || !b.allFinite() || !c.allFinite() ||
      !d.allFinite() || !e.allFinite()) {
    throw InvalidArgument("system matrices must be finite");
  }
}

bool LpvVertexSystem::same_shape(const LpvVertexSystem& other) const {
  auto same = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return x.rows() == y.rows() && x.cols() == y.cols();
  };
  return same(a, other.a) && same(bw, other.bw) && same(b, other.b) &&
         same(c, other.c) && same(d, other.d) && same(e, other.e);
}

LpvVertexSystem LpvVertexSystem::zeros(int n, int m_w, int m_u, int q) {
  return {Eigen::MatrixXd::Zero(n, n),   Eigen::MatrixXd::Zero(n, m_w),
          Eigen::MatrixXd::Zero(n, m_u), Eigen::MatrixXd::Zero(q, n),
          Eigen::MatrixXd::Zero(q, m_w), Eigen::MatrixXd::Zero(q, m_u)};
}

LpvVertexSystem operator+(const LpvVertexSystem& lhs,
                          const LpvVertexSystem& rhs) {
  if (!lhs.same_shape(rhs)) {
    throw DimensionMismatch("cannot add systems of different shapes");
  }
  return {lhs.a + rhs.a, lhs.bw + rhs.bw, lhs.b + rhs.b,
          lhs.c + rhs.c, lhs.d + rhs.d,   lhs.e + rhs.e};
}

LpvVertexSystem operator*(double scale, const LpvVertexSystem& s) {
  return {scale * s.a, scale * s.bw, scale * s.b,
          scale * s.c, scale * s.d,  scale * s.e};
}

PolytopicLpvPlant PolytopicLpvPlant::affine(
    ParameterPolytope polytope, LpvVertexSystem base,
    std::vector<LpvVertexSystem> coefficients) {
  base.validate();
  if (static_cast<int>(coefficients.size()) != polytope.dimension()) {
    throw DimensionMismatch(
        "affine plant has " + std::to_string(coefficients.size()) +
        " coefficient systems for " + std::to_string(polytope.dimension()) +
        " parameters");
  }
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    if (!coefficients[k].same_shape(base)) {
      throw DimensionMismatch("coefficient system " + std::to_string(k) +
                              " does not match the base system's shape");
    }
    coefficients[k].validate();
  }
  PolytopicLpvPlant plant;
  plant.form_ = Form::kAffine;
  plant.polytope_ = std::move(polytope);
  plant.base_ = std::move(base);
  plant.coefficients_ = std::move(coefficients);
  return plant;
}

PolytopicLpvPlant PolytopicLpvPlant::direct(
    ParameterPolytope polytope, std::vector<LpvVertexSystem> vertex_systems) {
  if (static_cast<int>(vertex_systems.size()) != polytope.num_vertices()) {
    throw DimensionMismatch(
        "direct plant has " + std::to_string(vertex_systems.size()) +
        " vertex systems for " + std::to_string(polytope.num_vertices()) +
        " polytope vertices");
  }
  for (std::size_t i = 0; i < vertex_systems.size(); ++i) {
    vertex_systems[i].validate();
    if (!vertex_systems[i].same_shape(vertex_systems.front())) {
      throw DimensionMismatch("vertex system " + std::to_string(i) +
                              " does not match vertex system 0");
    }
  }
  PolytopicLpvPlant plant;
  plant.form_ = Form::kDirect;
  plant.polytope_ = std::move(polytope);
  plant.vertex_systems_ = std::move(vertex_systems);
  return plant;
}

namespace {

LpvVertexSystem affine_value(const PolytopicLpvPlant& plant,
                             const Eigen::VectorXd& xi) {
  LpvVertexSystem value = plant.base();
  for (std::size_t k = 0; k < plant.coefficients().size(); ++k) {
    value = value + xi(static_cast<Eigen::Index>(k)) * plant.coefficients()[k];
  }
  return value;
}

}  // namespace

std::vector<LpvVertexSystem> instantiate_vertices(
    const PolytopicLpvPlant& plant) {
  if (plant.form() == PolytopicLpvPlant::Form::kDirect) {
    return plant.vertex_systems();
  }
  std::vector<LpvVertexSystem> vertices;
  vertices.reserve(plant.polytope().vertices().size());
  for (const Eigen::VectorXd& xi : plant.polytope().vertices()) {
    vertices.push_back(affine_value(plant, xi));
  }
  return vertices;
}

LpvVertexSystem evaluate(const PolytopicLpvPlant& plant,
                         const Eigen::VectorXd& xi) {
  const Eigen::VectorXd mu = plant.polytope().convex_coordinates(xi);
  if (plant.form() == PolytopicLpvPlant::Form::kAffine) {
    return affine_value(plant, xi);
  }
  const auto& systems = plant.vertex_systems();
  LpvVertexSystem value = mu(0) * systems.front();
  for (std::size_t i = 1; i < systems.size(); ++i) {
    value = value + mu(static_cast<Eigen::Index>(i)) * systems[i];
  }
  return value;
}

ClosedLoopVertex close_loop(const LpvVertexSystem& vertex,
                            const Eigen::MatrixXd& gain) {
  vertex.validate();
  if (gain.rows() != vertex.num_inputs() || gain.cols() != vertex.num_states()) {
    throw DimensionMismatch("gain is " + shape_string(gain) + ", expected " +
                            std::to_string(vertex.num_inputs()) + "x" +
                            std::to_string(vertex.num_states()));
  }
  return {vertex.a + vertex.b * gain, vertex.bw, vertex.c + vertex.e * gain,
          vertex.d};
}

std::vector<ClosedLoopVertex> close_loop(
    const std::vector<LpvVertexSystem>& vertices, const Eigen::MatrixXd& gain) {
  std::vector<ClosedLoopVertex> closed;
  closed.reserve(vertices.size());
  for (const LpvVertexSystem& v : vertices) closed.push_back(close_loop(v, gain));
  return closed;
}

Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& m,
                                          const Eigen::VectorXd& y) {
  if (m.rows() != y.size()) {
    throw DimensionMismatch("NNLS right-hand side length mismatch");
  }
  const Eigen::Index cols = m.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
  std::vector<bool> passive(static_cast<std::size_t>(cols), false);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() *
                     std::max<double>(1.0, m.cwiseAbs().maxCoeff()) *
                     static_cast<double>(std::max(m.rows(), cols));

  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    Eigen::MatrixXd sub(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      sub.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
    }
    const Eigen::VectorXd s_sub = sub.colPivHouseholderQr().solve(y);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(cols);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      s(idx[k]) = s_sub(static_cast<Eigen::Index>(k));
    }
    return s;
  };

  const Eigen::Index max_outer = 3 * cols + 10;
  for (Eigen::Index outer = 0; outer < max_outer; ++outer) {
    const Eigen::VectorXd w = m.transpose() * (y - m * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    for (Eigen::Index inner = 0; inner <= cols; ++inner) {
      Eigen::VectorXd s = solve_passive();
      bool all_positive = true;
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) {
          all_positive = false;
          alpha = std::min(alpha, x(j) / (x(j) - s(j)));
        }
      }
      if (all_positive) {
        x = s;
        break;
      }
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
  }
  return x;
}

}  // namespace lpvh2
