#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace lpvh2 {

/// Largest supported number of scheduling parameters (2^8 box vertices).
inline constexpr int kMaxParameters = 8;

/// Residual tolerance of the convex-combination membership test.
inline constexpr double kMembershipTolerance = 1e-8;

/// Convex parameter region, stored by its vertices.
class ParameterPolytope {
 public:
  enum class Kind { kBox, kVertexList };

  /// Box lower <= xi <= upper. Vertex i takes the upper bound on parameter k
  /// iff bit k of i is set.
  static ParameterPolytope box(const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper);
  /// Convex hull of the given points (one per column or element).
  static ParameterPolytope from_vertices(std::vector<Eigen::VectorXd> vertices);

  Kind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  const std::vector<Eigen::VectorXd>& vertices() const { return vertices_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  /// Convex weights mu >= 0, sum(mu) = 1 with sum mu_i xi_i = xi. Throws
  /// ParameterOutOfRegion if no such weights exist within
  /// kMembershipTolerance.
  Eigen::VectorXd convex_coordinates(const Eigen::VectorXd& xi) const;
  bool contains(const Eigen::VectorXd& xi) const;

 private:
  friend class PolytopicLpvPlant;
  ParameterPolytope() = default;

  Kind kind_ = Kind::kBox;
  int dimension_ = 0;
  std::vector<Eigen::VectorXd> vertices_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

/// One LTI plant  x' = A x + Bw w + B u,  z = C x + D w + E u.
struct LpvVertexSystem {
  Eigen::MatrixXd a;
  Eigen::MatrixXd bw;
  Eigen::MatrixXd b;
  Eigen::MatrixXd c;
  Eigen::MatrixXd d;
  Eigen::MatrixXd e;

  int num_states() const { return static_cast<int>(a.rows()); }
  int num_disturbances() const { return static_cast<int>(bw.cols()); }
  int num_inputs() const { return static_cast<int>(b.cols()); }
  int num_outputs() const { return static_cast<int>(c.rows()); }

  /// Throws DimensionMismatch if the six blocks are inconsistent.
  void validate() const;
  bool same_shape(const LpvVertexSystem& other) const;

  /// Same-shaped system with every block zero.
  static LpvVertexSystem zeros(int n, int m_w, int m_u, int q);
};

LpvVertexSystem operator+(const LpvVertexSystem& lhs,
                          const LpvVertexSystem& rhs);
LpvVertexSystem operator*(double scale, const LpvVertexSystem& system);

/// Closed loop under u = K x: Ac = A + B K, Bc = Bw, Cc = C + E K, Dc = D.
struct ClosedLoopVertex {
  Eigen::MatrixXd ac;
  Eigen::MatrixXd bc;
  Eigen::MatrixXd cc;
  Eigen::MatrixXd dc;
};

/// Polytopic LPV plant in one of two encodings:
///  - affine: P(xi) = P0 + sum_k xi_k P_k, vertices are P(xi_i);
///  - direct: an explicit system per polytope vertex, interior points are
///    evaluated as the matching convex combination.
class PolytopicLpvPlant {
 public:
  enum class Form { kAffine, kDirect };

  static PolytopicLpvPlant affine(ParameterPolytope polytope,
                                  LpvVertexSystem base,
                                  std::vector<LpvVertexSystem> coefficients);
  static PolytopicLpvPlant direct(ParameterPolytope polytope,
                                  std::vector<LpvVertexSystem> vertex_systems);

  Form form() const { return form_; }
  const ParameterPolytope& polytope() const { return polytope_; }
  const LpvVertexSystem& base() const { return base_; }
  const std::vector<LpvVertexSystem>& coefficients() const {
    return coefficients_;
  }
  const std::vector<LpvVertexSystem>& vertex_systems() const {
    return vertex_systems_;
  }

  int num_states() const { return shape().num_states(); }
  int num_disturbances() const { return shape().num_disturbances(); }
  int num_inputs() const { return shape().num_inputs(); }
  int num_outputs() const { return shape().num_outputs(); }

  std::string name;

 private:
  PolytopicLpvPlant() = default;
  const LpvVertexSystem& shape() const {
    return form_ == Form::kAffine ? base_ : vertex_systems_.front();
  }

  Form form_ = Form::kAffine;
  ParameterPolytope polytope_;
  LpvVertexSystem base_;
  std::vector<LpvVertexSystem> coefficients_;
  std::vector<LpvVertexSystem> vertex_systems_;
};

/// P_i for every polytope vertex, in polytope vertex order.
std::vector<LpvVertexSystem> instantiate_vertices(
    const PolytopicLpvPlant& plant);

/// P(xi). Throws ParameterOutOfRegion if xi is not in the polytope.
LpvVertexSystem evaluate(const PolytopicLpvPlant& plant,
                         const Eigen::VectorXd& xi);

ClosedLoopVertex close_loop(const LpvVertexSystem& vertex,
                            const Eigen::MatrixXd& gain);

std::vector<ClosedLoopVertex> close_loop(
    const std::vector<LpvVertexSystem>& vertices, const Eigen::MatrixXd& gain);

/// Solves min ||M x - y|| s.t. x >= 0 (Lawson-Hanson active set).
Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& m,
                                          const Eigen::VectorXd& y);

}  // namespace lpvh2
