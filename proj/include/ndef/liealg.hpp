#pragma once

// Matrix Lie algebras and groups as explicit numerical objects.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ndef {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace tol {
/// Membership, invariance and algebraic identities.
inline constexpr double kAlgebraic = 1e-9;
/// Pure matrix identities (brackets, exponentials).
inline constexpr double kMatrix = 1e-12;
/// Mixed symbolic/numeric two-path comparisons.
inline constexpr double kTwoPath = 1e-8;
/// Anything involving second derivatives of a frame.
inline constexpr double kLeviCivita = 1e-7;
/// Gram-Schmidt drop threshold.
inline constexpr double kDrop = 1e-10;
}  // namespace tol

class LieError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Outcome of a membership or invariance predicate.
struct Check {
  bool holds = false;
  double residual = 0.0;
};

Matrix bracket(const Matrix& x, const Matrix& y);

/// Scaling-and-squaring Padé exponential.
Matrix exponential(const Matrix& x);

/// a X a^{-1}.
Matrix adjoint(const Matrix& a, const Matrix& x);

/// trace(XᵀY).
double frobenius(const Matrix& x, const Matrix& y);

/// L_ab = E_ab - E_ba with 0-based indices.
Matrix elementary_rotation(int n, int a, int b);

/// Basis-carrying matrix Lie algebra. Construction verifies linear
/// independence and bracket closure.
class LieAlgebraModel {
 public:
  LieAlgebraModel(std::string name, int matrix_size, std::vector<Matrix> basis, double tolerance = tol::kAlgebraic);

  const std::string& name() const { return name_; }
  int matrix_size() const { return n_; }
  int dimension() const { return static_cast<int>(basis_.size()); }
  double tolerance() const { return tolerance_; }
  const std::vector<Matrix>& basis() const { return basis_; }
  /// Frobenius-orthonormalized basis, same span and order.
  const std::vector<Matrix>& orthonormal_basis() const { return orthonormal_; }
  const Matrix& gram() const { return gram_; }

  /// Least-squares coefficients of X in the basis.
  Vector coefficients(const Matrix& x) const;
  Matrix element(const Vector& coefficients) const;
  /// Orthogonal projection onto the span.
  Matrix project(const Matrix& x) const;
  /// ‖X − project(X)‖.
  double distance(const Matrix& x) const;

  double closure_residual() const { return closure_residual_; }
  bool all_antisymmetric() const;

 private:
  std::string name_;
  int n_;
  std::vector<Matrix> basis_;
  std::vector<Matrix> orthonormal_;
  Matrix gram_;
  double tolerance_;
  double closure_residual_ = 0.0;
};

using AlgebraPtr = std::shared_ptr<const LieAlgebraModel>;

enum class GroupKind {
  GeneralLinear,
  SpecialOrthogonal,
  /// Connected subgroup generated by the algebra: a = exp(X) with X in the
  /// algebra, tested through the principal logarithm.
  Connected,
  Trivial,
};

class GroupModel {
 public:
  GroupModel(std::string name, AlgebraPtr algebra, GroupKind kind, double tolerance = tol::kAlgebraic);

  const std::string& name() const { return name_; }
  int matrix_size() const { return algebra_->matrix_size(); }
  const LieAlgebraModel& algebra() const { return *algebra_; }
  const AlgebraPtr& algebra_ptr() const { return algebra_; }
  GroupKind kind() const { return kind_; }
  double tolerance() const { return tolerance_; }

  double membership_residual(const Matrix& a) const;
  Check contains(const Matrix& a) const;

 private:
  std::string name_;
  AlgebraPtr algebra_;
  GroupKind kind_;
  double tolerance_;
};

using GroupPtr = std::shared_ptr<const GroupModel>;

/// G-invariant decomposition h = g ⊕ m with m the Frobenius-orthogonal
/// complement of g inside h.
class Splitting {
 public:
  static Splitting build(AlgebraPtr ambient, AlgebraPtr sub);

  const LieAlgebraModel& ambient() const { return *ambient_; }
  const LieAlgebraModel& sub() const { return *sub_; }
  const AlgebraPtr& ambient_ptr() const { return ambient_; }
  const AlgebraPtr& sub_ptr() const { return sub_; }
  int matrix_size() const { return ambient_->matrix_size(); }
  double tolerance() const { return ambient_->tolerance(); }

  /// Orthonormal bases of g and of m.
  const std::vector<Matrix>& sub_basis() const { return sub_basis_; }
  const std::vector<Matrix>& complement_basis() const { return complement_basis_; }

  /// Projectors acting on ambient-basis coefficient vectors.
  const Matrix& projector_g() const { return projector_g_; }
  const Matrix& projector_m() const { return projector_m_; }

  Matrix project_g(const Matrix& x) const;
  Matrix project_m(const Matrix& x) const;

 private:
  AlgebraPtr ambient_;
  AlgebraPtr sub_;
  std::vector<Matrix> sub_basis_;
  std::vector<Matrix> complement_basis_;
  Matrix projector_g_;
  Matrix projector_m_;
};

using SplittingPtr = std::shared_ptr<const Splitting>;

/// exp(t Q_a) for t in {±1, ±0.5} over the orthonormal basis, followed by
/// `random_products` products of three such exponentials with t uniform in
/// [-1, 1]. Deterministic for a given seed.
std::vector<Matrix> sample_group_elements(const LieAlgebraModel& algebra, int random_products,
                                          unsigned seed = 20140714u);

/// Ad(g)(m) ⊆ m on sampled g ∈ G; residual is max ‖pr_g(Ad(g) M_b)‖.
Check check_splitting_invariance(const Splitting& split, int sample_count = 16);

/// Algebra-level normaliser test Ad(a)(g) ⊆ g. The residual is the largest
/// relative distance ‖Ad(a)Q − pr_g Ad(a)Q‖ / ‖Ad(a)Q‖ over the orthonormal
/// basis of g. For disconnected G this tests the identity component only.
/// Throws LieError when `ambient_group` is given and rejects `a`.
Check normaliser_membership(const Matrix& a, const Splitting& split, const GroupModel* ambient_group = nullptr);

/// max ‖Ad(a)Q − Q‖ over the orthonormal basis of g.
Check centraliser_membership(const Matrix& a, const LieAlgebraModel& sub, const GroupModel* ambient_group = nullptr);

/// Sampled test of "X ∈ Lie(N_H(G)) iff Ad(g^{-1})X − X ∈ g for g ∈ G":
/// returns max ‖pr_m(Ad(g^{-1})X − X)‖ over sampled g.
double lie_normaliser_residual(const Matrix& x, const Splitting& split, int sample_count = 16);

struct RepresentationModel {
  std::string name;
  int source_dim = 0;
  int target_dim = 0;
  std::function<Matrix(const Matrix&)> matrix_for;
  std::optional<Vector> tau0;

  /// ρ(a) = a on R^n.
  static RepresentationModel standard(int n, std::optional<Vector> tau0 = std::nullopt);
  /// Λ²R^n in the basis L_ab (a<b): ω ↦ a ω aᵀ.
  static RepresentationModel exterior_square(int n, std::optional<Vector> tau0 = std::nullopt);

  /// max over sampled pairs of ‖ρ(ab) − ρ(a)ρ(b)‖ together with ‖ρ(1) − 1‖.
  double homomorphism_residual(const std::vector<Matrix>& samples) const;
};

/// ‖ρ(g)τ0 − τ0‖. Throws LieError without τ0.
Check stabiliser_membership(const Matrix& g, const RepresentationModel& rep, double tolerance = tol::kAlgebraic);

// ---------------------------------------------------------------------------
// Catalog

/// Names: "so(D)" and "gl(D)" for D ≤ 8, "so(k)_in_so(D)" (upper-left block),
/// "so2_in_so3", "su2_plus_in_so4", "su2_minus_in_so4", "u1_in_so2",
/// "trivial" / "trivial(D)". `size_hint` supplies D for plain "trivial".
AlgebraPtr catalog_algebra(std::string_view name, int size_hint = 0);

/// Group generated by a catalog algebra: SO(D) for so(D), GL(D) for gl(D),
/// connected subgroups otherwise.
GroupPtr catalog_group(std::string_view name, int size_hint = 0);
GroupPtr group_for(AlgebraPtr algebra);

std::vector<std::string> catalog_algebra_names();

}  // namespace ndef
