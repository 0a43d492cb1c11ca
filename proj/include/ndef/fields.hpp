#pragma once

// Charts, matrix- and group-valued fields, and Lie-algebra-valued forms with
// exact symbolic exterior calculus.

#include "ndef/expr.hpp"
#include "ndef/liealg.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace ndef {

using Point = std::vector<double>;

class FieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A single coordinate chart U ⊂ R^d with an evaluation grid.
class Chart {
 public:
  static constexpr int kRandomInteriorPoints = 32;

  Chart(std::vector<std::pair<double, double>> bounds, std::vector<int> grid);
  static Chart cube(int dim, double lo, double hi, int grid_per_axis = 5);

  int dim() const { return static_cast<int>(bounds_.size()); }
  const std::vector<std::pair<double, double>>& bounds() const { return bounds_; }
  const std::vector<int>& grid() const { return grid_; }

  Chart with_grid(int per_axis) const;
  bool contains(std::span<const double> x) const;

  std::vector<Point> grid_points() const;
  /// Uniform interior points from a fixed-seed generator.
  std::vector<Point> interior_points(int count, unsigned seed = 7u) const;
  /// Full grid followed by kRandomInteriorPoints interior points; the point set
  /// on which every pointwise contract is certified.
  std::vector<Point> sample_points() const;
  Point center() const;

 private:
  std::vector<std::pair<double, double>> bounds_;
  std::vector<int> grid_;
};

/// Worst value of a pointwise residual and where it occurred.
struct Residual {
  double value = 0.0;
  Point point;

  void absorb(double v, const Point& at) {
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    if (point.empty() || v > value) {
      value = v;
      point = at;
    }
  }
};

Residual worst_over(const std::vector<Point>& points, const std::function<double(const Point&)>& f);

/// Dense matrix of scalar expressions.
class ExprMatrix {
 public:
  ExprMatrix() = default;
  ExprMatrix(int rows, int cols);

  static ExprMatrix constant(const Matrix& m);
  static ExprMatrix identity(int n);
  static ExprMatrix parse(const std::vector<std::vector<std::string>>& text, int dim);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const Expr& operator()(int r, int c) const { return entries_[index(r, c)]; }
  Expr& operator()(int r, int c) { return entries_[index(r, c)]; }
  const std::vector<Expr>& entries() const { return entries_; }

  ExprMatrix transpose() const;
  ExprMatrix derivative(Differentiator& d) const;
  ExprMatrix derivative(int coordinate) const;
  bool is_constant() const;
  bool is_zero() const;
  Matrix evaluate(std::span<const double> point) const;
  std::vector<std::vector<std::string>> to_strings() const;

  friend ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b);
  friend ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b);
  friend ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b);
  friend ExprMatrix operator*(const Matrix& a, const ExprMatrix& b);
  friend ExprMatrix operator*(const ExprMatrix& a, const Matrix& b);
  friend ExprMatrix operator*(const Expr& s, const ExprMatrix& b);
  friend ExprMatrix operator*(double s, const ExprMatrix& b);

 private:
  std::size_t index(int r, int c) const;

  int rows_ = 0;
  int cols_ = 0;
  std::vector<Expr> entries_;
};

/// Symbolic determinant (cofactor expansion); n ≤ 4.
Expr determinant(const ExprMatrix& m);
/// Adjugate/determinant for n ≤ 4, numeric LU at evaluation time otherwise.
ExprMatrix inverse(const ExprMatrix& m);
/// trace(QᵀX) for a constant Q.
Expr frobenius(const Matrix& q, const ExprMatrix& x);
/// Σ_k ⟨Q_k, X⟩ Q_k for an orthonormal family Q_k.
ExprMatrix project(const std::vector<Matrix>& orthonormal, const ExprMatrix& x);

/// exp(θ(x) X) for a generator with X³ = −X (every L_ab and every unit
/// su(2)_± element): 1 + sin θ X + (1 − cos θ) X².
ExprMatrix one_parameter_field(const Matrix& generator, const Expr& theta);

/// Evaluates a batch of expression matrices with one shared tape.
class MatrixProgram {
 public:
  explicit MatrixProgram(const std::vector<ExprMatrix>& matrices);
  std::vector<Matrix> operator()(std::span<const double> point) const;

 private:
  std::vector<std::pair<int, int>> shapes_;
  Program program_;
};

struct MatrixField {
  Chart chart;
  ExprMatrix entries;

  Matrix at(std::span<const double> x) const { return entries.evaluate(x); }
};

/// A map h: U → H given by expressions, with its target group.
struct GroupValuedField {
  Chart chart;
  ExprMatrix entries;
  GroupPtr group;

  GroupValuedField(Chart chart, ExprMatrix entries, GroupPtr group);
  Matrix at(std::span<const double> x) const { return entries.evaluate(x); }
  int matrix_size() const { return entries.rows(); }
};

struct FieldValidation {
  bool valid = false;
  Residual membership;
  double min_abs_determinant = 0.0;
};

/// Group membership (and invertibility) at every sample point.
FieldValidation validate_group_field(const GroupValuedField& h);

/// Degree-k form (k ≤ 2) on a chart with matrix-valued coefficients in the
/// coordinate coframe, stored canonically for increasing multi-indices.
class LieValuedForm {
 public:
  LieValuedForm(Chart chart, int degree, std::vector<ExprMatrix> components, AlgebraPtr value_algebra = nullptr);
  static LieValuedForm zero(Chart chart, int degree, int n, AlgebraPtr value_algebra = nullptr);

  static std::size_t component_count(int dim, int degree);

  const Chart& chart() const { return chart_; }
  int degree() const { return degree_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const AlgebraPtr& value_algebra() const { return algebra_; }
  const std::vector<ExprMatrix>& components() const { return components_; }

  /// Canonical storage slot of dx^i ∧ dx^j (i < j).
  std::size_t pair_index(int i, int j) const;
  const ExprMatrix& component(int i) const;
  const ExprMatrix& component(int i, int j) const;
  /// Coefficient of dx^i ∧ dx^j for any i, j (antisymmetric extension).
  ExprMatrix antisymmetric_component(int i, int j) const;

  LieValuedForm with_algebra(AlgebraPtr algebra) const;
  LieValuedForm map(const std::function<ExprMatrix(const ExprMatrix&)>& f, AlgebraPtr algebra = nullptr) const;

  friend LieValuedForm operator+(const LieValuedForm& a, const LieValuedForm& b);
  friend LieValuedForm operator-(const LieValuedForm& a, const LieValuedForm& b);

 private:
  Chart chart_;
  int degree_;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<ExprMatrix> components_;
  AlgebraPtr algebra_;
};

class FormEvaluator {
 public:
  explicit FormEvaluator(const LieValuedForm& form) : program_(form.components()) {}
  std::vector<Matrix> operator()(std::span<const double> point) const { return program_(point); }

 private:
  MatrixProgram program_;
};

/// Largest Frobenius norm of a componentwise difference over points.
Residual max_difference(const LieValuedForm& a, const LieValuedForm& b, const std::vector<Point>& points);
/// Largest component norm over points.
Residual max_norm(const LieValuedForm& a, const std::vector<Point>& points);
/// Largest distance of a component value from span(algebra).
Residual algebra_residual(const LieValuedForm& a, const LieAlgebraModel& algebra, const std::vector<Point>& points);

/// Central difference oracle; throws FieldError when x lies outside the chart.
double finite_difference(const Expr& e, int coordinate, std::span<const double> x, const Chart& chart);

/// (h*μ)_i = h^{-1} ∂_i h. Throws FieldError if h is singular at a sample point.
LieValuedForm maurer_cartan_pullback(const GroupValuedField& h);

/// Scalar or matrix function as a 0-form.
LieValuedForm zero_form(const Chart& chart, const ExprMatrix& f);

/// d on 0- and 1-forms.
LieValuedForm exterior_derivative(const LieValuedForm& form);

/// (α∧β)_{ij} = α_i β_j − α_j β_i for matrix-valued 1-forms.
LieValuedForm wedge_bracket(const LieValuedForm& alpha, const LieValuedForm& beta);

/// F = dA + A∧A.
LieValuedForm field_strength(const LieValuedForm& connection);

}  // namespace ndef
