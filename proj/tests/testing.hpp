#pragma once

// Random inputs and numeric oracles shared by the unit and acceptance tests.

#include "ndef/deform.hpp"
#include "ndef/instanton.hpp"

#include <random>

namespace ndef::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Expr c(double v) { return expr::constant(v); }
inline Expr x(int i) { return expr::coordinate(i); }

/// a0 + Σ a_i x_i + b sin(x_j) + c x_k x_l, with small random coefficients.
inline Expr random_smooth(Rng& rng, int dim, double scale = 1.0) {
  std::uniform_int_distribution<int> pick(0, dim - 1);
  Expr e = c(scale * uniform(rng, -1, 1));
  for (int i = 0; i < dim; ++i) e = expr::add(e, expr::mul(c(scale * uniform(rng, -1, 1)), x(i)));
  e = expr::add(e, expr::mul(c(scale * uniform(rng, -1, 1)), expr::sin(x(pick(rng)))));
  e = expr::add(e, expr::mul(c(scale * uniform(rng, -1, 1)), expr::mul(x(pick(rng)), x(pick(rng)))));
  return e;
}

/// Random polynomial of total degree ≤ 3.
inline Expr random_polynomial(Rng& rng, int dim) {
  std::uniform_int_distribution<int> pick(0, dim - 1);
  std::uniform_int_distribution<int> power(1, 3);
  Expr e = c(uniform(rng, -2, 2));
  for (int t = 0; t < 4; ++t)
    e = expr::add(e, expr::mul(c(uniform(rng, -2, 2)), expr::pow(x(pick(rng)), power(rng))));
  return e;
}

/// Σ_k f_k(x) E_k with random smooth f_k over the given basis.
inline ExprMatrix random_element(Rng& rng, const std::vector<Matrix>& basis, int dim, double scale = 1.0) {
  const int n = static_cast<int>(basis.front().rows());
  ExprMatrix out(n, n);
  for (const auto& e : basis) out = out + random_smooth(rng, dim, scale) * ExprMatrix::constant(e);
  return out;
}

inline LieValuedForm random_form(Rng& rng, const Chart& chart, const AlgebraPtr& algebra, double scale = 1.0) {
  std::vector<ExprMatrix> components;
  for (int i = 0; i < chart.dim(); ++i) components.push_back(random_element(rng, algebra->basis(), chart.dim(), scale));
  return LieValuedForm(chart, 1, std::move(components), algebra);
}

inline LocalConnection random_connection(Rng& rng, const Chart& chart, const AlgebraPtr& algebra) {
  return {random_form(rng, chart, algebra), "s", true};
}

/// Product of exp(θ_k(x) L_ab) over the given generator planes.
inline ExprMatrix random_rotation_field(Rng& rng, int n, int dim, int factors) {
  std::uniform_int_distribution<int> pick(0, n - 1);
  ExprMatrix h = ExprMatrix::identity(n);
  for (int k = 0; k < factors; ++k) {
    int a = pick(rng), b = pick(rng);
    while (b == a) b = pick(rng);
    h = h * one_parameter_field(elementary_rotation(n, std::min(a, b), std::max(a, b)), random_smooth(rng, dim));
  }
  return h;
}

inline Matrix rotation(int n, int a, int b, double angle) { return exponential(angle * elementary_rotation(n, a, b)); }

/// Numeric pointwise evaluation of a form's components.
inline std::vector<Matrix> at(const LieValuedForm& f, const Point& p) { return FormEvaluator(f)(p); }

}  // namespace ndef::testing
