#include <doctest.h>

#include "testing.hpp"

#include <cmath>

using namespace ndef;
using namespace ndef::testing;

namespace {

Matrix L(int n, int a, int b) { return elementary_rotation(n, a - 1, b - 1); }

Expr parse(const char* text, int dim) { return parse_expression(text, dim); }

/// h^{-1} ∂_i h with the derivative taken by finite differences.
Matrix numeric_maurer_cartan(const GroupValuedField& h, int i, const Point& p) {
  Matrix dh(h.matrix_size(), h.matrix_size());
  for (int r = 0; r < dh.rows(); ++r)
    for (int col = 0; col < dh.cols(); ++col) dh(r, col) = finite_difference(h.entries(r, col), i, p, h.chart);
  return h.at(p).inverse() * dh;
}

}  // namespace

TEST_CASE("charts") {
  CHECK_THROWS_AS(Chart({{1.0, 1.0}}, {5}), FieldError);
  CHECK_THROWS_AS(Chart({{0.0, 1.0}}, {1}), FieldError);
  CHECK_THROWS_AS(Chart({{0.0, 1.0}}, {5, 5}), FieldError);
  Chart chart = Chart::cube(3, 0.0, 1.0);
  auto grid = chart.grid_points();
  CHECK(grid.size() == 125);
  CHECK(grid[1] == Point{0.25, 0.0, 0.0});
  CHECK(chart.sample_points().size() == 125 + Chart::kRandomInteriorPoints);
  for (const auto& p : chart.interior_points(50)) CHECK(chart.contains(p));
  CHECK(chart.interior_points(4) == chart.interior_points(4));
  CHECK(chart.with_grid(3).grid_points().size() == 27);
}

TEST_CASE("one-parameter fields match the matrix exponential") {
  Chart chart = Chart::cube(2, -1.0, 1.0);
  Expr theta = parse("x1 + 2*x2^2", 2);
  for (const Matrix& gen : std::vector<Matrix>{L(3, 1, 2), L(4, 2, 4), L(4, 1, 2) + L(4, 3, 4)}) {
    ExprMatrix h = one_parameter_field(gen, theta);
    for (const auto& p : chart.sample_points())
      CHECK((h.evaluate(p) - exponential(evaluate(theta, p) * gen)).norm() <= 1e-13);
  }
}

TEST_CASE("symbolic inverse") {
  Rng rng(21);
  Chart chart = Chart::cube(2, -0.5, 0.5, 3);
  for (int n : {1, 2, 3, 4, 6}) {
    ExprMatrix m(n, n);
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < n; ++col)
        m(r, col) = r == col ? expr::add(c(3.0), random_smooth(rng, 2, 0.3)) : random_smooth(rng, 2, 0.3);
    ExprMatrix inv = inverse(m);
    for (const auto& p : chart.sample_points())
      CHECK((inv.evaluate(p) * m.evaluate(p) - Matrix::Identity(n, n)).norm() <= 1e-12);
  }
}

TEST_CASE("group-field validation") {
  Chart chart = Chart::cube(2, 0.0, 1.0);
  GroupValuedField rot(chart, one_parameter_field(L(2, 1, 2), parse("x1*x2", 2)), catalog_group("so(2)"));
  CHECK(validate_group_field(rot).valid);

  GroupValuedField conformal(chart, parse("1 + x1^2", 2) * ExprMatrix::identity(3), catalog_group("gl(3)"));
  FieldValidation v = validate_group_field(conformal);
  CHECK(v.valid);
  CHECK(v.membership.value == 0.0);

  ExprMatrix scaled = one_parameter_field(L(3, 1, 2), parse("x1", 2));
  for (int col = 0; col < 3; ++col) scaled(0, col) = expr::mul(c(1.01), scaled(0, col));
  FieldValidation bad = validate_group_field(GroupValuedField(chart, scaled, catalog_group("so(3)")));
  CHECK_FALSE(bad.valid);
  CHECK(bad.membership.value == doctest::Approx(0.02).epsilon(0.02));

  CHECK_THROWS_AS(GroupValuedField(chart, ExprMatrix::identity(2), catalog_group("so(3)")), FieldError);
  CHECK_THROWS_AS(GroupValuedField(chart, parse("x3", 3) * ExprMatrix::identity(3), catalog_group("gl(3)")),
                  FieldError);
}

TEST_CASE("Maurer-Cartan pullback: closed forms") {
  Chart chart = Chart::cube(2, 0.0, 1.0);
  auto gl3 = catalog_group("gl(3)");

  GroupValuedField constant(chart, ExprMatrix::constant(exponential(L(3, 1, 3))), catalog_group("so(3)"));
  LieValuedForm mc0 = maurer_cartan_pullback(constant);
  for (const auto& comp : mc0.components()) CHECK(comp.is_zero());

  Expr phi = parse("1 + x1^2", 2);
  GroupValuedField conformal(chart, phi * ExprMatrix::identity(3), gl3);
  LieValuedForm mc1 = maurer_cartan_pullback(conformal);
  for (const auto& p : chart.sample_points()) {
    auto values = at(mc1, p);
    CHECK((values[0] - 2 * p[0] / (1 + p[0] * p[0]) * Matrix::Identity(3, 3)).norm() <= 1e-14);
    CHECK(values[1].norm() == 0.0);
  }

  Expr theta = parse("sin(x1) * x2 + x2^2", 2);
  GroupValuedField rot(chart, one_parameter_field(L(3, 1, 2), theta), catalog_group("so(3)"));
  LieValuedForm mc2 = maurer_cartan_pullback(rot);
  for (const auto& p : chart.sample_points()) {
    auto values = at(mc2, p);
    for (int i = 0; i < 2; ++i) {
      CHECK((values[i] - evaluate(differentiate(theta, i), p) * L(3, 1, 2)).norm() <= 1e-13);
      CHECK((values[i] - numeric_maurer_cartan(rot, i, p)).norm() <= 1e-6);
    }
  }

  GroupValuedField singular(chart, parse("x1", 2) * ExprMatrix::identity(2), catalog_group("gl(2)"));
  CHECK_THROWS_AS(maurer_cartan_pullback(singular), FieldError);
}

TEST_CASE("exterior derivative") {
  Chart chart = Chart::cube(2, -1.0, 1.0);
  auto one_form = [&](const char* a, const char* b) {
    ExprMatrix f(1, 1), g(1, 1);
    f(0, 0) = parse(a, 2);
    g(0, 0) = parse(b, 2);
    return LieValuedForm(chart, 1, {f, g});
  };
  LieValuedForm d1 = exterior_derivative(one_form("0", "x1"));
  CHECK(expr::is_constant_value(d1.component(0, 1)(0, 0), 1.0));

  LieValuedForm d2 = exterior_derivative(one_form("0", "x1^2"));
  for (const auto& p : chart.sample_points())
    CHECK(evaluate(d2.component(0, 1)(0, 0), p) == doctest::Approx(2 * p[0]).epsilon(1e-14));

  CHECK_THROWS_AS(exterior_derivative(d2), FieldError);
  CHECK_THROWS_AS(LieValuedForm(chart, 3, {}), FieldError);
  CHECK_THROWS_AS(LieValuedForm(chart, 1, {ExprMatrix(1, 1)}), FieldError);
}

TEST_CASE("d squared vanishes") {
  Rng rng(13);
  Chart chart = Chart::cube(3, -1.0, 1.0, 4);
  auto so3 = catalog_algebra("so(3)");
  for (int trial = 0; trial < 5; ++trial) {
    ExprMatrix f(1, 1);
    f(0, 0) = random_smooth(rng, 3);
    CHECK(max_norm(exterior_derivative(exterior_derivative(zero_form(chart, f))), chart.sample_points()).value <= 1e-10);
    ExprMatrix valued = random_element(rng, so3->basis(), 3);
    CHECK(max_norm(exterior_derivative(exterior_derivative(zero_form(chart, valued))), chart.sample_points()).value <=
          1e-10);
  }
}

TEST_CASE("exterior derivative matches finite differences") {
  Rng rng(14);
  Chart chart = Chart::cube(3, -1.0, 1.0, 3);
  LieValuedForm a = random_form(rng, chart, catalog_algebra("so(3)"));
  LieValuedForm da = exterior_derivative(a);
  for (const auto& p : chart.interior_points(10)) {
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        for (int r = 0; r < 3; ++r)
          for (int col = 0; col < 3; ++col) {
            const double symbolic = evaluate(da.component(i, j)(r, col), p);
            const double numeric = finite_difference(a.component(j)(r, col), i, p, chart) -
                                   finite_difference(a.component(i)(r, col), j, p, chart);
            CHECK(std::abs(symbolic - numeric) <= 1e-6 * std::max(1.0, std::abs(symbolic)));
          }
  }
}

TEST_CASE("wedge bracket") {
  Chart chart = Chart::cube(2, 0.0, 1.0);
  auto u1 = catalog_algebra("u1_in_so2");
  ExprMatrix gen = ExprMatrix::constant(u1->basis()[0]);
  LieValuedForm alpha(chart, 1, {parse("x1", 2) * gen, parse("x2^2", 2) * gen}, u1);
  CHECK(max_norm(wedge_bracket(alpha, alpha), chart.sample_points()).value == 0.0);

  Matrix a = L(3, 1, 2), b = L(3, 1, 3);
  LieValuedForm p(chart, 1, {ExprMatrix::constant(a), ExprMatrix(3, 3)});
  LieValuedForm q(chart, 1, {ExprMatrix(3, 3), ExprMatrix::constant(b)});
  CHECK((wedge_bracket(p, q).component(0, 1).evaluate(chart.center()) - a * b).norm() == 0.0);
  LieValuedForm q1(chart, 1, {ExprMatrix::constant(b), ExprMatrix(3, 3)});
  CHECK(wedge_bracket(p, q1).component(0, 1).is_zero());

  Rng rng(15);
  Chart chart3 = Chart::cube(3, -1.0, 1.0, 3);
  auto so3 = catalog_algebra("so(3)");
  LieValuedForm x1 = random_form(rng, chart3, so3), x2 = random_form(rng, chart3, so3);
  LieValuedForm w = wedge_bracket(x1, x2);
  for (const auto& pt : chart3.sample_points()) {
    auto va = at(x1, pt), vb = at(x2, pt), vw = at(w, pt);
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        CHECK((vw[w.pair_index(i, j)] - (va[i] * vb[j] - va[j] * vb[i])).norm() <= 1e-10);
  }
}

TEST_CASE("field strength") {
  Chart chart = Chart::cube(2, 0.0, 1.0);
  auto so3 = catalog_algebra("so(3)");
  CHECK(max_norm(field_strength(LieValuedForm::zero(chart, 1, 3, so3)), chart.sample_points()).value == 0.0);

  auto u1 = catalog_algebra("u1_in_so2");
  ExprMatrix gen = ExprMatrix::constant(u1->basis()[0]);
  LieValuedForm a(chart, 1, {ExprMatrix(2, 2), parse("x1^2", 2) * gen}, u1);
  LieValuedForm f = field_strength(a);
  for (const auto& p : chart.interior_points(20)) {
    Matrix value = f.component(0, 1).evaluate(p);
    CHECK((value - 2 * p[0] * u1->basis()[0]).norm() <= 1e-14);
    const double numeric = finite_difference(a.component(1)(0, 1), 0, p, chart);
    CHECK(std::abs(value(0, 1) - numeric) <= 1e-6 * std::max(1.0, std::abs(numeric)));
  }

  Rng rng(16);
  Chart chart3 = Chart::cube(3, -1.0, 1.0, 3);
  LieValuedForm random = random_form(rng, chart3, so3);
  CHECK(algebra_residual(field_strength(random), *so3, chart3.sample_points()).value <= 1e-12);
}

TEST_CASE("Maurer-Cartan equation on random group fields") {
  Rng rng(17);
  Chart chart = Chart::cube(3, -0.8, 0.8, 4);
  for (int n : {3, 4, 5}) {
    GroupValuedField h(chart, random_rotation_field(rng, n, 3, 4), catalog_group("so(" + std::to_string(n) + ")"));
    LieValuedForm mc = maurer_cartan_pullback(h);
    CHECK(max_norm(field_strength(mc), chart.sample_points()).value <= 1e-8);
    CHECK(algebra_residual(mc, h.group->algebra(), chart.sample_points()).value <= 1e-12);
    for (const auto& p : chart.interior_points(5)) {
      auto values = at(mc, p);
      for (int i = 0; i < 3; ++i) CHECK((values[i] - numeric_maurer_cartan(h, i, p)).norm() <= 1e-6);
    }
  }
}
