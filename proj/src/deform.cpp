#include "ndef/deform.hpp"

#include <sstream>

namespace ndef {

namespace {

std::string format_point(const Point& p) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < p.size(); ++i) out << (i ? ", " : "") << p[i];
  out << ')';
  return out.str();
}

/// Ad(a) X = a X a^{-1} on expression matrices.
ExprMatrix conjugate(const ExprMatrix& a, const ExprMatrix& x, const ExprMatrix& a_inverse) {
  return a * x * a_inverse;
}

ExprMatrix project_onto(const std::vector<Matrix>& orthonormal, const ExprMatrix& x) {
  if (orthonormal.empty()) return ExprMatrix(x.rows(), x.cols());
  return project(orthonormal, x);
}

void require_same_chart(const Chart& a, const Chart& b, const char* what) {
  if (a.dim() != b.dim()) throw DeformError(std::string(what) + ": chart dimensions differ");
}

void require_one_form(const LieValuedForm& a, int n, const char* what) {
  if (a.degree() != 1) throw DeformError(std::string(what) + ": expected a 1-form");
  if (a.rows() != n || a.cols() != n)
    throw DeformError(std::string(what) + ": connection values are " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + ", expected " + std::to_string(n) + "x" + std::to_string(n));
}

}  // namespace

// ---------------------------------------------------------------------------
// Frames

FrameField::FrameField(Chart chart, ExprMatrix e) : chart_(std::move(chart)), e_(std::move(e)) {
  if (e_.rows() != e_.cols() || e_.rows() != chart_.dim())
    throw DeformError("frame: expected a " + std::to_string(chart_.dim()) + "x" + std::to_string(chart_.dim()) +
                      " matrix of frame components");
  MatrixProgram program({e_});
  for (const auto& p : chart_.sample_points()) {
    Matrix value = program(p).front();
    Eigen::FullPivLU<Matrix> lu(value);
    if (!value.allFinite() || !lu.isInvertible())
      throw DeformError("frame: vectors are linearly dependent at " + format_point(p));
  }
  coframe_ = inverse(e_);
  metric_ = coframe_.transpose() * coframe_;
  inverse_metric_ = e_ * e_.transpose();
}

FrameField FrameField::identity(const Chart& chart) { return FrameField(chart, ExprMatrix::identity(chart.dim())); }

FrameField FrameField::transformed(const ExprMatrix& h) const { return FrameField(chart_, e_ * h); }

LieValuedForm FrameField::coframe_form() const {
  const int d = size();
  std::vector<ExprMatrix> components;
  for (int mu = 0; mu < d; ++mu) {
    ExprMatrix column(d, 1);
    for (int a = 0; a < d; ++a) column(a, 0) = coframe_(a, mu);
    components.push_back(column);
  }
  return LieValuedForm(chart_, 1, std::move(components));
}

// ---------------------------------------------------------------------------
// Admissibility

DeformationSetup::DeformationSetup(GroupValuedField h, SplittingPtr split)
    : split_(std::move(split)),
      h_(std::move(h)),
      h_inverse_(inverse(h_.entries)),
      maurer_cartan_(LieValuedForm::zero(h_.chart, 1, h_.matrix_size())) {
  std::vector<ExprMatrix> components;
  for (int i = 0; i < h_.chart.dim(); ++i) components.push_back(h_inverse_ * h_.entries.derivative(i));
  maurer_cartan_ = LieValuedForm(h_.chart, 1, std::move(components), split_->ambient_ptr());
}

DeformationSetup check_admissibility(GroupValuedField h, SplittingPtr split) {
  if (!split) throw DeformError("admissibility: missing splitting");
  if (h.matrix_size() != split->matrix_size() || h.group->algebra().dimension() != split->ambient().dimension())
    throw DeformError("admissibility: h takes values in " + h.group->name() + ", not in the group of " +
                      split->ambient().name());
  FieldValidation validation = validate_group_field(h);
  if (!validation.valid) {
    throw AdmissibilityError("admissibility: h leaves " + h.group->name() + " at " +
                                 format_point(validation.membership.point) +
                                 " (residual " + std::to_string(validation.membership.value) + ")",
                             validation.membership);
  }

  DeformationSetup setup(std::move(h), split);
  MatrixProgram program({setup.h_.entries});
  for (const auto& p : setup.chart().sample_points()) {
    Matrix value = program(p).front();
    setup.normaliser_.absorb(normaliser_membership(value, *split).residual, p);
    setup.centraliser_.absorb(centraliser_membership(value, split->sub()).residual, p);
  }
  const double tolerance = split->tolerance();
  if (setup.normaliser_.value > tolerance) {
    throw AdmissibilityError("admissibility: h(x) is not in the normaliser of " + split->sub().name() + " at " +
                                 format_point(setup.normaliser_.point) + " (residual " +
                                 std::to_string(setup.normaliser_.value) + ")",
                             setup.normaliser_);
  }
  setup.centraliser_valued_ = setup.centraliser_.value <= tolerance;
  setup.constant_ = setup.h_.entries.is_constant();

  const ExprMatrix& m = setup.h_.entries;
  bool scalar = true;
  for (int r = 0; r < m.rows() && scalar; ++r)
    for (int c = 0; c < m.cols() && scalar; ++c)
      scalar = (r == c) ? expr::structurally_equal(m(r, c), m(0, 0)) : expr::is_zero(m(r, c));
  setup.conformal_ = scalar;
  return setup;
}

Residual compatibility_residual(const LieValuedForm& form, const Splitting& split) {
  FormEvaluator eval(form);
  return worst_over(form.chart().sample_points(), [&](const Point& p) {
    double worst = 0.0;
    for (const auto& m : eval(p)) worst = std::max(worst, split.project_m(m).norm());
    return worst;
  });
}

// ---------------------------------------------------------------------------
// Connections

LieValuedForm pullback_to_deformed_section(const LieValuedForm& ambient, const DeformationSetup& setup) {
  require_one_form(ambient, setup.splitting().matrix_size(), "pullback");
  require_same_chart(ambient.chart(), setup.chart(), "pullback");
  const ExprMatrix& h = setup.h().entries;
  const ExprMatrix& hinv = setup.h_inverse();
  std::vector<ExprMatrix> out;
  for (int i = 0; i < ambient.chart().dim(); ++i)
    out.push_back(conjugate(hinv, ambient.component(i), h) + setup.maurer_cartan().component(i));
  return LieValuedForm(ambient.chart(), 1, std::move(out), setup.splitting().ambient_ptr());
}

LieValuedForm pushforward_from_deformed_section(const LieValuedForm& ambient_prime, const DeformationSetup& setup) {
  require_one_form(ambient_prime, setup.splitting().matrix_size(), "pushforward");
  require_same_chart(ambient_prime.chart(), setup.chart(), "pushforward");
  const ExprMatrix& h = setup.h().entries;
  const ExprMatrix& hinv = setup.h_inverse();
  std::vector<ExprMatrix> out;
  for (int i = 0; i < ambient_prime.chart().dim(); ++i)
    out.push_back(conjugate(h, ambient_prime.component(i), hinv) - h.derivative(i) * hinv);
  return LieValuedForm(ambient_prime.chart(), 1, std::move(out), setup.splitting().ambient_ptr());
}

LocalConnection deform_connection(const LocalConnection& a, const DeformationSetup& setup) {
  const Splitting& split = setup.splitting();
  require_one_form(a.form, split.matrix_size(), "deform");
  require_same_chart(a.form.chart(), setup.chart(), "deform");
  const ExprMatrix& h = setup.h().entries;
  const ExprMatrix& hinv = setup.h_inverse();
  std::vector<ExprMatrix> out;
  for (int i = 0; i < a.form.chart().dim(); ++i)
    out.push_back(conjugate(hinv, a.form.component(i), h) +
                  project_onto(split.sub_basis(), setup.maurer_cartan().component(i)));
  LieValuedForm form(a.form.chart(), 1, std::move(out), split.sub_ptr());
  Residual leak = compatibility_residual(form, split);
  if (leak.value > split.tolerance())
    throw DeformError("deform: output leaves " + split.sub().name() + " at " + format_point(leak.point) +
                      " (residual " + std::to_string(leak.value) + "); is the input connection g-valued?");
  return {std::move(form), a.section + "'", true};
}

LieValuedForm extend_connection_rep(const LocalConnection& a, const DeformationSetup& setup) {
  return pullback_to_deformed_section(a.form, setup);
}

LocalConnection restrict_project_connection(const LieValuedForm& ambient, const Splitting& split,
                                            std::string section) {
  require_one_form(ambient, split.matrix_size(), "restrict");
  LieValuedForm projected = ambient.map([&](const ExprMatrix& x) { return project_onto(split.sub_basis(), x); },
                                        split.sub_ptr());
  return {std::move(projected), std::move(section), true};
}

LieValuedForm zeta_form(const DeformationSetup& setup) {
  const Splitting& split = setup.splitting();
  return setup.maurer_cartan().map([&](const ExprMatrix& x) { return project_onto(split.complement_basis(), x); });
}

LieValuedForm intrinsic_torsion(const LieValuedForm& a0, const Splitting& split) {
  require_one_form(a0, split.matrix_size(), "intrinsic torsion");
  return a0.map([&](const ExprMatrix& x) { return project_onto(split.complement_basis(), x); });
}

LieValuedForm torsion_change(const LieValuedForm& a0, const LieValuedForm& a0_prime, const DeformationSetup& setup) {
  const Splitting& split = setup.splitting();
  require_one_form(a0, split.matrix_size(), "torsion change");
  require_one_form(a0_prime, split.matrix_size(), "torsion change");
  const ExprMatrix& h = setup.h().entries;
  const ExprMatrix& hinv = setup.h_inverse();
  const auto& m = split.complement_basis();
  std::vector<ExprMatrix> out;
  for (int i = 0; i < a0.chart().dim(); ++i) {
    ExprMatrix moved = conjugate(h, project_onto(m, conjugate(hinv, a0_prime.component(i), h)), hinv);
    ExprMatrix zeta = conjugate(h, project_onto(m, setup.maurer_cartan().component(i)), hinv);
    out.push_back(moved - project_onto(m, a0.component(i)) + zeta);
  }
  return LieValuedForm(a0.chart(), 1, std::move(out));
}

LieValuedForm torsion_change_direct(const LieValuedForm& a0, const LieValuedForm& a0_prime,
                                    const DeformationSetup& setup) {
  const Splitting& split = setup.splitting();
  require_one_form(a0, split.matrix_size(), "torsion change");
  LieValuedForm pulled = pullback_to_deformed_section(a0_prime, setup);
  const ExprMatrix& h = setup.h().entries;
  const ExprMatrix& hinv = setup.h_inverse();
  const auto& m = split.complement_basis();
  std::vector<ExprMatrix> out;
  for (int i = 0; i < a0.chart().dim(); ++i)
    out.push_back(conjugate(h, project_onto(m, pulled.component(i)), hinv) - project_onto(m, a0.component(i)));
  return LieValuedForm(a0.chart(), 1, std::move(out));
}

LocalConnection gauge_transform(const LocalConnection& a, const GroupValuedField& g) {
  require_one_form(a.form, g.matrix_size(), "gauge transform");
  require_same_chart(a.form.chart(), g.chart, "gauge transform");
  FieldValidation validation = validate_group_field(g);
  if (!validation.valid)
    throw DeformError("gauge transform: g leaves " + g.group->name() + " at " +
                      format_point(validation.membership.point));
  const ExprMatrix ginv = inverse(g.entries);
  std::vector<ExprMatrix> out;
  for (int i = 0; i < a.form.chart().dim(); ++i)
    out.push_back(conjugate(ginv, a.form.component(i), g.entries) + ginv * g.entries.derivative(i));
  return {LieValuedForm(a.form.chart(), 1, std::move(out), a.form.value_algebra()), a.section + "·g", a.compatible};
}

ConformalResult conformal_deform(const LocalConnection& a, const Expr& phi, const FrameField& frame,
                                 SplittingPtr split) {
  if (!split) throw DeformError("conformal: missing splitting");
  const int n = split->matrix_size();
  if (frame.size() != n) throw DeformError("conformal: frame size does not match the structure group");
  const Chart& chart = frame.chart();
  Program phi_program(std::vector<Expr>{phi});
  for (const auto& p : chart.sample_points()) {
    const double value = phi_program.evaluate(p).front();
    if (!(value > 0.0))
      throw DeformError("conformal: phi must be positive, got " + std::to_string(value) + " at " + format_point(p));
  }
  GroupValuedField h(chart, phi * ExprMatrix::identity(n), group_for(split->ambient_ptr()));
  DeformationSetup setup = check_admissibility(h, split);

  LocalConnection theorem = deform_connection(a, setup);
  LocalConnection pulled = central_pullback_deform(a, setup);
  Residual coincidence = max_difference(theorem.form, pulled.form, chart.sample_points());
  return {std::move(theorem), frame.transformed(setup.h().entries), zeta_form(setup), std::move(coincidence)};
}

LocalConnection constant_deform(const LocalConnection& a, const Matrix& h0, const Splitting& split) {
  require_one_form(a.form, split.matrix_size(), "constant deform");
  Check normal = normaliser_membership(h0, split);
  if (!normal.holds) {
    Residual worst;
    worst.absorb(normal.residual, Point{});
    throw AdmissibilityError("constant deform: h0 is not in the normaliser (residual " +
                                 std::to_string(normal.residual) + ")",
                             worst);
  }
  const Matrix h0_inverse = h0.inverse();
  LieValuedForm out = a.form.map([&](const ExprMatrix& x) { return h0_inverse * x * h0; }, split.sub_ptr());
  return {std::move(out), a.section + "'", true};
}

LocalConnection central_pullback_deform(const LocalConnection& a, const DeformationSetup& setup) {
  if (!setup.centraliser_valued())
    throw DeformError("central pullback: h is not centraliser-valued (residual " +
                      std::to_string(setup.centraliser_residual().value) + " at " +
                      format_point(setup.centraliser_residual().point) + ")");
  require_one_form(a.form, setup.splitting().matrix_size(), "central pullback");
  return {a.form.with_algebra(setup.splitting().sub_ptr()), a.section + "'", true};
}

// ---------------------------------------------------------------------------
// Defining sections

DefiningSectionModel::DefiningSectionModel(RepresentationModel r, const LieAlgebraModel& g) : rep(std::move(r)) {
  if (!rep.tau0) throw DeformError("defining section: representation has no tau0");
  if (rep.source_dim != g.matrix_size()) throw DeformError("defining section: representation and group sizes differ");
  for (const auto& sample : sample_group_elements(g, 8)) {
    Check stab = stabiliser_membership(sample, rep);
    if (!stab.holds)
      throw DeformError("defining section: G does not stabilise tau0 (residual " + std::to_string(stab.residual) + ")");
  }
}

Vector deform_defining_section(const DefiningSectionModel& ds, const DeformationSetup& setup,
                               std::span<const double> x) {
  if (ds.rep.source_dim != setup.splitting().matrix_size())
    throw DeformError("defining section: representation does not act on the ambient group");
  return ds.rep.matrix_for(setup.h().at(x)) * *ds.rep.tau0;
}

// ---------------------------------------------------------------------------
// Riemannian geometry

LieValuedForm levi_civita_connection(const FrameField& frame) {
  const int d = frame.size();
  const ExprMatrix& e = frame.frame();
  const ExprMatrix& g = frame.metric();
  const ExprMatrix& ginv = frame.inverse_metric();

  std::vector<Differentiator> partials;
  for (int i = 0; i < d; ++i) partials.emplace_back(i);
  std::vector<ExprMatrix> dg;
  for (int i = 0; i < d; ++i) dg.push_back(g.derivative(partials[i]));

  // Christoffel symbols Γ^ν_{μλ}, stored as gamma[μ](ν, λ).
  std::vector<ExprMatrix> gamma(static_cast<std::size_t>(d), ExprMatrix(d, d));
  for (int mu = 0; mu < d; ++mu) {
    for (int lambda = 0; lambda < d; ++lambda) {
      // Lowered symbol Γ_{σμλ}.
      std::vector<Expr> lowered;
      for (int sigma = 0; sigma < d; ++sigma) {
        Expr s = expr::add(dg[mu](sigma, lambda), expr::sub(dg[lambda](sigma, mu), dg[sigma](mu, lambda)));
        lowered.push_back(expr::mul(expr::constant(0.5), s));
      }
      for (int nu = 0; nu < d; ++nu) {
        Expr sum = expr::constant(0.0);
        for (int sigma = 0; sigma < d; ++sigma) sum = expr::add(sum, expr::mul(ginv(nu, sigma), lowered[sigma]));
        gamma[mu](nu, lambda) = sum;
      }
    }
  }

  std::vector<ExprMatrix> out;
  for (int mu = 0; mu < d; ++mu) {
    ExprMatrix covariant = e.derivative(partials[mu]) + gamma[mu] * e;
    out.push_back(frame.coframe() * covariant);
  }
  return LieValuedForm(frame.chart(), 1, std::move(out), catalog_algebra("so(" + std::to_string(d) + ")"));
}

LieValuedForm frame_torsion(const FrameField& frame, const LieValuedForm& connection) {
  LieValuedForm beta = frame.coframe_form();
  return exterior_derivative(beta) + wedge_bracket(connection, beta);
}

Residual metric_compatibility_residual(const LieValuedForm& connection, const FrameField& frame) {
  const int d = frame.size();
  require_one_form(connection, d, "metric compatibility");
  require_same_chart(connection.chart(), frame.chart(), "metric compatibility");
  std::vector<ExprMatrix> all = connection.components();
  all.push_back(frame.frame());
  MatrixProgram program(all);
  return worst_over(frame.chart().sample_points(), [&](const Point& p) {
    auto values = program(p);
    const Matrix& e = values.back();
    double worst = 0.0;
    for (int i = 0; i < d; ++i) {
      Matrix along = Matrix::Zero(d, d);
      for (int mu = 0; mu < d; ++mu) along += e(mu, i) * values[static_cast<std::size_t>(mu)];
      worst = std::max(worst, (along + along.transpose()).cwiseAbs().maxCoeff());
    }
    return worst;
  });
}

// ---------------------------------------------------------------------------
// Composition

GroupValuedField multiply(const GroupValuedField& h1, const GroupValuedField& h2) {
  if (h1.group != h2.group && h1.group->name() != h2.group->name())
    throw DeformError("multiply: fields take values in different groups");
  return GroupValuedField(h1.chart, h1.entries * h2.entries, h1.group);
}

GroupValuedField pointwise_inverse(const GroupValuedField& h) {
  return GroupValuedField(h.chart, inverse(h.entries), h.group);
}

CompositionDiagnostic composition_discrepancy(const LocalConnection& a, const DeformationSetup& first,
                                              const DeformationSetup& second) {
  LocalConnection twice = deform_connection(deform_connection(a, first), second);
  DeformationSetup product = check_admissibility(multiply(first.h(), second.h()), first.splitting_ptr());
  LocalConnection once = deform_connection(a, product);

  CompositionDiagnostic out;
  const auto points = a.form.chart().sample_points();
  out.discrepancy = max_difference(twice.form, once.form, points);

  const Splitting& split = first.splitting();
  MatrixProgram program({first.h().entries, second.h().entries});
  out.m_invariance = worst_over(points, [&](const Point& p) {
    double worst = 0.0;
    for (const auto& h : program(p))
      for (const auto& m : split.complement_basis()) worst = std::max(worst, split.project_g(adjoint(h, m)).norm());
    return worst;
  });
  out.m_invariant = out.m_invariance.value <= split.tolerance();
  return out;
}

}  // namespace ndef
