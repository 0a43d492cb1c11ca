#include "ndef/instanton.hpp"

#include <array>

namespace ndef {

namespace {

void require_so_split(const Splitting& so_split, int d, const char* what) {
  if (so_split.matrix_size() != d)
    throw InstantonError(std::string(what) + ": splitting acts on " + std::to_string(so_split.matrix_size()) +
                         "x" + std::to_string(so_split.matrix_size()) + " matrices, expected " + std::to_string(d));
  if (!so_split.ambient().all_antisymmetric())
    throw InstantonError(std::string(what) + ": ambient algebra " + so_split.ambient().name() + " is not inside so(D)");
}

AlgebraPtr real_line() {
  static const AlgebraPtr line = std::make_shared<const LieAlgebraModel>("R", 1, std::vector<Matrix>{Matrix::Ones(1, 1)});
  return line;
}

int permutation_sign(std::array<int, 4> p) {
  int sign = 1;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      if (p[i] == p[j]) return 0;
      if (p[i] > p[j]) sign = -sign;
    }
  return sign;
}

}  // namespace

TwoFormMatrixRep two_form_components(const LieValuedForm& f, const FrameField& frame, AlgebraPtr basis) {
  if (!basis) throw InstantonError("two-form components: missing Lie(B) basis");
  if (f.degree() != 2) throw InstantonError("two-form components: expected a 2-form");
  if (f.chart().dim() != frame.chart().dim()) throw InstantonError("two-form components: chart mismatch");
  if (f.rows() != basis->matrix_size() || f.cols() != basis->matrix_size())
    throw InstantonError("two-form components: values do not match " + basis->name());

  const int d = frame.size();
  const int k = basis->dimension();
  const Matrix gram_inverse = basis->gram().inverse();
  std::vector<ExprMatrix> directions;
  for (int c = 0; c < k; ++c) {
    ExprMatrix coordinate(d, d);
    for (int mu = 0; mu < d; ++mu) {
      for (int nu = mu + 1; nu < d; ++nu) {
        Expr coefficient = expr::constant(0.0);
        for (int j = 0; j < k; ++j) {
          if (gram_inverse(c, j) == 0.0) continue;
          coefficient = expr::add(coefficient, expr::mul(expr::constant(gram_inverse(c, j)),
                                                         frobenius(basis->basis()[j], f.component(mu, nu))));
        }
        coordinate(mu, nu) = coefficient;
        coordinate(nu, mu) = expr::neg(coefficient);
      }
    }
    directions.push_back(frame.frame().transpose() * coordinate * frame.frame());
  }
  return {frame, std::move(basis), std::move(directions)};
}

TwoFormMatrixRep scalar_two_form_components(const LieValuedForm& f, const FrameField& frame) {
  return two_form_components(f, frame, real_line());
}

LieValuedForm TwoFormMatrixRep::reconstruct() const {
  const int d = frame.size();
  const int n = basis->matrix_size();
  const ExprMatrix& beta = frame.coframe();
  std::vector<ExprMatrix> coordinate;
  for (const auto& omega : directions) coordinate.push_back(beta.transpose() * omega * beta);
  std::vector<ExprMatrix> components(LieValuedForm::component_count(d, 2), ExprMatrix(n, n));
  LieValuedForm shape = LieValuedForm::zero(frame.chart(), 2, n);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = mu + 1; nu < d; ++nu) {
      ExprMatrix sum(n, n);
      for (std::size_t c = 0; c < directions.size(); ++c)
        sum = sum + coordinate[c](mu, nu) * ExprMatrix::constant(basis->basis()[c]);
      components[shape.pair_index(mu, nu)] = sum;
    }
  return LieValuedForm(frame.chart(), 2, std::move(components), basis);
}

Matrix phi_map(const Matrix& h, const Matrix& omega) {
  if (h.rows() != h.cols() || omega.rows() != omega.cols() || h.rows() != omega.rows())
    throw InstantonError("phi map: size mismatch");
  return h.transpose() * omega * h;
}

Check phi_preservation(const Matrix& h, const Splitting& so_split) {
  require_so_split(so_split, static_cast<int>(h.rows()), "phi preservation");
  double worst = 0.0;
  for (const auto& e : so_split.sub_basis()) {
    Matrix image = phi_map(h, e);
    Matrix antisymmetric = 0.5 * (image - image.transpose());
    const double norm = antisymmetric.norm();
    // Invertible h never maps a nonzero E to zero.
    const double r = norm > 0.0 ? so_split.project_m(antisymmetric).norm() / norm : 1.0;
    worst = std::max(worst, std::isnan(r) ? std::numeric_limits<double>::infinity() : r);
  }
  return {worst <= so_split.tolerance(), worst};
}

Residual phi_preservation_field(const GroupValuedField& h, const Splitting& so_split) {
  require_so_split(so_split, h.matrix_size(), "phi preservation");
  MatrixProgram program({h.entries});
  return worst_over(h.chart.sample_points(),
                    [&](const Point& p) { return phi_preservation(program(p).front(), so_split).residual; });
}

PreservationVerdict instanton_bundle_preserved(const DeformationSetup& setup, const Splitting& so_split,
                                               double tolerance) {
  PreservationVerdict out;
  out.worst = phi_preservation_field(setup.h(), so_split);
  out.preserved = out.worst.value <= tolerance;
  return out;
}

InstantonVerdict instanton_check(const TwoFormMatrixRep& rep, const Splitting& so_split, double tolerance) {
  require_so_split(so_split, rep.frame.size(), "instanton check");
  InstantonVerdict out;
  out.per_direction.resize(rep.directions.size());
  MatrixProgram program(rep.directions);
  for (const auto& p : rep.frame.chart().sample_points()) {
    auto values = program(p);
    for (std::size_t c = 0; c < values.size(); ++c) {
      const double r = so_split.project_m(values[c]).norm();
      out.per_direction[c].absorb(r, p);
      out.worst.absorb(r, p);
    }
  }
  if (out.worst.point.empty()) out.worst.point = rep.frame.chart().center();
  out.instanton = out.worst.value <= tolerance;
  return out;
}

InstantonVerdict instanton_check(const LieValuedForm& f, const FrameField& frame, const Splitting& so_split,
                                 AlgebraPtr basis, double tolerance) {
  return instanton_check(two_form_components(f, frame, std::move(basis)), so_split, tolerance);
}

Matrix hodge_star(const Matrix& omega) {
  if (omega.rows() != 4 || omega.cols() != 4) throw InstantonError("hodge star: only defined for D = 4");
  Matrix out = Matrix::Zero(4, 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          const int s = permutation_sign({a, b, c, d});
          if (s != 0) out(a, b) += 0.5 * s * omega(c, d);
        }
  return out;
}

HodgeVerdict hodge_selfdual_oracle(const TwoFormMatrixRep& rep, double tolerance) {
  if (rep.frame.size() != 4) throw InstantonError("hodge oracle: requires D = 4");
  HodgeVerdict out;
  MatrixProgram program(rep.directions);
  for (const auto& p : rep.frame.chart().sample_points()) {
    for (const auto& omega : program(p)) {
      Matrix star = hodge_star(omega);
      out.self_dual_residual.absorb((omega - star).norm(), p);
      out.anti_self_dual_residual.absorb((omega + star).norm(), p);
    }
  }
  out.self_dual = out.self_dual_residual.value <= tolerance;
  out.anti_self_dual = out.anti_self_dual_residual.value <= tolerance;
  return out;
}

}  // namespace ndef
