#pragma once

// Normal deformations Q' = R_h Q realized on local representations.
//
// Subbundles are never materialized. A connection on Q is carried as its
// pullback along a local section s, and the deformed section s' = R_h ∘ s is
// tracked as a label. Every operation is symbolic; pointwise contracts are
// certified on Chart::sample_points().

#include "ndef/fields.hpp"

#include <optional>
#include <string>

namespace ndef {

class DeformError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// h leaves the normaliser N_H(G) somewhere on the chart.
class AdmissibilityError : public DeformError {
 public:
  AdmissibilityError(const std::string& what, Residual worst) : DeformError(what), worst_(std::move(worst)) {}
  const Residual& worst() const { return worst_; }

 private:
  Residual worst_;
};

/// s*A for a connection A, together with the section it refers to.
struct LocalConnection {
  LieValuedForm form;
  std::string section = "s";
  /// True when A is a connection on Q (g-valued); false for ambient ones.
  bool compatible = true;
};

/// Local frame e (column a holds e_a in coordinate components) with its
/// coframe β = e^{-1} and metric g_{μν} = Σ_a β^a_μ β^a_ν.
class FrameField {
 public:
  FrameField(Chart chart, ExprMatrix e);
  static FrameField identity(const Chart& chart);

  const Chart& chart() const { return chart_; }
  int size() const { return e_.rows(); }
  const ExprMatrix& frame() const { return e_; }
  const ExprMatrix& coframe() const { return coframe_; }
  const ExprMatrix& metric() const { return metric_; }
  const ExprMatrix& inverse_metric() const { return inverse_metric_; }

  /// e' = e·h, i.e. e'_i = h^j_i e_j.
  FrameField transformed(const ExprMatrix& h) const;
  /// The coframe as a D×1-valued 1-form, component μ holding (β^a_μ)_a.
  LieValuedForm coframe_form() const;

 private:
  Chart chart_;
  ExprMatrix e_;
  ExprMatrix coframe_;
  ExprMatrix metric_;
  ExprMatrix inverse_metric_;
};

/// An admissible h together with the data every deformation formula needs.
class DeformationSetup {
 public:
  const Splitting& splitting() const { return *split_; }
  const SplittingPtr& splitting_ptr() const { return split_; }
  const GroupValuedField& h() const { return h_; }
  const ExprMatrix& h_inverse() const { return h_inverse_; }
  /// h*μ_H, components h^{-1} ∂_i h.
  const LieValuedForm& maurer_cartan() const { return maurer_cartan_; }
  const Chart& chart() const { return h_.chart; }

  /// Worst normaliser residual over the sample points.
  const Residual& normaliser_residual() const { return normaliser_; }
  const Residual& centraliser_residual() const { return centraliser_; }
  bool centraliser_valued() const { return centraliser_valued_; }
  bool constant() const { return constant_; }
  /// h is syntactically a scalar multiple of the identity.
  bool conformal() const { return conformal_; }

 private:
  friend DeformationSetup check_admissibility(GroupValuedField h, SplittingPtr split);
  DeformationSetup(GroupValuedField h, SplittingPtr split);

  SplittingPtr split_;
  GroupValuedField h_;
  ExprMatrix h_inverse_;
  LieValuedForm maurer_cartan_;
  Residual normaliser_;
  Residual centraliser_;
  bool centraliser_valued_ = false;
  bool constant_ = false;
  bool conformal_ = false;
};

/// Requires a valid group field into H and h(x) ∈ N_H(G) at every sample
/// point; throws AdmissibilityError otherwise.
DeformationSetup check_admissibility(GroupValuedField h, SplittingPtr split);

/// Largest ‖pr_m‖ of the components.
Residual compatibility_residual(const LieValuedForm& form, const Splitting& split);

/// s'*(f_{Q,h}(A)) = Ad(h^{-1}) ∘ s*A + pr_g ∘ h*μ_H.
LocalConnection deform_connection(const LocalConnection& a, const DeformationSetup& setup);

/// s'*(f̂_Q(A)) = Ad(h^{-1}) ∘ s*A + h*μ_H (h-valued).
LieValuedForm extend_connection_rep(const LocalConnection& a, const DeformationSetup& setup);

/// pr_g ∘ A on local components.
LocalConnection restrict_project_connection(const LieValuedForm& ambient, const Splitting& split,
                                            std::string section = "s");

/// s'*ζ_h = pr_m ∘ h*μ_H.
LieValuedForm zeta_form(const DeformationSetup& setup);

/// pr_m ∘ A0.
LieValuedForm intrinsic_torsion(const LieValuedForm& a0, const Splitting& split);

/// Change of intrinsic torsion, as a representative with respect to s:
///   Ad(h) pr_m Ad(h^{-1}) s*A0' − pr_m s*A0 + Ad(h) pr_m h*μ_H.
LieValuedForm torsion_change(const LieValuedForm& a0, const LieValuedForm& a0_prime, const DeformationSetup& setup);

/// The same quantity computed by pulling A0' back along s' first:
///   Ad(h) pr_m (s'*A0') − pr_m s*A0.
LieValuedForm torsion_change_direct(const LieValuedForm& a0, const LieValuedForm& a0_prime,
                                    const DeformationSetup& setup);

/// Representative along s' = s·h of an ambient connection given along s:
/// Ad(h^{-1}) A + h*μ_H.
LieValuedForm pullback_to_deformed_section(const LieValuedForm& ambient, const DeformationSetup& setup);

/// Inverse of pullback_to_deformed_section: Ad(h) A' − (∂h) h^{-1}.
LieValuedForm pushforward_from_deformed_section(const LieValuedForm& ambient_prime, const DeformationSetup& setup);

/// Change of local section s ↦ s·g: Ad(g^{-1}) A + g*μ_G. Throws if g
/// leaves its group.
LocalConnection gauge_transform(const LocalConnection& a, const GroupValuedField& g);

struct ConformalResult {
  LocalConnection connection;
  FrameField frame;
  LieValuedForm zeta;
  /// max difference between the theorem path and the pullback path.
  Residual coincidence;
};

/// h = φ·1_D acting on a G ⊆ SO(D) structure; `split` is gl(D) = g ⊕ m̃.
ConformalResult conformal_deform(const LocalConnection& a, const Expr& phi, const FrameField& frame,
                                 SplittingPtr split);

/// Constant h0 ∈ N_H(G): components ρ(h0^{-1}) A ρ(h0).
LocalConnection constant_deform(const LocalConnection& a, const Matrix& h0, const Splitting& split);

/// Centraliser-valued h: s'*A' = s*A.
LocalConnection central_pullback_deform(const LocalConnection& a, const DeformationSetup& setup);

/// Defining section τ0 for G ⊆ Stab(τ0). Construction samples G and checks
/// the stabiliser condition.
struct DefiningSectionModel {
  RepresentationModel rep;

  DefiningSectionModel(RepresentationModel rep, const LieAlgebraModel& g);
};

/// Components of τ' relative to the undeformed section: ρ(h(x)) τ0.
Vector deform_defining_section(const DefiningSectionModel& ds, const DeformationSetup& setup,
                               std::span<const double> x);

/// Levi-Civita connection of the frame's metric in that frame, via the
/// Christoffel symbols of g_{μν} rotated into the frame:
///   ω^a_{b μ} = β^a_ν (∂_μ e^ν_b + Γ^ν_{μλ} e^λ_b).
LieValuedForm levi_civita_connection(const FrameField& frame);

/// dβ + ω∧β as a D×1-valued 2-form (zero for a torsion-free ω).
LieValuedForm frame_torsion(const FrameField& frame, const LieValuedForm& connection);

/// max over points and frame indices of |(∇_{e_i} g)(e_j, e_k)| =
/// |A(e_i)_{kj} + A(e_i)_{jk}|.
Residual metric_compatibility_residual(const LieValuedForm& connection, const FrameField& frame);

struct CompositionDiagnostic {
  /// f_{Q',h2} ∘ f_{Q,h1} versus f_{Q,h1·h2}.
  Residual discrepancy;
  /// Ad(h1) and Ad(h2) preserve m at every sample point.
  bool m_invariant = false;
  Residual m_invariance;
};

CompositionDiagnostic composition_discrepancy(const LocalConnection& a, const DeformationSetup& first,
                                              const DeformationSetup& second);

/// Pointwise product h1·h2 of two fields into the same group.
GroupValuedField multiply(const GroupValuedField& h1, const GroupValuedField& h2);
/// Pointwise inverse.
GroupValuedField pointwise_inverse(const GroupValuedField& h);

}  // namespace ndef
