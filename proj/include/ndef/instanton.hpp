#pragma once

// Instanton bundles of metric G-structures. A 2-form is identified with the
// antisymmetric matrix of its components in the orthonormal coframe; the
// instanton bundle W(Q) is the image of g ⊆ so(D) under that identification.

#include "ndef/deform.hpp"

namespace ndef {

class InstantonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Orthonormal-coframe components of a Lie(B)-valued 2-form: for each basis
/// direction c of Lie(B), the antisymmetric D×D matrix ω^c_{ab} with
/// F = Σ_c ½ ω^c_{ab} β^a∧β^b ⊗ B_c.
struct TwoFormMatrixRep {
  FrameField frame;
  AlgebraPtr basis;
  std::vector<ExprMatrix> directions;

  /// Back to coordinate components: F_{μν} = β^a_μ β^b_ν ω_{ab}.
  LieValuedForm reconstruct() const;
};

TwoFormMatrixRep two_form_components(const LieValuedForm& f, const FrameField& frame, AlgebraPtr basis);

/// A scalar 2-form, e.g. an abelian field strength, in the same shape.
TwoFormMatrixRep scalar_two_form_components(const LieValuedForm& f, const FrameField& frame);

/// Φ_h(ω) = hᵀ ω h.
Matrix phi_map(const Matrix& h, const Matrix& omega);

/// max over the orthonormal g-basis E of ‖pr_m N‖ / ‖N‖, N the antisymmetric
/// part of Φ_h(E). Scale-invariant in h. `so_split` is so(D) = g ⊕ m.
Check phi_preservation(const Matrix& h, const Splitting& so_split);

/// Pointwise Φ-preservation over the sample points; no admissibility gate.
Residual phi_preservation_field(const GroupValuedField& h, const Splitting& so_split);

struct PreservationVerdict {
  bool preserved = false;
  Residual worst;
};

/// Φ_{h(x)} preserves g at every sample point of an admissible setup.
PreservationVerdict instanton_bundle_preserved(const DeformationSetup& setup, const Splitting& so_split,
                                               double tolerance = tol::kAlgebraic);

struct InstantonVerdict {
  bool instanton = false;
  Residual worst;
  /// Worst ‖pr_m ω^c‖ per Lie(B) direction c.
  std::vector<Residual> per_direction;
};

/// F ∈ W(Q) ⊗ Lie(B): every ω^c is g-valued at every sample point.
InstantonVerdict instanton_check(const TwoFormMatrixRep& rep, const Splitting& so_split,
                                 double tolerance = tol::kAlgebraic);
InstantonVerdict instanton_check(const LieValuedForm& f, const FrameField& frame, const Splitting& so_split,
                                 AlgebraPtr basis, double tolerance = tol::kAlgebraic);

/// *ω_{ab} = ½ ε_{abcd} ω_{cd}; D = 4 only.
Matrix hodge_star(const Matrix& omega);

struct HodgeVerdict {
  bool self_dual = false;
  bool anti_self_dual = false;
  /// max ‖ω − *ω‖ and ‖ω + *ω‖ over directions and sample points.
  Residual self_dual_residual;
  Residual anti_self_dual_residual;
};

HodgeVerdict hodge_selfdual_oracle(const TwoFormMatrixRep& rep, double tolerance = tol::kAlgebraic);

}  // namespace ndef
