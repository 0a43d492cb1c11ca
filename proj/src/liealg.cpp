#include "ndef/liealg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>

namespace ndef {

namespace {

void require_same_size(const Matrix& x, const Matrix& y, const char* what) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw LieError(std::string(what) + ": size mismatch (" + std::to_string(x.rows()) + "x" +
                   std::to_string(x.cols()) + " vs " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) + ")");
}

void require_square(const Matrix& x, const char* what) {
  if (x.rows() != x.cols()) throw LieError(std::string(what) + ": matrix is not square");
}

Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

}  // namespace

Matrix bracket(const Matrix& x, const Matrix& y) {
  require_same_size(x, y, "bracket");
  require_square(x, "bracket");
  return x * y - y * x;
}

Matrix exponential(const Matrix& x) {
  require_square(x, "exponential");
  if (!x.allFinite()) throw LieError("exponential: non-finite entries");
  Matrix out = x.exp();
  return out;
}

Matrix adjoint(const Matrix& a, const Matrix& x) {
  require_square(a, "adjoint");
  require_same_size(a, x, "adjoint");
  Eigen::FullPivLU<Matrix> lu_t(a.transpose());
  if (!lu_t.isInvertible()) throw LieError("adjoint: singular group element");
  // (a X) a^{-1} = (a^{-T} (a X)^T)^T
  Matrix ax = a * x;
  return lu_t.solve(ax.transpose()).transpose();
}

double frobenius(const Matrix& x, const Matrix& y) {
  require_same_size(x, y, "frobenius");
  return (x.array() * y.array()).sum();
}

Matrix elementary_rotation(int n, int a, int b) {
  if (a < 0 || b < 0 || a >= n || b >= n || a == b) throw LieError("elementary_rotation: bad indices");
  Matrix m = Matrix::Zero(n, n);
  m(a, b) = 1.0;
  m(b, a) = -1.0;
  return m;
}

// ---------------------------------------------------------------------------

LieAlgebraModel::LieAlgebraModel(std::string name, int matrix_size, std::vector<Matrix> basis, double tolerance)
    : name_(std::move(name)), n_(matrix_size), basis_(std::move(basis)), tolerance_(tolerance) {
  if (n_ <= 0) throw LieError("algebra '" + name_ + "': matrix size must be positive");
  if (tolerance_ < 0) throw LieError("algebra '" + name_ + "': negative tolerance");
  for (const auto& e : basis_)
    if (e.rows() != n_ || e.cols() != n_) throw LieError("algebra '" + name_ + "': basis element has wrong size");

  const auto k = static_cast<Eigen::Index>(basis_.size());
  gram_.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) gram_(i, j) = frobenius(basis_[i], basis_[j]);

  // Modified Gram-Schmidt; a dropped vector means dependence.
  for (const auto& e : basis_) {
    Matrix v = e;
    for (const auto& q : orthonormal_) v -= frobenius(q, v) * q;
    double norm = v.norm();
    if (norm < tol::kDrop * std::max(1.0, e.norm()))
      throw LieError("algebra '" + name_ + "': basis is linearly dependent (degenerate Gram matrix)");
    orthonormal_.push_back(v / norm);
  }

  for (std::size_t a = 0; a < basis_.size(); ++a) {
    for (std::size_t b = a + 1; b < basis_.size(); ++b) {
      Matrix c = bracket(basis_[a], basis_[b]);
      closure_residual_ = std::max(closure_residual_, distance(c));
    }
  }
  if (closure_residual_ > tolerance_)
    throw LieError("algebra '" + name_ + "': not closed under the bracket (residual " +
                   std::to_string(closure_residual_) + ")");
}

Vector LieAlgebraModel::coefficients(const Matrix& x) const {
  if (x.rows() != n_ || x.cols() != n_) throw LieError("coefficients: size mismatch");
  const auto k = static_cast<Eigen::Index>(basis_.size());
  Vector rhs(k);
  for (Eigen::Index i = 0; i < k; ++i) rhs(i) = frobenius(basis_[i], x);
  if (k == 0) return rhs;
  return gram_.ldlt().solve(rhs);
}

Matrix LieAlgebraModel::element(const Vector& c) const {
  if (c.size() != static_cast<Eigen::Index>(basis_.size())) throw LieError("element: coefficient count mismatch");
  Matrix out = Matrix::Zero(n_, n_);
  for (Eigen::Index i = 0; i < c.size(); ++i) out += c(i) * basis_[i];
  return out;
}

Matrix LieAlgebraModel::project(const Matrix& x) const {
  if (x.rows() != n_ || x.cols() != n_) throw LieError("project: size mismatch");
  Matrix out = Matrix::Zero(n_, n_);
  for (const auto& q : orthonormal_) out += frobenius(q, x) * q;
  return out;
}

double LieAlgebraModel::distance(const Matrix& x) const { return (x - project(x)).norm(); }

bool LieAlgebraModel::all_antisymmetric() const {
  return std::all_of(basis_.begin(), basis_.end(),
                     [](const Matrix& e) { return (e + e.transpose()).norm() <= tol::kMatrix * std::max(1.0, e.norm()); });
}

// ---------------------------------------------------------------------------

GroupModel::GroupModel(std::string name, AlgebraPtr algebra, GroupKind kind, double tolerance)
    : name_(std::move(name)), algebra_(std::move(algebra)), kind_(kind), tolerance_(tolerance) {
  if (!algebra_) throw LieError("group '" + name_ + "': missing algebra");
}

namespace {

double orthogonality_residual(const Matrix& a) {
  const Matrix id = identity(a.rows());
  return std::max((a.transpose() * a - id).norm(), std::abs(a.determinant() - 1.0));
}

}  // namespace

double GroupModel::membership_residual(const Matrix& a) const {
  const int n = matrix_size();
  if (a.rows() != n || a.cols() != n) throw LieError("group '" + name_ + "': element has wrong size");
  if (!a.allFinite()) return std::numeric_limits<double>::infinity();
  switch (kind_) {
    case GroupKind::GeneralLinear: {
      Eigen::JacobiSVD<Matrix> svd(a);
      const auto& s = svd.singularValues();
      return s(s.size() - 1) > 1e-12 * std::max(1.0, s(0)) ? 0.0 : 1.0;
    }
    case GroupKind::SpecialOrthogonal:
      return orthogonality_residual(a);
    case GroupKind::Trivial:
      return (a - identity(n)).norm();
    case GroupKind::Connected: {
      double residual = algebra_->all_antisymmetric() ? orthogonality_residual(a) : 0.0;
      if (residual > 0.5) return residual;
      Matrix log_a = a.log();
      if (!log_a.allFinite()) return std::numeric_limits<double>::infinity();
      return std::max(residual, algebra_->distance(log_a));
    }
  }
  return std::numeric_limits<double>::infinity();
}

Check GroupModel::contains(const Matrix& a) const {
  double r = membership_residual(a);
  return {r <= tolerance_, r};
}

// ---------------------------------------------------------------------------

Splitting Splitting::build(AlgebraPtr ambient, AlgebraPtr sub) {
  if (!ambient || !sub) throw LieError("build_splitting: missing algebra");
  if (ambient->matrix_size() != sub->matrix_size())
    throw LieError("build_splitting: '" + sub->name() + "' and '" + ambient->name() + "' have different matrix sizes");
  Splitting s;
  s.ambient_ = ambient;
  s.sub_ = sub;
  const double tolerance = ambient->tolerance();
  for (const auto& e : sub->basis()) {
    double d = ambient->distance(e);
    if (d > tolerance * std::max(1.0, e.norm()))
      throw LieError("build_splitting: '" + sub->name() + "' is not contained in '" + ambient->name() +
                     "' (residual " + std::to_string(d) + ")");
  }
  s.sub_basis_ = sub->orthonormal_basis();

  std::vector<Matrix> joint = s.sub_basis_;
  for (const auto& e : ambient->basis()) {
    Matrix v = e;
    for (const auto& q : joint) v -= frobenius(q, v) * q;
    for (const auto& q : joint) v -= frobenius(q, v) * q;  // second pass for stability
    double norm = v.norm();
    if (norm < tol::kDrop) continue;
    v /= norm;
    joint.push_back(v);
    s.complement_basis_.push_back(v);
  }
  if (static_cast<int>(joint.size()) != ambient->dimension())
    throw LieError("build_splitting: degenerate Gram matrix while completing the basis");

  const auto k = static_cast<Eigen::Index>(ambient->dimension());
  s.projector_g_.resize(k, k);
  s.projector_m_.resize(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    s.projector_g_.col(j) = ambient->coefficients(s.project_g(ambient->basis()[j]));
    s.projector_m_.col(j) = ambient->coefficients(s.project_m(ambient->basis()[j]));
  }
  return s;
}

Matrix Splitting::project_g(const Matrix& x) const {
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (const auto& q : sub_basis_) out += frobenius(q, x) * q;
  return out;
}

Matrix Splitting::project_m(const Matrix& x) const {
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (const auto& q : complement_basis_) out += frobenius(q, x) * q;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Matrix> sample_group_elements(const LieAlgebraModel& algebra, int random_products, unsigned seed) {
  std::vector<Matrix> out;
  const auto& basis = algebra.orthonormal_basis();
  if (basis.empty()) return out;
  for (const auto& q : basis)
    for (double t : {1.0, -1.0, 0.5, -0.5}) out.push_back(exponential(t * q));
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> angle(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, basis.size() - 1);
  for (int i = 0; i < random_products; ++i) {
    Matrix g = identity(algebra.matrix_size());
    for (int k = 0; k < 3; ++k) g = g * exponential(angle(rng) * basis[pick(rng)]);
    out.push_back(std::move(g));
  }
  return out;
}

Check check_splitting_invariance(const Splitting& split, int sample_count) {
  double worst = 0.0;
  for (const auto& g : sample_group_elements(split.sub(), sample_count))
    for (const auto& m : split.complement_basis()) worst = std::max(worst, split.project_g(adjoint(g, m)).norm());
  return {worst <= split.tolerance(), worst};
}

Check normaliser_membership(const Matrix& a, const Splitting& split, const GroupModel* ambient_group) {
  if (ambient_group) {
    auto member = ambient_group->contains(a);
    if (!member.holds)
      throw LieError("normaliser_membership: element is not in " + ambient_group->name() +
                     " (residual " + std::to_string(member.residual) + ")");
  }
  double worst = 0.0;
  for (const auto& q : split.sub_basis()) {
    Matrix y = adjoint(a, q);
    double norm = y.norm();
    if (norm == 0.0) continue;
    worst = std::max(worst, (y - split.project_g(y)).norm() / norm);
  }
  return {worst <= split.tolerance(), worst};
}

Check centraliser_membership(const Matrix& a, const LieAlgebraModel& sub, const GroupModel* ambient_group) {
  if (ambient_group) {
    auto member = ambient_group->contains(a);
    if (!member.holds)
      throw LieError("centraliser_membership: element is not in " + ambient_group->name() +
                     " (residual " + std::to_string(member.residual) + ")");
  }
  double worst = 0.0;
  for (const auto& q : sub.orthonormal_basis()) worst = std::max(worst, (adjoint(a, q) - q).norm());
  return {worst <= sub.tolerance(), worst};
}

double lie_normaliser_residual(const Matrix& x, const Splitting& split, int sample_count) {
  double worst = 0.0;
  for (const auto& g : sample_group_elements(split.sub(), sample_count)) {
    Matrix ginv = g.inverse();
    worst = std::max(worst, split.project_m(adjoint(ginv, x) - x).norm());
  }
  return worst;
}

// ---------------------------------------------------------------------------

RepresentationModel RepresentationModel::standard(int n, std::optional<Vector> tau0) {
  if (tau0 && tau0->size() != n) throw LieError("standard representation: tau0 has wrong size");
  return {"standard", n, n, [](const Matrix& a) { return a; }, std::move(tau0)};
}

RepresentationModel RepresentationModel::exterior_square(int n, std::optional<Vector> tau0) {
  const int dim = n * (n - 1) / 2;
  if (tau0 && tau0->size() != dim) throw LieError("exterior square representation: tau0 has wrong size");
  auto matrix_for = [n, dim](const Matrix& a) {
    if (a.rows() != n || a.cols() != n) throw LieError("exterior square representation: element has wrong size");
    Matrix out(dim, dim);
    int col = 0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q, ++col) {
        Matrix image = a * elementary_rotation(n, p, q) * a.transpose();
        int row = 0;
        for (int r = 0; r < n; ++r)
          for (int s = r + 1; s < n; ++s, ++row) out(row, col) = image(r, s);
      }
    }
    return out;
  };
  return {"exterior_square", n, dim, matrix_for, std::move(tau0)};
}

double RepresentationModel::homomorphism_residual(const std::vector<Matrix>& samples) const {
  double worst = (matrix_for(identity(source_dim)) - identity(target_dim)).norm();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& a = samples[i];
    const auto& b = samples[(i + 1) % samples.size()];
    worst = std::max(worst, (matrix_for(a * b) - matrix_for(a) * matrix_for(b)).norm());
  }
  return worst;
}

Check stabiliser_membership(const Matrix& g, const RepresentationModel& rep, double tolerance) {
  if (!rep.tau0) throw LieError("stabiliser_membership: representation '" + rep.name + "' has no tau0");
  double r = (rep.matrix_for(g) * *rep.tau0 - *rep.tau0).norm();
  return {r <= tolerance, r};
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

constexpr int kMaxCatalogSize = 8;

std::vector<Matrix> so_block_basis(int n, int k) {
  std::vector<Matrix> basis;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) basis.push_back(elementary_rotation(n, a, b));
  return basis;
}

std::vector<Matrix> su2_in_so4(bool plus) {
  const double s = plus ? 1.0 : -1.0;
  auto L = [](int a, int b) { return elementary_rotation(4, a, b); };
  return {L(0, 1) + s * L(2, 3), L(0, 2) - s * L(1, 3), L(0, 3) + s * L(1, 2)};
}

// Parses "prefix(<int>)" returning the integer, or nullopt.
std::optional<int> parse_sized(std::string_view name, std::string_view prefix) {
  if (name.size() < prefix.size() + 3 || name.substr(0, prefix.size()) != prefix) return std::nullopt;
  if (name[prefix.size()] != '(' || name.back() != ')') return std::nullopt;
  auto digits = name.substr(prefix.size() + 1, name.size() - prefix.size() - 2);
  int value = 0;
  auto res = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (res.ec != std::errc() || res.ptr != digits.data() + digits.size()) return std::nullopt;
  return value;
}

void check_catalog_size(int d, std::string_view name) {
  if (d < 1 || d > kMaxCatalogSize)
    throw LieError("catalog: size out of range in '" + std::string(name) + "' (1..8)");
}

}  // namespace

AlgebraPtr catalog_algebra(std::string_view name, int size_hint) {
  const std::string label(name);
  if (auto d = parse_sized(name, "so")) {
    check_catalog_size(*d, name);
    return std::make_shared<LieAlgebraModel>(label, *d, so_block_basis(*d, *d));
  }
  if (auto d = parse_sized(name, "gl")) {
    check_catalog_size(*d, name);
    std::vector<Matrix> basis;
    for (int i = 0; i < *d; ++i) {
      for (int j = 0; j < *d; ++j) {
        Matrix e = Matrix::Zero(*d, *d);
        e(i, j) = 1.0;
        basis.push_back(e);
      }
    }
    return std::make_shared<LieAlgebraModel>(label, *d, std::move(basis));
  }
  if (auto d = parse_sized(name, "trivial")) {
    check_catalog_size(*d, name);
    return std::make_shared<LieAlgebraModel>(label, *d, std::vector<Matrix>{});
  }
  if (name == "trivial") {
    if (size_hint <= 0) throw LieError("catalog: 'trivial' needs a matrix size; use 'trivial(D)'");
    check_catalog_size(size_hint, name);
    return std::make_shared<LieAlgebraModel>("trivial(" + std::to_string(size_hint) + ")", size_hint,
                                             std::vector<Matrix>{});
  }
  if (name == "su2_plus_in_so4") return std::make_shared<LieAlgebraModel>(label, 4, su2_in_so4(true));
  if (name == "su2_minus_in_so4") return std::make_shared<LieAlgebraModel>(label, 4, su2_in_so4(false));
  if (name == "u1_in_so2") return std::make_shared<LieAlgebraModel>(label, 2, so_block_basis(2, 2));
  if (name == "so2_in_so3") return std::make_shared<LieAlgebraModel>(label, 3, so_block_basis(3, 2));
  if (auto pos = name.find("_in_"); pos != std::string_view::npos) {
    auto k = parse_sized(name.substr(0, pos), "so");
    auto d = parse_sized(name.substr(pos + 4), "so");
    if (k && d) {
      check_catalog_size(*d, name);
      if (*k < 1 || *k > *d) throw LieError("catalog: block size out of range in '" + label + "'");
      return std::make_shared<LieAlgebraModel>(label, *d, so_block_basis(*d, *k));
    }
  }
  std::string available;
  for (const auto& n : catalog_algebra_names()) available += (available.empty() ? "" : ", ") + n;
  throw LieError("catalog: unknown algebra '" + label + "'; available: " + available);
}

GroupPtr group_for(AlgebraPtr algebra) {
  const std::string& name = algebra->name();
  const int n = algebra->matrix_size();
  GroupKind kind = GroupKind::Connected;
  std::string group_name = "exp(" + name + ")";
  if (algebra->dimension() == 0) {
    kind = GroupKind::Trivial;
    group_name = "{1}";
  } else if (algebra->dimension() == n * n) {
    kind = GroupKind::GeneralLinear;
    group_name = "GL(" + std::to_string(n) + ")";
  } else if (algebra->all_antisymmetric() && algebra->dimension() == n * (n - 1) / 2) {
    kind = GroupKind::SpecialOrthogonal;
    group_name = "SO(" + std::to_string(n) + ")";
  }
  return std::make_shared<GroupModel>(group_name, std::move(algebra), kind);
}

GroupPtr catalog_group(std::string_view name, int size_hint) { return group_for(catalog_algebra(name, size_hint)); }

std::vector<std::string> catalog_algebra_names() {
  return {"so(2)",        "so(3)", "so(4)",    "so(D)",          "gl(D)",           "so(k)_in_so(D)",
          "so2_in_so3",   "u1_in_so2",         "su2_plus_in_so4", "su2_minus_in_so4", "trivial(D)"};
}

}  // namespace ndef
