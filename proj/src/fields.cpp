#include "ndef/fields.hpp"

#include <algorithm>
#include <random>

namespace ndef {

// ---------------------------------------------------------------------------
// Chart

Chart::Chart(std::vector<std::pair<double, double>> bounds, std::vector<int> grid)
    : bounds_(std::move(bounds)), grid_(std::move(grid)) {
  if (bounds_.empty()) throw FieldError("chart: dimension must be positive");
  if (grid_.size() != bounds_.size()) throw FieldError("chart: grid and bounds have different lengths");
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    if (!(bounds_[i].first < bounds_[i].second))
      throw FieldError("chart: empty interval on axis " + std::to_string(i + 1));
    if (grid_[i] < 2) throw FieldError("chart: grid count on axis " + std::to_string(i + 1) + " must be at least 2");
  }
}

Chart Chart::cube(int dim, double lo, double hi, int grid_per_axis) {
  if (dim <= 0) throw FieldError("chart: dimension must be positive");
  return Chart(std::vector<std::pair<double, double>>(static_cast<std::size_t>(dim), {lo, hi}),
               std::vector<int>(static_cast<std::size_t>(dim), grid_per_axis));
}

Chart Chart::with_grid(int per_axis) const {
  return Chart(bounds_, std::vector<int>(bounds_.size(), per_axis));
}

bool Chart::contains(std::span<const double> x) const {
  if (x.size() != bounds_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= bounds_[i].first && x[i] <= bounds_[i].second)) return false;
  return true;
}

std::vector<Point> Chart::grid_points() const {
  std::vector<Point> out;
  std::vector<int> idx(bounds_.size(), 0);
  for (;;) {
    Point p(bounds_.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto [lo, hi] = bounds_[i];
      p[i] = lo + (hi - lo) * idx[i] / (grid_[i] - 1);
    }
    out.push_back(std::move(p));
    std::size_t axis = 0;
    while (axis < idx.size() && ++idx[axis] == grid_[axis]) idx[axis++] = 0;
    if (axis == idx.size()) break;
  }
  return out;
}

std::vector<Point> Chart::interior_points(int count, unsigned seed) const {
  std::mt19937 rng(seed);
  std::vector<Point> out;
  for (int k = 0; k < count; ++k) {
    Point p(bounds_.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto [lo, hi] = bounds_[i];
      std::uniform_real_distribution<double> u(lo, hi);
      p[i] = u(rng);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Point> Chart::sample_points() const {
  auto pts = grid_points();
  auto extra = interior_points(kRandomInteriorPoints);
  pts.insert(pts.end(), extra.begin(), extra.end());
  return pts;
}

Point Chart::center() const {
  Point p;
  for (const auto& [lo, hi] : bounds_) p.push_back(0.5 * (lo + hi));
  return p;
}

Residual worst_over(const std::vector<Point>& points, const std::function<double(const Point&)>& f) {
  Residual r;
  for (const auto& p : points) r.absorb(f(p), p);
  return r;
}

// ---------------------------------------------------------------------------
// ExprMatrix

ExprMatrix::ExprMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), entries_(static_cast<std::size_t>(rows * cols), expr::constant(0.0)) {
  if (rows < 0 || cols < 0) throw FieldError("ExprMatrix: negative size");
}

std::size_t ExprMatrix::index(int r, int c) const {
  if (r < 0 || c < 0 || r >= rows_ || c >= cols_) throw std::out_of_range("ExprMatrix index out of range");
  return static_cast<std::size_t>(r * cols_ + c);
}

ExprMatrix ExprMatrix::constant(const Matrix& m) {
  ExprMatrix out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int r = 0; r < out.rows_; ++r)
    for (int c = 0; c < out.cols_; ++c) out(r, c) = expr::constant(m(r, c));
  return out;
}

ExprMatrix ExprMatrix::identity(int n) { return constant(Matrix::Identity(n, n)); }

ExprMatrix ExprMatrix::parse(const std::vector<std::vector<std::string>>& text, int dim) {
  if (text.empty()) throw FieldError("matrix field: no rows");
  const int rows = static_cast<int>(text.size());
  const int cols = static_cast<int>(text.front().size());
  ExprMatrix out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(text[r].size()) != cols) throw FieldError("matrix field: rows have different lengths");
    for (int c = 0; c < cols; ++c) out(r, c) = parse_expression(text[r][c], dim);
  }
  return out;
}

ExprMatrix ExprMatrix::transpose() const {
  ExprMatrix out(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

ExprMatrix ExprMatrix::derivative(Differentiator& d) const {
  ExprMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < entries_.size(); ++i) out.entries_[i] = d(entries_[i]);
  return out;
}

ExprMatrix ExprMatrix::derivative(int coordinate) const {
  Differentiator d(coordinate);
  return derivative(d);
}

bool ExprMatrix::is_constant() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const Expr& e) { return expr::is_constant(e); });
}

bool ExprMatrix::is_zero() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const Expr& e) { return expr::is_zero(e); });
}

Matrix ExprMatrix::evaluate(std::span<const double> point) const { return MatrixProgram({*this})(point).front(); }

std::vector<std::vector<std::string>> ExprMatrix::to_strings() const {
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(rows_));
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) out[r].push_back(to_string((*this)(r, c)));
  return out;
}

namespace {

void require_same_shape(const ExprMatrix& a, const ExprMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw FieldError(std::string(what) + ": shape mismatch");
}

}  // namespace

ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b) {
  require_same_shape(a, b, "matrix sum");
  ExprMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.entries_.size(); ++i) out.entries_[i] = expr::add(a.entries_[i], b.entries_[i]);
  return out;
}

ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b) {
  require_same_shape(a, b, "matrix difference");
  ExprMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.entries_.size(); ++i) out.entries_[i] = expr::sub(a.entries_[i], b.entries_[i]);
  return out;
}

ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.cols() != b.rows()) throw FieldError("matrix product: shape mismatch");
  ExprMatrix out(a.rows(), b.cols());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < b.cols(); ++c) {
      Expr sum = expr::constant(0.0);
      for (int k = 0; k < a.cols(); ++k) sum = expr::add(sum, expr::mul(a(r, k), b(k, c)));
      out(r, c) = sum;
    }
  }
  return out;
}

ExprMatrix operator*(const Matrix& a, const ExprMatrix& b) {
  if (a.cols() != b.rows()) throw FieldError("matrix product: shape mismatch");
  ExprMatrix out(static_cast<int>(a.rows()), b.cols());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < b.cols(); ++c) {
      Expr sum = expr::constant(0.0);
      for (int k = 0; k < a.cols(); ++k)
        if (a(r, k) != 0.0) sum = expr::add(sum, expr::mul(expr::constant(a(r, k)), b(k, c)));
      out(r, c) = sum;
    }
  }
  return out;
}

ExprMatrix operator*(const ExprMatrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw FieldError("matrix product: shape mismatch");
  ExprMatrix out(a.rows(), static_cast<int>(b.cols()));
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < b.cols(); ++c) {
      Expr sum = expr::constant(0.0);
      for (int k = 0; k < a.cols(); ++k)
        if (b(k, c) != 0.0) sum = expr::add(sum, expr::mul(a(r, k), expr::constant(b(k, c))));
      out(r, c) = sum;
    }
  }
  return out;
}

ExprMatrix operator*(const Expr& s, const ExprMatrix& b) {
  ExprMatrix out(b.rows(), b.cols());
  for (std::size_t i = 0; i < out.entries_.size(); ++i) out.entries_[i] = expr::mul(s, b.entries_[i]);
  return out;
}

ExprMatrix operator*(double s, const ExprMatrix& b) { return expr::constant(s) * b; }

namespace {

ExprMatrix minor_of(const ExprMatrix& m, int skip_row, int skip_col) {
  const int n = m.rows();
  ExprMatrix out(n - 1, n - 1);
  for (int r = 0, rr = 0; r < n; ++r) {
    if (r == skip_row) continue;
    for (int c = 0, cc = 0; c < n; ++c) {
      if (c == skip_col) continue;
      out(rr, cc++) = m(r, c);
    }
    ++rr;
  }
  return out;
}

constexpr int kSymbolicInverseLimit = 4;

}  // namespace

Expr determinant(const ExprMatrix& m) {
  if (m.rows() != m.cols()) throw FieldError("determinant: matrix is not square");
  const int n = m.rows();
  if (n > kSymbolicInverseLimit) throw FieldError("determinant: symbolic determinant limited to n <= 4");
  if (n == 0) return expr::constant(1.0);
  if (n == 1) return m(0, 0);
  if (n == 2) return expr::sub(expr::mul(m(0, 0), m(1, 1)), expr::mul(m(0, 1), m(1, 0)));
  Expr sum = expr::constant(0.0);
  for (int c = 0; c < n; ++c) {
    if (expr::is_zero(m(0, c))) continue;
    Expr term = expr::mul(m(0, c), determinant(minor_of(m, 0, c)));
    sum = (c % 2 == 0) ? expr::add(sum, term) : expr::sub(sum, term);
  }
  return sum;
}

ExprMatrix inverse(const ExprMatrix& m) {
  if (m.rows() != m.cols()) throw FieldError("inverse: matrix is not square");
  const int n = m.rows();
  ExprMatrix out(n, n);
  if (n <= kSymbolicInverseLimit) {
    Expr det = determinant(m);
    if (n == 1) {
      out(0, 0) = expr::div(expr::constant(1.0), det);
      return out;
    }
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        Expr cof = determinant(minor_of(m, c, r));
        if ((r + c) % 2 == 1) cof = expr::neg(cof);
        out(r, c) = expr::div(cof, det);
      }
    }
    return out;
  }
  auto block = std::make_shared<InverseBlock>();
  block->n = static_cast<std::size_t>(n);
  block->entries = m.entries();
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      out(r, c) = expr::inverse_entry(block, static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  return out;
}

Expr frobenius(const Matrix& q, const ExprMatrix& x) {
  if (q.rows() != x.rows() || q.cols() != x.cols()) throw FieldError("frobenius: shape mismatch");
  Expr sum = expr::constant(0.0);
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c)
      if (q(r, c) != 0.0) sum = expr::add(sum, expr::mul(expr::constant(q(r, c)), x(r, c)));
  return sum;
}

ExprMatrix project(const std::vector<Matrix>& orthonormal, const ExprMatrix& x) {
  ExprMatrix out(x.rows(), x.cols());
  for (const auto& q : orthonormal) {
    Expr coefficient = frobenius(q, x);
    if (expr::is_zero(coefficient)) continue;
    for (int r = 0; r < x.rows(); ++r)
      for (int c = 0; c < x.cols(); ++c)
        if (q(r, c) != 0.0) out(r, c) = expr::add(out(r, c), expr::mul(expr::constant(q(r, c)), coefficient));
  }
  return out;
}

ExprMatrix one_parameter_field(const Matrix& generator, const Expr& theta) {
  if (generator.rows() != generator.cols()) throw FieldError("one_parameter_field: generator is not square");
  const Matrix x2 = generator * generator;
  if ((x2 * generator + generator).norm() > tol::kMatrix * std::max(1.0, generator.norm()))
    throw FieldError("one_parameter_field: generator does not satisfy X^3 = -X");
  const int n = static_cast<int>(generator.rows());
  return ExprMatrix::identity(n) + expr::sin(theta) * ExprMatrix::constant(generator) +
         expr::sub(expr::constant(1.0), expr::cos(theta)) * ExprMatrix::constant(x2);
}

namespace {

std::vector<Expr> flatten(const std::vector<ExprMatrix>& ms) {
  std::vector<Expr> out;
  for (const auto& m : ms) out.insert(out.end(), m.entries().begin(), m.entries().end());
  return out;
}

}  // namespace

MatrixProgram::MatrixProgram(const std::vector<ExprMatrix>& matrices) : program_(flatten(matrices)) {
  for (const auto& m : matrices) shapes_.emplace_back(m.rows(), m.cols());
}

std::vector<Matrix> MatrixProgram::operator()(std::span<const double> point) const {
  std::vector<double> values = program_.evaluate(point);
  std::vector<Matrix> out;
  out.reserve(shapes_.size());
  std::size_t k = 0;
  for (const auto& [rows, cols] : shapes_) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = values[k++];
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Group-valued fields

GroupValuedField::GroupValuedField(Chart c, ExprMatrix e, GroupPtr g)
    : chart(std::move(c)), entries(std::move(e)), group(std::move(g)) {
  if (!group) throw FieldError("group-valued field: missing target group");
  if (entries.rows() != entries.cols() || entries.rows() != group->matrix_size())
    throw FieldError("group-valued field: matrix size does not match " + group->name());
  for (const auto& e : entries.entries())
    if (expr::coordinate_extent(e) > chart.dim()) throw FieldError("group-valued field: entry uses a coordinate outside the chart");
}

FieldValidation validate_group_field(const GroupValuedField& h) {
  FieldValidation out;
  out.min_abs_determinant = std::numeric_limits<double>::infinity();
  MatrixProgram program({h.entries});
  for (const auto& p : h.chart.sample_points()) {
    Matrix value = program(p).front();
    out.membership.absorb(h.group->membership_residual(value), p);
    out.min_abs_determinant = std::min(out.min_abs_determinant, std::abs(value.determinant()));
  }
  out.valid = out.membership.value <= h.group->tolerance() && out.min_abs_determinant > 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Forms

std::size_t LieValuedForm::component_count(int dim, int degree) {
  switch (degree) {
    case 0:
      return 1;
    case 1:
      return static_cast<std::size_t>(dim);
    case 2:
      return static_cast<std::size_t>(dim * (dim - 1) / 2);
    default:
      throw FieldError("forms of degree " + std::to_string(degree) + " are not supported (max 2)");
  }
}

LieValuedForm::LieValuedForm(Chart chart, int degree, std::vector<ExprMatrix> components, AlgebraPtr value_algebra)
    : chart_(std::move(chart)), degree_(degree), components_(std::move(components)), algebra_(std::move(value_algebra)) {
  if (components_.size() != component_count(chart_.dim(), degree_))
    throw FieldError("form: expected " + std::to_string(component_count(chart_.dim(), degree_)) + " components, got " +
                     std::to_string(components_.size()));
  if (!components_.empty()) {
    rows_ = components_.front().rows();
    cols_ = components_.front().cols();
  } else if (algebra_) {
    rows_ = cols_ = algebra_->matrix_size();
  }
  for (const auto& c : components_) {
    if (c.rows() != rows_ || c.cols() != cols_) throw FieldError("form: components have different shapes");
    for (const auto& e : c.entries())
      if (expr::coordinate_extent(e) > chart_.dim()) throw FieldError("form: component uses a coordinate outside the chart");
  }
  if (algebra_ && (algebra_->matrix_size() != rows_ || rows_ != cols_))
    throw FieldError("form: value algebra '" + algebra_->name() + "' does not match the component shape");
}

LieValuedForm LieValuedForm::zero(Chart chart, int degree, int n, AlgebraPtr value_algebra) {
  const std::size_t count = component_count(chart.dim(), degree);
  return LieValuedForm(std::move(chart), degree, std::vector<ExprMatrix>(count, ExprMatrix(n, n)),
                       std::move(value_algebra));
}

std::size_t LieValuedForm::pair_index(int i, int j) const {
  const int d = chart_.dim();
  if (!(0 <= i && i < j && j < d)) throw std::out_of_range("pair_index requires 0 <= i < j < dim");
  // Row-major enumeration of (i, j), i < j.
  return static_cast<std::size_t>(i * d - i * (i + 1) / 2 + (j - i - 1));
}

const ExprMatrix& LieValuedForm::component(int i) const {
  if (degree_ != 1) throw FieldError("component(i) requires a 1-form");
  return components_.at(static_cast<std::size_t>(i));
}

const ExprMatrix& LieValuedForm::component(int i, int j) const {
  if (degree_ != 2) throw FieldError("component(i, j) requires a 2-form");
  return components_.at(pair_index(i, j));
}

ExprMatrix LieValuedForm::antisymmetric_component(int i, int j) const {
  if (degree_ != 2) throw FieldError("antisymmetric_component requires a 2-form");
  if (i == j) return ExprMatrix(rows_, cols_);
  if (i < j) return component(i, j);
  return ExprMatrix(rows_, cols_) - component(j, i);
}

LieValuedForm LieValuedForm::with_algebra(AlgebraPtr algebra) const {
  return LieValuedForm(chart_, degree_, components_, std::move(algebra));
}

LieValuedForm LieValuedForm::map(const std::function<ExprMatrix(const ExprMatrix&)>& f, AlgebraPtr algebra) const {
  std::vector<ExprMatrix> out;
  out.reserve(components_.size());
  for (const auto& c : components_) out.push_back(f(c));
  return LieValuedForm(chart_, degree_, std::move(out), std::move(algebra));
}

namespace {

void require_compatible(const LieValuedForm& a, const LieValuedForm& b, const char* what) {
  if (a.degree() != b.degree() || a.chart().dim() != b.chart().dim() || a.rows() != b.rows() || a.cols() != b.cols())
    throw FieldError(std::string(what) + ": forms are not compatible");
}

}  // namespace

LieValuedForm operator+(const LieValuedForm& a, const LieValuedForm& b) {
  require_compatible(a, b, "form sum");
  std::vector<ExprMatrix> out;
  for (std::size_t i = 0; i < a.components().size(); ++i) out.push_back(a.components()[i] + b.components()[i]);
  return LieValuedForm(a.chart(), a.degree(), std::move(out));
}

LieValuedForm operator-(const LieValuedForm& a, const LieValuedForm& b) {
  require_compatible(a, b, "form difference");
  std::vector<ExprMatrix> out;
  for (std::size_t i = 0; i < a.components().size(); ++i) out.push_back(a.components()[i] - b.components()[i]);
  return LieValuedForm(a.chart(), a.degree(), std::move(out));
}

Residual max_difference(const LieValuedForm& a, const LieValuedForm& b, const std::vector<Point>& points) {
  require_compatible(a, b, "max_difference");
  std::vector<ExprMatrix> both = a.components();
  both.insert(both.end(), b.components().begin(), b.components().end());
  MatrixProgram program(both);
  const std::size_t half = a.components().size();
  return worst_over(points, [&](const Point& p) {
    auto values = program(p);
    double worst = 0.0;
    for (std::size_t i = 0; i < half; ++i) worst = std::max(worst, (values[i] - values[i + half]).norm());
    return worst;
  });
}

Residual max_norm(const LieValuedForm& a, const std::vector<Point>& points) {
  FormEvaluator eval(a);
  return worst_over(points, [&](const Point& p) {
    double worst = 0.0;
    for (const auto& m : eval(p)) worst = std::max(worst, m.norm());
    return worst;
  });
}

Residual algebra_residual(const LieValuedForm& a, const LieAlgebraModel& algebra, const std::vector<Point>& points) {
  FormEvaluator eval(a);
  return worst_over(points, [&](const Point& p) {
    double worst = 0.0;
    for (const auto& m : eval(p)) worst = std::max(worst, algebra.distance(m));
    return worst;
  });
}

double finite_difference(const Expr& e, int coordinate, std::span<const double> x, const Chart& chart) {
  if (coordinate < 0 || coordinate >= chart.dim()) throw FieldError("finite_difference: coordinate out of range");
  if (!chart.contains(x)) throw FieldError("finite_difference: point lies outside the chart");
  return central_difference(e, coordinate, x);
}

LieValuedForm maurer_cartan_pullback(const GroupValuedField& h) {
  const Chart& chart = h.chart;
  {
    MatrixProgram program({h.entries});
    for (const auto& p : chart.sample_points()) {
      Matrix value = program(p).front();
      Eigen::FullPivLU<Matrix> lu(value);
      if (!lu.isInvertible() || !value.allFinite()) {
        std::string where;
        for (double v : p) where += (where.empty() ? "" : ", ") + std::to_string(v);
        throw FieldError("maurer_cartan_pullback: h is singular at (" + where + ")");
      }
    }
  }
  const ExprMatrix hinv = inverse(h.entries);
  std::vector<ExprMatrix> components;
  for (int i = 0; i < chart.dim(); ++i) components.push_back(hinv * h.entries.derivative(i));
  return LieValuedForm(chart, 1, std::move(components), h.group->algebra_ptr());
}

LieValuedForm zero_form(const Chart& chart, const ExprMatrix& f) { return LieValuedForm(chart, 0, {f}); }

LieValuedForm exterior_derivative(const LieValuedForm& form) {
  const Chart& chart = form.chart();
  const int d = chart.dim();
  if (form.degree() == 0) {
    std::vector<ExprMatrix> out;
    for (int i = 0; i < d; ++i) out.push_back(form.components().front().derivative(i));
    return LieValuedForm(chart, 1, std::move(out));
  }
  if (form.degree() == 1) {
    std::vector<Differentiator> partials;
    for (int i = 0; i < d; ++i) partials.emplace_back(i);
    std::vector<ExprMatrix> out(LieValuedForm::component_count(d, 2));
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        out[form.pair_index(i, j)] = form.component(j).derivative(partials[i]) - form.component(i).derivative(partials[j]);
    return LieValuedForm(chart, 2, std::move(out));
  }
  throw FieldError("exterior_derivative: unsupported degree " + std::to_string(form.degree()));
}

LieValuedForm wedge_bracket(const LieValuedForm& alpha, const LieValuedForm& beta) {
  if (alpha.degree() != 1 || beta.degree() != 1) throw FieldError("wedge_bracket: both arguments must be 1-forms");
  if (alpha.chart().dim() != beta.chart().dim() || alpha.cols() != beta.rows())
    throw FieldError("wedge_bracket: chart or matrix size mismatch");
  const int d = alpha.chart().dim();
  std::vector<ExprMatrix> out(LieValuedForm::component_count(d, 2));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      out[alpha.pair_index(i, j)] =
          alpha.component(i) * beta.component(j) - alpha.component(j) * beta.component(i);
  return LieValuedForm(alpha.chart(), 2, std::move(out));
}

LieValuedForm field_strength(const LieValuedForm& connection) {
  LieValuedForm f = exterior_derivative(connection) + wedge_bracket(connection, connection);
  return f.with_algebra(connection.value_algebra());
}

}  // namespace ndef
