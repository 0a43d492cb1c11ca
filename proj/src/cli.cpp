#include "ndef/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ndef::cli {

using nlohmann::json;

namespace {

const std::map<CheckKind, std::pair<std::string_view, double>>& check_table() {
  static const std::map<CheckKind, std::pair<std::string_view, double>> table = {
      {CheckKind::Admissibility, {"admissibility", tol::kAlgebraic}},
      {CheckKind::Deform, {"deform", tol::kAlgebraic}},
      {CheckKind::Zeta, {"zeta", 1e-10}},
      {CheckKind::Torsion, {"torsion", tol::kAlgebraic}},
      {CheckKind::TorsionChange, {"torsion-change", tol::kTwoPath}},
      {CheckKind::Phi, {"phi", tol::kAlgebraic}},
      {CheckKind::Instanton, {"instanton", tol::kAlgebraic}},
      {CheckKind::MetricCompat, {"metric-compat", tol::kAlgebraic}},
  };
  return table;
}

bool gated(CheckKind k) {
  return k == CheckKind::Deform || k == CheckKind::Zeta || k == CheckKind::TorsionChange ||
         k == CheckKind::Instanton || k == CheckKind::MetricCompat;
}

// ---------------------------------------------------------------------------
// Scenario parsing

[[noreturn]] void fail(const std::string& what) { throw ScenarioError("scenario: " + what); }

void require_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) fail("unknown key '" + key + "' in " + where);
  }
}

StringMatrix parse_string_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where + " must be a non-empty array of rows");
  StringMatrix out;
  for (const auto& row : j) {
    if (!row.is_array()) fail(where + " rows must be arrays");
    std::vector<std::string> r;
    for (const auto& cell : row) {
      if (cell.is_string()) r.push_back(cell.get<std::string>());
      else if (cell.is_number()) r.push_back(ndef::to_string(expr::constant(cell.get<double>())));
      else fail(where + " entries must be strings or numbers");
    }
    if (!out.empty() && r.size() != out.front().size()) fail(where + " rows have different lengths");
    out.push_back(std::move(r));
  }
  return out;
}

Matrix parse_numeric_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) fail(where + " must be a matrix of numbers");
  Matrix m(static_cast<int>(j.size()), static_cast<int>(j.front().size()));
  for (int r = 0; r < m.rows(); ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != m.cols()) fail(where + " rows have different lengths");
    for (int c = 0; c < m.cols(); ++c) {
      if (!j[r][c].is_number()) fail(where + " entries must be numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

AlgebraChoice parse_algebra(const json& j, const std::string& where) {
  if (j.is_string()) return {j.get<std::string>(), {}};
  require_keys(j, where, {"name", "basis"});
  if (!j.contains("name") || !j["name"].is_string()) fail(where + ".name must be a string");
  AlgebraChoice out{j["name"].get<std::string>(), {}};
  if (j.contains("basis")) {
    if (!j["basis"].is_array()) fail(where + ".basis must be an array of matrices");
    for (const auto& m : j["basis"]) out.basis.push_back(parse_numeric_matrix(m, where + ".basis"));
  }
  return out;
}

FormInput parse_form(const json& j, const std::string& where) {
  if (j.is_string()) {
    std::string k = j.get<std::string>();
    if (k != "levi-civita" && k != "zero") fail(where + ": unknown keyword '" + k + "'");
    return {k, {}};
  }
  if (!j.is_array()) fail(where + " must be a keyword or an array of component matrices");
  FormInput out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.components.push_back(parse_string_matrix(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<StringMatrix> parse_matrix_list(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + " must be an array of matrices");
  std::vector<StringMatrix> out;
  for (const auto& m : j) out.push_back(parse_string_matrix(m, where));
  return out;
}

json string_matrix_json(const StringMatrix& m) { return json(m); }

json algebra_json(const AlgebraChoice& a) {
  if (a.basis.empty()) return a.name;
  json basis = json::array();
  for (const auto& m : a.basis) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    basis.push_back(rows);
  }
  return {{"name", a.name}, {"basis", basis}};
}

json form_json(const FormInput& f) {
  if (!f.keyword.empty()) return f.keyword;
  return json(f.components);
}

// ---------------------------------------------------------------------------
// Resolved scenario

AlgebraPtr resolve_algebra(const AlgebraChoice& input, int size_hint) {
  if (input.basis.empty()) return catalog_algebra(input.name, size_hint);
  const int n = static_cast<int>(input.basis.front().rows());
  return std::make_shared<LieAlgebraModel>(input.name, n, input.basis);
}

ExprMatrix parse_matrix(const StringMatrix& text, int dim, const std::string& where) {
  try {
    return ExprMatrix::parse(text, dim);
  } catch (const std::exception& e) {
    fail(where + ": " + e.what());
  }
}

struct Resolved {
  Chart chart;
  AlgebraPtr ambient;
  AlgebraPtr sub;
  GroupPtr ambient_group;
  SplittingPtr split;
  ExprMatrix h;
  FrameField frame;
  std::optional<LocalConnection> connection;
  std::optional<LieValuedForm> reference;
  std::optional<LieValuedForm> reference_prime;
};

LieValuedForm resolve_form(const FormInput& input, const Resolved& r, AlgebraPtr algebra, const std::string& where) {
  const int n = algebra->matrix_size();
  if (input.keyword == "zero") return LieValuedForm::zero(r.chart, 1, n, algebra);
  if (input.keyword == "levi-civita") {
    if (r.frame.size() != n) fail(where + ": levi-civita needs the frame size to match the structure group");
    return levi_civita_connection(r.frame).with_algebra(algebra);
  }
  if (static_cast<int>(input.components.size()) != r.chart.dim())
    fail(where + ": expected " + std::to_string(r.chart.dim()) + " components");
  std::vector<ExprMatrix> comps;
  for (std::size_t i = 0; i < input.components.size(); ++i) {
    ExprMatrix m = parse_matrix(input.components[i], r.chart.dim(), where);
    if (m.rows() != n || m.cols() != n) fail(where + ": components must be " + std::to_string(n) + "x" + std::to_string(n));
    comps.push_back(std::move(m));
  }
  return LieValuedForm(r.chart, 1, std::move(comps), algebra);
}

Resolved resolve(const Scenario& s, const RunOptions& options) {
  Chart chart(s.bounds, s.grid);
  if (options.grid) chart = chart.with_grid(*options.grid);
  const int dim = chart.dim();
  AlgebraPtr ambient, sub;
  try {
    ambient = resolve_algebra(s.ambient, static_cast<int>(s.h.size()));
    sub = resolve_algebra(s.subgroup, ambient->matrix_size());
  } catch (const LieError& e) {
    fail(e.what());
  }
  SplittingPtr split;
  try {
    split = std::make_shared<const Splitting>(Splitting::build(ambient, sub));
  } catch (const LieError& e) {
    fail(std::string("splitting: ") + e.what());
  }
  ExprMatrix h = parse_matrix(s.h, dim, "h");
  if (h.rows() != ambient->matrix_size() || h.cols() != ambient->matrix_size())
    fail("h must be " + std::to_string(ambient->matrix_size()) + "x" + std::to_string(ambient->matrix_size()));
  GroupPtr group = s.ambient.basis.empty() ? catalog_group(s.ambient.name, ambient->matrix_size()) : group_for(ambient);
  std::optional<FrameField> frame;
  try {
    frame.emplace(s.frame ? FrameField(chart, parse_matrix(*s.frame, dim, "frame")) : FrameField::identity(chart));
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("frame: ") + e.what());
  }
  Resolved r{chart, ambient, sub, group, split, h, *frame, std::nullopt, std::nullopt, std::nullopt};
  try {
    if (s.connection) r.connection = LocalConnection{resolve_form(*s.connection, r, sub, "connection"), "s", true};
    if (s.reference) r.reference = resolve_form(*s.reference, r, ambient, "reference.a0");
    if (s.reference_prime) r.reference_prime = resolve_form(*s.reference_prime, r, ambient, "reference.a0_prime");
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    fail(e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Running

json point_json(const Point& p) {
  json out = json::array();
  for (double v : p) out.push_back(v);
  return out;
}

json residual_json(const Residual& r) { return {{"value", r.value}, {"point", point_json(r.point)}}; }

void absorb(Residual& into, const Residual& r) {
  if (!r.point.empty()) into.absorb(r.value, r.point);
}

/// Worst difference between a form and symbolic expectations.
Residual expectation_residual(const LieValuedForm& actual, const std::vector<StringMatrix>& expected,
                              const std::string& where) {
  if (expected.size() != actual.components().size()) fail(where + ": wrong number of components");
  std::vector<ExprMatrix> comps;
  for (const auto& m : expected) comps.push_back(parse_matrix(m, actual.chart().dim(), where));
  LieValuedForm target(actual.chart(), actual.degree(), std::move(comps));
  return max_difference(actual, target, actual.chart().sample_points());
}

json form_table(const LieValuedForm& form) {
  json out = json::array();
  for (int i = 0; i < form.chart().dim(); ++i)
    out.push_back({{"component", "dx" + std::to_string(i + 1)}, {"entries", form.component(i).to_strings()}});
  return out;
}

class Runner {
 public:
  Runner(const Scenario& s, const RunOptions& options) : scenario_(s), options_(options), r_(resolve(s, options)) {}

  CheckReport run(CheckKind kind) {
    CheckReport out;
    out.check = std::string(check_name(kind));
    out.tolerance = tolerance(kind);
    const auto start = std::chrono::steady_clock::now();
    try {
      if (gated(kind) && !admissible()) {
        out.status = "error";
        out.message = "prerequisite failed: admissibility";
        out.residual = std::numeric_limits<double>::infinity();
      } else {
        Residual worst = evaluate(kind, out.details);
        out.residual = worst.value;
        out.point = worst.point;
        out.status = worst.value <= out.tolerance ? "pass" : "fail";
      }
    } catch (const ScenarioError&) {
      throw;
    } catch (const std::exception& e) {
      out.status = "error";
      out.message = e.what();
      out.residual = std::numeric_limits<double>::infinity();
    }
    out.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
  }

 private:
  double tolerance(CheckKind kind) const {
    if (options_.tolerance) return *options_.tolerance;
    auto it = scenario_.tolerances.find(std::string(check_name(kind)));
    return it != scenario_.tolerances.end() ? it->second : default_tolerance(kind);
  }

  GroupValuedField h_field() const { return GroupValuedField(r_.chart, r_.h, r_.ambient_group); }

  bool admissible() {
    if (!setup_attempted_) {
      setup_attempted_ = true;
      try {
        setup_.emplace(check_admissibility(h_field(), r_.split));
      } catch (const AdmissibilityError& e) {
        admissibility_failure_ = e.worst();
        admissibility_message_ = e.what();
      }
    }
    return setup_.has_value();
  }

  const LocalConnection& connection() const {
    if (!r_.connection) throw DeformError("scenario has no connection");
    return *r_.connection;
  }

  const LieValuedForm& reference() const {
    if (!r_.reference) throw DeformError("scenario has no reference connection");
    return *r_.reference;
  }

  const LocalConnection& deformed() {
    if (!deformed_) deformed_ = deform_connection(connection(), *setup_);
    return *deformed_;
  }

  Splitting so_split() const {
    const int n = r_.sub->matrix_size();
    return Splitting::build(catalog_algebra("so(" + std::to_string(n) + ")"), r_.sub);
  }

  Residual evaluate(CheckKind kind, json& details) {
    const auto points = r_.chart.sample_points();
    Residual worst;
    switch (kind) {
      case CheckKind::Admissibility: {
        if (!admissible()) {
          details["message"] = admissibility_message_;
          return admissibility_failure_;
        }
        worst = setup_->normaliser_residual();
        details["normaliser"] = residual_json(worst);
        details["centraliser_valued"] = setup_->centraliser_valued();
        details["constant"] = setup_->constant();
        details["conformal"] = setup_->conformal();
        if (scenario_.representation) {
          const int n = r_.sub->matrix_size();
          std::optional<Vector> tau0;
          if (scenario_.tau0) tau0 = Eigen::Map<const Vector>(scenario_.tau0->data(), scenario_.tau0->size());
          RepresentationModel rep = *scenario_.representation == "standard" ? RepresentationModel::standard(n, tau0)
                                                                             : RepresentationModel::exterior_square(n, tau0);
          DefiningSectionModel ds(std::move(rep), *r_.sub);
          Vector tau = deform_defining_section(ds, *setup_, r_.chart.center());
          details["deformed_tau_at_center"] = std::vector<double>(tau.data(), tau.data() + tau.size());
        }
        return worst;
      }
      case CheckKind::Deform: {
        const LocalConnection& out = deformed();
        Residual g_valued = compatibility_residual(out.form, *r_.split);
        LieValuedForm obstruction = extend_connection_rep(connection(), *setup_) - zeta_form(*setup_);
        Residual identity = max_difference(out.form, obstruction, points);
        absorb(worst, g_valued);
        absorb(worst, identity);
        details["g_valued"] = residual_json(g_valued);
        details["extend_minus_zeta"] = residual_json(identity);
        if (setup_->conformal() && r_.frame.size() == r_.h.rows()) {
          ConformalResult c = conformal_deform(connection(), r_.h(0, 0), r_.frame, r_.split);
          Residual coincide = max_difference(c.connection.form, out.form, points);
          absorb(worst, c.coincidence);
          absorb(worst, coincide);
          details["conformal_coincidence"] = residual_json(c.coincidence);
          details["conformal_vs_general"] = residual_json(coincide);
        }
        details["components"] = form_table(out.form);
        return worst;
      }
      case CheckKind::Zeta: {
        LieValuedForm zeta = zeta_form(*setup_);
        Residual m_valued = max_norm(restrict_project_connection(zeta, *r_.split).form, points);
        absorb(worst, m_valued);
        details["m_valued"] = residual_json(m_valued);
        if (setup_->conformal()) {
          Residual pr_g = max_norm(restrict_project_connection(setup_->maurer_cartan(), *r_.split).form, points);
          const Expr& phi = r_.h(0, 0);
          std::vector<ExprMatrix> dlog;
          for (int i = 0; i < r_.chart.dim(); ++i)
            dlog.push_back(expr::div(differentiate(phi, i), phi) * ExprMatrix::identity(r_.h.rows()));
          LieValuedForm expected(r_.chart, 1, std::move(dlog));
          Residual match = max_difference(zeta, expected, points);
          absorb(worst, pr_g);
          absorb(worst, match);
          details["pr_g_maurer_cartan"] = residual_json(pr_g);
          details["dlog_phi_match"] = residual_json(match);
          details["expected"] = form_table(expected);
        }
        if (scenario_.expected_zeta) {
          Residual match = expectation_residual(zeta, *scenario_.expected_zeta, "expected.zeta");
          absorb(worst, match);
          details["expected_match"] = residual_json(match);
        }
        if (worst.point.empty()) worst.absorb(0.0, r_.chart.center());
        details["table"] = form_table(zeta);
        return worst;
      }
      case CheckKind::Torsion: {
        LieValuedForm torsion = intrinsic_torsion(reference(), *r_.split);
        LieValuedForm rest = restrict_project_connection(reference(), *r_.split, "s").form;
        Residual split_identity = max_difference(torsion + rest, reference(), points);
        absorb(worst, split_identity);
        details["decomposition"] = residual_json(split_identity);
        details["norm"] = residual_json(max_norm(torsion, points));
        if (scenario_.expected_torsion) {
          Residual match = expectation_residual(torsion, *scenario_.expected_torsion, "expected.torsion");
          absorb(worst, match);
          details["expected_match"] = residual_json(match);
        }
        details["table"] = form_table(torsion);
        return worst;
      }
      case CheckKind::TorsionChange: {
        const LieValuedForm& a0 = reference();
        const LieValuedForm& a0p = r_.reference_prime ? *r_.reference_prime : a0;
        LieValuedForm change = torsion_change(a0, a0p, *setup_);
        Residual two_path = max_difference(change, torsion_change_direct(a0, a0p, *setup_), points);
        absorb(worst, two_path);
        details["two_path"] = residual_json(two_path);
        Residual torsion = max_norm(intrinsic_torsion(a0, *r_.split), points);
        details["torsion_free"] = torsion.value <= tol::kAlgebraic && !r_.reference_prime;
        if (details["torsion_free"].get<bool>()) {
          const ExprMatrix& h = r_.h;
          const ExprMatrix& hinv = setup_->h_inverse();
          LieValuedForm rotated = zeta_form(*setup_).map([&](const ExprMatrix& z) { return h * z * hinv; });
          Residual special = max_difference(change, rotated, points);
          absorb(worst, special);
          details["equals_ad_h_zeta"] = residual_json(special);
        }
        return worst;
      }
      case CheckKind::Phi: {
        Splitting so = so_split();
        worst = phi_preservation_field(h_field(), so);
        details["preserved"] = worst.value <= tolerance(kind);
        return worst;
      }
      case CheckKind::Instanton: {
        Splitting so = so_split();
        const double tol = tolerance(kind);
        InstantonVerdict before = instanton_check(field_strength(connection().form), r_.frame, so, r_.sub, tol);
        InstantonVerdict after =
            instanton_check(field_strength(deformed().form), r_.frame.transformed(r_.h), so, r_.sub, tol);
        absorb(worst, before.worst);
        absorb(worst, after.worst);
        details["before"] = {{"instanton", before.instanton}, {"worst", residual_json(before.worst)}};
        details["after"] = {{"instanton", after.instanton}, {"worst", residual_json(after.worst)}};
        details["verdict_preserved"] = before.instanton == after.instanton;
        return worst;
      }
      case CheckKind::MetricCompat: {
        Residual original = metric_compatibility_residual(connection().form, r_.frame);
        Residual moved = metric_compatibility_residual(deformed().form, r_.frame.transformed(r_.h));
        details["original"] = residual_json(original);
        details["deformed"] = residual_json(moved);
        return moved;
      }
    }
    return worst;
  }

  const Scenario& scenario_;
  const RunOptions& options_;
  Resolved r_;
  bool setup_attempted_ = false;
  std::optional<DeformationSetup> setup_;
  Residual admissibility_failure_;
  std::string admissibility_message_;
  std::optional<LocalConnection> deformed_;
};

// ---------------------------------------------------------------------------
// Builtin catalog

std::string num(double v) { return ndef::to_string(expr::constant(v)); }

StringMatrix to_text(const ExprMatrix& m) { return m.to_strings(); }

StringMatrix to_text(const Matrix& m) {
  StringMatrix out(static_cast<std::size_t>(m.rows()));
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out[r].push_back(num(m(r, c)));
  return out;
}

StringMatrix diagonal(int n, const std::string& entry) {
  StringMatrix out(n, std::vector<std::string>(n, "0"));
  for (int i = 0; i < n; ++i) out[i][i] = entry;
  return out;
}

/// A_μ = 2 pr_+(Σ_ν (x − x0)_ν L_νμ) / (λ² + |x − x0|²); self-dual curvature.
std::vector<StringMatrix> self_dual_connection_text(const std::vector<double>& x0, double lambda) {
  auto plus = catalog_algebra("su2_plus_in_so4");
  Expr r2 = expr::constant(lambda * lambda);
  std::vector<Expr> shifted;
  for (int i = 0; i < 4; ++i) {
    shifted.push_back(expr::sub(expr::coordinate(i), expr::constant(x0[i])));
    r2 = expr::add(r2, expr::pow(shifted.back(), 2));
  }
  Expr scale = expr::div(expr::constant(2.0), r2);
  std::vector<StringMatrix> out;
  for (int mu = 0; mu < 4; ++mu) {
    ExprMatrix sum(4, 4);
    for (int nu = 0; nu < 4; ++nu)
      if (nu != mu) sum = sum + shifted[nu] * ExprMatrix::constant(elementary_rotation(4, nu, mu));
    out.push_back(to_text(scale * project(plus->orthonormal_basis(), sum)));
  }
  return out;
}

Scenario base(std::string name, int dim, std::string ambient, std::string sub) {
  Scenario s;
  s.name = std::move(name);
  s.bounds.assign(dim, {0.0, 1.0});
  s.grid.assign(dim, 5);
  s.ambient = {std::move(ambient), {}};
  s.subgroup = {std::move(sub), {}};
  return s;
}

Scenario conformal_so3() {
  Scenario s = base("conformal_so3", 3, "gl(3)", "so(3)");
  s.h = diagonal(3, "1 + x1^2");
  s.frame = diagonal(3, "1/(1 + x2^2)");
  s.connection = FormInput{"levi-civita", {}};
  s.reference = FormInput{"levi-civita", {}};
  s.checks = {CheckKind::Admissibility, CheckKind::Deform,        CheckKind::Zeta, CheckKind::Torsion,
              CheckKind::TorsionChange, CheckKind::Phi, CheckKind::MetricCompat};
  return s;
}

Matrix su2_minus_rotation(double angle) {
  return exponential(angle * (elementary_rotation(4, 0, 1) - elementary_rotation(4, 2, 3)));
}

Scenario constant_su2() {
  Scenario s = base("constant_su2", 4, "so(4)", "su2_plus_in_so4");
  s.h = to_text(su2_minus_rotation(0.7));
  s.connection = FormInput{"", self_dual_connection_text({0.4, 0.5, 0.6, 0.5}, 0.8)};
  s.reference = FormInput{"", self_dual_connection_text({0.4, 0.5, 0.6, 0.5}, 0.8)};
  s.checks = {CheckKind::Admissibility, CheckKind::Deform,    CheckKind::Zeta,
              CheckKind::TorsionChange, CheckKind::Phi,       CheckKind::Instanton,
              CheckKind::MetricCompat};
  s.expected_zeta = std::vector<StringMatrix>(4, diagonal(4, "0"));
  return s;
}

Scenario su2_diag_break() {
  Scenario s = base("su2_diag_break", 4, "gl(4)", "su2_plus_in_so4");
  s.h = diagonal(4, "1");
  s.h[0][0] = "2";
  s.checks = {CheckKind::Admissibility, CheckKind::Phi};
  return s;
}

Scenario trivial_frame() {
  Scenario s = base("trivial_frame", 3, "so(3)", "trivial(3)");
  ExprMatrix h = one_parameter_field(elementary_rotation(3, 0, 1), parse_expression("x1*x2", 3));
  s.h = to_text(h);
  std::vector<StringMatrix> a0;
  for (int i = 0; i < 3; ++i) {
    StringMatrix m = diagonal(3, "0");
    const int a = i, b = (i + 1) % 3;
    const std::string e = "x" + std::to_string(b + 1) + " + " + std::to_string(i + 1);
    m[a][b] = e;
    m[b][a] = "-(" + e + ")";
    a0.push_back(m);
  }
  s.reference = FormInput{"", a0};
  s.expected_torsion = a0;
  s.checks = {CheckKind::Admissibility, CheckKind::Zeta, CheckKind::Torsion, CheckKind::TorsionChange};
  return s;
}

Scenario central_su2() {
  Scenario s = base("central_su2", 4, "so(4)", "su2_plus_in_so4");
  ExprMatrix h = one_parameter_field(elementary_rotation(4, 0, 1) - elementary_rotation(4, 2, 3),
                                     parse_expression("x1*x2 + 0.5*x3", 4));
  s.h = to_text(h);
  s.connection = FormInput{"", self_dual_connection_text({0.5, 0.3, 0.5, 0.7}, 0.6)};
  s.checks = {CheckKind::Admissibility, CheckKind::Deform, CheckKind::Phi, CheckKind::Instanton,
              CheckKind::MetricCompat};
  return s;
}

Scenario off_normaliser() {
  Scenario s = base("off_normaliser", 3, "so(3)", "so2_in_so3");
  ExprMatrix h = one_parameter_field(elementary_rotation(3, 0, 1), parse_expression("x1", 3)) *
                 ExprMatrix::constant(exponential(0.3 * elementary_rotation(3, 1, 2)));
  s.h = to_text(h);
  s.connection = FormInput{"zero", {}};
  s.checks = {CheckKind::Admissibility, CheckKind::Deform};
  return s;
}

const std::vector<std::pair<std::string, Scenario (*)()>>& catalog() {
  static const std::vector<std::pair<std::string, Scenario (*)()>> entries = {
      {"central_su2", central_su2},       {"conformal_so3", conformal_so3},   {"constant_su2", constant_su2},
      {"off_normaliser", off_normaliser}, {"su2_diag_break", su2_diag_break}, {"trivial_frame", trivial_frame},
  };
  return entries;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) { return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>(); }

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<CheckKind>& all_checks() {
  static const std::vector<CheckKind> kinds = {CheckKind::Admissibility, CheckKind::Deform,       CheckKind::Zeta,
                                               CheckKind::Torsion,       CheckKind::TorsionChange, CheckKind::Phi,
                                               CheckKind::Instanton,     CheckKind::MetricCompat};
  return kinds;
}

std::string_view check_name(CheckKind kind) { return check_table().at(kind).first; }

std::optional<CheckKind> parse_check(std::string_view name) {
  for (const auto& [kind, entry] : check_table())
    if (entry.first == name) return kind;
  return std::nullopt;
}

double default_tolerance(CheckKind kind) { return check_table().at(kind).second; }

Scenario parse_scenario(const json& j) {
  require_keys(j, "scenario", {"name", "chart", "ambient", "subgroup", "h", "connection", "reference", "frame",
                               "representation", "checks", "tolerances", "expected"});
  for (auto key : {"name", "chart", "ambient", "subgroup", "h", "checks"})
    if (!j.contains(key)) fail(std::string("missing required key '") + key + "'");
  Scenario s;
  if (!j["name"].is_string()) fail("name must be a string");
  s.name = j["name"].get<std::string>();

  const json& chart = j["chart"];
  require_keys(chart, "chart", {"bounds", "grid"});
  if (!chart.contains("bounds") || !chart["bounds"].is_array() || chart["bounds"].empty())
    fail("chart.bounds must be a non-empty array of [lo, hi]");
  for (const auto& b : chart["bounds"]) {
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) fail("chart.bounds entries must be [lo, hi]");
    s.bounds.emplace_back(b[0].get<double>(), b[1].get<double>());
  }
  const int dim = static_cast<int>(s.bounds.size());
  if (!chart.contains("grid")) {
    s.grid.assign(dim, 5);
  } else if (chart["grid"].is_number_integer()) {
    s.grid.assign(dim, chart["grid"].get<int>());
  } else if (chart["grid"].is_array() && static_cast<int>(chart["grid"].size()) == dim) {
    for (const auto& g : chart["grid"]) {
      if (!g.is_number_integer()) fail("chart.grid entries must be integers");
      s.grid.push_back(g.get<int>());
    }
  } else {
    fail("chart.grid must be an integer or one integer per axis");
  }

  s.ambient = parse_algebra(j["ambient"], "ambient");
  s.subgroup = parse_algebra(j["subgroup"], "subgroup");
  s.h = parse_string_matrix(j["h"], "h");
  if (s.h.size() != s.h.front().size()) fail("h must be square");
  if (j.contains("connection")) s.connection = parse_form(j["connection"], "connection");
  if (j.contains("reference")) {
    const json& ref = j["reference"];
    require_keys(ref, "reference", {"a0", "a0_prime"});
    if (!ref.contains("a0")) fail("reference.a0 is required");
    s.reference = parse_form(ref["a0"], "reference.a0");
    if (ref.contains("a0_prime")) s.reference_prime = parse_form(ref["a0_prime"], "reference.a0_prime");
  }
  if (j.contains("frame")) s.frame = parse_string_matrix(j["frame"], "frame");
  if (j.contains("representation")) {
    const json& rep = j["representation"];
    require_keys(rep, "representation", {"kind", "tau0"});
    if (!rep.contains("kind") || !rep["kind"].is_string()) fail("representation.kind must be a string");
    s.representation = rep["kind"].get<std::string>();
    if (*s.representation != "standard" && *s.representation != "exterior_square")
      fail("representation.kind must be 'standard' or 'exterior_square'");
    if (rep.contains("tau0")) {
      if (!rep["tau0"].is_array()) fail("representation.tau0 must be an array of numbers");
      std::vector<double> tau;
      for (const auto& v : rep["tau0"]) {
        if (!v.is_number()) fail("representation.tau0 must be an array of numbers");
        tau.push_back(v.get<double>());
      }
      s.tau0 = std::move(tau);
    }
  }
  if (!j["checks"].is_array()) fail("checks must be an array of names");
  std::set<CheckKind> requested;
  for (const auto& c : j["checks"]) {
    if (!c.is_string()) fail("checks must be an array of names");
    auto kind = parse_check(c.get<std::string>());
    if (!kind) fail("unknown check '" + c.get<std::string>() + "'");
    requested.insert(*kind);
  }
  for (CheckKind k : all_checks())
    if (requested.count(k)) s.checks.push_back(k);
  if (j.contains("tolerances")) {
    if (!j["tolerances"].is_object()) fail("tolerances must be an object");
    for (const auto& [key, value] : j["tolerances"].items()) {
      if (!parse_check(key)) fail("tolerance for unknown check '" + key + "'");
      if (!value.is_number() || value.get<double>() < 0) fail("tolerance for '" + key + "' must be a non-negative number");
      s.tolerances[key] = value.get<double>();
    }
  }
  if (j.contains("expected")) {
    const json& e = j["expected"];
    require_keys(e, "expected", {"zeta", "torsion"});
    if (e.contains("zeta")) s.expected_zeta = parse_matrix_list(e["zeta"], "expected.zeta");
    if (e.contains("torsion")) s.expected_torsion = parse_matrix_list(e["torsion"], "expected.torsion");
  }

  // Resolve once so that catalog names, shapes and expressions are validated up front.
  resolve(s, {});
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("scenario: " + path + ": " + e.what());
  }
  return parse_scenario(j);
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  json bounds = json::array();
  for (const auto& [lo, hi] : s.bounds) bounds.push_back({lo, hi});
  j["chart"] = {{"bounds", bounds}, {"grid", s.grid}};
  j["ambient"] = algebra_json(s.ambient);
  j["subgroup"] = algebra_json(s.subgroup);
  j["h"] = string_matrix_json(s.h);
  if (s.connection) j["connection"] = form_json(*s.connection);
  if (s.reference) {
    j["reference"] = {{"a0", form_json(*s.reference)}};
    if (s.reference_prime) j["reference"]["a0_prime"] = form_json(*s.reference_prime);
  }
  if (s.frame) j["frame"] = string_matrix_json(*s.frame);
  if (s.representation) {
    j["representation"] = {{"kind", *s.representation}};
    if (s.tau0) j["representation"]["tau0"] = *s.tau0;
  }
  json checks = json::array();
  for (CheckKind k : s.checks) checks.push_back(std::string(check_name(k)));
  j["checks"] = checks;
  if (!s.tolerances.empty()) j["tolerances"] = s.tolerances;
  if (s.expected_zeta || s.expected_torsion) {
    j["expected"] = json::object();
    if (s.expected_zeta) j["expected"]["zeta"] = *s.expected_zeta;
    if (s.expected_torsion) j["expected"]["torsion"] = *s.expected_torsion;
  }
  return j;
}

std::string scenario_digest(const Scenario& s) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : scenario_to_json(s).dump()) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& [name, make] : catalog()) out.push_back(name);
  return out;
}

Scenario builtin_scenario(std::string_view name) {
  for (const auto& [entry, make] : catalog())
    if (entry == name) return make();
  std::string list;
  for (const auto& n : builtin_names()) list += (list.empty() ? "" : ", ") + n;
  throw ScenarioError("unknown catalog entry '" + std::string(name) + "'; available: " + list);
}

bool Report::passed() const {
  for (const auto& c : checks)
    if (c.status != "pass") return false;
  return true;
}

Report run_scenario(const Scenario& s, const RunOptions& options) {
  std::vector<CheckKind> wanted = options.checks ? *options.checks : s.checks;
  std::set<CheckKind> selected(wanted.begin(), wanted.end());
  for (CheckKind k : wanted)
    if (gated(k)) selected.insert(CheckKind::Admissibility);
  Report report;
  report.scenario = s.name;
  report.digest = scenario_digest(s);
  Runner runner(s, options);
  for (CheckKind k : all_checks())
    if (selected.count(k)) report.checks.push_back(runner.run(k));
  return report;
}

json report_to_json(const Report& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    json entry = {{"check", c.check},           {"status", c.status},
                  {"residual", number_or_null(c.residual)}, {"tolerance", c.tolerance},
                  {"point", point_json(c.point)}, {"elapsed_ms", c.elapsed_ms},
                  {"details", c.details}};
    if (!c.message.empty()) entry["message"] = c.message;
    checks.push_back(entry);
  }
  return {{"scenario", r.scenario},
          {"digest", r.digest},
          {"version", r.version},
          {"status", r.passed() ? "pass" : "fail"},
          {"checks", checks}};
}

Report report_from_json(const json& j) {
  Report r;
  r.scenario = j.at("scenario").get<std::string>();
  r.digest = j.at("digest").get<std::string>();
  r.version = j.at("version").get<std::string>();
  for (const auto& c : j.at("checks")) {
    CheckReport out;
    out.check = c.at("check").get<std::string>();
    out.status = c.at("status").get<std::string>();
    out.residual = number_from(c.at("residual"));
    out.tolerance = c.at("tolerance").get<double>();
    out.point = c.at("point").get<Point>();
    out.elapsed_ms = c.at("elapsed_ms").get<double>();
    out.message = c.value("message", "");
    out.details = c.at("details");
    r.checks.push_back(std::move(out));
  }
  return r;
}

std::string emit_report(const Report& r, std::string_view format) {
  if (format == "json") return report_to_json(r).dump(2) + "\n";
  if (format != "csv") throw ScenarioError("unknown report format '" + std::string(format) + "' (json or csv)");
  std::ostringstream out;
  out << "check,status,residual,point,elapsed_ms\n";
  for (const auto& c : r.checks) {
    std::string point;
    for (std::size_t i = 0; i < c.point.size(); ++i) point += (i ? ";" : "") + format_double(c.point[i]);
    char elapsed[32];
    std::snprintf(elapsed, sizeof elapsed, "%.3f", c.elapsed_ms);
    out << c.check << ',' << c.status << ',' << format_double(c.residual) << ',' << point << ',' << elapsed << '\n';
  }
  return out.str();
}

int exit_code(const Report& r) { return r.passed() ? 0 : 2; }

}  // namespace ndef::cli
