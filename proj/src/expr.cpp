#include "ndef/expr.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <unordered_set>

namespace ndef {

namespace {

Expr make(Op op, Expr a = nullptr, Expr b = nullptr, int index = 0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  n->index = index;
  return n;
}

bool is_const(const Expr& e) { return e->op == Op::Constant; }

}  // namespace

namespace expr {

Expr constant(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Constant;
  n->value = v;
  return n;
}

Expr coordinate(int index) {
  if (index < 0) throw std::invalid_argument("negative coordinate index");
  return make(Op::Coordinate, nullptr, nullptr, index);
}

bool is_constant_value(const Expr& e, double v) { return e->op == Op::Constant && e->value == v; }

Expr add(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value + b->value);
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  if (b->op == Op::Neg) return sub(std::move(a), b->lhs);
  return make(Op::Add, std::move(a), std::move(b));
}

Expr sub(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value - b->value);
  if (is_zero(b)) return a;
  if (is_zero(a)) return neg(std::move(b));
  if (a == b) return constant(0.0);
  return make(Op::Sub, std::move(a), std::move(b));
}

Expr mul(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value * b->value);
  if (is_zero(a) || is_zero(b)) return constant(0.0);
  if (is_constant_value(a, 1.0)) return b;
  if (is_constant_value(b, 1.0)) return a;
  if (is_constant_value(a, -1.0)) return neg(std::move(b));
  if (is_constant_value(b, -1.0)) return neg(std::move(a));
  return make(Op::Mul, std::move(a), std::move(b));
}

Expr div(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value / b->value);
  if (is_zero(a)) return constant(0.0);
  if (is_constant_value(b, 1.0)) return a;
  return make(Op::Div, std::move(a), std::move(b));
}

Expr neg(Expr a) {
  if (is_const(a)) return constant(-a->value);
  if (a->op == Op::Neg) return a->lhs;
  return make(Op::Neg, std::move(a));
}

Expr pow(Expr a, int exponent) {
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return a;
  if (is_const(a)) return constant(std::pow(a->value, exponent));
  return make(Op::Pow, std::move(a), nullptr, exponent);
}

Expr sin(Expr a) {
  if (is_const(a)) return constant(std::sin(a->value));
  return make(Op::Sin, std::move(a));
}

Expr cos(Expr a) {
  if (is_const(a)) return constant(std::cos(a->value));
  return make(Op::Cos, std::move(a));
}

Expr exp(Expr a) {
  if (is_const(a)) return constant(std::exp(a->value));
  return make(Op::Exp, std::move(a));
}

Expr log(Expr a) {
  if (is_const(a)) return constant(std::log(a->value));
  return make(Op::Log, std::move(a));
}

Expr sqrt(Expr a) {
  if (is_const(a)) return constant(std::sqrt(a->value));
  return make(Op::Sqrt, std::move(a));
}

Expr inverse_entry(std::shared_ptr<const InverseBlock> block, std::size_t row, std::size_t col) {
  if (!block || row >= block->n || col >= block->n)
    throw std::out_of_range("inverse_entry index out of range");
  auto n = std::make_shared<Node>();
  n->op = Op::InverseEntry;
  n->index = static_cast<int>(row * block->n + col);
  n->block = std::move(block);
  return n;
}

namespace {

template <class Visit>
void walk(const Expr& root, Visit&& visit) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{root.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!n || !seen.insert(n).second) continue;
    visit(*n);
    if (n->lhs) stack.push_back(n->lhs.get());
    if (n->rhs) stack.push_back(n->rhs.get());
    if (n->block)
      for (const auto& e : n->block->entries) stack.push_back(e.get());
  }
}

}  // namespace

bool is_constant(const Expr& e) {
  bool constant_only = true;
  walk(e, [&](const Node& n) {
    if (n.op == Op::Coordinate) constant_only = false;
  });
  return constant_only;
}

int coordinate_extent(const Expr& e) {
  int extent = 0;
  walk(e, [&](const Node& n) {
    if (n.op == Op::Coordinate) extent = std::max(extent, n.index + 1);
  });
  return extent;
}

std::size_t node_count(const Expr& e) {
  std::size_t count = 0;
  walk(e, [&](const Node&) { ++count; });
  return count;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->op != b->op || a->index != b->index) return false;
  switch (a->op) {
    case Op::Constant:
      return a->value == b->value;
    case Op::Coordinate:
      return true;
    case Op::InverseEntry:
      return a->block == b->block;
    default:
      break;
  }
  if (!structurally_equal(a->lhs, b->lhs)) return false;
  if (a->rhs || b->rhs) return structurally_equal(a->rhs, b->rhs);
  return true;
}

}  // namespace expr

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  Expr parse() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = expr::add(lhs, parse_term());
      } else if (accept('-')) {
        lhs = expr::sub(lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    for (;;) {
      if (accept('*')) {
        lhs = expr::mul(lhs, parse_factor());
      } else if (accept('/')) {
        lhs = expr::div(lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_factor() {
    if (accept('-')) return expr::neg(parse_factor());
    Expr base = parse_base();
    if (accept('^')) {
      skip_ws();
      bool negative = false;
      if (pos_ < text_.size() && text_[pos_] == '-') {
        negative = true;
        ++pos_;
      }
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) throw ParseError("expected integer exponent", pos_);
      int exponent = 0;
      auto res = std::from_chars(text_.data() + start, text_.data() + pos_, exponent);
      if (res.ec != std::errc()) throw ParseError("exponent out of range", start);
      base = expr::pow(base, negative ? -exponent : exponent);
    }
    return base;
  }

  Expr parse_base() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  Expr parse_number() {
    std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        digits();
      } else {
        pos_ = save;
      }
    }
    double value = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_) throw ParseError("malformed number", start);
    return expr::constant(value);
  }

  Expr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (name == "x" && pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      std::size_t digit_start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      int index = 0;
      auto res = std::from_chars(text_.data() + digit_start, text_.data() + pos_, index);
      if (res.ec != std::errc() || index < 1 || index > dim_)
        throw ParseError("unknown coordinate '" + std::string(text_.substr(start, pos_ - start)) +
                             "' on a " + std::to_string(dim_) + "-dimensional chart",
                         start);
      return expr::coordinate(index - 1);
    }
    using Fn = Expr (*)(Expr);
    static const std::pair<const char*, Fn> functions[] = {
        {"sin", &expr::sin}, {"cos", &expr::cos}, {"exp", &expr::exp}, {"log", &expr::log}, {"sqrt", &expr::sqrt}};
    for (const auto& [fname, fn] : functions) {
      if (name == fname) {
        expect('(');
        Expr arg = parse_expr();
        expect(')');
        return fn(arg);
      }
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(std::string_view text, int dim) { return Parser(text, dim).parse(); }

// ---------------------------------------------------------------------------
// Printer

namespace {

int precedence(const Node& n) {
  switch (n.op) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    case Op::Constant:
      return n.value < 0 || std::signbit(n.value) ? 3 : 5;
    default:
      return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int digits = 1; digits < 17; ++digits) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", digits, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

void print(const Node& n, std::string& out);

void print_child(const Node& child, int required, std::string& out) {
  bool parens = precedence(child) < required;
  if (parens) out += '(';
  print(child, out);
  if (parens) out += ')';
}

void print(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::Constant:
      out += format_number(n.value);
      return;
    case Op::Coordinate:
      out += 'x';
      out += std::to_string(n.index + 1);
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      static const char* symbols[] = {" + ", " - ", " * ", " / "};
      int p = precedence(n);
      print_child(*n.lhs, p, out);
      out += symbols[static_cast<int>(n.op) - static_cast<int>(Op::Add)];
      print_child(*n.rhs, p + 1, out);
      return;
    }
    case Op::Neg:
      out += '-';
      print_child(*n.lhs, 4, out);
      return;
    case Op::Pow:
      print_child(*n.lhs, 5, out);
      out += '^';
      out += std::to_string(n.index);
      return;
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt: {
      static const char* names[] = {"sin", "cos", "exp", "log", "sqrt"};
      out += names[static_cast<int>(n.op) - static_cast<int>(Op::Sin)];
      out += '(';
      print(*n.lhs, out);
      out += ')';
      return;
    }
    case Op::InverseEntry: {
      std::size_t sz = n.block->n;
      out += "inv[" + std::to_string(n.index / sz) + "," + std::to_string(n.index % sz) + "]";
      return;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(*e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Differentiation

Expr Differentiator::operator()(const Expr& e) {
  if (auto it = memo_.find(e.get()); it != memo_.end()) return it->second;
  using namespace expr;
  Expr d;
  switch (e->op) {
    case Op::Constant:
      d = constant(0.0);
      break;
    case Op::Coordinate:
      d = constant(e->index == index_ ? 1.0 : 0.0);
      break;
    case Op::Add:
      d = add((*this)(e->lhs), (*this)(e->rhs));
      break;
    case Op::Sub:
      d = sub((*this)(e->lhs), (*this)(e->rhs));
      break;
    case Op::Mul:
      d = add(mul((*this)(e->lhs), e->rhs), mul(e->lhs, (*this)(e->rhs)));
      break;
    case Op::Div: {
      Expr da = (*this)(e->lhs);
      Expr db = (*this)(e->rhs);
      if (is_zero(db)) {
        d = div(da, e->rhs);
      } else {
        d = div(sub(mul(da, e->rhs), mul(e->lhs, db)), pow(e->rhs, 2));
      }
      break;
    }
    case Op::Neg:
      d = neg((*this)(e->lhs));
      break;
    case Op::Pow:
      d = mul(mul(constant(e->index), pow(e->lhs, e->index - 1)), (*this)(e->lhs));
      break;
    case Op::Sin:
      d = mul(cos(e->lhs), (*this)(e->lhs));
      break;
    case Op::Cos:
      d = neg(mul(sin(e->lhs), (*this)(e->lhs)));
      break;
    case Op::Exp:
      d = mul(e, (*this)(e->lhs));
      break;
    case Op::Log:
      d = div((*this)(e->lhs), e->lhs);
      break;
    case Op::Sqrt:
      d = div((*this)(e->lhs), mul(constant(2.0), e));
      break;
    case Op::InverseEntry: {
      // d(M^-1) = -M^-1 (dM) M^-1
      const auto& block = e->block;
      std::size_t n = block->n;
      std::size_t row = static_cast<std::size_t>(e->index) / n;
      std::size_t col = static_cast<std::size_t>(e->index) % n;
      Expr sum = constant(0.0);
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
          Expr dm = (*this)(block->entries[k * n + l]);
          if (is_zero(dm)) continue;
          sum = add(sum, mul(mul(inverse_entry(block, row, k), dm), inverse_entry(block, l, col)));
        }
      }
      d = neg(sum);
      break;
    }
  }
  memo_.emplace(e.get(), d);
  return d;
}

Expr differentiate(const Expr& e, int index) { return Differentiator(index)(e); }

// ---------------------------------------------------------------------------
// Evaluation

Program::Program(std::span<const Expr> roots) {
  std::unordered_map<const Node*, std::size_t> slot_of;
  std::unordered_map<const InverseBlock*, std::size_t> block_of;

  std::function<std::size_t(const Expr&)> compile = [&](const Expr& e) -> std::size_t {
    if (auto it = slot_of.find(e.get()); it != slot_of.end()) return it->second;
    Instr ins{e->op, e->value, e->index, 0, 0, 0};
    if (e->lhs) ins.a = compile(e->lhs);
    if (e->rhs) ins.b = compile(e->rhs);
    if (e->op == Op::InverseEntry) {
      auto it = block_of.find(e->block.get());
      if (it == block_of.end()) {
        Block b{e->block->n, {}};
        for (const auto& entry : e->block->entries) b.slots.push_back(compile(entry));
        blocks_.push_back(std::move(b));
        it = block_of.emplace(e->block.get(), blocks_.size() - 1).first;
      }
      ins.block = it->second;
    }
    tape_.push_back(ins);
    std::size_t slot = tape_.size() - 1;
    slot_of.emplace(e.get(), slot);
    return slot;
  };

  for (const auto& r : roots) roots_.push_back(compile(r));
}

void Program::evaluate(std::span<const double> point, std::span<double> out) const {
  std::vector<double> v(tape_.size());
  std::vector<std::vector<double>> inverses(blocks_.size());
  for (std::size_t i = 0; i < tape_.size(); ++i) {
    const Instr& ins = tape_[i];
    switch (ins.op) {
      case Op::Constant:
        v[i] = ins.value;
        break;
      case Op::Coordinate:
        if (static_cast<std::size_t>(ins.index) >= point.size())
          throw std::out_of_range("coordinate x" + std::to_string(ins.index + 1) + " not in point");
        v[i] = point[ins.index];
        break;
      case Op::Add:
        v[i] = v[ins.a] + v[ins.b];
        break;
      case Op::Sub:
        v[i] = v[ins.a] - v[ins.b];
        break;
      case Op::Mul:
        v[i] = v[ins.a] * v[ins.b];
        break;
      case Op::Div:
        v[i] = v[ins.a] / v[ins.b];
        break;
      case Op::Neg:
        v[i] = -v[ins.a];
        break;
      case Op::Pow:
        v[i] = std::pow(v[ins.a], ins.index);
        break;
      case Op::Sin:
        v[i] = std::sin(v[ins.a]);
        break;
      case Op::Cos:
        v[i] = std::cos(v[ins.a]);
        break;
      case Op::Exp:
        v[i] = std::exp(v[ins.a]);
        break;
      case Op::Log:
        v[i] = std::log(v[ins.a]);
        break;
      case Op::Sqrt:
        v[i] = std::sqrt(v[ins.a]);
        break;
      case Op::InverseEntry: {
        auto& inv = inverses[ins.block];
        const Block& b = blocks_[ins.block];
        if (inv.empty()) {
          const auto n = static_cast<Eigen::Index>(b.n);
          Eigen::MatrixXd m(n, n);
          for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) m(r, c) = v[b.slots[static_cast<std::size_t>(r * n + c)]];
          Eigen::MatrixXd mi = m.partialPivLu().inverse();
          inv.resize(b.n * b.n);
          for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) inv[static_cast<std::size_t>(r * n + c)] = mi(r, c);
        }
        v[i] = inv[static_cast<std::size_t>(ins.index)];
        break;
      }
    }
  }
  for (std::size_t r = 0; r < roots_.size(); ++r) out[r] = v[roots_[r]];
}

std::vector<double> Program::evaluate(std::span<const double> point) const {
  std::vector<double> out(roots_.size());
  evaluate(point, out);
  return out;
}

double evaluate(const Expr& e, std::span<const double> point) {
  Program p(std::span<const Expr>(&e, 1));
  return p.evaluate(point)[0];
}

double central_difference(const Expr& e, int index, std::span<const double> point) {
  Program p(std::span<const Expr>(&e, 1));
  std::vector<double> x(point.begin(), point.end());
  const double xi = x.at(static_cast<std::size_t>(index));
  auto diff = [&](double h) {
    x[static_cast<std::size_t>(index)] = xi + h;
    double fp = p.evaluate(x)[0];
    x[static_cast<std::size_t>(index)] = xi - h;
    double fm = p.evaluate(x)[0];
    x[static_cast<std::size_t>(index)] = xi;
    return (fp - fm) / (2.0 * h);
  };
  const double h = std::max(1e-6, 1e-6 * std::abs(xi));
  const double coarse = diff(h);
  const double fine = diff(h / 2.0);
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace ndef
