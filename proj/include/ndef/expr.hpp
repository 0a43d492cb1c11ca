#pragma once

// Scalar expressions over chart coordinates.
//
// Expressions are immutable DAGs held by shared pointers; the smart
// constructors fold constants and prune identities (0 + e, 1 * e, ...), which
// keeps symbolic derivatives of group-valued fields at a manageable size.
// Evaluation over many points goes through `Program`, a flattened tape.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ndef {

enum class Op {
  Constant,
  Coordinate,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  InverseEntry,
};

struct Node;
using Expr = std::shared_ptr<const Node>;

/// Square matrix of expressions whose inverse is taken numerically at
/// evaluation time (LU). Entries of the inverse appear as InverseEntry nodes.
struct InverseBlock {
  std::size_t n = 0;
  std::vector<Expr> entries;  // row-major n*n
};

struct Node {
  Op op = Op::Constant;
  double value = 0.0;  // Constant
  int index = 0;       // Coordinate (0-based), Pow exponent, InverseEntry row*n+col
  Expr lhs;
  Expr rhs;
  std::shared_ptr<const InverseBlock> block;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace expr {

Expr constant(double v);
Expr coordinate(int index);  // 0-based
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr neg(Expr a);
Expr pow(Expr a, int exponent);
Expr sin(Expr a);
Expr cos(Expr a);
Expr exp(Expr a);
Expr log(Expr a);
Expr sqrt(Expr a);
Expr inverse_entry(std::shared_ptr<const InverseBlock> block, std::size_t row, std::size_t col);

bool is_constant_value(const Expr& e, double v);
inline bool is_zero(const Expr& e) { return is_constant_value(e, 0.0); }

/// True when no coordinate is reachable from `e`.
bool is_constant(const Expr& e);

/// Largest coordinate index referenced plus one (0 for constants).
int coordinate_extent(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

std::size_t node_count(const Expr& e);

}  // namespace expr

/// Parses the expression grammar
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | base ('^' ['-'] integer)?
///   base   := number | 'x' digit+ | func '(' expr ')' | '(' expr ')'
/// with coordinates x1..x<dim>.
Expr parse_expression(std::string_view text, int dim);

/// Prints in the parser's grammar. InverseEntry nodes are printed as
/// `inv[i,j]`, which does not parse back.
std::string to_string(const Expr& e);

/// Exact partial derivative with respect to coordinate `index` (0-based).
/// Reuse one Differentiator across related expressions to preserve sharing.
class Differentiator {
 public:
  explicit Differentiator(int index) : index_(index) {}
  Expr operator()(const Expr& e);

 private:
  int index_;
  std::unordered_map<const Node*, Expr> memo_;
};

Expr differentiate(const Expr& e, int index);

/// Single-point evaluation; fine for tests, use Program for grids.
double evaluate(const Expr& e, std::span<const double> point);

/// Flattened evaluation tape over a set of roots.
class Program {
 public:
  explicit Program(std::span<const Expr> roots);

  std::size_t root_count() const { return roots_.size(); }
  std::size_t size() const { return tape_.size(); }

  void evaluate(std::span<const double> point, std::span<double> out) const;
  std::vector<double> evaluate(std::span<const double> point) const;

 private:
  struct Instr {
    Op op;
    double value;
    int index;
    std::size_t a;
    std::size_t b;
    std::size_t block;  // InverseEntry
  };
  struct Block {
    std::size_t n;
    std::vector<std::size_t> slots;
  };

  std::vector<Instr> tape_;
  std::vector<Block> blocks_;
  std::vector<std::size_t> roots_;
};

/// Central difference with step max(1e-6, 1e-6|x_i|) and one Richardson
/// refinement. Bounds checking is the caller's job (see Chart).
double central_difference(const Expr& e, int index, std::span<const double> point);

}  // namespace ndef
