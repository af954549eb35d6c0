#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smallnoise::expr {

// Small arithmetic expression language for coefficient declarations.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := atom ('^' unary)?          right-associative, binds above unary '-'
//   atom    := number | 't' | 'x<i>' | func '(' expr (',' expr)? ')' | '(' expr ')'
//   func    := sin cos exp tanh abs sqrt sign (1 arg) | min max (2 args)
//
// Variables are t and x1..xr with r fixed at parse time. No implicit
// multiplication. sign(0) = 0.

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t col)
        : std::runtime_error(msg + " (column " + std::to_string(col) + ")"), column(col) {}
    std::size_t column; // 1-based
};

struct EvalError : std::runtime_error {
    EvalError(const std::string& msg, std::string subexpr_)
        : std::runtime_error(msg + " in subexpression `" + subexpr_ + "`"),
          subexpr(std::move(subexpr_)) {}
    std::string subexpr;
};

enum class Op {
    constant, var_t, var_x,
    add, sub, mul, div, pow, neg,
    sin, cos, exp, tanh, abs, sqrt, sign, min, max,
};

struct Node {
    Op op;
    double value = 0.0;   // constant
    int index = 0;        // var_x: 0-based component
    std::shared_ptr<const Node> a, b;
};

class Expr {
  public:
    Expr() = default;
    Expr(std::shared_ptr<const Node> root, int r) : root_(std::move(root)), r_(r) {}

    // Unchecked evaluation: domain violations (x/0, sqrt(-1)) and overflow
    // come back as inf/NaN, which integrators record as path blow-up.
    double eval(double t, std::span<const double> x) const noexcept;

    // Checked evaluation: throws EvalError naming the offending
    // subexpression on division by zero or sqrt of a negative.
    double eval_checked(double t, std::span<const double> x) const;

    std::string pretty() const;
    int dimension() const { return r_; }
    bool empty() const { return root_ == nullptr; }
    const std::shared_ptr<const Node>& root() const { return root_; }

  private:
    std::shared_ptr<const Node> root_;
    int r_ = 0;
};

// Parses source against state dimension r. Throws ParseError (syntax, with
// 1-based column), including unknown identifiers and arity mismatches.
Expr parse(const std::string& source, int r);

// Row-major list of expressions with a declared shape.
struct VectorExpr {
    std::vector<Expr> rows;
    int r = 0;
    int cols = 1;
};

VectorExpr parse_vector(const std::vector<std::string>& sources, int r, int cols);

} // namespace smallnoise::expr
