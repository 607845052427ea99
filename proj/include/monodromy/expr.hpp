#pragma once

// Arithmetic expressions over x1..xN with exact first and second derivatives.
//
// Grammar (whitespace ignored):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | factor
//   factor := atom ('^' uint)?
//   atom   := number | 'x' uint | func '(' expr ')' | '(' expr ')'
//   func   := sin | cos | sqrt | exp
//
// Variables are 1-based on the surface (x1 is index 0). Nodes are stored in
// post-order so every child precedes its parent and evaluation is a single
// forward sweep.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "monodromy/dual.hpp"
#include "monodromy/error.hpp"
#include "monodromy/linalg.hpp"

namespace monodromy {

enum class Op { constant, variable, neg, sin, cos, sqrt, exp, add, sub, mul, div, pow };

struct ExprNode {
  Op op = Op::constant;
  double value = 0.0;   // constant
  int index = -1;       // variable (0-based)
  int lhs = -1;         // operand / left operand
  int rhs = -1;         // right operand of binary ops
  int exponent = 0;     // pow
  std::size_t offset = 0;  // byte offset into the source, for diagnostics
};

/// Thrown on evaluation domain errors (sqrt of a negative, division by zero).
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class Expression {
 public:
  Expression() = default;

  int dim() const noexcept { return dim_; }
  const std::vector<ExprNode>& nodes() const noexcept { return *nodes_; }
  const std::string& source() const noexcept { return *source_; }
  bool empty() const noexcept { return !nodes_ || nodes_->empty(); }

  /// Evaluates with any scalar supporting + - * / and sin/cos/sqrt/exp.
  template <typename T>
  T eval(std::span<const T> x) const;

  double operator()(const Eigen::VectorXd& x) const {
    check_dim(x.size());
    return eval<double>(std::span<const double>(x.data(), x.size()));
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;

  /// Fully parenthesized text that reparses to a structurally identical tree.
  std::string print() const;

  /// True if both trees have the same shape, ops, constants and indices.
  bool structurally_equal(const Expression& other) const;

 private:
  friend Expression parse_expression(std::string_view src, int dim);
  friend Expression constant_expression(double value, int dim);

  void check_dim(Eigen::Index n) const {
    if (n != dim_) {
      throw Error("expression expects " + std::to_string(dim_) + " variables, got " +
                  std::to_string(n));
    }
  }
  std::string print_node(int i) const;

  int dim_ = 0;
  std::shared_ptr<const std::vector<ExprNode>> nodes_;
  std::shared_ptr<const std::string> source_;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

  std::vector<ExprNode> run() {
    skip_ws();
    if (pos_ >= src_.size()) fail("empty expression");
    parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return std::move(nodes_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("syntax error at offset " + std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int push(ExprNode n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(Op op, int a, int b, std::size_t at) {
    ExprNode n;
    n.op = op;
    n.lhs = a;
    n.rhs = b;
    n.offset = at;
    return push(n);
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      skip_ws();
      std::size_t at = pos_;
      if (accept('+')) {
        lhs = binary(Op::add, lhs, parse_term(), at);
      } else if (accept('-')) {
        lhs = binary(Op::sub, lhs, parse_term(), at);
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      skip_ws();
      std::size_t at = pos_;
      if (accept('*')) {
        lhs = binary(Op::mul, lhs, parse_unary(), at);
      } else if (accept('/')) {
        lhs = binary(Op::div, lhs, parse_unary(), at);
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    skip_ws();
    std::size_t at = pos_;
    if (accept('-')) {
      int operand = parse_unary();
      ExprNode n;
      n.op = Op::neg;
      n.lhs = operand;
      n.offset = at;
      return push(n);
    }
    return parse_factor();
  }

  int parse_factor() {
    int base = parse_atom();
    skip_ws();
    std::size_t at = pos_;
    if (accept('^')) {
      skip_ws();
      unsigned long e = parse_uint("exponent");
      ExprNode n;
      n.op = Op::pow;
      n.lhs = base;
      n.exponent = static_cast<int>(e);
      n.offset = at;
      return push(n);
    }
    return base;
  }

  unsigned long parse_uint(const char* what) {
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (start == pos_) fail(std::string("expected unsigned integer ") + what);
    unsigned long v = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc()) fail(std::string(what) + " out of range");
    if (v > 1000000) fail(std::string(what) + " too large");
    return v;
  }

  int parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    std::size_t at = pos_;
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (c == '(') {
      ++pos_;
      int inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      std::string_view name = src_.substr(start, pos_ - start);
      if (name == "x" && pos_ < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        unsigned long k = parse_uint("variable index");
        if (k < 1 || static_cast<long>(k) > dim_) {
          pos_ = at;
          fail("variable x" + std::to_string(k) + " outside x1..x" + std::to_string(dim_));
        }
        ExprNode n;
        n.op = Op::variable;
        n.index = static_cast<int>(k) - 1;
        n.offset = at;
        return push(n);
      }
      Op op;
      if (name == "sin") {
        op = Op::sin;
      } else if (name == "cos") {
        op = Op::cos;
      } else if (name == "sqrt") {
        op = Op::sqrt;
      } else if (name == "exp") {
        op = Op::exp;
      } else {
        pos_ = at;
        fail("unknown function '" + std::string(name) + "'");
      }
      if (!accept('(')) fail("expected '(' after function name");
      int arg = parse_expr();
      if (!accept(')')) fail("expected ')'");
      ExprNode n;
      n.op = op;
      n.lhs = arg;
      n.offset = at;
      return push(n);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  int parse_number() {
    std::size_t start = pos_;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v,
                                     std::chars_format::general);
    if (ec != std::errc() || ptr == src_.data() + start) fail("malformed number");
    pos_ = static_cast<std::size_t>(ptr - src_.data());
    ExprNode n;
    n.op = Op::constant;
    n.value = v;
    n.offset = start;
    return push(n);
  }

  std::string_view src_;
  int dim_;
  std::size_t pos_ = 0;
  std::vector<ExprNode> nodes_;
};

template <typename T>
T ipow(T base, int e) {
  T result(1.0);
  while (e > 0) {
    if (e & 1) result = result * base;
    e >>= 1;
    if (e > 0) base = base * base;
  }
  return result;
}

}  // namespace detail

inline Expression parse_expression(std::string_view src, int dim) {
  if (dim <= 0) throw ConfigError("expression dimension must be positive");
  detail::Parser p(src, dim);
  Expression e;
  e.dim_ = dim;
  e.nodes_ = std::make_shared<const std::vector<ExprNode>>(p.run());
  e.source_ = std::make_shared<const std::string>(src);
  return e;
}

inline Expression constant_expression(double value, int dim) {
  Expression e;
  e.dim_ = dim;
  ExprNode n;
  n.op = Op::constant;
  n.value = value;
  e.nodes_ = std::make_shared<const std::vector<ExprNode>>(std::vector<ExprNode>{n});
  e.source_ = std::make_shared<const std::string>(e.print());
  return e;
}

template <typename T>
T Expression::eval(std::span<const T> x) const {
  using std::cos;
  using std::exp;
  using std::sin;
  using std::sqrt;
  const auto& ns = *nodes_;
  std::vector<T> val(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const ExprNode& n = ns[i];
    switch (n.op) {
      case Op::constant:
        val[i] = T(n.value);
        break;
      case Op::variable:
        val[i] = x[static_cast<std::size_t>(n.index)];
        break;
      case Op::neg:
        val[i] = -val[n.lhs];
        break;
      case Op::sin:
        val[i] = sin(val[n.lhs]);
        break;
      case Op::cos:
        val[i] = cos(val[n.lhs]);
        break;
      case Op::exp:
        val[i] = exp(val[n.lhs]);
        break;
      case Op::sqrt: {
        double a = primal(val[n.lhs]);
        if (a < 0.0) throw DomainError("sqrt of negative value", n.offset);
        if constexpr (!std::is_same_v<T, double>) {
          if (a == 0.0) throw DomainError("sqrt not differentiable at 0", n.offset);
        }
        val[i] = sqrt(val[n.lhs]);
        break;
      }
      case Op::add:
        val[i] = val[n.lhs] + val[n.rhs];
        break;
      case Op::sub:
        val[i] = val[n.lhs] - val[n.rhs];
        break;
      case Op::mul:
        val[i] = val[n.lhs] * val[n.rhs];
        break;
      case Op::div:
        if (primal(val[n.rhs]) == 0.0) throw DomainError("division by zero", n.offset);
        val[i] = val[n.lhs] / val[n.rhs];
        break;
      case Op::pow:
        val[i] = detail::ipow(val[n.lhs], n.exponent);
        break;
    }
  }
  return val.back();
}

inline Eigen::VectorXd Expression::gradient(const Eigen::VectorXd& x) const {
  check_dim(x.size());
  using D = Dual<double>;
  std::vector<D> xs(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) xs[i] = D(x[i], 0.0);
  Eigen::VectorXd g(dim_);
  for (int i = 0; i < dim_; ++i) {
    xs[i].d = 1.0;
    g[i] = eval<D>(xs).d;
    xs[i].d = 0.0;
  }
  return g;
}

inline Eigen::MatrixXd Expression::hessian(const Eigen::VectorXd& x) const {
  check_dim(x.size());
  using D = Dual<double>;
  using DD = Dual<D>;
  std::vector<DD> xs(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) xs[i] = DD(D(x[i], 0.0), D(0.0, 0.0));
  Eigen::MatrixXd h(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    for (int j = i; j < dim_; ++j) {
      xs[i].d.v = 1.0;
      xs[j].v.d = 1.0;
      double hij = eval<DD>(xs).d.d;
      xs[i].d.v = 0.0;
      xs[j].v.d = 0.0;
      h(i, j) = hij;
      h(j, i) = hij;
    }
  }
  return h;
}

inline std::string Expression::print_node(int i) const {
  const ExprNode& n = (*nodes_)[static_cast<std::size_t>(i)];
  auto wrap = [](const std::string& s) { return "(" + s + ")"; };
  switch (n.op) {
    case Op::constant: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      return buf;
    }
    case Op::variable:
      return "x" + std::to_string(n.index + 1);
    case Op::neg:
      return wrap("-" + wrap(print_node(n.lhs)));
    case Op::sin:
      return "sin(" + print_node(n.lhs) + ")";
    case Op::cos:
      return "cos(" + print_node(n.lhs) + ")";
    case Op::sqrt:
      return "sqrt(" + print_node(n.lhs) + ")";
    case Op::exp:
      return "exp(" + print_node(n.lhs) + ")";
    case Op::add:
      return wrap(print_node(n.lhs) + "+" + print_node(n.rhs));
    case Op::sub:
      return wrap(print_node(n.lhs) + "-" + print_node(n.rhs));
    case Op::mul:
      return wrap(print_node(n.lhs) + "*" + print_node(n.rhs));
    case Op::div:
      return wrap(print_node(n.lhs) + "/" + print_node(n.rhs));
    case Op::pow:
      return wrap(print_node(n.lhs)) + "^" + std::to_string(n.exponent);
  }
  return {};
}

inline std::string Expression::print() const {
  if (empty()) return {};
  return print_node(static_cast<int>(nodes_->size()) - 1);
}

inline bool Expression::structurally_equal(const Expression& other) const {
  if (dim_ != other.dim_ || empty() != other.empty()) return false;
  if (empty()) return true;
  // Post-order layouts can differ for identical trees, so compare recursively.
  auto same = [&](auto&& self, int a, int b) -> bool {
    const ExprNode& x = (*nodes_)[static_cast<std::size_t>(a)];
    const ExprNode& y = (*other.nodes_)[static_cast<std::size_t>(b)];
    if (x.op != y.op) return false;
    switch (x.op) {
      case Op::constant:
        return x.value == y.value;
      case Op::variable:
        return x.index == y.index;
      case Op::pow:
        return x.exponent == y.exponent && self(self, x.lhs, y.lhs);
      case Op::neg:
      case Op::sin:
      case Op::cos:
      case Op::sqrt:
      case Op::exp:
        return self(self, x.lhs, y.lhs);
      default:
        return self(self, x.lhs, y.lhs) && self(self, x.rhs, y.rhs);
    }
  };
  return same(same, static_cast<int>(nodes_->size()) - 1,
              static_cast<int>(other.nodes_->size()) - 1);
}

}  // namespace monodromy
