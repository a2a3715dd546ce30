#pragma once

/// Scalar expression DSL: parser, evaluator, exact symbolic differentiation,
/// and a compiled fast path for repeated numeric evaluation.
///
/// Grammar (whitespace insignificant, numbers are decimals with optional
/// exponent):
///
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := '-' unary | power
///   power  := atom ('^' unary)?
///   atom   := number | identifier | identifier '(' expr ')' | '(' expr ')'
///
/// Precedence: pow > unary minus > mul/div > add/sub; '^' is
/// right-associative (2^3^2 = 512) and admits a unary-minus exponent (2^-3).
/// Recognised functions: exp, ln, sqrt, sin, cos, tan, sinh, cosh, abs.
///
/// Trees are immutable and shared; construction applies constant folding of
/// literal-only subtrees plus the neutral-element folds (+0, *1, ^1, neg neg,
/// *0 -> 0 assuming finite operands).  No further simplification is
/// performed; derivative correctness is established numerically by the test
/// suite, not structurally.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hjgeo {

/// Syntax error with the 1-based byte offset of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : std::runtime_error(message + " (offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation failure (unbound variable or real-domain violation), carrying
/// the printed form of the offending node.
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& message, std::string node)
      : std::runtime_error(message + " in '" + node + "'"),
        node_(std::move(node)) {}
  const std::string& node() const { return node_; }

 private:
  std::string node_;
};

using Bindings = std::map<std::string, double, std::less<>>;

class Expr {
 public:
  enum class Kind { constant, variable, unary, binary };
  enum class UnaryOp { neg, exp, ln, sqrt, sin, cos, tan, sinh, cosh, abs };
  enum class BinaryOp { add, sub, mul, div, pow };

  struct Node {
    Kind kind;
    double value = 0.0;        // constant
    std::string name;          // variable
    UnaryOp uop = UnaryOp::neg;
    BinaryOp bop = BinaryOp::add;
    std::shared_ptr<const Node> lhs, rhs;  // unary uses lhs only
  };

  Expr() : node_(constant_node(0.0)) {}

  static Expr constant(double v) { return Expr(constant_node(v)); }

  static Expr variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::variable;
    n->name = std::move(name);
    return Expr(std::move(n));
  }

  static Expr parse(std::string_view source);

  static Expr unary(UnaryOp op, const Expr& operand);
  static Expr binary(BinaryOp op, const Expr& lhs, const Expr& rhs);

  friend Expr operator+(const Expr& a, const Expr& b) {
    return binary(BinaryOp::add, a, b);
  }
  friend Expr operator-(const Expr& a, const Expr& b) {
    return binary(BinaryOp::sub, a, b);
  }
  friend Expr operator*(const Expr& a, const Expr& b) {
    return binary(BinaryOp::mul, a, b);
  }
  friend Expr operator/(const Expr& a, const Expr& b) {
    return binary(BinaryOp::div, a, b);
  }
  friend Expr operator-(const Expr& a) { return unary(UnaryOp::neg, a); }
  static Expr pow(const Expr& base, const Expr& exponent) {
    return binary(BinaryOp::pow, base, exponent);
  }

  Kind kind() const { return node_->kind; }
  bool is_constant() const { return node_->kind == Kind::constant; }
  double constant_value() const { return node_->value; }

  /// Evaluates with every variable bound; throws EvalError otherwise.
  double eval(const Bindings& bindings) const { return eval_node(*node_, bindings); }

  /// Exact symbolic partial derivative with respect to `var`.
  Expr diff(std::string_view var) const { return diff_node(*node_, var); }

  /// Minimal-parenthesis rendering; parse(str()) is structurally identical.
  std::string str() const {
    std::string out;
    print_node(*node_, 0, out);
    return out;
  }

  /// Replaces named variables by numeric constants (folding cascades).
  Expr substitute(const Bindings& values) const {
    return substitute_node(*node_, values);
  }

  /// Sorted list of distinct variable names appearing in the tree.
  std::vector<std::string> variables() const {
    std::set<std::string> names;
    collect_variables(*node_, names);
    return {names.begin(), names.end()};
  }

  friend bool same_structure(const Expr& a, const Expr& b) {
    return same_node(*a.node_, *b.node_);
  }

  const std::shared_ptr<const Node>& node() const { return node_; }

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static std::shared_ptr<const Node> constant_node(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::constant;
    n->value = v;
    return n;
  }

  static std::optional<double> try_unary(UnaryOp op, double v);
  static std::optional<double> try_binary(BinaryOp op, double a, double b);

  static double eval_node(const Node& n, const Bindings& bindings);
  static Expr diff_node(const Node& n, std::string_view var);
  static void print_node(const Node& n, int parent_level, std::string& out);
  static Expr substitute_node(const Node& n, const Bindings& values);
  static void collect_variables(const Node& n, std::set<std::string>& names);
  static bool same_node(const Node& a, const Node& b);
  static int precedence(const Node& n);
  static std::string node_text(const Node& n) {
    std::string out;
    print_node(n, 0, out);
    return out;
  }

  std::shared_ptr<const Node> node_;

  friend class CompiledExpr;
};

inline const char* unary_name(Expr::UnaryOp op) {
  switch (op) {
    case Expr::UnaryOp::neg: return "neg";
    case Expr::UnaryOp::exp: return "exp";
    case Expr::UnaryOp::ln: return "ln";
    case Expr::UnaryOp::sqrt: return "sqrt";
    case Expr::UnaryOp::sin: return "sin";
    case Expr::UnaryOp::cos: return "cos";
    case Expr::UnaryOp::tan: return "tan";
    case Expr::UnaryOp::sinh: return "sinh";
    case Expr::UnaryOp::cosh: return "cosh";
    case Expr::UnaryOp::abs: return "abs";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Construction and folding

inline std::optional<double> Expr::try_unary(UnaryOp op, double v) {
  double r;
  switch (op) {
    case UnaryOp::neg: r = -v; break;
    case UnaryOp::exp: r = std::exp(v); break;
    case UnaryOp::ln:
      if (v <= 0.0) return std::nullopt;
      r = std::log(v);
      break;
    case UnaryOp::sqrt:
      if (v < 0.0) return std::nullopt;
      r = std::sqrt(v);
      break;
    case UnaryOp::sin: r = std::sin(v); break;
    case UnaryOp::cos: r = std::cos(v); break;
    case UnaryOp::tan: r = std::tan(v); break;
    case UnaryOp::sinh: r = std::sinh(v); break;
    case UnaryOp::cosh: r = std::cosh(v); break;
    case UnaryOp::abs: r = std::fabs(v); break;
    default: return std::nullopt;
  }
  if (!std::isfinite(r)) return std::nullopt;
  return r;
}

inline std::optional<double> Expr::try_binary(BinaryOp op, double a, double b) {
  double r;
  switch (op) {
    case BinaryOp::add: r = a + b; break;
    case BinaryOp::sub: r = a - b; break;
    case BinaryOp::mul: r = a * b; break;
    case BinaryOp::div: r = a / b; break;
    case BinaryOp::pow:
      if (a < 0.0 && b != std::floor(b)) return std::nullopt;
      r = std::pow(a, b);
      break;
    default: return std::nullopt;
  }
  if (!std::isfinite(r)) return std::nullopt;
  return r;
}

inline Expr Expr::unary(UnaryOp op, const Expr& operand) {
  if (operand.is_constant()) {
    if (auto folded = try_unary(op, operand.constant_value())) {
      return constant(*folded);
    }
  }
  if (op == UnaryOp::neg && operand.node_->kind == Kind::unary &&
      operand.node_->uop == UnaryOp::neg) {
    return Expr(operand.node_->lhs);
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::unary;
  n->uop = op;
  n->lhs = operand.node_;
  return Expr(std::move(n));
}

inline Expr Expr::binary(BinaryOp op, const Expr& lhs, const Expr& rhs) {
  if (lhs.is_constant() && rhs.is_constant()) {
    if (auto folded =
            try_binary(op, lhs.constant_value(), rhs.constant_value())) {
      return constant(*folded);
    }
  }
  // Neutral/absorbing elements; keeps derivative trees compact.  The *0 fold
  // assumes finite operands (all model data is real-analytic where evaluated).
  const bool lhs_zero = lhs.is_constant() && lhs.constant_value() == 0.0;
  const bool rhs_zero = rhs.is_constant() && rhs.constant_value() == 0.0;
  const bool lhs_one = lhs.is_constant() && lhs.constant_value() == 1.0;
  const bool rhs_one = rhs.is_constant() && rhs.constant_value() == 1.0;
  switch (op) {
    case BinaryOp::add:
      if (lhs_zero) return rhs;
      if (rhs_zero) return lhs;
      break;
    case BinaryOp::sub:
      if (rhs_zero) return lhs;
      if (lhs_zero) return unary(UnaryOp::neg, rhs);
      break;
    case BinaryOp::mul:
      if (lhs_zero || rhs_zero) return constant(0.0);
      if (lhs_one) return rhs;
      if (rhs_one) return lhs;
      break;
    case BinaryOp::div:
      if (lhs_zero && !rhs_zero) return constant(0.0);
      if (rhs_one) return lhs;
      break;
    case BinaryOp::pow:
      if (rhs_one) return lhs;
      if (rhs_zero) return constant(1.0);
      break;
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::binary;
  n->bop = op;
  n->lhs = lhs.node_;
  n->rhs = rhs.node_;
  return Expr(std::move(n));
}

// ---------------------------------------------------------------------------
// Evaluation

inline double Expr::eval_node(const Node& n, const Bindings& bindings) {
  switch (n.kind) {
    case Kind::constant:
      return n.value;
    case Kind::variable: {
      auto it = bindings.find(n.name);
      if (it == bindings.end()) {
        throw EvalError("unbound variable '" + n.name + "'", node_text(n));
      }
      return it->second;
    }
    case Kind::unary: {
      const double v = eval_node(*n.lhs, bindings);
      switch (n.uop) {
        case UnaryOp::neg: return -v;
        case UnaryOp::exp: return std::exp(v);
        case UnaryOp::ln:
          if (v <= 0.0) throw EvalError("ln of non-positive value", node_text(n));
          return std::log(v);
        case UnaryOp::sqrt:
          if (v < 0.0) throw EvalError("sqrt of negative value", node_text(n));
          return std::sqrt(v);
        case UnaryOp::sin: return std::sin(v);
        case UnaryOp::cos: return std::cos(v);
        case UnaryOp::tan: return std::tan(v);
        case UnaryOp::sinh: return std::sinh(v);
        case UnaryOp::cosh: return std::cosh(v);
        case UnaryOp::abs: return std::fabs(v);
      }
      break;
    }
    case Kind::binary: {
      const double a = eval_node(*n.lhs, bindings);
      const double b = eval_node(*n.rhs, bindings);
      switch (n.bop) {
        case BinaryOp::add: return a + b;
        case BinaryOp::sub: return a - b;
        case BinaryOp::mul: return a * b;
        case BinaryOp::div: return a / b;
        case BinaryOp::pow:
          if (a < 0.0 && b != std::floor(b)) {
            throw EvalError("pow of negative base with non-integer exponent",
                            node_text(n));
          }
          return std::pow(a, b);
      }
      break;
    }
  }
  throw EvalError("malformed expression node", node_text(n));
}

// ---------------------------------------------------------------------------
// Differentiation

inline Expr Expr::diff_node(const Node& n, std::string_view var) {
  switch (n.kind) {
    case Kind::constant:
      return constant(0.0);
    case Kind::variable:
      return constant(n.name == var ? 1.0 : 0.0);
    case Kind::unary: {
      const Expr u(n.lhs);
      const Expr du = diff_node(*n.lhs, var);
      switch (n.uop) {
        case UnaryOp::neg: return -du;
        case UnaryOp::exp: return du * unary(UnaryOp::exp, u);
        case UnaryOp::ln: return du / u;
        case UnaryOp::sqrt:
          return du / (constant(2.0) * unary(UnaryOp::sqrt, u));
        case UnaryOp::sin: return du * unary(UnaryOp::cos, u);
        case UnaryOp::cos: return -(du * unary(UnaryOp::sin, u));
        case UnaryOp::tan:
          return du / pow(unary(UnaryOp::cos, u), constant(2.0));
        case UnaryOp::sinh: return du * unary(UnaryOp::cosh, u);
        case UnaryOp::cosh: return du * unary(UnaryOp::sinh, u);
        case UnaryOp::abs:
          // d|u|/du = u/|u| almost everywhere; the kink at u=0 is accepted.
          return du * (u / unary(UnaryOp::abs, u));
      }
      break;
    }
    case Kind::binary: {
      const Expr u(n.lhs);
      const Expr v(n.rhs);
      const Expr du = diff_node(*n.lhs, var);
      const Expr dv = diff_node(*n.rhs, var);
      switch (n.bop) {
        case BinaryOp::add: return du + dv;
        case BinaryOp::sub: return du - dv;
        case BinaryOp::mul: return du * v + u * dv;
        case BinaryOp::div: return (du * v - u * dv) / pow(v, constant(2.0));
        case BinaryOp::pow:
          if (v.is_constant()) {
            const double c = v.constant_value();
            return v * pow(u, constant(c - 1.0)) * du;
          }
          if (u.is_constant()) {
            return pow(u, v) * unary(UnaryOp::ln, u) * dv;
          }
          return pow(u, v) * (dv * unary(UnaryOp::ln, u) + v * du / u);
      }
      break;
    }
  }
  return constant(0.0);
}

// ---------------------------------------------------------------------------
// Printing

inline int Expr::precedence(const Node& n) {
  switch (n.kind) {
    case Kind::constant:
      return n.value < 0.0 ? 3 : 5;  // negative literal prints with a '-'
    case Kind::variable:
      return 5;
    case Kind::unary:
      return n.uop == UnaryOp::neg ? 3 : 5;  // named functions self-delimit
    case Kind::binary:
      switch (n.bop) {
        case BinaryOp::add:
        case BinaryOp::sub: return 1;
        case BinaryOp::mul:
        case BinaryOp::div: return 2;
        case BinaryOp::pow: return 4;
      }
  }
  return 5;
}

inline void Expr::print_node(const Node& n, int min_level, std::string& out) {
  const int level = precedence(n);
  const bool needs_parens = level < min_level;
  if (needs_parens) out += '(';
  switch (n.kind) {
    case Kind::constant: {
      char buffer[32];
      // Shortest decimal form that round-trips the exact double.
      for (int digits = 15; digits <= 17; ++digits) {
        std::snprintf(buffer, sizeof(buffer), "%.*g", digits, n.value);
        if (std::strtod(buffer, nullptr) == n.value) break;
      }
      out += buffer;
      break;
    }
    case Kind::variable:
      out += n.name;
      break;
    case Kind::unary:
      if (n.uop == UnaryOp::neg) {
        out += '-';
        print_node(*n.lhs, 3, out);
      } else {
        out += unary_name(n.uop);
        out += '(';
        print_node(*n.lhs, 0, out);
        out += ')';
      }
      break;
    case Kind::binary: {
      const char* symbol = "";
      // Left-associative operators parenthesise an equal-precedence right
      // child so that structurally right-nested trees re-read identically.
      int lhs_min = level, rhs_min = level + 1;
      switch (n.bop) {
        case BinaryOp::add: symbol = " + "; break;
        case BinaryOp::sub: symbol = " - "; break;
        case BinaryOp::mul: symbol = "*"; break;
        case BinaryOp::div: symbol = "/"; break;
        case BinaryOp::pow:
          symbol = "^";
          lhs_min = 5;   // '^' binds an atom on the left
          rhs_min = 3;   // unary minus is legal in the exponent
          break;
      }
      print_node(*n.lhs, lhs_min, out);
      out += symbol;
      print_node(*n.rhs, rhs_min, out);
      break;
    }
  }
  if (needs_parens) out += ')';
}

// ---------------------------------------------------------------------------
// Substitution / traversal

inline Expr Expr::substitute_node(const Node& n, const Bindings& values) {
  switch (n.kind) {
    case Kind::constant:
      return constant(n.value);
    case Kind::variable: {
      auto it = values.find(n.name);
      if (it != values.end()) return constant(it->second);
      return variable(n.name);
    }
    case Kind::unary:
      return unary(n.uop, substitute_node(*n.lhs, values));
    case Kind::binary:
      return binary(n.bop, substitute_node(*n.lhs, values),
                    substitute_node(*n.rhs, values));
  }
  return constant(0.0);
}

inline void Expr::collect_variables(const Node& n, std::set<std::string>& names) {
  switch (n.kind) {
    case Kind::variable:
      names.insert(n.name);
      break;
    case Kind::unary:
      collect_variables(*n.lhs, names);
      break;
    case Kind::binary:
      collect_variables(*n.lhs, names);
      collect_variables(*n.rhs, names);
      break;
    default:
      break;
  }
}

inline bool Expr::same_node(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Kind::constant:
      return a.value == b.value;
    case Kind::variable:
      return a.name == b.name;
    case Kind::unary:
      return a.uop == b.uop && same_node(*a.lhs, *b.lhs);
    case Kind::binary:
      return a.bop == b.bop && same_node(*a.lhs, *b.lhs) &&
             same_node(*a.rhs, *b.rhs);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Parser

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string_view source) : source_(source) {}

  Expr run() {
    skip_whitespace();
    if (at_end()) throw ParseError("empty expression", 1);
    Expr result = parse_expr();
    skip_whitespace();
    if (!at_end()) {
      throw ParseError(std::string("unexpected character '") + source_[pos_] +
                           "'",
                       pos_ + 1);
    }
    return result;
  }

 private:
  bool at_end() const { return pos_ >= source_.size(); }
  char peek() const { return source_[pos_]; }

  void skip_whitespace() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\n' ||
                         peek() == '\r')) {
      ++pos_;
    }
  }

  bool consume(char c) {
    skip_whitespace();
    if (!at_end() && peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      if (consume('+')) {
        lhs = Expr::binary(Expr::BinaryOp::add, lhs, parse_term());
      } else if (consume('-')) {
        lhs = Expr::binary(Expr::BinaryOp::sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    for (;;) {
      if (consume('*')) {
        lhs = Expr::binary(Expr::BinaryOp::mul, lhs, parse_unary());
      } else if (consume('/')) {
        lhs = Expr::binary(Expr::BinaryOp::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (consume('-')) return Expr::unary(Expr::UnaryOp::neg, parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (consume('^')) {
      return Expr::binary(Expr::BinaryOp::pow, base, parse_unary());
    }
    return base;
  }

  Expr parse_atom() {
    skip_whitespace();
    if (at_end()) throw ParseError("unexpected end of input", pos_ + 1);
    const char c = peek();
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (is_identifier_start(c)) return parse_identifier();
    if (c == '(') {
      const std::size_t open = pos_ + 1;
      ++pos_;
      Expr inner = parse_expr();
      if (!consume(')')) {
        throw ParseError("unbalanced parenthesis opened", open);
      }
      return inner;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_ + 1);
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    while (!at_end() && peek() >= '0' && peek() <= '9') ++pos_;
    if (!at_end() && peek() == '.') {
      ++pos_;
      while (!at_end() && peek() >= '0' && peek() <= '9') ++pos_;
    }
    if (pos_ == start ||
        (pos_ == start + 1 && source_[start] == '.')) {
      throw ParseError("malformed number", start + 1);
    }
    if (!at_end() && (peek() == 'e' || peek() == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (!at_end() && (peek() == '+' || peek() == '-')) ++pos_;
      if (at_end() || peek() < '0' || peek() > '9') {
        pos_ = mark;  // 'e' belongs to a following identifier, not ours
      } else {
        while (!at_end() && peek() >= '0' && peek() <= '9') ++pos_;
      }
    }
    const std::string text(source_.substr(start, pos_ - start));
    return Expr::constant(std::strtod(text.c_str(), nullptr));
  }

  static bool is_identifier_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_identifier_char(char c) {
    return is_identifier_start(c) || (c >= '0' && c <= '9');
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (!at_end() && is_identifier_char(peek())) ++pos_;
    const std::string name(source_.substr(start, pos_ - start));
    skip_whitespace();
    if (!at_end() && peek() == '(') {
      ++pos_;
      Expr argument = parse_expr();
      if (!consume(')')) {
        throw ParseError("unbalanced parenthesis in call to '" + name + "'",
                         start + 1);
      }
      return make_call(name, argument, start + 1);
    }
    return Expr::variable(name);
  }

  static Expr make_call(const std::string& name, const Expr& argument,
                        std::size_t offset) {
    using U = Expr::UnaryOp;
    static const std::pair<const char*, U> table[] = {
        {"exp", U::exp},   {"ln", U::ln},     {"sqrt", U::sqrt},
        {"sin", U::sin},   {"cos", U::cos},   {"tan", U::tan},
        {"sinh", U::sinh}, {"cosh", U::cosh}, {"abs", U::abs},
        {"neg", U::neg}};
    for (const auto& [fname, op] : table) {
      if (name == fname) return Expr::unary(op, argument);
    }
    throw ParseError("unknown function '" + name + "'", offset);
  }

  std::string_view source_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr Expr::parse(std::string_view source) {
  return detail::ExprParser(source).run();
}

// ---------------------------------------------------------------------------
// Compiled evaluation

/// Flattens an Expr into a postfix program over a fixed variable slot layout;
/// `eval` is allocation-free and thread-safe (hot loops: frame fields along
/// geodesics, quadrature integrands).
class CompiledExpr {
 public:
  CompiledExpr() = default;

  CompiledExpr(const Expr& expression, std::span<const std::string> variables) {
    compile(*expression.node(), variables);
    stack_need_ = stack_depth(*expression.node());
  }

  double eval(std::span<const double> values) const {
    double local[kLocalStack];
    std::vector<double> heap;
    double* stack = local;
    if (stack_need_ > kLocalStack) {
      heap.resize(static_cast<std::size_t>(stack_need_));
      stack = heap.data();
    }
    int top = -1;
    for (const Instr& instr : code_) {
      switch (instr.op) {
        case Op::push_const:
          stack[++top] = instr.value;
          break;
        case Op::push_var:
          stack[++top] = values[static_cast<std::size_t>(instr.slot)];
          break;
        case Op::neg: stack[top] = -stack[top]; break;
        case Op::exp: stack[top] = std::exp(stack[top]); break;
        case Op::ln:
          if (stack[top] <= 0.0) {
            throw EvalError("ln of non-positive value", "compiled expression");
          }
          stack[top] = std::log(stack[top]);
          break;
        case Op::sqrt:
          if (stack[top] < 0.0) {
            throw EvalError("sqrt of negative value", "compiled expression");
          }
          stack[top] = std::sqrt(stack[top]);
          break;
        case Op::sin: stack[top] = std::sin(stack[top]); break;
        case Op::cos: stack[top] = std::cos(stack[top]); break;
        case Op::tan: stack[top] = std::tan(stack[top]); break;
        case Op::sinh: stack[top] = std::sinh(stack[top]); break;
        case Op::cosh: stack[top] = std::cosh(stack[top]); break;
        case Op::abs: stack[top] = std::fabs(stack[top]); break;
        case Op::add: --top; stack[top] += stack[top + 1]; break;
        case Op::sub: --top; stack[top] -= stack[top + 1]; break;
        case Op::mul: --top; stack[top] *= stack[top + 1]; break;
        case Op::div: --top; stack[top] /= stack[top + 1]; break;
        case Op::pow:
          --top;
          if (stack[top] < 0.0 && stack[top + 1] != std::floor(stack[top + 1])) {
            throw EvalError("pow of negative base with non-integer exponent",
                            "compiled expression");
          }
          stack[top] = std::pow(stack[top], stack[top + 1]);
          break;
      }
    }
    return stack[0];
  }

 private:
  enum class Op {
    push_const, push_var,
    neg, exp, ln, sqrt, sin, cos, tan, sinh, cosh, abs,
    add, sub, mul, div, pow
  };

  struct Instr {
    Op op;
    int slot = 0;
    double value = 0.0;
  };

  static constexpr int kLocalStack = 64;

  void compile(const Expr::Node& n, std::span<const std::string> variables) {
    switch (n.kind) {
      case Expr::Kind::constant:
        code_.push_back({Op::push_const, 0, n.value});
        return;
      case Expr::Kind::variable: {
        for (std::size_t i = 0; i < variables.size(); ++i) {
          if (variables[i] == n.name) {
            code_.push_back({Op::push_var, static_cast<int>(i), 0.0});
            return;
          }
        }
        throw EvalError("unbound variable '" + n.name + "'", n.name);
      }
      case Expr::Kind::unary:
        compile(*n.lhs, variables);
        switch (n.uop) {
          case Expr::UnaryOp::neg: code_.push_back({Op::neg}); break;
          case Expr::UnaryOp::exp: code_.push_back({Op::exp}); break;
          case Expr::UnaryOp::ln: code_.push_back({Op::ln}); break;
          case Expr::UnaryOp::sqrt: code_.push_back({Op::sqrt}); break;
          case Expr::UnaryOp::sin: code_.push_back({Op::sin}); break;
          case Expr::UnaryOp::cos: code_.push_back({Op::cos}); break;
          case Expr::UnaryOp::tan: code_.push_back({Op::tan}); break;
          case Expr::UnaryOp::sinh: code_.push_back({Op::sinh}); break;
          case Expr::UnaryOp::cosh: code_.push_back({Op::cosh}); break;
          case Expr::UnaryOp::abs: code_.push_back({Op::abs}); break;
        }
        return;
      case Expr::Kind::binary:
        compile(*n.lhs, variables);
        compile(*n.rhs, variables);
        switch (n.bop) {
          case Expr::BinaryOp::add: code_.push_back({Op::add}); break;
          case Expr::BinaryOp::sub: code_.push_back({Op::sub}); break;
          case Expr::BinaryOp::mul: code_.push_back({Op::mul}); break;
          case Expr::BinaryOp::div: code_.push_back({Op::div}); break;
          case Expr::BinaryOp::pow: code_.push_back({Op::pow}); break;
        }
        return;
    }
  }

  static int stack_depth(const Expr::Node& n) {
    switch (n.kind) {
      case Expr::Kind::constant:
      case Expr::Kind::variable:
        return 1;
      case Expr::Kind::unary:
        return stack_depth(*n.lhs);
      case Expr::Kind::binary:
        return std::max(stack_depth(*n.lhs), 1 + stack_depth(*n.rhs));
    }
    return 1;
  }

  std::vector<Instr> code_;
  int stack_need_ = 0;
};

}  // namespace hjgeo
