#include "cics/expression.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "cics/error.hpp"

namespace cics {

struct Expression::Node {
  enum class Op { number, variable, add, sub, mul, div, neg, pow, exp, sin, cos, sqrt };
  Op op = Op::number;
  double value = 0.0;  // number literal
  int index = 0;       // variable index or integer exponent
  std::string name;    // variable spelling, for printing
  std::shared_ptr<const Node> a, b;
};

namespace {

using Op = Expression::Node::Op;
using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr number(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->value = v;
  return n;
}

bool is_number(const NodePtr& n, double v) { return n->op == Op::number && n->value == v; }

NodePtr make(Op op, NodePtr a, NodePtr b = nullptr, int index = 0) {
  // Light constant folding keeps derivatives readable.
  if (op == Op::add) {
    if (is_number(a, 0.0)) return b;
    if (is_number(b, 0.0)) return a;
  } else if (op == Op::sub) {
    if (is_number(b, 0.0)) return a;
  } else if (op == Op::mul) {
    if (is_number(a, 0.0) || is_number(b, 0.0)) return number(0.0);
    if (is_number(a, 1.0)) return b;
    if (is_number(b, 1.0)) return a;
  } else if (op == Op::div) {
    if (is_number(a, 0.0)) return number(0.0);
    if (is_number(b, 1.0)) return a;
  } else if (op == Op::pow) {
    if (index == 0) return number(1.0);
    if (index == 1) return a;
  } else if (op == Op::neg && a->op == Op::number) {
    return number(-a->value);
  }
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->index = index;
  return n;
}

class Parser {
 public:
  Parser(std::string_view text, const Expression::Variables& vars, bool functions)
      : text_(text), vars_(vars), functions_(functions) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != text_.size()) error("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::config, "expression \"" + std::string(text_) + "\" at position " + std::to_string(pos_) + ": " +
                                what);
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Op::add, lhs, term());
      else if (accept('-')) lhs = make(Op::sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Op::mul, lhs, unary());
      else if (accept('/')) lhs = make(Op::div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (!accept('^')) return base;
    skip();
    bool negative = accept('-');
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) error("exponent must be an integer literal");
    const int k = std::stoi(std::string(text_.substr(start, pos_ - start)));
    if (k > 64) error("exponent too large");
    NodePtr p = make(Op::pow, base, nullptr, k);
    return negative ? make(Op::div, number(1.0), p) : p;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= text_.size()) error("unexpected end of input");
    const char c = text_[pos_];
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')')) error("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.data() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) error("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      const std::string name(text_.substr(start, pos_ - start));
      if (auto it = vars_.find(name); it != vars_.end()) {
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::variable;
        n->index = it->second;
        n->name = name;
        return n;
      }
      static const std::map<std::string, Op, std::less<>> funcs = {
          {"exp", Op::exp}, {"sin", Op::sin}, {"cos", Op::cos}, {"sqrt", Op::sqrt}};
      if (auto f = funcs.find(name); f != funcs.end()) {
        if (!functions_) error("function '" + name + "' is not allowed here");
        if (!accept('(')) error("expected '(' after " + name);
        NodePtr arg = expr();
        if (!accept(')')) error("expected ')'");
        return make(f->second, arg);
      }
      pos_ = start;
      error("unknown name '" + name + "'");
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  const Expression::Variables& vars_;
  bool functions_;
  std::size_t pos_ = 0;
};

double eval(const Expression::Node& n, const std::vector<double>& v) {
  switch (n.op) {
    case Op::number: return n.value;
    case Op::variable: return v.at(static_cast<std::size_t>(n.index));
    case Op::add: return eval(*n.a, v) + eval(*n.b, v);
    case Op::sub: return eval(*n.a, v) - eval(*n.b, v);
    case Op::mul: return eval(*n.a, v) * eval(*n.b, v);
    case Op::div: return eval(*n.a, v) / eval(*n.b, v);
    case Op::neg: return -eval(*n.a, v);
    case Op::pow: {
      const double base = eval(*n.a, v);
      double r = 1.0;
      for (int i = 0; i < n.index; ++i) r *= base;
      return r;
    }
    case Op::exp: return std::exp(eval(*n.a, v));
    case Op::sin: return std::sin(eval(*n.a, v));
    case Op::cos: return std::cos(eval(*n.a, v));
    case Op::sqrt: return std::sqrt(eval(*n.a, v));
  }
  return 0.0;
}

NodePtr diff(const NodePtr& n, int k) {
  switch (n->op) {
    case Op::number: return number(0.0);
    case Op::variable: return number(n->index == k ? 1.0 : 0.0);
    case Op::add: return make(Op::add, diff(n->a, k), diff(n->b, k));
    case Op::sub: return make(Op::sub, diff(n->a, k), diff(n->b, k));
    case Op::mul:
      return make(Op::add, make(Op::mul, diff(n->a, k), n->b), make(Op::mul, n->a, diff(n->b, k)));
    case Op::div:
      return make(Op::div,
                  make(Op::sub, make(Op::mul, diff(n->a, k), n->b), make(Op::mul, n->a, diff(n->b, k))),
                  make(Op::pow, n->b, nullptr, 2));
    case Op::neg: return make(Op::neg, diff(n->a, k));
    case Op::pow:
      return make(Op::mul, make(Op::mul, number(n->index), make(Op::pow, n->a, nullptr, n->index - 1)),
                  diff(n->a, k));
    case Op::exp: return make(Op::mul, n, diff(n->a, k));
    case Op::sin: return make(Op::mul, make(Op::cos, n->a), diff(n->a, k));
    case Op::cos: return make(Op::neg, make(Op::mul, make(Op::sin, n->a), diff(n->a, k)));
    case Op::sqrt: return make(Op::div, diff(n->a, k), make(Op::mul, number(2.0), n));
  }
  return number(0.0);
}

void print(const Expression::Node& n, std::ostream& os) {
  switch (n.op) {
    case Op::number: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << n.value;
      if (n.value < 0) os << '(' << tmp.str() << ')';
      else os << tmp.str();
      return;
    }
    case Op::variable: os << n.name; return;
    case Op::neg: os << "(-"; print(*n.a, os); os << ')'; return;
    case Op::pow: os << '('; print(*n.a, os); os << ")^" << n.index; return;
    case Op::exp: case Op::sin: case Op::cos: case Op::sqrt: {
      static const char* names[] = {"exp", "sin", "cos", "sqrt"};
      os << names[static_cast<int>(n.op) - static_cast<int>(Op::exp)] << '(';
      print(*n.a, os);
      os << ')';
      return;
    }
    default: {
      const char sym = n.op == Op::add ? '+' : n.op == Op::sub ? '-' : n.op == Op::mul ? '*' : '/';
      os << '(';
      print(*n.a, os);
      os << ' ' << sym << ' ';
      print(*n.b, os);
      os << ')';
    }
  }
}

bool uses(const Expression::Node& n, int k) {
  if (n.op == Op::variable) return n.index == k;
  return (n.a && uses(*n.a, k)) || (n.b && uses(*n.b, k));
}

}  // namespace

Expression Expression::parse(std::string_view text, const Variables& variables, bool allow_functions) {
  return Expression(Parser(text, variables, allow_functions).parse());
}

Expression Expression::constant(double value) { return Expression(number(value)); }

double Expression::evaluate(const std::vector<double>& values) const { return eval(*root_, values); }

Expression Expression::derivative(int index) const { return Expression(diff(root_, index)); }

std::string Expression::to_string() const {
  std::ostringstream os;
  print(*root_, os);
  return os.str();
}

bool Expression::uses_variable(int index) const { return uses(*root_, index); }

}  // namespace cics
