#include "ensoc/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "ensoc/errors.hpp"

namespace ensoc {

class ExpressionParser {
 public:
  ExpressionParser(const std::string& src, const std::vector<std::string>& vars, Expression& out)
      : src_(src), vars_(vars), out_(out) {}

  void run() {
    out_.root_ = parse_expr();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("expression '" + src_ + "' at column " + std::to_string(pos_ + 1) + ": " +
                     what);
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int add(Expression::Node node) {
    out_.nodes_.push_back(std::move(node));
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  int binary(Op op, int lhs, int rhs) { return add({op, 0.0, -1, {lhs, rhs}}); }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      if (accept('+'))
        lhs = binary(Op::Add, lhs, parse_term());
      else if (accept('-'))
        lhs = binary(Op::Sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*'))
        lhs = binary(Op::Mul, lhs, parse_unary());
      else if (accept('/'))
        lhs = binary(Op::Div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  int parse_unary() {
    if (accept('-')) return add({Op::Neg, 0.0, -1, {parse_unary()}});
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    if (accept('^')) return binary(Op::Pow, base, parse_unary());
    return base;
  }

  int parse_primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (accept('(')) {
      const int inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  int parse_number() {
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return add({Op::Number, value, -1, {}});
  }

  int parse_name() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name = src_.substr(start, pos_ - start);
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      ++pos_;
      std::vector<int> args{parse_expr()};
      while (accept(',')) args.push_back(parse_expr());
      if (!accept(')')) fail("expected ')' after arguments of " + name);
      return call(name, std::move(args));
    }
    if (name == "pi") return add({Op::Number, std::numbers::pi, -1, {}});
    const auto it = std::find(vars_.begin(), vars_.end(), name);
    if (it == vars_.end()) fail("unknown variable '" + name + "'");
    return add({Op::Variable, 0.0, static_cast<int>(it - vars_.begin()), {}});
  }

  int call(const std::string& name, std::vector<int> args) {
    Op op;
    bool variadic = false;
    if (name == "exp")
      op = Op::Exp;
    else if (name == "sin")
      op = Op::Sin;
    else if (name == "cos")
      op = Op::Cos;
    else if (name == "abs")
      op = Op::Abs;
    else if (name == "min")
      op = Op::Min, variadic = true;
    else if (name == "max")
      op = Op::Max, variadic = true;
    else
      fail("unknown function '" + name + "'");
    if (!variadic && args.size() != 1) fail(name + " takes exactly one argument");
    if (variadic && args.size() < 2) fail(name + " takes at least two arguments");
    return add({op, 0.0, -1, std::move(args)});
  }

  const std::string& src_;
  const std::vector<std::string>& vars_;
  Expression& out_;
  std::size_t pos_ = 0;
};

Expression Expression::parse(const std::string& source, const std::vector<std::string>& variables) {
  Expression e;
  e.source_ = source;
  ExpressionParser(e.source_, variables, e).run();
  return e;
}

double Expression::eval(std::span<const double> values) const { return eval_node(root_, values); }

bool Expression::uses(int index) const {
  return std::any_of(nodes_.begin(), nodes_.end(), [&](const Node& n) {
    return n.op == Op::Variable && n.variable == index;
  });
}

double Expression::eval_node(int index, std::span<const double> values) const {
  const Node& n = nodes_[static_cast<std::size_t>(index)];
  auto arg = [&](std::size_t k) { return eval_node(n.children[k], values); };
  switch (n.op) {
    case Op::Number:
      return n.number;
    case Op::Variable:
      return values[static_cast<std::size_t>(n.variable)];
    case Op::Add:
      return arg(0) + arg(1);
    case Op::Sub:
      return arg(0) - arg(1);
    case Op::Mul:
      return arg(0) * arg(1);
    case Op::Div:
      return arg(0) / arg(1);
    case Op::Pow:
      return std::pow(arg(0), arg(1));
    case Op::Neg:
      return -arg(0);
    case Op::Exp:
      return std::exp(arg(0));
    case Op::Sin:
      return std::sin(arg(0));
    case Op::Cos:
      return std::cos(arg(0));
    case Op::Abs:
      return std::abs(arg(0));
    case Op::Min:
    case Op::Max: {
      double acc = arg(0);
      for (std::size_t k = 1; k < n.children.size(); ++k)
        acc = n.op == Op::Min ? std::min(acc, arg(k)) : std::max(acc, arg(k));
      return acc;
    }
  }
  return 0.0;
}

}  // namespace ensoc
