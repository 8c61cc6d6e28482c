#include "conslaw/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <numbers>

#include "conslaw/error.hpp"

namespace conslaw {

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

int arity(const std::string& name) {
  if (name == "sin" || name == "cos" || name == "exp" || name == "abs" || name == "sqrt") return 1;
  if (name == "min" || name == "max") return 2;
  return -1;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  NodePtr parse() {
    NodePtr e = ternary();
    skip();
    if (pos_ < s_.size()) fail(pos_, "unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& what) const {
    throw ConfigError("syntax error at position " + std::to_string(at + 1) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip();
    if (pos_ >= s_.size()) fail(pos_, std::string("expected '") + c + "' before end of input");
    if (s_[pos_] != c) fail(pos_, std::string("expected '") + c + "', found '" + s_[pos_] + "'");
    ++pos_;
  }

  NodePtr ternary() {
    NodePtr cond = compare();
    if (!accept("?")) return cond;
    NodePtr a = ternary();
    expect(':');
    NodePtr b = ternary();
    return make({ExprNode::Kind::Ternary, 0.0, 0, "", {cond, a, b}});
  }

  NodePtr compare() {
    NodePtr lhs = additive();
    for (;;) {
      std::string op;
      for (std::string_view cand : {"<=", ">=", "==", "!=", "<", ">"})
        if (accept(cand)) {
          op = cand;
          break;
        }
      if (op.empty()) return lhs;
      lhs = make({ExprNode::Kind::Binary, 0.0, 0, op, {lhs, additive()}});
    }
  }

  NodePtr additive() {
    NodePtr lhs = term();
    for (;;) {
      if (accept("+")) {
        lhs = make({ExprNode::Kind::Binary, 0.0, 0, "+", {lhs, term()}});
      } else if (accept("-")) {
        lhs = make({ExprNode::Kind::Binary, 0.0, 0, "-", {lhs, term()}});
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept("*")) {
        lhs = make({ExprNode::Kind::Binary, 0.0, 0, "*", {lhs, unary()}});
      } else if (accept("/")) {
        lhs = make({ExprNode::Kind::Binary, 0.0, 0, "/", {lhs, unary()}});
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept("-")) return make({ExprNode::Kind::Neg, 0.0, 0, "", {unary()}});
    if (accept("+")) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept("^")) return make({ExprNode::Kind::Binary, 0.0, 0, "^", {base, unary()}});
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail(pos_, "unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = ternary();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (is_ident_start(c)) return name();
    fail(pos_, "unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
      ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const auto r = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (r.ec != std::errc() || r.ptr != s_.data() + pos_ || !std::isfinite(v))
      fail(start, "bad number '" + std::string(s_.substr(start, pos_ - start)) + "'");
    return make({ExprNode::Kind::Number, v, 0, "", {}});
  }

  NodePtr name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
    const std::string id(s_.substr(start, pos_ - start));
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      const int n = arity(id);
      if (n < 0) fail(start, "unknown function '" + id + "'");
      ++pos_;
      std::vector<NodePtr> args;
      skip();
      if (pos_ < s_.size() && s_[pos_] == ')') {
        ++pos_;
      } else {
        args.push_back(ternary());
        while (accept(",")) args.push_back(ternary());
        expect(')');
      }
      if (static_cast<int>(args.size()) != n)
        fail(start, "function '" + id + "' takes " + std::to_string(n) + " argument" +
                        (n == 1 ? "" : "s") + ", got " + std::to_string(args.size()));
      return make({ExprNode::Kind::Call, 0.0, 0, id, std::move(args)});
    }
    if (id == "x" || id == "y" || id == "z")
      return make({ExprNode::Kind::Coord, 0.0, id[0] - 'x', "", {}});
    if (id == "pi") return make({ExprNode::Kind::Pi, 0.0, 0, "", {}});
    if (id.size() > 1 && id[0] == 'X' &&
        std::all_of(id.begin() + 1, id.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      int idx = 0;
      const auto r = std::from_chars(id.data() + 1, id.data() + id.size(), idx);
      if (r.ec != std::errc() || (id.size() > 2 && id[1] == '0'))
        fail(start, "bad random symbol '" + id + "'");
      return make({ExprNode::Kind::Random, 0.0, idx, "", {}});
    }
    if (arity(id) >= 0) fail(start, "function '" + id + "' needs arguments");
    fail(start, "unknown identifier '" + id + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

double eval_node(const ExprNode& n, const Point3& x, std::span<const double> r) {
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::Number:
      return n.value;
    case K::Coord:
      return x[static_cast<std::size_t>(n.index)];
    case K::Random:
      if (static_cast<std::size_t>(n.index) >= r.size())
        throw ConfigError("random symbol X" + std::to_string(n.index) + " needs stochastic_dim >= " +
                          std::to_string(n.index + 1));
      return r[static_cast<std::size_t>(n.index)];
    case K::Pi:
      return std::numbers::pi;
    case K::Neg:
      return -eval_node(*n.args[0], x, r);
    case K::Ternary:
      return eval_node(*n.args[0], x, r) != 0.0 ? eval_node(*n.args[1], x, r)
                                                : eval_node(*n.args[2], x, r);
    case K::Binary: {
      const double a = eval_node(*n.args[0], x, r), b = eval_node(*n.args[1], x, r);
      const std::string& op = n.op;
      if (op == "+") return a + b;
      if (op == "-") return a - b;
      if (op == "*") return a * b;
      if (op == "/") return a / b;
      if (op == "^") return std::pow(a, b);
      if (op == "<") return a < b ? 1.0 : 0.0;
      if (op == "<=") return a <= b ? 1.0 : 0.0;
      if (op == ">") return a > b ? 1.0 : 0.0;
      if (op == ">=") return a >= b ? 1.0 : 0.0;
      if (op == "==") return a == b ? 1.0 : 0.0;
      if (op == "!=") return a != b ? 1.0 : 0.0;
      break;
    }
    case K::Call: {
      const double a = eval_node(*n.args[0], x, r);
      if (n.op == "sin") return std::sin(a);
      if (n.op == "cos") return std::cos(a);
      if (n.op == "exp") return std::exp(a);
      if (n.op == "abs") return std::abs(a);
      if (n.op == "sqrt") return std::sqrt(a);
      const double b = eval_node(*n.args[1], x, r);
      if (n.op == "min") return std::min(a, b);
      if (n.op == "max") return std::max(a, b);
      break;
    }
  }
  throw ConfigError("corrupt expression node");
}

int max_random(const ExprNode& n) {
  int m = n.kind == ExprNode::Kind::Random ? n.index : -1;
  for (const auto& a : n.args) m = std::max(m, max_random(*a));
  return m;
}

bool equal_nodes(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind || a.index != b.index || a.op != b.op || a.args.size() != b.args.size())
    return false;
  if (a.kind == ExprNode::Kind::Number && std::memcmp(&a.value, &b.value, sizeof(double)) != 0)
    return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!equal_nodes(*a.args[i], *b.args[i])) return false;
  return true;
}

void print_node(const ExprNode& n, std::string& out) {
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::Number:
      out += format_double(n.value);
      return;
    case K::Coord:
      out += static_cast<char>('x' + n.index);
      return;
    case K::Random:
      out += "X" + std::to_string(n.index);
      return;
    case K::Pi:
      out += "pi";
      return;
    case K::Neg:
      out += "(-";
      print_node(*n.args[0], out);
      out += ")";
      return;
    case K::Binary:
      out += "(";
      print_node(*n.args[0], out);
      out += " " + n.op + " ";
      print_node(*n.args[1], out);
      out += ")";
      return;
    case K::Ternary:
      out += "(";
      print_node(*n.args[0], out);
      out += " ? ";
      print_node(*n.args[1], out);
      out += " : ";
      print_node(*n.args[2], out);
      out += ")";
      return;
    case K::Call:
      out += n.op + "(";
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print_node(*n.args[i], out);
      }
      out += ")";
      return;
  }
}

}  // namespace

double Expr::eval(const Point3& x, std::span<const double> random) const {
  if (!root_) throw ConfigError("empty expression");
  return eval_node(*root_, x, random);
}

int Expr::max_random_index() const { return root_ ? max_random(*root_) : -1; }

bool Expr::operator==(const Expr& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return equal_nodes(*root_, *other.root_);
}

Expr parse_expr(std::string_view text) { return Expr(Parser(text).parse()); }

std::string print_expr(const Expr& expr) {
  std::string out;
  if (!expr.empty()) print_node(expr.root(), out);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace conslaw
