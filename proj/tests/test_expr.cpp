#include "conslaw/expr.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "conslaw/error.hpp"
#include "doctest.h"

using namespace conslaw;

namespace {

double ev(const std::string& s, Point3 x = {0, 0, 0}, std::vector<double> r = {}) {
  return parse_expr(s).eval(x, r);
}

std::string error_of(const std::string& s) {
  try {
    parse_expr(s);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// Random well-formed expression text over the full grammar.
std::string random_expr(std::mt19937_64& rng, int depth) {
  const int pick = static_cast<int>(rng() % (depth > 0 ? 10 : 4));
  switch (pick) {
    case 0: return std::to_string(rng() % 100) + "." + std::to_string(rng() % 1000);
    case 1: return std::string(1, "xyz"[rng() % 3]);
    case 2: return "X" + std::to_string(rng() % 3);
    case 3: return "pi";
    case 4: return "-" + random_expr(rng, depth - 1);
    case 5: {
      const char* ops[] = {"+", "-", "*", "/", "^", "<", "<=", ">", ">=", "==", "!="};
      return random_expr(rng, depth - 1) + " " + ops[rng() % 11] + " " + random_expr(rng, depth - 1);
    }
    case 6: return "(" + random_expr(rng, depth - 1) + ")";
    case 7: return random_expr(rng, depth - 1) + " ? " + random_expr(rng, depth - 1) + " : " + random_expr(rng, depth - 1);
    case 8: {
      const char* f[] = {"sin", "cos", "exp", "abs", "sqrt"};
      return std::string(f[rng() % 5]) + "(" + random_expr(rng, depth - 1) + ")";
    }
    default:
      return std::string(rng() % 2 ? "min" : "max") + "(" + random_expr(rng, depth - 1) + ", " +
             random_expr(rng, depth - 1) + ")";
  }
}

}  // namespace

TEST_CASE("worked examples") {
  CHECK(ev("sin(2*pi*x)", {0.25, 0, 0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ev("y < 0.5 ? 2.0 : 1.0", {0, 0.25, 0}) == 2.0);
  CHECK(ev("y < 0.5 ? 2.0 : 1.0", {0, 0.75, 0}) == 1.0);
  const std::string err = error_of("1 + * 2");
  CHECK(err.find("position 5") != std::string::npos);
}

TEST_CASE("precedence and associativity") {
  CHECK(ev("1 + 2 * 3") == 7.0);
  CHECK(ev("(1 + 2) * 3") == 9.0);
  CHECK(ev("8 - 3 - 2") == 3.0);
  CHECK(ev("16 / 4 / 2") == 2.0);
  CHECK(ev("2 ^ 3 ^ 2") == 512.0);
  CHECK(ev("-2 ^ 2") == -4.0);
  CHECK(ev("2 ^ -1") == 0.5);
  CHECK(ev("1 + 1 < 3") == 1.0);
  CHECK(ev("1 ? 2 : 0 ? 3 : 4") == 2.0);
  CHECK(ev("0 ? 2 : 0 ? 3 : 4") == 4.0);
  CHECK(ev("0 ? 2 : 1 ? 3 : 4") == 3.0);
  CHECK(ev("--3") == 3.0);
  CHECK(ev("+3") == 3.0);
  CHECK(ev("2 * -3") == -6.0);
  CHECK(ev("1.5e2 + 2E-1") == 150.2);
}

TEST_CASE("functions, names and random symbols") {
  CHECK(ev("min(3, max(1, 2))") == 2.0);
  CHECK(ev("abs(-2) + sqrt(9) + exp(0) + cos(0)") == 7.0);
  CHECK(ev("pi") == std::numbers::pi);
  CHECK(ev("x + 10*y + 100*z", {1, 2, 3}) == 321.0);
  CHECK(ev("X0 + X2", {}, {0.25, 0.5, 0.125}) == 0.375);
  CHECK(parse_expr("X3 * X10 + 1").max_random_index() == 10);
  CHECK(parse_expr("x").max_random_index() == -1);
  CHECK(ev("1 == 1") == 1.0);
  CHECK(ev("1 != 1") == 0.0);
  CHECK(ev("2 >= 3") == 0.0);
  CHECK(ev("2 <= 2") == 1.0);
  CHECK_THROWS_AS(ev("X1", {}, {0.5}), ConfigError);
}

TEST_CASE("syntax errors carry positions") {
  CHECK(error_of("foo + 1").find("unknown identifier 'foo'") != std::string::npos);
  CHECK(error_of("2 * bar(1)").find("position 5") != std::string::npos);
  CHECK(error_of("sin(1, 2)").find("takes 1 argument") != std::string::npos);
  CHECK(error_of("min(1)").find("takes 2 arguments") != std::string::npos);
  CHECK(error_of("(1 + 2").find("expected ')'") != std::string::npos);
  CHECK(error_of("1 ? 2").find("expected ':'") != std::string::npos);
  CHECK(error_of("").find("position 1") != std::string::npos);
  CHECK(error_of("1 2").find("position 3") != std::string::npos);
  CHECK(error_of("1..2").find("bad number") != std::string::npos);
  CHECK(error_of("sin").find("needs arguments") != std::string::npos);
  CHECK(error_of("X01").find("bad random symbol") != std::string::npos);
  CHECK(error_of("1e999").find("bad number") != std::string::npos);
}

TEST_CASE("printing is a parse fixed point") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 2000; ++t) {
    const std::string text = random_expr(rng, 5);
    const Expr a = parse_expr(text);
    const std::string printed = print_expr(a);
    const Expr b = parse_expr(printed);
    CHECK(a == b);
    CHECK(print_expr(b) == printed);
    // same tree evaluates to the same bits
    const Point3 x{0.3, 0.7, 0.1};
    const std::vector<double> r{0.2, 0.4, 0.9};
    const double va = a.eval(x, r), vb = b.eval(x, r);
    CHECK((va == vb || (std::isnan(va) && std::isnan(vb))));
  }
}

TEST_CASE("numbers print shortest round-trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, 123456789.0}) {
    const std::string s = format_double(v);
    CHECK(ev(s) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}
