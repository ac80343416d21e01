#include <catch2/catch_amalgamated.hpp>

#include "conformal/expr.hpp"

using namespace conformal;

TEST_CASE("parse / print / re-parse is stable") {
  for (const char* text :
       {"x^2 + 2*y", "sin(x*y) - 1", "-x^3 / (1 + y^2)",
        "exp(0.5*x) * log(2 + y)", "2^3^2", "sqrt(x^2 + y^2)"}) {
    Expression e = Expression::parse(text, "x", "y");
    std::string printed = e.str();
    Expression e2 = Expression::parse(printed, "x", "y");
    CHECK(e2.str() == printed);
  }
}

TEST_CASE("precedence and associativity") {
  // ^ binds tighter than unary minus and is right-associative.
  CHECK(Expression::parse("-x^2", "x", "y").eval_value(3.0, 0.0) ==
        Catch::Approx(-9.0));
  CHECK(Expression::parse("2^3^2", "x", "y").eval_value(0.0, 0.0) ==
        Catch::Approx(512.0));
  CHECK(Expression::parse("1 - 2 - 3", "x", "y").eval_value(0.0, 0.0) ==
        Catch::Approx(-4.0));
  CHECK(Expression::parse("2 + 3*4", "x", "y").eval_value(0.0, 0.0) ==
        Catch::Approx(14.0));
  CHECK(Expression::parse("8 / 4 / 2", "x", "y").eval_value(0.0, 0.0) ==
        Catch::Approx(1.0));
}

TEST_CASE("undeclared identifier is rejected by name") {
  try {
    Expression::parse("x^2 + z", "x", "y");
    FAIL("expected UnknownIdentifier");
  } catch (const UnknownIdentifier& e) {
    CHECK(std::string(e.what()).find('z') != std::string::npos);
  }
}

TEST_CASE("syntax errors carry a byte offset") {
  for (const char* bad : {"x +", "(x", "x**y", "", "sin()", "3..5"}) {
    CHECK_THROWS_AS(Expression::parse(bad, "x", "y"), SyntaxError);
  }
}

TEST_CASE("variables can use any declared pair of names") {
  Expression e = Expression::parse("u^2 - v", "u", "v");
  CHECK(e.eval_value(3.0, 4.0) == Catch::Approx(5.0));
  CHECK_THROWS_AS(Expression::parse("x + u", "u", "v"), UnknownIdentifier);
}

TEST_CASE("jet of x*y at (2,3)") {
  Expression e = Expression::parse("x*y", "x", "y");
  std::array<DJet, 2> base{DJet::variable_x(2, 3, 2),
                           DJet::variable_y(2, 3, 2)};
  DJet j = e.eval<DJet>(base);
  CHECK(j.d(0, 0) == Catch::Approx(6.0));
  CHECK(j.d(1, 0) == Catch::Approx(3.0));
  CHECK(j.d(0, 1) == Catch::Approx(2.0));
  CHECK(j.d(1, 1) == Catch::Approx(1.0));
  CHECK(j.d(2, 0) == 0.0);
  CHECK(j.d(0, 2) == 0.0);
}

TEST_CASE("quadratic form x^2 + 2y^2 has constant Hessian") {
  Expression e = Expression::parse("x^2 + 2*y^2", "x", "y");
  for (auto [x0, y0] : {std::pair{0.0, 0.0}, {1.3, -0.7}, {-2.0, 5.0}}) {
    std::array<DJet, 2> base{DJet::variable_x(x0, y0, 2),
                             DJet::variable_y(x0, y0, 2)};
    DJet j = e.eval<DJet>(base);
    CHECK(j.d(2, 0) == Catch::Approx(2.0));
    CHECK(j.d(0, 2) == Catch::Approx(4.0));
    CHECK(j.d(1, 1) == Catch::Approx(0.0).margin(1e-14));
  }
}

TEST_CASE("order-4 jet of sin(x)*exp(y) matches finite differences") {
  Expression e = Expression::parse("sin(x)*exp(y)", "x", "y");
  double x0 = 0.3, y0 = -0.2, h = 1e-3;
  std::array<DJet, 2> base{DJet::variable_x(x0, y0, 4),
                           DJet::variable_y(x0, y0, 4)};
  DJet j = e.eval<DJet>(base);
  auto f = [&](double x, double y) { return e.eval_value(x, y); };
  // Central finite differences on a 5x5 stencil; product structure lets the
  // two directions factor.
  double wx[5], wy[5];
  for (int i = -2; i <= 2; ++i) {
    wx[i + 2] = std::sin(x0 + i * h);
    wy[i + 2] = std::exp(y0 + i * h);
  }
  auto d1 = [&](double* w) { return (w[3] - w[1]) / (2 * h); };
  auto d2 = [&](double* w) { return (w[3] - 2 * w[2] + w[1]) / (h * h); };
  auto d3 = [&](double* w) {
    return (w[4] - 2 * w[3] + 2 * w[1] - w[0]) / (2 * h * h * h);
  };
  auto d4 = [&](double* w) {
    return (w[4] - 4 * w[3] + 6 * w[2] - 4 * w[1] + w[0]) / (h * h * h * h);
  };
  auto dn = [&](double* w, int n) {
    switch (n) {
      case 0: return w[2];
      case 1: return d1(w);
      case 2: return d2(w);
      case 3: return d3(w);
      default: return d4(w);
    }
  };
  for (int i = 0; i <= 4; ++i)
    for (int jj = 0; i + jj <= 4; ++jj) {
      double fd = dn(wx, i) * dn(wy, jj);
      double scale = std::fmax(1e-3, std::fabs(fd));
      // The five-point stencil for a fourth derivative carries an O(h^2)
      // truncation error with a large constant, so the oracle itself is
      // only good to ~1e-3 there; lower orders are much tighter.
      double tol = (i >= 4 || jj >= 4) ? 3e-3 : 1e-5;
      INFO("partial (" << i << "," << jj << ")");
      CHECK(std::fabs(j.d(i, jj) - fd) / scale < tol);
    }
  (void)f;
}

TEST_CASE("domain violations name the failing operation") {
  Expression lg = Expression::parse("log(x)", "x", "y");
  std::array<DJet, 2> base{DJet::variable_x(-1, 0, 2),
                           DJet::variable_y(-1, 0, 2)};
  CHECK_THROWS_AS(lg.eval<DJet>(base), DomainError);

  Expression sq = Expression::parse("sqrt(x)", "x", "y");
  CHECK_THROWS_AS(sq.eval<DJet>(base), DomainError);

  Expression dv = Expression::parse("1 / (x + 1)", "x", "y");
  CHECK_THROWS_AS(dv.eval<DJet>(base), DomainError);
}

TEST_CASE("fractional power requires a positive base") {
  Expression e = Expression::parse("x^2.5", "x", "y");
  CHECK(e.eval_value(2.0, 0.0) == Catch::Approx(std::pow(2.0, 2.5)));
  std::array<DJet, 2> base{DJet::variable_x(-2, 0, 2),
                           DJet::variable_y(-2, 0, 2)};
  CHECK_THROWS_AS(e.eval<DJet>(base), DomainError);
}

TEST_CASE("scientific literals parse") {
  CHECK(Expression::parse("1e-3 + x", "x", "y").eval_value(0.0, 0.0) ==
        Catch::Approx(1e-3));
  CHECK(Expression::parse("2.5E2", "x", "y").eval_value(0.0, 0.0) ==
        Catch::Approx(250.0));
}
