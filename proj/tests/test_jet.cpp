#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "conformal/expr.hpp"
#include "conformal/jet.hpp"

using namespace conformal;

TEST_CASE("constant jet has only the (0,0) entry") {
  DJet c = DJet::constant(3.5, 4, 0.7, -0.2);
  CHECK(c.d(0, 0) == 3.5);
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; i + j <= 4; ++j)
      if (i + j > 0) CHECK(c.d(i, j) == 0.0);
}

TEST_CASE("bilinear product x*y at (2,3)") {
  DJet x = DJet::variable_x(2.0, 3.0, 2);
  DJet y = DJet::variable_y(2.0, 3.0, 2);
  DJet p = x * y;
  CHECK(p.d(0, 0) == 6.0);
  CHECK(p.d(1, 0) == 3.0);
  CHECK(p.d(0, 1) == 2.0);
  CHECK(p.d(1, 1) == 1.0);
  CHECK(p.d(2, 0) == 0.0);
  CHECK(p.d(0, 2) == 0.0);
}

TEST_CASE("jets store raw partials, not Taylor coefficients") {
  // f = x^3: d(3,0) must be 6 (the third derivative), not 1.
  DJet x = DJet::variable_x(0.5, 0.0, 3);
  DJet f = x * x * x;
  CHECK(f.d(3, 0) == Catch::Approx(6.0));
  CHECK(f.d(2, 0) == Catch::Approx(3.0));
  CHECK(f.d(1, 0) == Catch::Approx(0.75));
}

TEST_CASE("entries beyond the declared order read as zero") {
  DJet j = DJet::constant(1.0, 2);
  CHECK(j.order() == 2);
  CHECK(j.d(3, 0) == 0.0);
  CHECK(j.d(1, 2) == 0.0);
}

namespace {

DJet random_poly_jet(std::mt19937& rng, double x0, double y0, int order) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  DJet x = DJet::variable_x(x0, y0, order);
  DJet y = DJet::variable_y(x0, y0, order);
  DJet f = DJet::constant(U(rng), order, x0, y0);
  f = f + x * U(rng) + y * U(rng) + x * y * U(rng) + x * x * U(rng) +
      y * y * x * U(rng);
  return f;
}

double max_diff(const DJet& a, const DJet& b) {
  double m = 0;
  int n = std::min(a.order(), b.order());
  for (int i = 0; i <= n; ++i)
    for (int j = 0; i + j <= n; ++j)
      m = std::fmax(m, std::fabs(a.d(i, j) - b.d(i, j)));
  return m;
}

}  // namespace

TEST_CASE("ring axioms hold on the truncation") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    DJet f = random_poly_jet(rng, 0.3, -0.4, 5);
    DJet g = random_poly_jet(rng, 0.3, -0.4, 5);
    DJet h = random_poly_jet(rng, 0.3, -0.4, 5);
    CHECK(max_diff((f * g) * h, f * (g * h)) < 1e-11);
    CHECK(max_diff(f * (g + h), f * g + f * h) < 1e-11);
    CHECK(max_diff(f + g, g + f) < 1e-15);
  }
}

TEST_CASE("Leibniz consistency: jet of f*g equals jet product") {
  Expression f = Expression::parse("sin(x) * (1 + y^2)", "x", "y");
  Expression g = Expression::parse("exp(0.3*x - y)", "x", "y");
  Expression fg = Expression::parse("(sin(x) * (1 + y^2)) * exp(0.3*x - y)",
                                    "x", "y");
  for (auto [x0, y0] : {std::pair{0.4, -0.2}, {1.1, 0.6}, {-0.7, 0.25}}) {
    std::array<DJet, 2> base{DJet::variable_x(x0, y0, 5),
                             DJet::variable_y(x0, y0, 5)};
    DJet jf = f.eval<DJet>(base);
    DJet jg = g.eval<DJet>(base);
    DJet jfg = fg.eval<DJet>(base);
    DJet prod = jf * jg;
    for (int i = 0; i <= 5; ++i)
      for (int j = 0; i + j <= 5; ++j) {
        double scale = std::fmax(1.0, std::fabs(jfg.d(i, j)));
        CHECK(std::fabs(prod.d(i, j) - jfg.d(i, j)) / scale < 1e-12);
      }
  }
}

TEST_CASE("reciprocal and division agree") {
  DJet x = DJet::variable_x(0.8, 0.1, 4);
  DJet y = DJet::variable_y(0.8, 0.1, 4);
  DJet denom = DJet::constant(2.0, 4, 0.8, 0.1) + x * x + y;
  DJet a = x / denom;
  DJet b = x * reciprocal(denom);
  CHECK(max_diff(a, b) < 1e-13);
}

TEST_CASE("chain consistency: sin(x^2+y) via compose matches direct eval") {
  double x0 = 0.35, y0 = -0.6;
  Expression direct = Expression::parse("sin(x^2 + y)", "x", "y");
  std::array<DJet, 2> base{DJet::variable_x(x0, y0, 5),
                           DJet::variable_y(x0, y0, 5)};
  DJet got = direct.eval<DJet>(base);
  DJet inner = base[0] * base[0] + base[1];
  DJet viasin = sin(inner);
  CHECK(max_diff(got, viasin) < 1e-13);
}

TEST_CASE("integer pow is exact for polynomials, fractional pow matches") {
  DJet x = DJet::variable_x(1.3, 0.0, 4);
  DJet p4 = pow(x, 4.0);
  DJet manual = x * x * x * x;
  CHECK(max_diff(p4, manual) < 1e-10);

  DJet ph = pow(x, 0.5);
  DJet viasqrt = sqrt(x);
  CHECK(max_diff(ph, viasqrt) < 1e-11);
}

TEST_CASE("unary function jets match finite differences") {
  struct Case {
    const char* text;
    double x0, y0;
  };
  for (const Case& c : {Case{"sin(x + 2*y)", 0.3, -0.2},
                        Case{"cos(x*y)", 0.5, 0.7},
                        Case{"exp(x - y)", -0.1, 0.4},
                        Case{"log(2 + x + y^2)", 0.2, 0.9},
                        Case{"sqrt(3 + x*y)", 0.6, -0.5}}) {
    Expression e = Expression::parse(c.text, "x", "y");
    std::array<DJet, 2> base{DJet::variable_x(c.x0, c.y0, 2),
                             DJet::variable_y(c.x0, c.y0, 2)};
    DJet j = e.eval<DJet>(base);
    double h = 1e-4;
    auto f = [&](double x, double y) { return e.eval_value(x, y); };
    double fx = (f(c.x0 + h, c.y0) - f(c.x0 - h, c.y0)) / (2 * h);
    double fy = (f(c.x0, c.y0 + h) - f(c.x0, c.y0 - h)) / (2 * h);
    double fxx = (f(c.x0 + h, c.y0) - 2 * f(c.x0, c.y0) + f(c.x0 - h, c.y0)) /
                 (h * h);
    CHECK(std::fabs(j.d(1, 0) - fx) < 1e-6);
    CHECK(std::fabs(j.d(0, 1) - fy) < 1e-6);
    CHECK(std::fabs(j.d(2, 0) - fxx) < 1e-4);
  }
}

TEST_CASE("division by a tiny jet value raises DomainError") {
  DJet x = DJet::variable_x(0.0, 0.0, 2);
  DJet tiny = DJet::constant(0.0, 2);
  CHECK_THROWS_AS(x / tiny, DomainError);
  CHECK_THROWS_AS(reciprocal(tiny), DomainError);
}

TEST_CASE("log and sqrt of invalid bases raise DomainError") {
  DJet neg = DJet::constant(-1.0, 2);
  CHECK_THROWS_AS(log(neg), DomainError);
  CHECK_THROWS_AS(sqrt(neg), DomainError);
}
