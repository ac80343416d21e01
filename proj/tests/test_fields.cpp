#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "conformal/fields.hpp"

using namespace conformal;

namespace {

std::vector<Vec2> probe_points(unsigned seed, int count, double radius) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-radius, radius);
  std::vector<Vec2> pts;
  while (static_cast<int>(pts.size()) < count) {
    Vec2 p{U(rng), U(rng)};
    if (p.norm() <= radius) pts.push_back(p);
  }
  return pts;
}

}  // namespace

TEST_CASE("hamiltonian field of the quadratic form") {
  auto H = field_from_text("x^2 + 2*y^2");
  VectorField X = hamiltonian_field(H);
  Vec2 v = X.value({1, 1});
  CHECK(v.x == Catch::Approx(4.0));
  CHECK(v.y == Catch::Approx(-2.0));
  Mat2 J = X.jacobian({0.3, -0.8});
  CHECK(J.a == Catch::Approx(0.0).margin(1e-14));
  CHECK(J.b == Catch::Approx(4.0));
  CHECK(J.c == Catch::Approx(-2.0));
  CHECK(J.d == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("hamiltonian field of a constant vanishes") {
  auto H = field_from_text("3.7");
  VectorField X = hamiltonian_field(H);
  for (const Vec2& p : probe_points(1, 20, 2.0))
    CHECK(X.value(p).norm() < 1e-15);
}

TEST_CASE("boundary-flat Hamiltonian has vanishing X_H on the circle") {
  auto H = field_from_text("(1 - x^2 - y^2)^2");
  VectorField X = hamiltonian_field(H);
  for (int i = 0; i < 100; ++i) {
    double a = 6.283185307179586 * i / 100.0;
    CHECK(X.value({std::cos(a), std::sin(a)}).norm() < 1e-12);
  }
}

TEST_CASE("conformal defect of x^2 + c y^2 is the constant (c-1)*2-pattern") {
  auto H = field_from_text("x^2 + 2*y^2");
  VectorField V = conformal_defect(H);
  for (const Vec2& p : probe_points(2, 20, 1.5)) {
    Vec2 v = V.value(p);
    CHECK(v.x == Catch::Approx(2.0));  // H_yy - H_xx = 4 - 2
    CHECK(v.y == Catch::Approx(0.0).margin(1e-14));
  }
}

TEST_CASE("conformal defect of the rotationally symmetric quadratic is zero") {
  auto H = field_from_text("(x^2 + y^2)/2");
  VectorField V = conformal_defect(H);
  for (const Vec2& p : probe_points(3, 20, 2.0))
    CHECK(V.value(p).norm() < 1e-13);
}

TEST_CASE("conformal defect of the quartic radial example") {
  // H = r^4 - 2 r^2; hand differentiation gives V = -8(x^2-y^2, 2xy),
  // magnitude 8 r^2, sole zero at the origin.
  auto H = field_from_text("(x^2 + y^2)^2 - 2*(x^2 + y^2)");
  VectorField V = conformal_defect(H);
  for (const Vec2& p : probe_points(4, 30, 1.0)) {
    Vec2 v = V.value(p);
    CHECK(v.x == Catch::Approx(-8 * (p.x * p.x - p.y * p.y)).margin(1e-11));
    CHECK(v.y == Catch::Approx(-8 * 2 * p.x * p.y).margin(1e-11));
    CHECK(v.norm() ==
          Catch::Approx(8 * (p.x * p.x + p.y * p.y)).margin(1e-10));
  }
  CHECK(V.value({0, 0}).norm() < 1e-13);
}

TEST_CASE("harmonic quadratic gives a constant defect") {
  auto H = field_from_text("x^2 - y^2");
  VectorField V = conformal_defect(H);
  for (const Vec2& p : probe_points(5, 10, 3.0)) {
    Vec2 v = V.value(p);
    CHECK(v.x == Catch::Approx(-4.0));
    CHECK(v.y == Catch::Approx(0.0).margin(1e-13));
  }
}

TEST_CASE("loewner field n=1 is the gradient") {
  auto H = field_from_text("sin(x) * exp(0.5*y) + x^2*y");
  VectorField V1 = loewner_field(H, 1);
  for (const Vec2& p : probe_points(6, 25, 1.2)) {
    DJet j = H.jet(p.x, p.y, 1);
    Vec2 v = V1.value(p);
    CHECK(std::fabs(v.x - j.d(1, 0)) < 1e-12);
    CHECK(std::fabs(v.y - j.d(0, 1)) < 1e-12);
  }
}

TEST_CASE("loewner field n=2 is minus the conformal defect") {
  auto H = field_from_text("cos(x*y) + 0.3*x^3 - y^2");
  VectorField V2 = loewner_field(H, 2);
  VectorField V = conformal_defect(H);
  for (const Vec2& p : probe_points(7, 25, 1.5)) {
    Vec2 a = V2.value(p), b = V.value(p);
    CHECK(std::fabs(a.x + b.x) < 1e-12);
    CHECK(std::fabs(a.y + b.y) < 1e-12);
  }
}

TEST_CASE("loewner field of r^(2n) is 2^n n! z^n") {
  // (d_x + i d_y)^n (x^2+y^2)^n = 2^n n! (x + i y)^n.
  for (int n : {2, 3, 4}) {
    auto H = field_from_text("(x^2 + y^2)^" + std::to_string(n));
    VectorField Vn = loewner_field(H, n);
    double fact = 1;
    for (int k = 2; k <= n; ++k) fact *= k;
    double coef = std::pow(2.0, n) * fact;
    for (const Vec2& p : probe_points(8 + n, 15, 1.0)) {
      std::complex<double> z{p.x, p.y};
      std::complex<double> want = coef * std::pow(z, n);
      Vec2 got = Vn.value(p);
      CHECK(std::fabs(got.x - want.real()) < 1e-9);
      CHECK(std::fabs(got.y - want.imag()) < 1e-9);
    }
  }
}

TEST_CASE("riemannian defect with unit factor reduces to the flat defect") {
  auto H = field_from_text("sin(x) * cos(y) + x^2*y");
  auto one = field_from_text("1");
  VectorField R = riemannian_defect(H, one);
  VectorField V = conformal_defect(H);
  for (const Vec2& p : probe_points(20, 25, 1.5)) {
    Vec2 a = R.value(p), b = V.value(p);
    CHECK(std::fabs(a.x - b.x) < 1e-13);
    CHECK(std::fabs(a.y - b.y) < 1e-13);
  }
}

TEST_CASE("riemannian defect on the boundary scales the flat defect by g") {
  // When dH = 0 on gamma, the product-rule cross terms vanish there.
  auto H = field_from_text("(1 - x^2 - y^2)^2 * (1 + 0.4*x - 0.2*y)");
  auto g = field_from_text("(1 + x^2 + y^2)^2 / 4");
  VectorField R = riemannian_defect(H, g);
  VectorField V = conformal_defect(H);
  for (int i = 0; i < 64; ++i) {
    double a = 6.283185307179586 * i / 64.0;
    Vec2 p{std::cos(a), std::sin(a)};
    double gv = g.value(p.x, p.y);
    Vec2 rv = R.value(p), vv = V.value(p);
    CHECK(std::fabs(rv.x - gv * vv.x) < 1e-8);
    CHECK(std::fabs(rv.y - gv * vv.y) < 1e-8);
  }
}

TEST_CASE("riemannian defect rejects a nonpositive conformal factor") {
  auto H = field_from_text("x^2 + y^2");
  auto g = field_from_text("x");  // vanishes / negative in the domain
  VectorField R = riemannian_defect(H, g);
  CHECK_THROWS_AS(R.value({-0.5, 0.0}), NonpositiveConformalFactor);
}

TEST_CASE("map defect of identity and rotations vanishes") {
  PlanarMap id;
  id.f = field_from_text("x");
  id.g = field_from_text("y");
  VectorField Vid = map_conformal_defect(id);
  PlanarMap rot;
  rot.f = field_from_text("x*cos(0.7) - y*sin(0.7)");
  rot.g = field_from_text("x*sin(0.7) + y*cos(0.7)");
  VectorField Vrot = map_conformal_defect(rot);
  for (const Vec2& p : probe_points(21, 15, 2.0)) {
    CHECK(Vid.value(p).norm() < 1e-14);
    CHECK(Vrot.value(p).norm() < 1e-13);
  }
}

TEST_CASE("map defect of the shear is the constant (0,1)") {
  PlanarMap shear;
  shear.f = field_from_text("x + y");
  shear.g = field_from_text("y");
  VectorField V = map_conformal_defect(shear);
  for (const Vec2& p : probe_points(22, 15, 2.0)) {
    Vec2 v = V.value(p);
    CHECK(v.x == Catch::Approx(0.0).margin(1e-14));
    CHECK(v.y == Catch::Approx(1.0));
  }
}

TEST_CASE("map defect of the epsilon-Euler map shares zeros with V") {
  // (x + eps H_y, y - eps H_x) has defect eps*(2H_xy, H_yy - H_xx):
  // a relabeling of V with the same zero set.
  double eps = 0.01;
  for (const char* ht :
       {"x^2 + 2*y^2", "(x^2 + y^2)^2 - 2*(x^2 + y^2)"}) {
    auto H = field_from_text(ht);
    VectorField V = conformal_defect(H);
    VectorField Vmap;
    auto Hc = H;
    Vmap.value = [Hc, eps](Vec2 p) {
      DJet j = Hc.jet(p.x, p.y, 2);
      // f_x - g_y = eps(H_yx + H_xy) = 2 eps H_xy;  f_y + g_x = eps(H_yy - H_xx)
      return Vec2{2 * eps * j.d(1, 1), eps * (j.d(0, 2) - j.d(2, 0))};
    };
    for (const Vec2& p : probe_points(23, 20, 1.0)) {
      bool vzero = V.value(p).norm() < 1e-10;
      bool mzero = Vmap.value(p).norm() < 1e-10 * eps / 0.01;
      CHECK(vzero == mzero);
    }
  }
}

TEST_CASE("analytic Jacobians match finite differences") {
  auto H = field_from_text("sin(x)*cos(y) + 0.5*x^2*y - y^3");
  for (VectorField V : {hamiltonian_field(H), conformal_defect(H),
                        loewner_field(H, 2)}) {
    for (const Vec2& p : probe_points(24, 10, 1.0)) {
      Mat2 J = V.jacobian(p);
      double h = 1e-6;
      Vec2 dx = (V.value({p.x + h, p.y}) - V.value({p.x - h, p.y})) / (2 * h);
      Vec2 dy = (V.value({p.x, p.y + h}) - V.value({p.x, p.y - h})) / (2 * h);
      double scale = std::fmax(1.0, J.max_abs());
      CHECK(std::fabs(J.a - dx.x) / scale < 1e-5);
      CHECK(std::fabs(J.c - dx.y) / scale < 1e-5);
      CHECK(std::fabs(J.b - dy.x) / scale < 1e-5);
      CHECK(std::fabs(J.d - dy.y) / scale < 1e-5);
    }
  }
}

TEST_CASE("order guards raise OrderTooLow") {
  auto low = field_from_text("x^2 + y^2", "x", "y", 1);
  CHECK_THROWS_AS(conformal_defect(low), OrderTooLow);
  CHECK_THROWS_AS(loewner_field(low, 3), OrderTooLow);
}

TEST_CASE("symplectic residual is tracked on claimed maps") {
  PlanarMap notsym;
  notsym.f = field_from_text("2*x");
  notsym.g = field_from_text("y");
  notsym.symplectic_claimed = true;
  notsym.jacobian({0.3, 0.4});
  CHECK(*notsym.worst_symplectic_residual == Catch::Approx(1.0));
}
