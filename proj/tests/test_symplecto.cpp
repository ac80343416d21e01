#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "conformal/flow.hpp"
#include "conformal/symplecto.hpp"

using namespace conformal;

TEST_CASE("graph transform maps the diagonal to the zero section") {
  GraphPoint g = graph_transform({1, 2}, {1, 2});
  CHECK(g.w1.x == 1.0);
  CHECK(g.w1.y == 2.0);
  CHECK(g.w2.x == 0.0);
  CHECK(g.w2.y == 0.0);
}

TEST_CASE("graph transform of a displaced pair") {
  GraphPoint g = graph_transform({1, 0}, {0, 0});
  CHECK(g.w1.x == 0.5);
  CHECK(g.w1.y == 0.0);
  CHECK(g.w2.x == 0.0);  // u2 = -(y1 - y2)
  CHECK(g.w2.y == 1.0);  // v2 = x1 - x2
}

TEST_CASE("graph transform round-trips") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int k = 0; k < 50; ++k) {
    Vec2 z1{U(rng), U(rng)}, z2{U(rng), U(rng)};
    GraphPoint g = graph_transform(z1, z2);
    auto [r1, r2] = graph_inverse(g.w1, g.w2);
    CHECK((r1 - z1).norm() < 1e-14);
    CHECK((r2 - z2).norm() < 1e-14);
  }
}

TEST_CASE("4x4 symplectic-form pullback identity is exact") {
  CHECK(graph_pullback_identity_residual() <= 1e-15);
}

TEST_CASE("moderateness: identity map scores 4") {
  PlanarMap id;
  id.f = field_from_text("x");
  id.g = field_from_text("y");
  PlanarDomain D(BoundaryCurve::circle());
  ModeratenessResult m = moderateness(id, D, 32);
  CHECK(m.min_value == Catch::Approx(4.0));
  CHECK(m.moderate);
}

TEST_CASE("moderateness: the shear family is not moderate") {
  PlanarMap shear;
  shear.f = field_from_text("-x + y");
  shear.g = field_from_text("-y");
  PlanarDomain D(BoundaryCurve::circle());
  ModeratenessResult m = moderateness(shear, D, 32);
  CHECK(m.min_value < 1e-12);
  CHECK(!m.moderate);
}

TEST_CASE("moderateness: small-time flow stays far from zero") {
  auto H = field_from_text("(1 - x^2 - y^2)^2");
  PlanarMap F = flow_as_map(H, 0.05, 1e-10);
  PlanarDomain D(BoundaryCurve::circle());
  ModeratenessResult m = moderateness(F, D, 32);
  CHECK(m.min_value >= 3.5);
  CHECK(m.moderate);
}

TEST_CASE("transversality determinant: identity gives 4") {
  CHECK(transversality_determinant(Mat2::identity()) == Catch::Approx(4.0));
}

TEST_CASE("transversality determinant equals 2 + f_x + g_y on SL(2)") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int k = 0; k < 100; ++k) {
    // Random shear-rotation-shear product: always determinant 1.
    double s1 = U(rng), s2 = U(rng), th = U(rng);
    Mat2 A{1, s1, 0, 1};
    Mat2 R{std::cos(th), -std::sin(th), std::sin(th), std::cos(th)};
    Mat2 B{1, 0, s2, 1};
    auto mul = [](Mat2 X, Mat2 Y) {
      return Mat2{X.a * Y.a + X.b * Y.c, X.a * Y.b + X.b * Y.d,
                  X.c * Y.a + X.d * Y.c, X.c * Y.b + X.d * Y.d};
    };
    Mat2 J = mul(mul(A, R), B);
    CHECK(std::fabs(transversality_determinant(J) - (2 + J.a + J.d)) <=
          1e-10);
  }
}

TEST_CASE("shear Jacobian is not transverse: determinant exactly 0") {
  Mat2 shear{-1, 1, 0, -1};
  CHECK(transversality_determinant(shear) == 0.0);
}

TEST_CASE("transversality check rejects non-symplectic probes") {
  PlanarMap bad;
  bad.f = field_from_text("2*x");
  bad.g = field_from_text("y");
  CHECK_THROWS_AS(
      transversality_determinant_check(bad, {Vec2{0.1, 0.1}}),
      NotSymplecticAtProbe);
}

TEST_CASE("midpoint map of the identity is the identity") {
  PlanarMap id;
  id.f = field_from_text("x");
  id.g = field_from_text("y");
  MidpointMap m(id);
  Vec2 p{0.3, -0.6};
  CHECK((m.forward(p) - p).norm() < 1e-15);
  CHECK((m.inverse(p) - p).norm() < 1e-12);
}

TEST_CASE("midpoint inversion round-trips on a flow map") {
  auto H = field_from_text("(1 - x^2 - y^2)^2 * (1 + 0.2*x)");
  PlanarMap F = flow_as_map(H, 0.05, 1e-10);
  MidpointMap m(F);
  for (Vec2 p : {Vec2{0.2, 0.3}, Vec2{-0.5, 0.1}, Vec2{0.0, -0.7}}) {
    Vec2 w = m.forward(p);
    Vec2 back = m.inverse(w);
    CHECK((back - p).norm() < 1e-10);
  }
}

TEST_CASE("midpoint diagnostics pass for identity and flow") {
  PlanarDomain D(BoundaryCurve::circle());
  PlanarMap id;
  id.f = field_from_text("x");
  id.g = field_from_text("y");
  MidpointDiagnostics d1 = midpoint_diagnostics(id, D);
  CHECK(d1.image_in_domain);
  CHECK(d1.injective);
  CHECK(d1.invertible);
  CHECK(d1.violations.empty());

  auto H = field_from_text("(1 - x^2 - y^2)^2");
  PlanarMap F = flow_as_map(H, 0.05, 1e-10);
  MidpointDiagnostics d2 = midpoint_diagnostics(F, D);
  CHECK(d2.image_in_domain);
  CHECK(d2.injective);
  CHECK(d2.invertible);
  CHECK(d2.violations.empty());
}

TEST_CASE("midpoint diagnostics report Newton failures for a wild map") {
  // A deliberately non-moderate interior patch: strong fold.
  PlanarMap wild;
  wild.f = field_from_text("-3*x + y");
  wild.g = field_from_text("-3*y");
  PlanarDomain D(BoundaryCurve::circle());
  MidpointDiagnostics d = midpoint_diagnostics(wild, D);
  CHECK(!d.violations.empty());
}

TEST_CASE("generating function of the identity is constant") {
  PlanarMap id;
  id.f = field_from_text("x");
  id.g = field_from_text("y");
  PlanarDomain D(BoundaryCurve::circle());
  GeneratingFunction G = recover_generating_function(id, D, {0, 0});
  for (Vec2 p : {Vec2{0.4, 0.1}, Vec2{-0.3, -0.5}, Vec2{0.6, 0.2}})
    CHECK(std::fabs(G.value(p)) < 1e-12);
  CHECK(G.closedness_residual() <= 1e-12);
  CHECK(G.boundary_grad_sup() <= 1e-12);
}

TEST_CASE("recovered generating function of a flow is -eps K + O(eps^2)") {
  // Convention check: with w2 = i(z1 - z2) and lambda = u2 du1 + v2 dv1,
  // the generating function of the time-eps flow of K converges to -eps K.
  auto K = field_from_text("(1 - x^2 - y^2)^2 * (1 + 0.1*x)");
  PlanarDomain D(BoundaryCurve::circle());
  double eps = 1e-3;
  PlanarMap F = flow_as_map(K, eps, 1e-12);
  GeneratingFunction G = recover_generating_function(F, D, {0, 0});
  double base = K.value(0, 0);
  for (Vec2 p : {Vec2{0.3, -0.2}, Vec2{-0.4, 0.1}, Vec2{0.2, 0.5}}) {
    double want = -eps * (K.value(p.x, p.y) - base);
    CHECK(std::fabs(G.value(p) - want) <= 1e-8);  // O(eps^2) bound
  }
}

TEST_CASE("dH vanishes on gamma when F fixes the boundary") {
  auto H = field_from_text("(1 - x^2 - y^2)^2 * (1 - 0.15*y)");
  PlanarMap F = flow_as_map(H, 0.05, 1e-10);
  PlanarDomain D(BoundaryCurve::circle());
  GeneratingFunction G = recover_generating_function(F, D, {0, 0});
  CHECK(G.boundary_grad_sup() <= 1e-6);
}

TEST_CASE("closedness of the recovered derivative field") {
  auto H = field_from_text("(1 - x^2 - y^2)^2 * (1 + 0.2*x)");
  PlanarMap F = flow_as_map(H, 0.05, 1e-10);
  PlanarDomain D(BoundaryCurve::circle());
  GeneratingFunction G = recover_generating_function(F, D, {0, 0});
  CHECK(G.closedness_residual() <= 1e-6);
}

TEST_CASE("path independence of the quadrature") {
  auto H = field_from_text("(1 - x^2 - y^2)^2");
  PlanarMap F = flow_as_map(H, 0.05, 1e-10);
  PlanarDomain D(BoundaryCurve::circle());
  GeneratingFunction Ga = recover_generating_function(F, D, {0, 0});
  GeneratingFunction Gb = recover_generating_function(F, D, {0.3, 0.1});
  Vec2 p{-0.2, 0.4}, q{0.5, -0.3};
  // Differences of values are base-independent.
  CHECK(std::fabs((Ga.value(p) - Ga.value(q)) -
                  (Gb.value(p) - Gb.value(q))) < 1e-8);
}

TEST_CASE("boundary degeneracy: Huu Hvv = Huv^2 on gamma-bar") {
  auto H = field_from_text("(1 - x^2 - y^2)^2 * (1 + 0.2*x)");
  PlanarMap F = flow_as_map(H, 0.05, 1e-10);
  PlanarDomain D(BoundaryCurve::circle());
  GeneratingFunction G = recover_generating_function(F, D, {0, 0});
  // The determinant vanishes on gamma itself; at radius 1 - d it is O(d),
  // so check both smallness near the boundary and decay as d shrinks.
  for (int i = 0; i < 24; ++i) {
    double a = 6.283185307179586 * i / 24.0;
    Vec2 dir{std::cos(a), std::sin(a)};
    auto det_at = [&](double r) {
      auto h = G.hessian({r * dir.x, r * dir.y});
      return std::fabs(h.uu * h.vv - h.uv * h.uv);
    };
    double near = det_at(0.999), far = det_at(0.99);
    CHECK(near < 1e-3);
    CHECK(near < 0.5 * far);
  }
}

TEST_CASE("derivative relations: identity map has residual 0") {
  PlanarMap id;
  id.f = field_from_text("x");
  id.g = field_from_text("y");
  auto H0 = field_from_text("0");
  std::vector<Vec2> probes{{0.1, 0.2}, {-0.3, 0.4}, {0.5, -0.1}};
  CHECK(derivative_relations_check(H0, id, probes) < 1e-14);
}

TEST_CASE("derivative relations close the loop through map reconstruction") {
  auto H = field_from_text("0.01*(1 - x^2 - y^2)^2");
  PlanarMap F = map_from_generating_function(H);
  std::vector<Vec2> probes;
  for (int i = 0; i < 20; ++i) {
    double a = 6.283185307179586 * i / 20.0;
    probes.push_back({0.55 * std::cos(a), 0.55 * std::sin(a)});
  }
  CHECK(derivative_relations_check(H, F, probes) <= 1e-6);
  // The reconstructed map is symplectic.
  for (const Vec2& p : probes)
    CHECK(std::fabs(F.jacobian(p).det() - 1.0) < 1e-9);
}

TEST_CASE("derivative relations: end-to-end flow pipeline") {
  auto K = field_from_text("(1 - x^2 - y^2)^2");
  PlanarMap F = flow_as_map(K, 0.05, 1e-10);
  PlanarDomain D(BoundaryCurve::circle());
  GeneratingFunction G = recover_generating_function(F, D, {0, 0});
  std::vector<Vec2> probes;
  for (int i = 0; i < 16; ++i) {
    double a = 6.283185307179586 * i / 16.0;
    probes.push_back({0.5 * std::cos(a), 0.5 * std::sin(a)});
  }
  CHECK(derivative_relations_check(G, F, probes) <= 1e-4);
}

TEST_CASE("conformal points of a moderate flow map: count is 2") {
  auto H = field_from_text("(1 - x^2 - y^2)^2");
  PlanarMap F = flow_as_map(H, 0.05, 1e-10);
  PlanarDomain D(BoundaryCurve::circle());
  MapConformalResult r = conformal_points_of_map(F, D, 0.1, 1e-9);
  CHECK(r.zeros.boundary.value == 2.0);
  CHECK(r.zeros.degree_sum == 2);
  CHECK(r.boundary_identity <= 1e-4);
  CHECK(r.closedness_residual <= 1e-6);
  CHECK(r.moderateness_min >= 3.0);
}

TEST_CASE("identity map is rejected as degenerate") {
  PlanarMap id;
  id.f = field_from_text("x");
  id.g = field_from_text("y");
  PlanarDomain D(BoundaryCurve::circle());
  CHECK_THROWS_AS(conformal_points_of_map(id, D, 0.1, 1e-9),
                  NonIsolatedZeros);
}

TEST_CASE("perturbed flow splits into two simple conformal points") {
  auto H = field_from_text("(1 - x^2 - y^2)^2 * (1 + 0.2*x)");
  PlanarMap F = flow_as_map(H, 0.1, 1e-10);
  PlanarDomain D(BoundaryCurve::circle());
  MapConformalResult r = conformal_points_of_map(F, D, 0.05, 1e-9);
  CHECK(r.zeros.degree_sum == 2);
  REQUIRE(r.zeros.certificates.size() == 2);
  CHECK(r.zeros.certificates[0].degree == 1);
  CHECK(r.zeros.certificates[1].degree == 1);
  Vec2 a = r.zeros.certificates[0].center, b = r.zeros.certificates[1].center;
  CHECK((a - b).norm() > 0.05);
}

TEST_CASE("packed and raw defect searches certify the same zeros") {
  auto H = field_from_text("(1 - x^2 - y^2)^2 * (1 + 0.2*x)");
  PlanarMap F = flow_as_map(H, 0.1, 1e-10);
  PlanarDomain D(BoundaryCurve::circle());
  MapConformalResult r = conformal_points_of_map(F, D, 0.05, 1e-9);
  PackedRawConsistency pc =
      packed_vs_raw_consistency(F, D, 0.05, 1e-9, r.zeros);
  CHECK(pc.bijection);
  CHECK(pc.max_mismatch < 0.05);
}

TEST_CASE("non-moderate maps are rejected before recovery") {
  PlanarMap shear;
  shear.f = field_from_text("-x + y");
  shear.g = field_from_text("-y");
  PlanarDomain D(BoundaryCurve::circle());
  CHECK_THROWS_WITH(recover_generating_function(shear, D, {0, 0}),
                    Catch::Matchers::ContainsSubstring("NotModerate"));
}

TEST_CASE("map_from_generating_function needs order >= 2 available") {
  auto H = field_from_text("0.01*(1 - x^2 - y^2)^2", "x", "y", 1);
  CHECK_THROWS_AS(map_from_generating_function(H), OrderTooLow);
}
