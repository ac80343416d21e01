#pragma once

// Support functions on S^2, stereographic charts with the round-metric
// conformal factor, umbilics as zeros of the Riemannian defect, and the
// independent curvature / first-harmonic validators.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conformal/domain.hpp"
#include "conformal/errors.hpp"
#include "conformal/expr.hpp"
#include "conformal/fields.hpp"
#include "conformal/geometry.hpp"
#include "conformal/index.hpp"
#include "conformal/jet.hpp"

namespace conformal {

struct SupportFunction {
  Expression expr;  // in X, Y, Z, understood on the unit sphere
  std::string label;
  enum class Body { generic, sphere, ellipsoid } body = Body::generic;
  double a2 = 1, b2 = 1, c2 = 1;  // squared semi-axes for the builtins

  double value(const Vec3& s) const {
    const double env[3] = {s.x, s.y, s.z};
    return expr.eval<double>(std::span<const double>(env, 3));
  }

  static SupportFunction from_text(const std::string& text) {
    SupportFunction H;
    H.expr = Expression::parse(text, {"X", "Y", "Z"});
    H.label = text;
    return H;
  }

  static SupportFunction sphere_body(double R) {
    SupportFunction H = from_text(format_constant(R));
    H.body = Body::sphere;
    H.a2 = H.b2 = H.c2 = R * R;
    return H;
  }

  // Support function of x^2/a2 + y^2/b2 + z^2/c2 = 1; squared axes given.
  static SupportFunction ellipsoid(double a2, double b2, double c2) {
    SupportFunction H = from_text("sqrt(" + format_constant(a2) + "*X^2 + " +
                                  format_constant(b2) + "*Y^2 + " +
                                  format_constant(c2) + "*Z^2)");
    H.body = Body::ellipsoid;
    H.a2 = a2;
    H.b2 = b2;
    H.c2 = c2;
    return H;
  }

 private:
  static std::string format_constant(double v) {
    char buf[40];
    snprintf(buf, sizeof buf, "(%.17g)", v);
    return buf;
  }
};

// 3x3 rotation, row-major.
struct Rot3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Vec3 apply(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Vec3 apply_transposed(const Vec3& v) const {
    return {m[0] * v.x + m[3] * v.y + m[6] * v.z,
            m[1] * v.x + m[4] * v.y + m[7] * v.z,
            m[2] * v.x + m[5] * v.y + m[8] * v.z};
  }
  static Rot3 about_x(double t) {
    double c = std::cos(t), s = std::sin(t);
    return Rot3{{1, 0, 0, 0, c, -s, 0, s, c}};
  }
  static Rot3 about_z(double t) {
    double c = std::cos(t), s = std::sin(t);
    return Rot3{{c, -s, 0, s, c, 0, 0, 0, 1}};
  }
  friend Rot3 operator*(const Rot3& A, const Rot3& B) {
    Rot3 R;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += A.m[3 * i + k] * B.m[3 * k + j];
        R.m[3 * i + j] = s;
      }
    return R;
  }
};

// Stereographic chart (x, y) -> R * phi(x, y) with
//   phi_north = (2x, 2y, r^2 - 1) / (1 + r^2)   (misses the north pole)
//   phi_south = (2x, -2y, 1 - r^2) / (1 + r^2)  (misses the south pole)
// The y-flip in the south chart makes the transition map
// (x, y) -> (x, -y)/r^2 orientation preserving, so chart degrees agree.
// The round metric in either chart is (1/gfac)(dx^2 + dy^2) with
// gfac = (1 + x^2 + y^2)^2 / 4.
struct StereoChart {
  bool north = true;
  Rot3 rot;
  double working_radius = 1.2;

  Vec3 point(double x, double y) const {
    double r2 = x * x + y * y, d = 1.0 + r2;
    Vec3 p = north ? Vec3{2 * x / d, 2 * y / d, (r2 - 1) / d}
                   : Vec3{2 * x / d, -2 * y / d, (1 - r2) / d};
    return rot.apply(p);
  }

  // Chart coordinates of a sphere point; fails near the projection pole.
  Vec2 invert(const Vec3& s) const {
    Vec3 p = rot.apply_transposed(s);
    double denom = north ? 1.0 - p.z : 1.0 + p.z;
    if (denom < 1e-12)
      throw DomainError("point at the chart's projection pole");
    return north ? Vec2{p.x / denom, p.y / denom}
                 : Vec2{p.x / denom, -p.y / denom};
  }

  std::array<DJet, 3> component_jets(double x0, double y0, int order) const {
    DJet X = DJet::variable_x(x0, y0, order);
    DJet Y = DJet::variable_y(x0, y0, order);
    DJet r2 = X * X + Y * Y;
    DJet inv = reciprocal(r2 + 1.0);
    DJet cx = 2.0 * X * inv;
    DJet cy = 2.0 * Y * inv;
    DJet cz = (r2 - 1.0) * inv;
    if (!north) {
      cy = -1.0 * cy;
      cz = -1.0 * cz;
    }
    std::array<DJet, 3> out;
    for (int i = 0; i < 3; ++i)
      out[i] = rot.m[3 * i + 0] * cx + rot.m[3 * i + 1] * cy +
               rot.m[3 * i + 2] * cz;
    return out;
  }
};

inline ScalarField stereo_conformal_factor() {
  return field_from_text("(1 + x^2 + y^2)^2 / 4");
}

inline ScalarField chart_pullback(const SupportFunction& Hs,
                                  const StereoChart& chart,
                                  int max_order = kDefaultMaxOrder) {
  return ScalarField{
      [Hs, chart](double x, double y, int order) {
        auto c = chart.component_jets(x, y, order);
        return Hs.expr.eval<DJet>(std::span<const DJet>(c.data(), 3));
      },
      max_order, Hs.label + "|" + (chart.north ? "N" : "S")};
}

struct Umbilic {
  Vec3 normal;        // point on S^2 (outer normal of the body)
  Vec3 surface_point; // tangency point on the body
  Vec2 chart_center;
  int chart = 0;      // 0 = north, 1 = south
  int degree = 0;
  double half_width = 0;  // certificate size in chart coordinates
};

struct UmbilicResult {
  std::vector<Umbilic> umbilics;
  int degree_sum = 0;         // vector-field degrees, expected 4
  double line_field_sum = 0;  // half-integer reading, expected 2 = chi(S^2)
  long long evaluations = 0;
  std::vector<std::string> warnings;
};

inline Vec3 support_to_surface(const SupportFunction& Hs, Vec3 s);

namespace detail {

// Gaussian elimination with partial pivoting; A is n x n row-major.
inline bool solve_linear(int n, std::vector<double>& A,
                         std::vector<double>& b) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(A[r * n + col]) > std::fabs(A[piv * n + col])) piv = r;
    if (std::fabs(A[piv * n + col]) < 1e-14) return false;
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(A[piv * n + j], A[col * n + j]);
      std::swap(b[piv], b[col]);
    }
    for (int r = col + 1; r < n; ++r) {
      double f = A[r * n + col] / A[col * n + col];
      for (int j = col; j < n; ++j) A[r * n + j] -= f * A[col * n + j];
      b[r] -= f * b[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int j = r + 1; j < n; ++j) s -= A[r * n + j] * b[j];
    b[r] = s / A[r * n + r];
  }
  return true;
}

inline StereoChart umbilic_chart(bool north, const Rot3& R) {
  StereoChart c;
  c.north = north;
  c.rot = R;
  return c;
}

}  // namespace detail

// Locates zeros of the Riemannian defect of the chart pullback in both
// stereographic charts (disks of radius 1.2), stitches on the overlap,
// and reports chart degrees. A boundary zero in either chart triggers a
// rotated retry; SeamZero if every rotation fails.
inline UmbilicResult find_umbilics(const SupportFunction& Hs,
                                   double resolution, double floor = 1e-7,
                                   EvalBudget* budget = nullptr) {
  const Rot3 retries[3] = {Rot3{}, Rot3::about_z(0.7) * Rot3::about_x(0.4),
                           Rot3::about_z(1.9) * Rot3::about_x(1.1)};
  std::string last_failure;
  for (const Rot3& R : retries) {
    UmbilicResult res;
    try {
      ScalarField gf = stereo_conformal_factor();
      PlanarDomain disk(BoundaryCurve::circle({0, 0}, 1.2));
      for (int ci = 0; ci < 2; ++ci) {
        StereoChart chart = detail::umbilic_chart(ci == 0, R);
        ScalarField h = chart_pullback(Hs, chart);
        VectorField V = riemannian_defect(h, gf);
        LocateResult loc = locate_zeros(V, disk, resolution, floor, budget);
        res.evaluations += loc.evaluations;
        for (const auto& w : loc.warnings) res.warnings.push_back(w);
        for (const auto& cert : loc.certificates) {
          Umbilic u;
          Vec2 ctr = cert.polished_ok ? cert.polished : cert.center;
          u.normal = chart.point(ctr.x, ctr.y);
          u.surface_point = support_to_surface(Hs, u.normal);
          u.chart_center = ctr;
          u.chart = ci;
          u.degree = cert.degree;
          u.half_width = cert.half_width;
          res.umbilics.push_back(u);
        }
      }
    } catch (const FieldVanishesOnCurve& e) {
      // Zero on (or unresolvable near) a chart seam: rotate and retry.
      last_failure = e.what();
      continue;
    }
    // Deduplicate zeros seen from both charts on the overlap annulus.
    std::vector<Umbilic> kept;
    for (const Umbilic& u : res.umbilics) {
      bool dup = false;
      for (Umbilic& v : kept) {
        if ((u.normal - v.normal).norm() < 2.0 * resolution) {
          dup = true;
          if (u.chart_center.norm() < v.chart_center.norm()) v = u;
        }
      }
      if (!dup) kept.push_back(u);
    }
    res.umbilics = std::move(kept);
    res.degree_sum = 0;
    for (const Umbilic& u : res.umbilics) res.degree_sum += u.degree;
    res.line_field_sum = 0.5 * res.degree_sum;
    return res;
  }
  throw SeamZero("defect zero pinned to the chart seam after rotations: " +
                 last_failure);
}

// Gradient of the 1-homogeneous extension |p| Hs(p/|p|) at s in S^2:
// Hs(s) s plus the spherical gradient assembled through a chart.
inline Vec3 support_to_surface(const SupportFunction& Hs, Vec3 s) {
  s = s.normalized();
  StereoChart chart;
  chart.north = s.z <= 0.0;  // keep s away from the projection pole
  Vec2 q = chart.invert(s);
  auto c = chart.component_jets(q.x, q.y, 1);
  const double env[3] = {c[0].value(), c[1].value(), c[2].value()};
  double h = Hs.expr.eval<double>(std::span<const double>(env, 3));
  DJet hj = Hs.expr.eval<DJet>(std::span<const DJet>(c.data(), 3));
  double g = (1.0 + q.x * q.x + q.y * q.y);
  g = g * g / 4.0;  // conformal factor: metric is (1/g)(dx^2 + dy^2)
  // grad_{S^2} Hs = dPhi * (g h_x, g h_y)
  Vec3 dx{c[0].d(1, 0), c[1].d(1, 0), c[2].d(1, 0)};
  Vec3 dy{c[0].d(0, 1), c[1].d(0, 1), c[2].d(0, 1)};
  return s * h + dx * (g * hj.d(1, 0)) + dy * (g * hj.d(0, 1));
}

// |k1 - k2| at support_to_surface(s) from the implicit-surface shape
// operator; only the builtin bodies carry implicit data.
inline double principal_gap_oracle(const SupportFunction& Hs, Vec3 s) {
  if (Hs.body == SupportFunction::Body::sphere) return 0.0;
  if (Hs.body != SupportFunction::Body::ellipsoid)
    throw DomainError("principal_gap_oracle needs an implicit builtin body");
  Vec3 p = support_to_surface(Hs, s);
  // F = x^2/a2 + y^2/b2 + z^2/c2 - 1; Hess F / |grad F| projected to the
  // tangent plane gives the Weingarten map.
  Vec3 grad{2 * p.x / Hs.a2, 2 * p.y / Hs.b2, 2 * p.z / Hs.c2};
  double gn = grad.norm();
  if (gn < 1e-12) throw DomainError("degenerate implicit gradient");
  Vec3 n = grad * (1.0 / gn);
  // Orthonormal tangent basis.
  Vec3 seed = std::fabs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 t1 = n.cross(seed).normalized();
  Vec3 t2 = n.cross(t1);
  auto hess_apply = [&](const Vec3& v) {
    return Vec3{2 * v.x / Hs.a2, 2 * v.y / Hs.b2, 2 * v.z / Hs.c2};
  };
  double m11 = t1.dot(hess_apply(t1)) / gn;
  double m12 = t1.dot(hess_apply(t2)) / gn;
  double m22 = t2.dot(hess_apply(t2)) / gn;
  // Eigenvalue gap of the symmetric 2x2 [[m11, m12], [m12, m22]].
  return std::sqrt((m11 - m22) * (m11 - m22) + 4.0 * m12 * m12);
}

// Best first spherical harmonic d + aX + bY + cZ matching the 1-jet of Hs
// at s in the chart; returns the norm of the second-derivative mismatch.
// Zero exactly at umbilics (the §-free statement: the 2-jet of the support
// function at a conformal point is the 2-jet of a first harmonic).
inline double first_harmonic_defect(const SupportFunction& Hs, Vec3 s) {
  s = s.normalized();
  StereoChart chart;
  chart.north = s.z <= 0.0;
  Vec2 q = chart.invert(s);
  auto c = chart.component_jets(q.x, q.y, 2);
  DJet hj = Hs.expr.eval<DJet>(std::span<const DJet>(c.data(), 2 + 1));

  // Basis jets of (1, X, Y, Z) in the chart.
  DJet one = DJet::constant(1.0, 2, q.x, q.y);
  const DJet* basis[4] = {&one, &c[0], &c[1], &c[2]};
  const int cons[3][2] = {{0, 0}, {1, 0}, {0, 1}};  // exact 1-jet match
  const int mins[3][2] = {{2, 0}, {1, 1}, {0, 2}};  // least-squares part

  // KKT system for min ||B w - t||^2 subject to A w = b, unknowns
  // (w, lambda) with w = (d, a, b, c).
  const int n = 7;
  std::vector<double> M(n * n, 0.0), rhs(n, 0.0);
  double A[3][4], B[3][4], bvec[3], tvec[3];
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 4; ++k) {
      A[r][k] = basis[k]->d(cons[r][0], cons[r][1]);
      B[r][k] = basis[k]->d(mins[r][0], mins[r][1]);
    }
  for (int r = 0; r < 3; ++r) {
    bvec[r] = hj.d(cons[r][0], cons[r][1]);
    tvec[r] = hj.d(mins[r][0], mins[r][1]);
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j)
      for (int r = 0; r < 3; ++r) M[i * n + j] += B[r][i] * B[r][j];
    for (int r = 0; r < 3; ++r) {
      M[i * n + 4 + r] = A[r][i];
      M[(4 + r) * n + i] = A[r][i];
      rhs[i] += B[r][i] * tvec[r];
    }
  }
  for (int r = 0; r < 3; ++r) rhs[4 + r] = bvec[r];
  if (!detail::solve_linear(n, M, rhs))
    throw DomainError("degenerate first-harmonic fit");
  double res2 = 0.0;
  for (int r = 0; r < 3; ++r) {
    double v = -tvec[r];
    for (int k = 0; k < 4; ++k) v += B[r][k] * rhs[k];
    res2 += v * v;
  }
  return std::sqrt(res2);
}

}  // namespace conformal
