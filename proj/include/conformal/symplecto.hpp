#pragma once

// Graph coordinates on C^2, moderateness and transversality checks,
// midpoint-map machinery, generating-function recovery, the derivative
// relations, and the conformal-point count for moderate symplectomorphisms.

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "conformal/errors.hpp"
#include "conformal/fields.hpp"
#include "conformal/geometry.hpp"
#include "conformal/index.hpp"
#include "conformal/quadrature.hpp"

namespace conformal {

// L: (z1, z2) -> (w1, w2), w1 = (z1 + z2)/2, w2 = i (z1 - z2).
struct GraphPoint {
  Vec2 z1, z2, w1, w2;
};

inline GraphPoint graph_transform(Vec2 z1, Vec2 z2) {
  GraphPoint g;
  g.z1 = z1;
  g.z2 = z2;
  g.w1 = (z1 + z2) * 0.5;
  g.w2 = {-(z1.y - z2.y), z1.x - z2.x};
  return g;
}

inline std::pair<Vec2, Vec2> graph_inverse(Vec2 w1, Vec2 w2) {
  // z1 - z2 = -i w2 = (v2, -u2).
  Vec2 d{w2.y, -w2.x};
  return {w1 + d * 0.5, w1 - d * 0.5};
}

namespace detail {

inline double det4(double m[4][4]) {
  double a[4][4];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a[i][j] = m[i][j];
  double det = 1.0;
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (std::fabs(a[piv][col]) < 1e-300) return 0.0;
    if (piv != col) {
      for (int j = 0; j < 4; ++j) std::swap(a[piv][j], a[col][j]);
      det = -det;
    }
    det *= a[col][col];
    for (int r = col + 1; r < 4; ++r) {
      double f = a[r][col] / a[col][col];
      for (int j = col; j < 4; ++j) a[r][j] -= f * a[col][j];
    }
  }
  return det;
}

}  // namespace detail

// Residual of the 4x4 pullback identity J^T M(Omega2) J = M(Omega1) for
// the linear map L; exact up to rounding.
inline double graph_pullback_identity_residual() {
  // Basis (x1, y1, x2, y2) upstairs, (u1, v1, u2, v2) downstairs.
  double J[4][4] = {{0.5, 0, 0.5, 0},
                    {0, 0.5, 0, 0.5},
                    {0, -1, 0, 1},
                    {1, 0, -1, 0}};
  double M1[4][4] = {{0, 1, 0, 0},
                     {-1, 0, 0, 0},
                     {0, 0, 0, -1},
                     {0, 0, 1, 0}};
  double M2[4][4] = {{0, 0, -1, 0},
                     {0, 0, 0, -1},
                     {1, 0, 0, 0},
                     {0, 1, 0, 0}};
  double r = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) s += J[k][i] * M2[k][l] * J[l][j];
      r = std::fmax(r, std::fabs(s - M1[i][j]));
    }
  return r;
}

struct ModeratenessResult {
  double min_value = 0;  // min |2 + f_x + g_y|
  Vec2 witness;
  bool moderate = false;
};

// Dense-sample minimum of |2 + f_x + g_y| over D plus a local pattern
// search from the worst sample.
inline ModeratenessResult moderateness(const PlanarMap& F,
                                       const PlanarDomain& D,
                                       int samples = 64,
                                       double threshold = 1e-6) {
  auto val = [&](Vec2 p) {
    Mat2 J = F.jacobian(p);
    return std::fabs(2.0 + J.a + J.d);
  };
  Vec2 lo = D.bounding_box_min(), hi = D.bounding_box_max();
  ModeratenessResult r;
  r.min_value = 1e300;
  for (int i = 0; i < samples; ++i)
    for (int j = 0; j < samples; ++j) {
      Vec2 p{lo.x + (hi.x - lo.x) * (i + 0.5) / samples,
             lo.y + (hi.y - lo.y) * (j + 0.5) / samples};
      if (!D.inside(p)) continue;
      double v = val(p);
      if (v < r.min_value) {
        r.min_value = v;
        r.witness = p;
      }
    }
  // Pattern-search refinement around the worst sample.
  double step = (hi.x - lo.x) / samples;
  Vec2 p = r.witness;
  for (int it = 0; it < 60; ++it) {
    bool improved = false;
    const Vec2 dirs[4] = {{step, 0}, {-step, 0}, {0, step}, {0, -step}};
    for (const Vec2& d : dirs) {
      Vec2 q = p + d;
      if (!D.inside(q)) continue;
      double v = val(q);
      if (v < r.min_value) {
        r.min_value = v;
        r.witness = q;
        p = q;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
    if (step < 1e-9) break;
  }
  r.moderate = r.min_value > threshold;
  return r;
}

// max over probes of |det(4x4 transversality matrix) - (2 + f_x + g_y)|.
inline double transversality_determinant_check(
    const PlanarMap& F, const std::vector<Vec2>& probes,
    double symplectic_tol = 1e-8) {
  double worst = 0.0;
  for (const Vec2& p : probes) {
    Mat2 J = F.jacobian(p);
    if (std::fabs(J.det() - 1.0) > symplectic_tol)
      throw NotSymplecticAtProbe("|det dF - 1| = " +
                                 std::to_string(std::fabs(J.det() - 1.0)) +
                                 " at (" + std::to_string(p.x) + ", " +
                                 std::to_string(p.y) + ")");
    double m[4][4] = {{1, 0, J.a, J.c},
                      {0, 1, J.b, J.d},
                      {1, 0, -1, 0},
                      {0, 1, 0, -1}};
    worst = std::fmax(worst,
                      std::fabs(detail::det4(m) - (2.0 + J.a + J.d)));
  }
  return worst;
}

// Determinant of the transversality matrix for a raw Jacobian (no
// symplecticity gate); used for the shear counterexample.
inline double transversality_determinant(const Mat2& J) {
  double m[4][4] = {{1, 0, J.a, J.c},
                    {0, 1, J.b, J.d},
                    {1, 0, -1, 0},
                    {0, 1, 0, -1}};
  return detail::det4(m);
}

// Midpoint map m(z) = (z + F(z))/2 with damped-Newton inversion.
class MidpointMap {
 public:
  explicit MidpointMap(const PlanarMap& F) : F_(F) {}

  Vec2 forward(const Vec2& p) const { return (p + F_.apply(p)) * 0.5; }
  Mat2 jacobian(const Vec2& p) const {
    return (Mat2::identity() + F_.jacobian(p)).scaled(0.5);
  }

  Vec2 inverse(const Vec2& w, double tol = 1e-12) const {
    Vec2 p = w;  // moderateness guarantees local invertibility near w
    for (int it = 0; it < 60; ++it) {
      Vec2 r = forward(p) - w;
      if (r.norm() < tol) return p;
      Mat2 J = jacobian(p);
      if (std::fabs(J.det()) < 1e-12)
        throw NewtonDivergence(w.x, w.y, "singular midpoint Jacobian");
      Vec2 step = J.inverse().apply(r);
      double lambda = 1.0;
      double base = r.norm();
      for (int damp = 0; damp < 8; ++damp) {
        Vec2 cand = p - step * lambda;
        if ((forward(cand) - w).norm() < base) {
          p = cand;
          break;
        }
        lambda *= 0.5;
        if (damp == 7)
          throw NewtonDivergence(w.x, w.y, "no descent in midpoint Newton");
      }
    }
    throw NewtonDivergence(w.x, w.y, "midpoint Newton did not converge");
  }

 private:
  PlanarMap F_;
};

struct MidpointDiagnostics {
  bool image_in_domain = true;
  bool injective = true;
  bool invertible = true;
  std::vector<std::string> violations;
};

inline MidpointDiagnostics midpoint_diagnostics(const PlanarMap& F,
                                                const PlanarDomain& D,
                                                int grid = 24) {
  MidpointDiagnostics rep;
  MidpointMap m(F);
  Vec2 lo = D.bounding_box_min(), hi = D.bounding_box_max();
  double diam = D.diameter();

  std::vector<Vec2> sources, mids;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      Vec2 p{lo.x + (hi.x - lo.x) * (i + 0.5) / grid,
             lo.y + (hi.y - lo.y) * (j + 0.5) / grid};
      if (!D.inside(p)) continue;
      sources.push_back(p);
      mids.push_back(m.forward(p));
    }

  // (a) midpoints stay in the closed domain (small collar tolerance).
  for (std::size_t i = 0; i < mids.size(); ++i) {
    if (!D.inside(mids[i])) {
      // allow points within a hair of the boundary
      double d = 1e300;
      for (int k = 0; k < 256; ++k) {
        Vec2 bp = D.boundary().point_at_tau(k / 256.0);
        d = std::fmin(d, (bp - mids[i]).norm());
      }
      if (d > 1e-6 * diam) {
        rep.image_in_domain = false;
        rep.violations.push_back("midpoint image left the domain at source (" +
                                 std::to_string(sources[i].x) + ", " +
                                 std::to_string(sources[i].y) + ")");
      }
    }
  }

  // (b) injectivity on the sample grid: close midpoints with far sources.
  double delta = diam / grid;
  for (std::size_t i = 0; i < mids.size(); ++i)
    for (std::size_t j = i + 1; j < mids.size(); ++j) {
      if ((mids[i] - mids[j]).norm() < 0.1 * delta &&
          (sources[i] - sources[j]).norm() > 10.0 * delta) {
        rep.injective = false;
        rep.violations.push_back("midpoint collision between distant sources");
      }
    }

  // (c) Newton inversion from every probe.
  for (std::size_t i = 0; i < mids.size(); ++i) {
    try {
      Vec2 back = m.inverse(mids[i]);
      if ((back - sources[i]).norm() > 1e-8 * (1.0 + diam)) {
        rep.invertible = false;
        rep.violations.push_back("midpoint inversion returned a wrong branch");
      }
    } catch (const NewtonDivergence&) {
      rep.invertible = false;
      rep.violations.push_back("midpoint Newton failed at (" +
                               std::to_string(mids[i].x) + ", " +
                               std::to_string(mids[i].y) + ")");
    }
  }
  return rep;
}

// H(u, v) with dH the Lagrangian graph of F in midpoint coordinates:
// H_u = g(x, y) - y, H_v = x - f(x, y) through the inverse midpoint map.
class GeneratingFunction {
 public:
  GeneratingFunction(const PlanarMap& F, const PlanarDomain& D, Vec2 base,
                     double quad_tol = 1e-10)
      : F_(F), m_(F_), base_(base), quad_tol_(quad_tol) {}

  Vec2 grad(const Vec2& w) const {
    Vec2 p = m_.inverse(w);
    return {F_.g.value(p.x, p.y) - p.y, p.x - F_.f.value(p.x, p.y)};
  }

  // (H_uu, H_uv, H_vv) by the chain rule through the midpoint inverse;
  // the two off-diagonal estimates are averaged and their gap is the
  // pointwise closedness residual.
  struct Hessian {
    double uu, uv, vv;
    double curl;  // |d_v H_u - d_u H_v|
  };
  Hessian hessian(const Vec2& w) const {
    Vec2 p = m_.inverse(w);
    Mat2 J = F_.jacobian(p);
    Mat2 Minv = (Mat2::identity() + J).scaled(0.5).inverse();
    // row vectors (d_x, d_y) of H_u = g - y and H_v = x - f
    double hu_x = J.c, hu_y = J.d - 1.0;
    double hv_x = 1.0 - J.a, hv_y = -J.b;
    double uu = hu_x * Minv.a + hu_y * Minv.c;
    double uv1 = hu_x * Minv.b + hu_y * Minv.d;  // d_v H_u
    double uv2 = hv_x * Minv.a + hv_y * Minv.c;  // d_u H_v
    double vv = hv_x * Minv.b + hv_y * Minv.d;
    return {uu, 0.5 * (uv1 + uv2), vv, std::fabs(uv1 - uv2)};
  }

  // Quadrature along the axis-aligned staircase base -> (w.x, base.y) -> w,
  // normalized by H(base) = 0.
  double value(const Vec2& w) const {
    double h = integrate_adaptive(
        [&](double x) { return grad({x, base_.y}).x; }, base_.x, w.x,
        quad_tol_);
    h += integrate_adaptive([&](double y) { return grad({w.x, y}).y; },
                            base_.y, w.y, quad_tol_);
    return h;
  }

  Vec2 base() const { return base_; }
  double closedness_residual() const { return closedness_residual_; }
  double boundary_grad_sup() const { return boundary_grad_sup_; }
  void set_diagnostics(double closedness, double boundary_grad) {
    closedness_residual_ = closedness;
    boundary_grad_sup_ = boundary_grad;
  }

 private:
  PlanarMap F_;
  MidpointMap m_;
  Vec2 base_;
  double quad_tol_;
  double closedness_residual_ = 0.0;
  double boundary_grad_sup_ = 0.0;
};

inline double boundary_identity_residual(const PlanarMap& F,
                                         const PlanarDomain& D,
                                         const GeneratingFunction& G,
                                         int probes = 64);

namespace detail {

inline void check_identity_on_boundary(const PlanarMap& F,
                                       const PlanarDomain& D,
                                       double tol = 1e-8, int probes = 64) {
  for (int i = 0; i < probes; ++i) {
    Vec2 p = D.boundary().point_at_tau(double(i) / probes);
    double d = (F.apply(p) - p).norm();
    if (d > tol)
      throw Error("NotIdentityOnBoundary",
                  "|F(gamma) - gamma| = " + std::to_string(d));
  }
}

}  // namespace detail

inline GeneratingFunction recover_generating_function(
    const PlanarMap& F, const PlanarDomain& D, Vec2 base,
    double quad_tol = 1e-10, double closedness_tol = 1e-5) {
  auto mod = moderateness(F, D, 32);
  if (!mod.moderate)
    throw Error("NotModerate",
                "min |2 + f_x + g_y| = " + std::to_string(mod.min_value));
  detail::check_identity_on_boundary(F, D);

  GeneratingFunction G(F, D, base, quad_tol);

  // Closedness over interior probes; a violation signals a
  // non-symplectic input.
  Vec2 lo = D.bounding_box_min(), hi = D.bounding_box_max();
  double closedness = 0.0;
  const int g = 12;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      Vec2 w{lo.x + (hi.x - lo.x) * (i + 0.5) / g,
             lo.y + (hi.y - lo.y) * (j + 0.5) / g};
      if (!D.inside(w)) continue;
      closedness = std::fmax(closedness, G.hessian(w).curl);
    }
  if (closedness > closedness_tol)
    throw ClosednessViolation("sup |d_v H_u - d_u H_v| = " +
                              std::to_string(closedness));

  double bsup = 0.0;
  for (int i = 0; i < 64; ++i) {
    Vec2 p = D.boundary().point_at_tau(i / 64.0);
    // On the boundary the midpoint map is the identity.
    bsup = std::fmax(bsup, G.grad(p).norm());
  }
  G.set_diagnostics(closedness, bsup);
  return G;
}

// On the boundary the proof gives (f_y + g_x, g_y - f_x) =
// (H_uu - H_vv, 2 H_uv); returns the sup-norm gap over probes.
inline double boundary_identity_residual(const PlanarMap& F,
                                         const PlanarDomain& D,
                                         const GeneratingFunction& G,
                                         int probes) {
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    Vec2 p = D.boundary().point_at_tau(double(i) / probes);
    Mat2 J = F.jacobian(p);
    auto h = G.hessian(p);
    worst = std::fmax(worst, std::fabs((J.b + J.c) - (h.uu - h.vv)));
    worst = std::fmax(worst, std::fabs((J.d - J.a) - 2.0 * h.uv));
  }
  return worst;
}

struct MapConformalResult {
  LocateResult zeros;  // certificates in (u, v) coordinates
  double boundary_identity = 0.0;
  double closedness_residual = 0.0;
  double moderateness_min = 0.0;
};

// The packed field V(u,v) = ((f_x - g_y), (f_y + g_x)) composed with the
// inverse midpoint map; winding along the boundary plus interior degree
// certificates.
inline MapConformalResult conformal_points_of_map(
    const PlanarMap& F, const PlanarDomain& D, double resolution,
    double floor, double boundary_identity_tol = 1e-4,
    EvalBudget* budget = nullptr) {
  auto mod = moderateness(F, D, 32);
  if (!mod.moderate)
    throw Error("NotModerate",
                "min |2 + f_x + g_y| = " + std::to_string(mod.min_value));
  detail::check_identity_on_boundary(F, D);

  MidpointMap m(F);
  VectorField V;
  V.label = "packed[" + F.label + "]";
  V.value = [F, m](Vec2 w) {
    Vec2 p = m.inverse(w);
    Mat2 J = F.jacobian(p);
    return Vec2{J.a - J.d, J.b + J.c};
  };
  V.jacobian = detail::fd_jacobian(V.value);
  V.jacobian_is_fd = true;

  MapConformalResult res;
  res.moderateness_min = mod.min_value;

  GeneratingFunction G = recover_generating_function(F, D, Vec2{0, 0});
  res.closedness_residual = G.closedness_residual();
  res.boundary_identity = boundary_identity_residual(F, D, G, 64);
  if (res.boundary_identity > boundary_identity_tol)
    throw BoundaryIdentityViolation("residual " +
                                    std::to_string(res.boundary_identity));

  res.zeros = locate_zeros(V, D, resolution, floor, budget);
  return res;
}

// Max residual of the four derivative relations
//   f_x (4 - H_uv^2 + H_uu H_vv) = 4 + H_uv^2 - H_uu H_vv - 4 H_uv
//   f_y (...) = -4 H_vv,  g_x (...) = 4 H_uu
//   g_y (...) = 4 + H_uv^2 - H_uu H_vv + 4 H_uv
// with (u,v) obtained from (x,y) by the midpoint map.
template <class HessianFn>
double derivative_relations_residual(const PlanarMap& F, HessianFn&& hess,
                                     const std::vector<Vec2>& probes) {
  MidpointMap m(F);
  double worst = 0.0;
  for (const Vec2& p : probes) {
    Vec2 w = m.forward(p);
    auto [huu, huv, hvv] = hess(w);
    double denom = 4.0 - huv * huv + huu * hvv;
    if (std::fabs(denom) < 1e-8)
      throw DegenerateDenominator("4 - H_uv^2 + H_uu H_vv = " +
                                  std::to_string(denom));
    Mat2 J = F.jacobian(p);
    double s = huv * huv - huu * hvv;
    worst = std::fmax(worst, std::fabs(J.a * denom - (4.0 + s - 4.0 * huv)));
    worst = std::fmax(worst, std::fabs(J.b * denom - (-4.0 * hvv)));
    worst = std::fmax(worst, std::fabs(J.c * denom - 4.0 * huu));
    worst = std::fmax(worst, std::fabs(J.d * denom - (4.0 + s + 4.0 * huv)));
  }
  return worst;
}

// Consistency mode: zeros of the raw defect (f_x - g_y, f_y + g_x) in
// (x, y), pushed through the midpoint map, must biject with the packed
// certificates within `resolution`.
struct PackedRawConsistency {
  bool bijection = false;
  double max_mismatch = 0.0;  // worst matched-pair distance in (u, v)
  std::size_t raw_count = 0, packed_count = 0;
};

inline PackedRawConsistency packed_vs_raw_consistency(
    const PlanarMap& F, const PlanarDomain& D, double resolution,
    double floor, const LocateResult& packed) {
  LocateResult raw = locate_zeros(map_conformal_defect(F), D, resolution,
                                  floor);
  MidpointMap m(F);
  PackedRawConsistency out;
  out.raw_count = raw.certificates.size();
  out.packed_count = packed.certificates.size();
  if (out.raw_count != out.packed_count) return out;
  std::vector<bool> used(out.packed_count, false);
  out.bijection = true;
  for (const auto& rc : raw.certificates) {
    Vec2 w = m.forward(rc.polished_ok ? rc.polished : rc.center);
    double best = 1e300;
    int best_i = -1;
    for (std::size_t i = 0; i < packed.certificates.size(); ++i) {
      if (used[i]) continue;
      const auto& pc = packed.certificates[i];
      double d = ((pc.polished_ok ? pc.polished : pc.center) - w).norm();
      if (d < best) {
        best = d;
        best_i = int(i);
      }
    }
    // Unpolished centers are only box centers; allow the combined box size.
    double tol = resolution +
                 2.0 * (rc.half_width + packed.certificates[best_i].half_width);
    if (best_i < 0 || best > tol) {
      out.bijection = false;
      return out;
    }
    used[best_i] = true;
    out.max_mismatch = std::fmax(out.max_mismatch, best);
  }
  return out;
}

inline double derivative_relations_check(const GeneratingFunction& G,
                                         const PlanarMap& F,
                                         const std::vector<Vec2>& probes) {
  return derivative_relations_residual(
      F,
      [&](Vec2 w) {
        auto h = G.hessian(w);
        return std::array<double, 3>{h.uu, h.uv, h.vv};
      },
      probes);
}

inline double derivative_relations_check(const ScalarField& H,
                                         const PlanarMap& F,
                                         const std::vector<Vec2>& probes) {
  return derivative_relations_residual(
      F,
      [&](Vec2 w) {
        DJet j = H.jet(w.x, w.y, 2);
        return std::array<double, 3>{j.d(2, 0), j.d(1, 1), j.d(0, 2)};
      },
      probes);
}

// Builds F from a generating function by Newton on the graph relations
// 2x = 2u + H_v, 2y = 2v - H_u; then f = 2u - x, g = 2v - y.
inline PlanarMap map_from_generating_function(const ScalarField& H) {
  if (H.max_order < 2)
    throw OrderTooLow("map_from_generating_function needs H order >= 2");
  auto solve_uv = [H](double x, double y) {
    Vec2 w{x, y};
    for (int it = 0; it < 60; ++it) {
      DJet j = H.jet(w.x, w.y, 2);
      Vec2 r{2 * w.x + j.d(0, 1) - 2 * x, 2 * w.y - j.d(1, 0) - 2 * y};
      if (r.norm() < 1e-13) break;
      Mat2 Jg{2 + j.d(1, 1), j.d(0, 2), -j.d(2, 0), 2 - j.d(1, 1)};
      if (std::fabs(Jg.det()) < 1e-12)
        throw NewtonDivergence(x, y, "singular graph-relation Jacobian");
      w = w - Jg.inverse().apply(r);
    }
    return w;
  };
  auto component = [solve_uv, H](int comp) {
    return [solve_uv, H, comp](double x, double y, int order) {
      Vec2 w = solve_uv(x, y);
      DJet jH = H.jet(w.x, w.y, 2);
      DJet j(order, x, y);
      j.at(0, 0) = comp == 0 ? 2 * w.x - x : 2 * w.y - y;
      if (order >= 1) {
        Mat2 Jg{2 + jH.d(1, 1), jH.d(0, 2), -jH.d(2, 0), 2 - jH.d(1, 1)};
        Mat2 dw = Jg.inverse().scaled(2.0);  // d(u,v)/d(x,y)
        if (comp == 0) {
          j.at(1, 0) = 2 * dw.a - 1;
          j.at(0, 1) = 2 * dw.b;
        } else {
          j.at(1, 0) = 2 * dw.c;
          j.at(0, 1) = 2 * dw.d - 1;
        }
      }
      if (order >= 2)
        throw OrderTooLow("generated map jets available up to order 1");
      return j;
    };
  };
  PlanarMap F;
  F.label = "graph[" + H.label + "]";
  F.f = ScalarField{component(0), 1, F.label + ".f"};
  F.g = ScalarField{component(1), 1, F.label + ".g"};
  F.symplectic_claimed = true;
  return F;
}

}  // namespace conformal
