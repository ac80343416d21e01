#pragma once

// Scalar fields, planar maps, and the derived vector fields: the
// Hamiltonian field X_H, the conformal defect V, the Loewner fields V_n,
// the Riemannian defect, and the map defect.

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "conformal/expr.hpp"
#include "conformal/geometry.hpp"
#include "conformal/jet.hpp"

namespace conformal {

// A differentiable scalar function of two variables, queried for jets.
struct ScalarField {
  std::function<DJet(double, double, int)> evaluator;
  int max_order = kDefaultMaxOrder;
  std::string label;

  DJet jet(double x, double y, int order) const {
    if (order > max_order)
      throw OrderTooLow("field '" + label + "' supports order " +
                        std::to_string(max_order) + ", requested " +
                        std::to_string(order));
    return evaluator(x, y, order);
  }
  DJet jet(const Vec2& p, int order) const { return jet(p.x, p.y, order); }
  double value(double x, double y) const { return jet(x, y, 0).value(); }
};

inline ScalarField field_from_expression(const Expression& e,
                                         std::string label = "",
                                         int max_order = kDefaultMaxOrder) {
  if (label.empty()) label = e.str();
  return ScalarField{
      [e, max_order](double x, double y, int order) {
        return eval_jet(e, x, y, order, max_order);
      },
      max_order, std::move(label)};
}

inline ScalarField field_from_text(const std::string& text,
                                   const std::string& vx = "x",
                                   const std::string& vy = "y",
                                   int max_order = kDefaultMaxOrder) {
  return field_from_expression(Expression::parse(text, vx, vy), text,
                               max_order);
}

// A pair F = (f, g).  When `symplectic_claimed` is set, every Jacobian
// query records the residual |f_x g_y - f_y g_x - 1|; the largest one seen
// is available for certified runs.
struct PlanarMap {
  ScalarField f, g;
  bool symplectic_claimed = false;
  std::shared_ptr<double> worst_symplectic_residual =
      std::make_shared<double>(0.0);
  std::string label;

  Vec2 apply(const Vec2& p) const {
    return {f.value(p.x, p.y), g.value(p.x, p.y)};
  }
  Mat2 jacobian(const Vec2& p) const {
    DJet jf = f.jet(p.x, p.y, 1), jg = g.jet(p.x, p.y, 1);
    Mat2 J{jf.d(1, 0), jf.d(0, 1), jg.d(1, 0), jg.d(0, 1)};
    if (symplectic_claimed) {
      double r = std::fabs(J.det() - 1.0);
      if (r > *worst_symplectic_residual) *worst_symplectic_residual = r;
    }
    return J;
  }
};

struct VectorField {
  std::function<Vec2(Vec2)> value;
  std::function<Mat2(Vec2)> jacobian;
  bool jacobian_is_fd = false;  // finite-difference fallback in use
  std::string label;

  Vec2 operator()(const Vec2& p) const { return value(p); }
};

namespace detail {

inline std::function<Mat2(Vec2)> fd_jacobian(std::function<Vec2(Vec2)> v) {
  return [v = std::move(v)](Vec2 p) {
    double h = 1e-6 * std::fmax(1.0, std::fmax(std::fabs(p.x), std::fabs(p.y)));
    Vec2 fx = (v({p.x + h, p.y}) - v({p.x - h, p.y})) / (2 * h);
    Vec2 fy = (v({p.x, p.y + h}) - v({p.x, p.y - h})) / (2 * h);
    return Mat2{fx.x, fy.x, fx.y, fy.y};
  };
}

}  // namespace detail

// X_H = H_y dx - H_x dy.
inline VectorField hamiltonian_field(const ScalarField& H) {
  if (H.max_order < 2)
    throw OrderTooLow("hamiltonian_field needs order >= 2");
  VectorField V;
  V.label = "X_H[" + H.label + "]";
  V.value = [H](Vec2 p) {
    DJet j = H.jet(p.x, p.y, 1);
    return Vec2{j.d(0, 1), -j.d(1, 0)};
  };
  V.jacobian = [H](Vec2 p) {
    DJet j = H.jet(p.x, p.y, 2);
    return Mat2{j.d(1, 1), j.d(0, 2), -j.d(2, 0), -j.d(1, 1)};
  };
  return V;
}

// V = (H_yy - H_xx, -2 H_xy); zeros are the conformal points of X_H.
inline VectorField conformal_defect(const ScalarField& H) {
  if (H.max_order < 2)
    throw OrderTooLow("conformal_defect needs order >= 2");
  VectorField V;
  V.label = "V[" + H.label + "]";
  V.value = [H](Vec2 p) {
    DJet j = H.jet(p.x, p.y, 2);
    return Vec2{j.d(0, 2) - j.d(2, 0), -2.0 * j.d(1, 1)};
  };
  if (H.max_order >= 3) {
    V.jacobian = [H](Vec2 p) {
      DJet j = H.jet(p.x, p.y, 3);
      return Mat2{j.d(1, 2) - j.d(3, 0), j.d(0, 3) - j.d(2, 1),
                  -2.0 * j.d(2, 1), -2.0 * j.d(1, 2)};
    };
  } else {
    V.jacobian = detail::fd_jacobian(V.value);
    V.jacobian_is_fd = true;
  }
  return V;
}

namespace detail {

// Components of (dx + i dy)^n H from one order-n jet:
// sum_k C(n,k) i^k d_x^{n-k} d_y^k H, split into real and imaginary parts.
inline Vec2 cauchy_riemann_power(const DJet& j, int n, int extra_dx,
                                 int extra_dy) {
  double re = 0.0, im = 0.0;
  for (int k = 0; k <= n; ++k) {
    double c = binom(n, k) * j.d(n - k + extra_dx, k + extra_dy);
    switch (k % 4) {
      case 0: re += c; break;
      case 1: im += c; break;
      case 2: re -= c; break;
      case 3: im -= c; break;
    }
  }
  return {re, im};
}

}  // namespace detail

inline VectorField loewner_field(const ScalarField& H, int n) {
  if (n < 1) throw OrderTooLow("loewner_field needs n >= 1");
  if (H.max_order < n)
    throw OrderTooLow("loewner_field V_" + std::to_string(n) +
                      " needs field order >= " + std::to_string(n));
  VectorField V;
  V.label = "V_" + std::to_string(n) + "[" + H.label + "]";
  V.value = [H, n](Vec2 p) {
    return detail::cauchy_riemann_power(H.jet(p.x, p.y, n), n, 0, 0);
  };
  if (H.max_order >= n + 1) {
    V.jacobian = [H, n](Vec2 p) {
      DJet j = H.jet(p.x, p.y, n + 1);
      Vec2 cx = detail::cauchy_riemann_power(j, n, 1, 0);
      Vec2 cy = detail::cauchy_riemann_power(j, n, 0, 1);
      return Mat2{cx.x, cy.x, cx.y, cy.y};
    };
  } else {
    V.jacobian = detail::fd_jacobian(V.value);
    V.jacobian_is_fd = true;
  }
  return V;
}

// ((g H_y)_y - (g H_x)_x, -(g H_x)_y - (g H_y)_x), expanded by the product
// rule from separate jets of H and the conformal factor.
inline VectorField riemannian_defect(const ScalarField& H,
                                     const ScalarField& gfac) {
  if (H.max_order < 2 || gfac.max_order < 2)
    throw OrderTooLow("riemannian_defect needs order >= 2 on both fields");
  VectorField V;
  V.label = "Vg[" + H.label + "]";
  V.value = [H, gfac](Vec2 p) {
    DJet h = H.jet(p.x, p.y, 2);
    DJet g = gfac.jet(p.x, p.y, 2);
    if (!(g.value() > 0.0))
      throw NonpositiveConformalFactor("g = " + std::to_string(g.value()));
    double c1 = g.d(0, 1) * h.d(0, 1) + g.value() * h.d(0, 2) -
                g.d(1, 0) * h.d(1, 0) - g.value() * h.d(2, 0);
    double c2 = -(g.d(0, 1) * h.d(1, 0) + g.d(1, 0) * h.d(0, 1) +
                  2.0 * g.value() * h.d(1, 1));
    return Vec2{c1, c2};
  };
  if (H.max_order >= 3 && gfac.max_order >= 3) {
    V.jacobian = [H, gfac](Vec2 p) {
      DJet h = H.jet(p.x, p.y, 3);
      DJet g = gfac.jet(p.x, p.y, 3);
      auto comp1 = [&](int a, int b) {
        // d^a_x d^b_y of (g H_yy - g H_xx + g_y H_y - g_x H_x), Leibniz.
        double r = 0.0;
        for (int i = 0; i <= a; ++i)
          for (int j = 0; j <= b; ++j) {
            double w = detail::binom(a, i) * detail::binom(b, j);
            r += w * (g.d(i, j) * (h.d(a - i, b - j + 2) - h.d(a - i + 2, b - j)) +
                      g.d(i, j + 1) * h.d(a - i, b - j + 1) -
                      g.d(i + 1, j) * h.d(a - i + 1, b - j));
          }
        return r;
      };
      auto comp2 = [&](int a, int b) {
        double r = 0.0;
        for (int i = 0; i <= a; ++i)
          for (int j = 0; j <= b; ++j) {
            double w = detail::binom(a, i) * detail::binom(b, j);
            r -= w * (g.d(i, j + 1) * h.d(a - i + 1, b - j) +
                      g.d(i + 1, j) * h.d(a - i, b - j + 1) +
                      2.0 * g.d(i, j) * h.d(a - i + 1, b - j + 1));
          }
        return r;
      };
      return Mat2{comp1(1, 0), comp1(0, 1), comp2(1, 0), comp2(0, 1)};
    };
  } else {
    V.jacobian = detail::fd_jacobian(V.value);
    V.jacobian_is_fd = true;
  }
  return V;
}

// (f_x - g_y, f_y + g_x) in source coordinates; zeros are the conformal
// points of F.
inline VectorField map_conformal_defect(const PlanarMap& F) {
  if (F.f.max_order < 1 || F.g.max_order < 1)
    throw OrderTooLow("map_conformal_defect needs order >= 1 components");
  VectorField V;
  V.label = "Vmap[" + F.label + "]";
  V.value = [F](Vec2 p) {
    Mat2 J = F.jacobian(p);
    return Vec2{J.a - J.d, J.b + J.c};
  };
  if (F.f.max_order >= 2 && F.g.max_order >= 2) {
    V.jacobian = [F](Vec2 p) {
      DJet jf = F.f.jet(p.x, p.y, 2), jg = F.g.jet(p.x, p.y, 2);
      return Mat2{jf.d(2, 0) - jg.d(1, 1), jf.d(1, 1) - jg.d(0, 2),
                  jf.d(1, 1) + jg.d(2, 0), jf.d(0, 2) + jg.d(1, 1)};
    };
  } else {
    V.jacobian = detail::fd_jacobian(V.value);
    V.jacobian_is_fd = true;
  }
  return V;
}

}  // namespace conformal
