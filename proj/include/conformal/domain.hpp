#pragma once

// Planar domains: boundary curve with arc-length tables, curvature and
// continuous tangent-angle lift, the tubular (t, s) collar chart, the
// boundary formulas for V and V_n, and the commutation-lemma check.

#include <complex>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "conformal/errors.hpp"
#include "conformal/expr.hpp"
#include "conformal/fields.hpp"
#include "conformal/geometry.hpp"
#include "conformal/jet.hpp"
#include "conformal/quadrature.hpp"

namespace conformal {

namespace detail {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Wrap an angle difference into (-pi, pi].
inline double wrap_angle(double d) {
  while (d > 3.14159265358979323846) d -= kTwoPi;
  while (d <= -3.14159265358979323846) d += kTwoPi;
  return d;
}

}  // namespace detail

// Closed parameterized curve p(tau), tau in [0,1), normalized to
// counterclockwise orientation, with a precomputed arc-length table.
class BoundaryCurve {
 public:
  static BoundaryCurve circle(Vec2 center = {0, 0}, double R = 1.0) {
    auto fmt = [](double v) {
      char buf[40];
      snprintf(buf, sizeof buf, "(%.17g)", v);
      return std::string(buf);
    };
    std::string px = fmt(center.x) + "+" + fmt(R) +
                     "*cos(6.283185307179586*tau)";
    std::string py = fmt(center.y) + "+" + fmt(R) +
                     "*sin(6.283185307179586*tau)";
    return parametric(px, py, "circle");
  }
  static BoundaryCurve ellipse(double a, double b) {
    auto fmt = [](double v) {
      char buf[40];
      snprintf(buf, sizeof buf, "(%.17g)", v);
      return std::string(buf);
    };
    return parametric(fmt(a) + "*cos(6.283185307179586*tau)",
                      fmt(b) + "*sin(6.283185307179586*tau)", "ellipse");
  }
  static BoundaryCurve parametric(const std::string& px,
                                  const std::string& py,
                                  std::string label = "parametric") {
    auto impl = std::make_shared<Impl>();
    impl->px = Expression::parse(px, {"tau"});
    impl->py = Expression::parse(py, {"tau"});
    impl->label = std::move(label);
    impl->build();
    BoundaryCurve c;
    c.impl_ = std::move(impl);
    return c;
  }

  double length() const { return impl_->L; }
  const std::string& label() const { return impl_->label; }
  double max_curvature() const { return impl_->max_k; }

  Vec2 point_at_tau(double tau) const {
    DJet X, Y;
    impl_->tau_jet(tau, 0, X, Y);
    return {X.value(), Y.value()};
  }
  Vec2 point(double t) const { return point_at_tau(impl_->tau_of_t(t)); }
  double tau_of_t(double t) const { return impl_->tau_of_t(t); }

  // Continuous tangent-angle lift with alpha(L) - alpha(0) = 2 pi.
  double tangent_angle(double t) const {
    return impl_->angle_at_tau(impl_->tau_of_t(t));
  }
  double curvature(double t) const {
    return impl_->curvature_at_tau(impl_->tau_of_t(t));
  }

  // Arc-length derivatives of the curve, the inward normal, and the
  // curvature at arc length t, up to `order`:
  //   gamma[i] = d^i gamma / dt^i,  normal[i] = d^i n / dt^i,
  //   kderiv[i] = d^i k / dt^i.
  struct Frame {
    double t = 0, alpha = 0;
    std::vector<Vec2> gamma, normal;
    std::vector<double> kderiv;
  };
  Frame frame(double t, int order) const { return impl_->frame(t, order); }

  Vec2 bounding_box_min() const { return impl_->bb_min; }
  Vec2 bounding_box_max() const { return impl_->bb_max; }

 private:
  struct Impl {
    Expression px, py;
    std::string label;
    bool reversed = false;
    int panels = 0;
    double L = 0, max_k = 0;
    std::vector<double> tnode;   // cumulative arc length at tau = i/panels
    std::vector<double> theta;   // unwrapped tangent angle at nodes
    Vec2 bb_min, bb_max;

    // tau-jets of both coordinates; accounts for orientation reversal.
    void tau_jet(double tau, int order, DJet& X, DJet& Y) const {
      double u = reversed ? 1.0 - tau : tau;
      const DJet env[1] = {DJet::variable_x(u, 0.0, order)};
      std::span<const DJet> sp(env, 1);
      X = px.eval<DJet>(sp);
      Y = py.eval<DJet>(sp);
      if (reversed) {
        for (int m = 1; m <= order; m += 2) {
          X.at(m, 0) = -X.at(m, 0);
          Y.at(m, 0) = -Y.at(m, 0);
        }
      }
    }

    double speed(double tau) const {
      DJet X, Y;
      tau_jet(tau, 1, X, Y);
      double s = std::hypot(X.d(1, 0), Y.d(1, 0));
      if (s < 1e-10)
        throw DegenerateTangent("|p'| = " + std::to_string(s) + " at tau = " +
                                std::to_string(tau));
      return s;
    }

    double raw_angle(double tau) const {
      DJet X, Y;
      tau_jet(tau, 1, X, Y);
      return std::atan2(Y.d(1, 0), X.d(1, 0));
    }

    void build() {
      // Orientation: signed area = int x y' dtau.
      double area = integrate_adaptive(
          [&](double tau) {
            DJet X, Y;
            tau_jet(tau, 1, X, Y);
            return X.value() * Y.d(1, 0);
          },
          0.0, 1.0, 1e-12);
      if (area < 0) reversed = true;

      // Arc-length table, refined until the total length converges.
      double prevL = -1.0;
      for (panels = 1024; panels <= 4096; panels *= 2) {
        tabulate();
        if (prevL >= 0 && std::fabs(L - prevL) <= 1e-10 * L) break;
        prevL = L;
        if (panels == 4096) break;
      }
      if (panels > 4096) panels = 4096;

      // Angle lift, curvature bound, bounding box.
      theta.assign(panels + 1, 0.0);
      theta[0] = raw_angle(0.0);
      max_k = 0.0;
      bb_min = bb_max = point_tau(0.0);
      for (int i = 1; i <= panels; ++i) {
        double tau = double(i) / panels;
        double a = raw_angle(tau);
        theta[i] = theta[i - 1] + detail::wrap_angle(a - theta[i - 1]);
        max_k = std::fmax(max_k, std::fabs(curvature_at_tau(tau)));
        Vec2 p = point_tau(tau);
        bb_min.x = std::fmin(bb_min.x, p.x);
        bb_min.y = std::fmin(bb_min.y, p.y);
        bb_max.x = std::fmax(bb_max.x, p.x);
        bb_max.y = std::fmax(bb_max.y, p.y);
      }
    }

    void tabulate() {
      tnode.assign(panels + 1, 0.0);
      for (int i = 0; i < panels; ++i) {
        double a = double(i) / panels, b = double(i + 1) / panels;
        auto r = detail::gk15([&](double u) { return speed(u); }, a, b);
        tnode[i + 1] = tnode[i] + r.integral;
      }
      L = tnode[panels];
    }

    Vec2 point_tau(double tau) const {
      DJet X, Y;
      tau_jet(tau, 0, X, Y);
      return {X.value(), Y.value()};
    }

    double arc_from_node(int i, double tau) const {
      double a = double(i) / panels;
      if (tau == a) return tnode[i];
      return tnode[i] + detail::gk15([&](double u) { return speed(u); }, a,
                                     tau).integral;
    }

    double tau_of_t(double t) const {
      t = std::fmod(t, L);
      if (t < 0) t += L;
      int lo = 0, hi = panels;
      while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        (tnode[mid] <= t ? lo : hi) = mid;
      }
      double frac = (t - tnode[lo]) / (tnode[lo + 1] - tnode[lo]);
      double tau = (lo + frac) / panels;
      for (int it = 0; it < 8; ++it) {
        double err = arc_from_node(lo, tau) - t;
        if (std::fabs(err) < 1e-13 * (L > 1 ? L : 1.0)) break;
        tau -= err / speed(tau);
      }
      return tau;
    }

    double angle_at_tau(double tau) const {
      int i = static_cast<int>(tau * panels);
      if (i < 0) i = 0;
      if (i > panels) i = panels;
      double frac = tau * panels - i;
      double ref = (i < panels)
                       ? theta[i] + frac * (theta[i + 1] - theta[i])
                       : theta[panels];
      double a = raw_angle(tau);
      return a + detail::kTwoPi * std::round((ref - a) / detail::kTwoPi);
    }

    double curvature_at_tau(double tau) const {
      DJet X, Y;
      tau_jet(tau, 2, X, Y);
      double xp = X.d(1, 0), yp = Y.d(1, 0);
      double sp = std::hypot(xp, yp);
      if (sp < 1e-10) throw DegenerateTangent("at tau " + std::to_string(tau));
      return (xp * Y.d(2, 0) - yp * X.d(2, 0)) / (sp * sp * sp);
    }

    Frame frame(double t, int order) const {
      double tau0 = tau_of_t(t);
      int m = order + 2;  // tau-jet order needed
      DJet GX, GY;
      tau_jet(tau0, m, GX, GY);
      DJet sp = conformal::sqrt(GX.dx() * GX.dx() + GY.dx() * GY.dx());
      DJet invsp = reciprocal(sp);
      auto D = [&](const DJet& g) { return g.dx() * invsp.truncated(g.order() - 1); };

      Frame fr;
      fr.t = t;
      fr.alpha = angle_at_tau(tau0);
      fr.gamma.resize(order + 1);
      fr.normal.resize(order + 1);
      fr.kderiv.resize(order + 1);

      // Tangent as a tau-jet (unit by construction); inward normal of a
      // CCW curve is the tangent rotated by +90 degrees.
      DJet tx = D(GX), ty = D(GY);
      DJet nx = -ty, ny = tx;
      // Curvature k = (x' y'' - y' x'') / |p'|^3 as a tau-jet.
      DJet kj = (GX.dx().truncated(m - 2) * GY.dx().dx() -
                 GY.dx().truncated(m - 2) * GX.dx().dx()) *
                pow_int(invsp.truncated(m - 2), 3);
      {
        DJet ax = GX, ay = GY;
        for (int i = 0; i <= order; ++i) {
          fr.gamma[i] = {ax.value(), ay.value()};
          if (i < order) {
            ax = D(ax);
            ay = D(ay);
          }
        }
      }
      {
        DJet ax = nx, ay = ny;
        for (int i = 0; i <= order; ++i) {
          fr.normal[i] = {ax.value(), ay.value()};
          if (i < order) {
            ax = D(ax);
            ay = D(ay);
          }
        }
      }
      {
        DJet a = kj;
        for (int i = 0; i <= order; ++i) {
          fr.kderiv[i] = a.value();
          if (i < order && a.order() >= 1) a = D(a);
        }
      }
      return fr;
    }
  };

  std::shared_ptr<const Impl> impl_;
};

// D with an inside test by winding number of the boundary around the point.
class PlanarDomain {
 public:
  explicit PlanarDomain(BoundaryCurve boundary, double collar_margin = 1e-9)
      : boundary_(std::move(boundary)), margin_(collar_margin) {}

  const BoundaryCurve& boundary() const { return boundary_; }

  bool inside(const Vec2& q) const {
    Vec2 lo = boundary_.bounding_box_min(), hi = boundary_.bounding_box_max();
    if (q.x < lo.x - margin_ || q.x > hi.x + margin_ || q.y < lo.y - margin_ ||
        q.y > hi.y + margin_)
      return false;
    double total = 0.0;
    const int n0 = 64;
    double prev = angle_to(q, 0.0);
    double tau_prev = 0.0;
    for (int i = 1; i <= n0; ++i) {
      double tau = double(i) / n0;
      total += step(q, tau_prev, prev, tau, 0);
      tau_prev = tau;
      prev = angle_to(q, tau);
    }
    return std::lround(total / detail::kTwoPi) == 1;
  }

  Vec2 bounding_box_min() const { return boundary_.bounding_box_min(); }
  Vec2 bounding_box_max() const { return boundary_.bounding_box_max(); }
  double diameter() const {
    Vec2 d = bounding_box_max() - bounding_box_min();
    return std::hypot(d.x, d.y);
  }

 private:
  double angle_to(const Vec2& q, double tau) const {
    Vec2 p = boundary_.point_at_tau(tau) - q;
    return std::atan2(p.y, p.x);
  }
  double step(const Vec2& q, double ta, double aa, double tb, int depth) const {
    double ab = angle_to(q, tb);
    double d = detail::wrap_angle(ab - aa);
    if (std::fabs(d) < 1.5 || depth > 30) return d;
    double tm = 0.5 * (ta + tb);
    return step(q, ta, aa, tm, depth + 1) +
           step(q, tm, angle_to(q, tm), tb, depth + 1);
  }

  BoundaryCurve boundary_;
  double margin_;
};

// Collar chart (t, s) -> gamma(t) + s n(t) with n the inward unit normal.
class TubularChart {
 public:
  explicit TubularChart(BoundaryCurve curve) : curve_(std::move(curve)) {
    double mk = curve_.max_curvature();
    s_max_ = mk > 0 ? 0.5 / mk : 1e30;
  }

  double s_max() const { return s_max_; }
  const BoundaryCurve& curve() const { return curve_; }

  Vec2 point(double t, double s) const {
    require_inside(s);
    auto fr = curve_.frame(t, 0);
    return fr.gamma[0] + s * fr.normal[0];
  }

  // Jets of the chart map components in (t, s), based at (t, s) with the
  // Cartesian image as jet base point.
  struct ChartJets {
    DJet X, Y;
    double alpha = 0;                 // continuous tangent-angle lift at t
    std::vector<double> kderiv;       // d^i k / dt^i
  };
  ChartJets jets(double t, double s, int order) const {
    require_inside(s);
    auto fr = curve_.frame(t, order);
    ChartJets cj{DJet(order, t, s), DJet(order, t, s), fr.alpha, fr.kderiv};
    for (int i = 0; i <= order; ++i) {
      cj.X.at(i, 0) = fr.gamma[i].x + s * fr.normal[i].x;
      cj.Y.at(i, 0) = fr.gamma[i].y + s * fr.normal[i].y;
      if (i + 1 <= order) {
        cj.X.at(i, 1) = fr.normal[i].x;
        cj.Y.at(i, 1) = fr.normal[i].y;
      }
    }
    return cj;
  }

 private:
  void require_inside(double s) const {
    if (!(std::fabs(s) < s_max_))
      throw OutsideCollar("s = " + std::to_string(s) + ", s_max = " +
                          std::to_string(s_max_));
  }

  BoundaryCurve curve_;
  double s_max_;
};

// Partials d^i_t d^j_s H at (t, s) by composing the Cartesian jet of H
// with the jet of the chart map.
inline DJet pullback_jet(const ScalarField& H, const TubularChart& chart,
                         double t, double s, int order) {
  auto cj = chart.jets(t, s, order);
  DJet outer = H.jet(cj.X.value(), cj.Y.value(), order);
  // compose2 expects the outer base point in its metadata.
  DJet outer_based(order, cj.X.value(), cj.Y.value());
  for (int i = 0; i <= order; ++i)
    for (int j = 0; i + j <= order; ++j)
      outer_based.at(i, j) = outer.d(i, j);
  return compose2(outer_based, cj.X, cj.Y);
}

namespace detail {

inline void check_constant_on_boundary(const ScalarField& H,
                                       const BoundaryCurve& curve,
                                       double tol = 1e-8, int probes = 32) {
  double ref = 0;
  for (int i = 0; i < probes; ++i) {
    Vec2 p = curve.point_at_tau(double(i) / probes);
    double v = H.value(p.x, p.y);
    if (i == 0) {
      ref = v;
    } else if (std::fabs(v - ref) > tol) {
      throw NotConstantOnBoundary("|H - H(gamma(0))| = " +
                                  std::to_string(std::fabs(v - ref)));
    }
  }
}

}  // namespace detail

// V on the boundary in closed form: (H_ss + k H_s - 2 i H_st) e^{2 i alpha}.
inline Vec2 boundary_formula_V(const ScalarField& H, const TubularChart& chart,
                               double t) {
  detail::check_constant_on_boundary(H, chart.curve());
  DJet j = pullback_jet(H, chart, t, 0.0, 2);
  double k = chart.curve().curvature(t);
  double alpha = chart.curve().tangent_angle(t);
  std::complex<double> w(j.d(0, 2) + k * j.d(0, 1), -2.0 * j.d(1, 1));
  std::complex<double> v = w * std::exp(std::complex<double>(0, 2 * alpha));
  return {v.real(), v.imag()};
}

// V_n on the boundary: i^n (d_s^n H)(t, 0) e^{i n alpha}.  Requires H and
// its first n-1 normal derivatives to vanish on gamma.
inline Vec2 boundary_formula_Vn(const ScalarField& H, const TubularChart& chart,
                                double t, int n) {
  if (n > H.max_order)
    throw OrderTooLow("V_" + std::to_string(n) + " exceeds field order");
  detail::check_constant_on_boundary(H, chart.curve());
  const int probes = 16;
  double L = chart.curve().length();
  for (int j = 1; j < n; ++j) {
    for (int i = 0; i < probes; ++i) {
      DJet pj = pullback_jet(H, chart, L * i / probes, 0.0, j);
      if (std::fabs(pj.d(0, j)) > 1e-8)
        throw BoundaryJetNotFlat(
            j, "d_s^" + std::to_string(j) + " H = " +
                   std::to_string(pj.d(0, j)) + " on gamma");
    }
  }
  DJet pj = pullback_jet(H, chart, t, 0.0, n);
  double alpha = chart.curve().tangent_angle(t);
  std::complex<double> in = std::pow(std::complex<double>(0, 1), n);
  std::complex<double> v =
      in * pj.d(0, n) * std::exp(std::complex<double>(0, n * alpha));
  return {v.real(), v.imag()};
}

// Commutation lemma check: max over probes of
// |(a D)^n f - a^n prod_k (D + (n-k) b) f| with D = (1/(1-sk)) d_t + i d_s,
// a = e^{i alpha}, b = i k / (1 - s k).  Both sides evaluated from jets.
inline double verify_commutation(int n, const ScalarField& f_ts,
                                 const TubularChart& chart,
                                 const std::vector<Vec2>& probes) {
  if (f_ts.max_order < n + 1)
    throw OrderTooLow("commutation check needs (t,s)-order >= n+1");
  using C = std::complex<double>;
  const C I(0, 1);
  double worst = 0.0;
  for (const Vec2& pr : probes) {
    double t = pr.x, s = pr.y;
    if (!(std::fabs(s) < chart.s_max()))
      throw OutsideCollar("probe s = " + std::to_string(s));
    int ord = n + 1;
    auto fr = chart.curve().frame(t, ord);

    CJet F = to_complex(f_ts.jet(t, s, ord));

    // alpha as a (t, s)-jet: d_t^i alpha = d_t^{i-1} k.
    CJet alpha(ord, t, s);
    alpha.at(0, 0) = fr.alpha;
    for (int i = 1; i <= ord; ++i) alpha.at(i, 0) = fr.kderiv[i - 1];
    CJet a = conformal::exp(alpha * I);

    // k(t) and w = 1 - s k(t) as (t, s)-jets.
    CJet kj(ord, t, s);
    for (int i = 0; i <= ord; ++i) kj.at(i, 0) = fr.kderiv[i];
    CJet w(ord, t, s);
    w.at(0, 0) = 1.0 - s * fr.kderiv[0];
    for (int i = 1; i <= ord; ++i) w.at(i, 0) = -s * fr.kderiv[i];
    for (int i = 0; i + 1 <= ord; ++i) w.at(i, 1) = -fr.kderiv[i];
    CJet invw = reciprocal(w);
    CJet b = kj * invw * I;

    auto Dop = [&](const CJet& g) {
      CJet gt = g.dx();
      return invw.truncated(gt.order()) * gt + g.dy() * I;
    };

    // Left side: (a D)^n f.
    CJet gl = F;
    for (int i = 0; i < n; ++i) {
      CJet dg = Dop(gl);
      gl = a.truncated(dg.order()) * dg;
    }
    C lhs = gl.value();

    // Right side: a^n (D + (n-1)b) ... (D + b) D f.
    CJet gr = F;
    for (int j = 0; j < n; ++j) {
      CJet dg = Dop(gr);
      if (j > 0) {
        CJet extra = (b.truncated(gr.order()) * gr).truncated(dg.order());
        dg += extra * C(double(j));
      }
      gr = dg;
    }
    C rhs = std::pow(a.value(), n) * gr.value();

    worst = std::fmax(worst, std::abs(lhs - rhs));
  }
  return worst;
}

// Arc-length curvature and continuous tangent-angle lift.
inline std::pair<double, double> curvature_and_angle(const BoundaryCurve& c,
                                                     double t) {
  return {c.curvature(t), c.tangent_angle(t)};
}

}  // namespace conformal
