#pragma once

// Time-epsilon Hamiltonian flows with variational (Jacobian) equations,
// integrated by adaptive Dormand-Prince RK5(4).

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "conformal/errors.hpp"
#include "conformal/fields.hpp"
#include "conformal/geometry.hpp"
#include "conformal/index.hpp"
#include "conformal/symplecto.hpp"

namespace conformal {

namespace detail {

// State: (x, y, Z11, Z12, Z21, Z22).
using FlowState = std::array<double, 6>;

inline FlowState flow_rhs(const ScalarField& H, const FlowState& u) {
  DJet j = H.jet(u[0], u[1], 2);
  // X_H = (H_y, -H_x); dX_H = [[H_yx, H_yy], [-H_xx, -H_xy]].
  double a = j.d(1, 1), b = j.d(0, 2), c = -j.d(2, 0), d = -j.d(1, 1);
  return {j.d(0, 1), -j.d(1, 0),
          a * u[2] + b * u[4], a * u[3] + b * u[5],
          c * u[2] + d * u[4], c * u[3] + d * u[5]};
}

}  // namespace detail

// Integrates zdot = X_H(z), Zdot = dX_H(z) Z, Z(0) = I up to time eps.
inline std::pair<Vec2, Mat2> integrate(const ScalarField& H, double eps,
                                       Vec2 p, double tol = 1e-10) {
  if (H.max_order < 3)
    throw OrderTooLow("flow integration needs H order >= 3");
  detail::FlowState u{p.x, p.y, 1, 0, 0, 1};
  if (eps == 0.0) return {p, Mat2::identity()};

  // Dormand-Prince coefficients.
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                      c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                      e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                      e6 = 22.0 / 525, e7 = -1.0 / 40;

  double dir = eps > 0 ? 1.0 : -1.0;
  double T = std::fabs(eps);
  double t = 0.0;
  double h = std::fmin(T, 0.01 + 0.1 * T);
  auto axpy = [](detail::FlowState& r, double s,
                 const detail::FlowState& v) {
    for (int i = 0; i < 6; ++i) r[i] += s * v[i];
  };
  int rejects_in_row = 0;
  long steps = 0;
  detail::FlowState k1 = detail::flow_rhs(H, u);
  while (t < T) {
    if (++steps > 1000000) throw StepFailure("step budget exhausted");
    if (t + h > T) h = T - t;
    double hs = h * dir;

    detail::FlowState u2 = u;
    axpy(u2, hs * a21, k1);
    auto k2 = detail::flow_rhs(H, u2);
    detail::FlowState u3 = u;
    axpy(u3, hs * a31, k1);
    axpy(u3, hs * a32, k2);
    auto k3 = detail::flow_rhs(H, u3);
    detail::FlowState u4 = u;
    axpy(u4, hs * a41, k1);
    axpy(u4, hs * a42, k2);
    axpy(u4, hs * a43, k3);
    auto k4 = detail::flow_rhs(H, u4);
    detail::FlowState u5 = u;
    axpy(u5, hs * a51, k1);
    axpy(u5, hs * a52, k2);
    axpy(u5, hs * a53, k3);
    axpy(u5, hs * a54, k4);
    auto k5 = detail::flow_rhs(H, u5);
    detail::FlowState u6 = u;
    axpy(u6, hs * a61, k1);
    axpy(u6, hs * a62, k2);
    axpy(u6, hs * a63, k3);
    axpy(u6, hs * a64, k4);
    axpy(u6, hs * a65, k5);
    auto k6 = detail::flow_rhs(H, u6);
    detail::FlowState u7 = u;
    axpy(u7, hs * b1, k1);
    axpy(u7, hs * b3, k3);
    axpy(u7, hs * b4, k4);
    axpy(u7, hs * b5, k5);
    axpy(u7, hs * b6, k6);
    auto k7 = detail::flow_rhs(H, u7);  // FSAL

    double err = 0.0;
    for (int i = 0; i < 6; ++i) {
      double e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                       e6 * k6[i] + e7 * k7[i]);
      double sc = tol * (1.0 + std::fmax(std::fabs(u[i]), std::fabs(u7[i])));
      err = std::fmax(err, std::fabs(e) / sc);
    }
    if (err <= 1.0) {
      t += h;
      u = u7;
      k1 = k7;
      rejects_in_row = 0;
    } else if (++rejects_in_row > 60) {
      throw StepFailure("repeated step rejection (stiffness or blow-up)");
    }
    double fac = 0.9 * std::pow(err > 1e-10 ? err : 1e-10, -0.2);
    h *= std::fmin(5.0, std::fmax(0.2, fac));
    if (h < 1e-15 * (T > 1 ? T : 1.0))
      throw StepFailure("step size underflow");
    (void)c2; (void)c3; (void)c4; (void)c5;
  }
  return {{u[0], u[1]}, {u[2], u[3], u[4], u[5]}};
}

// The flow as a PlanarMap.  First-order jets come from the variational
// Jacobian; higher orders fall back to central differences of the
// Jacobian (flagged through `fd_higher_orders`).
struct FlowMap {
  ScalarField H;
  double eps = 0;
  double tol = 1e-10;
  bool fd_higher_orders = true;
};

inline PlanarMap flow_as_map(const ScalarField& H, double eps,
                             double tol = 1e-10) {
  if (H.max_order < 3) throw OrderTooLow("flow_as_map needs H order >= 3");
  double fd_h = std::fmax(1e-5, std::sqrt(tol));

  auto component = [H, eps, tol, fd_h](int comp) {
    return [H, eps, tol, fd_h, comp](double x, double y, int order) {
      auto [img, J] = integrate(H, eps, {x, y}, tol);
      DJet j(order, x, y);
      j.at(0, 0) = comp == 0 ? img.x : img.y;
      if (order >= 1) {
        j.at(1, 0) = comp == 0 ? J.a : J.c;
        j.at(0, 1) = comp == 0 ? J.b : J.d;
      }
      if (order >= 2) {
        // Central differences of the variational Jacobian.
        auto [ixp, Jxp] = integrate(H, eps, {x + fd_h, y}, tol);
        auto [ixm, Jxm] = integrate(H, eps, {x - fd_h, y}, tol);
        auto [iyp, Jyp] = integrate(H, eps, {x, y + fd_h}, tol);
        auto [iym, Jym] = integrate(H, eps, {x, y - fd_h}, tol);
        Mat2 dJx = (Jxp - Jxm).scaled(1.0 / (2 * fd_h));
        Mat2 dJy = (Jyp - Jym).scaled(1.0 / (2 * fd_h));
        if (comp == 0) {
          j.at(2, 0) = dJx.a;
          j.at(1, 1) = dJx.b;  // = dJy.a up to FD noise
          j.at(0, 2) = dJy.b;
        } else {
          j.at(2, 0) = dJx.c;
          j.at(1, 1) = dJx.d;
          j.at(0, 2) = dJy.d;
        }
      }
      if (order >= 3)
        throw OrderTooLow("flow map jets available up to order 2");
      return j;
    };
  };

  PlanarMap F;
  F.label = "flow[" + H.label + ", eps=" + std::to_string(eps) + "]";
  F.f = ScalarField{component(0), 2, F.label + ".f"};
  F.g = ScalarField{component(1), 2, F.label + ".g"};
  F.symplectic_claimed = true;
  return F;
}

// Evidence table for the flow-vs-field comparison; exploratory output
// only, no pass/fail semantics.
struct FieldVsFlowRow {
  double eps = 0;  // 0 marks the vector-field row
  int certificate_count = 0;
  int degree_sum = 0;
  std::string error;  // nonempty when the search raised
};

// One row for the vector field V (eps = 0) and one per requested flow
// time; errors are recorded per row, never rethrown.
inline std::vector<FieldVsFlowRow> field_vs_flow_experiment(
    const ScalarField& H, const std::vector<double>& eps_list,
    const PlanarDomain& D, double resolution, double floor,
    double tol = 1e-10) {
  std::vector<FieldVsFlowRow> table;
  {
    FieldVsFlowRow row;
    try {
      LocateResult loc = locate_zeros(conformal_defect(H), D, resolution,
                                      floor);
      row.certificate_count = int(loc.certificates.size());
      row.degree_sum = loc.degree_sum;
    } catch (const Error& e) {
      row.error = e.what();
    }
    table.push_back(row);
  }
  for (double eps : eps_list) {
    FieldVsFlowRow row;
    row.eps = eps;
    try {
      PlanarMap F = flow_as_map(H, eps, tol);
      try {
        auto res = conformal_points_of_map(F, D, resolution, floor);
        row.certificate_count = int(res.zeros.certificates.size());
        row.degree_sum = res.zeros.degree_sum;
      } catch (const Error& e) {
        if (std::string(e.code()) != "NotIdentityOnBoundary") throw;
        // The flow preserves the boundary only setwise (H has a nonzero
        // normal derivative); the packed pipeline needs the boundary fixed
        // pointwise, but the raw defect count is still meaningful.
        LocateResult loc =
            locate_zeros(map_conformal_defect(F), D, resolution, floor);
        row.certificate_count = int(loc.certificates.size());
        row.degree_sum = loc.degree_sum;
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
    table.push_back(row);
  }
  return table;
}

}  // namespace conformal
