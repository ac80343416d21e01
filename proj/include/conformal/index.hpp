#pragma once

// Winding numbers along closed curves with an anti-aliasing guarantee,
// quadtree zero localization with degree certificates, half-integer line
// field indices, and Poincare-Hopf bookkeeping.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conformal/domain.hpp"
#include "conformal/errors.hpp"
#include "conformal/fields.hpp"
#include "conformal/geometry.hpp"

namespace conformal {

// A closed curve on the parameter interval [0, 1].
struct ParamCurve {
  std::function<Vec2(double)> point;
};

inline ParamCurve curve_of_boundary(const BoundaryCurve& c) {
  return {[c](double tau) { return c.point_at_tau(tau); }};
}

inline ParamCurve curve_of_box(Vec2 center, double hw, double hh) {
  return {[=](double tau) {
    double u = tau - std::floor(tau);
    double p = 4.0 * u;
    if (p < 1.0)
      return Vec2{center.x - hw + 2 * hw * p, center.y - hh};
    if (p < 2.0)
      return Vec2{center.x + hw, center.y - hh + 2 * hh * (p - 1.0)};
    if (p < 3.0)
      return Vec2{center.x + hw - 2 * hw * (p - 2.0), center.y + hh};
    return Vec2{center.x - hw, center.y + hh - 2 * hh * (p - 3.0)};
  }};
}

struct WindingResult {
  double value = 0.0;   // integer for vector fields, half-integer for lines
  long samples = 0;
  double min_abs = 0.0;
  bool guaranteed = false;
};

struct EvalBudget {
  long cap = 200000000;
  std::atomic<long> used{0};
  void charge(long n = 1) {
    if ((used += n) > cap) throw BudgetExceeded("field evaluation budget");
  }
};

namespace detail {

struct WindingScan {
  bool ok = true;          // false iff a sample fell at or below the floor
  Vec2 witness;            // location of the offending sample
  double total = 0.0;      // accumulated angle
  double min_abs = 1e300;
  long samples = 0;
  bool clean = true;       // every accepted step < pi/2
};

// Accumulates principal-value angle increments, bisecting until every
// step is below pi/2 (or the depth cap is hit, which voids the
// guarantee).
class WindingAccumulator {
 public:
  WindingAccumulator(const VectorField& V, const ParamCurve& curve,
                     double floor, EvalBudget* budget)
      : V_(V), curve_(curve), floor_(floor), budget_(budget) {}

  WindingScan run(int init_samples, int max_depth) {
    WindingScan s;
    Sample prev;
    if (!sample(0.0, prev, s)) return s;
    Sample first = prev;
    for (int i = 1; i <= init_samples && s.ok; ++i) {
      if (i == init_samples) {
        Sample last = first;  // close the loop on the exact start sample
        last.tau = 1.0;
        s.total += refine(prev, last, 0, max_depth, s);
      } else {
        Sample cur;
        if (!sample(double(i) / init_samples, cur, s)) return s;
        s.total += refine(prev, cur, 0, max_depth, s);
        prev = cur;
      }
    }
    return s;
  }

 private:
  struct Sample {
    double tau = 0, angle = 0, norm = 0;
    Vec2 v;
  };

  bool sample(double tau, Sample& out, WindingScan& s) {
    Vec2 p = curve_.point(tau);
    if (budget_) budget_->charge();
    Vec2 v = V_.value(p);
    ++s.samples;
    double m = v.norm();
    s.min_abs = std::min(s.min_abs, m);
    if (m <= floor_) {
      s.ok = false;
      s.witness = p;
      return false;
    }
    out = {tau, std::atan2(v.y, v.x), m, v};
    return true;
  }

  // Acceptance of a segment requires (a) small principal-value angle
  // increments consistent across the midpoint and (b) small field-value
  // variation relative to the endpoint norms.  (b) is what defeats the
  // aliasing blind spot: a full 2 pi swirl between samples wraps the
  // angle to ~0 but forces |Delta V| >= min |V| along the way, which
  // triggers subdivision here.
  double refine(const Sample& a, const Sample& b, int depth, int max_depth,
                WindingScan& s) {
    if (!s.ok) return 0.0;
    double d = wrap_angle(b.angle - a.angle);
    if (depth >= max_depth) {
      if (std::fabs(d) >= 1.5533430342749532) s.clean = false;  // 0.98*pi/2
      return d;
    }
    Sample m;
    if (!sample(0.5 * (a.tau + b.tau), m, s)) return 0.0;
    double d1 = wrap_angle(m.angle - a.angle);
    double d2 = wrap_angle(b.angle - m.angle);
    auto close = [](const Sample& p, const Sample& q) {
      return (q.v - p.v).norm() <= 0.8 * std::fmin(p.norm, q.norm);
    };
    if (std::fabs(d) < 1.5533430342749532 && std::fabs(d1) < 0.85 &&
        std::fabs(d2) < 0.85 && std::fabs(d1 + d2 - d) < 1e-9 &&
        close(a, m) && close(m, b))
      return d;
    return refine(a, m, depth + 1, max_depth, s) +
           refine(m, b, depth + 1, max_depth, s);
  }

  const VectorField& V_;
  const ParamCurve& curve_;
  double floor_;
  EvalBudget* budget_;
};

}  // namespace detail

inline WindingResult winding(const VectorField& V, const ParamCurve& curve,
                             double floor, EvalBudget* budget = nullptr,
                             int init_samples = 64, int max_depth = 26) {
  if (!(floor > 0)) throw Error("InvalidArgument", "floor must be positive");
  detail::WindingAccumulator acc(V, curve, floor, budget);
  auto s = acc.run(init_samples, max_depth);
  if (!s.ok)
    throw FieldVanishesOnCurve(s.witness.x, s.witness.y,
                               "|V| <= floor at (" +
                                   std::to_string(s.witness.x) + ", " +
                                   std::to_string(s.witness.y) + ")");
  WindingResult r;
  r.value = std::lround(s.total / detail::kTwoPi);
  r.samples = s.samples;
  r.min_abs = s.min_abs;
  r.guaranteed = s.clean && s.min_abs > floor;
  return r;
}

inline WindingResult winding(const VectorField& V, const BoundaryCurve& curve,
                             double floor, EvalBudget* budget = nullptr) {
  ParamCurve pc = curve_of_boundary(curve);
  return winding(V, pc, floor, budget);
}

// Unoriented direction field given through its doubled vector
// W = (cos 2 theta, sin 2 theta) up to positive scale.
struct LineField {
  std::function<Vec2(Vec2)> doubled;
  std::string label;
};

// Hessian eigendirection field of H; W = (H_xx - H_yy, 2 H_xy).
inline LineField hessian_line_field(const ScalarField& H) {
  return {[H](Vec2 p) {
            DJet j = H.jet(p.x, p.y, 2);
            return Vec2{j.d(2, 0) - j.d(0, 2), 2.0 * j.d(1, 1)};
          },
          "Hess[" + H.label + "]"};
}

inline WindingResult line_field_index(const LineField& L,
                                      const ParamCurve& curve, double floor,
                                      EvalBudget* budget = nullptr) {
  VectorField W;
  W.label = L.label;
  W.value = L.doubled;
  WindingResult r = winding(W, curve, floor, budget);
  r.value *= 0.5;
  return r;
}

struct ZeroCertificate {
  Vec2 center;
  double half_width = 0;
  int degree = 0;
  double boundary_min_abs = 0;
  int depth = 0;
  bool guaranteed = false;
  Vec2 polished;
  double polish_residual = -1.0;  // negative: polish not available
  bool polished_ok = false;
};

struct LocateResult {
  std::vector<ZeroCertificate> certificates;
  WindingResult boundary;
  int degree_sum = 0;
  long evaluations = 0;
  int suspicious_boxes = 0;  // canceling-pair blind spots at final size
  std::vector<std::string> warnings;
};

namespace detail {

// Newton refinement of a certificate center; cosmetic, the certificate
// stands on its degree.
inline void polish(const VectorField& V, ZeroCertificate& c) {
  Vec2 p = c.center;
  for (int it = 0; it < 30; ++it) {
    Vec2 v = V.value(p);
    Mat2 J = V.jacobian(p);
    double dt = J.det();
    if (std::fabs(dt) < 1e-14) break;
    Vec2 step = J.inverse().apply(v);
    p = p - step;
    if (std::fabs(p.x - c.center.x) > 4 * c.half_width ||
        std::fabs(p.y - c.center.y) > 4 * c.half_width) {
      return;  // left the neighborhood; keep the box center
    }
    if (step.norm() < 1e-14) break;
  }
  double res = V.value(p).norm();
  if (std::fabs(p.x - c.center.x) <= 2 * c.half_width &&
      std::fabs(p.y - c.center.y) <= 2 * c.half_width) {
    c.polished = p;
    c.polish_residual = res;
    c.polished_ok = true;
  }
}

}  // namespace detail

// Quadtree degree-certificate search over D.  A box is split when its
// boundary winding is nonzero or its boundary comes too close to a zero
// of the field; surviving boxes with nonzero degree become certificates.
inline LocateResult locate_zeros(const VectorField& V, const PlanarDomain& D,
                                 double resolution, double floor,
                                 EvalBudget* budget = nullptr) {
  EvalBudget local_budget;
  if (!budget) budget = &local_budget;

  Vec2 lo = D.bounding_box_min(), hi = D.bounding_box_max();

  // Degeneracy scan: a field that is below the floor on most of the
  // domain has non-isolated zeros (or is identically zero).
  {
    int below = 0, total = 0;
    const int g = 17;
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        Vec2 p{lo.x + (hi.x - lo.x) * (i + 0.5) / g,
               lo.y + (hi.y - lo.y) * (j + 0.5) / g};
        if (!D.inside(p)) continue;
        ++total;
        budget->charge();
        if (V.value(p).norm() <= floor) ++below;
      }
    if (total > 0 && below * 2 > total)
      throw NonIsolatedZeros(std::to_string(below) + " of " +
                             std::to_string(total) +
                             " interior samples below floor");
  }

  LocateResult res;
  res.boundary = winding(V, D.boundary(), floor, budget);

  // Dense boundary polyline for box-vs-boundary intersection tests.
  const int npoly = 2048;
  std::vector<Vec2> poly(npoly);
  for (int i = 0; i < npoly; ++i)
    poly[i] = D.boundary().point_at_tau(double(i) / npoly);
  double poly_gap = 2.0 * D.boundary().length() / npoly;

  auto touches_boundary = [&](Vec2 c, double hw) {
    double m = hw + poly_gap;
    for (const Vec2& p : poly)
      if (std::fabs(p.x - c.x) <= m && std::fabs(p.y - c.y) <= m) return true;
    return false;
  };

  // Irrational jitter of the root box keeps zeros off the dyadic grid of
  // box edges in all generic cases.
  Vec2 mid = (lo + hi) * 0.5;
  double root_hw = 0.5 * std::fmax(hi.x - lo.x, hi.y - lo.y) * 1.004;
  mid.x += root_hw * 1.41421356e-3;
  mid.y += root_hw * 1.73205081e-3;

  struct Task {
    Vec2 c;
    double hw;
    int depth;
  };
  std::vector<Task> stack{{mid, root_hw, 0}};

  while (!stack.empty()) {
    Task t = stack.back();
    stack.pop_back();

    bool on_boundary = touches_boundary(t.c, t.hw);
    if (!on_boundary && !D.inside(t.c)) continue;  // fully outside D

    bool final_size = t.hw <= resolution;

    std::optional<WindingResult> w;
    bool vanish_on_edge = false;
    // At final size, a contour grazing a zero is retried at scaled sizes
    // (growing well clear of high-order zeros, where the field is below
    // the floor in a whole neighborhood) before the box is declared
    // unresolvable.  Enlarged boxes claiming a neighbor's zero are
    // deduplicated after the sweep.
    const double scales_final[] = {1.0, 0.94, 1.06, 1.3, 0.7, 1.7, 2.3, 3.0};
    int tries = final_size ? 8 : 1;
    double used_hw = t.hw;
    for (int k = 0; k < tries; ++k) {
      try {
        used_hw = t.hw * scales_final[k];
        ParamCurve box = curve_of_box(t.c, used_hw, used_hw);
        w = winding(V, box, floor, budget, 16, 22);
        vanish_on_edge = false;
        break;
      } catch (const FieldVanishesOnCurve&) {
        vanish_on_edge = true;
      }
    }
    // Winding-0 pruning is only sound for boxes fully inside D: a box
    // straddling gamma can net zero from an interior zero canceling an
    // exterior one (the field usually extends beyond D), so boundary
    // boxes are always split down to final size.
    bool must_split = vanish_on_edge || (w && w->value != 0.0) ||
                      (w && !w->guaranteed) || (on_boundary && !final_size);

    if (!must_split) continue;  // clean winding-0 box: no certified zero

    if (!final_size) {
      double h = 0.5 * t.hw;
      stack.push_back({{t.c.x - h, t.c.y - h}, h, t.depth + 1});
      stack.push_back({{t.c.x + h, t.c.y - h}, h, t.depth + 1});
      stack.push_back({{t.c.x - h, t.c.y + h}, h, t.depth + 1});
      stack.push_back({{t.c.x + h, t.c.y + h}, h, t.depth + 1});
      continue;
    }

    if (vanish_on_edge || !w->guaranteed) {
      ++res.suspicious_boxes;
      continue;
    }
    if (w->value == 0.0) continue;  // boundary box with no net zero

    ZeroCertificate cert;
    cert.center = t.c;
    cert.half_width = used_hw;
    cert.degree = static_cast<int>(std::lround(w->value));
    cert.boundary_min_abs = w->min_abs;
    cert.depth = t.depth;
    cert.guaranteed = w->guaranteed;
    detail::polish(V, cert);
    // Membership in D is judged at the best zero estimate: a final box
    // straddling gamma can have its center on the other side.
    Vec2 zero_at = cert.polished_ok ? cert.polished : cert.center;
    if (!D.inside(zero_at)) continue;
    res.certificates.push_back(cert);
  }

  // Merge certificates with overlapping claims: retry-enlarged contours of
  // adjacent final boxes can each enclose one zero near a shared edge (the
  // same zero counted twice), or distinct zeros closer than the resolution
  // can be enclosed by overlapping contours with partial counts.  Both are
  // resolved the same way: replace the overlapping pair by one enclosing
  // box and recompute its boundary winding, so the merged degree is the
  // true count inside.
  {
    auto recertify = [&](Vec2 c, double hw) -> std::optional<ZeroCertificate> {
      const double scales[] = {1.0, 0.97, 1.03, 1.09, 1.17, 1.31, 1.5};
      for (double s : scales) {
        try {
          double uhw = hw * s;
          ParamCurve box = curve_of_box(c, uhw, uhw);
          WindingResult w = winding(V, box, floor, budget, 16, 22);
          if (!w.guaranteed) continue;
          ZeroCertificate cert;
          cert.center = c;
          cert.half_width = uhw;
          cert.degree = static_cast<int>(std::lround(w.value));
          cert.boundary_min_abs = w.min_abs;
          cert.guaranteed = true;
          detail::polish(V, cert);
          return cert;
        } catch (const FieldVanishesOnCurve&) {
        }
      }
      return std::nullopt;
    };
    auto overlapping = [](const ZeroCertificate& a, const ZeroCertificate& b) {
      Vec2 za = a.polished_ok ? a.polished : a.center;
      Vec2 zb = b.polished_ok ? b.polished : b.center;
      bool same_zero = a.polished_ok && b.polished_ok &&
                       (za - zb).norm() <
                           std::fmax(a.half_width, b.half_width);
      bool box_overlap =
          std::fabs(a.center.x - b.center.x) <
              a.half_width + b.half_width &&
          std::fabs(a.center.y - b.center.y) <
              a.half_width + b.half_width;
      return same_zero || box_overlap;
    };
    auto& certs = res.certificates;
    bool merged = true;
    while (merged) {
      merged = false;
      for (size_t i = 0; i < certs.size() && !merged; ++i)
        for (size_t j = i + 1; j < certs.size() && !merged; ++j) {
          if (!overlapping(certs[i], certs[j])) continue;
          Vec2 lo2{std::fmin(certs[i].center.x - certs[i].half_width,
                             certs[j].center.x - certs[j].half_width),
                   std::fmin(certs[i].center.y - certs[i].half_width,
                             certs[j].center.y - certs[j].half_width)};
          Vec2 hi2{std::fmax(certs[i].center.x + certs[i].half_width,
                             certs[j].center.x + certs[j].half_width),
                   std::fmax(certs[i].center.y + certs[i].half_width,
                             certs[j].center.y + certs[j].half_width)};
          Vec2 c{0.5 * (lo2.x + hi2.x), 0.5 * (lo2.y + hi2.y)};
          double hw = 0.5 * std::fmax(hi2.x - lo2.x, hi2.y - lo2.y);
          int depth = std::min(certs[i].depth, certs[j].depth);
          auto m = recertify(c, hw);
          if (m) {
            m->depth = depth;
            Vec2 at = m->polished_ok ? m->polished : m->center;
            certs.erase(certs.begin() + j);
            if (D.inside(at) && m->degree != 0)
              certs[i] = *m;
            else
              certs.erase(certs.begin() + i);
          } else {
            // The merged contour grazes a zero at every retry scale; keep
            // the tighter box and flag the ambiguity.
            size_t drop = certs[i].half_width > certs[j].half_width ? i : j;
            certs.erase(certs.begin() + drop);
            ++res.suspicious_boxes;
          }
          merged = true;
        }
    }
  }

  if (res.suspicious_boxes >= 32)
    throw NonIsolatedZeros(std::to_string(res.suspicious_boxes) +
                           " unresolvable boxes at final resolution");
  if (res.suspicious_boxes > 0)
    res.warnings.push_back(
        "canceling-pair risk: " + std::to_string(res.suspicious_boxes) +
        " winding-0 boxes with near-zero field at final resolution");

  for (const auto& c : res.certificates) res.degree_sum += c.degree;
  res.evaluations = budget->used.load();

  if (res.degree_sum != std::lround(res.boundary.value))
    res.warnings.push_back(
        "degree sum " + std::to_string(res.degree_sum) +
        " does not match boundary winding " +
        std::to_string(std::lround(res.boundary.value)));
  return res;
}

// Sum of certificate degrees against the boundary winding.
inline bool poincare_hopf_check(const std::vector<ZeroCertificate>& certs,
                                const WindingResult& boundary) {
  if (!boundary.guaranteed)
    throw UnguaranteedInput("boundary winding is not guaranteed");
  long sum = 0;
  for (const auto& c : certs) {
    if (!c.guaranteed)
      throw UnguaranteedInput("certificate winding is not guaranteed");
    sum += c.degree;
  }
  return sum == std::lround(boundary.value);
}

}  // namespace conformal
