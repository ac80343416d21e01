#pragma once

// Truncated bivariate Taylor jets.  A Jet2<T> of order N carries the raw
// partial derivatives d^i_x d^j_y f at a base point for all i+j <= N
// (raw means NOT divided by factorials).  Multiplication is the
// binomial-weighted Leibniz rule; elementary functions go through
// univariate derivative sequences composed onto the inner jet.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <type_traits>
#include <vector>

#include "conformal/errors.hpp"

namespace conformal {

inline constexpr int kMaxJetOrder = 12;      // hard internal ceiling
inline constexpr int kDefaultMaxOrder = 8;   // user-facing default ceiling

namespace detail {

inline constexpr std::array<double, kMaxJetOrder + 1> kFactorial = [] {
  std::array<double, kMaxJetOrder + 1> f{};
  f[0] = 1.0;
  for (int i = 1; i <= kMaxJetOrder; ++i) f[i] = f[i - 1] * i;
  return f;
}();

inline constexpr double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return kFactorial[n] / (kFactorial[k] * kFactorial[n - k]);
}

template <class T>
inline double abs_of(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return std::fabs(v);
  } else {
    return std::abs(v);
  }
}

}  // namespace detail

template <class T>
class Jet2 {
 public:
  Jet2() : Jet2(0) {}
  explicit Jet2(int order, double x0 = 0.0, double y0 = 0.0)
      : order_(order), x0_(x0), y0_(y0),
        c_((order + 1) * (order + 2) / 2, T{}) {
    if (order < 0 || order > kMaxJetOrder)
      throw OrderTooLarge("jet order " + std::to_string(order));
  }

  static Jet2 constant(T v, int order, double x0 = 0.0, double y0 = 0.0) {
    Jet2 j(order, x0, y0);
    j.at(0, 0) = v;
    return j;
  }
  // The jet of the first coordinate function at (x0, y0).
  static Jet2 variable_x(double x0, double y0, int order) {
    Jet2 j(order, x0, y0);
    j.at(0, 0) = T(x0);
    if (order >= 1) j.at(1, 0) = T(1);
    return j;
  }
  static Jet2 variable_y(double x0, double y0, int order) {
    Jet2 j(order, x0, y0);
    j.at(0, 0) = T(y0);
    if (order >= 1) j.at(0, 1) = T(1);
    return j;
  }

  int order() const { return order_; }
  double x0() const { return x0_; }
  double y0() const { return y0_; }
  T value() const { return c_[0]; }

  T& at(int i, int j) { return c_[index(i, j)]; }
  const T& at(int i, int j) const { return c_[index(i, j)]; }
  // Raw partial d^i_x d^j_y; zero when i+j exceeds the order.
  T d(int i, int j) const {
    return (i + j <= order_) ? c_[index(i, j)] : T{};
  }

  Jet2 truncated(int m) const {
    Jet2 r(m < order_ ? m : order_, x0_, y0_);
    for (int i = 0; i <= r.order_; ++i)
      for (int j = 0; i + j <= r.order_; ++j) r.at(i, j) = at(i, j);
    return r;
  }

  // d/dx as a jet of one lower order.
  Jet2 dx() const {
    if (order_ == 0) return Jet2(0, x0_, y0_);
    Jet2 r(order_ - 1, x0_, y0_);
    for (int i = 0; i <= r.order_; ++i)
      for (int j = 0; i + j <= r.order_; ++j) r.at(i, j) = at(i + 1, j);
    return r;
  }
  Jet2 dy() const {
    if (order_ == 0) return Jet2(0, x0_, y0_);
    Jet2 r(order_ - 1, x0_, y0_);
    for (int i = 0; i <= r.order_; ++i)
      for (int j = 0; i + j <= r.order_; ++j) r.at(i, j) = at(i, j + 1);
    return r;
  }

  Jet2 operator-() const {
    Jet2 r = *this;
    for (auto& v : r.c_) v = -v;
    return r;
  }

  Jet2& operator+=(const Jet2& o) {
    align(o);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    align(o);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet2& operator+=(const T& s) { c_[0] += s; return *this; }
  Jet2& operator-=(const T& s) { c_[0] -= s; return *this; }
  Jet2& operator*=(const T& s) {
    for (auto& v : c_) v *= s;
    return *this;
  }

  friend Jet2 operator+(Jet2 a, const Jet2& b) { a += b; return a; }
  friend Jet2 operator-(Jet2 a, const Jet2& b) { a -= b; return a; }
  friend Jet2 operator+(Jet2 a, const T& s) { a += s; return a; }
  friend Jet2 operator+(const T& s, Jet2 a) { a += s; return a; }
  friend Jet2 operator-(Jet2 a, const T& s) { a -= s; return a; }
  friend Jet2 operator-(const T& s, const Jet2& a) { return (-a) + s; }
  friend Jet2 operator*(Jet2 a, const T& s) { a *= s; return a; }
  friend Jet2 operator*(const T& s, Jet2 a) { a *= s; return a; }

  friend Jet2 operator*(const Jet2& a, const Jet2& b) {
    int n = a.order_ < b.order_ ? a.order_ : b.order_;
    Jet2 r(n, a.x0_, a.y0_);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; i + j <= n; ++j) {
        T acc{};
        for (int p = 0; p <= i; ++p)
          for (int q = 0; q <= j; ++q)
            acc += T(detail::binom(i, p) * detail::binom(j, q)) *
                   a.at(p, q) * b.at(i - p, j - q);
        r.at(i, j) = acc;
      }
    return r;
  }

  // Composition with a univariate function u given by its derivative
  // sequence derivs[k] = u^(k)(value()).  Horner in the jet ring.
  Jet2 compose1(const std::vector<T>& derivs) const {
    Jet2 p = *this;
    p.at(0, 0) = T{};
    Jet2 r = Jet2::constant(derivs[order_] / T(detail::kFactorial[order_]),
                            order_, x0_, y0_);
    for (int k = order_ - 1; k >= 0; --k) {
      r = r * p;
      r.at(0, 0) += derivs[k] / T(detail::kFactorial[k]);
    }
    return r;
  }

 private:
  int index(int i, int j) const {
    return i * (order_ + 1) - i * (i - 1) / 2 + j;
  }
  void align(const Jet2& o) {
    if (o.order_ != order_)
      throw OrderTooLow("jet order mismatch: " + std::to_string(order_) +
                        " vs " + std::to_string(o.order_));
  }

  int order_;
  double x0_, y0_;
  std::vector<T> c_;
};

// A constant in the same algebra as a prototype value (used by generic
// expression evaluation over doubles and jets alike).
inline double constant_like(double, double v) { return v; }
template <class T>
Jet2<T> constant_like(const Jet2<T>& proto, double v) {
  return Jet2<T>::constant(T(v), proto.order(), proto.x0(), proto.y0());
}

using DJet = Jet2<double>;
using CJet = Jet2<std::complex<double>>;

inline CJet to_complex(const DJet& a) {
  CJet r(a.order(), a.x0(), a.y0());
  for (int i = 0; i <= a.order(); ++i)
    for (int j = 0; i + j <= a.order(); ++j) r.at(i, j) = a.at(i, j);
  return r;
}

template <class T>
Jet2<T> reciprocal(const Jet2<T>& a) {
  T v = a.value();
  if (detail::abs_of(v) < 1e-300)
    throw DomainError("division by a value with magnitude below 1e-300");
  std::vector<T> d(a.order() + 1);
  T p = T(1) / v;
  for (int k = 0; k <= a.order(); ++k) {
    d[k] = T(detail::kFactorial[k] * ((k % 2) ? -1.0 : 1.0)) * p;
    p /= v;
  }
  return a.compose1(d);
}

template <class T>
Jet2<T> operator/(const Jet2<T>& a, const Jet2<T>& b) {
  return a * reciprocal(b);
}
template <class T>
Jet2<T> operator/(const Jet2<T>& a, const T& s) {
  return a * (T(1) / s);
}
template <class T>
Jet2<T> operator/(const T& s, const Jet2<T>& b) {
  return reciprocal(b) * s;
}

template <class T>
Jet2<T> exp(const Jet2<T>& a) {
  using std::exp;
  std::vector<T> d(a.order() + 1, exp(a.value()));
  return a.compose1(d);
}

template <class T>
Jet2<T> log(const Jet2<T>& a) {
  using std::log;
  T v = a.value();
  if constexpr (std::is_same_v<T, double>) {
    if (!(v > 0.0)) throw DomainError("log of a non-positive value");
  }
  std::vector<T> d(a.order() + 1);
  d[0] = log(v);
  T p = T(1) / v;
  for (int k = 1; k <= a.order(); ++k) {
    d[k] = T(detail::kFactorial[k - 1] * ((k % 2) ? 1.0 : -1.0)) * p;
    p /= v;
  }
  return a.compose1(d);
}

template <class T>
Jet2<T> sin(const Jet2<T>& a) {
  using std::cos;
  using std::sin;
  T s = sin(a.value()), c = cos(a.value());
  std::vector<T> d(a.order() + 1);
  const T cycle[4] = {s, c, -s, -c};
  for (int k = 0; k <= a.order(); ++k) d[k] = cycle[k % 4];
  return a.compose1(d);
}

template <class T>
Jet2<T> cos(const Jet2<T>& a) {
  using std::cos;
  using std::sin;
  T s = sin(a.value()), c = cos(a.value());
  std::vector<T> d(a.order() + 1);
  const T cycle[4] = {c, -s, -c, s};
  for (int k = 0; k <= a.order(); ++k) d[k] = cycle[k % 4];
  return a.compose1(d);
}

template <class T>
Jet2<T> sqrt(const Jet2<T>& a) {
  using std::sqrt;
  T v = a.value();
  if constexpr (std::is_same_v<T, double>) {
    if (!(v > 0.0)) throw DomainError("sqrt of a non-positive value");
  }
  std::vector<T> d(a.order() + 1);
  d[0] = sqrt(v);
  T fall = T(0.5);
  T p = d[0] / v;
  for (int k = 1; k <= a.order(); ++k) {
    d[k] = fall * p;
    fall *= T(0.5) - T(k);
    p /= v;
  }
  return a.compose1(d);
}

// Integer powers by repeated squaring; exact for polynomial input.
template <class T>
Jet2<T> pow_int(const Jet2<T>& a, long n) {
  if (n < 0) return reciprocal(pow_int(a, -n));
  Jet2<T> r = Jet2<T>::constant(T(1), a.order(), a.x0(), a.y0());
  Jet2<T> base = a;
  while (n > 0) {
    if (n & 1) r = r * base;
    base = base * base;
    n >>= 1;
  }
  return r;
}

// Real exponents require a positive base (rewritten as exp(p log a));
// integral exponents take the exact path.
template <class T>
Jet2<T> pow(const Jet2<T>& a, double p) {
  double rp = std::round(p);
  if (std::fabs(p - rp) < 1e-12 && std::fabs(rp) <= 64)
    return pow_int(a, static_cast<long>(rp));
  return exp(log(a) * T(p));
}

// outer is a jet in (x, y) based at (outer.x0, outer.y0); X and Y are jets
// of the substitution x(t,s), y(t,s) whose values equal that base point.
// Returns the jet of the composite in the (t, s) variables.
template <class T>
Jet2<T> compose2(const Jet2<T>& outer, const Jet2<T>& X, const Jet2<T>& Y) {
  int n = X.order() < Y.order() ? X.order() : Y.order();
  Jet2<T> P = X;
  P.at(0, 0) -= T(outer.x0());
  Jet2<T> Q = Y;
  Q.at(0, 0) -= T(outer.y0());

  std::vector<Jet2<T>> Ppow, Qpow;
  Ppow.reserve(outer.order() + 1);
  Qpow.reserve(outer.order() + 1);
  Ppow.push_back(Jet2<T>::constant(T(1), n, X.x0(), X.y0()));
  Qpow.push_back(Ppow[0]);
  for (int k = 1; k <= outer.order(); ++k) {
    Ppow.push_back(Ppow[k - 1] * P);
    Qpow.push_back(Qpow[k - 1] * Q);
  }

  Jet2<T> r(n, X.x0(), X.y0());
  for (int i = 0; i <= outer.order(); ++i)
    for (int j = 0; i + j <= outer.order(); ++j) {
      T taylor = outer.at(i, j) /
                 T(detail::kFactorial[i] * detail::kFactorial[j]);
      r += (Ppow[i] * Qpow[j]) * taylor;
    }
  return r;
}

}  // namespace conformal
