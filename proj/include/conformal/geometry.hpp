#pragma once

#include <cmath>

namespace conformal {

struct Vec2 {
  double x = 0.0, y = 0.0;
  Vec2() = default;
  Vec2(double x, double y) : x(x), y(y) {}
  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2 operator-() const { return {-x, -y}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};
inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Row-major 2x2 matrix.
struct Mat2 {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  Vec2 apply(const Vec2& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d,
            c * o.a + d * o.c, c * o.b + d * o.d};
  }
  Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
  Mat2 operator-(const Mat2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
  Mat2 scaled(double s) const { return {a * s, b * s, c * s, d * s}; }
  double det() const { return a * d - b * c; }
  double trace() const { return a + d; }
  Mat2 inverse() const {
    double dt = det();
    return {d / dt, -b / dt, -c / dt, a / dt};
  }
  double max_abs() const {
    double m = std::fabs(a);
    m = std::fmax(m, std::fabs(b));
    m = std::fmax(m, std::fabs(c));
    return std::fmax(m, std::fabs(d));
  }
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
  Vec3() = default;
  Vec3(double x, double y, double z) : x(x), y(y), z(z) {}
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const { return *this / norm(); }
};
inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

}  // namespace conformal
