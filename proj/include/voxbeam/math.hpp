// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_MATH_HPP
#define VOXBEAM_MATH_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace voxbeam {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInvPi = 1.0 / std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base error for every rejected input in the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename T>
struct Vec3 {
    T x = 0, y = 0, z = 0;

    constexpr Vec3() = default;
    constexpr Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}
    constexpr explicit Vec3(T v) : x(v), y(v), z(v) {}
    template <typename U>
    constexpr explicit Vec3(const Vec3<U>& o) : x(T(o.x)), y(T(o.y)), z(T(o.z)) {}

    constexpr T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr T operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(T s) { x *= s; y *= s; z *= s; return *this; }
    constexpr Vec3& operator/=(T s) { x /= s; y /= s; z /= s; return *this; }

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

using Vec3d = Vec3<double>;
using Vec3f = Vec3<float>;
using Vec3i = Vec3<int>;
/// Linear RGB. Components are read as r = x, g = y, b = z.
using Rgb = Vec3f;

template <typename T> constexpr Vec3<T> operator+(Vec3<T> a, const Vec3<T>& b) { return a += b; }
template <typename T> constexpr Vec3<T> operator-(Vec3<T> a, const Vec3<T>& b) { return a -= b; }
template <typename T> constexpr Vec3<T> operator-(const Vec3<T>& a) { return {-a.x, -a.y, -a.z}; }
template <typename T> constexpr Vec3<T> operator*(Vec3<T> a, T s) { return a *= s; }
template <typename T> constexpr Vec3<T> operator*(T s, Vec3<T> a) { return a *= s; }
template <typename T> constexpr Vec3<T> operator/(Vec3<T> a, T s) { return a /= s; }
template <typename T> constexpr Vec3<T> operator*(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.x * b.x, a.y * b.y, a.z * b.z};
}

template <typename T> constexpr T dot(const Vec3<T>& a, const Vec3<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
template <typename T> constexpr Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
template <typename T> T length(const Vec3<T>& a) { return std::sqrt(dot(a, a)); }
template <typename T> constexpr T length_squared(const Vec3<T>& a) { return dot(a, a); }
template <typename T> Vec3<T> normalize(const Vec3<T>& a) {
    T l = length(a);
    return l > 0 ? a / l : Vec3<T>{};
}
template <typename T> constexpr T max_component(const Vec3<T>& a) { return std::max({a.x, a.y, a.z}); }
template <typename T> constexpr T min_component(const Vec3<T>& a) { return std::min({a.x, a.y, a.z}); }
template <typename T> constexpr Vec3<T> abs(const Vec3<T>& a) { return {std::abs(a.x), std::abs(a.y), std::abs(a.z)}; }
template <typename T> constexpr Vec3<T> lerp(const Vec3<T>& a, const Vec3<T>& b, T t) { return a + (b - a) * t; }

inline Vec3d to_d(const Vec3f& v) { return Vec3d(v); }
inline Vec3f to_f(const Vec3d& v) { return Vec3f(v); }

inline bool isfinite(const Vec3f& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

/// Rec. 709 relative luminance of a linear colour.
inline float luminance(const Rgb& c) { return 0.2126f * c.x + 0.7152f * c.y + 0.0722f * c.z; }

/// Unit quaternion (w, x, y, z) acting as a rotation on Vec3d.
struct Quat {
    double w = 1, x = 0, y = 0, z = 0;

    static Quat identity() { return {}; }
    static Quat from_axis_angle(Vec3d axis, double radians) {
        axis = normalize(axis);
        double s = std::sin(radians / 2);
        return {std::cos(radians / 2), axis.x * s, axis.y * s, axis.z * s};
    }

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const {
        double n = norm();
        return {w / n, x / n, y / n, z / n};
    }
    Quat conjugate() const { return {w, -x, -y, -z}; }

    Vec3d rotate(const Vec3d& v) const {
        Vec3d u{x, y, z};
        Vec3d t = 2.0 * cross(u, v);
        return v + w * t + cross(u, t);
    }

    friend Quat operator*(const Quat& a, const Quat& b) {
        return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
    }
    friend bool operator==(const Quat&, const Quat&) = default;
};

/// Rotation whose -z axis points along `forward` and whose +y axis is as close to `up` as possible.
inline Quat look_rotation(Vec3d forward, Vec3d up) {
    forward = normalize(forward);
    Vec3d right = normalize(cross(forward, up));
    Vec3d true_up = cross(right, forward);
    Vec3d back = -forward;
    // Rotation matrix columns: right, true_up, back.
    double m00 = right.x, m01 = true_up.x, m02 = back.x;
    double m10 = right.y, m11 = true_up.y, m12 = back.y;
    double m20 = right.z, m21 = true_up.z, m22 = back.z;
    double trace = m00 + m11 + m22;
    Quat q;
    if (trace > 0) {
        double s = std::sqrt(trace + 1.0) * 2;
        q = {0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s};
    } else if (m00 > m11 && m00 > m22) {
        double s = std::sqrt(1.0 + m00 - m11 - m22) * 2;
        q = {(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s};
    } else if (m11 > m22) {
        double s = std::sqrt(1.0 + m11 - m00 - m22) * 2;
        q = {(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s};
    } else {
        double s = std::sqrt(1.0 + m22 - m00 - m11) * 2;
        q = {(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s};
    }
    return q.normalized();
}

struct Ray {
    Vec3d origin;
    Vec3d dir;  // unit length
    Vec3d at(double t) const { return origin + dir * t; }
};

struct Bounds3 {
    Vec3d lo, hi;

    Vec3d center() const { return (lo + hi) * 0.5; }
    bool contains(const Vec3d& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
    }
    /// Slab test. On hit, [t0, t1] is the overlap of the ray with the box clipped to t >= 0.
    bool intersect(const Ray& r, double& t0, double& t1) const {
        t0 = 0;
        t1 = kInf;
        for (int a = 0; a < 3; ++a) {
            double inv = 1.0 / r.dir[a];
            double tn = (lo[a] - r.origin[a]) * inv;
            double tf = (hi[a] - r.origin[a]) * inv;
            if (tn > tf) std::swap(tn, tf);
            t0 = tn > t0 ? tn : t0;
            t1 = tf < t1 ? tf : t1;
            if (t0 > t1) return false;
        }
        return true;
    }
};

}  // namespace voxbeam

#endif
