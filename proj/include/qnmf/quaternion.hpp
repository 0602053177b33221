#pragma once

/**
 * @file quaternion.hpp
 * @brief Cartesian quaternion scalar q0 + q1 i + q2 j + q3 k.
 *
 * Units follow Hamilton's table:
 *   i² = j² = k² = ijk = -1,  ij = -ji = k,  jk = -kj = i,  ki = -ik = j
 *
 * Multiplication is non-commutative. The dot product is the real 4-vector
 * inner product of the components, which is what every real-valued
 * contraction in the factorization reduces to.
 */

#include <cmath>
#include <ostream>

namespace qnmf {

template <typename T>
struct BasicQuaternion {
    T q0{0};  // real part
    T q1{0};  // i
    T q2{0};  // j
    T q3{0};  // k

    constexpr BasicQuaternion() = default;
    constexpr BasicQuaternion(T w) : q0{w} {}  // NOLINT: reals embed implicitly
    constexpr BasicQuaternion(T w, T x, T y, T z) : q0{w}, q1{x}, q2{y}, q3{z} {}

    static constexpr BasicQuaternion i() { return {0, 1, 0, 0}; }
    static constexpr BasicQuaternion j() { return {0, 0, 1, 0}; }
    static constexpr BasicQuaternion k() { return {0, 0, 0, 1}; }

    constexpr T re() const { return q0; }
    constexpr BasicQuaternion im() const { return {0, q1, q2, q3}; }

    constexpr T operator[](int l) const {
        switch (l) {
            case 0: return q0;
            case 1: return q1;
            case 2: return q2;
            default: return q3;
        }
    }

    constexpr bool operator==(const BasicQuaternion&) const = default;

    constexpr BasicQuaternion operator-() const { return {-q0, -q1, -q2, -q3}; }

    constexpr BasicQuaternion& operator+=(const BasicQuaternion& o) {
        q0 += o.q0; q1 += o.q1; q2 += o.q2; q3 += o.q3;
        return *this;
    }
    constexpr BasicQuaternion& operator-=(const BasicQuaternion& o) {
        q0 -= o.q0; q1 -= o.q1; q2 -= o.q2; q3 -= o.q3;
        return *this;
    }
    constexpr BasicQuaternion& operator*=(T s) {
        q0 *= s; q1 *= s; q2 *= s; q3 *= s;
        return *this;
    }

    friend constexpr BasicQuaternion operator+(BasicQuaternion a, const BasicQuaternion& b) { return a += b; }
    friend constexpr BasicQuaternion operator-(BasicQuaternion a, const BasicQuaternion& b) { return a -= b; }
    friend constexpr BasicQuaternion operator*(BasicQuaternion a, T s) { return a *= s; }
    friend constexpr BasicQuaternion operator*(T s, BasicQuaternion a) { return a *= s; }

    // Hamilton product
    friend constexpr BasicQuaternion operator*(const BasicQuaternion& a, const BasicQuaternion& b) {
        return {a.q0 * b.q0 - a.q1 * b.q1 - a.q2 * b.q2 - a.q3 * b.q3,
                a.q0 * b.q1 + a.q1 * b.q0 + a.q2 * b.q3 - a.q3 * b.q2,
                a.q0 * b.q2 - a.q1 * b.q3 + a.q2 * b.q0 + a.q3 * b.q1,
                a.q0 * b.q3 + a.q1 * b.q2 - a.q2 * b.q1 + a.q3 * b.q0};
    }

    friend std::ostream& operator<<(std::ostream& os, const BasicQuaternion& q) {
        return os << '(' << q.q0 << ", " << q.q1 << "i, " << q.q2 << "j, " << q.q3 << "k)";
    }
};

using Quaternion = BasicQuaternion<double>;

template <typename T>
constexpr BasicQuaternion<T> conj(const BasicQuaternion<T>& q) {
    return {q.q0, -q.q1, -q.q2, -q.q3};
}

template <typename T>
constexpr T dot(const BasicQuaternion<T>& a, const BasicQuaternion<T>& b) {
    return a.q0 * b.q0 + a.q1 * b.q1 + a.q2 * b.q2 + a.q3 * b.q3;
}

template <typename T>
constexpr T norm_sq(const BasicQuaternion<T>& q) {
    return dot(q, q);
}

template <typename T>
T modulus(const BasicQuaternion<T>& q) {
    return std::sqrt(norm_sq(q));
}

/// |Im q|
template <typename T>
T imag_modulus(const BasicQuaternion<T>& q) {
    return std::sqrt(q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3);
}

template <typename T>
bool is_finite(const BasicQuaternion<T>& q) {
    return std::isfinite(q.q0) && std::isfinite(q.q1) && std::isfinite(q.q2) && std::isfinite(q.q3);
}

}  // namespace qnmf
