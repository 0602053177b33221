#pragma once

/**
 * @file projection.hpp
 * @brief Closed-form projections onto the feasible sets of the factor W and H.
 *
 * Two quaternion sets are supported:
 *
 *  - Stokes cone   H_S = { q : Re q ≥ 0, |Im q|² ≤ (Re q)² }
 *  - Pure nonneg   H̊₊  = { q1 i + q2 j + q3 k : q1, q2, q3 ≥ 0 }
 *
 * A quaternion q lies in H_S exactly when the Hermitian matrix
 *
 *        J = ½ [ q0 + q2      q3 + i q1 ]
 *              [ q3 - i q1    q0 - q2   ]
 *
 * is positive semidefinite (tr J = q0, 4 det J = q0² - |Im q|²). The map
 * q ↦ J is a scaled isometry, ‖J‖_F² = |q|²/2, so clipping the negative
 * eigenvalue of J and mapping back gives the Euclidean projection onto H_S.
 * proj_stokes_lorentz() computes the same point through the second-order
 * cone formula and serves as an independent check.
 */

#include <algorithm>
#include <cmath>
#include <complex>

#include "qnmf/quat_matrix.hpp"
#include "qnmf/quaternion.hpp"

namespace qnmf {

enum class ConstraintSet { Stokes, PureNonneg };

inline const char* to_string(ConstraintSet s) {
    return s == ConstraintSet::Stokes ? "stokes" : "rgb";
}

inline constexpr double kDefaultXi = 1e-9;

/// J = [[alpha, c], [conj(c), beta]]
struct HermitianJ {
    double alpha{0};
    double beta{0};
    std::complex<double> c{};

    double trace() const { return alpha + beta; }
    double det() const { return alpha * beta - std::norm(c); }
};

inline HermitianJ build_j(const Quaternion& q) {
    return {0.5 * (q.q0 + q.q2), 0.5 * (q.q0 - q.q2), {0.5 * q.q3, 0.5 * q.q1}};
}

inline Quaternion from_j(const HermitianJ& j) {
    return {j.alpha + j.beta, 2.0 * j.c.imag(), j.alpha - j.beta, 2.0 * j.c.real()};
}

/// Eigenvalues (lo, hi) of a 2x2 Hermitian matrix.
inline std::pair<double, double> eigenvalues(const HermitianJ& j) {
    const double mid = 0.5 * (j.alpha + j.beta);
    const double rad = std::hypot(0.5 * (j.alpha - j.beta), std::abs(j.c));
    return {mid - rad, mid + rad};
}

/// Projection onto the PSD cone: negative eigenvalues clipped to zero.
inline HermitianJ proj_psd2(const HermitianJ& j) {
    const auto [lo, hi] = eigenvalues(j);
    if (lo >= 0.0) return j;
    if (hi <= 0.0) return {};
    // lo < 0 < hi. J - hi·I = (lo - hi)·u₋u₋*, so the eigenvector is never formed.
    const double s = lo / (lo - hi);
    return {j.alpha - s * (j.alpha - hi), j.beta - s * (j.beta - hi), j.c - s * j.c};
}

/// Projection onto H_S through the PSD clipping of J.
inline Quaternion proj_stokes(const Quaternion& q) { return from_j(proj_psd2(build_j(q))); }

/// Second-order cone projection onto H_S.
inline Quaternion proj_stokes_lorentz(const Quaternion& q) {
    const double t = imag_modulus(q);
    if (t <= q.q0) return q;
    if (t <= -q.q0) return {};
    const double s = 0.5 * (q.q0 + t);
    const double f = s / t;
    return {s, f * q.q1, f * q.q2, f * q.q3};
}

/// Projection onto H̊₊ with every imaginary component floored at xi/2.
inline Quaternion proj_pure_nonneg(const Quaternion& q, double xi) {
    auto floor = [xi](double w) { return 0.5 * std::max(xi, std::abs(w) + w); };
    return {0.0, floor(q.q1), floor(q.q2), floor(q.q3)};
}

/// max(xi, x). Zero and small positives map to xi as well as negatives.
inline double proj_real_floor(double x, double xi) { return std::max(xi, x); }

inline Quaternion project(const Quaternion& q, ConstraintSet set, double xi) {
    return set == ConstraintSet::Stokes ? proj_stokes(q) : proj_pure_nonneg(q, xi);
}

/// Entrywise projection of a quaternion matrix.
inline void project_inplace(QuatMatrix& w, ConstraintSet set, double xi) {
    for (Index v = 0; v < w.cols(); ++v)
        for (Index u = 0; u < w.rows(); ++u) w.set(u, v, project(w(u, v), set, xi));
}

inline QuatMatrix project_columns(QuatMatrix w, ConstraintSet set, double xi) {
    project_inplace(w, set, xi);
    return w;
}

inline void floor_inplace(RealMatrix& h, double xi) {
    h = h.cwiseMax(xi);
}

// Feasibility predicates -----------------------------------------------------

/// Stokes: Re q ≥ -tol and |Im q| ≤ Re q + tol. PureNonneg: q0 == 0 exactly and
/// imaginary parts ≥ -tol.
inline bool is_feasible(const Quaternion& q, ConstraintSet set, double tol = 1e-12) {
    if (!is_finite(q)) return false;
    if (set == ConstraintSet::Stokes) return q.q0 >= -tol && imag_modulus(q) <= q.q0 + tol;
    return q.q0 == 0.0 && q.q1 >= -tol && q.q2 >= -tol && q.q3 >= -tol;
}

inline bool is_feasible(const QuatMatrix& w, ConstraintSet set, double tol = 1e-12) {
    for (Index v = 0; v < w.cols(); ++v)
        for (Index u = 0; u < w.rows(); ++u)
            if (!is_feasible(w(u, v), set, tol)) return false;
    return true;
}

}  // namespace qnmf
