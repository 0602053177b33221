#pragma once

/**
 * @file quat_matrix.hpp
 * @brief Dense quaternion matrices stored as four real component planes.
 *
 * Entry (u, v) of a QuatMatrix is the quaternion
 *   plane(0)(u,v) + plane(1)(u,v) i + plane(2)(u,v) j + plane(3)(u,v) k.
 *
 * In the factorization model the right factor H is always real, so every
 * product W·H is four independent real GEMMs, S_l(W H) = S_l(W) H, and every
 * real-valued contraction Re[Wᵀ conj(M)] is the sum of four real products
 * S_l(W)ᵀ S_l(M). Nothing here multiplies two quaternion matrices.
 */

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qnmf/errors.hpp"
#include "qnmf/quaternion.hpp"

namespace qnmf {

using Index = Eigen::Index;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr int kComponents = 4;

class QuatMatrix {
public:
    QuatMatrix() = default;

    QuatMatrix(Index rows, Index cols) {
        for (auto& p : planes_) p = RealMatrix::Zero(rows, cols);
    }

    QuatMatrix(RealMatrix p0, RealMatrix p1, RealMatrix p2, RealMatrix p3)
        : planes_{std::move(p0), std::move(p1), std::move(p2), std::move(p3)} {
        for (int l = 1; l < kComponents; ++l) {
            if (planes_[l].rows() != planes_[0].rows() || planes_[l].cols() != planes_[0].cols())
                throw DimensionError("QuatMatrix: component planes differ in shape");
        }
    }

    /// Pure quaternion matrix r i + g j + b k.
    static QuatMatrix pure(RealMatrix r, RealMatrix g, RealMatrix b) {
        RealMatrix zero = RealMatrix::Zero(r.rows(), r.cols());
        return {std::move(zero), std::move(r), std::move(g), std::move(b)};
    }

    Index rows() const { return planes_[0].rows(); }
    Index cols() const { return planes_[0].cols(); }
    Index size() const { return rows() * cols(); }

    const RealMatrix& plane(int l) const { return planes_[check_component(l)]; }
    // Callers must keep the four shapes identical.
    RealMatrix& plane(int l) { return planes_[check_component(l)]; }

    Quaternion operator()(Index u, Index v) const {
        return {planes_[0](u, v), planes_[1](u, v), planes_[2](u, v), planes_[3](u, v)};
    }

    void set(Index u, Index v, const Quaternion& q) {
        planes_[0](u, v) = q.q0;
        planes_[1](u, v) = q.q1;
        planes_[2](u, v) = q.q2;
        planes_[3](u, v) = q.q3;
    }

    QuatMatrix columns(std::span<const Index> idx) const {
        QuatMatrix out(rows(), static_cast<Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) {
            if (idx[c] < 0 || idx[c] >= cols()) throw DimensionError("QuatMatrix::columns: index out of range");
            for (int l = 0; l < kComponents; ++l) out.planes_[l].col(static_cast<Index>(c)) = planes_[l].col(idx[c]);
        }
        return out;
    }

    /// Squared quaternion norm of column v.
    double column_norm_sq(Index v) const {
        double s = 0.0;
        for (const auto& p : planes_) s += p.col(v).squaredNorm();
        return s;
    }

    QuatMatrix conjugate() const {
        return {planes_[0], -planes_[1], -planes_[2], -planes_[3]};
    }

    QuatMatrix& operator+=(const QuatMatrix& o) {
        require_same_shape(o, "operator+=");
        for (int l = 0; l < kComponents; ++l) planes_[l] += o.planes_[l];
        return *this;
    }
    QuatMatrix& operator-=(const QuatMatrix& o) {
        require_same_shape(o, "operator-=");
        for (int l = 0; l < kComponents; ++l) planes_[l] -= o.planes_[l];
        return *this;
    }
    QuatMatrix& operator*=(double s) {
        for (auto& p : planes_) p *= s;
        return *this;
    }
    friend QuatMatrix operator+(QuatMatrix a, const QuatMatrix& b) { return a += b; }
    friend QuatMatrix operator-(QuatMatrix a, const QuatMatrix& b) { return a -= b; }
    friend QuatMatrix operator*(QuatMatrix a, double s) { return a *= s; }
    friend QuatMatrix operator*(double s, QuatMatrix a) { return a *= s; }

    bool operator==(const QuatMatrix& o) const {
        if (rows() != o.rows() || cols() != o.cols()) return false;
        for (int l = 0; l < kComponents; ++l)
            if (planes_[l] != o.planes_[l]) return false;
        return true;
    }

    bool all_finite() const {
        for (const auto& p : planes_)
            if (!p.allFinite()) return false;
        return true;
    }

private:
    static int check_component(int l) {
        if (l < 0 || l >= kComponents) throw std::out_of_range("quaternion component index must be 0..3");
        return l;
    }

    void require_same_shape(const QuatMatrix& o, const char* what) const {
        if (rows() != o.rows() || cols() != o.cols())
            throw DimensionError(std::string("QuatMatrix::") + what + ": shape mismatch");
    }

    std::array<RealMatrix, kComponents> planes_;
};

/// S_l(Q): the l-th real component plane.
inline RealMatrix component(const QuatMatrix& q, int l) { return q.plane(l); }

/// W·H for real H; one GEMM per plane.
inline QuatMatrix mul_real(const QuatMatrix& w, const RealMatrix& h) {
    if (w.cols() != h.rows()) throw DimensionError("mul_real: inner dimensions differ");
    QuatMatrix out;
    for (int l = 0; l < kComponents; ++l) out.plane(l).noalias() = w.plane(l) * h;
    return out;
}

/// Re[Wᵀ conj(W)]: entry (s,l) is Σ_t W[t,s]·W[t,l] with the quaternion dot product.
inline RealMatrix gram_real(const QuatMatrix& w) {
    RealMatrix g = RealMatrix::Zero(w.cols(), w.cols());
    for (int l = 0; l < kComponents; ++l) g.noalias() += w.plane(l).transpose() * w.plane(l);
    return g;
}

/// Re[Wᵀ conj(M)]: entry (l,q) is Σ_t W[t,l]·M[t,q].
inline RealMatrix cross_real(const QuatMatrix& w, const QuatMatrix& m) {
    if (w.rows() != m.rows()) throw DimensionError("cross_real: row counts differ");
    RealMatrix c = RealMatrix::Zero(w.cols(), m.cols());
    for (int l = 0; l < kComponents; ++l) c.noalias() += w.plane(l).transpose() * m.plane(l);
    return c;
}

inline double fro_norm_sq(const QuatMatrix& q) {
    double s = 0.0;
    for (int l = 0; l < kComponents; ++l) s += q.plane(l).squaredNorm();
    return s;
}

inline double fro_norm(const QuatMatrix& q) { return std::sqrt(fro_norm_sq(q)); }

}  // namespace qnmf
