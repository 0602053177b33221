#pragma once

/**
 * @file metrics.hpp
 * @brief Relative approximation quality of a factorization M ≈ W H.
 *
 *   Υ   = 1 - ‖M - W H‖_F / ‖M‖_F
 *   Υ_l = 1 - ‖S_l(M) - S_l(W) H‖_F / ‖S_l(M)‖_F,   l = 0..3
 *   e   = ‖M - W H‖_F / ‖M‖_F = 1 - Υ
 *
 * Values are fractions; the CLI prints percent. A component whose reference
 * plane is identically zero (the real plane of RGB data, say) has no Υ_l.
 */

#include <array>
#include <atomic>
#include <optional>

#include "qnmf/quat_matrix.hpp"

namespace qnmf {

struct MetricRecord {
    double upsilon{0};
    std::array<std::optional<double>, kComponents> upsilon_l{};
    double e{0};
    double elapsed{0};
};

namespace detail {
// Number of residual planes M - W H materialized so far; tests use it to check
// that one metric evaluation costs one residual pass.
inline std::atomic<std::size_t> residual_passes{0};
}  // namespace detail

/// Squared Frobenius norm of each residual plane S_l(M) - S_l(W) H.
inline std::array<double, kComponents> residual_plane_norms_sq(const QuatMatrix& m, const QuatMatrix& w,
                                                               const RealMatrix& h) {
    if (w.cols() != h.rows() || m.rows() != w.rows() || m.cols() != h.cols())
        throw DimensionError("residual: shapes of M, W, H do not agree");
    detail::residual_passes.fetch_add(1, std::memory_order_relaxed);
    std::array<double, kComponents> out{};
    RealMatrix r(m.rows(), m.cols());
    for (int l = 0; l < kComponents; ++l) {
        r = m.plane(l);
        r.noalias() -= w.plane(l) * h;
        out[l] = r.squaredNorm();
    }
    return out;
}

/// Every metric from a single residual pass.
inline MetricRecord compute_metrics(const QuatMatrix& m, const QuatMatrix& w, const RealMatrix& h) {
    const auto res = residual_plane_norms_sq(m, w, h);
    MetricRecord rec;
    double ref_total = 0.0;
    double res_total = 0.0;
    for (int l = 0; l < kComponents; ++l) {
        const double ref = m.plane(l).squaredNorm();
        ref_total += ref;
        res_total += res[l];
        if (ref > 0.0) rec.upsilon_l[l] = 1.0 - std::sqrt(res[l]) / std::sqrt(ref);
    }
    if (!(ref_total > 0.0)) throw UndefinedMetricError("metrics: data matrix has zero norm");
    rec.e = std::sqrt(res_total) / std::sqrt(ref_total);
    rec.upsilon = 1.0 - rec.e;
    return rec;
}

inline double rel_error(const QuatMatrix& m, const QuatMatrix& w, const RealMatrix& h) {
    return compute_metrics(m, w, h).e;
}

inline double total_approx(const QuatMatrix& m, const QuatMatrix& w, const RealMatrix& h) {
    return compute_metrics(m, w, h).upsilon;
}

inline double component_approx(const QuatMatrix& m, const QuatMatrix& w, const RealMatrix& h, int l) {
    auto v = compute_metrics(m, w, h).upsilon_l.at(static_cast<std::size_t>(l));
    if (!v) throw UndefinedMetricError("metrics: component plane " + std::to_string(l) + " is identically zero");
    return *v;
}

}  // namespace qnmf
