#pragma once

/**
 * @file init.hpp
 * @brief Starting factors: successive projection on a real stacking of M, or random.
 *
 * SPA runs on a real matrix whose column norms equal the quaternion column
 * norms of M: the three colour planes for RGB data, all four planes for Stokes
 * data. The selected columns of M become W₀ and H₀ comes from row sweeps
 * started at ξ.
 */

#include <cstdint>
#include <random>
#include <vector>

#include "qnmf/errors.hpp"
#include "qnmf/projection.hpp"
#include "qnmf/quat_matrix.hpp"
#include "qnmf/solvers.hpp"

namespace qnmf {

enum class InitStrategy { SpaStacked, Random };

struct InitPlan {
    InitStrategy strategy{InitStrategy::SpaStacked};
    Index rank{1};
    std::uint64_t seed{0};
};

/// Raised when the SPA residual vanishes before `rank` columns are picked.
class SpaExhaustedError : public DegenerateError {
public:
    SpaExhaustedError(Index selectable, Index requested)
        : DegenerateError("spa_select: only " + std::to_string(selectable) + " of " + std::to_string(requested) +
                          " columns are selectable before the residual vanishes"),
          selectable_(selectable) {}
    Index selectable() const { return selectable_; }

private:
    Index selectable_;
};

/**
 * Successive projection: repeatedly pick the residual column of largest
 * 2-norm (lowest index on ties) and project every column onto the orthogonal
 * complement of the pick. Returns 0-based indices in selection order.
 */
inline std::vector<Index> spa_select(const RealMatrix& x, Index r) {
    if (r < 1 || r > x.cols()) throw std::invalid_argument("spa_select: rank must lie in [1, cols]");
    RealMatrix res = x;
    RealVector norms = res.colwise().squaredNorm().transpose();
    const double scale = norms.size() ? norms.maxCoeff() : 0.0;
    if (!(scale > 0.0)) throw SpaExhaustedError(0, r);
    // Relative threshold on squared norms, i.e. 1e-12 on norms.
    const double vanish = 1e-24 * scale;

    std::vector<Index> picked;
    picked.reserve(static_cast<std::size_t>(r));
    for (Index k = 0; k < r; ++k) {
        Index best = 0;
        for (Index j = 1; j < norms.size(); ++j)
            if (norms[j] > norms[best]) best = j;
        if (!(norms[best] > vanish)) throw SpaExhaustedError(k, r);
        picked.push_back(best);
        const RealVector u = res.col(best) / std::sqrt(norms[best]);
        res -= u * (u.transpose() * res);
        norms = res.colwise().squaredNorm().transpose();
    }
    return picked;
}

/// [S_1; S_2; S_3] for RGB data, [S_0; S_1; S_2; S_3] for Stokes data.
inline RealMatrix build_stacked(const QuatMatrix& m, ConstraintSet set) {
    const int first = set == ConstraintSet::PureNonneg ? 1 : 0;
    const Index planes = kComponents - first;
    RealMatrix out(planes * m.rows(), m.cols());
    for (int l = first; l < kComponents; ++l) out.middleRows((l - first) * m.rows(), m.rows()) = m.plane(l);
    return out;
}

/// Uniform [0,1) quaternions projected onto the constraint set.
template <typename Rng>
QuatMatrix random_feasible(Index rows, Index cols, ConstraintSet set, double xi, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    QuatMatrix w(rows, cols);
    for (int l = 0; l < kComponents; ++l)
        for (Index v = 0; v < cols; ++v)
            for (Index u = 0; u < rows; ++u) w.plane(l)(u, v) = unit(rng);
    project_inplace(w, set, xi);
    return w;
}

inline FactorPair init_factors(const QuatMatrix& m, ConstraintSet set, const InitPlan& plan,
                               const SolverConfig& cfg) {
    if (plan.rank < 1 || plan.rank > m.cols()) throw std::invalid_argument("init_factors: rank must lie in [1, cols(M)]");
    FactorPair fp;
    fp.set = set;
    RealMatrix h0;
    if (plan.strategy == InitStrategy::SpaStacked) {
        const auto k = spa_select(build_stacked(m, set), plan.rank);
        fp.W = project_columns(m.columns(k), set, cfg.xi);
        h0 = RealMatrix::Constant(plan.rank, m.cols(), cfg.xi);
    } else {
        std::mt19937_64 rng(plan.seed);
        fp.W = random_feasible(m.rows(), plan.rank, set, cfg.xi, rng);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        h0.resize(plan.rank, m.cols());
        for (Index v = 0; v < h0.cols(); ++v)
            for (Index u = 0; u < h0.rows(); ++u) h0(u, v) = unit(rng);
        floor_inplace(h0, cfg.xi);
    }
    fp.H = hnls_hr(m, fp.W, h0, cfg);
    return fp;
}

}  // namespace qnmf
