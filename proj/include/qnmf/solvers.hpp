#pragma once

/**
 * @file solvers.hpp
 * @brief Alternating least squares solvers for M ≈ W H with W ∈ H_c^{m×r}, H ≥ ξ.
 *
 * One outer iteration updates W with H fixed, then H with the new W. Each
 * half-step is either
 *
 *  - a projected least-squares solve (ALS):
 *        W ← P_c[ M Hᵀ (H Hᵀ)⁻¹ ],       H ← max(ξ, Re[WᵀW̄]⁻¹ Re[WᵀM̄])
 *  - or hierarchical block-coordinate sweeps (HALS), one column of W or one row
 *    of H at a time. With A = H Hᵀ, B = M Hᵀ the column update is
 *        W[:,l] ← P_c( (B[:,l] - Σ_{t≠l} a_tl W[:,t]) / a_ll )
 *    and with A = Re[WᵀW̄], B = Re[WᵀM̄] the row update is
 *        H[l,:] ← max(ξ, (B[l,:] - Σ_{s≠l} a_ls H[s,:]) / a_ll).
 *    Columns t < l (rows s < l) already hold the current sweep's values.
 *
 * Each column/row subproblem is an isotropic quadratic over a convex set, so
 * the projected unconstrained minimizer is the exact constrained minimizer and
 * the objective ‖M - W H‖_F never increases across HALS sweeps.
 *
 * Cost per call (m×n data, rank r, k sweeps):
 *   column sweeps, Stokes   (2nr² + 8rmn) + k(4mr² + 26mr) flops
 *   column sweeps, RGB      (2nr² + 6rmn) + k(3mr² + 6mr)
 *   row sweeps              8(r²m + rmn) + k(2nr² + nr)
 *
 * Method names pair the W update with the H update:
 *   QHALS       columns / rows
 *   Qals-Rhals  ALS     / rows
 *   Qhals-Rals  columns / ALS
 *   QALS        ALS     / ALS
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qnmf/errors.hpp"
#include "qnmf/metrics.hpp"
#include "qnmf/projection.hpp"
#include "qnmf/quat_matrix.hpp"

namespace qnmf {

enum class Method { QHALS, QalsRhals, QhalsRals, QALS };

inline constexpr std::array<Method, 4> kAllMethods{Method::QHALS, Method::QalsRhals, Method::QhalsRals,
                                                   Method::QALS};

/// Display name, as used in report tables.
inline const char* method_name(Method m) {
    switch (m) {
        case Method::QHALS: return "QHALS";
        case Method::QalsRhals: return "Qals-Rhals";
        case Method::QhalsRals: return "Qhals-Rals";
        case Method::QALS: return "QALS";
    }
    return "?";
}

/// Command-line spelling.
inline const char* method_flag(Method m) {
    switch (m) {
        case Method::QHALS: return "qhals";
        case Method::QalsRhals: return "qals-rhals";
        case Method::QhalsRals: return "qhals-rals";
        case Method::QALS: return "qals";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
    for (Method m : kAllMethods)
        if (s == method_flag(m) || s == method_name(m)) return m;
    return std::nullopt;
}

inline bool hierarchical_w(Method m) { return m == Method::QHALS || m == Method::QhalsRals; }
inline bool hierarchical_h(Method m) { return m == Method::QHALS || m == Method::QalsRhals; }

struct SolverConfig {
    Method method{Method::QHALS};
    Index rank{1};
    int max_outer{1000};
    double outer_tol{1e-4};
    int inner_iter{50};
    double inner_tol{1e-3};
    double xi{kDefaultXi};
    double div_eps{1e-12};
    double time_budget_secs{1e4};
    std::uint64_t seed{0};

    void validate() const {
        if (rank < 1) throw std::invalid_argument("SolverConfig: rank must be >= 1");
        if (max_outer < 1) throw std::invalid_argument("SolverConfig: max_outer must be >= 1");
        if (inner_iter < 1) throw std::invalid_argument("SolverConfig: inner_iter must be >= 1");
        if (!(outer_tol > 0) || !(inner_tol > 0) || !(xi > 0) || !(div_eps > 0) || !(time_budget_secs > 0))
            throw std::invalid_argument("SolverConfig: tolerances, xi and time budget must be positive");
    }
};

struct FactorPair {
    QuatMatrix W;
    RealMatrix H;
    ConstraintSet set{ConstraintSet::Stokes};
};

enum class Termination { Tol, MaxIter, TimeBudget, Degenerate };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::Tol: return "Tol";
        case Termination::MaxIter: return "MaxIter";
        case Termination::TimeBudget: return "TimeBudget";
        case Termination::Degenerate: return "Degenerate";
    }
    return "?";
}

struct RunReport {
    double initial_error{0};
    std::vector<double> errors;      // e(k), k = 1, 2, ...
    std::vector<double> wall_times;  // seconds spent in outer iteration k
    MetricRecord final_metrics;
    Termination terminated_by{Termination::MaxIter};
    int rescues{0};
    std::string diagnostic;
};

struct SolveResult {
    FactorPair factors;
    RunReport report;
};

/// Hooks for tests and tracing. on_sweep fires after every inner sweep or ALS
/// solve with the current (W, H); on_outer after every outer iteration.
struct SolveObserver {
    std::function<void(const QuatMatrix&, const RealMatrix&)> on_sweep;
    std::function<void(int, const FactorPair&)> on_outer;
};

namespace detail {

/// Throws DegenerateError when the symmetric r×r matrix is numerically singular.
inline void require_well_conditioned(const RealMatrix& g, double div_eps, const char* what) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(g, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || !(lo > hi * div_eps))
        throw DegenerateError(std::string(what) + ": Gram matrix is singular (condition estimate exceeds 1/div_eps)");
}

// Runs sweeps until inner_iter is reached or the change relative to the first
// sweep's change drops to inner_tol. sweep() returns ‖X_new - X_old‖_F.
template <typename Sweep>
int run_sweeps(int inner_iter, double inner_tol, Sweep&& sweep) {
    double first = 0.0;
    int k = 0;
    while (k < inner_iter) {
        const double d = sweep();
        ++k;
        if (k == 1) {
            first = d;
            if (first == 0.0) break;
            continue;
        }
        if (d / first <= inner_tol) break;
    }
    return k;
}

}  // namespace detail

/// Projected least squares for W: P_c[M Hᵀ (H Hᵀ)⁻¹].
inline QuatMatrix als_w_step(const QuatMatrix& m, const RealMatrix& h, ConstraintSet set, double xi,
                             double div_eps = 1e-12) {
    if (m.cols() != h.cols()) throw DimensionError("als_w_step: M and H column counts differ");
    const RealMatrix g = h * h.transpose();
    detail::require_well_conditioned(g, div_eps, "als_w_step");
    const Eigen::LLT<RealMatrix> llt(g);
    QuatMatrix w;
    for (int l = 0; l < kComponents; ++l) w.plane(l) = llt.solve(h * m.plane(l).transpose()).transpose();
    project_inplace(w, set, xi);
    return w;
}

/// Projected least squares for H: max(ξ, Re[WᵀW̄]⁻¹ Re[WᵀM̄]).
inline RealMatrix als_h_step(const QuatMatrix& m, const QuatMatrix& w, double xi, double div_eps = 1e-12) {
    if (m.rows() != w.rows()) throw DimensionError("als_h_step: M and W row counts differ");
    const RealMatrix g = gram_real(w);
    detail::require_well_conditioned(g, div_eps, "als_h_step");
    RealMatrix h = g.llt().solve(cross_real(w, m));
    floor_inplace(h, xi);
    return h;
}

/**
 * Hierarchical column sweeps for W with H fixed. Starts from w0 (feasible).
 * A column whose a_ll = ‖H[l,:]‖² is below div_eps carries no weight in the
 * objective and is left as is; qnmf_solve() rescues such columns first.
 */
inline QuatMatrix hnls_wq(const QuatMatrix& m, const RealMatrix& h, const QuatMatrix& w0, ConstraintSet set,
                          const SolverConfig& cfg, const std::function<void(const QuatMatrix&)>& on_sweep = {}) {
    if (m.cols() != h.cols() || w0.rows() != m.rows() || w0.cols() != h.rows())
        throw DimensionError("hnls_wq: shapes of M, H, W0 do not agree");
    const Index r = h.rows();
    const Index rows = m.rows();
    const RealMatrix a = h * h.transpose();
    std::array<RealMatrix, kComponents> b;
    for (int p = 0; p < kComponents; ++p) b[p] = m.plane(p) * h.transpose();

    QuatMatrix w = w0;
    std::array<RealVector, kComponents> v;
    for (auto& x : v) x.resize(rows);

    auto sweep = [&]() {
        double change = 0.0;
        for (Index l = 0; l < r; ++l) {
            const double all = a(l, l);
            if (all < cfg.div_eps) continue;
            for (int p = 0; p < kComponents; ++p) {
                const RealMatrix& wp = w.plane(p);
                v[p] = b[p].col(l);
                for (Index t = 0; t < r; ++t)
                    if (t != l) v[p] -= a(t, l) * wp.col(t);
                v[p] /= all;
            }
            for (Index u = 0; u < rows; ++u) {
                const Quaternion q = project(Quaternion{v[0][u], v[1][u], v[2][u], v[3][u]}, set, cfg.xi);
                change += norm_sq(q - w(u, l));
                w.set(u, l, q);
            }
        }
        if (on_sweep) on_sweep(w);
        return std::sqrt(change);
    };
    detail::run_sweeps(cfg.inner_iter, cfg.inner_tol, sweep);
    return w;
}

/**
 * Hierarchical row sweeps for H with W fixed. Starts from h0 (≥ ξ). Rows with
 * a_ll = ‖W[:,l]‖² below div_eps are left as is.
 */
inline RealMatrix hnls_hr(const QuatMatrix& m, const QuatMatrix& w, const RealMatrix& h0, const SolverConfig& cfg,
                          const std::function<void(const RealMatrix&)>& on_sweep = {}) {
    if (m.rows() != w.rows() || h0.rows() != w.cols() || h0.cols() != m.cols())
        throw DimensionError("hnls_hr: shapes of M, W, H0 do not agree");
    const Index r = w.cols();
    const RealMatrix a = gram_real(w);
    const RealMatrix bt = cross_real(w, m).transpose();  // n×r, rows of H become columns
    RealMatrix ht = h0.transpose();
    RealVector v(ht.rows());

    // on_sweep wants H in its natural orientation.
    RealMatrix h_view;
    auto sweep = [&]() {
        double change = 0.0;
        for (Index l = 0; l < r; ++l) {
            const double all = a(l, l);
            if (all < cfg.div_eps) continue;
            v = bt.col(l);
            for (Index s = 0; s < r; ++s)
                if (s != l) v -= a(l, s) * ht.col(s);
            v /= all;
            v = v.cwiseMax(cfg.xi);
            change += (v - ht.col(l)).squaredNorm();
            ht.col(l) = v;
        }
        if (on_sweep) {
            h_view = ht.transpose();
            on_sweep(h_view);
        }
        return std::sqrt(change);
    };
    detail::run_sweeps(cfg.inner_iter, cfg.inner_tol, sweep);
    return ht.transpose();
}

/**
 * Re-seeds component l after its column of W or row of H has collapsed.
 *
 * With R = M - Σ_{s≠l} W[:,s] H[s,:], W[:,l] becomes the projection of the
 * largest-norm column of R (lowest index on ties; columns whose projection is
 * numerically zero are skipped) and H[l,:] its best nonnegative coefficients
 * against R, floored at ξ. Returns false when no column of R survives.
 */
inline bool rescue_degenerate(Index l, const QuatMatrix& m, QuatMatrix& w, RealMatrix& h, ConstraintSet set,
                              double xi, double div_eps = 1e-12) {
    QuatMatrix res = m;
    for (int p = 0; p < kComponents; ++p) {
        res.plane(p).noalias() -= w.plane(p) * h;
        res.plane(p).noalias() += w.plane(p).col(l) * h.row(l);
    }
    std::vector<Index> order(static_cast<std::size_t>(res.cols()));
    std::iota(order.begin(), order.end(), Index{0});
    std::vector<double> norms(order.size());
    for (Index q = 0; q < res.cols(); ++q) norms[static_cast<std::size_t>(q)] = res.column_norm_sq(q);
    std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
        return norms[static_cast<std::size_t>(x)] > norms[static_cast<std::size_t>(y)];
    });

    for (Index q : order) {
        if (norms[static_cast<std::size_t>(q)] < div_eps) break;
        QuatMatrix col = res.columns(std::array<Index, 1>{q});
        project_inplace(col, set, xi);
        const double nsq = fro_norm_sq(col);
        if (nsq < div_eps) continue;
        for (int p = 0; p < kComponents; ++p) w.plane(p).col(l) = col.plane(p).col(0);
        RealMatrix coef = cross_real(col, res) / nsq;
        h.row(l) = coef.row(0).cwiseMax(xi);
        return true;
    }
    return false;
}

namespace detail {

// Rescues every component whose diagonal Gram entry is below div_eps.
inline bool rescue_all(const RealVector& diag, const QuatMatrix& m, FactorPair& fp, double xi, double div_eps,
                       RunReport& report) {
    for (Index l = 0; l < diag.size(); ++l) {
        if (diag[l] >= div_eps) continue;
        if (!rescue_degenerate(l, m, fp.W, fp.H, fp.set, xi, div_eps)) {
            report.diagnostic = "component " + std::to_string(l) + " collapsed and no residual column could replace it";
            return false;
        }
        ++report.rescues;
    }
    return true;
}

}  // namespace detail

/// One outer iteration (W update, then H update) in place. Returns false if the
/// run cannot continue; report.diagnostic then says why.
inline bool qnmf_step(const QuatMatrix& m, const SolverConfig& cfg, FactorPair& fp, RunReport& report,
                      const SolveObserver& obs = {}) {
    try {
        if (!detail::rescue_all((fp.H * fp.H.transpose()).diagonal(), m, fp, cfg.xi, cfg.div_eps, report))
            return false;
        if (hierarchical_w(cfg.method)) {
            std::function<void(const QuatMatrix&)> hook;
            if (obs.on_sweep) hook = [&](const QuatMatrix& w) { obs.on_sweep(w, fp.H); };
            fp.W = hnls_wq(m, fp.H, fp.W, fp.set, cfg, hook);
        } else {
            fp.W = als_w_step(m, fp.H, fp.set, cfg.xi, cfg.div_eps);
            if (obs.on_sweep) obs.on_sweep(fp.W, fp.H);
        }

        if (!detail::rescue_all(gram_real(fp.W).diagonal(), m, fp, cfg.xi, cfg.div_eps, report)) return false;
        if (hierarchical_h(cfg.method)) {
            std::function<void(const RealMatrix&)> hook;
            if (obs.on_sweep) hook = [&](const RealMatrix& h) { obs.on_sweep(fp.W, h); };
            fp.H = hnls_hr(m, fp.W, fp.H, cfg, hook);
        } else {
            fp.H = als_h_step(m, fp.W, cfg.xi, cfg.div_eps);
            if (obs.on_sweep) obs.on_sweep(fp.W, fp.H);
        }
    } catch (const DegenerateError& e) {
        report.diagnostic = e.what();
        return false;
    }
    return true;
}

namespace detail {

inline void require_feasible_init(const QuatMatrix& m, const FactorPair& init, const SolverConfig& cfg) {
    if (init.W.rows() != m.rows() || init.H.cols() != m.cols() || init.W.cols() != init.H.rows())
        throw DimensionError("qnmf_solve: initial factors do not match the data shape");
    if (init.W.cols() != cfg.rank) throw DimensionError("qnmf_solve: initial factors do not have the configured rank");
    const double scale = std::max(1.0, std::sqrt(fro_norm_sq(init.W) / static_cast<double>(std::max<Index>(1, init.W.size()))));
    if (!is_feasible(init.W, init.set, 1e-9 * scale))
        throw std::invalid_argument("qnmf_solve: initial W is outside its constraint set");
    if (init.H.size() > 0 && init.H.minCoeff() < cfg.xi)
        throw std::invalid_argument("qnmf_solve: initial H has entries below xi");
}

// e(k) at this level is rounding noise; a relative-decrease test on it is meaningless.
inline constexpr double kErrorNoiseFloor = 64.0 * std::numeric_limits<double>::epsilon();

}  // namespace detail

/**
 * Outer driver. Stops when the relative decrease (e(k-1) - e(k)) / e(k-1) is at
 * most outer_tol, after max_outer iterations, or once the time budget is spent.
 * A collapsed component that cannot be rescued ends the run with
 * Termination::Degenerate and the last good factors.
 */
inline SolveResult qnmf_solve(const QuatMatrix& m, ConstraintSet set, const SolverConfig& cfg, FactorPair init,
                              const SolveObserver& obs = {}) {
    using clock = std::chrono::steady_clock;
    cfg.validate();
    init.set = set;
    detail::require_feasible_init(m, init, cfg);

    SolveResult out{std::move(init), {}};
    FactorPair& fp = out.factors;
    RunReport& rep = out.report;

    const auto start = clock::now();
    double e_prev = rel_error(m, fp.W, fp.H);
    rep.initial_error = e_prev;
    rep.terminated_by = Termination::MaxIter;

    for (int t = 1; t <= cfg.max_outer; ++t) {
        const auto t0 = clock::now();
        FactorPair backup = fp;
        if (!qnmf_step(m, cfg, fp, rep, obs)) {
            fp = std::move(backup);
            rep.terminated_by = Termination::Degenerate;
            break;
        }
        const double e = rel_error(m, fp.W, fp.H);
        const auto t1 = clock::now();
        if (!std::isfinite(e))
            throw std::runtime_error("qnmf_solve: relative error became non-finite at iteration " + std::to_string(t));
        rep.errors.push_back(e);
        rep.wall_times.push_back(std::chrono::duration<double>(t1 - t0).count());
        if (obs.on_outer) obs.on_outer(t, fp);

        if (e_prev <= detail::kErrorNoiseFloor || (e_prev - e) / e_prev <= cfg.outer_tol) {
            rep.terminated_by = Termination::Tol;
            break;
        }
        if (std::chrono::duration<double>(t1 - start).count() >= cfg.time_budget_secs) {
            rep.terminated_by = Termination::TimeBudget;
            break;
        }
        e_prev = e;
    }

    rep.final_metrics = compute_metrics(m, fp.W, fp.H);
    rep.final_metrics.elapsed = std::chrono::duration<double>(clock::now() - start).count();
    if (rep.errors.empty()) rep.errors.push_back(rep.final_metrics.e);
    return out;
}

}  // namespace qnmf
