#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qnmf/metrics.hpp"
#include "qnmf/solvers.hpp"
#include "qnmf/synth.hpp"

using namespace qnmf;

namespace {

constexpr double kXi = 1e-9;

QuatMatrix random_feasible_w(Index rows, Index cols, ConstraintSet set, std::mt19937_64& rng) {
    QuatMatrix w(rows, cols);
    for (Index v = 0; v < cols; ++v)
        for (Index u = 0; u < rows; ++u)
            w.set(u, v, set == ConstraintSet::Stokes ? oracle::random_stokes_point(rng, 1.0)
                                                     : oracle::random_pure_nonneg_point(rng));
    return w;
}

RealMatrix random_h(Index rows, Index cols, std::mt19937_64& rng) {
    RealMatrix h = oracle::random_real(rows, cols, rng);
    floor_inplace(h, kXi);
    return h;
}

double residual(const QuatMatrix& m, const QuatMatrix& w, const RealMatrix& h) {
    double s = 0.0;
    for (int l = 0; l < kComponents; ++l) s += (m.plane(l) - w.plane(l) * h).squaredNorm();
    return std::sqrt(s);
}

SolverConfig sweeps_exactly(int n) {
    SolverConfig cfg;
    cfg.inner_iter = n;
    cfg.inner_tol = 1e-300;
    cfg.xi = kXi;
    return cfg;
}

double change(const FactorPair& a, const FactorPair& b) {
    QuatMatrix dw = a.W;
    dw -= b.W;
    return std::sqrt(fro_norm_sq(dw) + (a.H - b.H).squaredNorm());
}

}  // namespace

TEST(Methods, NamesAndFlags) {
    EXPECT_STREQ(method_name(Method::QHALS), "QHALS");
    EXPECT_STREQ(method_name(Method::QalsRhals), "Qals-Rhals");
    EXPECT_STREQ(method_name(Method::QhalsRals), "Qhals-Rals");
    EXPECT_STREQ(method_name(Method::QALS), "QALS");
    for (Method m : kAllMethods) EXPECT_EQ(parse_method(method_flag(m)), m);
    EXPECT_FALSE(parse_method("hals").has_value());
    EXPECT_TRUE(hierarchical_w(Method::QhalsRals));
    EXPECT_FALSE(hierarchical_h(Method::QhalsRals));
    EXPECT_TRUE(hierarchical_h(Method::QalsRhals));
    EXPECT_FALSE(hierarchical_w(Method::QALS));
}

TEST(SolverConfig, Validation) {
    SolverConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.max_outer, 1000);
    EXPECT_EQ(cfg.outer_tol, 1e-4);
    EXPECT_EQ(cfg.inner_iter, 50);
    EXPECT_EQ(cfg.inner_tol, 1e-3);
    EXPECT_EQ(cfg.xi, 1e-9);
    EXPECT_EQ(cfg.div_eps, 1e-12);
    EXPECT_EQ(cfg.time_budget_secs, 1e4);
    cfg.rank = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.outer_tol = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.max_outer = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(AlsW, MeanColumnForConstantH) {
    const Index n = 4;
    QuatMatrix m(2, n);
    for (Index v = 0; v < n; ++v) {
        m.set(0, v, Quaternion(2, 1, 0, 0));
        m.set(1, v, Quaternion(1, 0, 0.5, 0.5));
    }
    const RealMatrix h = RealMatrix::Constant(1, n, 1.0 / std::sqrt(double(n)));
    const QuatMatrix w = als_w_step(m, h, ConstraintSet::Stokes, kXi);
    EXPECT_NEAR(w(0, 0).q0, 2 * std::sqrt(double(n)), 1e-12);
    EXPECT_NEAR(w(0, 0).q1, std::sqrt(double(n)), 1e-12);
    EXPECT_LE(oracle::max_abs_diff(mul_real(w, h), m), 1e-12);
}

TEST(AlsW, RecoversExactModel) {
    std::mt19937_64 rng(2);
    for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
        const QuatMatrix ws = random_feasible_w(5, 3, set, rng);
        const RealMatrix h = random_h(3, 8, rng);
        const QuatMatrix w = als_w_step(mul_real(ws, h), h, set, kXi);
        EXPECT_LE(oracle::max_abs_diff(w, ws), 1e-10);
    }
}

TEST(AlsW, MatchesNormalEquationOracle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const QuatMatrix m = oracle::random_qmat(4, 6, rng);
        const RealMatrix h = oracle::random_real(2, 6, rng);
        const RealMatrix hinv = oracle::inverse2(h * h.transpose());
        const QuatMatrix mh = oracle::quat_matmul(m, oracle::as_quat(h.transpose()));
        const QuatMatrix raw = oracle::quat_matmul(mh, oracle::as_quat(hinv));
        for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
            QuatMatrix expect = raw;
            for (Index v = 0; v < 2; ++v)
                for (Index u = 0; u < 4; ++u) expect.set(u, v, project(raw(u, v), set, kXi));
            EXPECT_LE(oracle::max_abs_diff(als_w_step(m, h, set, kXi), expect), 1e-10);
        }
    }
}

TEST(AlsW, SingularGramThrows) {
    std::mt19937_64 rng(4);
    const QuatMatrix m = oracle::random_qmat(3, 5, rng);
    RealMatrix h = oracle::random_real(2, 5, rng);
    h.row(1) = h.row(0);
    EXPECT_THROW(als_w_step(m, h, ConstraintSet::Stokes, kXi), DegenerateError);
    EXPECT_THROW(als_w_step(m, RealMatrix::Zero(2, 5), ConstraintSet::Stokes, kXi), DegenerateError);
}

TEST(AlsH, Examples) {
    QuatMatrix w(2, 1);
    w.set(0, 0, Quaternion(0.5, 0.5, 0, 0));
    w.set(1, 0, Quaternion(0.5, 0, 0, 0.5));
    ASSERT_DOUBLE_EQ(gram_real(w)(0, 0), 1.0);
    QuatMatrix m = w.columns(std::array<Index, 3>{0, 0, 0});
    const RealMatrix h = als_h_step(m, w, kXi);
    EXPECT_LE((h - RealMatrix::Ones(1, 3)).cwiseAbs().maxCoeff(), 1e-15);

    m *= -1.0;
    EXPECT_EQ(als_h_step(m, w, kXi), RealMatrix::Constant(1, 3, kXi));
}

TEST(AlsH, MatchesNormalEquationOracle) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const QuatMatrix w = oracle::random_qmat(5, 2, rng);
        const QuatMatrix m = oracle::random_qmat(5, 3, rng);
        const RealMatrix expect_raw = oracle::inverse2(oracle::gram_entrywise(w)) * oracle::cross_entrywise(w, m);
        const RealMatrix expect = expect_raw.cwiseMax(kXi);
        EXPECT_LE((als_h_step(m, w, kXi) - expect).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(AlsH, SingularGramThrows) {
    std::mt19937_64 rng(6);
    QuatMatrix w = oracle::random_qmat(4, 2, rng);
    w.plane(0).col(1) = w.plane(0).col(0);
    w.plane(1).col(1) = w.plane(1).col(0);
    w.plane(2).col(1) = w.plane(2).col(0);
    w.plane(3).col(1) = w.plane(3).col(0);
    EXPECT_THROW(als_h_step(oracle::random_qmat(4, 3, rng), w, kXi), DegenerateError);
}

TEST(HnlsWq, ExactModelIsFixedPoint) {
    std::mt19937_64 rng(7);
    for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
        const QuatMatrix ws = random_feasible_w(6, 3, set, rng);
        const RealMatrix h = random_h(3, 9, rng);
        std::vector<QuatMatrix> iterates;
        const QuatMatrix w =
            hnls_wq(mul_real(ws, h), h, ws, set, SolverConfig{}, [&](const QuatMatrix& x) { iterates.push_back(x); });
        ASSERT_FALSE(iterates.empty());
        EXPECT_LE(oracle::max_abs_diff(iterates.front(), ws), 1e-12);
        EXPECT_LE(oracle::max_abs_diff(w, ws), 1e-12);
    }
}

TEST(HnlsWq, RankOneClosedForm) {
    std::mt19937_64 rng(8);
    const QuatMatrix m = oracle::random_qmat(5, 7, rng);
    const RealMatrix h = random_h(1, 7, rng);
    const QuatMatrix w0(5, 1);
    const QuatMatrix w = hnls_wq(m, h, w0, ConstraintSet::Stokes, SolverConfig{});
    const double hh = h.squaredNorm();
    for (Index u = 0; u < 5; ++u) {
        Quaternion num;
        for (Index v = 0; v < 7; ++v) num += m(u, v) * h(0, v);
        const Quaternion expect = proj_stokes(num * (1.0 / hh));
        EXPECT_LE(modulus(w(u, 0) - expect), 1e-14);
    }
}

TEST(HnlsWq, MatchesResidualFormOracle) {
    std::mt19937_64 rng(9);
    for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
        for (int trial = 0; trial < 10; ++trial) {
            const QuatMatrix m = mul_real(random_feasible_w(6, 3, set, rng), random_h(3, 6, rng));
            const RealMatrix h = random_h(2, 6, rng);
            const QuatMatrix w0 = random_feasible_w(6, 2, set, rng);

            std::vector<QuatMatrix> iterates;
            hnls_wq(m, h, w0, set, sweeps_exactly(10), [&](const QuatMatrix& w) { iterates.push_back(w); });
            ASSERT_EQ(iterates.size(), 10u);

            QuatMatrix w = w0;
            for (int k = 0; k < 10; ++k) {
                for (Index l = 0; l < 2; ++l) {
                    const auto col = oracle::w_column_from_residual(m, h, w, l);
                    for (Index u = 0; u < 6; ++u) w.set(u, l, project(col[std::size_t(u)], set, kXi));
                }
                EXPECT_LE(oracle::max_abs_diff(iterates[std::size_t(k)], w), 1e-12) << "sweep " << k;
            }
        }
    }
}

TEST(HnlsHr, Examples) {
    QuatMatrix m(1, 1), w(1, 1);
    m.set(0, 0, Quaternion(2.0));
    w.set(0, 0, Quaternion(1.0));
    EXPECT_NEAR(hnls_hr(m, w, RealMatrix::Constant(1, 1, kXi), SolverConfig{})(0, 0), 2.0, 1e-15);

    std::mt19937_64 rng(10);
    const QuatMatrix w2 = random_feasible_w(4, 2, ConstraintSet::Stokes, rng);
    QuatMatrix neg = mul_real(w2, random_h(2, 5, rng));
    neg *= -1.0;
    EXPECT_EQ(hnls_hr(neg, w2, random_h(2, 5, rng), SolverConfig{}), RealMatrix::Constant(2, 5, kXi));
}

TEST(HnlsHr, MatchesEntrywiseOracle) {
    std::mt19937_64 rng(11);
    for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
        for (int trial = 0; trial < 10; ++trial) {
            const QuatMatrix m = mul_real(random_feasible_w(6, 3, set, rng), random_h(3, 6, rng));
            const QuatMatrix w = random_feasible_w(6, 2, set, rng);
            const RealMatrix h0 = random_h(2, 6, rng);

            std::vector<RealMatrix> iterates;
            hnls_hr(m, w, h0, sweeps_exactly(10), [&](const RealMatrix& h) { iterates.push_back(h); });
            ASSERT_FALSE(iterates.empty());
            ASSERT_LE(iterates.size(), 10u);

            // Row sweeps with clamping can reach their fixed point exactly; the
            // run then stops early and later oracle sweeps must not move.
            RealMatrix h = h0;
            for (std::size_t k = 0; k < 10; ++k) {
                for (Index l = 0; l < 2; ++l) {
                    const auto row = oracle::h_row_entrywise(m, w, h, l);
                    for (Index q = 0; q < 6; ++q) h(l, q) = std::max(kXi, row[std::size_t(q)]);
                }
                const RealMatrix& got = iterates[std::min(k, iterates.size() - 1)];
                EXPECT_LE((got - h).cwiseAbs().maxCoeff(), 1e-12) << "sweep " << k;
            }
        }
    }
}

TEST(InnerStop, StopsOnRelativeChange) {
    std::mt19937_64 rng(12);
    const QuatMatrix m = oracle::random_qmat(8, 8, rng);
    const QuatMatrix w0 = random_feasible_w(8, 3, ConstraintSet::Stokes, rng);
    SolverConfig cfg;
    cfg.inner_iter = 7;
    int sweeps = 0;
    hnls_wq(m, random_h(3, 8, rng), w0, ConstraintSet::Stokes, cfg, [&](const QuatMatrix&) { ++sweeps; });
    EXPECT_GE(sweeps, 1);
    EXPECT_LE(sweeps, 7);
    cfg.inner_tol = 1e3;
    sweeps = 0;
    hnls_wq(m, random_h(3, 8, rng), w0, ConstraintSet::Stokes, cfg, [&](const QuatMatrix&) { ++sweeps; });
    EXPECT_EQ(sweeps, 2);
}

TEST(Closure, ProductStaysFeasible) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const RealMatrix h = oracle::random_real(3, 5, rng);
        const QuatMatrix s = mul_real(random_feasible_w(4, 3, ConstraintSet::Stokes, rng), h);
        EXPECT_TRUE(is_feasible(s, ConstraintSet::Stokes));
        const QuatMatrix p = mul_real(random_feasible_w(4, 3, ConstraintSet::PureNonneg, rng), h);
        EXPECT_TRUE(p.plane(0).isZero(0.0));
        EXPECT_TRUE(is_feasible(p, ConstraintSet::PureNonneg, 0.0));
    }
}

TEST(QnmfSolve, ExactInitStopsImmediately) {
    std::mt19937_64 rng(14);
    for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
        const QuatMatrix ws = random_feasible_w(10, 3, set, rng);
        const RealMatrix hs = random_h(3, 12, rng);
        for (Method method : kAllMethods) {
            SolverConfig cfg;
            cfg.method = method;
            cfg.rank = 3;
            const SolveResult res = qnmf_solve(mul_real(ws, hs), set, cfg, {ws, hs, set});
            EXPECT_LE(res.report.errors.size(), 2u) << method_name(method);
            EXPECT_LE(res.report.errors.back(), 1e-12) << method_name(method);
            EXPECT_EQ(res.report.terminated_by, Termination::Tol);
        }
    }
}

TEST(QnmfSolve, RejectsInfeasibleInit) {
    std::mt19937_64 rng(15);
    const QuatMatrix m = oracle::random_qmat(4, 4, rng);
    SolverConfig cfg;
    cfg.rank = 2;
    QuatMatrix w = random_feasible_w(4, 2, ConstraintSet::Stokes, rng);
    EXPECT_THROW(qnmf_solve(m, ConstraintSet::Stokes, cfg, {w, RealMatrix::Zero(2, 4), ConstraintSet::Stokes}),
                 std::invalid_argument);
    w.set(0, 0, Quaternion(-1.0));
    EXPECT_THROW(qnmf_solve(m, ConstraintSet::Stokes, cfg, {w, random_h(2, 4, rng), ConstraintSet::Stokes}),
                 std::invalid_argument);
    cfg.rank = 3;
    EXPECT_THROW(qnmf_solve(m, ConstraintSet::Stokes, cfg, {random_feasible_w(4, 2, ConstraintSet::Stokes, rng),
                                                            random_h(2, 4, rng), ConstraintSet::Stokes}),
                 DimensionError);
}

TEST(QnmfSolve, QhalsMonotoneAndFeasible) {
    for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            SynthSpec spec;
            spec.set = set;
            spec.m = 24;
            spec.n = 20;
            spec.r = 4;
            spec.noise = 0.1;
            spec.seed = seed;
            const SynthData d = synthesize(spec);
            std::mt19937_64 rng(seed);
            SolverConfig cfg;
            cfg.rank = 4;
            cfg.max_outer = 30;
            FactorPair init{random_feasible_w(24, 4, set, rng), random_h(4, 20, rng), set};

            double prev = residual(d.M, init.W, init.H);
            bool monotone = true;
            bool feasible = true;
            SolveObserver obs;
            obs.on_sweep = [&](const QuatMatrix& w, const RealMatrix& h) {
                const double cur = residual(d.M, w, h);
                if (cur > prev * (1 + 1e-10)) monotone = false;
                prev = cur;
            };
            obs.on_outer = [&](int, const FactorPair& fp) {
                if (!is_feasible(fp.W, set) || fp.H.minCoeff() < cfg.xi) feasible = false;
            };
            const SolveResult res = qnmf_solve(d.M, set, cfg, init, obs);
            EXPECT_TRUE(monotone) << "seed " << seed;
            EXPECT_TRUE(feasible) << "seed " << seed;
            for (std::size_t k = 1; k < res.report.errors.size(); ++k)
                EXPECT_LE(res.report.errors[k], res.report.errors[k - 1] * (1 + 1e-10));
            EXPECT_EQ(res.report.errors.size(), res.report.wall_times.size());
        }
    }
}

TEST(QnmfSolve, EveryMethodKeepsFeasibility) {
    SynthSpec spec;
    spec.m = 16;
    spec.n = 16;
    spec.r = 3;
    spec.noise = 0.05;
    for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
        spec.set = set;
        const SynthData d = synthesize(spec);
        for (Method method : kAllMethods) {
            std::mt19937_64 rng(21);
            SolverConfig cfg;
            cfg.method = method;
            cfg.rank = 3;
            cfg.max_outer = 20;
            const SolveResult res = qnmf_solve(d.M, set, cfg, {random_feasible_w(16, 3, set, rng), random_h(3, 16, rng), set});
            EXPECT_TRUE(is_feasible(res.factors.W, set)) << method_name(method);
            EXPECT_GE(res.factors.H.minCoeff(), cfg.xi);
            EXPECT_FALSE(res.report.errors.empty());
            for (double e : res.report.errors) EXPECT_TRUE(std::isfinite(e));
            EXPECT_NEAR(res.report.final_metrics.e, res.report.errors.back(), 1e-15);
        }
    }
}

TEST(QnmfSolve, FixedPointIsStationary) {
    std::mt19937_64 rng(16);
    const QuatMatrix ws = random_feasible_w(8, 2, ConstraintSet::Stokes, rng);
    const RealMatrix hs = random_h(2, 8, rng);
    const QuatMatrix m = mul_real(ws, hs);
    SolverConfig cfg;
    cfg.rank = 2;
    FactorPair fp{random_feasible_w(8, 2, ConstraintSet::Stokes, rng), random_h(2, 8, rng), ConstraintSet::Stokes};
    RunReport rep;
    bool checked = false;
    for (int t = 0; t < 3000 && !checked; ++t) {
        const FactorPair before = fp;
        ASSERT_TRUE(qnmf_step(m, cfg, fp, rep));
        if (change(before, fp) < 1e-14) {
            const FactorPair at = fp;
            ASSERT_TRUE(qnmf_step(m, cfg, fp, rep));
            EXPECT_LT(change(at, fp), 1e-12);
            checked = true;
        }
    }
    if (!checked) {
        // The exact factors are a fixed point in any case.
        FactorPair exact{ws, hs, ConstraintSet::Stokes};
        ASSERT_TRUE(qnmf_step(m, cfg, exact, rep));
        const FactorPair at = exact;
        ASSERT_TRUE(qnmf_step(m, cfg, exact, rep));
        EXPECT_LT(change(at, exact), 1e-12);
    }
}

TEST(Rescue, CollapsedStokesColumn) {
    std::mt19937_64 rng(17);
    const QuatMatrix ws = random_feasible_w(6, 2, ConstraintSet::Stokes, rng);
    const QuatMatrix m = mul_real(ws, random_h(2, 7, rng));
    // Column 1 has negative real parts everywhere, so it projects to exactly zero.
    QuatMatrix w = ws;
    for (Index u = 0; u < 6; ++u) w.set(u, 1, Quaternion(-1.0 - double(u), 0.1, 0, 0));
    project_inplace(w, ConstraintSet::Stokes, kXi);
    ASSERT_EQ(w.column_norm_sq(1), 0.0);
    RealMatrix h = random_h(2, 7, rng);

    ASSERT_TRUE(rescue_degenerate(1, m, w, h, ConstraintSet::Stokes, kXi));
    EXPECT_GE(gram_real(w)(1, 1), 1e-12);
    EXPECT_TRUE(is_feasible(w, ConstraintSet::Stokes));
    EXPECT_GE(h.minCoeff(), kXi);

    // Deterministic: same inputs, same result.
    QuatMatrix w2 = ws;
    for (Index u = 0; u < 6; ++u) w2.set(u, 1, Quaternion{});
    RealMatrix h2 = h;
    QuatMatrix w3 = w2;
    RealMatrix h3 = h;
    rescue_degenerate(1, m, w2, h2, ConstraintSet::Stokes, kXi);
    rescue_degenerate(1, m, w3, h3, ConstraintSet::Stokes, kXi);
    EXPECT_EQ(w2, w3);
    EXPECT_EQ(h2, h3);
}

TEST(Rescue, TriggeredInsideSolve) {
    std::mt19937_64 rng(18);
    const QuatMatrix ws = random_feasible_w(6, 2, ConstraintSet::Stokes, rng);
    const QuatMatrix m = mul_real(ws, random_h(2, 7, rng));
    // A row of H at the ξ floor carries ‖H[l,:]‖² far below div_eps.
    RealMatrix h = random_h(2, 7, rng);
    h.row(1).setConstant(kXi);
    SolverConfig cfg;
    cfg.rank = 2;
    const SolveResult res = qnmf_solve(m, ConstraintSet::Stokes, cfg, {ws, h, ConstraintSet::Stokes});
    EXPECT_GE(res.report.rescues, 1);
    EXPECT_NE(res.report.terminated_by, Termination::Degenerate);
    EXPECT_TRUE(is_feasible(res.factors.W, ConstraintSet::Stokes));
}

TEST(Rescue, FloorPreventsTrigger) {
    std::mt19937_64 rng(19);
    const Index n = 64;
    const QuatMatrix m = mul_real(random_feasible_w(6, 2, ConstraintSet::Stokes, rng), random_h(2, n, rng));
    SolverConfig cfg;
    cfg.rank = 2;
    cfg.xi = 1e-5;  // ξ²·n ≥ div_eps
    RealMatrix h = random_h(2, n, rng);
    h.row(1).setConstant(cfg.xi);
    FactorPair fp{random_feasible_w(6, 2, ConstraintSet::Stokes, rng), h, ConstraintSet::Stokes};
    RunReport rep;
    ASSERT_TRUE(detail::rescue_all((fp.H * fp.H.transpose()).diagonal(), m, fp, cfg.xi, cfg.div_eps, rep));
    EXPECT_EQ(rep.rescues, 0);
}

TEST(Rescue, RankOneDataWithRankTwo) {
    std::mt19937_64 rng(20);
    for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
        const QuatMatrix ws = random_feasible_w(8, 1, set, rng);
        const QuatMatrix m = mul_real(ws, random_h(1, 10, rng));
        for (Method method : kAllMethods) {
            SolverConfig cfg;
            cfg.rank = 2;
            cfg.method = method;
            cfg.max_outer = 200;
            QuatMatrix w = ws.columns(std::array<Index, 2>{0, 0});
            for (Index u = 0; u < 8; ++u) w.set(u, 1, Quaternion{});
            const SolveResult res = qnmf_solve(m, set, cfg, {w, random_h(2, 10, rng), set});
            if (hierarchical_w(method) && hierarchical_h(method)) {
                EXPECT_NE(res.report.terminated_by, Termination::Degenerate) << res.report.diagnostic;
            }
            EXPECT_LE(res.report.rescues, 1) << method_name(method);
            EXPECT_TRUE(is_feasible(res.factors.W, set));
            EXPECT_FALSE(res.report.errors.empty());
        }
    }
}

TEST(QnmfSolve, Deterministic) {
    SynthSpec spec;
    spec.m = 20;
    spec.n = 20;
    spec.r = 3;
    spec.noise = 0.1;
    spec.seed = 3;
    const SynthData d = synthesize(spec);
    std::mt19937_64 rng(22);
    const FactorPair init{random_feasible_w(20, 3, ConstraintSet::Stokes, rng), random_h(3, 20, rng),
                          ConstraintSet::Stokes};
    SolverConfig cfg;
    cfg.rank = 3;
    cfg.max_outer = 50;
    const SolveResult a = qnmf_solve(d.M, ConstraintSet::Stokes, cfg, init);
    const SolveResult b = qnmf_solve(d.M, ConstraintSet::Stokes, cfg, init);
    EXPECT_EQ(a.factors.W, b.factors.W);
    EXPECT_EQ(a.factors.H, b.factors.H);
    EXPECT_EQ(a.report.errors, b.report.errors);
}

TEST(QnmfSolve, MaxIterAndTimeBudget) {
    SynthSpec spec;
    spec.m = 16;
    spec.n = 16;
    spec.r = 4;
    spec.noise = 0.2;
    const SynthData d = synthesize(spec);
    std::mt19937_64 rng(23);
    const FactorPair init{random_feasible_w(16, 4, ConstraintSet::Stokes, rng), random_h(4, 16, rng),
                          ConstraintSet::Stokes};
    SolverConfig cfg;
    cfg.rank = 4;
    cfg.max_outer = 3;
    cfg.outer_tol = 1e-300;
    SolveResult res = qnmf_solve(d.M, ConstraintSet::Stokes, cfg, init);
    EXPECT_EQ(res.report.terminated_by, Termination::MaxIter);
    EXPECT_EQ(res.report.errors.size(), 3u);

    cfg.max_outer = 1000;
    cfg.time_budget_secs = 1e-12;
    res = qnmf_solve(d.M, ConstraintSet::Stokes, cfg, init);
    EXPECT_EQ(res.report.terminated_by, Termination::TimeBudget);
    EXPECT_EQ(res.report.errors.size(), 1u);
}
