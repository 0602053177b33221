#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qnmf/init.hpp"
#include "qnmf/metrics.hpp"
#include "qnmf/synth.hpp"

using namespace qnmf;

TEST(Spa, OrthogonalColumnsByDecreasingNorm) {
    RealMatrix x = RealMatrix::Zero(3, 3);
    x(0, 0) = 3;
    x(1, 1) = 2;
    x(2, 2) = 1;
    EXPECT_EQ(spa_select(x, 2), (std::vector<Index>{0, 1}));
    EXPECT_EQ(spa_select(x, 3), (std::vector<Index>{0, 1, 2}));
}

TEST(Spa, TiesGoToLowestIndex) {
    RealMatrix x(2, 4);
    x << 1, 0, 2, 2,
         0, 1, 0, 0;
    EXPECT_EQ(spa_select(x, 1), (std::vector<Index>{2}));
    RealMatrix y(2, 3);
    y << 0, 1, 0,
         1, 0, 1;
    EXPECT_EQ(spa_select(y, 2), (std::vector<Index>{0, 1}));
}

TEST(Spa, MatchesFromScratchOracle) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const RealMatrix x = oracle::random_real(6, 8, rng, -1, 1);
        const auto k = spa_select(x, 3);
        EXPECT_EQ(k, oracle::spa_from_scratch(x, 3));
        EXPECT_EQ(std::set<Index>(k.begin(), k.end()).size(), 3u);
    }
}

TEST(Spa, ExhaustedResidual) {
    RealMatrix x(3, 4);
    x << 1, 2, 0, 3,
         1, 2, 0, 3,
         0, 0, 0, 0;
    try {
        spa_select(x, 2);
        FAIL() << "expected SpaExhaustedError";
    } catch (const SpaExhaustedError& e) {
        EXPECT_EQ(e.selectable(), 1);
    }
    EXPECT_THROW(spa_select(RealMatrix::Zero(2, 2), 1), SpaExhaustedError);
    EXPECT_THROW(spa_select(x, 5), std::invalid_argument);
    EXPECT_THROW(spa_select(x, 0), std::invalid_argument);
}

TEST(BuildStacked, Layouts) {
    std::mt19937_64 rng(2);
    const QuatMatrix rgb = QuatMatrix::pure(oracle::random_real(2, 3, rng), oracle::random_real(2, 3, rng),
                                            oracle::random_real(2, 3, rng));
    const RealMatrix s3 = build_stacked(rgb, ConstraintSet::PureNonneg);
    ASSERT_EQ(s3.rows(), 6);
    EXPECT_EQ(s3.topRows(2), rgb.plane(1));
    EXPECT_EQ(s3.middleRows(2, 2), rgb.plane(2));
    EXPECT_EQ(s3.bottomRows(2), rgb.plane(3));

    QuatMatrix intensity(2, 3);
    intensity.plane(0) = oracle::random_real(2, 3, rng);
    const RealMatrix s4 = build_stacked(intensity, ConstraintSet::Stokes);
    ASSERT_EQ(s4.rows(), 8);
    EXPECT_EQ(s4.topRows(2), intensity.plane(0));
    EXPECT_TRUE(s4.bottomRows(6).isZero(0.0));

    const QuatMatrix q = oracle::random_qmat(5, 4, rng);
    const RealMatrix st = build_stacked(q, ConstraintSet::Stokes);
    for (Index v = 0; v < 4; ++v) EXPECT_NEAR(st.col(v).squaredNorm(), q.column_norm_sq(v), 1e-14);
}

TEST(InitFactors, PicksDistinctSources) {
    std::mt19937_64 rng(3);
    const Index r = 3;
    QuatMatrix src(5, r);
    for (Index v = 0; v < r; ++v)
        for (Index u = 0; u < 5; ++u) src.set(u, v, oracle::random_stokes_point(rng, 1.0));
    // Every source appears r times.
    std::vector<Index> idx;
    for (Index c = 0; c < r; ++c)
        for (Index v = 0; v < r; ++v) idx.push_back(v);
    const QuatMatrix m = src.columns(idx);
    SolverConfig cfg;
    const FactorPair fp = init_factors(m, ConstraintSet::Stokes, {InitStrategy::SpaStacked, r, 0}, cfg);
    std::set<Index> found;
    for (Index l = 0; l < r; ++l)
        for (Index v = 0; v < r; ++v) {
            QuatMatrix d = fp.W.columns(std::array<Index, 1>{l});
            d -= src.columns(std::array<Index, 1>{v});
            if (fro_norm(d) < 1e-14) found.insert(v);
        }
    EXPECT_EQ(found.size(), std::size_t(r));
    EXPECT_TRUE(is_feasible(fp.W, ConstraintSet::Stokes));
    EXPECT_GE(fp.H.minCoeff(), cfg.xi);
}

TEST(InitFactors, SeparableModelIsNearlyExact) {
    for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
        SynthSpec spec;
        spec.set = set;
        spec.m = 20;
        spec.n = 30;
        spec.r = 4;
        spec.seed = 4;
        SynthData d = synthesize(spec);
        // Separable model: the first r data columns are the sources and every
        // other column is a convex combination of them.
        for (Index v = 0; v < d.H.cols(); ++v) d.H.col(v) /= d.H.col(v).sum();
        d.H.leftCols(4) = RealMatrix::Identity(4, 4);
        d.M = mul_real(d.W, d.H);
        const FactorPair fp = init_factors(d.M, set, {InitStrategy::SpaStacked, 4, 0}, SolverConfig{});
        EXPECT_GE(total_approx(d.M, fp.W, fp.H), 0.99) << to_string(set);
    }
}

TEST(InitFactors, RandomIsDeterministicAndFeasible) {
    SynthSpec spec;
    spec.m = 10;
    spec.n = 12;
    spec.r = 3;
    for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
        spec.set = set;
        const SynthData d = synthesize(spec);
        const InitPlan plan{InitStrategy::Random, 3, 42};
        const FactorPair a = init_factors(d.M, set, plan, SolverConfig{});
        const FactorPair b = init_factors(d.M, set, plan, SolverConfig{});
        EXPECT_EQ(a.W, b.W);
        EXPECT_EQ(a.H, b.H);
        EXPECT_TRUE(is_feasible(a.W, set));
        EXPECT_GE(a.H.minCoeff(), kDefaultXi);
        const FactorPair c = init_factors(d.M, set, {InitStrategy::Random, 3, 43}, SolverConfig{});
        EXPECT_FALSE(a.W == c.W);

        const FactorPair s1 = init_factors(d.M, set, {InitStrategy::SpaStacked, 3, 0}, SolverConfig{});
        const FactorPair s2 = init_factors(d.M, set, {InitStrategy::SpaStacked, 3, 99}, SolverConfig{});
        EXPECT_EQ(s1.W, s2.W);
        EXPECT_EQ(s1.H, s2.H);
    }
}

TEST(InitFactors, RankBounds) {
    std::mt19937_64 rng(5);
    const QuatMatrix m = oracle::random_qmat(4, 3, rng);
    EXPECT_THROW(init_factors(m, ConstraintSet::Stokes, {InitStrategy::SpaStacked, 4, 0}, SolverConfig{}),
                 std::invalid_argument);
    EXPECT_THROW(init_factors(m, ConstraintSet::Stokes, {InitStrategy::SpaStacked, 0, 0}, SolverConfig{}),
                 std::invalid_argument);
}

TEST(Synth, FeasibleAndDeterministic) {
    for (ConstraintSet set : {ConstraintSet::Stokes, ConstraintSet::PureNonneg}) {
        for (double noise : {0.0, 0.1}) {
            SynthSpec spec;
            spec.set = set;
            spec.m = 16;
            spec.n = 16;
            spec.r = 4;
            spec.noise = noise;
            spec.seed = 9;
            const SynthData a = synthesize(spec);
            const SynthData b = synthesize(spec);
            EXPECT_EQ(a.M, b.M);
            EXPECT_TRUE(is_feasible(a.M, set));
            EXPECT_TRUE(is_feasible(a.W, set));
            EXPECT_GE(a.H.minCoeff(), 0.0);
            for (Index v = 0; v < a.H.cols(); ++v) EXPECT_GT(a.H.col(v).maxCoeff(), 0.0);
            if (noise == 0.0) {
                EXPECT_LE(oracle::max_abs_diff(a.M, mul_real(a.W, a.H)), 0.0);
            }
        }
    }
}

TEST(Synth, NoiseLevel) {
    SynthSpec spec;
    spec.noise = 0.1;
    spec.seed = 2;
    const SynthData d = synthesize(spec);
    // Projection only shrinks the perturbation.
    const double rel = rel_error(d.M, d.W, d.H) * fro_norm(d.M) / fro_norm(mul_real(d.W, d.H));
    EXPECT_LE(rel, 0.1 + 1e-12);
    EXPECT_GE(rel, 0.02);
}
