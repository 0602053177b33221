#pragma once

/**
 * @file synth.hpp
 * @brief Exact-rank synthetic data M = W* H* with feasible W* and H* ≥ 0.
 *
 * Stokes sources have intensity q0 ~ U[0,1) and a polarization vector with a
 * uniformly random direction and length q0·U[0,1) (degree of polarization
 * uniform). RGB sources have i, j, k components ~ U[0,1). Activations are
 * U[0,1) with each entry zeroed with probability `sparsity`, so that some data
 * columns are close to pure sources.
 *
 * Optional noise: Gaussian in every admissible component, scaled so that
 * ‖N‖_F = noise·‖M‖_F (noise = 0.1 is about 20 dB SNR), then projected back
 * onto the constraint set.
 */

#include <cmath>
#include <cstdint>
#include <random>

#include "qnmf/projection.hpp"
#include "qnmf/quat_matrix.hpp"

namespace qnmf {

struct SynthSpec {
    ConstraintSet set{ConstraintSet::Stokes};
    Index m{64};
    Index n{64};
    Index r{8};
    double noise{0.0};
    double sparsity{0.5};
    std::uint64_t seed{0};
};

struct SynthData {
    QuatMatrix M;
    QuatMatrix W;  // ground-truth sources
    RealMatrix H;  // ground-truth activations
};

template <typename Rng>
Quaternion random_source(ConstraintSet set, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (set == ConstraintSet::PureNonneg) return {0.0, unit(rng), unit(rng), unit(rng)};
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double i0 = unit(rng);
    double x = gauss(rng), y = gauss(rng), z = gauss(rng);
    double len = std::sqrt(x * x + y * y + z * z);
    if (len == 0.0) {
        x = 1.0;
        len = 1.0;
    }
    const double s = i0 * unit(rng) / len;
    return {i0, s * x, s * y, s * z};
}

inline SynthData synthesize(const SynthSpec& spec) {
    if (spec.m < 1 || spec.n < 1 || spec.r < 1) throw std::invalid_argument("synthesize: dimensions must be positive");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SynthData d;
    d.W = QuatMatrix(spec.m, spec.r);
    for (Index v = 0; v < spec.r; ++v)
        for (Index u = 0; u < spec.m; ++u) d.W.set(u, v, random_source(spec.set, rng));

    d.H.resize(spec.r, spec.n);
    for (Index v = 0; v < spec.n; ++v)
        for (Index u = 0; u < spec.r; ++u) {
            const double a = unit(rng);
            d.H(u, v) = unit(rng) < spec.sparsity ? 0.0 : a;
        }
    // Never leave a data column empty.
    for (Index v = 0; v < spec.n; ++v)
        if (d.H.col(v).maxCoeff() == 0.0) d.H(static_cast<Index>(v % spec.r), v) = 1.0;

    d.M = mul_real(d.W, d.H);

    if (spec.noise > 0.0) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        const int first = spec.set == ConstraintSet::PureNonneg ? 1 : 0;
        QuatMatrix noise(spec.m, spec.n);
        for (int l = first; l < kComponents; ++l)
            for (Index v = 0; v < spec.n; ++v)
                for (Index u = 0; u < spec.m; ++u) noise.plane(l)(u, v) = gauss(rng);
        const double nn = fro_norm(noise);
        if (nn > 0.0) {
            noise *= spec.noise * fro_norm(d.M) / nn;
            d.M += noise;
            // Pixels stay in the set; the RGB floor is only a rounding-level offset.
            project_inplace(d.M, spec.set, kDefaultXi);
        }
    }
    return d;
}

}  // namespace qnmf
