#pragma once

/**
 * @file imaging.hpp
 * @brief Images ↔ quaternion data matrices.
 *
 * An RGB image becomes the pure quaternion matrix R i + G j + B k; a Stokes
 * image carries (T0, T1, T2, T3) per pixel. Pixel (y, x) is entry (y, x) of the
 * height×width planes.
 *
 * Block tiling turns an image into a data matrix with one column per block:
 * pixels are vectorized column-major inside a block and blocks are ordered
 * row-major over the grid. For an 8×8 grid of 8×8 blocks the data matrix is
 * 64×64.
 */

#include <cmath>
#include <span>
#include <vector>

#include "qnmf/errors.hpp"
#include "qnmf/projection.hpp"
#include "qnmf/quat_matrix.hpp"

namespace qnmf {

struct RgbImage {
    RealMatrix r, g, b;  // height×width, values in [0,1]

    Index height() const { return r.rows(); }
    Index width() const { return r.cols(); }
};

struct StokesImage {
    QuatMatrix pixels;  // height×width, (T0, T1, T2, T3) per pixel

    Index height() const { return pixels.rows(); }
    Index width() const { return pixels.cols(); }
};

struct TilingSpec {
    Index block_h{8};
    Index block_w{8};
    Index grid_h{8};
    Index grid_w{8};

    static TilingSpec for_image(Index height, Index width, Index block_h, Index block_w) {
        if (block_h < 1 || block_w < 1 || height % block_h != 0 || width % block_w != 0)
            throw DimensionError("tiling: " + std::to_string(block_h) + "x" + std::to_string(block_w) +
                                 " blocks do not divide a " + std::to_string(height) + "x" +
                                 std::to_string(width) + " image");
        return {block_h, block_w, height / block_h, width / block_w};
    }

    Index image_height() const { return block_h * grid_h; }
    Index image_width() const { return block_w * grid_w; }
    Index matrix_rows() const { return block_h * block_w; }
    Index matrix_cols() const { return grid_h * grid_w; }
};

inline QuatMatrix tile(const QuatMatrix& img, const TilingSpec& t) {
    if (img.rows() != t.image_height() || img.cols() != t.image_width())
        throw DimensionError("tile: image shape does not match tiling");
    QuatMatrix out(t.matrix_rows(), t.matrix_cols());
    for (int l = 0; l < kComponents; ++l)
        for (Index gy = 0; gy < t.grid_h; ++gy)
            for (Index gx = 0; gx < t.grid_w; ++gx) {
                const auto block = img.plane(l).block(gy * t.block_h, gx * t.block_w, t.block_h, t.block_w);
                for (Index bx = 0; bx < t.block_w; ++bx)
                    out.plane(l).col(gy * t.grid_w + gx).segment(bx * t.block_h, t.block_h) = block.col(bx);
            }
    return out;
}

inline QuatMatrix untile(const QuatMatrix& mat, const TilingSpec& t) {
    if (mat.rows() != t.matrix_rows() || mat.cols() != t.matrix_cols())
        throw DimensionError("untile: matrix shape does not match tiling");
    QuatMatrix img(t.image_height(), t.image_width());
    for (int l = 0; l < kComponents; ++l)
        for (Index gy = 0; gy < t.grid_h; ++gy)
            for (Index gx = 0; gx < t.grid_w; ++gx) {
                auto block = img.plane(l).block(gy * t.block_h, gx * t.block_w, t.block_h, t.block_w);
                for (Index bx = 0; bx < t.block_w; ++bx)
                    block.col(bx) = mat.plane(l).col(gy * t.grid_w + gx).segment(bx * t.block_h, t.block_h);
            }
    return img;
}

inline QuatMatrix stokes_to_qmat(const StokesImage& img, const TilingSpec& t) { return tile(img.pixels, t); }

inline StokesImage qmat_to_stokes(const QuatMatrix& q, const TilingSpec& t) { return {untile(q, t)}; }

inline QuatMatrix rgb_to_qmat(const RgbImage& img) { return QuatMatrix::pure(img.r, img.g, img.b); }

/// One column per image, each vectorized column-major (the face-dataset layout).
inline QuatMatrix rgb_images_to_columns(std::span<const RgbImage> imgs) {
    if (imgs.empty()) throw DimensionError("rgb_images_to_columns: no images");
    const Index h = imgs.front().height();
    const Index w = imgs.front().width();
    QuatMatrix out(h * w, static_cast<Index>(imgs.size()));
    for (std::size_t c = 0; c < imgs.size(); ++c) {
        const RgbImage& img = imgs[c];
        if (img.height() != h || img.width() != w) throw DimensionError("rgb_images_to_columns: image sizes differ");
        const Index col = static_cast<Index>(c);
        out.plane(1).col(col) = img.r.reshaped();
        out.plane(2).col(col) = img.g.reshaped();
        out.plane(3).col(col) = img.b.reshaped();
    }
    return out;
}

/// True when the real plane is not negligible (‖S_0‖ > 1e-8·‖Q‖).
inline bool real_plane_warning(const QuatMatrix& q) {
    return q.plane(0).norm() > 1e-8 * fro_norm(q);
}

/// Planes 1..3 clipped to [0,1]; the real plane is dropped.
inline RgbImage qmat_to_rgb(const QuatMatrix& q) {
    auto clip = [](const RealMatrix& p) -> RealMatrix { return p.cwiseMax(0.0).cwiseMin(1.0); };
    return {clip(q.plane(1)), clip(q.plane(2)), clip(q.plane(3))};
}

/// Column `col` of a column-per-image matrix, reshaped to height×width.
inline RgbImage qmat_column_to_rgb(const QuatMatrix& q, Index col, Index height, Index width) {
    if (q.rows() != height * width || col < 0 || col >= q.cols())
        throw DimensionError("qmat_column_to_rgb: shape mismatch");
    QuatMatrix img(height, width);
    for (int l = 1; l < kComponents; ++l) img.plane(l) = q.plane(l).col(col).reshaped(height, width);
    return qmat_to_rgb(img);
}

/// Projects every pixel failing the Stokes predicate onto H_S. Returns how many were repaired.
inline std::size_t repair_stokes(QuatMatrix& q) {
    std::size_t n = 0;
    for (Index v = 0; v < q.cols(); ++v)
        for (Index u = 0; u < q.rows(); ++u) {
            const Quaternion p = q(u, v);
            if (!is_feasible(p, ConstraintSet::Stokes)) {
                q.set(u, v, proj_stokes(p));
                ++n;
            }
        }
    return n;
}

/// Zeroes the real part and clips negative colour components. Returns the number of pixels changed.
inline std::size_t repair_rgb(QuatMatrix& q) {
    std::size_t n = 0;
    for (Index v = 0; v < q.cols(); ++v)
        for (Index u = 0; u < q.rows(); ++u) {
            const Quaternion p = q(u, v);
            const Quaternion fixed{0.0, std::max(0.0, p.q1), std::max(0.0, p.q2), std::max(0.0, p.q3)};
            if (!(fixed == p)) {
                q.set(u, v, fixed);
                ++n;
            }
        }
    return n;
}

}  // namespace qnmf
