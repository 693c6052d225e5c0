#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "ribeval/volume.hpp"

namespace ribeval::fusion {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Coords = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

/// Point features cropped to one window: M x 3 window-local coordinates in
/// [0, extent) and M x C_p features.
template <typename Scalar>
struct PointFeatures {
    Coords<Scalar> coords;
    Matrix<Scalar> features;

    Index size() const { return coords.rows(); }
    Index channels() const { return features.cols(); }
};

/// C x r^3 grid; column index is the x-fastest cell index.
template <typename Scalar>
struct FeatureGrid {
    Index resolution = 0;
    Matrix<Scalar> values;
    Eigen::VectorXi occupancy;

    Index channels() const { return values.rows(); }
    Index cells() const { return values.cols(); }

    static FeatureGrid zeros(Index channels, Index resolution) {
        const Index n = resolution * resolution * resolution;
        return {resolution, Matrix<Scalar>::Zero(channels, n), Eigen::VectorXi::Zero(n)};
    }
};

/// 1x1x1 convolution: C_v x C_p weights plus a C_v bias.
template <typename Scalar>
struct ChannelTransform {
    Matrix<Scalar> weights;
    Vector<Scalar> bias;

    Index in_channels() const { return weights.cols(); }
    Index out_channels() const { return weights.rows(); }
};

enum class Pooling { Average, Max };

/// Point-to-cell assignment recorded by voxelize, reused by the backward pass.
struct CellAssignment {
    Index resolution = 0;
    Pooling pooling = Pooling::Average;
    std::vector<Index> cell_of_point;
    /// Points sorted by cell, then by coordinates and features, then index.
    /// Accumulation follows this order so results do not depend on input order.
    std::vector<Index> order;
    Eigen::VectorXi occupancy;
    /// Max pooling only: C_p x cells index of the winning point (-1 if empty).
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> argmax;
};

template <typename Scalar>
struct Voxelized {
    FeatureGrid<Scalar> grid;
    CellAssignment assignment;
};

namespace detail {

template <typename Scalar>
Index cell_axis(Scalar coord, Index resolution, double extent) {
    return static_cast<Index>(std::floor(static_cast<double>(coord) * static_cast<double>(resolution) / extent));
}

template <typename Scalar>
bool point_less(const PointFeatures<Scalar>& pf, Index a, Index b) {
    for (Index k = 0; k < 3; ++k) {
        if (pf.coords(a, k) != pf.coords(b, k)) return pf.coords(a, k) < pf.coords(b, k);
    }
    for (Index c = 0; c < pf.channels(); ++c) {
        if (pf.features(a, c) != pf.features(b, c)) return pf.features(a, c) < pf.features(b, c);
    }
    return a < b;
}

}  // namespace detail

/// Pools point features into an r^3 grid over a cube of edge `extent`.
/// Cell per axis is floor(coord * r / extent); empty cells stay zero.
template <typename Scalar>
Voxelized<Scalar> voxelize(const PointFeatures<Scalar>& pf, Index resolution, double extent,
                           Pooling pooling = Pooling::Average) {
    if (resolution <= 0) throw InputError("voxelize: resolution must be positive");
    if (!(extent > 0.0)) throw InputError("voxelize: window extent must be positive");
    if (pf.features.rows() != pf.coords.rows())
        throw InputError("voxelize: coords and features disagree on point count");

    const Index m = pf.size();
    const Index channels = pf.channels();
    const Index cells = resolution * resolution * resolution;

    CellAssignment assign;
    assign.resolution = resolution;
    assign.pooling = pooling;
    assign.cell_of_point.resize(static_cast<std::size_t>(m));
    assign.occupancy = Eigen::VectorXi::Zero(cells);

    for (Index p = 0; p < m; ++p) {
        Index idx[3];
        for (Index k = 0; k < 3; ++k) {
            const double c = static_cast<double>(pf.coords(p, k));
            if (!(c >= 0.0 && c < extent))
                throw InputError("voxelize: point " + std::to_string(p) + " lies outside the window");
            idx[k] = std::min(detail::cell_axis(pf.coords(p, k), resolution, extent), resolution - 1);
        }
        const Index cell = idx[0] + resolution * (idx[1] + resolution * idx[2]);
        assign.cell_of_point[static_cast<std::size_t>(p)] = cell;
        ++assign.occupancy[cell];
    }

    assign.order.resize(static_cast<std::size_t>(m));
    std::iota(assign.order.begin(), assign.order.end(), Index{0});
    std::sort(assign.order.begin(), assign.order.end(), [&](Index a, Index b) {
        const Index ca = assign.cell_of_point[static_cast<std::size_t>(a)];
        const Index cb = assign.cell_of_point[static_cast<std::size_t>(b)];
        if (ca != cb) return ca < cb;
        return detail::point_less(pf, a, b);
    });

    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(channels, cells);
    if (pooling == Pooling::Max) {
        assign.argmax = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>::Constant(channels, cells, -1);
    }
    for (const Index p : assign.order) {
        const Index cell = assign.cell_of_point[static_cast<std::size_t>(p)];
        for (Index c = 0; c < channels; ++c) {
            const double f = static_cast<double>(pf.features(p, c));
            if (pooling == Pooling::Average) {
                acc(c, cell) += f;
            } else if (assign.argmax(c, cell) < 0 || f > acc(c, cell)) {
                acc(c, cell) = f;
                assign.argmax(c, cell) = p;
            }
        }
    }
    if (pooling == Pooling::Average) {
        for (Index cell = 0; cell < cells; ++cell) {
            if (assign.occupancy[cell] > 0) acc.col(cell) /= static_cast<double>(assign.occupancy[cell]);
        }
    }

    Voxelized<Scalar> out;
    out.grid.resolution = resolution;
    out.grid.values = acc.cast<Scalar>();
    out.grid.occupancy = assign.occupancy;
    out.assignment = std::move(assign);
    return out;
}

/// out(x) = voxel(x) + W * pooled(x) + bias, for every cell x.
template <typename Scalar>
FeatureGrid<Scalar> fuse(const FeatureGrid<Scalar>& voxel, const FeatureGrid<Scalar>& pooled,
                         const ChannelTransform<Scalar>& transform) {
    if (voxel.resolution != pooled.resolution || voxel.cells() != pooled.cells())
        throw InputError("fuse: grid resolutions differ");
    if (transform.in_channels() != pooled.channels() || transform.out_channels() != voxel.channels() ||
        transform.bias.size() != voxel.channels())
        throw InputError("fuse: channel transform shape does not match the grids");

    const Eigen::MatrixXd projected =
        (transform.weights.template cast<double>() * pooled.values.template cast<double>()).colwise() +
        transform.bias.template cast<double>();
    FeatureGrid<Scalar> out;
    out.resolution = voxel.resolution;
    out.values = (voxel.values.template cast<double>() + projected).template cast<Scalar>();
    out.occupancy = pooled.occupancy;
    return out;
}

/// Everything the backward pass needs from a forward call.
template <typename Scalar>
struct FusionCache {
    bool valid = false;
    Index num_points = 0;
    CellAssignment assignment;
    FeatureGrid<Scalar> pooled;
    ChannelTransform<Scalar> transform;
};

template <typename Scalar>
struct FusionForward {
    FeatureGrid<Scalar> output;
    FusionCache<Scalar> cache;
};

template <typename Scalar>
FusionForward<Scalar> fusion_forward(const FeatureGrid<Scalar>& voxel, const PointFeatures<Scalar>& points,
                                     const ChannelTransform<Scalar>& transform, double extent,
                                     Pooling pooling = Pooling::Average) {
    auto vox = voxelize(points, voxel.resolution, extent, pooling);
    FusionForward<Scalar> out;
    out.output = fuse(voxel, vox.grid, transform);
    out.cache.valid = true;
    out.cache.num_points = points.size();
    out.cache.assignment = std::move(vox.assignment);
    out.cache.pooled = std::move(vox.grid);
    out.cache.transform = transform;
    return out;
}

template <typename Scalar>
struct FusionGradients {
    Matrix<Scalar> voxel;     // C_v x cells
    Matrix<Scalar> features;  // M x C_p
    Matrix<Scalar> weights;   // C_v x C_p
    Vector<Scalar> bias;      // C_v
};

template <typename Scalar>
FusionGradients<Scalar> fusion_backward(const FeatureGrid<Scalar>& grad_out, const FusionCache<Scalar>& cache) {
    if (!cache.valid) throw InputError("fusion_backward: no cached forward pass");
    const auto& t = cache.transform;
    if (grad_out.channels() != t.out_channels() || grad_out.cells() != cache.pooled.cells())
        throw InputError("fusion_backward: gradient shape does not match the forward output");

    const Eigen::MatrixXd g = grad_out.values.template cast<double>();
    const Eigen::MatrixXd pooled = cache.pooled.values.template cast<double>();
    const Eigen::MatrixXd w = t.weights.template cast<double>();

    FusionGradients<Scalar> grads;
    grads.voxel = grad_out.values;
    grads.weights = (g * pooled.transpose()).template cast<Scalar>();
    grads.bias = g.rowwise().sum().template cast<Scalar>();

    const Eigen::MatrixXd grad_pooled = w.transpose() * g;  // C_p x cells
    const Index channels = t.in_channels();
    Eigen::MatrixXd grad_features = Eigen::MatrixXd::Zero(cache.num_points, channels);
    const auto& assign = cache.assignment;
    if (assign.pooling == Pooling::Average) {
        for (Index p = 0; p < cache.num_points; ++p) {
            const Index cell = assign.cell_of_point[static_cast<std::size_t>(p)];
            grad_features.row(p) = grad_pooled.col(cell).transpose() / static_cast<double>(assign.occupancy[cell]);
        }
    } else {
        for (Index cell = 0; cell < assign.argmax.cols(); ++cell) {
            for (Index c = 0; c < channels; ++c) {
                const Index winner = assign.argmax(c, cell);
                if (winner >= 0) grad_features(winner, c) += grad_pooled(c, cell);
            }
        }
    }
    grads.features = grad_features.cast<Scalar>();
    return grads;
}

}  // namespace ribeval::fusion
