#include "ribeval/gradcheck.hpp"

#include <cmath>
#include <random>

namespace ribeval::fusion {

double relative_error(double analytic, double numeric) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    const double diff = std::abs(analytic - numeric);
    return scale < 1e-8 ? diff : diff / scale;
}

namespace {

struct Instance {
    FeatureGrid<double> voxel;
    PointFeatures<double> points;
    ChannelTransform<double> transform;
    Eigen::MatrixXd upstream;  // G in the loss <G, out>
    double extent = 1.0;
};

Instance random_instance(std::mt19937_64& rng, const GradCheckOptions& o) {
    std::uniform_int_distribution<Index> pick_m(1, o.max_points);
    std::uniform_int_distribution<Index> pick_r(1, o.max_resolution);
    std::uniform_int_distribution<Index> pick_c(1, o.max_channels);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::uniform_real_distribution<double> ext(0.5, 4.0);

    Instance in;
    const Index m = pick_m(rng), r = pick_r(rng), cp = pick_c(rng), cv = pick_c(rng);
    in.extent = ext(rng);
    std::uniform_real_distribution<double> coord(0.0, in.extent);
    in.points.coords.resize(m, 3);
    for (Index i = 0; i < m; ++i)
        for (Index k = 0; k < 3; ++k) in.points.coords(i, k) = coord(rng);
    in.points.features = Eigen::MatrixXd::NullaryExpr(m, cp, [&] { return val(rng); });
    in.voxel = FeatureGrid<double>::zeros(cv, r);
    in.voxel.values = Eigen::MatrixXd::NullaryExpr(cv, r * r * r, [&] { return val(rng); });
    in.transform.weights = Eigen::MatrixXd::NullaryExpr(cv, cp, [&] { return val(rng); });
    in.transform.bias = Eigen::VectorXd::NullaryExpr(cv, [&] { return val(rng); });
    in.upstream = Eigen::MatrixXd::NullaryExpr(cv, r * r * r, [&] { return val(rng); });
    return in;
}

double loss(const Instance& in, Pooling pooling) {
    const auto fwd = fusion_forward(in.voxel, in.points, in.transform, in.extent, pooling);
    return (fwd.output.values.array() * in.upstream.array()).sum();
}

// Applies `fn(instance, parameter_index, delta)` to each differentiable parameter slot.
template <typename Fn>
void for_each_parameter(Instance& in, Fn&& fn) {
    for (Index i = 0; i < in.voxel.values.size(); ++i) fn(in.voxel.values.data()[i], 0, i);
    for (Index i = 0; i < in.points.features.size(); ++i) fn(in.points.features.data()[i], 1, i);
    for (Index i = 0; i < in.transform.weights.size(); ++i) fn(in.transform.weights.data()[i], 2, i);
    for (Index i = 0; i < in.transform.bias.size(); ++i) fn(in.transform.bias.data()[i], 3, i);
}

}  // namespace

GradCheckResult gradient_check(std::uint64_t seed, const GradCheckOptions& options) {
    std::mt19937_64 rng(seed);
    Instance in = random_instance(rng, options);

    GradCheckResult result;
    result.seed = seed;
    result.points = in.points.size();
    result.resolution = in.voxel.resolution;
    result.point_channels = in.points.channels();
    result.voxel_channels = in.voxel.channels();

    const auto fwd = fusion_forward(in.voxel, in.points, in.transform, in.extent, options.pooling);
    FeatureGrid<double> grad_out{in.voxel.resolution, in.upstream, fwd.output.occupancy};
    const auto grads = fusion_backward(grad_out, fwd.cache);
    const Eigen::MatrixXd* analytic[4] = {&grads.voxel, &grads.features, &grads.weights, nullptr};

    auto analytic_entry = [&](int block, Index i) {
        return block == 3 ? grads.bias.data()[i] : analytic[block]->data()[i];
    };

    const double h = options.step;
    for_each_parameter(in, [&](double& slot, int block, Index i) {
        const double saved = slot;
        slot = saved + h;
        const double up = loss(in, options.pooling);
        slot = saved - h;
        const double down = loss(in, options.pooling);
        slot = saved;
        const double numeric = (up - down) / (2.0 * h);
        result.max_entry_error = std::max(result.max_entry_error, relative_error(analytic_entry(block, i), numeric));
        ++result.entries_checked;
    });

    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int d = 0; d < options.directions; ++d) {
        std::vector<double> dir;
        double predicted = 0.0;
        for_each_parameter(in, [&](double&, int block, Index i) {
            dir.push_back(gauss(rng));
            predicted += dir.back() * analytic_entry(block, i);
        });
        const Instance base = in;
        auto shifted_loss = [&](double eps) {
            std::size_t k = 0;
            for_each_parameter(in, [&](double& slot, int, Index) { slot += eps * dir[k++]; });
            const double value = loss(in, options.pooling);
            in = base;
            return value;
        };
        const double up = shifted_loss(h);
        const double down = shifted_loss(-h);
        const double numeric = (up - down) / (2.0 * h);
        result.max_directional_error = std::max(result.max_directional_error, relative_error(predicted, numeric));
    }

    if (options.pooling == Pooling::Average) {
        const auto& pooled = fwd.cache.pooled;
        const Eigen::VectorXd weighted = pooled.values * pooled.occupancy.cast<double>();
        const Eigen::VectorXd direct = in.points.features.colwise().sum().transpose();
        result.conservation_error = (weighted - direct).cwiseAbs().maxCoeff();
    }

    result.passed = result.max_entry_error <= options.tolerance && result.max_directional_error <= options.tolerance &&
                    result.conservation_error <= 1e-10;
    return result;
}

}  // namespace ribeval::fusion
