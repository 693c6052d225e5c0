#include "ribeval/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>

namespace ribeval {

ScalarVolume hu_window_normalize(const ScalarVolume& hu, double level, double width) {
    if (!(width > 0.0)) throw InputError("hu_window_normalize: width must be positive");
    const double lo = level - width / 2.0;
    const double hi = level + width / 2.0;
    ScalarVolume out = hu;
    out.data() = hu.data().unaryExpr([&](float v) {
        const double clamped = std::clamp(static_cast<double>(v), lo, hi);
        return static_cast<float>(2.0 * (clamped - lo) / (hi - lo) - 1.0);
    });
    out.set_kind(VolumeKind::Normalized);
    return out;
}

ScalarVolume bone_binarize(const ScalarVolume& hu, double threshold_hu) {
    ScalarVolume out = hu;
    out.data() = (hu.data().cast<double>() >= threshold_hu).cast<float>();
    out.set_kind(VolumeKind::Binary);
    return out;
}

PointCloud sample_points(const ScalarVolume& binary, Index n, std::uint64_t seed) {
    if (n <= 0) throw InputError("sample_points: sample size must be positive");
    std::vector<Index> foreground;
    const auto& d = binary.data();
    for (Index i = 0; i < d.size(); ++i) {
        if (d[i] == 1.0f)
            foreground.push_back(i);
        else if (d[i] != 0.0f)
            throw InputError("sample_points: input is not binary");
    }
    if (foreground.empty()) throw InputError("sample_points: no foreground voxels");

    std::vector<Index> chosen;
    if (static_cast<Index>(foreground.size()) <= n) {
        chosen = std::move(foreground);
    } else {
        std::mt19937_64 rng(seed);
        chosen.reserve(static_cast<std::size_t>(n));
        std::sample(foreground.begin(), foreground.end(), std::back_inserter(chosen), n, rng);
    }

    PointCloud cloud;
    const auto m = static_cast<Index>(chosen.size());
    cloud.coords.resize(m, 3);
    cloud.source_indices.resize(m, 3);
    const Spacing& sp = binary.spacing();
    for (Index k = 0; k < m; ++k) {
        const auto c = binary.coords(chosen[static_cast<std::size_t>(k)]);
        for (int a = 0; a < 3; ++a) {
            cloud.source_indices(k, a) = c[static_cast<std::size_t>(a)];
            cloud.coords(k, a) = (static_cast<double>(c[static_cast<std::size_t>(a)]) + 0.5) * sp[static_cast<std::size_t>(a)];
        }
    }
    return cloud;
}

std::vector<Index> tile_axis(Index dim, Index window, Index stride) {
    if (dim <= 0 || window <= 0 || stride <= 0) throw InputError("tile_windows: sizes must be positive");
    if (window >= dim) return {0};
    std::vector<Index> origins;
    for (Index o = 0; o + window <= dim; o += stride) origins.push_back(o);
    if (origins.back() + window < dim) origins.push_back(dim - window);
    return origins;
}

WindowPlan tile_windows(const Dims& dims, Index window, Index stride) {
    std::array<std::vector<Index>, 3> axes;
    std::array<Index, 3> extent{};
    std::array<bool, 3> shrunk{};
    for (int a = 0; a < 3; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        axes[ua] = tile_axis(dims[a], window, stride);
        extent[ua] = std::min(window, dims[a]);
        shrunk[ua] = window > dims[a];
    }
    WindowPlan plan;
    plan.window_size = window;
    for (const Index z : axes[2]) {
        for (const Index y : axes[1]) {
            for (const Index x : axes[0]) {
                Window w;
                w.origin = {x, y, z};
                w.extent = extent;
                for (int a = 0; a < 3; ++a) {
                    const auto ua = static_cast<std::size_t>(a);
                    w.clamped = w.clamped || shrunk[ua] || w.origin[ua] % stride != 0;
                }
                plan.windows.push_back(w);
            }
        }
    }
    return plan;
}

WindowPlan windows_from_mask(const ScalarVolume& mask, Index window) {
    if (window <= 0) throw InputError("windows_from_mask: window size must be positive");
    const Dims& dims = mask.dims();
    const auto& d = mask.data();
    std::vector<std::uint8_t> covered(static_cast<std::size_t>(d.size()), 0);

    WindowPlan plan;
    plan.window_size = window;
    for (Index i = 0; i < d.size(); ++i) {
        if (d[i] == 0.0f || covered[static_cast<std::size_t>(i)]) continue;
        const auto c = mask.coords(i);
        Window w;
        for (int a = 0; a < 3; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            w.extent[ua] = std::min(window, dims[a]);
            const Index centered = c[ua] - window / 2;
            w.origin[ua] = std::clamp<Index>(centered, 0, dims[a] - w.extent[ua]);
            w.clamped = w.clamped || w.origin[ua] != centered || w.extent[ua] != window;
        }
        for (Index z = w.origin[2]; z < w.origin[2] + w.extent[2]; ++z)
            for (Index y = w.origin[1]; y < w.origin[1] + w.extent[1]; ++y)
                for (Index x = w.origin[0]; x < w.origin[0] + w.extent[0]; ++x) {
                    const Index j = mask.linear(x, y, z);
                    if (d[j] != 0.0f) covered[static_cast<std::size_t>(j)] = 1;
                }
        plan.windows.push_back(w);
    }
    if (plan.windows.empty()) throw InputError("windows_from_mask: mask is empty");
    return plan;
}

ScalarVolume merge_patches(const std::vector<Patch>& patches, const Dims& dims, const Spacing& spacing) {
    ScalarVolume out(dims, spacing, VolumeKind::Probability);
    std::vector<std::uint8_t> touched(static_cast<std::size_t>(dims.voxels()), 0);
    for (std::size_t k = 0; k < patches.size(); ++k) {
        const Patch& p = patches[k];
        for (int a = 0; a < 3; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            if (p.origin[ua] < 0 || p.extent[ua] <= 0 || p.origin[ua] + p.extent[ua] > dims[a])
                throw InputError("merge_patches: patch " + std::to_string(k) + " exceeds the volume");
        }
        if (p.values.size() != p.extent[0] * p.extent[1] * p.extent[2])
            throw InputError("merge_patches: patch " + std::to_string(k) + " value count does not match its extent");
        Index src = 0;
        for (Index z = 0; z < p.extent[2]; ++z)
            for (Index y = 0; y < p.extent[1]; ++y)
                for (Index x = 0; x < p.extent[0]; ++x, ++src) {
                    const Index j = out.linear(p.origin[0] + x, p.origin[1] + y, p.origin[2] + z);
                    auto& seen = touched[static_cast<std::size_t>(j)];
                    out[j] = seen ? std::max(out[j], p.values[src]) : p.values[src];
                    seen = 1;
                }
    }
    return out;
}

ProposalSet extract_proposals(const ScalarVolume& probability, const ProposalOptions& options,
                              const ScalarVolume* exclusion) {
    ScalarVolume prob = probability;
    prob.set_kind(VolumeKind::Probability);
    validate_kind(prob);
    if (exclusion != nullptr) {
        require_same_dims(probability, *exclusion, "extract_proposals: exclusion mask");
        prob.data() = (exclusion->data() != 0.0f).select(0.0f, prob.data());
    }

    ScalarVolume binary = prob;
    binary.data() = (prob.data().cast<double>() >= options.bin_threshold).cast<float>();
    binary.set_kind(VolumeKind::Binary);

    Labeling labeled = remove_small(connected_components(binary, options.connectivity), options.min_voxels);

    std::vector<double> sums(labeled.components.size(), 0.0);
    const auto& labels = labeled.labels.data();
    for (Index i = 0; i < labels.size(); ++i) {
        if (labels[i] > 0) sums[static_cast<std::size_t>(labels[i] - 1)] += static_cast<double>(prob[i]);
    }

    ProposalSet out;
    for (std::size_t k = 0; k < labeled.components.size(); ++k) {
        const auto& c = labeled.components[k];
        out.proposals.push_back({c.id, sums[k] / static_cast<double>(c.voxel_count), c.voxel_count});
    }
    out.labels = std::move(labeled.labels);
    return out;
}

}  // namespace ribeval
