#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "ribeval/labeling.hpp"
#include "ribeval/volume.hpp"

namespace ribeval {

inline constexpr double kBoneWindowLevel = 450.0;
inline constexpr double kBoneWindowWidth = 1100.0;
inline constexpr double kBoneThresholdHu = 200.0;
inline constexpr Index kDefaultPointCount = 30000;
inline constexpr Index kDefaultWindow = 128;
inline constexpr Index kDefaultStride = 96;  // 0.75 * 128
inline constexpr double kDefaultBinThreshold = 0.1;
inline constexpr std::int64_t kDefaultMinVoxels = 200;

/// Clamps HU to [level - width/2, level + width/2] and maps that range onto [-1, 1].
ScalarVolume hu_window_normalize(const ScalarVolume& hu, double level = kBoneWindowLevel,
                                 double width = kBoneWindowWidth);

/// Foreground iff HU >= threshold.
ScalarVolume bone_binarize(const ScalarVolume& hu, double threshold_hu = kBoneThresholdHu);

struct PointCloud {
    Eigen::Matrix<double, Eigen::Dynamic, 3> coords;  // voxel centers in mm
    Eigen::Matrix<Index, Eigen::Dynamic, 3> source_indices;

    Index size() const { return coords.rows(); }
};

/// Uniform sample without replacement of foreground voxels, returned in raster
/// order. Deterministic for a given seed.
PointCloud sample_points(const ScalarVolume& binary, Index n = kDefaultPointCount, std::uint64_t seed = 0);

struct Window {
    std::array<Index, 3> origin{0, 0, 0};
    std::array<Index, 3> extent{0, 0, 0};
    bool clamped = false;
};

struct WindowPlan {
    Index window_size = kDefaultWindow;
    std::vector<Window> windows;
};

/// Regular grid of windows at multiples of `stride`, plus a final origin per
/// axis pinned to dim - R so the whole volume is covered. Axes shorter than R
/// get a single window spanning the axis (flagged as clamped).
WindowPlan tile_windows(const Dims& dims, Index window = kDefaultWindow, Index stride = kDefaultStride);

/// Per-axis origins used by tile_windows.
std::vector<Index> tile_axis(Index dim, Index window, Index stride);

/// Greedy cover of the mask: each window is centered on the first uncovered
/// mask voxel in raster order, clamped to the volume.
WindowPlan windows_from_mask(const ScalarVolume& mask, Index window = kDefaultWindow);

struct Patch {
    std::array<Index, 3> origin{0, 0, 0};
    std::array<Index, 3> extent{0, 0, 0};
    Eigen::ArrayXf values;  // x-fastest within the block
};

/// Voxelwise maximum over covering patches; uncovered voxels are 0.
ScalarVolume merge_patches(const std::vector<Patch>& patches, const Dims& dims, const Spacing& spacing = {1, 1, 1});

struct Proposal {
    Label id = 0;
    double confidence = 0.0;
    std::int64_t voxel_count = 0;
};

struct ProposalSet {
    LabelMap labels;
    std::vector<Proposal> proposals;
};

struct ProposalOptions {
    double bin_threshold = kDefaultBinThreshold;
    std::int64_t min_voxels = kDefaultMinVoxels;
    Connectivity connectivity = Connectivity::Full26;
};

/// Excludes masked voxels, binarizes at >= bin_threshold, labels components,
/// drops those under min_voxels, and scores each survivor by its mean raw
/// probability.
ProposalSet extract_proposals(const ScalarVolume& probability, const ProposalOptions& options = {},
                              const ScalarVolume* exclusion = nullptr);

}  // namespace ribeval
