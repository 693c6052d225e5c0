#pragma once

#include <vector>

#include <Eigen/Core>

#include "ribeval/volume.hpp"

namespace ribeval {

enum class Connectivity { Face6 = 6, Full26 = 26 };

Connectivity connectivity_from_int(int value);
inline int to_int(Connectivity c) { return static_cast<int>(c); }

struct Component {
    Label id = 0;
    std::int64_t voxel_count = 0;
    Eigen::Array3i bbox_min = Eigen::Array3i::Zero();  // inclusive
    Eigen::Array3i bbox_max = Eigen::Array3i::Zero();  // inclusive
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
};

using ComponentTable = std::vector<Component>;

struct Labeling {
    LabelMap labels;
    ComponentTable components;
};

/// Two-pass union-find labeling. Labels are 1..K in order of first encounter
/// in x-fastest raster order.
Labeling connected_components(const ScalarVolume& binary, Connectivity connectivity = Connectivity::Full26);

/// Per-label statistics of an existing label map; rows ordered by label.
ComponentTable component_stats(const LabelMap& labels);

/// Drops components with fewer than `min_voxels` voxels and relabels the
/// survivors 1..K' in their original order.
Labeling remove_small(const Labeling& labeled, std::int64_t min_voxels);

/// Box dilation with a (2r+1)^3 structuring element.
ScalarVolume dilate(const ScalarVolume& binary, int radius);

}  // namespace ribeval
