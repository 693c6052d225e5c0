#pragma once

#include <cstdint>

#include "ribeval/fusion.hpp"

namespace ribeval::fusion {

struct GradCheckOptions {
    Index max_points = 20;
    Index max_resolution = 3;
    Index max_channels = 3;
    double step = 1e-4;
    double tolerance = 1e-5;
    int directions = 100;
    Pooling pooling = Pooling::Average;
};

struct GradCheckResult {
    std::uint64_t seed = 0;
    Index points = 0;
    Index resolution = 0;
    Index point_channels = 0;
    Index voxel_channels = 0;
    Index entries_checked = 0;
    double max_entry_error = 0.0;
    double max_directional_error = 0.0;
    double conservation_error = 0.0;  // average pooling only
    bool passed = false;
};

/// |analytic - numeric| / max(|analytic|, |numeric|); entries where both
/// magnitudes are below 1e-8 are compared absolutely.
double relative_error(double analytic, double numeric);

/// Builds a random fusion instance from `seed` and compares every analytic
/// gradient entry, plus random directional derivatives, against central
/// finite differences of the scalar loss <G, fuse(...)>.
GradCheckResult gradient_check(std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace ribeval::fusion
