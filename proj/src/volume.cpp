#include "ribeval/volume.hpp"

#include <cmath>
#include <cstring>

namespace ribeval {

std::string_view to_string(VolumeKind kind) {
    switch (kind) {
        case VolumeKind::IntensityHU: return "intensity-hu";
        case VolumeKind::Normalized: return "normalized";
        case VolumeKind::Probability: return "probability";
        case VolumeKind::Binary: return "binary";
        case VolumeKind::InstanceLabel: return "instance-label";
    }
    return "unknown";
}

VolumeKind volume_kind_from_string(std::string_view text) {
    for (auto k : {VolumeKind::IntensityHU, VolumeKind::Normalized, VolumeKind::Probability, VolumeKind::Binary,
                   VolumeKind::InstanceLabel}) {
        if (to_string(k) == text) return k;
    }
    throw InputError("unknown volume kind '" + std::string(text) + "'");
}

std::string to_string(const Dims& dims) {
    return "(" + std::to_string(dims[0]) + ", " + std::to_string(dims[1]) + ", " + std::to_string(dims[2]) + ")";
}

template <typename Scalar>
void validate_kind(const Volume<Scalar>& volume) {
    const auto& d = volume.data();
    auto fail = [&](Index i, const char* rule) {
        const auto c = volume.coords(i);
        throw InputError(std::string(to_string(volume.kind())) + " volume violates " + rule + " at voxel (" +
                         std::to_string(c[0]) + ", " + std::to_string(c[1]) + ", " + std::to_string(c[2]) +
                         ")");
    };
    for (Index i = 0; i < d.size(); ++i) {
        const double v = static_cast<double>(d[i]);
        switch (volume.kind()) {
            case VolumeKind::Probability:
                if (!(v >= 0.0 && v <= 1.0)) fail(i, "values in [0, 1]");
                break;
            case VolumeKind::Binary:
                if (v != 0.0 && v != 1.0) fail(i, "values in {0, 1}");
                break;
            case VolumeKind::InstanceLabel:
                if (!(v >= 0.0) || v != std::floor(v)) fail(i, "non-negative integer labels");
                break;
            case VolumeKind::Normalized:
                if (!(v >= -1.0 && v <= 1.0)) fail(i, "values in [-1, 1]");
                break;
            case VolumeKind::IntensityHU:
                if (!std::isfinite(v)) fail(i, "finite intensities");
                break;
        }
    }
}

template <typename Scalar>
Volume<Scalar> volume_from_buffer(const Scalar* data, Dims dims, Spacing spacing, VolumeKind kind,
                                  BufferOrder order) {
    Volume<Scalar> out(dims, spacing, kind);
    const Index n = dims.voxels();
    if (order == BufferOrder::XFastest) {
        std::memcpy(out.data().data(), data, static_cast<std::size_t>(n) * sizeof(Scalar));
        return out;
    }
    Index src = 0;
    for (Index x = 0; x < dims[0]; ++x)
        for (Index y = 0; y < dims[1]; ++y)
            for (Index z = 0; z < dims[2]; ++z) out(x, y, z) = data[src++];
    return out;
}

template void validate_kind(const Volume<float>&);
template void validate_kind(const Volume<Label>&);
template Volume<float> volume_from_buffer(const float*, Dims, Spacing, VolumeKind, BufferOrder);
template Volume<Label> volume_from_buffer(const Label*, Dims, Spacing, VolumeKind, BufferOrder);

}  // namespace ribeval
