#pragma once

// Array-in, report-out entry points for host-language bindings. Everything
// here delegates to the same core calls the CLI uses.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ribeval/classification.hpp"
#include "ribeval/detection.hpp"
#include "ribeval/fusion.hpp"
#include "ribeval/pipeline.hpp"
#include "ribeval/report.hpp"

namespace ribeval::api {

/// XFastest: index = x + nx * (y + ny * z). ZFastest: index = z + nz * (y + ny * x).
enum class ArrayOrder { XFastest, ZFastest };

template <typename T>
struct ArrayView {
    const T* data = nullptr;
    Dims dims;  // always (nx, ny, nz)
    ArrayOrder order = ArrayOrder::XFastest;
    Spacing spacing{1.0, 1.0, 1.0};
};

using LabelArrayView = ArrayView<std::int32_t>;
using FloatArrayView = ArrayView<float>;

LabelMap to_label_map(const LabelArrayView& view);
ScalarVolume to_volume(const FloatArrayView& view, VolumeKind kind);

/// Writes `volume` into `out` (volume.size() elements) in the requested order.
template <typename T>
void copy_out(const Volume<T>& volume, T* out, ArrayOrder order);

struct ScanArrays {
    std::string scan_id;
    LabelArrayView pred;
    LabelArrayView gt;
    std::map<Label, double> confidences;
    std::map<Label, FractureClass> pred_classes;  // classification only
    std::map<Label, FractureClass> gt_classes;    // classification only
};

/// Same body as the CLI detection report, without status and manifest.
Json evaluate_detection(const std::vector<ScanArrays>& scans, const DetectionReportSettings& settings = {});

/// Same body as the CLI classification report, without status and manifest.
Json evaluate_classification(const std::vector<ScanArrays>& scans, const ClassificationReportSettings& settings = {});

struct ProposalResult {
    ProposalSet set;
    Json report;  // {dims, proposal_count, proposals}
};

ProposalResult extract_proposals(const FloatArrayView& probability, const ProposalOptions& options = {},
                                 const FloatArrayView* exclusion = nullptr);

/// Point-to-voxel fusion forward pass; the cache feeds fusion::fusion_backward.
template <typename Scalar>
fusion::FusionForward<Scalar> voxelize_fuse(const fusion::FeatureGrid<Scalar>& voxel,
                                            const fusion::PointFeatures<Scalar>& points,
                                            const fusion::ChannelTransform<Scalar>& transform, double extent,
                                            fusion::Pooling pooling = fusion::Pooling::Average) {
    return fusion::fusion_forward(voxel, points, transform, extent, pooling);
}

}  // namespace ribeval::api
