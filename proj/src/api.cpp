#include "ribeval/api.hpp"

#include <algorithm>

namespace ribeval::api {

namespace {

template <typename T>
Volume<T> from_view(const ArrayView<T>& view, VolumeKind kind) {
    if (view.data == nullptr && view.dims.voxels() > 0) throw InputError("array view has no data");
    Volume<T> out(view.dims, view.spacing, kind);
    const Index nx = view.dims[0], ny = view.dims[1], nz = view.dims[2];
    if (view.order == ArrayOrder::XFastest) {
        std::copy(view.data, view.data + out.size(), out.data().data());
        return out;
    }
    for (Index x = 0; x < nx; ++x)
        for (Index y = 0; y < ny; ++y)
            for (Index z = 0; z < nz; ++z) out(x, y, z) = view.data[(x * ny + y) * nz + z];
    return out;
}

std::vector<ScanArrays> sorted(std::vector<ScanArrays> scans) {
    std::stable_sort(scans.begin(), scans.end(),
                     [](const ScanArrays& a, const ScanArrays& b) { return a.scan_id < b.scan_id; });
    for (std::size_t k = 1; k < scans.size(); ++k)
        if (scans[k].scan_id == scans[k - 1].scan_id) throw InputError("duplicate scan id " + scans[k].scan_id);
    return scans;
}

MatchResult match_scan(const ScanArrays& s, double iou_threshold) {
    try {
        const LabelMap pred = to_label_map(s.pred);
        const LabelMap gt = to_label_map(s.gt);
        if (!(pred.dims() == gt.dims()))
            throw InputError("dims mismatch: prediction " + to_string(pred.dims()) + " vs ground truth " +
                             to_string(gt.dims()));
        return match_proposals(pred, s.confidences, gt, iou_threshold, s.scan_id);
    } catch (const InputError& e) {
        throw InputError(s.scan_id + ": " + e.what());
    }
}

}  // namespace

LabelMap to_label_map(const LabelArrayView& view) { return from_view(view, VolumeKind::InstanceLabel); }

ScalarVolume to_volume(const FloatArrayView& view, VolumeKind kind) { return from_view(view, kind); }

template <typename T>
void copy_out(const Volume<T>& volume, T* out, ArrayOrder order) {
    if (order == ArrayOrder::XFastest) {
        std::copy(volume.data().data(), volume.data().data() + volume.size(), out);
        return;
    }
    const Dims& d = volume.dims();
    for (Index x = 0; x < d[0]; ++x)
        for (Index y = 0; y < d[1]; ++y)
            for (Index z = 0; z < d[2]; ++z) out[(x * d[1] + y) * d[2] + z] = volume(x, y, z);
}

template void copy_out(const Volume<float>&, float*, ArrayOrder);
template void copy_out(const Volume<Label>&, Label*, ArrayOrder);

Json evaluate_detection(const std::vector<ScanArrays>& scans, const DetectionReportSettings& settings) {
    std::vector<MatchResult> results;
    for (const auto& s : sorted(scans)) results.push_back(match_scan(s, settings.iou_threshold));
    return detection_report(results, settings);
}

Json evaluate_classification(const std::vector<ScanArrays>& scans, const ClassificationReportSettings& settings) {
    std::vector<MatchResult> results;
    std::vector<ConfusionMatrix> matrices;
    for (const auto& s : sorted(scans)) {
        results.push_back(match_scan(s, settings.detection.iou_threshold));
        try {
            annotate_gt_classes(results.back(), s.gt_classes);
            matrices.push_back(build_confusion(results.back(), s.pred_classes, s.gt_classes, settings.conf_threshold));
        } catch (const InputError& e) {
            throw InputError(s.scan_id + ": " + e.what());
        }
    }
    return classification_report(results, matrices, settings);
}

ProposalResult extract_proposals(const FloatArrayView& probability, const ProposalOptions& options,
                                 const FloatArrayView* exclusion) {
    const ScalarVolume prob = to_volume(probability, VolumeKind::Probability);
    std::optional<ScalarVolume> mask;
    if (exclusion) mask = to_volume(*exclusion, VolumeKind::Binary);
    ProposalResult out{ribeval::extract_proposals(prob, options, mask ? &*mask : nullptr), {}};
    out.report = proposal_report(out.set);
    return out;
}

}  // namespace ribeval::api
