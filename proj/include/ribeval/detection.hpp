#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ribeval/io.hpp"
#include "ribeval/volume.hpp"

namespace ribeval {

inline constexpr double kDefaultHitIou = 0.2;

struct Overlap {
    double iou = 0.0;
    double dice = 0.0;
};

Overlap overlap_from_counts(std::int64_t size_a, std::int64_t size_b, std::int64_t intersection);

/// IoU and Dice between the voxel sets {a == id_a} and {b == id_b}.
Overlap overlap_metrics(const LabelMap& a, Label id_a, const LabelMap& b, Label id_b);

/// Instance sizes and the sparse intersection counts of two label maps,
/// gathered in one joint pass.
struct OverlapTable {
    std::map<Label, std::int64_t> pred_sizes;
    std::map<Label, std::int64_t> gt_sizes;
    std::map<std::pair<Label, Label>, std::int64_t> intersections;  // (pred, gt) -> voxels
};

OverlapTable overlap_table(const LabelMap& pred, const LabelMap& gt);

struct ProposalRecord {
    Label proposal_id = 0;
    double confidence = 0.0;
    std::int64_t voxel_count = 0;
    std::optional<Label> matched_gt_id;
    /// Best-overlapping GT regardless of the threshold (smallest id on ties).
    std::optional<Label> best_gt_id;
    double iou = 0.0;
    double dice = 0.0;
    std::optional<FractureClass> gt_class;  // of matched_gt_id, when known

    bool is_hit() const { return matched_gt_id.has_value(); }
};

struct PairOverlap {
    Label proposal_id = 0;
    Label gt_id = 0;
    double iou = 0.0;
};

struct MatchResult {
    std::string scan_id;
    std::vector<ProposalRecord> proposals;  // ascending proposal_id
    std::vector<Label> gt_ids;              // ascending
    std::map<Label, std::int64_t> gt_sizes;
    std::map<Label, std::vector<Label>> hit_map;  // every gt id present, possibly empty
    std::vector<PairOverlap> overlaps;            // every pair with nonzero intersection
    double iou_threshold = kDefaultHitIou;

    std::int64_t fp_count() const;
    std::int64_t hit_gt_count() const;
    /// Hits beyond the first on an already-hit GT.
    std::int64_t duplicate_hits() const;
};

/// Assigns each proposal to the GT of maximal IoU among those reaching
/// `iou_threshold` (ties go to the smaller gt id). Several proposals may hit
/// one GT. Proposals are the positive labels present in `pred`.
MatchResult match_proposals(const LabelMap& pred, const std::map<Label, double>& confidences,
                            const LabelMap& gt, double iou_threshold = kDefaultHitIou,
                            std::string scan_id = {});

inline const std::vector<double> kDefaultFpLevels{0.5, 1.0, 2.0, 4.0, 8.0};

struct FrocPoint {
    double threshold = 0.0;  // +inf for the empty operating point
    double avg_fp = 0.0;
    double sensitivity = 0.0;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
};

struct FrocCurve {
    std::vector<FrocPoint> points;  // descending threshold, so avg_fp ascending
    std::vector<double> fp_levels;
    std::vector<double> level_sensitivities;  // parallel to fp_levels
    double avg_sensitivity = 0.0;
    double max_sensitivity = 0.0;
    double avg_fp_total = 0.0;
    std::int64_t total_gt = 0;
    std::int64_t scans = 0;
};

/// Step-function FROC pooled over scans. Duplicate hits on one GT are neither
/// extra true positives nor false positives.
FrocCurve froc(const std::vector<MatchResult>& results, const std::vector<double>& fp_levels = kDefaultFpLevels);

struct SegRecord {
    std::string scan_id;
    Label proposal_id = 0;
    bool matched = false;
    double iou = 0.0;
    double dice = 0.0;
    std::optional<FractureClass> gt_class;
};

struct SegSummary {
    double mean_iou = 0.0;
    double mean_dice = 0.0;
    std::vector<SegRecord> records;
};

/// Unweighted per-instance means. Returns nullopt when the selection is empty
/// (e.g. excluding FPs with no matched proposals).
std::optional<SegSummary> seg_metric_summary(const std::vector<MatchResult>& results, bool include_fp);

enum class DetectionCategory { TP, FP };

struct ConfidenceEntry {
    std::string scan_id;
    Label proposal_id = 0;
    double confidence = 0.0;
    double iou = 0.0;
    DetectionCategory category = DetectionCategory::FP;
};

struct MissedEntry {
    std::string scan_id;
    Label gt_id = 0;
    /// Confidence of the proposal overlapping this GT most (none if untouched).
    std::optional<double> nearest_confidence;
    double nearest_iou = 0.0;
};

struct ConfidenceReport {
    std::vector<ConfidenceEntry> proposals;
    std::vector<MissedEntry> missed;
};

ConfidenceReport confidence_report(const std::vector<MatchResult>& results);

/// Fills ProposalRecord::gt_class from a per-GT class table.
void annotate_gt_classes(MatchResult& result, const std::map<Label, FractureClass>& gt_classes);

std::string_view to_string(DetectionCategory c);

}  // namespace ribeval
