#include "ribeval/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace ribeval {

Overlap overlap_from_counts(std::int64_t size_a, std::int64_t size_b, std::int64_t intersection) {
    const std::int64_t uni = size_a + size_b - intersection;
    if (uni == 0) return {0.0, 0.0};
    return {static_cast<double>(intersection) / static_cast<double>(uni),
            2.0 * static_cast<double>(intersection) / static_cast<double>(size_a + size_b)};
}

Overlap overlap_metrics(const LabelMap& a, Label id_a, const LabelMap& b, Label id_b) {
    require_same_dims(a, b, "overlap_metrics");
    std::int64_t na = 0, nb = 0, both = 0;
    const auto& da = a.data();
    const auto& db = b.data();
    for (Index i = 0; i < da.size(); ++i) {
        const bool in_a = da[i] == id_a;
        const bool in_b = db[i] == id_b;
        na += in_a;
        nb += in_b;
        both += in_a && in_b;
    }
    return overlap_from_counts(na, nb, both);
}

namespace {

std::uint64_t pair_key(Label p, Label g) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p)) << 32) | static_cast<std::uint32_t>(g);
}

// Counts label sizes with a one-entry cache, since labels come in runs.
class RunCounter {
public:
    void add(std::uint64_t key) {
        if (last_ != nullptr && key == last_key_) {
            ++*last_;
            return;
        }
        last_key_ = key;
        last_ = &counts_[key];
        ++*last_;
    }
    const std::unordered_map<std::uint64_t, std::int64_t>& counts() const { return counts_; }

private:
    std::unordered_map<std::uint64_t, std::int64_t> counts_;
    std::uint64_t last_key_ = 0;
    std::int64_t* last_ = nullptr;
};

}  // namespace

OverlapTable overlap_table(const LabelMap& pred, const LabelMap& gt) {
    require_same_dims(pred, gt, "overlap_table");
    RunCounter pred_sizes, gt_sizes, joint;
    const Label* pd = pred.data().data();
    const Label* gd = gt.data().data();
    const Index n = pred.size();
    for (Index i = 0; i < n; ++i) {
        const Label p = pd[i];
        const Label g = gd[i];
        if ((p | g) == 0) continue;
        if (p < 0 || g < 0) throw InputError("overlap_table: negative label");
        if (p > 0) pred_sizes.add(static_cast<std::uint64_t>(p));
        if (g > 0) gt_sizes.add(static_cast<std::uint64_t>(g));
        if (p > 0 && g > 0) joint.add(pair_key(p, g));
    }

    OverlapTable table;
    for (const auto& [k, v] : pred_sizes.counts()) table.pred_sizes[static_cast<Label>(k)] = v;
    for (const auto& [k, v] : gt_sizes.counts()) table.gt_sizes[static_cast<Label>(k)] = v;
    for (const auto& [k, v] : joint.counts())
        table.intersections[{static_cast<Label>(k >> 32), static_cast<Label>(k & 0xFFFFFFFFu)}] = v;
    return table;
}

std::int64_t MatchResult::fp_count() const {
    return std::count_if(proposals.begin(), proposals.end(), [](const auto& p) { return !p.is_hit(); });
}

std::int64_t MatchResult::hit_gt_count() const {
    return std::count_if(hit_map.begin(), hit_map.end(), [](const auto& e) { return !e.second.empty(); });
}

std::int64_t MatchResult::duplicate_hits() const {
    std::int64_t dup = 0;
    for (const auto& [gt, hits] : hit_map) dup += hits.empty() ? 0 : static_cast<std::int64_t>(hits.size()) - 1;
    return dup;
}

MatchResult match_proposals(const LabelMap& pred, const std::map<Label, double>& confidences, const LabelMap& gt,
                            double iou_threshold, std::string scan_id) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
        throw InputError("match_proposals: iou threshold must lie in (0, 1]");
    const OverlapTable table = overlap_table(pred, gt);

    MatchResult result;
    result.scan_id = std::move(scan_id);
    result.iou_threshold = iou_threshold;
    result.gt_sizes = table.gt_sizes;
    for (const auto& [id, size] : table.gt_sizes) {
        result.gt_ids.push_back(id);
        result.hit_map[id];
    }

    auto pair_it = table.intersections.begin();
    for (const auto& [pid, size] : table.pred_sizes) {
        const auto conf = confidences.find(pid);
        if (conf == confidences.end())
            throw InputError("match_proposals: no confidence for proposal " + std::to_string(pid) +
                             (result.scan_id.empty() ? "" : " in scan " + result.scan_id));

        ProposalRecord rec;
        rec.proposal_id = pid;
        rec.confidence = conf->second;
        rec.voxel_count = size;

        // Intersections are ordered by (pred, gt), so candidates arrive by ascending gt id
        // and the strict comparison keeps the smaller id on ties.
        for (; pair_it != table.intersections.end() && pair_it->first.first == pid; ++pair_it) {
            const Label gid = pair_it->first.second;
            const Overlap o = overlap_from_counts(size, table.gt_sizes.at(gid), pair_it->second);
            result.overlaps.push_back({pid, gid, o.iou});
            if (!rec.best_gt_id || o.iou > rec.iou) {
                rec.best_gt_id = gid;
                rec.iou = o.iou;
                rec.dice = o.dice;
            }
        }
        if (rec.best_gt_id && rec.iou >= iou_threshold) {
            rec.matched_gt_id = rec.best_gt_id;
            result.hit_map[*rec.best_gt_id].push_back(pid);
        }
        result.proposals.push_back(rec);
    }
    return result;
}

FrocCurve froc(const std::vector<MatchResult>& results, const std::vector<double>& fp_levels) {
    if (results.empty()) throw InputError("froc: no scans");
    if (fp_levels.empty()) throw InputError("froc: no FP levels requested");
    for (double f : fp_levels) {
        if (!(f >= 0.0) || !std::isfinite(f)) throw InputError("froc: FP levels must be finite and non-negative");
    }

    // Each GT counts as detected from the highest confidence among its hits downward.
    std::vector<double> gt_hit_conf;
    std::vector<double> fp_conf;
    std::int64_t total_gt = 0;
    for (const auto& r : results) {
        total_gt += static_cast<std::int64_t>(r.gt_ids.size());
        std::map<Label, double> best;
        for (const auto& p : r.proposals) {
            if (p.is_hit()) {
                auto [it, fresh] = best.try_emplace(*p.matched_gt_id, p.confidence);
                if (!fresh) it->second = std::max(it->second, p.confidence);
            } else {
                fp_conf.push_back(p.confidence);
            }
        }
        for (const auto& [g, c] : best) gt_hit_conf.push_back(c);
    }
    if (total_gt == 0) throw InputError("froc: ground truth holds no instances");

    std::vector<double> thresholds;
    thresholds.reserve(gt_hit_conf.size() + fp_conf.size() + 1);
    for (const auto& r : results)
        for (const auto& p : r.proposals) thresholds.push_back(p.confidence);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.insert(thresholds.begin(), std::numeric_limits<double>::infinity());

    std::sort(gt_hit_conf.begin(), gt_hit_conf.end(), std::greater<>());
    std::sort(fp_conf.begin(), fp_conf.end(), std::greater<>());

    FrocCurve curve;
    curve.fp_levels = fp_levels;
    curve.total_gt = total_gt;
    curve.scans = static_cast<std::int64_t>(results.size());
    const double scans = static_cast<double>(results.size());

    std::size_t tp = 0, fp = 0;
    for (const double t : thresholds) {
        while (tp < gt_hit_conf.size() && gt_hit_conf[tp] >= t) ++tp;
        while (fp < fp_conf.size() && fp_conf[fp] >= t) ++fp;
        FrocPoint pt;
        pt.threshold = t;
        pt.tp = static_cast<std::int64_t>(tp);
        pt.fp = static_cast<std::int64_t>(fp);
        pt.sensitivity = static_cast<double>(tp) / static_cast<double>(total_gt);
        pt.avg_fp = static_cast<double>(fp) / scans;
        curve.points.push_back(pt);
    }

    for (const double level : fp_levels) {
        double best = 0.0;
        for (const auto& pt : curve.points) {
            if (pt.avg_fp <= level) best = std::max(best, pt.sensitivity);
        }
        curve.level_sensitivities.push_back(best);
    }
    double sum = 0.0;
    for (double s : curve.level_sensitivities) sum += s;
    curve.avg_sensitivity = sum / static_cast<double>(fp_levels.size());
    curve.max_sensitivity = curve.points.back().sensitivity;
    curve.avg_fp_total = curve.points.back().avg_fp;
    return curve;
}

std::optional<SegSummary> seg_metric_summary(const std::vector<MatchResult>& results, bool include_fp) {
    if (results.empty()) throw InputError("seg_metric_summary: no scans");
    SegSummary summary;
    double iou_sum = 0.0, dice_sum = 0.0;
    for (const auto& r : results) {
        for (const auto& p : r.proposals) {
            if (!include_fp && !p.is_hit()) continue;
            summary.records.push_back({r.scan_id, p.proposal_id, p.is_hit(), p.iou, p.dice, p.gt_class});
            iou_sum += p.iou;
            dice_sum += p.dice;
        }
    }
    if (summary.records.empty()) return std::nullopt;
    const auto n = static_cast<double>(summary.records.size());
    summary.mean_iou = iou_sum / n;
    summary.mean_dice = dice_sum / n;
    return summary;
}

ConfidenceReport confidence_report(const std::vector<MatchResult>& results) {
    if (results.empty()) throw InputError("confidence_report: no scans");
    ConfidenceReport report;
    for (const auto& r : results) {
        std::map<Label, double> conf;
        for (const auto& p : r.proposals) {
            conf[p.proposal_id] = p.confidence;
            report.proposals.push_back({r.scan_id, p.proposal_id, p.confidence, p.iou,
                                        p.is_hit() ? DetectionCategory::TP : DetectionCategory::FP});
        }
        for (const auto& [gid, hits] : r.hit_map) {
            if (!hits.empty()) continue;
            MissedEntry miss{r.scan_id, gid, std::nullopt, 0.0};
            Label nearest = 0;
            for (const auto& o : r.overlaps) {
                if (o.gt_id != gid) continue;
                if (nearest == 0 || o.iou > miss.nearest_iou || (o.iou == miss.nearest_iou && o.proposal_id < nearest)) {
                    nearest = o.proposal_id;
                    miss.nearest_iou = o.iou;
                }
            }
            if (nearest != 0) miss.nearest_confidence = conf.at(nearest);
            report.missed.push_back(miss);
        }
    }
    return report;
}

void annotate_gt_classes(MatchResult& result, const std::map<Label, FractureClass>& gt_classes) {
    for (auto& p : result.proposals) {
        if (!p.matched_gt_id) continue;
        const auto it = gt_classes.find(*p.matched_gt_id);
        if (it != gt_classes.end()) p.gt_class = it->second;
    }
}

std::string_view to_string(DetectionCategory c) { return c == DetectionCategory::TP ? "TP" : "FP"; }

}  // namespace ribeval
