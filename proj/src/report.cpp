#include "ribeval/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#ifndef RIBEVAL_VERSION
#define RIBEVAL_VERSION "0.0.0"
#endif

namespace ribeval {

std::string_view tool_version() { return RIBEVAL_VERSION; }

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 20);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

void RunManifest::add_input(const std::filesystem::path& path) {
    input_digests[path.string()] = sha256_file(path);
}

Json RunManifest::to_json() const {
    Json digests = Json::object();
    for (const auto& [path, hash] : input_digests) digests[path] = hash;
    return Json{{"command", command},
                {"tool_version", std::string(tool_version())},
                {"parameters", parameters},
                {"input_digests", digests},
                {"duration_seconds", duration_seconds}};
}

namespace {

Json optional_label(const std::optional<Label>& v) { return v ? Json(*v) : Json(nullptr); }

Json level_map(const std::vector<double>& levels, const std::vector<double>& values) {
    Json out = Json::object();
    for (std::size_t i = 0; i < levels.size(); ++i) out[format_number(levels[i])] = values[i];
    return out;
}

Json threshold_json(double t) { return std::isinf(t) ? Json("inf") : Json(t); }

}  // namespace

Json to_json(const MatchResult& r) {
    Json proposals = Json::array();
    for (const auto& p : r.proposals) {
        Json rec{{"proposal_id", p.proposal_id},
                 {"confidence", p.confidence},
                 {"voxel_count", p.voxel_count},
                 {"matched_gt_id", optional_label(p.matched_gt_id)},
                 {"best_gt_id", optional_label(p.best_gt_id)},
                 {"iou", p.iou},
                 {"dice", p.dice},
                 {"category", p.is_hit() ? "TP" : "FP"}};
        if (p.gt_class) rec["gt_class"] = std::string(to_string(*p.gt_class));
        proposals.push_back(rec);
    }
    Json hits = Json::object();
    for (const auto& [gid, ids] : r.hit_map) hits[std::to_string(gid)] = ids;
    return Json{{"scan_id", r.scan_id},
                {"num_gt", r.gt_ids.size()},
                {"num_proposals", r.proposals.size()},
                {"detected_gt", r.hit_gt_count()},
                {"false_positives", r.fp_count()},
                {"duplicate_hits", r.duplicate_hits()},
                {"gt_ids", r.gt_ids},
                {"hit_map", hits},
                {"proposals", proposals}};
}

Json to_json(const FrocCurve& curve) {
    Json points = Json::array();
    for (const auto& p : curve.points)
        points.push_back({{"threshold", threshold_json(p.threshold)},
                          {"avg_fp", p.avg_fp},
                          {"sensitivity", p.sensitivity},
                          {"tp", p.tp},
                          {"fp", p.fp}});
    return Json{{"fp_levels", curve.fp_levels},
                {"level_sensitivities", level_map(curve.fp_levels, curve.level_sensitivities)},
                {"avg_sensitivity", curve.avg_sensitivity},
                {"max_sensitivity", curve.max_sensitivity},
                {"avg_fp", curve.avg_fp_total},
                {"total_gt", curve.total_gt},
                {"scans", curve.scans},
                {"points", points}};
}

Json to_json(const ConfusionMatrix& m) {
    Json counts = Json::array();
    for (int r = 0; r < 5; ++r) {
        Json row = Json::array();
        for (int c = 0; c < 6; ++c) row.push_back(m.counts(r, c));
        counts.push_back(row);
    }
    return Json{{"rows", kRowNames}, {"columns", kColNames}, {"counts", counts}};
}

Json to_json(const F1Scores& s) {
    Json out = Json::object();
    for (int c = 0; c < kScoredClasses; ++c) out[std::string(kColNames[static_cast<std::size_t>(c)])] = s.per_class[static_cast<std::size_t>(c)];
    out["macro"] = s.macro;
    return out;
}

Json to_json(const WindowPlan& plan) {
    Json windows = Json::array();
    for (const auto& w : plan.windows)
        windows.push_back({{"origin", w.origin}, {"extent", w.extent}, {"clamped", w.clamped}});
    return Json{{"window_size", plan.window_size}, {"count", plan.windows.size()}, {"windows", windows}};
}

Json to_json(const fusion::GradCheckResult& r) {
    return Json{{"seed", r.seed},
                {"points", r.points},
                {"resolution", r.resolution},
                {"point_channels", r.point_channels},
                {"voxel_channels", r.voxel_channels},
                {"entries_checked", r.entries_checked},
                {"max_entry_error", r.max_entry_error},
                {"max_directional_error", r.max_directional_error},
                {"conservation_error", r.conservation_error},
                {"passed", r.passed}};
}

Json detection_report(const std::vector<MatchResult>& results, const DetectionReportSettings& settings) {
    const FrocCurve curve = froc(results, settings.fp_levels);
    const auto incl = seg_metric_summary(results, true);
    const auto excl = seg_metric_summary(results, false);
    const ConfidenceReport conf = confidence_report(results);

    auto mean_or_null = [](const std::optional<SegSummary>& s, bool iou) {
        return s ? Json(iou ? s->mean_iou : s->mean_dice) : Json(nullptr);
    };

    Json per_scan = Json::array();
    std::int64_t duplicates = 0;
    for (const auto& r : results) {
        per_scan.push_back(to_json(r));
        duplicates += r.duplicate_hits();
    }
    Json missed = Json::array();
    for (const auto& m : conf.missed)
        missed.push_back({{"scan_id", m.scan_id},
                          {"gt_id", m.gt_id},
                          {"nearest_confidence", m.nearest_confidence ? Json(*m.nearest_confidence) : Json(nullptr)},
                          {"nearest_iou", m.nearest_iou}});

    return Json{{"iou_threshold", settings.iou_threshold},
                {"connectivity", to_int(settings.connectivity)},
                {"fp_levels", settings.fp_levels},
                {"level_sensitivities", level_map(curve.fp_levels, curve.level_sensitivities)},
                {"avg_sensitivity", curve.avg_sensitivity},
                {"max_sensitivity", curve.max_sensitivity},
                {"avg_fp", curve.avg_fp_total},
                {"mean_iou_incl_fp", mean_or_null(incl, true)},
                {"mean_dice_incl_fp", mean_or_null(incl, false)},
                {"mean_iou_excl_fp", mean_or_null(excl, true)},
                {"mean_dice_excl_fp", mean_or_null(excl, false)},
                {"segmentation_headline", "incl_fp"},
                {"threshold_selection", "step"},
                {"total_gt", curve.total_gt},
                {"scans", curve.scans},
                {"duplicate_hits", duplicates},
                {"froc", to_json(curve)},
                {"missed", missed},
                {"per_scan", per_scan}};
}

Json proposal_report(const ProposalSet& set) {
    Json proposals = Json::array();
    for (const auto& p : set.proposals)
        proposals.push_back({{"instance_id", p.id}, {"confidence", p.confidence}, {"voxel_count", p.voxel_count}});
    return {{"dims", set.labels.dims().n}, {"proposal_count", set.proposals.size()}, {"proposals", proposals}};
}

Json classification_report(const std::vector<MatchResult>& results, const std::vector<ConfusionMatrix>& per_scan,
                           const ClassificationReportSettings& settings) {
    ConfusionMatrix total;
    Json scans = Json::array();
    for (std::size_t i = 0; i < per_scan.size(); ++i) {
        total += per_scan[i];
        scans.push_back({{"scan_id", results[i].scan_id}, {"matrix", to_json(per_scan[i])}});
    }

    // Per-category IoU of matched proposals, keyed by the GT class.
    std::map<std::string, std::vector<double>> by_class;
    for (const auto& r : results)
        for (const auto& p : r.proposals)
            if (p.is_hit() && p.gt_class) by_class[std::string(to_string(*p.gt_class))].push_back(p.iou);
    Json iou_by_class = Json::object();
    for (const auto& [cls, ious] : by_class) iou_by_class[cls] = ious;

    return Json{{"conf_threshold", settings.conf_threshold},
                {"iou_threshold", settings.detection.iou_threshold},
                {"connectivity", to_int(settings.detection.connectivity)},
                {"matrix", to_json(total)},
                {"f1",
                 {{"overall", to_json(f1_scores(total, F1Mode::Overall))},
                  {"target_aware", to_json(f1_scores(total, F1Mode::TargetAware))},
                  {"prediction_aware", to_json(f1_scores(total, F1Mode::PredictionAware))}}},
                {"iou_by_gt_class", iou_by_class},
                {"per_scan", scans}};
}

std::string froc_csv(const FrocCurve& curve) {
    std::string out = "avg_fp,sensitivity\n";
    for (const auto& p : curve.points) out += format_number(p.avg_fp) + "," + format_number(p.sensitivity) + "\n";
    return out;
}

}  // namespace ribeval
