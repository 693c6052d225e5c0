#include "ribeval/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>

#include "ribeval/classification.hpp"
#include "ribeval/io.hpp"
#include "ribeval/report.hpp"

namespace ribeval::cli {

namespace fs = std::filesystem;

ScanFault::ScanFault(std::string scan, const std::string& fault)
    : InputError("scan " + scan + ": " + fault), scan_(std::move(scan)), fault_(fault) {}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const Json& json) { write_text(path, json.dump(2) + "\n"); }

struct DirEntry {
    std::optional<fs::path> volume;
    std::optional<fs::path> csv;
};

std::map<std::string, DirEntry> scan_directory(const fs::path& dir, std::string_view role) {
    if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
    std::map<std::string, DirEntry> found;
    const std::string tag(role);
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        for (const std::string_view ext : {".nii.gz", ".nii", ".json", ".csv"}) {
            const std::string suffix = tag + std::string(ext);
            if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
                continue;
            const std::string scan = name.substr(0, name.size() - suffix.size());
            auto& slot = found[scan];
            if (ext == ".csv") {
                slot.csv = entry.path();
            } else {
                if (slot.volume) throw ScanFault(scan, "more than one " + tag.substr(1) + " volume file");
                slot.volume = entry.path();
            }
            break;
        }
    }
    return found;
}

struct ScanOutcome {
    MatchResult match;
    std::optional<ConfusionMatrix> matrix;
};

ScanOutcome evaluate_scan(const ScanFiles& files, const EvalOptions& options, bool classify) {
    try {
        const LabelMap pred = load_label_map(files.pred_volume);
        const LabelMap gt = load_label_map(files.gt_volume);
        if (!(pred.dims() == gt.dims()))
            throw ScanFault(files.scan, "dims mismatch: prediction " + to_string(pred.dims()) + " vs ground truth " +
                                            to_string(gt.dims()));
        const auto pred_meta = load_metadata(files.pred_csv);
        const auto gt_meta = load_metadata(files.gt_csv);
        check_metadata_consistency(pred, pred_meta, "prediction metadata");
        check_metadata_consistency(gt, gt_meta, "ground-truth metadata");

        ScanOutcome out;
        out.match = match_proposals(pred, confidences_of(pred_meta, "prediction metadata"), gt,
                                    options.iou_threshold, files.scan);
        if (classify) {
            const auto pred_classes = classes_of(pred_meta, "prediction metadata");
            const auto gt_classes = classes_of(gt_meta, "ground-truth metadata");
            annotate_gt_classes(out.match, gt_classes);
            out.matrix = build_confusion(out.match, pred_classes, gt_classes, options.conf_threshold);
        }
        return out;
    } catch (const ScanFault&) {
        throw;
    } catch (const InputError& e) {
        throw ScanFault(files.scan, e.what());
    }
}

std::vector<ScanOutcome> evaluate_all(const std::vector<ScanFiles>& scans, const EvalOptions& options, bool classify) {
    std::vector<ScanOutcome> outcomes(scans.size());
    std::vector<std::exception_ptr> errors(scans.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scans.size(); i = next++) {
            try {
                outcomes[i] = evaluate_scan(scans[i], options, classify);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto workers = static_cast<std::size_t>(std::clamp<int>(options.jobs, 1, 256));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(workers, scans.size()); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return outcomes;
}

Json eval_parameters(const EvalOptions& o, bool classify) {
    Json p{{"pred_dir", o.pred_dir.string()},
           {"gt_dir", o.gt_dir.string()},
           {"iou_threshold", o.iou_threshold},
           {"fp_levels", o.fp_levels},
           {"connectivity", to_int(o.connectivity)},
           {"jobs", o.jobs}};
    if (classify) p["conf_threshold"] = o.conf_threshold;
    return p;
}

void add_scan_inputs(RunManifest& manifest, const std::vector<ScanFiles>& scans) {
    for (const auto& s : scans) {
        for (const auto& path : {s.pred_volume, s.pred_csv, s.gt_volume, s.gt_csv}) {
            manifest.add_input(path);
            if (path.extension() == ".json") manifest.add_input(fs::path(path).replace_extension(".bin"));
        }
    }
}

Json finish(Json body, RunManifest& manifest, Clock::time_point start) {
    manifest.duration_seconds = seconds_since(start);
    Json out{{"status", "ok"}, {"manifest", manifest.to_json()}};
    for (auto& [k, v] : body.items()) out[k] = v;
    return out;
}

std::string_view pooling_name(fusion::Pooling p) { return p == fusion::Pooling::Average ? "average" : "max"; }

}  // namespace

std::vector<ScanFiles> discover_scans(const fs::path& pred_dir, const fs::path& gt_dir) {
    const auto preds = scan_directory(pred_dir, "_pred");
    const auto gts = scan_directory(gt_dir, "_gt");
    std::vector<ScanFiles> out;
    for (const auto& [scan, p] : preds) {
        const auto g = gts.find(scan);
        if (g == gts.end()) throw ScanFault(scan, "prediction has no matching ground truth");
        if (!p.volume) throw ScanFault(scan, "missing prediction volume " + scan + "_pred.(nii.gz|nii|json)");
        if (!p.csv) throw ScanFault(scan, "missing prediction metadata " + scan + "_pred.csv");
        if (!g->second.volume) throw ScanFault(scan, "missing ground-truth volume " + scan + "_gt.(nii.gz|nii|json)");
        if (!g->second.csv) throw ScanFault(scan, "missing ground-truth metadata " + scan + "_gt.csv");
        out.push_back({scan, *p.volume, *p.csv, *g->second.volume, *g->second.csv});
    }
    for (const auto& [scan, g] : gts) {
        if (!preds.count(scan)) throw ScanFault(scan, "ground truth has no matching prediction");
    }
    if (out.empty()) throw InputError("no scans found in " + pred_dir.string());
    return out;
}

int cmd_eval_det(const EvalOptions& options, std::ostream& log) {
    const auto start = Clock::now();
    const auto scans = discover_scans(options.pred_dir, options.gt_dir);
    const auto outcomes = evaluate_all(scans, options, false);
    std::vector<MatchResult> results;
    for (const auto& o : outcomes) results.push_back(o.match);

    RunManifest manifest{"eval-det", eval_parameters(options, false)};
    add_scan_inputs(manifest, scans);
    const DetectionReportSettings settings{options.iou_threshold, options.connectivity, options.fp_levels};
    const Json report = finish(detection_report(results, settings), manifest, start);

    write_json(options.out / "detection_report.json", report);
    write_text(options.out / "froc.csv", froc_csv(froc(results, options.fp_levels)));
    log << "eval-det: " << scans.size() << " scans, avg sensitivity " << report["avg_sensitivity"].get<double>()
        << ", avg FP " << report["avg_fp"].get<double>() << "\n";
    return kOk;
}

int cmd_eval_cls(const EvalOptions& options, std::ostream& log) {
    const auto start = Clock::now();
    const auto scans = discover_scans(options.pred_dir, options.gt_dir);
    const auto outcomes = evaluate_all(scans, options, true);
    std::vector<MatchResult> results;
    std::vector<ConfusionMatrix> matrices;
    for (const auto& o : outcomes) {
        results.push_back(o.match);
        matrices.push_back(*o.matrix);
    }

    RunManifest manifest{"eval-cls", eval_parameters(options, true)};
    add_scan_inputs(manifest, scans);
    ClassificationReportSettings settings;
    settings.detection = {options.iou_threshold, options.connectivity, options.fp_levels};
    settings.conf_threshold = options.conf_threshold;
    const Json report = finish(classification_report(results, matrices, settings), manifest, start);

    write_json(options.out / "classification_report.json", report);
    log << "eval-cls: " << scans.size() << " scans, overall macro F1 "
        << report["f1"]["overall"]["macro"].get<double>() << "\n";
    return kOk;
}

int cmd_pipeline(const PipelineOptions& options, std::ostream& log) {
    const auto start = Clock::now();
    const ScalarVolume prob = load_volume(options.probability, VolumeKind::Probability);
    std::optional<ScalarVolume> exclusion;
    if (options.exclusion) exclusion = load_volume(*options.exclusion, VolumeKind::Binary);
    const ProposalSet set = extract_proposals(prob, options.proposal, exclusion ? &*exclusion : nullptr);

    fs::create_directories(options.out);
    save_raw(set.labels, options.out / options.name, RawType::I32);
    std::vector<InstanceMetadata> rows;
    for (const auto& p : set.proposals) rows.push_back({p.id, p.confidence, std::nullopt});
    save_metadata(rows, options.out / (options.name + ".csv"));

    RunManifest manifest{"pipeline",
                         {{"probability", options.probability.string()},
                          {"exclusion", options.exclusion ? Json(options.exclusion->string()) : Json(nullptr)},
                          {"bin_threshold", options.proposal.bin_threshold},
                          {"min_voxels", options.proposal.min_voxels},
                          {"connectivity", to_int(options.proposal.connectivity)},
                          {"name", options.name}}};
    manifest.add_input(options.probability);
    if (options.exclusion) manifest.add_input(*options.exclusion);
    write_json(options.out / (options.name + "_report.json"), finish(proposal_report(set), manifest, start));
    log << "pipeline: " << set.proposals.size() << " proposals\n";
    return kOk;
}

int cmd_points(const PointsOptions& options, std::ostream& log) {
    const auto start = Clock::now();
    const ScalarVolume hu = load_volume(options.volume, VolumeKind::IntensityHU);
    ScalarVolume binary = bone_binarize(hu, options.threshold_hu);
    if (options.roi) {
        const ScalarVolume roi = dilate(load_volume(*options.roi, VolumeKind::Binary), options.roi_dilation);
        require_same_dims(binary, roi, "points: roi mask");
        binary.data() *= roi.data();
    }
    const PointCloud cloud = sample_points(binary, options.count, options.seed);

    std::string csv = "x_mm,y_mm,z_mm,i,j,k\n";
    for (Index k = 0; k < cloud.size(); ++k) {
        for (int a = 0; a < 3; ++a) csv += format_number(cloud.coords(k, a)) + ",";
        csv += std::to_string(cloud.source_indices(k, 0)) + "," + std::to_string(cloud.source_indices(k, 1)) + "," +
               std::to_string(cloud.source_indices(k, 2)) + "\n";
    }
    fs::create_directories(options.out);
    write_text(options.out / "points.csv", csv);

    RunManifest manifest{"points",
                         {{"volume", options.volume.string()},
                          {"roi", options.roi ? Json(options.roi->string()) : Json(nullptr)},
                          {"roi_dilation", options.roi_dilation},
                          {"threshold_hu", options.threshold_hu},
                          {"count", options.count},
                          {"seed", options.seed}}};
    manifest.add_input(options.volume);
    if (options.roi) manifest.add_input(*options.roi);
    const Json body{{"points", cloud.size()}, {"foreground_voxels", static_cast<Index>(binary.data().sum())}};
    write_json(options.out / "points_report.json", finish(body, manifest, start));
    log << "points: sampled " << cloud.size() << " points\n";
    return kOk;
}

int cmd_tile(const TileOptions& options, std::ostream& log) {
    const auto start = Clock::now();
    RunManifest manifest{"tile", {{"window", options.window}, {"stride", options.stride}}};
    Json body;
    WindowPlan plan;
    if (options.mask) {
        const ScalarVolume mask = load_volume(*options.mask, VolumeKind::Binary);
        manifest.parameters["mask"] = options.mask->string();
        manifest.add_input(*options.mask);
        plan = windows_from_mask(mask, options.window);
        body = {{"mode", "mask"}, {"dims", mask.dims().n}};
    } else {
        Dims dims;
        if (options.dims) {
            dims = *options.dims;
        } else if (options.like) {
            dims = load_volume(*options.like, VolumeKind::IntensityHU).dims();
            manifest.add_input(*options.like);
        } else {
            throw InputError("tile: one of --dim, --like or --mask is required");
        }
        manifest.parameters["dims"] = dims.n;
        plan = tile_windows(dims, options.window, options.stride);
        Json axes = Json::array();
        for (int a = 0; a < 3; ++a) axes.push_back(tile_axis(dims[a], options.window, options.stride));
        body = {{"mode", "grid"}, {"dims", dims.n}, {"stride", options.stride}, {"axis_origins", axes}};
    }
    const Json plan_json = to_json(plan);
    for (auto& [k, v] : plan_json.items()) body[k] = v;
    fs::create_directories(options.out);
    write_json(options.out / "window_plan.json", finish(body, manifest, start));
    log << "tile: " << plan.windows.size() << " windows\n";
    return kOk;
}

int cmd_fuse_check(const FuseCheckOptions& options, std::ostream& log) {
    const auto start = Clock::now();
    if (options.seeds <= 0) throw InputError("fuse-check: --seeds must be positive");
    fusion::GradCheckOptions check;
    check.tolerance = options.tolerance;
    check.pooling = options.pooling;

    Json seeds = Json::array();
    bool all = true;
    double worst_entry = 0.0, worst_dir = 0.0, worst_cons = 0.0;
    for (int s = 0; s < options.seeds; ++s) {
        const auto r = fusion::gradient_check(options.first_seed + static_cast<std::uint64_t>(s), check);
        all = all && r.passed;
        worst_entry = std::max(worst_entry, r.max_entry_error);
        worst_dir = std::max(worst_dir, r.max_directional_error);
        worst_cons = std::max(worst_cons, r.conservation_error);
        seeds.push_back(to_json(r));
    }

    RunManifest manifest{"fuse-check",
                         {{"seeds", options.seeds},
                          {"first_seed", options.first_seed},
                          {"tolerance", options.tolerance},
                          {"pooling", std::string(pooling_name(options.pooling))}}};
    const Json body{{"all_passed", all},
                    {"max_entry_error", worst_entry},
                    {"max_directional_error", worst_dir},
                    {"max_conservation_error", worst_cons},
                    {"results", seeds}};
    fs::create_directories(options.out);
    write_json(options.out / "fuse_check.json", finish(body, manifest, start));
    log << "fuse-check: " << options.seeds << " seeds, max relative error " << std::max(worst_entry, worst_dir)
        << (all ? " (pass)" : " (FAIL)") << "\n";
    return all ? kOk : kInternalError;
}

int guarded(const std::string& command, const fs::path& error_report, std::ostream& log,
            const std::function<int()>& body) {
    auto report = [&](int code, const std::string& scan, const std::string& fault) {
        log << command << ": " << (scan.empty() ? "" : "scan " + scan + ": ") << fault << "\n";
        if (error_report.empty()) return code;
        try {
            write_json(error_report, Json{{"status", "error"},
                                          {"command", command},
                                          {"tool_version", std::string(tool_version())},
                                          {"exit_code", code},
                                          {"scan", scan.empty() ? Json(nullptr) : Json(scan)},
                                          {"fault", fault}});
        } catch (const std::exception& e) {
            log << command << ": could not write error report: " << e.what() << "\n";
        }
        return code;
    };
    try {
        return body();
    } catch (const ScanFault& e) {
        return report(kInputFault, e.scan(), e.fault());
    } catch (const InputError& e) {
        return report(kInputFault, "", e.what());
    } catch (const fs::filesystem_error& e) {
        return report(kInputFault, "", e.what());
    } catch (const std::exception& e) {
        return report(kInternalError, "", std::string("internal error: ") + e.what());
    }
}

}  // namespace ribeval::cli
