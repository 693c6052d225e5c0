#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ribeval/commands.hpp"
#include "ribeval/report.hpp"

namespace cli = ribeval::cli;

namespace {

int default_jobs() {
    if (const char* env = std::getenv("RIBEVAL_JOBS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            std::cerr << "ignoring invalid RIBEVAL_JOBS=" << env << "\n";
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void add_eval_flags(CLI::App* sub, cli::EvalOptions& o, int& connectivity, bool classify) {
    sub->add_option("pred_dir", o.pred_dir, "Directory of <scan>_pred.* files")->required();
    sub->add_option("gt_dir", o.gt_dir, "Directory of <scan>_gt.* files")->required();
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--iou-threshold", o.iou_threshold, "IoU needed for a detection hit")->capture_default_str();
    sub->add_option("--fp-levels", o.fp_levels, "Average-FP-per-scan levels")->delimiter(',')->capture_default_str();
    sub->add_option("--connectivity", connectivity, "Connectivity recorded in the report (6 or 26)")
        ->check(CLI::IsMember({6, 26}))
        ->capture_default_str();
    sub->add_option("--jobs", o.jobs, "Worker threads (default: RIBEVAL_JOBS or core count)");
    if (classify)
        sub->add_option("--conf-threshold", o.conf_threshold, "Drop proposals below this confidence")
            ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rib-fracture detection/classification evaluation and inference post-processing"};
    app.set_version_flag("--version", std::string(ribeval::tool_version()));
    app.require_subcommand(1);

    cli::EvalOptions det, cls;
    det.jobs = cls.jobs = default_jobs();
    int det_conn = 26, cls_conn = 26;
    auto* eval_det = app.add_subcommand("eval-det", "Detection track: FROC, max sensitivity, avg FP, IoU/Dice");
    add_eval_flags(eval_det, det, det_conn, false);
    auto* eval_cls = app.add_subcommand("eval-cls", "Classification track: 5x6 confusion matrix and macro-F1");
    add_eval_flags(eval_cls, cls, cls_conn, true);

    cli::PipelineOptions pipe;
    std::string exclusion;
    int pipe_conn = 26;
    auto* pipeline = app.add_subcommand("pipeline", "Turn a probability volume into scored proposals");
    pipeline->add_option("probability", pipe.probability, "Probability volume (.nii/.nii.gz or raw)")->required();
    pipeline->add_option("--out", pipe.out, "Output directory")->required();
    pipeline->add_option("--name", pipe.name, "Output file stem")->capture_default_str();
    pipeline->add_option("--bin-threshold", pipe.proposal.bin_threshold)->capture_default_str();
    pipeline->add_option("--min-voxels", pipe.proposal.min_voxels)->capture_default_str();
    pipeline->add_option("--exclusion", exclusion, "Binary mask of voxels to discard (e.g. spine)");
    pipeline->add_option("--connectivity", pipe_conn)->check(CLI::IsMember({6, 26}))->capture_default_str();

    cli::PointsOptions pts;
    std::string roi;
    auto* points = app.add_subcommand("points", "Sample a bone point cloud from a HU volume");
    points->add_option("volume", pts.volume, "HU volume")->required();
    points->add_option("--out", pts.out, "Output directory")->required();
    points->add_option("--threshold-hu", pts.threshold_hu)->capture_default_str();
    points->add_option("-n,--count", pts.count)->capture_default_str();
    points->add_option("--seed", pts.seed)->capture_default_str();
    points->add_option("--roi", roi, "Binary region-of-interest mask (e.g. rib segmentation)");
    points->add_option("--roi-dilate", pts.roi_dilation, "Box dilation radius applied to --roi")->capture_default_str();

    cli::TileOptions tile;
    std::vector<ribeval::Index> dim;
    std::string like, mask;
    auto* tiles = app.add_subcommand("tile", "Plan sliding windows over a volume or a mask");
    tiles->add_option("--dim", dim, "Volume dims: one value (cube) or three")->expected(1, 3);
    tiles->add_option("--like", like, "Take dims from this volume");
    tiles->add_option("--mask", mask, "Cover this binary mask greedily instead of a grid");
    tiles->add_option("--window", tile.window)->capture_default_str();
    tiles->add_option("--stride", tile.stride)->capture_default_str();
    tiles->add_option("--out", tile.out, "Output directory")->required();

    cli::FuseCheckOptions fc;
    std::string pooling = "average";
    auto* fuse = app.add_subcommand("fuse-check", "Finite-difference check of the point-voxel fusion kernel");
    fuse->add_option("--seeds", fc.seeds)->capture_default_str();
    fuse->add_option("--seed", fc.first_seed, "First seed")->capture_default_str();
    fuse->add_option("--tolerance", fc.tolerance)->capture_default_str();
    fuse->add_option("--pooling", pooling)->check(CLI::IsMember({"average", "max"}))->capture_default_str();
    fuse->add_option("--out", fc.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kInputFault;
    }

    auto& log = std::cerr;
    if (eval_det->parsed()) {
        return cli::guarded("eval-det", det.out / "detection_report.json", log, [&] {
            det.connectivity = ribeval::connectivity_from_int(det_conn);
            return cli::cmd_eval_det(det, log);
        });
    }
    if (eval_cls->parsed()) {
        return cli::guarded("eval-cls", cls.out / "classification_report.json", log, [&] {
            cls.connectivity = ribeval::connectivity_from_int(cls_conn);
            return cli::cmd_eval_cls(cls, log);
        });
    }
    if (pipeline->parsed()) {
        return cli::guarded("pipeline", pipe.out / (pipe.name + "_report.json"), log, [&] {
            pipe.proposal.connectivity = ribeval::connectivity_from_int(pipe_conn);
            if (!exclusion.empty()) pipe.exclusion = exclusion;
            return cli::cmd_pipeline(pipe, log);
        });
    }
    if (points->parsed()) {
        return cli::guarded("points", pts.out / "points_report.json", log, [&] {
            if (!roi.empty()) pts.roi = roi;
            return cli::cmd_points(pts, log);
        });
    }
    if (tiles->parsed()) {
        return cli::guarded("tile", tile.out / "window_plan.json", log, [&] {
            if (!dim.empty()) {
                if (dim.size() == 2) throw ribeval::InputError("tile: --dim takes one or three values");
                ribeval::Dims d;
                for (int a = 0; a < 3; ++a) d[a] = dim.size() == 1 ? dim[0] : dim[static_cast<std::size_t>(a)];
                tile.dims = d;
            }
            if (!like.empty()) tile.like = like;
            if (!mask.empty()) tile.mask = mask;
            return cli::cmd_tile(tile, log);
        });
    }
    if (fuse->parsed()) {
        return cli::guarded("fuse-check", fc.out / "fuse_check.json", log, [&] {
            fc.pooling = pooling == "max" ? ribeval::fusion::Pooling::Max : ribeval::fusion::Pooling::Average;
            return cli::cmd_fuse_check(fc, log);
        });
    }
    return cli::kInternalError;
}
