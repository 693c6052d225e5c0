#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ribeval/detection.hpp"
#include "ribeval/fusion.hpp"
#include "ribeval/labeling.hpp"
#include "ribeval/pipeline.hpp"

namespace ribeval::cli {

enum ExitCode : int { kOk = 0, kInternalError = 1, kInputFault = 2 };

/// InputError tied to one scan.
class ScanFault : public InputError {
public:
    ScanFault(std::string scan, const std::string& fault);
    const std::string& scan() const { return scan_; }
    const std::string& fault() const { return fault_; }

private:
    std::string scan_;
    std::string fault_;
};

struct ScanFiles {
    std::string scan;
    std::filesystem::path pred_volume, pred_csv, gt_volume, gt_csv;
};

/// Pairs `<scan>_pred.*` in pred_dir with `<scan>_gt.*` in gt_dir; sorted by scan.
std::vector<ScanFiles> discover_scans(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir);

struct EvalOptions {
    std::filesystem::path pred_dir;
    std::filesystem::path gt_dir;
    std::filesystem::path out;
    double iou_threshold = kDefaultHitIou;
    std::vector<double> fp_levels = kDefaultFpLevels;
    Connectivity connectivity = Connectivity::Full26;
    double conf_threshold = 0.0;  // classification only
    int jobs = 1;
};

int cmd_eval_det(const EvalOptions& options, std::ostream& log);
int cmd_eval_cls(const EvalOptions& options, std::ostream& log);

struct PipelineOptions {
    std::filesystem::path probability;
    std::optional<std::filesystem::path> exclusion;
    std::filesystem::path out;
    std::string name = "proposals";
    ProposalOptions proposal;
};

int cmd_pipeline(const PipelineOptions& options, std::ostream& log);

struct PointsOptions {
    std::filesystem::path volume;  // HU intensities
    std::optional<std::filesystem::path> roi;
    int roi_dilation = 0;
    std::filesystem::path out;
    double threshold_hu = kBoneThresholdHu;
    Index count = kDefaultPointCount;
    std::uint64_t seed = 0;
};

int cmd_points(const PointsOptions& options, std::ostream& log);

struct TileOptions {
    std::optional<Dims> dims;
    std::optional<std::filesystem::path> like;  // take dims from a volume
    std::optional<std::filesystem::path> mask;  // greedy mask cover instead of a grid
    Index window = kDefaultWindow;
    Index stride = kDefaultStride;
    std::filesystem::path out;
};

int cmd_tile(const TileOptions& options, std::ostream& log);

struct FuseCheckOptions {
    int seeds = 50;
    std::uint64_t first_seed = 0;
    double tolerance = 1e-5;
    fusion::Pooling pooling = fusion::Pooling::Average;
    std::filesystem::path out;
};

int cmd_fuse_check(const FuseCheckOptions& options, std::ostream& log);

/// Runs `body`, mapping InputError to exit 2 and anything else to exit 1. On a
/// fault an error report is written to `error_report` (when non-empty).
int guarded(const std::string& command, const std::filesystem::path& error_report, std::ostream& log,
            const std::function<int()>& body);

}  // namespace ribeval::cli
