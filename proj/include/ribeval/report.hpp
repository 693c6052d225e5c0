#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ribeval/classification.hpp"
#include "ribeval/detection.hpp"
#include "ribeval/gradcheck.hpp"
#include "ribeval/labeling.hpp"
#include "ribeval/pipeline.hpp"

namespace ribeval {

using Json = nlohmann::ordered_json;

std::string_view tool_version();

/// Shortest round-trip decimal form of `v` ("0.5", "1", "2").
std::string format_number(double v);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
    RunManifest() = default;
    RunManifest(std::string cmd, Json params) : command(std::move(cmd)), parameters(std::move(params)) {}

    std::string command;
    Json parameters = Json::object();
    std::map<std::string, std::string> input_digests;  // path -> sha256
    double duration_seconds = 0.0;

    void add_input(const std::filesystem::path& path);
    Json to_json() const;
};

Json to_json(const MatchResult& result);
Json to_json(const FrocCurve& curve);
Json to_json(const ConfusionMatrix& matrix);
Json to_json(const F1Scores& scores);
Json to_json(const WindowPlan& plan);
Json to_json(const fusion::GradCheckResult& result);

struct DetectionReportSettings {
    double iou_threshold = kDefaultHitIou;
    Connectivity connectivity = Connectivity::Full26;
    std::vector<double> fp_levels = kDefaultFpLevels;
};

/// Full detection-track report. Results must be in canonical (sorted scan) order.
Json detection_report(const std::vector<MatchResult>& results, const DetectionReportSettings& settings);

struct ClassificationReportSettings {
    DetectionReportSettings detection;
    double conf_threshold = 0.0;
};

Json classification_report(const std::vector<MatchResult>& results, const std::vector<ConfusionMatrix>& per_scan,
                           const ClassificationReportSettings& settings);

/// {dims, proposal_count, proposals[{instance_id, confidence, voxel_count}]}
Json proposal_report(const ProposalSet& set);

/// `avg_fp,sensitivity` rows, one per operating point.
std::string froc_csv(const FrocCurve& curve);

}  // namespace ribeval
