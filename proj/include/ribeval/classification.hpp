#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string_view>

#include <Eigen/Core>

#include "ribeval/detection.hpp"
#include "ribeval/io.hpp"

namespace ribeval {

// Rows: predicted BK, ND, DP, SG, then FN (missed GT).
// Columns: target BK, ND, DP, SG, then FP (spurious proposal), UN (ignored).
inline constexpr int kFnRow = 4;
inline constexpr int kFpCol = 4;
inline constexpr int kUnCol = 5;
inline constexpr int kScoredClasses = 4;

inline constexpr std::array<std::string_view, 5> kRowNames{"BK", "ND", "DP", "SG", "FN"};
inline constexpr std::array<std::string_view, 6> kColNames{"BK", "ND", "DP", "SG", "FP", "UN"};

using ConfusionCounts = Eigen::Matrix<std::int64_t, 5, 6, Eigen::RowMajor>;

struct ConfusionMatrix {
    ConfusionCounts counts = ConfusionCounts::Zero();

    ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
        counts += other.counts;
        return *this;
    }
    std::int64_t total() const { return counts.sum(); }
    friend bool operator==(const ConfusionMatrix& a, const ConfusionMatrix& b) { return a.counts == b.counts; }
};

ConfusionMatrix build_confusion(const MatchResult& match, const std::map<Label, FractureClass>& pred_classes,
                                const std::map<Label, FractureClass>& gt_classes, double conf_threshold = 0.0);

enum class F1Mode { Overall, TargetAware, PredictionAware };

std::string_view to_string(F1Mode mode);

struct F1Scores {
    std::array<double, kScoredClasses> per_class{};
    double macro = 0.0;
};

/// Macro-F1 over BK/ND/DP/SG. The UN column never counts; TargetAware drops
/// the FP column and PredictionAware additionally drops the FN row. A 0/0
/// precision, recall or F1 is 0.
F1Scores f1_scores(const ConfusionMatrix& matrix, F1Mode mode);

}  // namespace ribeval
