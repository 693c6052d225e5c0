#include "ribeval/classification.hpp"

namespace ribeval {

namespace {

int index_of(FractureClass c) {
    switch (c) {
        case FractureClass::BK: return 0;
        case FractureClass::ND: return 1;
        case FractureClass::DP: return 2;
        case FractureClass::SG: return 3;
        case FractureClass::UN: return kUnCol;
    }
    return -1;
}

int predicted_row(const std::map<Label, FractureClass>& pred_classes, Label pid, const std::string& scan) {
    const auto it = pred_classes.find(pid);
    if (it == pred_classes.end())
        throw InputError("build_confusion: proposal " + std::to_string(pid) + " has no class" +
                         (scan.empty() ? "" : " in scan " + scan));
    if (it->second == FractureClass::UN)
        throw InputError("build_confusion: proposal " + std::to_string(pid) + " is classified UN" +
                         (scan.empty() ? "" : " in scan " + scan));
    return index_of(it->second);
}

}  // namespace

ConfusionMatrix build_confusion(const MatchResult& match, const std::map<Label, FractureClass>& pred_classes,
                                const std::map<Label, FractureClass>& gt_classes, double conf_threshold) {
    ConfusionMatrix m;
    std::map<Label, const ProposalRecord*> best_hit;
    for (const auto& p : match.proposals) {
        const int row = predicted_row(pred_classes, p.proposal_id, match.scan_id);
        if (p.confidence < conf_threshold) continue;
        if (!p.is_hit()) {
            ++m.counts(row, kFpCol);
            continue;
        }
        // Proposals are in ascending id order, so a strict comparison keeps the smaller id on ties.
        auto [it, fresh] = best_hit.try_emplace(*p.matched_gt_id, &p);
        if (!fresh && p.confidence > it->second->confidence) it->second = &p;
    }
    for (const Label gid : match.gt_ids) {
        const auto cls = gt_classes.find(gid);
        if (cls == gt_classes.end())
            throw InputError("build_confusion: ground-truth instance " + std::to_string(gid) + " has no class" +
                             (match.scan_id.empty() ? "" : " in scan " + match.scan_id));
        const int col = index_of(cls->second);
        const auto hit = best_hit.find(gid);
        const int row = hit == best_hit.end() ? kFnRow : predicted_row(pred_classes, hit->second->proposal_id, match.scan_id);
        ++m.counts(row, col);
    }
    return m;
}

std::string_view to_string(F1Mode mode) {
    switch (mode) {
        case F1Mode::Overall: return "overall";
        case F1Mode::TargetAware: return "target_aware";
        case F1Mode::PredictionAware: return "prediction_aware";
    }
    return "?";
}

F1Scores f1_scores(const ConfusionMatrix& matrix, F1Mode mode) {
    const int rows = mode == F1Mode::PredictionAware ? kScoredClasses : kFnRow + 1;
    const int cols = mode == F1Mode::Overall ? kFpCol + 1 : kScoredClasses;
    const Eigen::MatrixXd effective = matrix.counts.topLeftCorner(rows, cols).cast<double>();
    const Eigen::VectorXd row_sums = effective.rowwise().sum();
    const Eigen::RowVectorXd col_sums = effective.colwise().sum();

    auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
    F1Scores out;
    for (int c = 0; c < kScoredClasses; ++c) {
        const double tp = effective(c, c);
        const double precision = ratio(tp, row_sums[c]);
        const double recall = ratio(tp, col_sums[c]);
        out.per_class[static_cast<std::size_t>(c)] = ratio(2.0 * precision * recall, precision + recall);
    }
    double sum = 0.0;
    for (double f : out.per_class) sum += f;
    out.macro = sum / kScoredClasses;
    return out;
}

}  // namespace ribeval
