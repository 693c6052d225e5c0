#include <doctest.h>

#include <numeric>
#include <random>

#include "oracles.hpp"
#include "ribeval/classification.hpp"

using namespace ribeval;

namespace {

LabelMap strip(Index n) { return LabelMap({{n, 1, 1}}, {1, 1, 1}, VolumeKind::InstanceLabel); }

void paint(LabelMap& m, Index from, Index to, Label id) {
    for (Index x = from; x <= to; ++x) m(x, 0, 0) = id;
}

ConfusionMatrix random_matrix(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> cell(0, 6);
    std::bernoulli_distribution sparse(0.4);
    ConfusionMatrix m;
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 6; ++c) {
            if (r == kFnRow && c == kFpCol) continue;
            m.counts(r, c) = sparse(rng) ? 0 : cell(rng);
        }
    return m;
}

FractureClass random_class(std::mt19937_64& rng, bool allow_un) {
    return static_cast<FractureClass>(std::uniform_int_distribution<int>(0, allow_un ? 4 : 3)(rng));
}

}  // namespace

TEST_SUITE("classification") {
    TEST_CASE("hand-built matrices") {
        LabelMap gt = strip(10), pred = strip(10);
        paint(gt, 0, 3, 1);
        paint(pred, 0, 1, 1);  // conf 0.9, ND
        paint(pred, 2, 3, 2);  // conf 0.8, DP
        paint(pred, 7, 8, 3);  // FP, conf 0.5, SG
        const MatchResult r = match_proposals(pred, {{1, 0.9}, {2, 0.8}, {3, 0.5}}, gt);
        const std::map<Label, FractureClass> pc{{1, FractureClass::ND}, {2, FractureClass::DP}, {3, FractureClass::SG}};
        const ConfusionMatrix m = build_confusion(r, pc, {{1, FractureClass::DP}});
        CHECK(m.counts(1, 2) == 1);
        CHECK(m.counts(3, kFpCol) == 1);
        CHECK(m.total() == 2);

        // Threshold 0.85 keeps only proposal 1; the FP drops out.
        const ConfusionMatrix t = build_confusion(r, pc, {{1, FractureClass::DP}}, 0.85);
        CHECK(t.counts(1, 2) == 1);
        CHECK(t.total() == 1);
        // Above every confidence the GT is missed.
        const ConfusionMatrix all = build_confusion(r, pc, {{1, FractureClass::DP}}, 0.95);
        CHECK(all.counts(kFnRow, 2) == 1);
        CHECK(all.total() == 1);
    }

    TEST_CASE("tie on confidence goes to the smaller proposal id") {
        LabelMap gt = strip(6), pred = strip(6);
        paint(gt, 0, 3, 1);
        paint(pred, 0, 1, 4);
        paint(pred, 2, 3, 2);
        const MatchResult r = match_proposals(pred, {{2, 0.7}, {4, 0.7}}, gt);
        const ConfusionMatrix m =
            build_confusion(r, {{2, FractureClass::SG}, {4, FractureClass::BK}}, {{1, FractureClass::BK}});
        CHECK(m.counts(3, 0) == 1);
    }

    TEST_CASE("errors") {
        LabelMap gt = strip(4), pred = strip(4);
        paint(gt, 0, 1, 1);
        paint(pred, 0, 1, 1);
        const MatchResult r = match_proposals(pred, {{1, 0.5}}, gt);
        CHECK_THROWS_AS(build_confusion(r, {{1, FractureClass::UN}}, {{1, FractureClass::BK}}), InputError);
        CHECK_THROWS_AS(build_confusion(r, {}, {{1, FractureClass::BK}}), InputError);
        CHECK_THROWS_AS(build_confusion(r, {{1, FractureClass::BK}}, {}), InputError);
    }

    TEST_CASE("diagonal matrix scores one") {
        ConfusionMatrix m;
        for (int c = 0; c < 4; ++c) m.counts(c, c) = c + 1;
        for (const auto mode : {F1Mode::Overall, F1Mode::TargetAware, F1Mode::PredictionAware}) {
            const F1Scores s = f1_scores(m, mode);
            for (double f : s.per_class) CHECK(f == 1.0);
            CHECK(s.macro == 1.0);
        }
    }

    TEST_CASE("absent class scores zero and is averaged in") {
        ConfusionMatrix m;
        for (int c = 1; c < 4; ++c) m.counts(c, c) = 5;
        const F1Scores s = f1_scores(m, F1Mode::Overall);
        CHECK(s.per_class[0] == 0.0);
        CHECK(s.macro == 0.75);
    }

    TEST_CASE("UN column never counts") {
        ConfusionMatrix m;
        for (int c = 0; c < 4; ++c) m.counts(c, c) = 2;
        m.counts(1, kUnCol) = 9;
        m.counts(kFnRow, kUnCol) = 4;
        for (const auto mode : {F1Mode::Overall, F1Mode::TargetAware, F1Mode::PredictionAware})
            CHECK(f1_scores(m, mode).macro == 1.0);
    }

    TEST_CASE("modes drop the FP column and FN row") {
        ConfusionMatrix m;
        m.counts(0, 0) = 4;
        m.counts(0, kFpCol) = 4;   // halves BK precision overall
        m.counts(kFnRow, 1) = 2;   // ND never detected
        m.counts(1, 1) = 2;
        const F1Scores o = f1_scores(m, F1Mode::Overall);
        const F1Scores t = f1_scores(m, F1Mode::TargetAware);
        const F1Scores p = f1_scores(m, F1Mode::PredictionAware);
        CHECK(o.per_class[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(t.per_class[0] == 1.0);
        CHECK(t.per_class[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(p.per_class[1] == 1.0);
    }

    TEST_CASE("F1 equals the per-class counting oracle") {
        std::mt19937_64 rng(515);
        for (int n = 0; n < 300; ++n) {
            const ConfusionMatrix m = random_matrix(rng);
            for (const auto mode : {F1Mode::Overall, F1Mode::TargetAware, F1Mode::PredictionAware}) {
                const F1Scores s = f1_scores(m, mode);
                const auto want = oracle::brute_f1(m, mode);
                for (std::size_t c = 0; c < 4; ++c) REQUIRE(std::abs(s.per_class[c] - want[c]) <= 1e-12);
                REQUIRE(std::abs(s.macro - want[4]) <= 1e-12);
            }
        }
    }

    TEST_CASE("class permutation permutes per-class scores") {
        std::mt19937_64 rng(99);
        for (int n = 0; n < 50; ++n) {
            const ConfusionMatrix m = random_matrix(rng);
            std::array<int, 4> perm{0, 1, 2, 3};
            std::shuffle(perm.begin(), perm.end(), rng);
            ConfusionMatrix q;
            auto row = [&](int r) { return r < 4 ? perm[static_cast<std::size_t>(r)] : r; };
            for (int r = 0; r < 5; ++r)
                for (int c = 0; c < 6; ++c) q.counts(row(r), row(c)) = m.counts(r, c);
            for (const auto mode : {F1Mode::Overall, F1Mode::TargetAware, F1Mode::PredictionAware}) {
                const F1Scores a = f1_scores(m, mode), b = f1_scores(q, mode);
                for (std::size_t c = 0; c < 4; ++c) CHECK(b.per_class[static_cast<std::size_t>(perm[c])] == a.per_class[c]);
                CHECK(b.macro == doctest::Approx(a.macro).epsilon(1e-15));
            }
        }
    }

    TEST_CASE("matrix invariants on random scenes") {
        std::mt19937_64 rng(31);
        for (int n = 0; n < 100; ++n) {
            const oracle::Scene s = oracle::random_scene(rng);
            const MatchResult r = match_proposals(s.pred, s.confidences, s.gt);
            std::map<Label, FractureClass> pc, gc;
            for (const auto& [p, c] : s.confidences) pc[p] = random_class(rng, false);
            std::array<std::int64_t, 5> per_class{};
            for (Label g : r.gt_ids) {
                gc[g] = random_class(rng, true);
                ++per_class[static_cast<std::size_t>(gc[g])];
            }
            const double thr = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            const ConfusionMatrix m = build_confusion(r, pc, gc, thr);
            std::int64_t counted_fp = 0;
            for (const auto& p : r.proposals) counted_fp += !p.is_hit() && p.confidence >= thr;
            CHECK(m.total() == static_cast<std::int64_t>(r.gt_ids.size()) + counted_fp);
            CHECK(m.counts(kFnRow, kFpCol) == 0);
            CHECK(m.counts.col(kFpCol).sum() == counted_fp);
            for (int c = 0; c < 4; ++c) CHECK(m.counts.col(c).sum() == per_class[static_cast<std::size_t>(c)]);
            CHECK(m.counts.col(kUnCol).sum() == per_class[4]);
        }
    }

    TEST_CASE("self-evaluation excludes UN and scores one") {
        std::mt19937_64 rng(12);
        ConfusionMatrix total;
        std::array<bool, 4> seen{};
        for (int n = 0; n < 40; ++n) {
            const oracle::Scene s = oracle::random_scene(rng);
            std::map<Label, double> conf;
            std::map<Label, FractureClass> gc, pc;
            for (Label g : oracle::ids_of(s.gt)) {
                conf[g] = 1.0;
                gc[g] = random_class(rng, true);
                // A UN target still needs a concrete predicted class.
                pc[g] = gc[g] == FractureClass::UN ? FractureClass::BK : gc[g];
                if (gc[g] != FractureClass::UN) seen[static_cast<std::size_t>(gc[g])] = true;
            }
            total += build_confusion(match_proposals(s.gt, conf, s.gt), pc, gc);
        }
        REQUIRE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
        CHECK(total.counts.col(kUnCol).sum() > 0);
        for (const auto mode : {F1Mode::Overall, F1Mode::TargetAware, F1Mode::PredictionAware})
            CHECK(f1_scores(total, mode).macro == 1.0);
    }
}
