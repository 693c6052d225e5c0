#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ribeval/detection.hpp"
#include "ribeval/pipeline.hpp"

using namespace ribeval;

namespace {

ScalarVolume hu_volume(std::initializer_list<float> values) {
    ScalarVolume v({{static_cast<Index>(values.size()), 1, 1}}, {1, 1, 1}, VolumeKind::IntensityHU);
    Index i = 0;
    for (float x : values) v[i++] = x;
    return v;
}

void fill_box(ScalarVolume& v, std::array<Index, 3> lo, std::array<Index, 3> size, float value) {
    for (Index z = lo[2]; z < lo[2] + size[2]; ++z)
        for (Index y = lo[1]; y < lo[1] + size[1]; ++y)
            for (Index x = lo[0]; x < lo[0] + size[0]; ++x) v(x, y, z) = value;
}

std::vector<int> coverage(const WindowPlan& plan, const Dims& dims) {
    std::vector<int> hits(static_cast<std::size_t>(dims.voxels()), 0);
    for (const auto& w : plan.windows) {
        for (int a = 0; a < 3; ++a) {
            REQUIRE(w.origin[static_cast<std::size_t>(a)] >= 0);
            REQUIRE(w.origin[static_cast<std::size_t>(a)] + w.extent[static_cast<std::size_t>(a)] <= dims[a]);
        }
        for (Index z = w.origin[2]; z < w.origin[2] + w.extent[2]; ++z)
            for (Index y = w.origin[1]; y < w.origin[1] + w.extent[1]; ++y)
                for (Index x = w.origin[0]; x < w.origin[0] + w.extent[0]; ++x)
                    ++hits[static_cast<std::size_t>(x + dims[0] * (y + dims[1] * z))];
    }
    return hits;
}

}  // namespace

TEST_SUITE("pipeline") {
    TEST_CASE("bone window normalization") {
        const ScalarVolume n = hu_window_normalize(hu_volume({-100, 450, 1000, -500, 3000}));
        CHECK(n[0] == doctest::Approx(-1.0).epsilon(1e-6));
        CHECK(std::abs(n[1]) <= 1e-6);
        CHECK(n[2] == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(n[3] == -1.0f);
        CHECK(n[4] == 1.0f);
        CHECK(n.kind() == VolumeKind::Normalized);
        CHECK_THROWS_AS(hu_window_normalize(n, 0.0, 0.0), InputError);

        ScalarVolume ramp({{400, 1, 1}}, {1, 1, 1}, VolumeKind::IntensityHU);
        for (Index i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<float>(-400 + 5 * i);
        const ScalarVolume r = hu_window_normalize(ramp);
        for (Index i = 1; i < r.size(); ++i) CHECK(r[i] >= r[i - 1]);
    }

    TEST_CASE("bone binarization boundary") {
        CHECK(bone_binarize(ScalarVolume({{3, 3, 3}}, {1, 1, 1}, VolumeKind::IntensityHU, 199.0f)).data().sum() == 0.0f);
        CHECK(bone_binarize(ScalarVolume({{3, 3, 3}}, {1, 1, 1}, VolumeKind::IntensityHU, 200.0f)).data().sum() == 27.0f);

        std::mt19937_64 rng(4);
        std::uniform_real_distribution<float> hu(-1000.0f, 1500.0f);
        ScalarVolume v({{10, 10, 10}}, {1, 1, 1}, VolumeKind::IntensityHU);
        for (Index i = 0; i < v.size(); ++i) v[i] = hu(rng);
        const ScalarVolume b = bone_binarize(v, 300.0);
        CHECK(b.kind() == VolumeKind::Binary);
        for (Index i = 0; i < v.size(); ++i) CHECK(b[i] == (v[i] >= 300.0f ? 1.0f : 0.0f));
    }

    TEST_CASE("sampling returns every voxel when foreground is small") {
        ScalarVolume b({{6, 5, 4}}, {0.5, 1.0, 2.0}, VolumeKind::Binary);
        std::mt19937_64 rng(1);
        std::set<Index> fg;
        while (fg.size() < 10) fg.insert(static_cast<Index>(rng() % 120));
        for (Index i : fg) b[i] = 1.0f;
        const PointCloud c = sample_points(b, 30000, 3);
        REQUIRE(c.coords.rows() == 10);
        std::set<Index> got;
        for (Index k = 0; k < 10; ++k) {
            const Index x = c.source_indices(k, 0), y = c.source_indices(k, 1), z = c.source_indices(k, 2);
            got.insert(b.linear(x, y, z));
            CHECK(c.coords(k, 0) == (x + 0.5) * 0.5);
            CHECK(c.coords(k, 1) == (y + 0.5) * 1.0);
            CHECK(c.coords(k, 2) == (z + 0.5) * 2.0);
        }
        CHECK(got == fg);
        CHECK_THROWS_AS(sample_points(ScalarVolume({{2, 2, 2}}, {1, 1, 1}, VolumeKind::Binary), 5, 0), InputError);
    }

    TEST_CASE("sampling is deterministic and stays on foreground") {
        std::mt19937_64 rng(6);
        const ScalarVolume b = oracle::random_binary(rng, {{20, 20, 20}}, 0.3);
        const PointCloud a = sample_points(b, 500, 42);
        const PointCloud c = sample_points(b, 500, 42);
        CHECK(a.coords == c.coords);
        CHECK(a.source_indices == c.source_indices);
        CHECK(a.coords.rows() == 500);
        std::set<Index> distinct;
        for (Index k = 0; k < 500; ++k) {
            const Index i = b.linear(a.source_indices(k, 0), a.source_indices(k, 1), a.source_indices(k, 2));
            CHECK(b[i] == 1.0f);
            distinct.insert(i);
        }
        CHECK(distinct.size() == 500);
        CHECK_FALSE(sample_points(b, 500, 43).source_indices == a.source_indices);
    }

    TEST_CASE("sampling inclusion frequencies are uniform") {
        // 10^5 foreground voxels, n = 1000, 500 seeds: inclusion count per voxel
        // is Binomial(500, 0.01).
        const Index n = 1000, seeds = 500;
        ScalarVolume b({{100, 100, 10}}, {1, 1, 1}, VolumeKind::Binary, 1.0f);
        const Index fg = b.size();
        std::vector<int> counts(static_cast<std::size_t>(fg), 0);
        for (Index s = 0; s < seeds; ++s) {
            const PointCloud c = sample_points(b, n, static_cast<std::uint64_t>(s));
            for (Index k = 0; k < n; ++k)
                ++counts[static_cast<std::size_t>(b.linear(c.source_indices(k, 0), c.source_indices(k, 1), c.source_indices(k, 2)))];
        }
        const double p = static_cast<double>(n) / static_cast<double>(fg);
        const double mu = static_cast<double>(seeds) * p;
        const double var = mu * (1.0 - p);

        // Blocks of 1000 voxels: count is a sum of per-seed hypergeometric draws.
        const Index block = 1000;
        const double block_mu = static_cast<double>(seeds * n * block) / static_cast<double>(fg);
        const double per_seed_var = static_cast<double>(n) * (static_cast<double>(block) / static_cast<double>(fg)) *
                                    (1.0 - static_cast<double>(block) / static_cast<double>(fg)) *
                                    static_cast<double>(fg - n) / static_cast<double>(fg - 1);
        const double block_sigma = std::sqrt(static_cast<double>(seeds) * per_seed_var);
        for (Index start = 0; start < fg; start += block) {
            double sum = 0.0;
            for (Index i = start; i < start + block; ++i) sum += counts[static_cast<std::size_t>(i)];
            REQUIRE(std::abs(sum - block_mu) <= 5.0 * block_sigma);
        }

        // Chi-square over voxels; per-term variance uses the binomial kurtosis.
        double chi2 = 0.0;
        int worst = 0;
        for (int c : counts) {
            chi2 += (c - mu) * (c - mu) / var;
            worst = std::max(worst, c);
        }
        const double kurtosis = 3.0 + (1.0 - 6.0 * p * (1.0 - p)) / var;
        const double chi2_sigma = std::sqrt(static_cast<double>(fg) * (kurtosis - 1.0));
        CHECK(std::abs(chi2 - static_cast<double>(fg)) <= 5.0 * chi2_sigma);
        // P(count > 26) * 10^5 < 1e-6 under Binomial(500, 0.01).
        CHECK(worst <= 26);
    }

    TEST_CASE("tiling per axis") {
        CHECK(tile_axis(300, 128, 96) == std::vector<Index>{0, 96, 172});
        CHECK(tile_axis(128, 128, 96) == std::vector<Index>{0});
        CHECK(tile_axis(100, 128, 96) == std::vector<Index>{0});
        CHECK(tile_axis(224, 128, 96) == std::vector<Index>{0, 96});
        CHECK(tile_axis(225, 128, 96) == std::vector<Index>{0, 96, 97});

        const WindowPlan plan = tile_windows({{300, 300, 300}});
        CHECK(plan.windows.size() == 27);
        const WindowPlan small = tile_windows({{100, 300, 128}});
        CHECK(small.windows.size() == 3);
        for (const auto& w : small.windows) {
            CHECK(w.extent[0] == 100);
            CHECK(w.clamped);
        }
    }

    TEST_CASE("tiling covers every voxel") {
        std::mt19937_64 rng(21);
        std::uniform_int_distribution<Index> dim(1, 60), win(1, 24);
        for (int n = 0; n < 60; ++n) {
            const Dims dims{{dim(rng), dim(rng), dim(rng)}};
            const Index w = win(rng);
            const Index stride = std::uniform_int_distribution<Index>(1, w)(rng);
            const auto hits = coverage(tile_windows(dims, w, stride), dims);
            REQUIRE(std::all_of(hits.begin(), hits.end(), [](int h) { return h > 0; }));
        }
    }

    TEST_CASE("mask cover") {
        ScalarVolume m({{64, 64, 64}}, {1, 1, 1}, VolumeKind::Binary);
        fill_box(m, {10, 10, 10}, {8, 8, 8}, 1.0f);
        CHECK(windows_from_mask(m, 16).windows.size() == 1);

        ScalarVolume two({{64, 64, 64}}, {1, 1, 1}, VolumeKind::Binary);
        two(1, 1, 1) = 1.0f;
        two(60, 60, 60) = 1.0f;
        CHECK(windows_from_mask(two, 16).windows.size() == 2);
        CHECK_THROWS_AS(windows_from_mask(ScalarVolume({{4, 4, 4}}, {1, 1, 1}, VolumeKind::Binary), 16), InputError);

        std::mt19937_64 rng(33);
        std::uniform_int_distribution<Index> dim(8, 40);
        for (int n = 0; n < 25; ++n) {
            const Dims dims{{dim(rng), dim(rng), dim(rng)}};
            const ScalarVolume mask = oracle::random_binary(rng, dims, 0.01);
            if (mask.data().sum() == 0.0f) continue;
            const WindowPlan plan = windows_from_mask(mask, 16);
            const auto hits = coverage(plan, dims);
            for (Index i = 0; i < mask.size(); ++i)
                if (mask[i] != 0.0f) REQUIRE(hits[static_cast<std::size_t>(i)] > 0);
            CHECK(static_cast<double>(plan.windows.size()) <= mask.data().sum());
        }
    }

    TEST_CASE("patch merge") {
        const Dims dims{{6, 4, 4}};
        Patch a{{0, 0, 0}, {4, 4, 4}, ScalarVolume::Array::Constant(64, 0.3f)};
        Patch b{{2, 0, 0}, {4, 4, 4}, ScalarVolume::Array::Constant(64, 0.7f)};
        const ScalarVolume ab = merge_patches({a, b}, dims);
        CHECK(ab(0, 0, 0) == 0.3f);
        CHECK(ab(3, 1, 1) == 0.7f);
        CHECK(merge_patches({a, a}, dims)(1, 1, 1) == 0.3f);
        CHECK(merge_patches({a}, dims)(5, 0, 0) == 0.0f);

        Patch oob{{4, 0, 0}, {4, 4, 4}, ScalarVolume::Array::Zero(64)};
        CHECK_THROWS_AS(merge_patches({oob}, dims), InputError);
        Patch short_values{{0, 0, 0}, {2, 2, 2}, ScalarVolume::Array::Zero(7)};
        CHECK_THROWS_AS(merge_patches({short_values}, dims), InputError);
    }

    TEST_CASE("patch merge equals per-voxel max and ignores order") {
        std::mt19937_64 rng(55);
        std::uniform_real_distribution<float> prob(0.0f, 1.0f);
        for (int n = 0; n < 40; ++n) {
            const Dims dims{{12, 10, 8}};
            std::vector<Patch> patches;
            const int k = std::uniform_int_distribution<int>(1, 6)(rng);
            for (int j = 0; j < k; ++j) {
                Patch p;
                for (int a = 0; a < 3; ++a) {
                    const auto ua = static_cast<std::size_t>(a);
                    p.extent[ua] = std::uniform_int_distribution<Index>(1, 6)(rng);
                    p.origin[ua] = std::uniform_int_distribution<Index>(0, dims[a] - p.extent[ua])(rng);
                }
                p.values.resize(p.extent[0] * p.extent[1] * p.extent[2]);
                for (Index i = 0; i < p.values.size(); ++i) p.values[i] = prob(rng);
                patches.push_back(p);
            }
            ScalarVolume want(dims, {1, 1, 1}, VolumeKind::Probability);
            for (Index z = 0; z < dims[2]; ++z)
                for (Index y = 0; y < dims[1]; ++y)
                    for (Index x = 0; x < dims[0]; ++x) {
                        float best = 0.0f;
                        for (const auto& p : patches) {
                            const Index lx = x - p.origin[0], ly = y - p.origin[1], lz = z - p.origin[2];
                            if (lx < 0 || ly < 0 || lz < 0 || lx >= p.extent[0] || ly >= p.extent[1] || lz >= p.extent[2])
                                continue;
                            best = std::max(best, p.values[lx + p.extent[0] * (ly + p.extent[1] * lz)]);
                        }
                        want(x, y, z) = best;
                    }
            const ScalarVolume got = merge_patches(patches, dims);
            REQUIRE(got == want);
            std::shuffle(patches.begin(), patches.end(), rng);
            REQUIRE(merge_patches(patches, dims) == got);
        }
    }

    TEST_CASE("proposal extraction") {
        ScalarVolume low({{10, 10, 10}}, {1, 1, 1}, VolumeKind::Probability, 0.05f);
        CHECK(extract_proposals(low).proposals.empty());

        ScalarVolume p({{30, 30, 30}}, {1, 1, 1}, VolumeKind::Probability);
        fill_box(p, {1, 1, 1}, {10, 10, 3}, 0.6f);    // 300 voxels
        fill_box(p, {15, 15, 15}, {10, 5, 3}, 0.9f);  // 150 voxels
        const ProposalSet s = extract_proposals(p);
        REQUIRE(s.proposals.size() == 1);
        CHECK(s.proposals[0].id == 1);
        CHECK(s.proposals[0].voxel_count == 300);
        CHECK(s.proposals[0].confidence == doctest::Approx(static_cast<double>(0.6f)).epsilon(1e-12));
        CHECK(s.labels(20, 16, 16) == 0);

        ProposalOptions keep_all;
        keep_all.min_voxels = 1;
        CHECK(extract_proposals(p, keep_all).proposals.size() == 2);

        ScalarVolume excl({{30, 30, 30}}, {1, 1, 1}, VolumeKind::Binary);
        fill_box(excl, {0, 0, 0}, {30, 30, 3}, 1.0f);  // leaves 100 voxels of the first blob
        CHECK(extract_proposals(p, {}, &excl).proposals.empty());
        CHECK_THROWS_AS(extract_proposals(p, {}, &low), InputError);
    }

    TEST_CASE("mean confidence over a graded blob") {
        ScalarVolume p({{20, 20, 1}}, {1, 1, 1}, VolumeKind::Probability);
        double sum = 0.0;
        for (Index y = 0; y < 20; ++y)
            for (Index x = 0; x < 20; ++x) {
                p(x, y, 0) = 0.1f + 0.002f * static_cast<float>(x + 20 * y) / 2.0f;
                sum += static_cast<double>(p(x, y, 0));
            }
        const ProposalSet s = extract_proposals(p);
        REQUIRE(s.proposals.size() == 1);
        CHECK(s.proposals[0].confidence == doctest::Approx(sum / 400.0).epsilon(1e-12));
    }

    TEST_CASE("GT indicator round-trips through extraction and matching") {
        std::mt19937_64 rng(8);
        for (int n = 0; n < 10; ++n) {
            ScalarVolume ind({{40, 40, 20}}, {1, 1, 1}, VolumeKind::Probability);
            LabelMap gt({{40, 40, 20}}, {1, 1, 1}, VolumeKind::InstanceLabel);
            // Non-touching boxes of at least 200 voxels in a row along x.
            Index x0 = 0;
            Label id = 0;
            while (x0 + 6 <= 40) {
                const Index w = std::uniform_int_distribution<Index>(4, 8)(rng);
                if (x0 + w > 40) break;
                ++id;
                for (Index z = 0; z < 10; ++z)
                    for (Index y = 0; y < 6; ++y)
                        for (Index x = x0; x < x0 + w; ++x) {
                            ind(x, y, z) = 1.0f;
                            gt(x, y, z) = id;
                        }
                x0 += w + 2;
            }
            const ProposalSet s = extract_proposals(ind);
            std::map<Label, double> conf;
            for (const auto& p : s.proposals) {
                CHECK(p.confidence == 1.0);
                conf[p.id] = p.confidence;
            }
            const MatchResult r = match_proposals(s.labels, conf, gt);
            CHECK(r.fp_count() == 0);
            CHECK(froc({r}).max_sensitivity == 1.0);
        }
    }

    TEST_CASE("confidences lie in [bin_threshold, 1]") {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<float> u(0.0f, 1.0f);
        for (int n = 0; n < 10; ++n) {
            ScalarVolume p({{16, 16, 16}}, {1, 1, 1}, VolumeKind::Probability);
            for (Index i = 0; i < p.size(); ++i) p[i] = u(rng) * u(rng);
            ProposalOptions o;
            o.bin_threshold = 0.3;
            o.min_voxels = 1;
            for (const auto& prop : extract_proposals(p, o).proposals) {
                CHECK(prop.confidence >= 0.3);
                CHECK(prop.confidence <= 1.0);
            }
        }
    }
}
