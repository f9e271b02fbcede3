#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "helpers.hpp"
#include "icut/cutstats.hpp"
#include "icut/datagen.hpp"

using namespace icut;

namespace {

RepresentedDataset two_points(Label a, Label b) {
    LabeledDataset ds;
    ds.features = Matrix(2, 1);
    ds.features(1, 0) = 1.0;
    ds.ids = {0, 1};
    ds.noisy_labels = {a, b};
    return compute_representation(ds, ReprKind::identity);
}

CutstatsConfig half_half(std::size_t k) {
    CutstatsConfig c;
    c.k = k;
    c.priors = std::vector<double>{0.5, 0.5};
    return c;
}

}  // namespace

TEST_CASE("single neighbour gives z = -1 on agreement and +1 on disagreement") {
    for (auto [b, want] : {std::pair{0, -1.0}, std::pair{1, 1.0}}) {
        const auto rep = two_points(0, b);
        const auto z = cutstats_scores(rep, build_neighbor_table(rep, 1), half_half(1));
        CHECK(z[0] == doctest::Approx(want));
        CHECK(z[1] == doctest::Approx(want));
    }
}

TEST_CASE("six-point instance matches the straight-line formulas") {
    auto ds = testutil::random_dataset(6, 2, 2, 17);
    ds.noisy_labels = {0, 1, 1, 0, 1, 0};
    const auto rep = compute_representation(ds, ReprKind::identity);
    auto cfg = half_half(2);
    const auto z = cutstats_scores(rep, build_neighbor_table(rep, 2), cfg);
    const auto want = oracle::cutstats(testutil::rows(ds.features), {0, 1, 1, 0, 1, 0}, ds.ids, {0.5, 0.5}, 2);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(z[i] - want[i]) <= 1e-9);

    cfg.priors.reset();  // empirical 1/2, 1/2 here as well
    const auto ze = cutstats_scores(rep, build_neighbor_table(rep, 2), cfg);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(ze[i] - want[i]) <= 1e-9);
}

TEST_CASE("parallel scores equal the serial reference") {
    auto ds = testutil::random_dataset(500, 4, 3, 8);
    const auto rep = compute_representation(ds, ReprKind::identity);
    CutstatsConfig cfg;
    cfg.k = 9;
    const auto table = build_neighbor_table(rep, cfg.k);
    CHECK(cutstats_scores(rep, table, cfg) == reference::cutstats_scores(rep, table, cfg));
}

TEST_CASE("priors at 0 or 1 are degenerate") {
    const auto rep = two_points(0, 1);
    CutstatsConfig cfg;
    cfg.k = 1;
    cfg.priors = std::vector<double>{1.0, 0.0};
    CHECK_THROWS_WITH_AS(cutstats_scores(rep, build_neighbor_table(rep, 1), cfg), doctest::Contains("degenerate prior"),
                         Error);
    cfg.priors = std::vector<double>{0.5, 0.6};
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("flipping an agreeing neighbour raises z") {
    auto ds = testutil::random_dataset(40, 3, 2, 21);
    for (auto& y : ds.noisy_labels) y = 0;
    auto rep = compute_representation(ds, ReprKind::identity);
    auto cfg = half_half(5);
    const auto table = build_neighbor_table(rep, 5);
    const auto before = cutstats_scores(rep, table, cfg);
    const std::size_t victim = table.neighbors(0)[2];
    rep.base.noisy_labels[victim] = 1;
    const auto after = cutstats_scores(rep, table, cfg);
    CHECK(after[0] > before[0]);
}

TEST_CASE("selection keeps the smallest scores with id tie-breaks") {
    const std::vector<double> z{1.0, -1.0, 1.0, -1.0};
    const std::vector<SampleId> ids{0, 1, 2, 3};
    CHECK(select_smallest(z, 0.5, ids).selected == std::vector<SampleId>{1, 3});
    CHECK(select_smallest(z, 1.0, ids).selected.size() == 4);
    CHECK(select_smallest(std::vector<double>{0, 0, 0}, 0.34, std::vector<SampleId>{9, 4, 6}).selected ==
          std::vector<SampleId>{4});
    CHECK_THROWS_AS(select_smallest(z, 0.0, ids), Error);
    CHECK_THROWS_AS(select_smallest(std::vector<double>{0.0, NAN}, 0.5, std::vector<SampleId>{0, 1}), Error);
}

TEST_CASE("clean labels give a perfectly clean subset") {
    auto spec = SyntheticSpec::defaults(Group::permutation);
    spec.n_train = 1000;
    spec.n_test = 1;
    const auto ds = generate_synthetic(spec).train;
    CutstatsConfig cfg;
    const auto sel = run_cutstats(compute_representation(ds, ReprKind::sort), cfg);
    CHECK(sel.selected.size() == 400);
    CHECK(subset_accuracy(sel, ds) == 1.0);
}

TEST_CASE("l2norm ranking ignores a global rotation of the features") {
    auto spec = SyntheticSpec::defaults(Group::orthogonal);
    spec.d = 10;
    spec.n_train = 600;
    spec.n_test = 1;
    auto ds = inject_label_noise(generate_synthetic(spec).train, {0.3, 2, 4});
    auto rotated = ds;
    auto rng = make_stream(77, StreamTag::group_action);
    const auto q = haar_rotation(spec.d, rng);
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t r = 0; r < spec.d; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < spec.d; ++c) acc += q(r, c) * ds.features(i, c);
            rotated.features(i, r) = acc;
        }
    // Rotations change norms only at rounding level; quantising the
    // representation removes that and leaves the weights untouched.
    auto quantised = [](RepresentedDataset rep) {
        for (double& v : rep.representations.flat()) v = std::round(v * 1e9) / 1e9;
        return rep;
    };
    CutstatsConfig cfg;
    const auto a = run_cutstats(quantised(compute_representation(ds, ReprKind::l2norm)), cfg);
    const auto b = run_cutstats(quantised(compute_representation(rotated, ReprKind::l2norm)), cfg);
    CHECK(a.selected == b.selected);
}
