#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "helpers.hpp"
#include "icut/mlp.hpp"
#include "icut/parallel.hpp"

using namespace icut;

namespace {

Mlp random_model(std::size_t d, std::size_t h, int c, std::uint64_t seed) {
    Mlp m(d, h, c);
    auto p = m.parameters();
    auto rng = make_stream(seed, StreamTag::init);
    for (double& v : p) v = uniform(rng, -0.8, 0.8);
    m.set_parameters(p);
    return m;
}

// Worst relative error of the analytic gradient against central differences.
double gradient_error(const Mlp& model, const LabeledDataset& ds) {
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<double> grad;
    loss_and_gradient(model, ds.features, ds.noisy_labels, rows, &grad);
    auto p = model.parameters();
    Mlp probe = model;
    double worst = 0.0;
    const double h = 1e-5;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        probe.set_parameters(p);
        const double up = loss_and_gradient(probe, ds.features, ds.noisy_labels, rows, nullptr);
        p[i] = keep - h;
        probe.set_parameters(p);
        const double down = loss_and_gradient(probe, ds.features, ds.noisy_labels, rows, nullptr);
        p[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-6});
        worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
    }
    return worst;
}

}  // namespace

TEST_CASE("analytic gradient matches central differences") {
    const auto bin = testutil::random_dataset(30, 4, 2, 1);
    CHECK(gradient_error(random_model(4, 6, 2, 2), bin) <= 1e-4);
    const auto multi = testutil::random_dataset(30, 4, 4, 3);
    CHECK(gradient_error(random_model(4, 5, 4, 4), multi) <= 1e-4);
}

TEST_CASE("chunked gradient equals the serial reference for any worker count") {
    const auto ds = testutil::random_dataset(700, 5, 3, 9);
    const auto model = random_model(5, 8, 3, 10);
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<double> g1, g3, gr;
    const int before = max_threads();
    set_threads(1);
    const double l1 = loss_and_gradient(model, ds.features, ds.noisy_labels, rows, &g1);
    set_threads(3);
    const double l3 = loss_and_gradient(model, ds.features, ds.noisy_labels, rows, &g3);
    set_threads(before);
    CHECK(l1 == l3);
    CHECK(g1 == g3);
    const double lr = reference::loss_and_gradient(model, ds.features, ds.noisy_labels, rows, &gr);
    CHECK(lr == doctest::Approx(l1).epsilon(1e-12));
    for (std::size_t i = 0; i < gr.size(); ++i) CHECK(gr[i] == doctest::Approx(g1[i]).epsilon(1e-10));
}

TEST_CASE("probabilities are normalised") {
    const auto model = random_model(3, 4, 5, 6);
    const std::vector<double> x{0.2, -0.1, 0.9};
    const auto p = model.predict_proba(x);
    CHECK(p.size() == 5);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
    const auto b = random_model(3, 4, 2, 6).predict_proba(x);
    CHECK(b.size() == 2);
    CHECK(b[0] + b[1] == doctest::Approx(1.0));
}

TEST_CASE("training fits a separable problem and is reproducible") {
    auto ds = testutil::random_dataset(800, 2, 2, 12);
    for (std::size_t i = 0; i < ds.size(); ++i) ds.noisy_labels[i] = ds.features(i, 0) + ds.features(i, 1) > 0 ? 1 : 0;
    ds.true_labels = ds.noisy_labels;
    MlpConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 64;
    const auto a = train_mlp(ds, cfg);
    CHECK(a.epoch_loss.back() < a.epoch_loss.front());
    CHECK(evaluate(a.model, ds).classifier_accuracy > 0.95);
    CHECK(a.trace.epochs == 60);
    CHECK(a.trace.samples == 800);
    const auto b = train_mlp(ds, cfg);
    CHECK(a.model == b.model);
}

TEST_CASE("forgetting counts and the never-learned sentinel") {
    TrainingTrace t;
    t.epochs = 4;
    t.samples = 3;
    // sample 0: 1 0 1 0 -> two forgetting events; sample 1: always right; sample 2: never right
    t.correct = {1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 0};
    CHECK(forgetting_counts(t) == std::vector<int>{2, 0, 4});
}

TEST_CASE("entropy scores lie between 0 and log C") {
    const auto ds = testutil::random_dataset(50, 3, 3, 5);
    const auto h = entropy_scores(random_model(3, 4, 3, 1), ds);
    for (double v : h) {
        CHECK(v >= 0.0);
        CHECK(v <= std::log(3.0) + 1e-12);
    }
}

TEST_CASE("model files round trip and reject trailing bytes") {
    const auto model = random_model(3, 4, 3, 8);
    const auto path = std::filesystem::temp_directory_path() / "icut_test_model.bin";
    save_model(model, path);
    CHECK(load_model(path) == model);
    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out.put('x');
    }
    CHECK_THROWS_AS(load_model(path), Error);
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "MLP2";
    }
    CHECK_THROWS_AS(load_model(path), Error);
    std::filesystem::remove(path);
}
