// Acceptance suite: one PASS/FAIL line per criterion.
//
//   icut_acceptance            run every criterion
//   icut_acceptance 3 8        run a chosen few
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "icut/cutstats.hpp"
#include "icut/datagen.hpp"
#include "icut/experiment.hpp"
#include "icut/io.hpp"
#include "icut/knn.hpp"
#include "icut/mlp.hpp"
#include "icut/parallel.hpp"
#include "icut/repr.hpp"
#include "icut/theory.hpp"

using namespace icut;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "!") + what;
    }
};

std::string num(double v, int digits = 2) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(digits);
    ss << v;
    return ss.str();
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("icut_acceptance_" + name);
    fs::remove_all(p);
    return p;
}

ExperimentConfig protocol(Group g, ReprKind rep, Method m = Method::cutstats) {
    ExperimentConfig c;
    c.source.spec = SyntheticSpec::defaults(g);
    c.noise_p = 0.45;
    c.representation = rep;
    c.method = m;
    c.cutstats.k = 20;
    c.cutstats.tau = 0.4;
    c.cutstats.priors = std::vector<double>{0.5, 0.5};  // fixed priors of the synthetic protocol
    c.seeds = {0, 1, 2};
    c.output = scratch("run");
    return c;
}

double pct(double v) { return 100.0 * v; }

// 1 -------------------------------------------------------------------------
Outcome cutstats_oracle() {
    Outcome o;
    double worst = 0.0;
    for (std::uint64_t inst = 0; inst < 1000; ++inst) {
        auto rng = make_stream(inst, StreamTag::sample_pick);
        const std::size_t n = 2 + uniform_below(rng, 49);  // 2..50
        const std::size_t d = 1 + uniform_below(rng, 5);
        const std::size_t k = 1 + uniform_below(rng, std::min<std::size_t>(5, n - 1));
        const int classes = 2 + static_cast<int>(uniform_below(rng, 2));

        LabeledDataset ds;
        ds.features = Matrix(n, d);
        for (double& v : ds.features.flat()) v = uniform(rng, -2.0, 2.0);
        ds.num_classes = classes;
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(classes)));
            ds.noisy_labels.push_back(labels[i]);
            ds.ids.push_back(static_cast<SampleId>(n - i));  // ids not aligned with rows
        }
        std::vector<double> prior(static_cast<std::size_t>(classes));
        double total = 0.0;
        for (double& p : prior) total += (p = 0.2 + uniform01(rng));
        for (double& p : prior) p /= total;

        CutstatsConfig cfg;
        cfg.k = k;
        cfg.priors = prior;
        const auto rep = compute_representation(ds, ReprKind::identity);
        const auto z = cutstats_scores(rep, build_neighbor_table(rep, k), cfg);

        std::vector<std::vector<double>> pts;
        for (std::size_t i = 0; i < n; ++i) pts.emplace_back(ds.features.row(i).begin(), ds.features.row(i).end());
        const auto want = oracle::cutstats(pts, labels, ds.ids, prior, k);
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(z[i] - want[i]));
    }
    o.require(worst <= 1e-9, "max |z - oracle| = " + sci(worst) + " over 1000 instances (<= 1e-9)");
    return o;
}

// 2 -------------------------------------------------------------------------
Outcome prop1_monte_carlo() {
    Outcome o;
    int inside = 0;
    double worst = 0.0;
    auto rng = make_stream(2024, StreamTag::sample_pick);
    for (int t = 0; t < 20; ++t) {
        const double alpha = uniform(rng, 0.05, 0.45);
        const double gamma = uniform(rng, 0.05, 0.45);
        const double l0 = uniform(rng, 0.3, 1.0);
        const double l1 = uniform(rng, std::max(0.3, 1.0 - l0), 1.0);
        const auto r = theory::validate_prop1_monte_carlo(alpha, gamma, l0, l1, 1000000, 100 + t);
        inside += r.within(3.0);
        worst = std::max({worst, r.sigma.alpha > 0 ? r.abs_deviation.alpha / r.sigma.alpha : 0.0,
                          r.sigma.gamma > 0 ? r.abs_deviation.gamma / r.sigma.gamma : 0.0});
    }
    o.require(inside == 20, std::to_string(inside) + "/20 random tuples within 3 sigma (worst " + num(worst) + " sigma)");
    const auto w = theory::validate_prop1_monte_carlo(0.45, 0.45, 0.74, 0.74, 1000000, 7);
    o.require(std::abs(w.predicted.alpha - 0.2233) < 5e-5 && w.within(3.0),
              "worked point predicted " + num(w.predicted.alpha, 4) + ", empirical " + num(w.empirical.alpha, 4) +
                  "/" + num(w.empirical.gamma, 4) + " (sigma " + sci(w.sigma.alpha) + ")");
    return o;
}

// 3 -------------------------------------------------------------------------
Outcome table2_orthogonal() {
    Outcome o;
    const auto ours = run_experiment(protocol(Group::orthogonal, ReprKind::l2norm)).summary;
    const auto vanilla = run_experiment(protocol(Group::orthogonal, ReprKind::identity)).summary;
    const double s_ours = pct(ours.mean.subset_accuracy), s_van = pct(vanilla.mean.subset_accuracy);
    const double c_ours = pct(ours.mean.classifier_accuracy), c_van = pct(vanilla.mean.classifier_accuracy);
    o.require(s_ours >= 69 && s_ours <= 80, "Subset-Acc l2norm " + num(s_ours) + " +- " +
                                               num(pct(ours.stddev.subset_accuracy)) + " in [69, 80]");
    o.require(s_ours - s_van >= 8, "gap over identity " + num(s_ours - s_van) + " >= 8 (identity " + num(s_van) + ")");
    o.require(c_ours >= c_van, "Classifier-Acc l2norm " + num(c_ours) + " >= identity " + num(c_van));
    return o;
}

// 4 -------------------------------------------------------------------------
Outcome table2_permutation() {
    Outcome o;
    const auto ours = run_experiment(protocol(Group::permutation, ReprKind::sort)).summary;
    const auto vanilla = run_experiment(protocol(Group::permutation, ReprKind::identity)).summary;
    const double s_ours = pct(ours.mean.subset_accuracy), s_van = pct(vanilla.mean.subset_accuracy);
    const double c_ours = pct(ours.mean.classifier_accuracy);
    o.require(s_ours >= 68 && s_ours <= 82, "Subset-Acc sort " + num(s_ours) + " +- " +
                                               num(pct(ours.stddev.subset_accuracy)) + " in [68, 82]");
    o.require(s_ours >= s_van, "sort >= identity " + num(s_van));
    // Baselines score samples in their native raw-feature space.
    for (auto m : {Method::random, Method::entropy, Method::forget, Method::herding}) {
        const auto b = run_experiment(protocol(Group::permutation, ReprKind::identity, m)).summary;
        const double c = pct(b.mean.classifier_accuracy);
        o.require(c_ours >= c, "Classifier-Acc sort " + num(c_ours) + " >= " + std::string(to_string(m)) + " " + num(c));
    }
    return o;
}

// 5 -------------------------------------------------------------------------
Outcome noiseless_controls() {
    Outcome o;
    struct Target {
        Group g;
        double centre;
        ReprKind rep;
    };
    for (const auto& t : {Target{Group::orthogonal, 70.40, ReprKind::l2norm}, Target{Group::permutation, 90.93, ReprKind::sort}}) {
        auto c = protocol(t.g, t.rep, Method::full);
        c.noise_p = 0.0;
        const auto s = run_experiment(c).summary;
        const double acc = pct(s.mean.classifier_accuracy);
        o.require(std::abs(acc - t.centre) <= 3.0, std::string(to_string(t.g)) + " clean MLP " + num(acc) + " +- " +
                                                       num(pct(s.stddev.classifier_accuracy)) + " within 3 of " +
                                                       num(t.centre));
    }
    int perfect = 0, total = 0;
    std::string imperfect;
    for (auto g : {Group::orthogonal, Group::permutation}) {
        for (auto m : {Method::cutstats, Method::random, Method::entropy, Method::forget, Method::herding, Method::full}) {
            auto c = protocol(g, g == Group::orthogonal ? ReprKind::l2norm : ReprKind::sort, m);
            c.noise_p = 0.0;
            c.train_classifier = false;
            c.seeds = {0};
            const double s = pct(run_experiment(c).summary.mean.subset_accuracy);
            ++total;
            if (s == 100.0)
                ++perfect;
            else
                imperfect += " " + std::string(to_string(m));
        }
    }
    o.require(perfect == total, "p=0 Subset-Acc 100.0 for " + std::to_string(perfect) + "/" + std::to_string(total) +
                                    " selector runs" + imperfect);
    return o;
}

// 6 -------------------------------------------------------------------------
Outcome dimension_sweep() {
    Outcome o;
    auto sweep = [](ReprKind rep) {
        auto c = protocol(Group::orthogonal, rep);
        c.train_classifier = false;
        const auto rows = run_ablation(AblationKind::dimension_sweep, c, {200, 1000});
        return std::pair{pct(rows[0].result.summary.mean.subset_accuracy),
                         pct(rows[1].result.summary.mean.subset_accuracy)};
    };
    const auto [id200, id1000] = sweep(ReprKind::identity);
    const auto [l2_200, l2_1000] = sweep(ReprKind::l2norm);
    o.require(id200 - id1000 >= 10, "identity " + num(id200) + " -> " + num(id1000) + " drops >= 10");
    o.require(std::abs(l2_1000 - l2_200) <= 5, "l2norm " + num(l2_200) + " -> " + num(l2_1000) + " within 5");
    return o;
}

// 7 -------------------------------------------------------------------------
Outcome invariance_ablation() {
    Outcome o;
    auto c = protocol(Group::orthogonal, ReprKind::l2norm);
    c.train_classifier = false;
    const std::vector<double> grid{0, 0.049, 0.111, 0.297, 0.452};
    const auto rows = run_ablation(AblationKind::invariance_error, c, grid);
    std::vector<double> acc;
    std::string trend;
    for (const auto& r : rows) {
        acc.push_back(pct(r.result.summary.mean.subset_accuracy));
        trend += (trend.empty() ? "" : " -> ") + num(acc.back()) + "@" + num(r.realized, 3);
    }
    int inversions = 0;
    bool small = true;
    for (std::size_t i = 1; i < acc.size(); ++i)
        if (acc[i] > acc[i - 1]) {
            ++inversions;
            small = small && acc[i] - acc[i - 1] <= 1.0;
        }
    o.require(inversions <= 1 && small, "trend " + trend + " (" + std::to_string(inversions) + " inversions)");
    o.require(acc.front() - acc.back() >= 5, "endpoint drop " + num(acc.front() - acc.back()) + " >= 5");
    return o;
}

// 8 -------------------------------------------------------------------------
Outcome feasibility_window() {
    Outcome o;
    theory::WindowParams p;
    p.n = 1e6;
    p.nu = 0.05;
    p.rho = 1;
    p.delta = 0.1;
    p.omega = 1;
    p.p0 = 1;
    p.kl1 = 1;
    std::vector<int> ds(30);
    std::iota(ds.begin(), ds.end(), 1);

    const auto plain = theory::feasibility_window(p, ds);
    o.require(plain.rows[0].feasible, "d=1 feasible (L " + num(std::exp(plain.rows[0].log_lower), 0) + ", U " +
                                          sci(std::exp(plain.rows[0].log_upper)) + ")");
    const double u10 = std::exp(plain.rows[9].log_upper);
    o.require(!plain.rows[9].feasible && std::abs(u10 / 2.5502e-4 - 1) < 1e-3,
              "plain d=10 infeasible, U " + sci(u10) + ", L " + num(std::exp(plain.rows[9].log_lower), 1));
    int transitions = 0;
    for (std::size_t i = 1; i < plain.rows.size(); ++i) transitions += plain.rows[i].feasible != plain.rows[i - 1].feasible;
    o.require(plain.threshold.has_value() && transitions == 1,
              "unique threshold d0 = " + (plain.threshold ? std::to_string(*plain.threshold) : std::string("none")));

    p.mode = theory::WindowMode::permutation;
    const auto perm = theory::feasibility_window(p, ds);
    const double up10 = std::exp(perm.rows[9].log_upper);
    o.require(perm.rows[9].feasible && std::abs(up10 / 925.4 - 1) < 1e-3, "permutation d=10 feasible, U " + num(up10, 1));

    p.mode = theory::WindowMode::orthogonal;
    const auto orth = theory::feasibility_window(p, ds);
    bool constant = true;
    for (const auto& r : orth.rows)
        constant = constant && r.log_lower == orth.rows[0].log_lower && r.log_upper == orth.rows[0].log_upper &&
                   r.feasible == orth.rows[0].feasible;
    o.require(constant, "orthogonal mode constant in d");

    double worst = 0.0;
    for (int d = 3; d <= 1000; ++d)
        worst = std::max(worst, std::abs(theory::unit_ball_log_volume(d).log_volume -
                                         theory::unit_ball_log_volume(d - 2).log_volume - std::log(2 * M_PI / d)));
    o.require(worst <= 1e-10, "log V_d recurrence error " + sci(worst));
    return o;
}

// 9 -------------------------------------------------------------------------
Outcome external_embedding() {
    Outcome o;
    const auto dir = scratch("external");
    fs::create_directories(dir);

    // Ten well-separated clusters in embedding space; raw features are noise.
    const int classes = 10;
    const std::size_t n = 3000, dim = 16;
    LabeledDataset train, test;
    for (auto* part : {&train, &test}) {
        const std::size_t rows = part == &train ? n : 500;
        const SampleId offset = part == &train ? 0 : static_cast<SampleId>(n);
        part->features = Matrix(rows, 4);
        part->num_classes = classes;
        std::vector<Label> y(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            auto rng = make_stream(offset + static_cast<SampleId>(i), StreamTag::features);
            y[i] = static_cast<Label>(uniform_below(rng, classes));
            for (double& v : part->features.row(i)) v = uniform01(rng);
            part->ids.push_back(offset + static_cast<SampleId>(i));
        }
        part->true_labels = y;
        part->noisy_labels = y;
    }
    Matrix emb(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = make_stream(i, StreamTag::perturb);
        for (std::size_t j = 0; j < dim; ++j) emb(i, j) = 0.1 * standard_normal(rng);
        emb(i, static_cast<std::size_t>(train.truth()[i])) += 10.0;
    }
    io::write_dataset_csv(dir / "train.csv", train);
    io::write_dataset_csv(dir / "test.csv", test);
    io::write_embedding_csv(dir / "emb.csv", train.ids, emb);

    ExperimentConfig c;
    c.source.synthetic = false;
    c.source.train_path = dir / "train.csv";
    c.source.test_path = dir / "test.csv";
    c.source.num_classes = classes;
    c.noise_p = 0.45;
    c.representation = ReprKind::external;
    c.embedding = dir / "emb.csv";
    c.train_classifier = false;
    c.seeds = {0, 1, 2};
    c.output = dir / "out";
    const double s = pct(run_experiment(c).summary.mean.subset_accuracy);
    o.require(s >= 95.0, "Subset-Acc " + num(s) + " >= 95 at p=0.45, C=10");

    // Malformed files: each must fail with its own message.
    const auto text = io::read_text(dir / "emb.csv");
    auto lines = std::vector<std::string>{};
    {
        std::istringstream in(text);
        for (std::string l; std::getline(in, l);) lines.push_back(l);
    }
    auto write_variant = [&](const std::string& name, std::vector<std::string> ls) {
        std::string out;
        for (const auto& l : ls) out += l + "\n";
        io::write_text(dir / name, out);
        return dir / name;
    };
    auto replace_first_field = [](std::string line, const std::string& v) { return v + line.substr(line.find(',')); };
    auto replace_last_field = [](std::string line, const std::string& v) { return line.substr(0, line.rfind(',') + 1) + v; };

    auto bad_id = lines;
    bad_id[5] = replace_first_field(bad_id[5], "999999");
    auto missing = lines;
    missing.pop_back();
    auto non_finite = lines;
    non_finite[7] = replace_last_field(non_finite[7], "nan");

    struct Case {
        const char* name;
        fs::path file;
        const char* expected;
    };
    const Case cases[] = {{"id mismatch", write_variant("bad_id.csv", bad_id), "id mismatch"},
                          {"missing row", write_variant("missing.csv", missing), "row-count mismatch"},
                          {"non-finite value", write_variant("nan.csv", non_finite), "non-finite embedding"}};
    std::set<std::string> messages;
    for (const auto& k : cases) {
        auto bad = c;
        bad.embedding = k.file;
        bad.seeds = {0};
        std::string msg;
        try {
            run_experiment(bad);
        } catch (const StageError& e) {
            msg = e.what();
        } catch (const std::exception& e) {
            msg = std::string("untagged: ") + e.what();
        }
        messages.insert(msg);
        o.require(msg.find(k.expected) != std::string::npos && msg.rfind("represent:", 0) == 0,
                  std::string(k.name) + " -> '" + msg.substr(0, msg.find(':', 11)) + "'");
    }
    o.require(messages.size() == 3, "three distinct errors");
    fs::remove_all(dir);
    return o;
}

// 10 ------------------------------------------------------------------------
Outcome numerical_hygiene() {
    Outcome o;
    // Gradient check, binary and multiclass.
    for (int classes : {2, 4}) {
        LabeledDataset ds;
        ds.features = Matrix(40, 5);
        auto rng = make_stream(static_cast<std::uint64_t>(classes), StreamTag::features);
        for (double& v : ds.features.flat()) v = uniform(rng, -1, 1);
        for (std::size_t i = 0; i < 40; ++i) {
            ds.noisy_labels.push_back(static_cast<Label>(uniform_below(rng, static_cast<std::uint64_t>(classes))));
            ds.ids.push_back(static_cast<SampleId>(i));
        }
        Mlp model(5, 7, classes);
        auto p = model.parameters();
        for (double& v : p) v = uniform(rng, -0.7, 0.7);
        model.set_parameters(p);
        std::vector<std::size_t> rows(40);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        std::vector<double> grad;
        loss_and_gradient(model, ds.features, ds.noisy_labels, rows, &grad);
        double worst = 0.0;
        Mlp probe = model;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double keep = p[i], h = 1e-5;
            p[i] = keep + h;
            probe.set_parameters(p);
            const double up = loss_and_gradient(probe, ds.features, ds.noisy_labels, rows, nullptr);
            p[i] = keep - h;
            probe.set_parameters(p);
            const double down = loss_and_gradient(probe, ds.features, ds.noisy_labels, rows, nullptr);
            p[i] = keep;
            const double numeric = (up - down) / (2 * h);
            worst = std::max(worst, std::abs(numeric - grad[i]) / std::max({std::abs(numeric), std::abs(grad[i]), 1e-6}));
        }
        o.require(worst <= 1e-4, "gradient check C=" + std::to_string(classes) + " rel err " + sci(worst));
    }

    for (int d : {2, 3}) {
        const auto r = theory::check_sorted_density(d, 1000000, d == 2 ? 20 : 10, 11);
        double worst = 0.0;
        for (const auto& b : r.bins) worst = std::max(worst, std::abs(b.z));
        o.require(r.pass, "sorted density d=" + std::to_string(d) + " (" + std::to_string(r.bins.size()) +
                              " cells, max |z| " + num(worst) + ")");
    }

    // Determinism: same config twice, second time with a different worker cap.
    auto c = protocol(Group::permutation, ReprKind::sort);
    c.source.spec.n_train = 4000;
    c.source.spec.n_test = 1000;
    c.output = scratch("det_a");
    auto c2 = c;
    c2.output = scratch("det_b");
    const int before = max_threads();
    write_experiment_report(c, run_experiment(c));
    set_threads(std::max(2, before + 1));
    write_experiment_report(c2, run_experiment(c2));
    set_threads(before);
    bool same = true;
    for (const char* f : {"report.csv", "report.txt"})
        same = same && io::read_text(c.output / f) == io::read_text(c2.output / f);
    o.require(same, "byte-identical reports across runs and worker counts");
    fs::remove_all(c.output);
    fs::remove_all(c2.output);
    return o;
}

struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
    configure_threads_from_env();
    const Criterion all[] = {
        {1, "cutstats oracle equivalence", cutstats_oracle},
        {2, "subset error-rate Monte Carlo", prop1_monte_carlo},
        {3, "orthogonal synthetic selection", table2_orthogonal},
        {4, "permutation synthetic selection", table2_permutation},
        {5, "noiseless controls", noiseless_controls},
        {6, "dimension sweep", dimension_sweep},
        {7, "invariance-error ablation", invariance_ablation},
        {8, "feasibility window", feasibility_window},
        {9, "external embedding path", external_embedding},
        {10, "numerical hygiene", numerical_hygiene},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << ", " << num(secs, 1)
                  << " s): " << o.detail << std::endl;
    }
    fs::remove_all(scratch("run"));
    return failed == 0 ? 0 : 1;
}
