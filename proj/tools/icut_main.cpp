// icut: command-line front end for the invariant cutstats pipeline.
//
// Exit codes: 0 success, 1 runtime or stage failure, 2 usage or config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "icut/baselines.hpp"
#include "icut/cutstats.hpp"
#include "icut/datagen.hpp"
#include "icut/experiment.hpp"
#include "icut/io.hpp"
#include "icut/mlp.hpp"
#include "icut/parallel.hpp"
#include "icut/repr.hpp"
#include "icut/theory.hpp"

namespace {

using nlohmann::json;
using namespace icut;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto pos = s.find(',', start);
        if (pos == std::string::npos) pos = s.size();
        if (pos > start) out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
    std::vector<double> out;
    try {
        for (const auto& t : split_list(s)) out.push_back(io::parse_double(t));
    } catch (const Error& e) {
        throw UsageError(std::string(what) + ": " + e.what());
    }
    if (out.empty()) throw UsageError(std::string(what) + ": empty list");
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    for (const auto& t : split_list(s)) {
        try {
            std::size_t used = 0;
            if (!t.empty() && t[0] == '-') throw std::invalid_argument("negative");
            out.push_back(std::stoull(t, &used));
            if (used != t.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw UsageError("--seed-list: malformed seed '" + t + "'");
        }
    }
    if (out.empty()) throw UsageError("--seed-list: empty list");
    return out;
}

std::vector<int> parse_d_range(const std::string& s) {
    std::vector<int> out;
    for (const auto& t : split_list(s)) {
        try {
            const auto dash = t.find('-', 1);
            if (dash != std::string::npos) {
                const int a = static_cast<int>(io::parse_int(t.substr(0, dash)));
                const int b = static_cast<int>(io::parse_int(t.substr(dash + 1)));
                if (a > b) throw UsageError("--d-range: reversed range '" + t + "'");
                for (int d = a; d <= b; ++d) out.push_back(d);
            } else {
                out.push_back(static_cast<int>(io::parse_int(t)));
            }
        } catch (const UsageError&) {
            throw;
        } catch (const Error& e) {
            throw UsageError(std::string("--d-range: ") + e.what());
        }
    }
    if (out.empty()) throw UsageError("--d-range: empty dimension range");
    return out;
}

/// Flags mirroring the JSON config keys. Unset flags leave the file value.
struct ConfigFlags {
    std::string config_path;
    std::optional<std::string> group, train_file, test_file, representation, embedding, method, priors,
        seed_list, output;
    std::optional<std::size_t> d, n_train, n_test, k, hidden, epochs, batch_size;
    std::optional<double> lo, hi, p, tau, lr;
    std::optional<int> num_classes;
    bool no_noise = false;
    bool no_train = false;

    void attach(CLI::App* app, bool pipeline) {
        app->add_option("--config", config_path, "JSON config file");
        app->add_option("--group", group, "orthogonal or permutation");
        app->add_option("--d", d, "feature dimension");
        app->add_option("--n-train", n_train, "training samples");
        app->add_option("--n-test", n_test, "test samples");
        app->add_option("--lo", lo, "feature support lower end");
        app->add_option("--hi", hi, "feature support upper end");
        app->add_option("--seed-list", seed_list, "comma-separated seeds");
        app->add_option("--output", output, "output directory");
        if (!pipeline) return;
        app->add_option("--train-file", train_file, "dataset CSV for training");
        app->add_option("--test-file", test_file, "dataset CSV for evaluation");
        app->add_option("--num-classes", num_classes, "class count for file datasets (0 = infer)");
        app->add_option("--p", p, "label flip probability");
        app->add_flag("--no-noise", no_noise, "keep the labels found in the files");
        app->add_option("--representation", representation, "identity, l2norm, sort or external");
        app->add_option("--embedding", embedding, "embedding CSV for the external representation");
        app->add_option("--method", method, "cutstats, random, entropy, forget, herding or full");
        app->add_option("--k", k, "neighbour count");
        app->add_option("--tau", tau, "retained fraction");
        app->add_option("--priors", priors, "'empirical' or comma-separated class priors");
        app->add_option("--hidden", hidden, "hidden units");
        app->add_option("--epochs", epochs, "training epochs");
        app->add_option("--batch-size", batch_size, "mini-batch size");
        app->add_option("--lr", lr, "Adam learning rate");
        app->add_flag("--no-train", no_train, "skip classifier training");
    }

    ExperimentConfig build() const {
        json j = json::object();
        if (!config_path.empty()) {
            try {
                j = json::parse(io::read_text(config_path));
            } catch (const json::exception& e) {
                throw UsageError("config: " + std::string(e.what()));
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            if (!j.is_object()) throw UsageError("config: top level must be an object");
        }
        if (train_file || test_file) {
            json& ds = j["dataset"];
            ds = json{{"kind", "files"}};
            if (train_file) ds["train"] = *train_file;
            if (test_file) ds["test"] = *test_file;
            if (num_classes) ds["num_classes"] = *num_classes;
        } else if (group || d || n_train || n_test || lo || hi) {
            json& ds = j["dataset"];
            if (ds.is_null()) ds = json{{"kind", "synthetic"}};
            if (group) ds["group"] = *group;
            if (d) ds["d"] = *d;
            if (n_train) ds["n_train"] = *n_train;
            if (n_test) ds["n_test"] = *n_test;
            if (lo) ds["lo"] = *lo;
            if (hi) ds["hi"] = *hi;
        }
        if (no_noise) j["noise"] = nullptr;
        if (p) j["noise"] = json{{"p", *p}};
        if (representation) j["representation"] = *representation;
        if (embedding) j["embedding"] = *embedding;
        if (method) j["method"] = *method;
        if (k) j["cutstats"]["k"] = *k;
        if (tau) j["cutstats"]["tau"] = *tau;
        if (priors) {
            if (*priors == "empirical")
                j["cutstats"]["priors"] = "empirical";
            else
                j["cutstats"]["priors"] = parse_doubles(*priors, "--priors");
        }
        if (hidden) j["mlp"]["hidden"] = *hidden;
        if (epochs) j["mlp"]["epochs"] = *epochs;
        if (batch_size) j["mlp"]["batch_size"] = *batch_size;
        if (lr) j["mlp"]["learning_rate"] = *lr;
        if (seed_list) j["seeds"] = parse_seed_list(*seed_list);
        if (output) j["output"] = *output;
        if (no_train) j["train_classifier"] = false;
        return ExperimentConfig::from_json(j);
    }
};

template <class T>
T parse_enum(T (*fn)(std::string_view), const std::string& s) {
    try {
        return fn(s);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

void mlp_flags(CLI::App* app, MlpConfig& m) {
    app->add_option("--hidden", m.hidden_units, "hidden units");
    app->add_option("--epochs", m.epochs, "training epochs");
    app->add_option("--batch-size", m.batch_size, "mini-batch size");
    app->add_option("--lr", m.learning_rate, "Adam learning rate");
}

void print_report(const std::filesystem::path& txt) { std::cout << io::read_text(txt); }

// Stage verbs --------------------------------------------------------------

struct GenArgs {
    ConfigFlags flags;
    std::uint64_t seed = 0;
};

int cmd_gen(const GenArgs& a) {
    auto config = a.flags.build();
    if (!config.source.synthetic) throw UsageError("gen: needs a synthetic dataset");
    auto spec = config.source.spec;
    spec.seed = stage_seed(a.seed, "generate");
    auto split = generate_synthetic(spec);
    const auto train = config.output / "train.csv";
    const auto test = config.output / "test.csv";
    io::write_dataset_csv(train, split.train);
    try {
        io::write_dataset_csv(test, split.test);
    } catch (...) {
        std::filesystem::remove(train);
        throw;
    }
    std::cout << "wrote " << train.string() << " and " << test.string() << "\n";
    return 0;
}

struct CorruptArgs {
    std::string in, out;
    double p = 0.45;
    std::uint64_t seed = 0;
    int num_classes = 0;
};

int cmd_corrupt(const CorruptArgs& a) {
    auto ds = io::read_dataset_csv(a.in, a.num_classes);
    ds = inject_label_noise(std::move(ds), {a.p, ds.num_classes, stage_seed(a.seed, "corrupt")});
    io::write_dataset_csv(a.out, ds);
    return 0;
}

struct RepresentArgs {
    std::string in, out, kind = "identity";
};

int cmd_represent(const RepresentArgs& a) {
    const auto kind = parse_enum(parse_repr_kind, a.kind);
    if (kind == ReprKind::external) throw UsageError("represent: external embeddings are supplied, not computed");
    const auto ds = io::read_dataset_csv(a.in);
    const auto rep = compute_representation(ds, kind);
    io::write_embedding_csv(a.out, ds.ids, rep.representations);
    return 0;
}

struct SelectArgs {
    std::string in, scores, subset, method = "cutstats", representation = "identity", embedding;
    std::string priors = "empirical";
    std::size_t k = 20;
    double tau = 0.4;
    std::uint64_t seed = 0;
    int num_classes = 0;
    MlpConfig mlp;
};

int cmd_select(const SelectArgs& a) {
    const auto method = parse_enum(parse_method, a.method);
    const auto kind = parse_enum(parse_repr_kind, a.representation);
    if (kind == ReprKind::external && a.embedding.empty())
        throw UsageError("select: external representation requires --embedding");
    CutstatsConfig cs;
    cs.k = a.k;
    cs.tau = a.tau;
    if (a.priors != "empirical") cs.priors = parse_doubles(a.priors, "--priors");
    try {
        cs.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }

    const auto ds = io::read_dataset_csv(a.in, a.num_classes);
    const auto rep = kind == ReprKind::external ? load_external_representation(ds, a.embedding)
                                                : compute_representation(ds, kind);
    SelectionResult sel;
    switch (method) {
        case Method::cutstats:
            cs.representation_kind = kind;
            sel = run_cutstats(rep, cs);
            break;
        case Method::random: sel = random_select(ds, a.tau, stage_seed(a.seed, "select")); break;
        case Method::entropy:
        case Method::forget: {
            auto m = a.mlp;
            m.num_classes = ds.num_classes;
            m.seed = stage_seed(a.seed, "select");
            const auto full = train_mlp(ds, m);
            sel = method == Method::entropy ? entropy_select(ds, entropy_scores(full.model, ds), a.tau)
                                            : forget_select(ds, forgetting_counts(full.trace), a.tau);
            break;
        }
        case Method::herding: sel = herding_select(rep, a.tau); break;
        case Method::full: sel = full_select(ds); break;
    }
    const std::string column = method == Method::cutstats ? "z" : "score";
    if (!a.scores.empty()) io::write_scores_csv(a.scores, ds.ids, sel.scores, column);
    try {
        io::write_subset(a.subset, sel.selected);
    } catch (...) {
        if (!a.scores.empty()) std::filesystem::remove(a.scores);
        throw;
    }
    if (ds.true_labels) {
        const auto m = selection_metrics(sel, ds);
        std::cout << "selected " << sel.selected.size() << " of " << ds.size() << ", subset accuracy "
                  << io::format_double(100.0 * m.subset_accuracy) << "\n";
    }
    return 0;
}

struct TrainArgs {
    std::string in, subset, model;
    std::uint64_t seed = 0;
    int num_classes = 0;
    MlpConfig mlp;
};

int cmd_train(const TrainArgs& a) {
    auto ds = io::read_dataset_csv(a.in, a.num_classes);
    if (!a.subset.empty()) {
        const auto ids = io::read_subset(a.subset);
        ds = ds.subset(ds.rows_of(ids));
    }
    auto m = a.mlp;
    m.num_classes = ds.num_classes;
    m.seed = stage_seed(a.seed, "train");
    const auto clf = train_mlp(ds, m);
    save_model(clf.model, a.model);
    std::cout << "final training loss " << io::format_double(clf.epoch_loss.back()) << "\n";
    return 0;
}

struct EvalArgs {
    std::string model, test, out;
};

int cmd_eval(const EvalArgs& a) {
    const auto model = load_model(a.model);
    const auto test = io::read_dataset_csv(a.test, model.num_classes());
    const auto m = evaluate(model, test);
    io::CsvTable t{{"classifier_acc", "balanced_error"},
                   {{io::format_double(100.0 * m.classifier_accuracy), io::format_double(100.0 * m.balanced_error)}}};
    const auto text = io::format_csv(t);
    if (!a.out.empty()) io::write_text(a.out, text);
    std::cout << text;
    return 0;
}

int cmd_exp(const ConfigFlags& flags) {
    const auto config = flags.build();
    const auto result = run_experiment(config);
    const auto paths = write_experiment_report(config, result);
    print_report(paths.back());
    return 0;
}

struct AblateArgs {
    ConfigFlags flags;
    std::string kind, grid;
};

int cmd_ablate(const AblateArgs& a) {
    const auto kind = parse_ablation_kind(a.kind);
    const auto grid = parse_doubles(a.grid, "--grid");
    const auto config = a.flags.build();
    const auto rows = run_ablation(kind, config, grid);
    const auto paths = write_ablation_report(kind, config, rows);
    print_report(paths.back());
    return 0;
}

struct BoundsArgs {
    theory::WindowParams params;
    std::string mode = "plain";
    std::string d_range = "1-20";
    std::string out;
};

int cmd_bounds(const BoundsArgs& a) {
    auto params = a.params;
    params.mode = parse_enum(theory::parse_window_mode, a.mode);
    const auto ds = parse_d_range(a.d_range);
    try {
        params.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const auto report = theory::feasibility_window(params, ds);
    const auto csv = io::format_feasibility_csv(report);
    if (!a.out.empty()) io::write_text(a.out, csv);
    std::cout << csv;
    if (report.threshold)
        std::cerr << "threshold d0 = " << *report.threshold << "\n";
    else
        std::cerr << "no infeasible dimension in range\n";
    return 0;
}

struct TheoryArgs {
    std::size_t trials = 1000000;
    std::uint64_t seed = 0;
};

int cmd_validate_theory(const TheoryArgs& a) {
    bool ok = true;
    auto line = [&](bool pass, const std::string& what) {
        ok = ok && pass;
        std::cout << (pass ? "PASS " : "FAIL ") << what << "\n";
    };
    struct Case {
        double alpha, gamma, l0, l1;
    };
    for (const auto& c : {Case{0.45, 0.45, 0.74, 0.74}, Case{0.3, 0.2, 1.0, 1.0}, Case{0.3, 0.2, 0.5, 0.5},
                          Case{0.4, 0.1, 0.8, 0.6}}) {
        const auto r = theory::validate_prop1_monte_carlo(c.alpha, c.gamma, c.l0, c.l1, a.trials, a.seed);
        line(r.within(3.0), "prop1 alpha=" + io::format_double(c.alpha) + " gamma=" + io::format_double(c.gamma) +
                                " lambda=(" + io::format_double(c.l0) + "," + io::format_double(c.l1) +
                                "): predicted " + io::format_double(r.predicted.alpha) + "/" +
                                io::format_double(r.predicted.gamma) + " empirical " +
                                io::format_double(r.empirical.alpha) + "/" + io::format_double(r.empirical.gamma));
    }
    for (double sum : {1.0, 1.2, 1.6, 2.0}) {
        const auto c = theory::check_corollary(0.4, 0.3, sum / 2, sum / 2);
        line(c.holds, "corollary lambda0+lambda1=" + io::format_double(sum) + " margins " +
                          io::format_double(c.alpha_margin) + "/" + io::format_double(c.gamma_margin));
    }
    for (int d : {2, 3}) {
        const auto r = theory::check_sorted_density(d, std::max<std::size_t>(a.trials, 100000), d == 2 ? 10 : 8, a.seed);
        line(r.pass, "sorted density d=" + std::to_string(d) + " over " + std::to_string(r.bins.size()) + " cells");
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    icut::configure_threads_from_env();

    CLI::App app{"Invariant cutstats: noisy-label subset selection with group-invariant representations"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic train/test split");
    gen.flags.attach(g, false);
    g->add_option("--seed", gen.seed, "run seed");

    CorruptArgs corrupt;
    auto* c = app.add_subcommand("corrupt", "Flip labels of a dataset CSV");
    c->add_option("--in", corrupt.in, "input dataset CSV")->required();
    c->add_option("--out", corrupt.out, "output dataset CSV")->required();
    c->add_option("--p", corrupt.p, "flip probability");
    c->add_option("--seed", corrupt.seed, "run seed");
    c->add_option("--num-classes", corrupt.num_classes, "class count (0 = infer)");

    RepresentArgs represent;
    auto* r = app.add_subcommand("represent", "Write an invariant representation as an embedding CSV");
    r->add_option("--in", represent.in, "input dataset CSV")->required();
    r->add_option("--out", represent.out, "output embedding CSV")->required();
    r->add_option("--kind", represent.kind, "identity, l2norm or sort");

    SelectArgs select;
    auto* s = app.add_subcommand("select", "Score samples and write the retained subset");
    s->add_option("--in", select.in, "noisy dataset CSV")->required();
    s->add_option("--subset", select.subset, "output subset file")->required();
    s->add_option("--scores", select.scores, "output scores CSV");
    s->add_option("--method", select.method, "cutstats, random, entropy, forget, herding or full");
    s->add_option("--representation", select.representation, "identity, l2norm, sort or external");
    s->add_option("--embedding", select.embedding, "embedding CSV");
    s->add_option("--k", select.k, "neighbour count");
    s->add_option("--tau", select.tau, "retained fraction");
    s->add_option("--priors", select.priors, "'empirical' or comma-separated class priors");
    s->add_option("--seed", select.seed, "run seed");
    s->add_option("--num-classes", select.num_classes, "class count (0 = infer)");
    mlp_flags(s, select.mlp);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train the MLP on a dataset or a subset of it");
    t->add_option("--in", train.in, "dataset CSV")->required();
    t->add_option("--model", train.model, "output model file")->required();
    t->add_option("--subset", train.subset, "subset file");
    t->add_option("--seed", train.seed, "run seed");
    t->add_option("--num-classes", train.num_classes, "class count (0 = infer)");
    mlp_flags(t, train.mlp);

    EvalArgs eval;
    auto* e = app.add_subcommand("eval", "Evaluate a model on a labelled dataset");
    e->add_option("--model", eval.model, "model file")->required();
    e->add_option("--test", eval.test, "test dataset CSV")->required();
    e->add_option("--out", eval.out, "output metrics CSV");

    ConfigFlags exp;
    auto* x = app.add_subcommand("exp", "Run the end-to-end pipeline over seeds");
    exp.attach(x, true);

    AblateArgs ablate;
    auto* a = app.add_subcommand("ablate", "Sweep one knob of the pipeline");
    ablate.flags.attach(a, true);
    a->add_option("--kind", ablate.kind, "invariance_error, dimension_sweep, k_sweep or tau_sweep")->required();
    a->add_option("--grid", ablate.grid, "comma-separated knob values")->required();

    BoundsArgs bounds;
    auto* b = app.add_subcommand("bounds", "Tabulate the k-NN feasibility window over dimensions");
    b->add_option("--n", bounds.params.n, "sample count");
    b->add_option("--nu", bounds.params.nu, "confidence parameter");
    b->add_option("--rho", bounds.params.rho, "Holder exponent");
    b->add_option("--delta", bounds.params.delta, "minimum corrupted-pair distance");
    b->add_option("--omega", bounds.params.omega, "support regularity constant");
    b->add_option("--p0", bounds.params.p0, "density lower bound");
    b->add_option("--kl1", bounds.params.kl1, "lower constant at d = 1");
    b->add_option("--beta", bounds.params.beta, "Tsybakov exponent (reported only)");
    b->add_option("--mode", bounds.mode, "plain, orthogonal or permutation");
    b->add_option("--d-range", bounds.d_range, "dimensions, e.g. 1-20 or 1,5,10");
    b->add_option("--out", bounds.out, "output CSV");

    TheoryArgs theory_args;
    auto* v = app.add_subcommand("validate-theory", "Monte Carlo checks of the error-rate and density results");
    v->add_option("--trials", theory_args.trials, "Monte Carlo trials per check");
    v->add_option("--seed", theory_args.seed, "Monte Carlo seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (g->parsed()) return cmd_gen(gen);
        if (c->parsed()) return cmd_corrupt(corrupt);
        if (r->parsed()) return cmd_represent(represent);
        if (s->parsed()) return cmd_select(select);
        if (t->parsed()) return cmd_train(train);
        if (e->parsed()) return cmd_eval(eval);
        if (x->parsed()) return cmd_exp(exp);
        if (a->parsed()) return cmd_ablate(ablate);
        if (b->parsed()) return cmd_bounds(bounds);
        if (v->parsed()) return cmd_validate_theory(theory_args);
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return 2;
    } catch (const StageError& err) {
        std::cerr << "error in stage " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 2;
}
