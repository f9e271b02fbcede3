#include "icut/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include "icut/baselines.hpp"
#include "icut/io.hpp"
#include "icut/repr.hpp"
#include "icut/rng.hpp"

namespace icut {

using nlohmann::json;

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : stage) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(mix64(seed) ^ h);
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw UsageError("config: seeds must be non-empty");
    if (representation == ReprKind::external && !embedding)
        throw UsageError("config: external representation requires an embedding path");
    if (noise_p && !(*noise_p >= 0.0 && *noise_p <= 1.0)) throw UsageError("config: noise p must lie in [0, 1]");
    if (source.synthetic) {
        try {
            source.spec.validate();
        } catch (const Error& e) {
            throw UsageError(std::string("config: ") + e.what());
        }
        if (representation == ReprKind::external)
            throw UsageError("config: external embeddings need a file dataset");
    } else {
        if (source.train_path.empty() || source.test_path.empty())
            throw UsageError("config: file dataset needs train and test paths");
    }
    try {
        cutstats.validate();
        mlp.validate();
    } catch (const Error& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

namespace {

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw UsageError("config: " + std::string(where) + " must be an object");
    for (const auto& [key, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw UsageError("config: unknown key '" + key + "' in " + std::string(where));
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

SyntheticSpec spec_from_json(const json& j) {
    check_keys(j, "dataset", {"kind", "group", "d", "n_train", "n_test", "lo", "hi", "powers", "orthogonal"});
    const Group g = parse_group(j.value("group", std::string("orthogonal")));
    auto spec = SyntheticSpec::defaults(g);
    read(j, "d", spec.d);
    read(j, "n_train", spec.n_train);
    read(j, "n_test", spec.n_test);
    read(j, "lo", spec.lo);
    read(j, "hi", spec.hi);
    read(j, "powers", spec.powers);
    if (j.contains("orthogonal")) {
        const auto& o = j.at("orthogonal");
        check_keys(o, "dataset.orthogonal", {"c1", "c2", "c3", "k1", "k2", "k3"});
        read(o, "c1", spec.orthogonal.c1);
        read(o, "c2", spec.orthogonal.c2);
        read(o, "c3", spec.orthogonal.c3);
        read(o, "k1", spec.orthogonal.k1);
        read(o, "k2", spec.orthogonal.k2);
        read(o, "k3", spec.orthogonal.k3);
    }
    return spec;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    try {
        check_keys(j, "config", {"dataset", "noise", "representation", "embedding", "method", "cutstats", "mlp",
                                 "seeds", "output", "train_classifier"});
        if (j.contains("dataset")) {
            const auto& ds = j.at("dataset");
            const auto kind = ds.value("kind", std::string("synthetic"));
            if (kind == "synthetic") {
                c.source.synthetic = true;
                c.source.spec = spec_from_json(ds);
            } else if (kind == "files") {
                check_keys(ds, "dataset", {"kind", "train", "test", "num_classes"});
                c.source.synthetic = false;
                c.source.train_path = ds.at("train").get<std::string>();
                c.source.test_path = ds.at("test").get<std::string>();
                read(ds, "num_classes", c.source.num_classes);
            } else {
                throw UsageError("config: dataset kind must be synthetic or files");
            }
        }
        if (j.contains("noise")) {
            const auto& n = j.at("noise");
            if (n.is_null()) {
                c.noise_p.reset();
            } else {
                check_keys(n, "noise", {"p"});
                c.noise_p = n.at("p").get<double>();
            }
        }
        if (j.contains("representation")) c.representation = parse_repr_kind(j.at("representation").get<std::string>());
        if (j.contains("embedding") && !j.at("embedding").is_null())
            c.embedding = j.at("embedding").get<std::string>();
        if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
        if (j.contains("cutstats")) {
            const auto& cs = j.at("cutstats");
            check_keys(cs, "cutstats", {"k", "tau", "priors"});
            read(cs, "k", c.cutstats.k);
            read(cs, "tau", c.cutstats.tau);
            if (cs.contains("priors")) {
                const auto& p = cs.at("priors");
                if (p.is_string()) {
                    if (p.get<std::string>() != "empirical")
                        throw UsageError("config: priors must be \"empirical\" or a list");
                    c.cutstats.priors.reset();
                } else {
                    c.cutstats.priors = p.get<std::vector<double>>();
                }
            }
        }
        if (j.contains("mlp")) {
            const auto& m = j.at("mlp");
            check_keys(m, "mlp", {"hidden", "epochs", "batch_size", "learning_rate"});
            read(m, "hidden", c.mlp.hidden_units);
            read(m, "epochs", c.mlp.epochs);
            read(m, "batch_size", c.mlp.batch_size);
            read(m, "learning_rate", c.mlp.learning_rate);
        }
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("output")) c.output = j.at("output").get<std::string>();
        read(j, "train_classifier", c.train_classifier);
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    c.cutstats.representation_kind = c.representation;
    c.validate();
    return c;
}

json ExperimentConfig::to_json() const {
    json j;
    if (source.synthetic) {
        const auto& s = source.spec;
        j["dataset"] = {{"kind", "synthetic"},
                        {"group", std::string(to_string(s.group))},
                        {"d", s.d},
                        {"n_train", s.n_train},
                        {"n_test", s.n_test},
                        {"lo", s.lo},
                        {"hi", s.hi},
                        {"powers", s.powers},
                        {"orthogonal",
                         {{"c1", s.orthogonal.c1},
                          {"c2", s.orthogonal.c2},
                          {"c3", s.orthogonal.c3},
                          {"k1", s.orthogonal.k1},
                          {"k2", s.orthogonal.k2},
                          {"k3", s.orthogonal.k3}}}};
    } else {
        j["dataset"] = {{"kind", "files"},
                        {"train", source.train_path.string()},
                        {"test", source.test_path.string()},
                        {"num_classes", source.num_classes}};
    }
    j["noise"] = noise_p ? json{{"p", *noise_p}} : json(nullptr);
    j["representation"] = std::string(to_string(representation));
    j["embedding"] = embedding ? json(embedding->string()) : json(nullptr);
    j["method"] = std::string(to_string(method));
    j["cutstats"] = {{"k", cutstats.k},
                     {"tau", cutstats.tau},
                     {"priors", cutstats.priors ? json(*cutstats.priors) : json("empirical")}};
    j["mlp"] = {{"hidden", mlp.hidden_units},
                {"epochs", mlp.epochs},
                {"batch_size", mlp.batch_size},
                {"learning_rate", mlp.learning_rate}};
    j["seeds"] = seeds;
    j["output"] = output.string();
    j["train_classifier"] = train_classifier;
    return j;
}

namespace {

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

MlpConfig stage_mlp(const ExperimentConfig& config, std::uint64_t seed, int num_classes, const char* stage) {
    auto m = config.mlp;
    m.num_classes = num_classes;
    m.seed = stage_seed(seed, stage);
    return m;
}

}  // namespace

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed, const PipelineOverrides& overrides) {
    SeedRun run;
    run.seed = seed;

    LabeledDataset train, test;
    staged("generate", [&] {
        if (config.source.synthetic) {
            auto spec = config.source.spec;
            spec.seed = stage_seed(seed, "generate");
            auto split = generate_synthetic(spec);
            train = std::move(split.train);
            test = std::move(split.test);
        } else {
            train = io::read_dataset_csv(config.source.train_path, config.source.num_classes);
            test = io::read_dataset_csv(config.source.test_path, config.source.num_classes);
            const int c = std::max(train.num_classes, test.num_classes);
            train.num_classes = test.num_classes = c;
        }
    });

    staged("corrupt", [&] {
        if (config.noise_p)
            train = inject_label_noise(std::move(train), {*config.noise_p, train.num_classes, stage_seed(seed, "corrupt")});
    });

    RepresentedDataset rep;
    staged("represent", [&] {
        if (config.representation == ReprKind::external)
            rep = load_external_representation(train, *config.embedding);
        else
            rep = compute_representation(train, config.representation);
        if (overrides.invariance_error_target) {
            if (!config.source.synthetic) throw Error("invariance perturbation needs a synthetic group");
            auto p = perturb_representation(rep, *overrides.invariance_error_target, config.source.spec.group,
                                            stage_seed(seed, "perturb"));
            rep = std::move(p.rep);
            run.realized_invariance_error = p.realized_error;
        }
    });

    SelectionResult selection;
    staged("select", [&] {
        const double tau = config.cutstats.tau;
        switch (config.method) {
            case Method::cutstats: {
                auto cs = config.cutstats;
                cs.representation_kind = rep.kind;
                selection = run_cutstats(rep, cs);
                break;
            }
            case Method::random: selection = random_select(train, tau, stage_seed(seed, "select")); break;
            case Method::entropy:
            case Method::forget: {
                auto full = train_mlp(train, stage_mlp(config, seed, train.num_classes, "select"));
                if (config.method == Method::entropy)
                    selection = entropy_select(train, entropy_scores(full.model, train), tau);
                else
                    selection = forget_select(train, forgetting_counts(full.trace), tau);
                break;
            }
            case Method::herding: selection = herding_select(rep, tau); break;
            case Method::full: selection = full_select(train); break;
        }
    });

    staged("train", [&] {
        if (!config.train_classifier) return;
        const auto rows = train.rows_of(selection.selected);
        auto subset = train.subset(rows);
        auto clf = train_mlp(subset, stage_mlp(config, seed, train.num_classes, "train"));
        const auto m = evaluate(clf.model, test);
        run.metrics.classifier_accuracy = m.classifier_accuracy;
        run.metrics.balanced_error = m.balanced_error;
    });

    staged("evaluate", [&] {
        const auto m = selection_metrics(selection, train);
        run.metrics.subset_accuracy = m.subset_accuracy;
        run.metrics.alpha_hat = m.alpha_hat;
        run.metrics.gamma_hat = m.gamma_hat;
        run.metrics.nonabstain_rate = m.nonabstain_rate;
    });
    return run;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const PipelineOverrides& overrides) {
    config.validate();
    ExperimentResult result;
    std::set<std::uint64_t> seen;
    for (auto seed : config.seeds) {
        if (!seen.insert(seed).second) continue;
        result.runs.push_back(run_seed(config, seed, overrides));
    }
    std::ranges::sort(result.runs, {}, &SeedRun::seed);
    std::vector<Metrics> ms;
    for (const auto& r : result.runs) ms.push_back(r.metrics);
    result.summary = summarize_runs(ms);
    return result;
}

namespace {

std::string pct(double v) { return io::format_double(100.0 * v); }

std::vector<std::string> metric_cells(const Metrics& m, bool classifier) {
    return {classifier ? pct(m.classifier_accuracy) : std::string{},
            pct(m.subset_accuracy),
            classifier ? pct(m.balanced_error) : std::string{},
            io::format_double(m.alpha_hat),
            io::format_double(m.gamma_hat),
            io::format_double(m.nonabstain_rate)};
}

const std::vector<std::string> kMetricHeader{"classifier_acc", "subset_acc", "balanced_error",
                                             "alpha_hat",      "gamma_hat",  "nonabstain_rate"};

std::string fixed(double v, int digits) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << v;
    return ss.str();
}

std::string pm(double mean, double sd, bool show) {
    if (!show) return "-";
    return fixed(100.0 * mean, 2) + " +- " + fixed(100.0 * sd, 2);
}

std::string aligned(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()), 0);
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::string out;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        std::string line;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) line += "  ";
            line += r[i];
            if (i + 1 < r.size()) line.append(width[i] - r[i].size(), ' ');
        }
        out += line + "\n";
        if (k == 0) {
            std::size_t total = 0;
            for (std::size_t i = 0; i < width.size(); ++i) total += width[i] + (i ? 2 : 0);
            out += std::string(total, '-') + "\n";
        }
    }
    return out;
}

std::string describe(const ExperimentConfig& c) {
    std::string s = "method=" + std::string(to_string(c.method)) +
                    " representation=" + std::string(to_string(c.representation)) +
                    " k=" + std::to_string(c.cutstats.k) + " tau=" + io::format_double(c.cutstats.tau);
    if (c.source.synthetic)
        s += " group=" + std::string(to_string(c.source.spec.group)) + " d=" + std::to_string(c.source.spec.d) +
             " n_train=" + std::to_string(c.source.spec.n_train);
    s += " p=" + (c.noise_p ? io::format_double(*c.noise_p) : std::string("file"));
    return s;
}

std::vector<std::filesystem::path> write_all(const std::vector<std::pair<std::filesystem::path, std::string>>& files) {
    std::vector<std::filesystem::path> done;
    try {
        for (const auto& [path, text] : files) {
            io::write_text(path, text);
            done.push_back(path);
        }
    } catch (...) {
        std::error_code ec;
        for (const auto& p : done) std::filesystem::remove(p, ec);
        throw;
    }
    return done;
}

}  // namespace

std::vector<std::filesystem::path> write_experiment_report(const ExperimentConfig& config,
                                                           const ExperimentResult& result) {
    const bool clf = config.train_classifier;
    io::CsvTable t;
    t.header = {"seed"};
    t.header.insert(t.header.end(), kMetricHeader.begin(), kMetricHeader.end());
    for (const auto& r : result.runs) {
        std::vector<std::string> row{std::to_string(r.seed)};
        auto cells = metric_cells(r.metrics, clf);
        row.insert(row.end(), cells.begin(), cells.end());
        t.rows.push_back(std::move(row));
    }
    for (auto [name, m] : {std::pair{"mean", result.summary.mean}, std::pair{"std", result.summary.stddev}}) {
        std::vector<std::string> row{name};
        auto cells = metric_cells(m, clf);
        row.insert(row.end(), cells.begin(), cells.end());
        t.rows.push_back(std::move(row));
    }

    std::vector<std::vector<std::string>> text_rows{{"seed", "Classifier-Acc", "Subset-Acc", "Balanced-Err"}};
    for (const auto& r : result.runs)
        text_rows.push_back({std::to_string(r.seed), clf ? fixed(100.0 * r.metrics.classifier_accuracy, 2) : "-",
                             fixed(100.0 * r.metrics.subset_accuracy, 2),
                             clf ? fixed(100.0 * r.metrics.balanced_error, 2) : "-"});
    const auto& s = result.summary;
    text_rows.push_back({"mean +- std", pm(s.mean.classifier_accuracy, s.stddev.classifier_accuracy, clf),
                         pm(s.mean.subset_accuracy, s.stddev.subset_accuracy, true),
                         pm(s.mean.balanced_error, s.stddev.balanced_error, clf)});

    return write_all({{config.output / "report.csv", io::format_csv(t)},
                      {config.output / "report.txt", describe(config) + "\n\n" + aligned(text_rows)}});
}

std::string_view to_string(AblationKind k) {
    switch (k) {
        case AblationKind::invariance_error: return "invariance_error";
        case AblationKind::dimension_sweep: return "dimension_sweep";
        case AblationKind::k_sweep: return "k_sweep";
        case AblationKind::tau_sweep: return "tau_sweep";
    }
    return "?";
}

AblationKind parse_ablation_kind(std::string_view s) {
    for (auto k : {AblationKind::invariance_error, AblationKind::dimension_sweep, AblationKind::k_sweep,
                   AblationKind::tau_sweep})
        if (to_string(k) == s) return k;
    throw UsageError("unknown ablation kind '" + std::string(s) + "'");
}

std::vector<AblationRow> run_ablation(AblationKind kind, const ExperimentConfig& base,
                                      const std::vector<double>& grid) {
    if (grid.empty()) throw UsageError("ablation: grid must be non-empty");
    base.validate();
    if (kind == AblationKind::invariance_error && base.representation != ReprKind::l2norm)
        throw UsageError("ablation: invariance_error requires the l2norm representation");
    if ((kind == AblationKind::invariance_error || kind == AblationKind::dimension_sweep) && !base.source.synthetic)
        throw UsageError("ablation: " + std::string(to_string(kind)) + " needs a synthetic dataset");

    std::vector<AblationRow> rows;
    for (double knob : grid) {
        auto config = base;
        PipelineOverrides overrides;
        AblationRow row;
        row.knob = knob;
        row.realized = knob;
        switch (kind) {
            case AblationKind::invariance_error:
                if (!(knob >= 0.0)) throw UsageError("ablation: invariance error must be non-negative");
                overrides.invariance_error_target = knob;
                break;
            case AblationKind::dimension_sweep:
                if (!(knob >= 1.0) || knob != std::floor(knob)) throw UsageError("ablation: d must be a positive integer");
                config.source.spec.d = static_cast<std::size_t>(knob);
                break;
            case AblationKind::k_sweep:
                if (!(knob >= 1.0) || knob != std::floor(knob)) throw UsageError("ablation: k must be a positive integer");
                config.cutstats.k = static_cast<std::size_t>(knob);
                break;
            case AblationKind::tau_sweep:
                if (!(knob > 0.0 && knob <= 1.0)) throw UsageError("ablation: tau must lie in (0, 1]");
                config.cutstats.tau = knob;
                break;
        }
        row.result = run_experiment(config, overrides);
        if (kind == AblationKind::invariance_error) {
            double sum = 0.0;
            for (const auto& r : row.result.runs) sum += r.realized_invariance_error;
            row.realized = sum / static_cast<double>(row.result.runs.size());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::filesystem::path> write_ablation_report(AblationKind kind, const ExperimentConfig& base,
                                                         const std::vector<AblationRow>& rows) {
    const bool clf = base.train_classifier;
    io::CsvTable t;
    t.header = {"knob", "realized", "runs", "classifier_acc_mean", "classifier_acc_std", "subset_acc_mean",
                "subset_acc_std"};
    std::vector<std::vector<std::string>> text_rows{
        {std::string(to_string(kind)), "realized", "Classifier-Acc", "Subset-Acc"}};
    for (const auto& r : rows) {
        const auto& s = r.result.summary;
        t.rows.push_back({io::format_double(r.knob), io::format_double(r.realized), std::to_string(s.runs),
                          clf ? pct(s.mean.classifier_accuracy) : std::string{},
                          clf ? pct(s.stddev.classifier_accuracy) : std::string{}, pct(s.mean.subset_accuracy),
                          pct(s.stddev.subset_accuracy)});
        text_rows.push_back({io::format_double(r.knob), fixed(r.realized, 4),
                             pm(s.mean.classifier_accuracy, s.stddev.classifier_accuracy, clf),
                             pm(s.mean.subset_accuracy, s.stddev.subset_accuracy, true)});
    }
    const std::string stem = "ablation_" + std::string(to_string(kind));
    return write_all({{base.output / (stem + ".csv"), io::format_csv(t)},
                      {base.output / (stem + ".txt"), describe(base) + "\n\n" + aligned(text_rows)}});
}

}  // namespace icut
