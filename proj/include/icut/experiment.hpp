#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "icut/core.hpp"
#include "icut/cutstats.hpp"
#include "icut/datagen.hpp"
#include "icut/mlp.hpp"

namespace icut {

/// An Error tagged with the pipeline stage that raised it.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Malformed configuration or command line (CLI exit code 2).
class UsageError : public Error {
public:
    using Error::Error;
};

struct DatasetSource {
    bool synthetic = true;
    SyntheticSpec spec;
    std::filesystem::path train_path;
    std::filesystem::path test_path;
    int num_classes = 0;  // files only; 0 = infer
};

struct ExperimentConfig {
    DatasetSource source;
    std::optional<double> noise_p = 0.45;  // unset: keep the yhat column of the files
    ReprKind representation = ReprKind::identity;
    std::optional<std::filesystem::path> embedding;
    Method method = Method::cutstats;
    CutstatsConfig cutstats;
    MlpConfig mlp;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::filesystem::path output = "icut_out";
    bool train_classifier = true;

    void validate() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct SeedRun {
    std::uint64_t seed = 0;
    Metrics metrics;
    double realized_invariance_error = 0.0;
};

struct ExperimentResult {
    std::vector<SeedRun> runs;  // sorted by seed
    MetricsSummary summary;
};

/// Optional knobs applied inside a seed's pipeline.
struct PipelineOverrides {
    std::optional<double> invariance_error_target;
};

/// generate/load -> corrupt -> represent -> select -> train -> evaluate.
/// Failures surface as StageError.
SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed, const PipelineOverrides& overrides = {});
ExperimentResult run_experiment(const ExperimentConfig& config, const PipelineOverrides& overrides = {});

/// report.csv and report.txt under the output directory; returns the paths.
std::vector<std::filesystem::path> write_experiment_report(const ExperimentConfig& config,
                                                           const ExperimentResult& result);

enum class AblationKind { invariance_error, dimension_sweep, k_sweep, tau_sweep };
std::string_view to_string(AblationKind k);
AblationKind parse_ablation_kind(std::string_view s);

struct AblationRow {
    double knob = 0.0;
    double realized = 0.0;
    ExperimentResult result;
};

std::vector<AblationRow> run_ablation(AblationKind kind, const ExperimentConfig& base,
                                      const std::vector<double>& grid);

std::vector<std::filesystem::path> write_ablation_report(AblationKind kind, const ExperimentConfig& base,
                                                         const std::vector<AblationRow>& rows);

/// Seed derivation for the individual stages of one run.
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

}  // namespace icut
