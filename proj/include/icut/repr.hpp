#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "icut/core.hpp"
#include "icut/datagen.hpp"

namespace icut {

struct RepresentedDataset {
    LabeledDataset base;
    Matrix representations;
    ReprKind kind = ReprKind::identity;

    std::size_t dim() const { return representations.cols(); }
    std::size_t size() const { return representations.rows(); }
};

/// F(x) for a single row. kind must not be external.
std::vector<double> represent_row(ReprKind kind, std::span<const double> x);

RepresentedDataset compute_representation(const LabeledDataset& dataset, ReprKind kind);

/// Id-keyed embedding rows, as read from an embedding CSV.
struct EmbeddingTable {
    std::vector<SampleId> ids;
    Matrix values;
};

/// Matches embedding rows to dataset rows by id. Throws Error with
/// "row-count mismatch", "id mismatch" or "non-finite embedding".
RepresentedDataset attach_external_representation(const LabeledDataset& dataset,
                                                  const EmbeddingTable& table);

RepresentedDataset load_external_representation(const LabeledDataset& dataset,
                                                const std::filesystem::path& path);

using ScalarMap = std::function<double(std::span<const double>)>;

struct InvarianceEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t trials = 0;
};

/// Monte Carlo mean of |fn(x) - fn(g.x)| over dataset rows and group
/// elements drawn per trial.
InvarianceEstimate estimate_invariance_error(const ScalarMap& fn, Group group,
                                             const LabeledDataset& dataset, std::size_t trials,
                                             std::uint64_t seed);

struct PerturbedRepresentation {
    RepresentedDataset rep;
    double noise_scale = 0.0;
    double realized_error = 0.0;
};

/// Scalar map ||x|| + scale * xi(x), where xi is a standard normal keyed by
/// the bytes of x and the seed. This is the corrupted invariant used by the
/// invariance-error ablation.
ScalarMap perturbed_norm_map(double scale, std::uint64_t seed);

/// Calibrates the scale of perturbed_norm_map by bisection until the
/// invariance error on held-out actions is within 5% of target_error.
/// Requires an l2norm representation.
PerturbedRepresentation perturb_representation(const RepresentedDataset& rep, double target_error,
                                               Group group, std::uint64_t seed,
                                               std::size_t trials = 4000);

}  // namespace icut
