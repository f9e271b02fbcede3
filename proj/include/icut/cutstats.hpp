#pragma once

#include <optional>
#include <span>
#include <vector>

#include "icut/core.hpp"
#include "icut/knn.hpp"
#include "icut/repr.hpp"

namespace icut {

struct CutstatsConfig {
    std::size_t k = 20;
    double tau = 0.4;
    /// Per-class P(yhat = c). Empty means the empirical noisy-label frequencies.
    std::optional<std::vector<double>> priors;
    ReprKind representation_kind = ReprKind::identity;

    void validate() const;
};

/// Resolved per-class priors for the given labels.
std::vector<double> class_priors(const CutstatsConfig& config, std::span<const Label> noisy,
                                 int num_classes);

/// z_i = (J_i - mu_i) / sigma_i with weights 1 / (1 + dist) taken from the
/// table (representation-space distances). OpenMP-parallel over samples.
std::vector<double> cutstats_scores(const RepresentedDataset& rep, const NeighborTable& table,
                                    const CutstatsConfig& config);

namespace reference {
std::vector<double> cutstats_scores(const RepresentedDataset& rep, const NeighborTable& table,
                                    const CutstatsConfig& config);
}  // namespace reference

/// Keeps round(tau * n) ids with the smallest score; ties by ascending id.
/// Only scores, selected and tau are filled in.
SelectionResult select_smallest(std::span<const double> scores, double tau,
                                std::span<const SampleId> ids);

/// Neighbour table, scores and top-tau selection in one call.
SelectionResult run_cutstats(const RepresentedDataset& rep, const CutstatsConfig& config);

}  // namespace icut
