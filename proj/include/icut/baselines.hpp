#pragma once

#include <cstdint>
#include <span>

#include "icut/core.hpp"
#include "icut/repr.hpp"

namespace icut {

/// Uniform sample without replacement of round(tau * n) ids.
SelectionResult random_select(const LabeledDataset& dataset, double tau, std::uint64_t seed);

/// Lowest-entropy samples.
SelectionResult entropy_select(const LabeledDataset& dataset, std::span<const double> entropy, double tau);

/// Least-forgotten samples.
SelectionResult forget_select(const LabeledDataset& dataset, std::span<const int> counts, double tau);

/// Greedy herding per noisy class in representation space. Each class gets
/// floor(m * n_c / n) picks, remainders go to the largest classes first.
/// Score = pick order for selected samples, m for the rest.
SelectionResult herding_select(const RepresentedDataset& rep, double tau);

/// Every sample, in dataset order (the noisy-complete configuration).
SelectionResult full_select(const LabeledDataset& dataset);

}  // namespace icut
