#pragma once

#include <span>
#include <utility>
#include <vector>

#include "icut/core.hpp"

namespace icut {

struct RepresentedDataset;

/// Exact k-nearest neighbours of every row, self excluded. Rows are ordered
/// by ascending (distance, id).
class NeighborTable {
public:
    NeighborTable() = default;
    NeighborTable(std::size_t n, std::size_t k)
        : n_(n), k_(k), rows_(n * k), distances_(n * k) {}

    std::size_t size() const { return n_; }
    std::size_t k() const { return k_; }

    /// Row positions (not ids) of the neighbours of row i.
    std::span<const std::size_t> neighbors(std::size_t i) const { return {rows_.data() + i * k_, k_}; }
    std::span<const double> distances(std::size_t i) const { return {distances_.data() + i * k_, k_}; }
    std::span<std::size_t> neighbors(std::size_t i) { return {rows_.data() + i * k_, k_}; }
    std::span<double> distances(std::size_t i) { return {distances_.data() + i * k_, k_}; }

    bool operator==(const NeighborTable&) const = default;

private:
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    std::vector<std::size_t> rows_;
    std::vector<double> distances_;
};

/// Squared Euclidean distance, summed in index order. Symmetric in its
/// arguments bit for bit.
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Blocked brute-force search, OpenMP-parallel over query blocks.
/// Ties in distance go to the smaller id. Requires 1 <= k <= n-1.
NeighborTable build_neighbor_table(const Matrix& points, std::span<const SampleId> ids, std::size_t k);
NeighborTable build_neighbor_table(const RepresentedDataset& rep, std::size_t k);

namespace reference {
/// Single-threaded row-at-a-time scan kept to cross-check the blocked kernel.
NeighborTable build_neighbor_table(const Matrix& points, std::span<const SampleId> ids, std::size_t k);
}  // namespace reference

/// Leave-one-out majority vote; vote ties go to the smallest class id.
std::vector<Label> knn_predict(const NeighborTable& table, std::span<const Label> labels, int num_classes);

/// (lambda0, lambda1) = per-class recall of binary predictions.
std::pair<double, double> estimate_class_accuracies(std::span<const Label> predicted,
                                                    std::span<const Label> truth);

}  // namespace icut
