#include "icut/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icut/repr.hpp"

namespace icut {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    // Eight interleaved partial sums, combined in a fixed tree. The lane of
    // a coordinate depends only on its index, so the value is symmetric in
    // (a, b) and identical between the blocked and reference kernels.
    constexpr std::size_t lanes = 8;
    double acc[lanes] = {};
    const std::size_t n = a.size();
    const double* pa = a.data();
    const double* pb = b.data();
    std::size_t i = 0;
    for (; i + lanes <= n; i += lanes)
        for (std::size_t j = 0; j < lanes; ++j) {
            const double t = pa[i + j] - pb[i + j];
            acc[j] += t * t;
        }
    for (std::size_t j = 0; i < n; ++i, ++j) {
        const double t = pa[i] - pb[i];
        acc[j] += t * t;
    }
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

namespace {

struct Candidate {
    double d2;
    SampleId id;
    std::size_t row;
};

constexpr bool closer(const Candidate& a, const Candidate& b) {
    return a.d2 < b.d2 || (a.d2 == b.d2 && a.id < b.id);
}

// Sorted k-best list with insertion; k is small.
class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) { items_.reserve(k + 1); }

    void offer(const Candidate& c) {
        if (items_.size() == k_ && !closer(c, items_.back())) return;
        auto pos = std::upper_bound(items_.begin(), items_.end(), c, closer);
        items_.insert(pos, c);
        if (items_.size() > k_) items_.pop_back();
    }

    const std::vector<Candidate>& items() const { return items_; }

private:
    std::size_t k_;
    std::vector<Candidate> items_;
};

void check_args(const Matrix& points, std::span<const SampleId> ids, std::size_t k) {
    if (ids.size() != points.rows()) throw Error("neighbor table: id count does not match rows");
    if (k == 0) throw Error("neighbor table: k must be at least 1");
    if (k >= points.rows()) throw Error("neighbor table: k must be smaller than n");
}

void store_row(NeighborTable& table, std::size_t i, const std::vector<Candidate>& best) {
    auto nb = table.neighbors(i);
    auto ds = table.distances(i);
    for (std::size_t j = 0; j < best.size(); ++j) {
        nb[j] = best[j].row;
        ds[j] = std::sqrt(best[j].d2);
    }
}

}  // namespace

NeighborTable build_neighbor_table(const Matrix& points, std::span<const SampleId> ids, std::size_t k) {
    check_args(points, ids, k);
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    NeighborTable table(n, k);

    constexpr std::size_t query_block = 32;
    const std::size_t ref_block = std::max<std::size_t>(16, 32768 / std::max<std::size_t>(d, 1));
    const auto blocks = static_cast<std::ptrdiff_t>((n + query_block - 1) / query_block);

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t qb = 0; qb < blocks; ++qb) {
        const std::size_t q0 = static_cast<std::size_t>(qb) * query_block;
        const std::size_t q1 = std::min(n, q0 + query_block);
        std::vector<TopK> best(q1 - q0, TopK(k));
        for (std::size_t r0 = 0; r0 < n; r0 += ref_block) {
            const std::size_t r1 = std::min(n, r0 + ref_block);
            for (std::size_t q = q0; q < q1; ++q) {
                const auto qrow = points.row(q);
                auto& heap = best[q - q0];
                for (std::size_t r = r0; r < r1; ++r) {
                    if (r == q) continue;
                    heap.offer({squared_distance(qrow, points.row(r)), ids[r], r});
                }
            }
        }
        for (std::size_t q = q0; q < q1; ++q) store_row(table, q, best[q - q0].items());
    }
    return table;
}

NeighborTable build_neighbor_table(const RepresentedDataset& rep, std::size_t k) {
    return build_neighbor_table(rep.representations, rep.base.ids, k);
}

namespace reference {

NeighborTable build_neighbor_table(const Matrix& points, std::span<const SampleId> ids, std::size_t k) {
    check_args(points, ids, k);
    const std::size_t n = points.rows();
    NeighborTable table(n, k);
    std::vector<Candidate> all;
    all.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        all.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) all.push_back({squared_distance(points.row(i), points.row(j)), ids[j], j});
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
        all.resize(k);
        store_row(table, i, all);
    }
    return table;
}

}  // namespace reference

std::vector<Label> knn_predict(const NeighborTable& table, std::span<const Label> labels, int num_classes) {
    if (labels.size() != table.size()) throw Error("knn_predict: label count does not match table");
    if (num_classes < 1) throw Error("knn_predict: num_classes must be positive");
    std::vector<Label> out(table.size());
    std::vector<std::size_t> votes(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < table.size(); ++i) {
        std::ranges::fill(votes, 0);
        for (std::size_t j : table.neighbors(i)) {
            const Label l = labels[j];
            if (l < 0 || l >= num_classes) throw Error("knn_predict: label out of range");
            ++votes[static_cast<std::size_t>(l)];
        }
        // max_element returns the first maximum, i.e. the smallest class id.
        out[i] = static_cast<Label>(std::ranges::max_element(votes) - votes.begin());
    }
    return out;
}

std::pair<double, double> estimate_class_accuracies(std::span<const Label> predicted, std::span<const Label> truth) {
    if (predicted.size() != truth.size()) throw Error("class accuracies: length mismatch");
    std::size_t n0 = 0, n1 = 0, hit0 = 0, hit1 = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 0) {
            ++n0;
            hit0 += predicted[i] == 0;
        } else if (truth[i] == 1) {
            ++n1;
            hit1 += predicted[i] == 1;
        } else {
            throw Error("class accuracies: labels must be binary");
        }
    }
    if (n0 == 0 || n1 == 0) throw Error("class accuracies: a class is absent from the truth labels");
    return {static_cast<double>(hit0) / static_cast<double>(n0), static_cast<double>(hit1) / static_cast<double>(n1)};
}

}  // namespace icut
