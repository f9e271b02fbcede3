#include "icut/baselines.hpp"

#include <algorithm>
#include <iostream>
#include <limits>
#include <numeric>

#include "icut/cutstats.hpp"
#include "icut/rng.hpp"

namespace icut {

SelectionResult random_select(const LabeledDataset& dataset, double tau, std::uint64_t seed) {
    // Keeping the m smallest i.i.d. uniform keys is a uniform sample
    // without replacement, and the keys double as scores.
    std::vector<double> keys(dataset.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        auto rng = make_stream(seed, StreamTag::random_select, static_cast<std::uint64_t>(dataset.ids[i]));
        keys[i] = uniform01(rng);
    }
    auto out = select_smallest(keys, tau, dataset.ids);
    out.method = Method::random;
    return out;
}

SelectionResult entropy_select(const LabeledDataset& dataset, std::span<const double> entropy, double tau) {
    if (entropy.size() != dataset.size()) throw Error("entropy_select: length mismatch");
    auto out = select_smallest(entropy, tau, dataset.ids);
    out.method = Method::entropy;
    return out;
}

SelectionResult forget_select(const LabeledDataset& dataset, std::span<const int> counts, double tau) {
    if (counts.size() != dataset.size()) throw Error("forget_select: length mismatch");
    std::vector<double> scores(counts.begin(), counts.end());
    auto out = select_smallest(scores, tau, dataset.ids);
    out.method = Method::forget;
    return out;
}

SelectionResult herding_select(const RepresentedDataset& rep, double tau) {
    const auto& base = rep.base;
    const std::size_t n = rep.size();
    const std::size_t m = retained_count(tau, n);
    const std::size_t dim = rep.dim();
    for (double v : rep.representations.flat())
        if (!std::isfinite(v)) throw Error("herding_select: representations must be finite");

    const auto classes = static_cast<std::size_t>(base.num_classes);
    std::vector<std::vector<std::size_t>> members(classes);
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(base.noisy_labels[i])].push_back(i);

    // Floor of the proportional share, remainders to the largest classes.
    std::vector<std::size_t> quota(classes, 0);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (members[c].empty()) {
            std::clog << "warning: herding skips class " << c << " (no samples)\n";
            continue;
        }
        quota[c] = m * members[c].size() / n;
        assigned += quota[c];
    }
    std::vector<std::size_t> by_size(classes);
    std::iota(by_size.begin(), by_size.end(), std::size_t{0});
    std::ranges::stable_sort(by_size, [&](std::size_t a, std::size_t b) { return members[a].size() > members[b].size(); });
    for (std::size_t r = 0; assigned < m; r = (r + 1) % classes) {
        const std::size_t c = by_size[r];
        if (quota[c] < members[c].size()) {
            ++quota[c];
            ++assigned;
        }
    }

    std::vector<double> scores(n, static_cast<double>(m));
    SelectionResult out;
    out.method = Method::herding;
    out.representation_kind = rep.kind;
    out.tau = tau;
    std::size_t rank = 0;

    for (std::size_t c = 0; c < classes; ++c) {
        const auto& rows = members[c];
        if (quota[c] == 0) continue;
        std::vector<double> mean(dim, 0.0), running(dim, 0.0), target(dim);
        for (std::size_t i : rows)
            for (std::size_t j = 0; j < dim; ++j) mean[j] += rep.representations(i, j);
        for (double& v : mean) v /= static_cast<double>(rows.size());

        std::vector<char> taken(rows.size(), 0);
        const auto count = static_cast<std::ptrdiff_t>(rows.size());
        for (std::size_t t = 0; t < quota[c]; ++t) {
            // argmin_i ||(running + r_i)/(t+1) - mean|| == argmin_i ||r_i - ((t+1) mean - running)||
            for (std::size_t j = 0; j < dim; ++j) target[j] = static_cast<double>(t + 1) * mean[j] - running[j];
            double best = std::numeric_limits<double>::infinity();
            std::ptrdiff_t best_at = -1;
#pragma omp parallel
            {
                double local = std::numeric_limits<double>::infinity();
                std::ptrdiff_t local_at = -1;
#pragma omp for schedule(static) nowait
                for (std::ptrdiff_t a = 0; a < count; ++a) {
                    if (taken[static_cast<std::size_t>(a)]) continue;
                    const auto r = rep.representations.row(rows[static_cast<std::size_t>(a)]);
                    double s = 0.0;
                    for (std::size_t j = 0; j < dim; ++j) s += (r[j] - target[j]) * (r[j] - target[j]);
                    if (s < local || (s == local && base.ids[rows[static_cast<std::size_t>(a)]] <
                                                        base.ids[rows[static_cast<std::size_t>(local_at)]])) {
                        local = s;
                        local_at = a;
                    }
                }
#pragma omp critical
                {
                    if (local_at >= 0 &&
                        (local < best || (local == best && base.ids[rows[static_cast<std::size_t>(local_at)]] <
                                                               base.ids[rows[static_cast<std::size_t>(best_at)]]))) {
                        best = local;
                        best_at = local_at;
                    }
                }
            }
            const std::size_t pick = rows[static_cast<std::size_t>(best_at)];
            taken[static_cast<std::size_t>(best_at)] = 1;
            for (std::size_t j = 0; j < dim; ++j) running[j] += rep.representations(pick, j);
            scores[pick] = static_cast<double>(rank++);
            out.selected.push_back(base.ids[pick]);
        }
    }
    out.scores = std::move(scores);
    return out;
}

SelectionResult full_select(const LabeledDataset& dataset) {
    SelectionResult out;
    out.method = Method::full;
    out.tau = 1.0;
    out.scores.assign(dataset.size(), 0.0);
    out.selected = dataset.ids;
    return out;
}

}  // namespace icut
