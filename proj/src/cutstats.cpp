#include "icut/cutstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace icut {

void CutstatsConfig::validate() const {
    if (k == 0) throw Error("cutstats: k must be at least 1");
    if (!(tau > 0.0) || tau > 1.0) throw Error("cutstats: tau must lie in (0, 1]");
    if (priors) {
        double sum = 0.0;
        for (double p : *priors) {
            if (!(p >= 0.0 && p <= 1.0)) throw Error("cutstats: priors must lie in [0, 1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw Error("cutstats: priors must sum to 1");
    }
}

std::vector<double> class_priors(const CutstatsConfig& config, std::span<const Label> noisy, int num_classes) {
    if (config.priors) {
        if (static_cast<int>(config.priors->size()) < num_classes)
            throw Error("cutstats: priors do not cover every class");
        return *config.priors;
    }
    if (noisy.empty()) throw Error("cutstats: no labels to estimate priors from");
    std::vector<double> p(static_cast<std::size_t>(num_classes), 0.0);
    for (Label l : noisy) {
        if (l < 0 || l >= num_classes) throw Error("cutstats: label out of range");
        p[static_cast<std::size_t>(l)] += 1.0;
    }
    for (double& v : p) v /= static_cast<double>(noisy.size());
    return p;
}

namespace {

void check_inputs(const RepresentedDataset& rep, const NeighborTable& table) {
    if (table.size() != rep.size()) throw Error("cutstats: neighbor table was built on a different dataset");
    if (rep.base.noisy_labels.size() != rep.size()) throw Error("cutstats: label count mismatch");
}

double z_score(std::size_t i, const NeighborTable& table, std::span<const Label> labels,
               std::span<const double> priors) {
    const Label own = labels[i];
    const double p = priors[static_cast<std::size_t>(own)];
    const auto nb = table.neighbors(i);
    const auto dist = table.distances(i);
    double cut = 0.0, wsum = 0.0, w2sum = 0.0;
    for (std::size_t j = 0; j < nb.size(); ++j) {
        const double w = 1.0 / (1.0 + dist[j]);
        if (labels[nb[j]] != own) cut += w;
        wsum += w;
        w2sum += w * w;
    }
    const double mu = (1.0 - p) * wsum;
    const double var = p * (1.0 - p) * w2sum;
    if (!(var > 0.0)) throw Error("cutstats: degenerate prior for class " + std::to_string(own));
    return (cut - mu) / std::sqrt(var);
}

}  // namespace

std::vector<double> cutstats_scores(const RepresentedDataset& rep, const NeighborTable& table,
                                    const CutstatsConfig& config) {
    config.validate();
    check_inputs(rep, table);
    const auto priors = class_priors(config, rep.base.noisy_labels, rep.base.num_classes);
    const auto& labels = rep.base.noisy_labels;
    std::vector<double> z(rep.size());
    const auto n = static_cast<std::ptrdiff_t>(rep.size());
    bool degenerate = false;
#pragma omp parallel for schedule(static) reduction(|| : degenerate)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto own = labels[static_cast<std::size_t>(i)];
        const double p = priors[static_cast<std::size_t>(own)];
        if (!(p > 0.0 && p < 1.0)) {
            degenerate = true;
            continue;
        }
        z[static_cast<std::size_t>(i)] = z_score(static_cast<std::size_t>(i), table, labels, priors);
    }
    if (degenerate) throw Error("cutstats: degenerate prior (P(yhat) in {0, 1})");
    return z;
}

namespace reference {

std::vector<double> cutstats_scores(const RepresentedDataset& rep, const NeighborTable& table,
                                    const CutstatsConfig& config) {
    config.validate();
    check_inputs(rep, table);
    const auto priors = class_priors(config, rep.base.noisy_labels, rep.base.num_classes);
    std::vector<double> z(rep.size());
    for (std::size_t i = 0; i < rep.size(); ++i) z[i] = z_score(i, table, rep.base.noisy_labels, priors);
    return z;
}

}  // namespace reference

SelectionResult select_smallest(std::span<const double> scores, double tau, std::span<const SampleId> ids) {
    if (scores.size() != ids.size()) throw Error("select: score count does not match ids");
    for (double s : scores)
        if (!std::isfinite(s)) throw Error("select: scores must be finite");
    const std::size_t m = retained_count(tau, scores.size());
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b] || (scores[a] == scores[b] && ids[a] < ids[b]);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(), better);
    SelectionResult out;
    out.scores.assign(scores.begin(), scores.end());
    out.tau = tau;
    out.selected.reserve(m);
    for (std::size_t r = 0; r < m; ++r) out.selected.push_back(ids[order[r]]);
    return out;
}

SelectionResult run_cutstats(const RepresentedDataset& rep, const CutstatsConfig& config) {
    config.validate();
    const auto table = build_neighbor_table(rep, config.k);
    auto out = select_smallest(cutstats_scores(rep, table, config), config.tau, rep.base.ids);
    out.method = Method::cutstats;
    out.representation_kind = rep.kind;
    out.k = config.k;
    return out;
}

}  // namespace icut
