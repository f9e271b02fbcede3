#include "icut/repr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "icut/io.hpp"
#include "icut/rng.hpp"

namespace icut {

std::vector<double> represent_row(ReprKind kind, std::span<const double> x) {
    switch (kind) {
        case ReprKind::identity: return {x.begin(), x.end()};
        case ReprKind::l2norm: {
            double s = 0.0;
            for (double v : x) s += v * v;
            return {std::sqrt(s)};
        }
        case ReprKind::sort: {
            std::vector<double> out(x.begin(), x.end());
            std::ranges::sort(out);
            return out;
        }
        case ReprKind::external: break;
    }
    throw Error("external representations are loaded from file, not computed");
}

RepresentedDataset compute_representation(const LabeledDataset& dataset, ReprKind kind) {
    if (kind == ReprKind::external) throw Error("compute_representation: kind must not be external");
    const std::size_t n = dataset.size();
    const std::size_t m = kind == ReprKind::l2norm ? 1 : dataset.dim();
    RepresentedDataset out{dataset, Matrix(n, m), kind};
    const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        const auto r = represent_row(kind, dataset.features.row(static_cast<std::size_t>(i)));
        std::ranges::copy(r, out.representations.row(static_cast<std::size_t>(i)).begin());
    }
    return out;
}

RepresentedDataset attach_external_representation(const LabeledDataset& dataset, const EmbeddingTable& table) {
    for (double v : table.values.flat())
        if (!std::isfinite(v)) throw Error("non-finite embedding");
    if (table.ids.size() != dataset.size() || table.values.rows() != dataset.size())
        throw Error("row-count mismatch: embedding has " + std::to_string(table.ids.size()) + " rows, dataset has " +
                    std::to_string(dataset.size()));
    if (table.values.cols() == 0) throw Error("embedding has no columns");
    std::unordered_map<SampleId, std::size_t> where;
    where.reserve(table.ids.size());
    for (std::size_t i = 0; i < table.ids.size(); ++i)
        if (!where.emplace(table.ids[i], i).second)
            throw Error("id mismatch: duplicate embedding id " + std::to_string(table.ids[i]));

    RepresentedDataset out{dataset, Matrix(dataset.size(), table.values.cols()), ReprKind::external};
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        auto it = where.find(dataset.ids[r]);
        if (it == where.end()) throw Error("id mismatch: no embedding for id " + std::to_string(dataset.ids[r]));
        std::ranges::copy(table.values.row(it->second), out.representations.row(r).begin());
    }
    return out;
}

RepresentedDataset load_external_representation(const LabeledDataset& dataset, const std::filesystem::path& path) {
    return attach_external_representation(dataset, io::read_embedding_csv(path));
}

InvarianceEstimate estimate_invariance_error(const ScalarMap& fn, Group group, const LabeledDataset& dataset,
                                             std::size_t trials, std::uint64_t seed) {
    if (dataset.size() == 0) throw Error("estimate_invariance_error: empty dataset");
    if (trials == 0) throw Error("estimate_invariance_error: trials must be positive");
    std::vector<double> err(trials);
    const auto count = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t t = 0; t < count; ++t) {
        auto rng = make_stream(seed, StreamTag::invariance, static_cast<std::uint64_t>(t));
        const auto row = dataset.features.row(uniform_below(rng, dataset.size()));
        const auto moved = random_orbit_point(group, row, rng);
        err[static_cast<std::size_t>(t)] = std::abs(fn(row) - fn(moved));
    }
    double sum = 0.0;
    for (double e : err) sum += e;
    const double mean = sum / static_cast<double>(trials);
    double var = 0.0;
    for (double e : err) var += (e - mean) * (e - mean);
    const double sd = trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1)) : 0.0;
    return {mean, sd / std::sqrt(static_cast<double>(trials)), trials};
}

namespace {

double keyed_normal(std::span<const double> x, std::uint64_t seed) {
    std::uint64_t h = mix64(seed ^ 0x3c6ef372fe94f82bULL);
    for (double v : x) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    SplitMix64 rng(h);
    return standard_normal(rng);
}

double norm_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

ScalarMap perturbed_norm_map(double scale, std::uint64_t seed) {
    return [scale, seed](std::span<const double> x) { return norm_of(x) + scale * keyed_normal(x, seed); };
}

PerturbedRepresentation perturb_representation(const RepresentedDataset& rep, double target_error, Group group,
                                               std::uint64_t seed, std::size_t trials) {
    if (rep.kind != ReprKind::l2norm) throw Error("perturb_representation: requires an l2norm representation");
    if (!(target_error >= 0.0)) throw Error("perturb_representation: target error must be non-negative");
    const auto& base = rep.base;
    const std::uint64_t noise_seed = mix64(seed ^ static_cast<std::uint64_t>(StreamTag::perturb));
    const std::uint64_t calib_seed = mix64(noise_seed + 1);
    const std::uint64_t holdout_seed = mix64(noise_seed + 2);

    if (target_error == 0.0) {
        const auto realized = estimate_invariance_error(perturbed_norm_map(0.0, noise_seed), group, base, trials,
                                                        holdout_seed);
        return {rep, 0.0, realized.mean};
    }

    // Calibration pairs are drawn once; each candidate scale is then a cheap
    // re-evaluation with common random numbers.
    struct Pair {
        double norm_gap;
        double xi_gap;
    };
    std::vector<Pair> pairs(trials);
    const auto count = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t t = 0; t < count; ++t) {
        auto rng = make_stream(calib_seed, StreamTag::invariance, static_cast<std::uint64_t>(t));
        const auto row = base.features.row(uniform_below(rng, base.size()));
        const auto moved = random_orbit_point(group, row, rng);
        pairs[static_cast<std::size_t>(t)] = {norm_of(row) - norm_of(moved),
                                              keyed_normal(row, noise_seed) - keyed_normal(moved, noise_seed)};
    }
    auto error_at = [&](double scale) {
        double sum = 0.0;
        for (const auto& p : pairs) sum += std::abs(p.norm_gap + scale * p.xi_gap);
        return sum / static_cast<double>(pairs.size());
    };

    double lo = 0.0, hi = target_error;
    int doublings = 0;
    while (error_at(hi) < target_error) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > 60) throw Error("perturb_representation: calibration failed to bracket target");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double e = error_at(mid);
        if (std::abs(e - target_error) <= 1e-4 * target_error) {
            lo = hi = mid;
            break;
        }
        (e < target_error ? lo : hi) = mid;
    }
    const double scale = 0.5 * (lo + hi);

    const auto map = perturbed_norm_map(scale, noise_seed);
    const auto realized = estimate_invariance_error(map, group, base, trials, holdout_seed);
    if (std::abs(realized.mean - target_error) > 0.05 * target_error)
        throw Error("perturb_representation: held-out invariance error " + std::to_string(realized.mean) +
                    " misses target " + std::to_string(target_error) + " by more than 5%");

    PerturbedRepresentation out{rep, scale, realized.mean};
    const auto rows = static_cast<std::ptrdiff_t>(base.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i)
        out.rep.representations(static_cast<std::size_t>(i), 0) = map(base.features.row(static_cast<std::size_t>(i)));
    return out;
}

}  // namespace icut
