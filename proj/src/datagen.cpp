#include "icut/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace icut {

std::string_view to_string(Group g) {
    return g == Group::orthogonal ? "orthogonal" : "permutation";
}

Group parse_group(std::string_view s) {
    if (s == "orthogonal") return Group::orthogonal;
    if (s == "permutation") return Group::permutation;
    throw Error("unknown group '" + std::string(s) + "'");
}

SyntheticSpec SyntheticSpec::defaults(Group g) {
    SyntheticSpec spec;
    spec.group = g;
    if (g == Group::orthogonal) {
        spec.d = 100;
        spec.threshold_mode = ThresholdMode::zero;
    } else {
        spec.d = 5;
        spec.threshold_mode = ThresholdMode::mean;
    }
    return spec;
}

void SyntheticSpec::validate() const {
    if (d == 0) throw Error("synthetic spec: d must be at least 1");
    if (n_train == 0) throw Error("synthetic spec: n_train must be positive");
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw Error("synthetic spec: degenerate feature range");
    if (group == Group::orthogonal && threshold_mode != ThresholdMode::zero)
        throw Error("synthetic spec: orthogonal data is thresholded at zero");
    if (group == Group::permutation && threshold_mode != ThresholdMode::mean)
        throw Error("synthetic spec: permutation data is thresholded at the train mean");
    if (group == Group::permutation && powers < 1) throw Error("synthetic spec: powers must be >= 1");
}

double generating_function(const SyntheticSpec& spec, std::span<const double> x) {
    if (spec.group == Group::orthogonal) {
        double s = 0.0;
        for (double v : x) s += v * v;
        const auto& p = spec.orthogonal;
        const double s2 = std::sin(p.c2 * s);
        return p.k1 * std::sin(p.c1 * s) + p.k2 * s2 * s2 + p.k3 * std::cos(p.c3 * s);
    }
    // Summed in sorted order so that h(pi x) == h(x) bit for bit.
    std::vector<double> sorted(x.begin(), x.end());
    std::ranges::sort(sorted);
    double h = 0.0;
    for (double v : sorted) {
        double power = 1.0;
        for (int k = 1; k <= spec.powers; ++k) {
            power *= v;
            h += std::sin(power);
        }
    }
    return h;
}

SyntheticSplit generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t total = spec.n_train + spec.n_test;
    Matrix features(total, spec.d);
    std::vector<double> h(total);

    const auto n = static_cast<std::ptrdiff_t>(total);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto rng = make_stream(spec.seed, StreamTag::features, static_cast<std::uint64_t>(i));
        auto row = features.row(static_cast<std::size_t>(i));
        for (double& v : row) v = uniform(rng, spec.lo, spec.hi);
        h[static_cast<std::size_t>(i)] = generating_function(spec, row);
    }

    double threshold = 0.0;
    if (spec.threshold_mode == ThresholdMode::mean) {
        threshold = std::accumulate(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(spec.n_train), 0.0) /
                    static_cast<double>(spec.n_train);
    }

    auto make_part = [&](std::size_t begin, std::size_t count) {
        LabeledDataset part;
        part.num_classes = 2;
        part.features = Matrix(count, spec.d);
        part.true_labels.emplace(count);
        part.noisy_labels.resize(count);
        part.ids.resize(count);
        for (std::size_t r = 0; r < count; ++r) {
            const std::size_t i = begin + r;
            std::ranges::copy(features.row(i), part.features.row(r).begin());
            const Label y = h[i] >= threshold ? 1 : 0;
            (*part.true_labels)[r] = y;
            part.noisy_labels[r] = y;
            part.ids[r] = static_cast<SampleId>(i);
        }
        return part;
    };

    SyntheticSplit split;
    split.train = make_part(0, spec.n_train);
    split.test = make_part(spec.n_train, spec.n_test);
    split.threshold = threshold;
    return split;
}

namespace {

// Sign of det(a) by LU with partial pivoting; a is destroyed.
int determinant_sign(std::vector<double> a, std::size_t d) {
    int sign = 1;
    for (std::size_t c = 0; c < d; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < d; ++r)
            if (std::abs(a[r * d + c]) > std::abs(a[pivot * d + c])) pivot = r;
        if (a[pivot * d + c] == 0.0) return 0;
        if (pivot != c) {
            for (std::size_t j = 0; j < d; ++j) std::swap(a[c * d + j], a[pivot * d + j]);
            sign = -sign;
        }
        if (a[c * d + c] < 0) sign = -sign;
        for (std::size_t r = c + 1; r < d; ++r) {
            const double f = a[r * d + c] / a[c * d + c];
            for (std::size_t j = c; j < d; ++j) a[r * d + j] -= f * a[c * d + j];
        }
    }
    return sign;
}

}  // namespace

Matrix haar_rotation(std::size_t d, SplitMix64& rng) {
    if (d == 0) throw Error("haar_rotation: d must be positive");
    // Column-major working copy: cols[j * d + i] = A(i, j).
    std::vector<double> cols(d * d);
    for (double& v : cols) v = standard_normal(rng);
    std::vector<double> a_rowmajor(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) a_rowmajor[i * d + j] = cols[j * d + i];

    // Modified Gram-Schmidt with one re-orthogonalisation pass. The
    // triangular factor then has a positive diagonal, which is the sign
    // convention that makes Q Haar-distributed over O(d).
    for (std::size_t j = 0; j < d; ++j) {
        double* q = cols.data() + j * d;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t p = 0; p < j; ++p) {
                const double* prev = cols.data() + p * d;
                double dot = 0.0;
                for (std::size_t i = 0; i < d; ++i) dot += prev[i] * q[i];
                for (std::size_t i = 0; i < d; ++i) q[i] -= dot * prev[i];
            }
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < d; ++i) norm += q[i] * q[i];
        norm = std::sqrt(norm);
        if (norm == 0.0) throw Error("haar_rotation: singular draw");
        for (std::size_t i = 0; i < d; ++i) q[i] /= norm;
    }

    // det(Q) has the sign of det(A) because R has a positive diagonal.
    const bool flip = determinant_sign(std::move(a_rowmajor), d) < 0;
    Matrix q(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) q(i, j) = (flip && j == 0 ? -1.0 : 1.0) * cols[j * d + i];
    return q;
}

std::vector<std::size_t> random_permutation(std::size_t d, SplitMix64& rng) {
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = d; i > 1; --i) std::swap(perm[i - 1], perm[uniform_below(rng, i)]);
    return perm;
}

std::vector<double> apply_group_action(Group group, std::span<const double> x, SplitMix64& rng) {
    const std::size_t d = x.size();
    if (d == 0) throw Error("apply_group_action: empty vector");
    std::vector<double> out(d, 0.0);
    if (group == Group::orthogonal) {
        const Matrix q = haar_rotation(d, rng);
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            const auto qi = q.row(i);
            for (std::size_t j = 0; j < d; ++j) acc += qi[j] * x[j];
            out[i] = acc;
        }
    } else {
        const auto perm = random_permutation(d, rng);
        for (std::size_t i = 0; i < d; ++i) out[i] = x[perm[i]];
    }
    return out;
}

std::vector<double> apply_group_action(Group group, std::span<const double> x, std::uint64_t seed) {
    auto rng = make_stream(seed, StreamTag::group_action);
    return apply_group_action(group, x, rng);
}

std::vector<double> random_orbit_point(Group group, std::span<const double> x, SplitMix64& rng) {
    if (group == Group::permutation) return apply_group_action(group, x, rng);
    if (x.empty()) throw Error("random_orbit_point: empty vector");
    double norm = 0.0;
    for (double v : x) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<double> u(x.size());
    double len = 0.0;
    while (len == 0.0) {
        len = 0.0;
        for (double& v : u) {
            v = standard_normal(rng);
            len += v * v;
        }
    }
    len = std::sqrt(len);
    for (double& v : u) v *= norm / len;
    return u;
}

LabeledDataset inject_label_noise(LabeledDataset dataset, const NoiseSpec& noise) {
    if (noise.num_classes < 2) throw Error("label noise needs at least 2 classes");
    if (!(noise.flip_probability >= 0.0 && noise.flip_probability <= 1.0))
        throw Error("flip probability must lie in [0, 1]");
    const auto& truth = dataset.truth();
    dataset.num_classes = std::max(dataset.num_classes, noise.num_classes);
    const std::size_t n = dataset.size();
    dataset.noisy_labels.resize(n);
    const auto classes = static_cast<std::uint64_t>(noise.num_classes);
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = make_stream(noise.seed, StreamTag::noise, static_cast<std::uint64_t>(dataset.ids[i]));
        const Label y = truth[i];
        Label out = y;
        if (uniform01(rng) < noise.flip_probability) {
            const auto r = static_cast<Label>(uniform_below(rng, classes - 1));
            out = r < y ? r : r + 1;
        }
        dataset.noisy_labels[i] = out;
    }
    return dataset;
}

}  // namespace icut
