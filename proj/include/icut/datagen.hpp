#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "icut/core.hpp"
#include "icut/rng.hpp"

namespace icut {

enum class Group { orthogonal, permutation };
enum class ThresholdMode { zero, mean };

std::string_view to_string(Group g);
Group parse_group(std::string_view s);

/// Coefficients of k1 sin(c1 s) + k2 sin^2(c2 s) + k3 cos(c3 s), s = x'x.
struct OrthogonalParams {
    double c1 = 1.0, c2 = 2.0, c3 = 3.0;
    double k1 = 2.0, k2 = 3.0, k3 = 4.0;
};

struct SyntheticSpec {
    Group group = Group::orthogonal;
    std::size_t d = 100;
    std::size_t n_train = 20000;
    std::size_t n_test = 5000;
    double lo = 0.0;
    double hi = 1.0;
    OrthogonalParams orthogonal;
    int powers = 5;  // l: sum over x_i^1 .. x_i^l
    ThresholdMode threshold_mode = ThresholdMode::zero;
    std::uint64_t seed = 0;

    /// Defaults for a group: d = 100 / zero threshold for orthogonal,
    /// d = 5 / mean threshold for permutation; features on [0, 1).
    static SyntheticSpec defaults(Group g);
    void validate() const;
};

struct SyntheticSplit {
    LabeledDataset train;
    LabeledDataset test;
    double threshold = 0.0;
};

/// h(x) for the spec's group.
double generating_function(const SyntheticSpec& spec, std::span<const double> x);

/// Draws train/test features i.i.d. uniform and labels them by
/// 1[h(x) >= threshold]. Noisy labels start equal to the true labels.
/// Train ids are 0..n_train-1, test ids continue from n_train.
SyntheticSplit generate_synthetic(const SyntheticSpec& spec);

/// Haar-uniform rotation in SO(d), row-major d x d.
Matrix haar_rotation(std::size_t d, SplitMix64& rng);

/// Uniformly random permutation of 0..d-1.
std::vector<std::size_t> random_permutation(std::size_t d, SplitMix64& rng);

/// g . x for a group element drawn from the seed.
std::vector<double> apply_group_action(Group group, std::span<const double> x, std::uint64_t seed);
std::vector<double> apply_group_action(Group group, std::span<const double> x, SplitMix64& rng);

/// A point drawn uniformly from the orbit of x. Same law as g . x for a
/// random g, but the orthogonal case samples ||x|| u with u uniform on the
/// sphere instead of building a d x d rotation.
std::vector<double> random_orbit_point(Group group, std::span<const double> x, SplitMix64& rng);

struct NoiseSpec {
    double flip_probability = 0.0;
    int num_classes = 2;
    std::uint64_t seed = 0;
};

/// Each sample flips with probability p to a uniformly chosen other class.
/// The stream for a sample is keyed by its id.
LabeledDataset inject_label_noise(LabeledDataset dataset, const NoiseSpec& noise);

}  // namespace icut
