#pragma once

#include <cstdint>
#include <vector>

#include "icut/core.hpp"
#include "icut/rng.hpp"

namespace testutil {

/// n x d uniform points, labels uniform over classes, ids 0..n-1, no noise.
inline icut::LabeledDataset random_dataset(std::size_t n, std::size_t d, int classes, std::uint64_t seed) {
    icut::LabeledDataset ds;
    ds.features = icut::Matrix(n, d);
    auto rng = icut::make_stream(seed, icut::StreamTag::features);
    for (double& v : ds.features.flat()) v = icut::uniform(rng, -1.0, 1.0);
    ds.num_classes = classes;
    std::vector<icut::Label> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<icut::Label>(icut::uniform_below(rng, static_cast<std::uint64_t>(classes)));
        ds.ids.push_back(static_cast<icut::SampleId>(i));
    }
    ds.true_labels = y;
    ds.noisy_labels = y;
    return ds;
}

inline std::vector<std::vector<double>> rows(const icut::Matrix& m) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

}  // namespace testutil
