#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace icut {

using Label = std::int32_t;
using SampleId = std::int64_t;

/// Raised for every contract violation inside the library. The CLI maps it
/// to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Features with (optional) ground truth and observed noisy labels.
struct LabeledDataset {
    Matrix features;
    std::optional<std::vector<Label>> true_labels;
    std::vector<Label> noisy_labels;
    int num_classes = 2;
    std::vector<SampleId> ids;

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }

    /// Throws Error when any structural invariant is broken.
    void validate() const;

    /// Rows in the given order; labels and ids follow.
    LabeledDataset subset(std::span<const std::size_t> rows) const;

    /// Row positions of the given ids. Throws on unknown ids.
    std::vector<std::size_t> rows_of(std::span<const SampleId> wanted) const;

    const std::vector<Label>& truth() const;
};

enum class Method { cutstats, random, entropy, forget, herding, full };
enum class ReprKind { identity, l2norm, sort, external };

std::string_view to_string(Method m);
std::string_view to_string(ReprKind k);
Method parse_method(std::string_view s);
ReprKind parse_repr_kind(std::string_view s);

struct SelectionResult {
    std::vector<double> scores;       // one per dataset row, dataset order
    std::vector<SampleId> selected;   // retained ids, best first
    Method method = Method::cutstats;
    ReprKind representation_kind = ReprKind::identity;
    std::size_t k = 0;
    double tau = 1.0;
};

struct Metrics {
    double classifier_accuracy = 0.0;
    double subset_accuracy = 0.0;
    double balanced_error = 0.0;
    double alpha_hat = 0.0;
    double gamma_hat = 0.0;
    double nonabstain_rate = 0.0;
};

struct MetricsSummary {
    Metrics mean;
    Metrics stddev;
    std::size_t runs = 0;
};

/// round(tau * n), half up. tau must lie in (0, 1].
std::size_t retained_count(double tau, std::size_t n);

double subset_accuracy(const SelectionResult& selection, const LabeledDataset& dataset);

/// Macro-average of per-class miss rates over classes 0..C-1, where C is
/// num_classes or (when 0) one past the largest label seen.
double balanced_error(std::span<const Label> predictions, std::span<const Label> truth,
                      int num_classes = 0);

/// Fills subset_accuracy, alpha_hat, gamma_hat and nonabstain_rate for a
/// binary selection. alpha = P[y=0 | yhat=1], gamma = P[y=1 | yhat=0] inside
/// the subset; a rate whose conditioning cell is empty is reported as 0.
Metrics selection_metrics(const SelectionResult& selection, const LabeledDataset& dataset);

/// Field-wise mean and sample standard deviation (n-1; 0 for one run).
MetricsSummary summarize_runs(std::span<const Metrics> runs);

}  // namespace icut
