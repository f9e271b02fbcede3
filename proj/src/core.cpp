#include "icut/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace icut {

void LabeledDataset::validate() const {
    const std::size_t n = size();
    if (n == 0) throw Error("dataset is empty");
    if (dim() == 0) throw Error("dataset has zero feature dimension");
    if (num_classes < 1) throw Error("num_classes must be positive");
    if (noisy_labels.size() != n || ids.size() != n)
        throw Error("label/id length does not match feature rows");
    if (true_labels && true_labels->size() != n)
        throw Error("true label length does not match feature rows");
    auto check = [&](const std::vector<Label>& labels) {
        for (Label l : labels)
            if (l < 0 || l >= num_classes) throw Error("label out of range: " + std::to_string(l));
    };
    check(noisy_labels);
    if (true_labels) check(*true_labels);
    std::unordered_set<SampleId> seen(ids.begin(), ids.end());
    if (seen.size() != n) throw Error("duplicate sample ids");
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.num_classes = num_classes;
    out.features = Matrix(rows.size(), dim());
    out.noisy_labels.reserve(rows.size());
    out.ids.reserve(rows.size());
    if (true_labels) out.true_labels.emplace().reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t i = rows[r];
        if (i >= size()) throw Error("subset row out of range");
        std::ranges::copy(features.row(i), out.features.row(r).begin());
        out.noisy_labels.push_back(noisy_labels[i]);
        out.ids.push_back(ids[i]);
        if (true_labels) out.true_labels->push_back((*true_labels)[i]);
    }
    return out;
}

std::vector<std::size_t> LabeledDataset::rows_of(std::span<const SampleId> wanted) const {
    std::unordered_map<SampleId, std::size_t> index;
    index.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
    std::vector<std::size_t> rows;
    rows.reserve(wanted.size());
    for (SampleId id : wanted) {
        auto it = index.find(id);
        if (it == index.end()) throw Error("unknown sample id " + std::to_string(id));
        rows.push_back(it->second);
    }
    return rows;
}

const std::vector<Label>& LabeledDataset::truth() const {
    if (!true_labels) throw Error("ground truth unavailable");
    return *true_labels;
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::cutstats: return "cutstats";
        case Method::random: return "random";
        case Method::entropy: return "entropy";
        case Method::forget: return "forget";
        case Method::herding: return "herding";
        case Method::full: return "full";
    }
    return "?";
}

std::string_view to_string(ReprKind k) {
    switch (k) {
        case ReprKind::identity: return "identity";
        case ReprKind::l2norm: return "l2norm";
        case ReprKind::sort: return "sort";
        case ReprKind::external: return "external";
    }
    return "?";
}

Method parse_method(std::string_view s) {
    for (Method m : {Method::cutstats, Method::random, Method::entropy, Method::forget, Method::herding, Method::full})
        if (to_string(m) == s) return m;
    throw Error("unknown selection method '" + std::string(s) + "'");
}

ReprKind parse_repr_kind(std::string_view s) {
    for (ReprKind k : {ReprKind::identity, ReprKind::l2norm, ReprKind::sort, ReprKind::external})
        if (to_string(k) == s) return k;
    throw Error("unknown representation kind '" + std::string(s) + "'");
}

std::size_t retained_count(double tau, std::size_t n) {
    if (!(tau > 0.0) || tau > 1.0) throw Error("tau must lie in (0, 1]");
    const auto m = static_cast<std::size_t>(std::floor(tau * static_cast<double>(n) + 0.5));
    return std::min(m, n);
}

double subset_accuracy(const SelectionResult& selection, const LabeledDataset& dataset) {
    const auto& truth = dataset.truth();
    if (selection.selected.empty()) throw Error("empty selection");
    std::size_t clean = 0;
    for (std::size_t row : dataset.rows_of(selection.selected))
        clean += dataset.noisy_labels[row] == truth[row];
    return static_cast<double>(clean) / static_cast<double>(selection.selected.size());
}

double balanced_error(std::span<const Label> predictions, std::span<const Label> truth, int num_classes) {
    if (predictions.size() != truth.size()) throw Error("prediction/truth length mismatch");
    if (truth.empty()) throw Error("class-conditional rate undefined: no samples");
    if (num_classes <= 0) {
        Label hi = 1;
        for (Label l : truth) hi = std::max(hi, l);
        for (Label l : predictions) hi = std::max(hi, l);
        num_classes = hi + 1;
    }
    std::vector<std::size_t> count(num_classes, 0), miss(num_classes, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const Label t = truth[i];
        if (t < 0 || t >= num_classes) throw Error("truth label out of range");
        ++count[t];
        miss[t] += predictions[i] != t;
    }
    double sum = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        if (count[c] == 0)
            throw Error("class-conditional rate undefined: class " + std::to_string(c) + " absent from truth");
        sum += static_cast<double>(miss[c]) / static_cast<double>(count[c]);
    }
    return sum / num_classes;
}

Metrics selection_metrics(const SelectionResult& selection, const LabeledDataset& dataset) {
    const auto& truth = dataset.truth();
    if (selection.selected.empty()) throw Error("empty selection");
    Metrics m;
    std::size_t clean = 0, yhat1 = 0, yhat1_y0 = 0, yhat0 = 0, yhat0_y1 = 0;
    for (std::size_t row : dataset.rows_of(selection.selected)) {
        const Label yh = dataset.noisy_labels[row];
        const Label y = truth[row];
        clean += yh == y;
        if (yh == 1) {
            ++yhat1;
            yhat1_y0 += y == 0;
        } else if (yh == 0) {
            ++yhat0;
            yhat0_y1 += y == 1;
        }
    }
    const double s = static_cast<double>(selection.selected.size());
    m.subset_accuracy = static_cast<double>(clean) / s;
    m.alpha_hat = yhat1 ? static_cast<double>(yhat1_y0) / static_cast<double>(yhat1) : 0.0;
    m.gamma_hat = yhat0 ? static_cast<double>(yhat0_y1) / static_cast<double>(yhat0) : 0.0;
    m.nonabstain_rate = s / static_cast<double>(dataset.size());
    return m;
}

namespace {

template <class F>
void for_each_field(Metrics& m, F&& f) {
    f(m.classifier_accuracy);
    f(m.subset_accuracy);
    f(m.balanced_error);
    f(m.alpha_hat);
    f(m.gamma_hat);
    f(m.nonabstain_rate);
}

std::vector<double> fields(Metrics m) {
    std::vector<double> v;
    for_each_field(m, [&](double& x) { v.push_back(x); });
    return v;
}

Metrics from_fields(const std::vector<double>& v) {
    Metrics m;
    std::size_t i = 0;
    for_each_field(m, [&](double& x) { x = v[i++]; });
    return m;
}

}  // namespace

MetricsSummary summarize_runs(std::span<const Metrics> runs) {
    if (runs.empty()) throw Error("summarize_runs: no runs");
    const std::size_t n = runs.size();
    const std::size_t width = fields(runs[0]).size();
    std::vector<double> mean(width, 0.0), var(width, 0.0);
    for (const auto& r : runs) {
        const auto v = fields(r);
        for (std::size_t j = 0; j < width; ++j) mean[j] += v[j];
    }
    for (double& x : mean) x /= static_cast<double>(n);
    if (n > 1) {
        for (const auto& r : runs) {
            const auto v = fields(r);
            for (std::size_t j = 0; j < width; ++j) var[j] += (v[j] - mean[j]) * (v[j] - mean[j]);
        }
        for (double& x : var) x = std::sqrt(x / static_cast<double>(n - 1));
    }
    return {from_fields(mean), from_fields(var), n};
}

}  // namespace icut
