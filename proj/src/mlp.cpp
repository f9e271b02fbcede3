#include "icut/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "icut/parallel.hpp"
#include "icut/rng.hpp"

namespace icut {

void MlpConfig::validate() const {
    if (hidden_units == 0 || epochs == 0 || batch_size == 0) throw Error("mlp config: sizes must be positive");
    if (!(learning_rate > 0.0)) throw Error("mlp config: learning rate must be positive");
    if (num_classes < 2) throw Error("mlp config: at least two classes");
}

Mlp::Mlp(std::size_t input_dim, std::size_t hidden, int num_classes)
    : w1(hidden, input_dim), w2(num_classes == 2 ? 1 : static_cast<std::size_t>(num_classes), hidden),
      b1(hidden, 0.0), b2(num_classes == 2 ? 1 : static_cast<std::size_t>(num_classes), 0.0),
      input_dim_(input_dim), hidden_(hidden), num_classes_(num_classes) {
    if (input_dim == 0 || hidden == 0 || num_classes < 2) throw Error("mlp: invalid shape");
}

std::size_t Mlp::parameter_count() const {
    return w1.flat().size() + b1.size() + w2.flat().size() + b2.size();
}

std::vector<double> Mlp::parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    flat.insert(flat.end(), w1.flat().begin(), w1.flat().end());
    flat.insert(flat.end(), b1.begin(), b1.end());
    flat.insert(flat.end(), w2.flat().begin(), w2.flat().end());
    flat.insert(flat.end(), b2.begin(), b2.end());
    return flat;
}

void Mlp::set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw Error("mlp: parameter count mismatch");
    auto it = flat.begin();
    auto take = [&](std::span<double> dst) {
        std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
        it += static_cast<std::ptrdiff_t>(dst.size());
    };
    take(w1.flat());
    take(b1);
    take(w2.flat());
    take(b2);
}

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Forward {
    std::vector<double> pre;     // hidden pre-activation
    std::vector<double> act;     // ReLU output
    std::vector<double> logits;  // outputs()
};

void forward(const Mlp& m, std::span<const double> x, Forward& f) {
    const std::size_t h = m.hidden();
    f.pre.resize(h);
    f.act.resize(h);
    f.logits.resize(m.outputs());
    for (std::size_t u = 0; u < h; ++u) {
        const auto w = m.w1.row(u);
        double s = m.b1[u];
        for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
        f.pre[u] = s;
        f.act[u] = s > 0.0 ? s : 0.0;
    }
    for (std::size_t o = 0; o < m.outputs(); ++o) {
        const auto w = m.w2.row(o);
        double s = m.b2[o];
        for (std::size_t u = 0; u < h; ++u) s += w[u] * f.act[u];
        f.logits[o] = s;
    }
}

void softmax(std::span<const double> logits, std::span<double> out) {
    const double mx = *std::ranges::max_element(logits);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) sum += out[i] = std::exp(logits[i] - mx);
    for (double& v : out) v /= sum;
}

// Loss of one sample; writes dLoss/dlogit into dlogit.
double output_loss(const Mlp& m, std::span<const double> logits, Label y, std::span<double> dlogit) {
    if (m.num_classes() == 2) {
        const double z = logits[0];
        const double t = y == 1 ? 1.0 : 0.0;
        dlogit[0] = sigmoid(z) - t;
        return std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    }
    softmax(logits, dlogit);
    const double py = dlogit[static_cast<std::size_t>(y)];
    dlogit[static_cast<std::size_t>(y)] -= 1.0;
    const double lse = std::log(py);
    return -lse;
}

// Accumulates loss and gradient of the listed rows into sum/grad (unnormalised).
double accumulate_rows(const Mlp& m, const Matrix& x, std::span<const Label> y, std::span<const std::size_t> rows,
                       double* grad) {
    const std::size_t d = m.input_dim();
    const std::size_t h = m.hidden();
    const std::size_t o = m.outputs();
    double* gw1 = grad;
    double* gb1 = gw1 + h * d;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + o * h;
    Forward f;
    std::vector<double> dlogit(o), dpre(h);
    double loss = 0.0;
    for (std::size_t r : rows) {
        const auto xr = x.row(r);
        const Label label = y[r];
        if (label < 0 || label >= m.num_classes()) throw Error("mlp: label out of range");
        forward(m, xr, f);
        loss += output_loss(m, f.logits, label, dlogit);
        if (!grad) continue;
        std::ranges::fill(dpre, 0.0);
        for (std::size_t k = 0; k < o; ++k) {
            const double g = dlogit[k];
            gb2[k] += g;
            const auto w = m.w2.row(k);
            for (std::size_t u = 0; u < h; ++u) {
                gw2[k * h + u] += g * f.act[u];
                dpre[u] += g * w[u];
            }
        }
        for (std::size_t u = 0; u < h; ++u) {
            if (!(f.pre[u] > 0.0)) continue;
            const double g = dpre[u];
            gb1[u] += g;
            double* gw = gw1 + u * d;
            for (std::size_t j = 0; j < d; ++j) gw[j] += g * xr[j];
        }
    }
    return loss;
}

void check_rows(const Mlp& m, const Matrix& x, std::span<const Label> y, std::span<const std::size_t> rows) {
    if (x.cols() != m.input_dim()) throw Error("mlp: input dimension mismatch");
    if (y.size() != x.rows()) throw Error("mlp: label count mismatch");
    if (rows.empty()) throw Error("mlp: empty batch");
}

}  // namespace

double loss_and_gradient(const Mlp& model, const Matrix& x, std::span<const Label> y,
                         std::span<const std::size_t> rows, std::vector<double>* grad) {
    check_rows(model, x, y, rows);
    const std::size_t p = model.parameter_count();
    const std::size_t chunks = chunk_count(rows.size());
    std::vector<double> partial_loss(chunks, 0.0);
    std::vector<double> partial_grad(grad ? chunks * p : 0, 0.0);
    const auto nchunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * kReductionChunk;
        const std::size_t end = std::min(rows.size(), begin + kReductionChunk);
        partial_loss[static_cast<std::size_t>(c)] =
            accumulate_rows(model, x, y, rows.subspan(begin, end - begin),
                            grad ? partial_grad.data() + static_cast<std::size_t>(c) * p : nullptr);
    }
    const double scale = 1.0 / static_cast<double>(rows.size());
    double loss = 0.0;
    for (double l : partial_loss) loss += l;
    if (grad) {
        grad->assign(p, 0.0);
        for (std::size_t c = 0; c < chunks; ++c)
            for (std::size_t i = 0; i < p; ++i) (*grad)[i] += partial_grad[c * p + i];
        for (double& g : *grad) g *= scale;
    }
    return loss * scale;
}

namespace reference {

double loss_and_gradient(const Mlp& model, const Matrix& x, std::span<const Label> y,
                         std::span<const std::size_t> rows, std::vector<double>* grad) {
    check_rows(model, x, y, rows);
    std::vector<double> g(model.parameter_count(), 0.0);
    const double loss = accumulate_rows(model, x, y, rows, grad ? g.data() : nullptr);
    const double scale = 1.0 / static_cast<double>(rows.size());
    if (grad) {
        for (double& v : g) v *= scale;
        *grad = std::move(g);
    }
    return loss * scale;
}

}  // namespace reference

std::vector<double> Mlp::predict_proba(std::span<const double> x) const {
    if (x.size() != input_dim_) throw Error("mlp: input dimension mismatch");
    Forward f;
    forward(*this, x, f);
    std::vector<double> p(static_cast<std::size_t>(num_classes_));
    if (num_classes_ == 2) {
        p[1] = sigmoid(f.logits[0]);
        p[0] = 1.0 - p[1];
    } else {
        softmax(f.logits, p);
    }
    return p;
}

Label Mlp::predict(std::span<const double> x) const {
    const auto p = predict_proba(x);
    return static_cast<Label>(std::ranges::max_element(p) - p.begin());
}

std::vector<Label> Mlp::predict(const Matrix& x) const {
    if (x.cols() != input_dim_) throw Error("mlp: input dimension mismatch");
    std::vector<Label> out(x.rows());
    const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = predict(x.row(static_cast<std::size_t>(i)));
    return out;
}

TrainedClassifier train_mlp(const LabeledDataset& train, const MlpConfig& config) {
    config.validate();
    const std::size_t n = train.size();
    if (n == 0) throw Error("train_mlp: empty selection");
    const auto& labels = train.noisy_labels;
    for (Label l : labels)
        if (l < 0 || l >= config.num_classes) throw Error("train_mlp: label outside num_classes");

    TrainedClassifier out;
    Mlp& model = out.model;
    model = Mlp(train.dim(), config.hidden_units, config.num_classes);
    {
        auto rng = make_stream(config.seed, StreamTag::init);
        const double a1 = 1.0 / std::sqrt(static_cast<double>(train.dim()));
        const double a2 = 1.0 / std::sqrt(static_cast<double>(config.hidden_units));
        for (double& w : model.w1.flat()) w = uniform(rng, -a1, a1);
        for (double& b : model.b1) b = uniform(rng, -a1, a1);
        for (double& w : model.w2.flat()) w = uniform(rng, -a2, a2);
        for (double& b : model.b2) b = uniform(rng, -a2, a2);
    }

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<double> params = model.parameters();
    std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0), grad;
    std::size_t step = 0;

    std::vector<std::size_t> order(n), all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    out.trace.epochs = config.epochs;
    out.trace.samples = n;
    out.trace.correct.assign(config.epochs * n, 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        order = all;
        auto rng = make_stream(config.seed, StreamTag::shuffle, epoch);
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);

        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            const std::size_t end = std::min(n, begin + config.batch_size);
            loss_and_gradient(model, train.features, labels, std::span(order).subspan(begin, end - begin), &grad);
            ++step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < params.size(); ++i) {
                m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
                m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
                params[i] -= config.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
            }
            model.set_parameters(params);
        }

        out.epoch_loss.push_back(loss_and_gradient(model, train.features, labels, all, nullptr));
        const auto pred = model.predict(train.features);
        for (std::size_t i = 0; i < n; ++i) out.trace.correct[epoch * n + i] = pred[i] == labels[i];
    }
    return out;
}

Metrics evaluate(const Mlp& model, const LabeledDataset& test) {
    if (test.dim() != model.input_dim()) throw Error("evaluate: dimension mismatch");
    const auto& truth = test.truth();
    const auto pred = model.predict(test.features);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
    Metrics m;
    m.classifier_accuracy = static_cast<double>(hit) / static_cast<double>(pred.size());
    m.balanced_error = balanced_error(pred, truth, model.num_classes());
    return m;
}

std::vector<double> entropy_scores(const Mlp& model, const LabeledDataset& dataset) {
    constexpr double lo = 1e-12, hi = 1.0 - 1e-12;
    std::vector<double> h(dataset.size());
    const auto n = static_cast<std::ptrdiff_t>(dataset.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double p : model.predict_proba(dataset.features.row(static_cast<std::size_t>(i)))) {
            p = std::clamp(p, lo, hi);
            s -= p * std::log(p);
        }
        h[static_cast<std::size_t>(i)] = s;
    }
    return h;
}

std::vector<int> forgetting_counts(const TrainingTrace& trace) {
    if (trace.epochs == 0 || trace.samples == 0) throw Error("forgetting_counts: empty trace");
    std::vector<int> counts(trace.samples, 0);
    for (std::size_t i = 0; i < trace.samples; ++i) {
        bool ever = trace.at(0, i);
        for (std::size_t e = 1; e < trace.epochs; ++e) {
            ever = ever || trace.at(e, i);
            if (trace.at(e - 1, i) && !trace.at(e, i)) ++counts[i];
        }
        if (!ever) counts[i] = static_cast<int>(trace.epochs);
    }
    return counts;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

void put_f64(std::ostream& os, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    os.write(b, 8);
}

std::uint64_t get_bytes(std::istream& is, int count) {
    unsigned char b[8] = {};
    if (!is.read(reinterpret_cast<char*>(b), count)) throw Error("model file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < count; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_model(const Mlp& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write model file " + path.string());
    os.write("MLP1", 4);
    put_u32(os, static_cast<std::uint32_t>(model.input_dim()));
    put_u32(os, static_cast<std::uint32_t>(model.hidden()));
    put_u32(os, static_cast<std::uint32_t>(model.num_classes()));
    for (double v : model.parameters()) put_f64(os, v);
    if (!os) throw Error("failed writing model file " + path.string());
}

Mlp load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read model file " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || std::string_view(magic, 4) != "MLP1") throw Error("not an MLP1 model file");
    const auto d = static_cast<std::size_t>(get_bytes(is, 4));
    const auto h = static_cast<std::size_t>(get_bytes(is, 4));
    const auto c = static_cast<int>(get_bytes(is, 4));
    Mlp model(d, h, c);
    std::vector<double> flat(model.parameter_count());
    for (double& v : flat) v = std::bit_cast<double>(get_bytes(is, 8));
    if (is.peek() != std::char_traits<char>::eof()) throw Error("model file has trailing bytes");
    model.set_parameters(flat);
    return model;
}

}  // namespace icut
