#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "icut/core.hpp"

namespace icut {

struct MlpConfig {
    std::size_t hidden_units = 32;
    std::size_t epochs = 20;
    std::size_t batch_size = 1024;
    double learning_rate = 1e-2;
    int num_classes = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One hidden ReLU layer. Binary problems use a single sigmoid logit,
/// C > 2 uses a softmax over C logits.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::size_t input_dim, std::size_t hidden, int num_classes);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden() const { return hidden_; }
    int num_classes() const { return num_classes_; }
    std::size_t outputs() const { return num_classes_ == 2 ? 1 : static_cast<std::size_t>(num_classes_); }

    /// Parameter blocks: w1 (hidden x d), b1 (hidden), w2 (outputs x hidden), b2 (outputs).
    Matrix w1, w2;
    std::vector<double> b1, b2;

    std::size_t parameter_count() const;
    /// Flat copy in the order w1, b1, w2, b2.
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);

    /// Class probabilities (length C).
    std::vector<double> predict_proba(std::span<const double> x) const;
    Label predict(std::span<const double> x) const;
    std::vector<Label> predict(const Matrix& x) const;

    bool operator==(const Mlp&) const = default;

private:
    std::size_t input_dim_ = 0;
    std::size_t hidden_ = 0;
    int num_classes_ = 2;
};

/// Per-epoch correctness of every training sample against its training label.
struct TrainingTrace {
    std::size_t epochs = 0;
    std::size_t samples = 0;
    std::vector<std::uint8_t> correct;  // epochs x samples

    bool at(std::size_t epoch, std::size_t sample) const { return correct[epoch * samples + sample] != 0; }
};

struct TrainedClassifier {
    Mlp model;
    TrainingTrace trace;
    std::vector<double> epoch_loss;  // mean training loss after each epoch
};

/// Mean loss over the listed rows; when grad is non-null it receives the
/// gradient of that mean in parameters() order. Within-batch work is
/// split into fixed chunks, so the result is thread-count independent.
double loss_and_gradient(const Mlp& model, const Matrix& x, std::span<const Label> y,
                         std::span<const std::size_t> rows, std::vector<double>* grad);

namespace reference {
double loss_and_gradient(const Mlp& model, const Matrix& x, std::span<const Label> y,
                         std::span<const std::size_t> rows, std::vector<double>* grad);
}  // namespace reference

/// Mini-batch Adam (beta1 0.9, beta2 0.999, eps 1e-8) on the noisy labels.
TrainedClassifier train_mlp(const LabeledDataset& train, const MlpConfig& config);

/// Accuracy and balanced error against the true labels; the remaining
/// fields of Metrics are left at zero.
Metrics evaluate(const Mlp& model, const LabeledDataset& test);

/// Shannon entropy (nats) of the predictive distribution, probabilities
/// clamped to [1e-12, 1 - 1e-12].
std::vector<double> entropy_scores(const Mlp& model, const LabeledDataset& dataset);

/// Correct -> incorrect transitions between consecutive epochs; samples
/// never classified correctly get the sentinel value `epochs`.
std::vector<int> forgetting_counts(const TrainingTrace& trace);

/// "MLP1" magic, u32 little-endian d, hidden, C, then w1, b1, w2, b2 as
/// little-endian f64 in row-major order.
void save_model(const Mlp& model, const std::filesystem::path& path);
Mlp load_model(const std::filesystem::path& path);

}  // namespace icut
