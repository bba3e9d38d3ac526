#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "coughnet/numerics.hpp"

namespace coughnet {

namespace net {
class Net;
}

enum class ModelFamily { LogisticRegression, LinearSvm, Mlp, Cnn, Lstm, ResNet };
enum class ResNetPreset { Tiny, ResNet50Audio };

std::string family_name(ModelFamily family);
ModelFamily parse_family(const std::string& name);

/// Classifier family plus its hyperparameters. Fields outside a family's
/// set are ignored by that family. Named constructors give per-family
/// defaults matching the searched grid's midpoints.
struct ModelSpec {
    ModelFamily family = ModelFamily::LogisticRegression;

    // LR / SVM
    double reg_strength = 1.0;  // nu1
    double l1_weight = 0.0;     // nu2 (LR only)
    double l2_weight = 1.0;     // nu3 (LR only)

    // MLP
    int hidden_units = 50;  // eta
    double mlp_l2 = 1e-4;   // zeta1

    // CNN
    int conv_filters = 24;  // alpha1
    int kernel_size = 2;    // alpha2

    // CNN / LSTM shared
    double dropout = 0.1;  // alpha3
    int dense_units = 16;  // alpha4

    // LSTM
    int lstm_units = 64;  // beta1

    ResNetPreset preset = ResNetPreset::Tiny;

    /// zeta2 for MLP, beta2 for LSTM, plain step size elsewhere. LR/SVM
    /// divide this by (1 + nu1) to stay stable across the nu1 grid.
    double learning_rate = 0.1;
    int epochs = 500;
    int batch_size = 0;  // 0 = full batch; xi1 for the deep families

    static ModelSpec logistic_regression(double nu1 = 1.0, double nu2 = 0.0, double nu3 = 1.0);
    static ModelSpec linear_svm(double nu1 = 1.0);
    static ModelSpec mlp(int eta = 50, double zeta1 = 1e-4, double zeta2 = 0.1);
    static ModelSpec cnn(int alpha1 = 24, int alpha2 = 2, double alpha3 = 0.1, int alpha4 = 16,
                         int xi1 = 64, int xi2 = 10);
    static ModelSpec lstm(int beta1 = 64, double beta2 = 1e-3, double alpha3 = 0.1,
                          int alpha4 = 16, int xi1 = 64, int xi2 = 10);
    static ModelSpec resnet(ResNetPreset preset = ResNetPreset::Tiny, int xi1 = 64, int xi2 = 10);
};

/// Input contract of a fitted model. Vector-input families (LR/SVM/MLP)
/// consume per-segment D-vectors; matrix-input families (CNN/LSTM/ResNet)
/// consume the whole segments-by-D matrix.
struct InputShape {
    enum class Kind { Vector, Matrix };
    Kind kind = Kind::Vector;
    std::size_t rows = 0;  // segments (Matrix only)
    std::size_t cols = 0;  // feature dimension

    bool operator==(const InputShape&) const = default;
};

bool is_vector_family(ModelFamily family);

/// A fitted classifier. Immutable after fit; safe to share across threads
/// for prediction.
class TrainedModel {
public:
    ModelSpec spec;
    InputShape shape;
    std::uint64_t seed = 0;
    std::vector<double> params;
    std::vector<double> loss_trace;
    // per-dimension z-scoring fitted on the training examples; used by the
    // vector-input families (empty = identity)
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;

    /// Positive-class probability for one cough: vector families average
    /// their per-segment probabilities; matrix families emit one score.
    double predict_proba(const Matrix2D& cough) const;

    /// Per-segment probabilities (one entry per matrix row) for vector
    /// families; a single entry for matrix families.
    std::vector<double> predict_segment_probs(const Matrix2D& cough) const;

    /// Probability for a single feature vector (vector families only).
    double predict_vector_proba(std::span<const double> x) const;

    /// Per-layer output shapes for a single input of this model's shape.
    std::vector<std::string> shape_trace() const;

    /// Rebuilds internal inference state from `params` (called by fit/load).
    void rebuild();

private:
    std::shared_ptr<const net::Net> net_;
    friend TrainedModel fit(const ModelSpec&, const std::vector<Matrix2D>&,
                            const std::vector<int>&, std::uint64_t);
    friend TrainedModel build_untrained(const ModelSpec&, const InputShape&, std::uint64_t);
};

/// Trains a classifier on per-cough feature matrices with binary labels
/// (1 = COVID positive). Mini-batch gradient descent on cross-entropy
/// (hinge for SVM); deterministic given the seed.
TrainedModel fit(const ModelSpec& spec, const std::vector<Matrix2D>& coughs,
                 const std::vector<int>& labels, std::uint64_t seed);

/// Builds an initialized but untrained model of the given shape (used for
/// forward-shape checks of the large presets).
TrainedModel build_untrained(const ModelSpec& spec, const InputShape& shape, std::uint64_t seed);

struct GradientCheckResult {
    double max_rel_error = 0.0;
    std::size_t n_checked = 0;
};

/// Compares analytic gradients against central finite differences
/// (step 1e-5) on >= 100 randomly sampled parameters (all of them for
/// smaller models). Dropout is disabled for the check.
GradientCheckResult gradient_check(const ModelSpec& spec, const InputShape& shape,
                                   std::uint64_t seed);

/// Declared stage-by-stage output shapes of the resnet50_audio preset for
/// a rows-by-cols input; the forward trace must reproduce this table.
std::vector<std::string> resnet50_audio_declared_trace(std::size_t rows, std::size_t cols);

/// Model serialization: self-describing binary with magic, format version,
/// family tag, spec, shape and a little-endian double parameter blob.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace coughnet
