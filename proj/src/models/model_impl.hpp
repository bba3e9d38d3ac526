#pragma once

// Internal glue between the public model API and the net framework.

#include <memory>

#include "coughnet/models.hpp"
#include "net.hpp"

namespace coughnet::detail {

struct LinearFit {
    std::vector<double> params;
    std::vector<double> trace;
};

/// Logistic regression on row examples; params = [w (D) | a].
LinearFit fit_logistic(const Matrix2D& x, const std::vector<int>& y, const ModelSpec& spec,
                       std::uint64_t seed);
/// Linear soft-margin SVM with Platt calibration; params = [w (D) | b | A | B].
LinearFit fit_svm(const Matrix2D& x, const std::vector<int>& y, const ModelSpec& spec,
                  std::uint64_t seed);

double predict_logistic(std::span<const double> params, std::span<const double> x);
double predict_svm(std::span<const double> params, std::span<const double> x);

/// Builds the layer stack for a net-backed family (MLP/CNN/LSTM/ResNet).
std::unique_ptr<net::Net> build_net(const ModelSpec& spec, const InputShape& shape);

/// Packs per-cough matrices into the family's batched tensor layout.
net::Tensor pack_batch(const std::vector<const Matrix2D*>& coughs, const ModelSpec& spec,
                       const InputShape& shape);

}  // namespace coughnet::detail
