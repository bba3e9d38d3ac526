#pragma once

#include <cstdint>
#include <vector>

#include "coughnet/numerics.hpp"

namespace coughnet {

struct SmoteConfig {
    int n_candidates = 5;       // random coughs drawn per synthetic sample
    double target_ratio = 1.0;  // 1.0 = balance classes fully
    std::uint64_t seed = 0;
};

/// Oversamples the minority class: cycles through minority vectors x in
/// index order; for each synthetic draws n_candidates distinct other
/// minority vectors, picks the Euclidean-nearest x_nn (ties -> lowest
/// index), draws u ~ U(0,1) and emits x + u * (x_nn - x). Produces
/// round(majority_count * target_ratio) - |minority| synthetics.
std::vector<std::vector<double>> smote(const std::vector<std::vector<double>>& minority,
                                       std::size_t majority_count, const SmoteConfig& config);

}  // namespace coughnet
