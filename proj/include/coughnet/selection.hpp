#pragma once

#include "coughnet/crossval.hpp"

namespace coughnet {

struct SfsStep {
    std::size_t dim_index = 0;
    std::string dim_name;
    double dev_auc = 0.0;
    std::size_t subset_size = 0;
};

struct SfsResult {
    std::vector<SfsStep> steps;           // one per greedy addition, in order
    std::vector<std::size_t> best_subset; // prefix of selections with the top AUC
    double best_auc = 0.0;
};

struct SfsOptions {
    std::size_t max_dims = 0;  // 0 = search every dimension
    ScoreFunction score_function = ScoreFunction::I2;
    SmoteConfig smote;
    std::uint64_t seed = 0;
    int workers = 0;
};

/// Greedy sequential forward search over feature dimensions with a fixed
/// model spec. Each step adds the dimension with the highest mean dev AUC
/// across the splits (ties -> lowest index). Vector-input families see
/// candidate columns only; matrix-input families keep the full input shape
/// with unselected columns zero-masked.
SfsResult sfs(const std::vector<PatientFeatures>& dataset, const ModelSpec& spec,
              const std::vector<InnerSplit>& splits, const SfsOptions& options);

/// CSV trace: step,dim_name,dev_auc.
void write_sfs_csv(const SfsResult& result, const std::string& path);

}  // namespace coughnet
