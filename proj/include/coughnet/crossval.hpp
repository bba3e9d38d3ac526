#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coughnet/evaluation.hpp"
#include "coughnet/features.hpp"
#include "coughnet/manifest.hpp"
#include "coughnet/models.hpp"
#include "coughnet/preprocess.hpp"
#include "coughnet/smote.hpp"

namespace coughnet {

struct InnerSplit {
    std::vector<std::string> dev;  // K patients for hyperparameter scoring
    std::vector<std::string> fit;  // remaining training patients
};

struct OuterFold {
    std::vector<std::string> test;   // J held-out patients
    std::vector<std::string> train;  // everyone else (includes the remainder)
    std::vector<InnerSplit> inner;
};

/// Nested leave-p-out partition plan with strict per-patient separation.
struct FoldPlan {
    std::vector<OuterFold> folds;
    std::uint64_t seed = 0;

    /// Throws LeakageError when any fold violates disjointness, or
    /// InvalidPlan on structural problems (empty sets, overlapping or
    /// non-covering outer test sets).
    void validate() const;
};

/// Shuffles patients by seed and forms floor(N/J) disjoint outer test
/// sets; the remainder patients only ever appear on training sides. Each
/// outer fold gets n_inner random dev/fit splits of its training set.
FoldPlan make_fold_plan(const std::vector<std::string>& patients, std::size_t j_size,
                        std::size_t k_size, std::uint64_t seed, std::size_t n_inner = 4);

/// Cartesian hyperparameter grid: feature configs x model specs x score
/// function choice. Flat indexing is lexicographic (feature slowest).
struct SearchGrid {
    std::vector<FeatureConfig> feature_configs;
    std::vector<ModelSpec> model_specs;
    std::vector<ScoreFunction> score_functions{ScoreFunction::I1, ScoreFunction::I2};

    std::size_t size() const {
        return feature_configs.size() * model_specs.size() * score_functions.size();
    }
    struct Point {
        std::size_t feature_idx = 0, model_idx = 0, score_idx = 0;
    };
    Point point(std::size_t flat) const;

    /// The searched ranges: MFCC counts {13..65}, frame lengths {256..4096},
    /// segment counts {50..150}.
    static std::vector<FeatureConfig> default_feature_grid();
    /// Per-family hyperparameter ranges of the searched grid.
    static std::vector<ModelSpec> default_model_grid(ModelFamily family);
};

struct PatientFeatures {
    std::string patient_id;
    int label = 0;  // 1 = COVID positive
    std::vector<FeatureMatrix> coughs;
};

struct PipelineConfig {
    PreprocessConfig pre;
    FeatureConfig feat;
};

/// Reads, preprocesses and featurizes every cough in the manifest records.
/// With a cache_dir, per-cough feature files are reused across runs.
std::vector<PatientFeatures> extract_dataset(const std::vector<PatientRecord>& records,
                                             const PipelineConfig& config, int workers,
                                             const std::string& cache_dir = "");

struct NestedCvOptions {
    std::uint64_t seed = 0;
    int workers = 0;         // 0 = hardware concurrency
    std::size_t budget = 0;  // 0 = exhaustive; else deterministic grid subsample
    SmoteConfig smote;
    PreprocessConfig pre;
    std::string checkpoint_path;  // empty = no checkpoint log
};

struct FoldResult {
    EvalReport report;
    std::size_t chosen_point = 0;  // flat grid index
    double chosen_dev_auc = 0.0;   // mean inner dev AUC of the chosen point
    double gamma_ee = 0.0;         // mean inner-split cough-level EER threshold
    TrainedModel model;
    std::vector<PatientScore> test_scores;
};

struct NestedCvResult {
    std::vector<FoldResult> folds;
    double mean_auc = 0.0;
    double mean_sensitivity = 0.0;
    double mean_specificity = 0.0;
    double mean_accuracy = 0.0;
};

/// Full nested cross-validation from audio files: inner loop scores every
/// grid point by mean dev AUC, the best point is retrained on the whole
/// training side (SMOTE on training data only) and evaluated once on the
/// fold's test patients.
NestedCvResult run_nested_cv(const std::vector<PatientRecord>& records, const SearchGrid& grid,
                             const FoldPlan& plan, const NestedCvOptions& options);

/// Same harness on pre-extracted features: per_config[i] must hold the
/// dataset extracted with grid.feature_configs[i].
NestedCvResult run_nested_cv_features(const std::vector<std::vector<PatientFeatures>>& per_config,
                                      const SearchGrid& grid, const FoldPlan& plan,
                                      const NestedCvOptions& options);

/// Trains on the split's fit side (SMOTE applied there only) and scores the
/// dev side: patient-level AUC over the chosen index plus the cough-level
/// EER threshold. NaNs mark a failed (diverged or degenerate) run.
struct SplitScore {
    double dev_auc;
    double gamma_ee;
};
SplitScore score_split(const std::vector<PatientFeatures>& dataset, const InnerSplit& split,
                       const ModelSpec& spec, ScoreFunction score_function,
                       const SmoteConfig& smote_config, std::uint64_t seed);

/// Evaluates a trained model on an external dataset at patient level.
/// Never trains and never applies SMOTE.
EvalReport evaluate_external(const TrainedModel& model, double gamma_ee,
                             ScoreFunction score_function,
                             const std::vector<PatientRecord>& records,
                             const PipelineConfig& config, int workers);

EvalReport evaluate_external_features(const TrainedModel& model, double gamma_ee,
                                      ScoreFunction score_function,
                                      const std::vector<PatientFeatures>& dataset);

}  // namespace coughnet
