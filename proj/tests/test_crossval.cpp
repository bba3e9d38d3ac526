#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "coughnet/crossval.hpp"
#include "coughnet/synth.hpp"

using namespace coughnet;

namespace {

std::vector<std::string> patient_ids(std::size_t n) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
    return ids;
}

/// First seed >= base whose plan gives every outer test set and every dev
/// set both classes. Tiny test corpora need this; at study scale any seed
/// works.
FoldPlan balanced_plan(const std::vector<PatientFeatures>& dataset, std::size_t j, std::size_t k,
                       std::uint64_t base_seed, std::size_t n_inner = 4) {
    std::map<std::string, int> label_of;
    for (const auto& p : dataset) label_of[p.patient_id] = p.label;
    auto mixed = [&](const std::vector<std::string>& ids) {
        bool pos = false, neg = false;
        for (const auto& id : ids) (label_of.at(id) == 1 ? pos : neg) = true;
        return pos && neg;
    };
    std::vector<std::string> ids;
    for (const auto& p : dataset) ids.push_back(p.patient_id);
    for (std::uint64_t seed = base_seed;; ++seed) {
        const FoldPlan plan = make_fold_plan(ids, j, k, seed, n_inner);
        bool good = true;
        for (const auto& fold : plan.folds) {
            if (!mixed(fold.test)) good = false;
            for (const auto& split : fold.inner) {
                if (!mixed(split.dev) || !mixed(split.fit)) good = false;
            }
        }
        if (good) return plan;
    }
}

/// Synthetic feature dataset: one informative column separates the classes.
std::vector<PatientFeatures> synthetic_features(std::size_t n_patients, std::size_t segments,
                                                std::size_t dims, double separation,
                                                std::uint64_t seed) {
    Rng rng(seed);
    std::vector<PatientFeatures> out;
    for (std::size_t p = 0; p < n_patients; ++p) {
        PatientFeatures patient;
        patient.patient_id = "p" + std::to_string(p);
        patient.label = p % 2 == 0 ? 1 : 0;
        const std::size_t n_coughs = 1 + rng.uniform_int(2);
        for (std::size_t c = 0; c < n_coughs; ++c) {
            FeatureMatrix fm;
            fm.patient_id = patient.patient_id;
            fm.cough_id = patient.patient_id + "_" + std::to_string(c);
            fm.label = patient.label == 1 ? Label::Positive : Label::Healthy;
            fm.values = Matrix2D(segments, dims);
            for (std::size_t s = 0; s < segments; ++s) {
                for (std::size_t d = 0; d < dims; ++d) {
                    fm.values(s, d) = rng.normal();
                }
                fm.values(s, 0) += patient.label == 1 ? separation : -separation;
            }
            for (std::size_t d = 0; d < dims; ++d) fm.dim_names.push_back("f" + std::to_string(d));
            patient.coughs.push_back(std::move(fm));
        }
        out.push_back(std::move(patient));
    }
    return out;
}

}  // namespace

TEST_CASE("the study-scale plan yields five disjoint outer folds") {
    const FoldPlan plan = make_fold_plan(patient_ids(1171), 234, 187, 42);
    REQUIRE(plan.folds.size() == 5);
    std::set<std::string> all_test;
    for (const auto& fold : plan.folds) {
        CHECK(fold.test.size() == 234);
        CHECK(fold.train.size() == 1171 - 234);
        for (const auto& id : fold.test) CHECK(all_test.insert(id).second);
        for (const auto& split : fold.inner) {
            CHECK(split.dev.size() == 187);
            CHECK(split.fit.size() == 1171 - 234 - 187);
        }
    }
    CHECK(all_test.size() == 5 * 234);
}

TEST_CASE("small plan covers every patient exactly once in test") {
    const FoldPlan plan = make_fold_plan(patient_ids(10), 2, 2, 7);
    REQUIRE(plan.folds.size() == 5);
    std::set<std::string> tested;
    for (const auto& fold : plan.folds) {
        for (const auto& id : fold.test) tested.insert(id);
    }
    CHECK(tested.size() == 10);
}

TEST_CASE("plans satisfy the disjointness invariants for random sizes") {
    Rng rng(1357);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 8 + rng.uniform_int(120);
        const std::size_t j = 1 + rng.uniform_int(n / 3);
        const std::size_t max_k = n - j - 1;
        const std::size_t k = 1 + rng.uniform_int(std::max<std::size_t>(1, max_k));
        if (j + k >= n) continue;
        const FoldPlan plan = make_fold_plan(patient_ids(n), j, k, rng.next_u64());
        plan.validate();  // throws on any violation
        CHECK(plan.folds.size() == n / j);
    }
}

TEST_CASE("plan construction rejects infeasible sizes") {
    CHECK_THROWS_AS(make_fold_plan(patient_ids(10), 0, 2, 1), InvalidPlan);
    CHECK_THROWS_AS(make_fold_plan(patient_ids(10), 5, 5, 1), InvalidPlan);
    CHECK_THROWS_AS(make_fold_plan(patient_ids(3), 4, 1, 1), InvalidPlan);
}

TEST_CASE("plans are deterministic per seed") {
    const FoldPlan a = make_fold_plan(patient_ids(30), 6, 5, 11);
    const FoldPlan b = make_fold_plan(patient_ids(30), 6, 5, 11);
    const FoldPlan c = make_fold_plan(patient_ids(30), 6, 5, 12);
    CHECK(a.folds[0].test == b.folds[0].test);
    CHECK(a.folds[0].test != c.folds[0].test);
}

TEST_CASE("injected leakage aborts the run") {
    FoldPlan plan = make_fold_plan(patient_ids(10), 2, 2, 3);
    plan.folds[0].train.push_back(plan.folds[0].test.front());  // leak
    CHECK_THROWS_AS(plan.validate(), LeakageError);

    const auto dataset = synthetic_features(10, 4, 3, 2.0, 5);
    SearchGrid grid;
    grid.feature_configs = {FeatureConfig{}};
    grid.model_specs = {ModelSpec::logistic_regression(1e-3)};
    grid.score_functions = {ScoreFunction::I2};
    NestedCvOptions options;
    CHECK_THROWS_AS(run_nested_cv_features({dataset}, grid, plan, options), LeakageError);
}

TEST_CASE("degenerate one-point grid equals plain train/test evaluation") {
    const auto dataset = synthetic_features(20, 4, 3, 2.5, 99);
    SearchGrid grid;
    grid.feature_configs = {FeatureConfig{}};
    ModelSpec spec = ModelSpec::logistic_regression(1e-3);
    spec.epochs = 200;
    grid.model_specs = {spec};
    grid.score_functions = {ScoreFunction::I2};

    const FoldPlan plan = balanced_plan(dataset, 4, 4, 1, 2);

    NestedCvOptions options;
    options.seed = 17;
    options.workers = 2;
    const NestedCvResult result = run_nested_cv_features({dataset}, grid, plan, options);
    REQUIRE(result.folds.size() == 5);
    for (const auto& fold : result.folds) {
        CHECK(fold.chosen_point == 0);  // the only point
        CHECK(fold.report.n_patients == 4);
    }
    CHECK(result.mean_auc > 0.9);  // cleanly separable data
}

TEST_CASE("nested cv is deterministic given manifest, grid and seed") {
    const auto dataset = synthetic_features(16, 3, 3, 2.0, 7);
    SearchGrid grid;
    grid.feature_configs = {FeatureConfig{}};
    ModelSpec a = ModelSpec::logistic_regression(1e-2);
    a.epochs = 100;
    ModelSpec b = ModelSpec::logistic_regression(1.0);
    b.epochs = 100;
    grid.model_specs = {a, b};
    grid.score_functions = {ScoreFunction::I1, ScoreFunction::I2};

    const FoldPlan plan = balanced_plan(dataset, 4, 3, 2, 2);

    NestedCvOptions options;
    options.seed = 4;
    options.workers = 3;
    const NestedCvResult r1 = run_nested_cv_features({dataset}, grid, plan, options);
    const NestedCvResult r2 = run_nested_cv_features({dataset}, grid, plan, options);
    REQUIRE(r1.folds.size() == r2.folds.size());
    CHECK(r1.mean_auc == r2.mean_auc);
    for (std::size_t f = 0; f < r1.folds.size(); ++f) {
        CHECK(r1.folds[f].chosen_point == r2.folds[f].chosen_point);
        CHECK(r1.folds[f].report.auc == r2.folds[f].report.auc);
        CHECK(r1.folds[f].model.params == r2.folds[f].model.params);
    }
}

TEST_CASE("checkpoint resume reproduces the uninterrupted run") {
    const auto dataset = synthetic_features(16, 3, 3, 2.0, 21);
    SearchGrid grid;
    grid.feature_configs = {FeatureConfig{}};
    ModelSpec a = ModelSpec::logistic_regression(1e-2);
    a.epochs = 80;
    ModelSpec b = ModelSpec::logistic_regression(10.0);
    b.epochs = 80;
    grid.model_specs = {a, b};
    grid.score_functions = {ScoreFunction::I2};

    const FoldPlan plan = balanced_plan(dataset, 4, 3, 5, 2);

    const std::string checkpoint =
        (std::filesystem::temp_directory_path() / "coughnet_ckpt_test.log").string();
    std::filesystem::remove(checkpoint);

    NestedCvOptions options;
    options.seed = 9;
    options.workers = 2;
    const NestedCvResult uninterrupted = run_nested_cv_features({dataset}, grid, plan, options);

    // first run writes the checkpoint; second run must reuse it and agree
    options.checkpoint_path = checkpoint;
    const NestedCvResult first = run_nested_cv_features({dataset}, grid, plan, options);
    CHECK(std::filesystem::file_size(checkpoint) > 0);
    const NestedCvResult resumed = run_nested_cv_features({dataset}, grid, plan, options);

    CHECK(first.mean_auc == uninterrupted.mean_auc);
    CHECK(resumed.mean_auc == uninterrupted.mean_auc);
    for (std::size_t f = 0; f < resumed.folds.size(); ++f) {
        CHECK(resumed.folds[f].chosen_point == uninterrupted.folds[f].chosen_point);
        CHECK(resumed.folds[f].gamma_ee == uninterrupted.folds[f].gamma_ee);
    }
    std::filesystem::remove(checkpoint);
}

TEST_CASE("budget subsampling is deterministic and within the grid") {
    const auto dataset = synthetic_features(16, 3, 3, 2.0, 31);
    SearchGrid grid;
    grid.feature_configs = {FeatureConfig{}};
    for (int e = -3; e <= 2; ++e) {
        ModelSpec s = ModelSpec::logistic_regression(std::pow(10.0, e));
        s.epochs = 60;
        grid.model_specs.push_back(s);
    }
    grid.score_functions = {ScoreFunction::I2};

    const FoldPlan plan = balanced_plan(dataset, 4, 3, 6, 2);

    NestedCvOptions options;
    options.seed = 12;
    options.budget = 2;
    options.workers = 2;
    const NestedCvResult r1 = run_nested_cv_features({dataset}, grid, plan, options);
    const NestedCvResult r2 = run_nested_cv_features({dataset}, grid, plan, options);
    for (std::size_t f = 0; f < r1.folds.size(); ++f) {
        CHECK(r1.folds[f].chosen_point == r2.folds[f].chosen_point);
        CHECK(r1.folds[f].chosen_point < grid.size());
    }
}

TEST_CASE("default search grids stay inside their declared ranges") {
    const auto features = SearchGrid::default_feature_grid();
    CHECK(features.size() == 5 * 5 * 5);
    for (const auto& f : features) {
        CHECK((f.n_mfcc % 13 == 0 && f.n_mfcc >= 13 && f.n_mfcc <= 65));
        CHECK((f.frame_len >= 256 && f.frame_len <= 4096));
        CHECK((f.n_segments >= 50 && f.n_segments <= 150));
        f.validate();
    }

    const auto lr = SearchGrid::default_model_grid(ModelFamily::LogisticRegression);
    CHECK(lr.size() == 15 * 21 * 21);  // nu1 x l1 x l2
    for (const auto& s : lr) {
        CHECK(s.reg_strength >= 1e-7 / 2);
        CHECK(s.reg_strength <= 1e7 * 2);
        CHECK((s.l1_weight >= 0.0 && s.l1_weight <= 1.0 + 1e-9));
        CHECK((s.l2_weight >= 0.0 && s.l2_weight <= 1.0 + 1e-9));
    }
    CHECK(SearchGrid::default_model_grid(ModelFamily::LinearSvm).size() == 15);
    CHECK(SearchGrid::default_model_grid(ModelFamily::Mlp).size() == 10 * 15 * 20);
    const auto cnn = SearchGrid::default_model_grid(ModelFamily::Cnn);
    CHECK(cnn.size() == 3 * 2 * 3 * 2 * 3 * 2);
    for (const auto& s : cnn) {
        CHECK((s.conv_filters == 24 || s.conv_filters == 48 || s.conv_filters == 96));
        CHECK((s.kernel_size == 2 || s.kernel_size == 3));
        CHECK((s.batch_size == 64 || s.batch_size == 128 || s.batch_size == 256));
        CHECK((s.epochs == 10 || s.epochs == 20));
    }
    const auto lstm = SearchGrid::default_model_grid(ModelFamily::Lstm);
    CHECK(lstm.size() == 3 * 3 * 3 * 2 * 3 * 2);
    for (const auto& s : lstm) {
        CHECK((s.lstm_units == 64 || s.lstm_units == 128 || s.lstm_units == 256));
        CHECK(s.learning_rate >= 1e-4 / 2);
        CHECK(s.learning_rate <= 1e-2 * 2);
    }
}

TEST_CASE("external evaluation reports over the external patients") {
    const auto train_set = synthetic_features(20, 4, 3, 2.5, 77);
    std::vector<Matrix2D> coughs;
    std::vector<int> labels;
    for (const auto& p : train_set) {
        for (const auto& c : p.coughs) {
            coughs.push_back(c.values);
            labels.push_back(p.label);
        }
    }
    ModelSpec spec = ModelSpec::logistic_regression(1e-3);
    spec.epochs = 200;
    const TrainedModel model = fit(spec, coughs, labels, 3);

    // 21 external patients: 8 positive, 13 negative
    auto external = synthetic_features(26, 4, 3, 2.5, 78);
    external.resize(21);
    int pos = 0;
    for (std::size_t i = 0; i < external.size(); ++i) {
        external[i].label = i < 8 ? 1 : 0;
        pos += external[i].label;
        for (auto& c : external[i].coughs) {
            for (std::size_t s = 0; s < c.values.rows(); ++s) {
                c.values(s, 0) = std::abs(c.values(s, 0)) * (external[i].label == 1 ? 1.0 : -1.0);
            }
        }
    }
    REQUIRE(pos == 8);
    const EvalReport rep = evaluate_external_features(model, 0.5, ScoreFunction::I2, external);
    CHECK(rep.n_patients == 21);
    CHECK(rep.auc > 0.9);

    CHECK_THROWS_AS(evaluate_external_features(model, 0.5, ScoreFunction::I2, {}), EmptyInput);

    auto bad_shape = external;
    for (auto& p : bad_shape) {
        for (auto& c : p.coughs) c.values = Matrix2D(4, 9);
    }
    CHECK_THROWS_AS(evaluate_external_features(model, 0.5, ScoreFunction::I2, bad_shape),
                    ShapeError);
}

TEST_CASE("smote provenance: imbalanced training sides stay fittable") {
    // 6 positive, 10 negative patients; SMOTE inside every fit side levels
    // the classes, which shows up as a usable training run
    auto dataset = synthetic_features(16, 3, 3, 2.5, 91);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        dataset[i].label = i < 6 ? 1 : 0;
        for (auto& c : dataset[i].coughs) {
            for (std::size_t s = 0; s < c.values.rows(); ++s) {
                c.values(s, 0) = std::abs(c.values(s, 0)) * (dataset[i].label == 1 ? 1.0 : -1.0);
            }
        }
    }
    const FoldPlan plan = balanced_plan(dataset, 4, 3, 13, 2);

    SearchGrid grid;
    grid.feature_configs = {FeatureConfig{}};
    ModelSpec spec = ModelSpec::logistic_regression(1e-3);
    spec.epochs = 150;
    grid.model_specs = {spec};
    grid.score_functions = {ScoreFunction::I2};
    NestedCvOptions options;
    options.seed = 10;
    options.workers = 2;
    // would throw DegenerateLabels without balancing support; must succeed
    const NestedCvResult result = run_nested_cv_features({dataset}, grid, plan, options);
    CHECK(result.folds.size() == 4);
}
