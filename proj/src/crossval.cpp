#include "coughnet/crossval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "coughnet/parallel.hpp"

namespace coughnet {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::set<std::string> as_set(const std::vector<std::string>& ids) {
    return {ids.begin(), ids.end()};
}

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& x : a) {
        if (b.count(x)) return false;
    }
    return true;
}

}  // namespace

void FoldPlan::validate() const {
    if (folds.empty()) throw InvalidPlan("plan has no folds");
    std::set<std::string> seen_test;
    for (const auto& fold : folds) {
        if (fold.test.empty()) throw InvalidPlan("fold with empty test set");
        if (fold.train.empty()) throw InvalidPlan("fold with empty training set");
        const auto test = as_set(fold.test);
        const auto train = as_set(fold.train);
        if (test.size() != fold.test.size()) throw InvalidPlan("duplicate patient in test set");
        if (train.size() != fold.train.size()) throw InvalidPlan("duplicate patient in train set");
        if (!disjoint(test, train)) throw LeakageError("patient appears in both train and test");
        for (const auto& id : fold.test) {
            if (!seen_test.insert(id).second) {
                throw InvalidPlan("outer test sets overlap on patient " + id);
            }
        }
        for (const auto& split : fold.inner) {
            if (split.dev.empty() || split.fit.empty()) {
                throw InvalidPlan("inner split with empty side");
            }
            const auto dev = as_set(split.dev);
            const auto fit = as_set(split.fit);
            if (!disjoint(dev, fit)) throw LeakageError("patient appears in both fit and dev");
            if (!disjoint(dev, test) || !disjoint(fit, test)) {
                throw LeakageError("inner split reaches into the test set");
            }
            for (const auto& id : split.dev) {
                if (!train.count(id)) throw InvalidPlan("dev patient not in training set");
            }
            for (const auto& id : split.fit) {
                if (!train.count(id)) throw InvalidPlan("fit patient not in training set");
            }
        }
    }
}

FoldPlan make_fold_plan(const std::vector<std::string>& patients, std::size_t j_size,
                        std::size_t k_size, std::uint64_t seed, std::size_t n_inner) {
    const std::size_t n = patients.size();
    if (j_size < 1 || k_size < 1 || j_size + k_size >= n) {
        throw InvalidPlan("need J >= 1, K >= 1 and J + K < N (N=" + std::to_string(n) + ")");
    }
    if (as_set(patients).size() != n) throw InvalidPlan("duplicate patient ids");

    std::vector<std::string> shuffled = patients;
    Rng rng(Rng::derive(seed, {0xf01d}));
    rng.shuffle(shuffled);

    const std::size_t n_folds = n / j_size;
    FoldPlan plan;
    plan.seed = seed;
    plan.folds.resize(n_folds);
    for (std::size_t f = 0; f < n_folds; ++f) {
        OuterFold& fold = plan.folds[f];
        fold.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(f * j_size),
                         shuffled.begin() + static_cast<std::ptrdiff_t>((f + 1) * j_size));
        for (std::size_t i = 0; i < n; ++i) {
            if (i / j_size != f || i >= n_folds * j_size) fold.train.push_back(shuffled[i]);
        }
        // remainder patients (index >= n_folds * j_size) land in train only
        Rng inner_rng(Rng::derive(seed, {0x1712, f}));
        fold.inner.resize(n_inner);
        std::vector<std::string> pool = fold.train;
        for (std::size_t s = 0; s < n_inner; ++s) {
            inner_rng.shuffle(pool);
            InnerSplit& split = fold.inner[s];
            split.dev.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k_size));
            split.fit.assign(pool.begin() + static_cast<std::ptrdiff_t>(k_size), pool.end());
            std::sort(split.dev.begin(), split.dev.end());
            std::sort(split.fit.begin(), split.fit.end());
        }
    }
    plan.validate();
    return plan;
}

SearchGrid::Point SearchGrid::point(std::size_t flat) const {
    const std::size_t per_feature = model_specs.size() * score_functions.size();
    Point p;
    p.feature_idx = flat / per_feature;
    p.model_idx = (flat % per_feature) / score_functions.size();
    p.score_idx = flat % score_functions.size();
    return p;
}

std::vector<FeatureConfig> SearchGrid::default_feature_grid() {
    std::vector<FeatureConfig> grid;
    for (int mfcc_count : {13, 26, 39, 52, 65}) {
        for (int frame : {256, 512, 1024, 2048, 4096}) {
            for (int segments : {50, 70, 100, 120, 150}) {
                FeatureConfig c;
                c.n_mfcc = mfcc_count;
                c.frame_len = frame;
                c.n_segments = segments;
                grid.push_back(c);
            }
        }
    }
    return grid;
}

std::vector<ModelSpec> SearchGrid::default_model_grid(ModelFamily family) {
    std::vector<ModelSpec> grid;
    switch (family) {
        case ModelFamily::LogisticRegression:
            for (int e = -7; e <= 7; ++e) {
                for (double l1 = 0.0; l1 <= 1.0001; l1 += 0.05) {
                    for (double l2 = 0.0; l2 <= 1.0001; l2 += 0.05) {
                        grid.push_back(ModelSpec::logistic_regression(std::pow(10.0, e), l1, l2));
                    }
                }
            }
            break;
        case ModelFamily::LinearSvm:
            for (int e = -7; e <= 7; ++e) grid.push_back(ModelSpec::linear_svm(std::pow(10.0, e)));
            break;
        case ModelFamily::Mlp:
            for (int eta = 10; eta <= 100; eta += 10) {
                for (int e = -7; e <= 7; ++e) {
                    for (double zeta2 = 0.05; zeta2 <= 1.0001; zeta2 += 0.05) {
                        grid.push_back(ModelSpec::mlp(eta, std::pow(10.0, e), zeta2));
                    }
                }
            }
            break;
        case ModelFamily::Cnn:
            for (int a1 : {24, 48, 96}) {
                for (int a2 : {2, 3}) {
                    for (double a3 : {0.1, 0.3, 0.5}) {
                        for (int a4 : {16, 32}) {
                            for (int xi1 : {64, 128, 256}) {
                                for (int xi2 : {10, 20}) {
                                    grid.push_back(ModelSpec::cnn(a1, a2, a3, a4, xi1, xi2));
                                }
                            }
                        }
                    }
                }
            }
            break;
        case ModelFamily::Lstm:
            for (int b1 : {64, 128, 256}) {
                for (int e = -4; e <= -2; ++e) {
                    for (double a3 : {0.1, 0.3, 0.5}) {
                        for (int a4 : {16, 32}) {
                            for (int xi1 : {64, 128, 256}) {
                                for (int xi2 : {10, 20}) {
                                    grid.push_back(
                                        ModelSpec::lstm(b1, std::pow(10.0, e), a3, a4, xi1, xi2));
                                }
                            }
                        }
                    }
                }
            }
            break;
        case ModelFamily::ResNet:
            for (int xi1 : {64, 128, 256}) {
                for (int xi2 : {10, 20}) {
                    grid.push_back(ModelSpec::resnet(ResNetPreset::Tiny, xi1, xi2));
                }
            }
            break;
    }
    return grid;
}

namespace {

std::string sanitize(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
    }
    return out;
}

std::string clip_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

}  // namespace

std::vector<PatientFeatures> extract_dataset(const std::vector<PatientRecord>& records,
                                             const PipelineConfig& config, int workers,
                                             const std::string& cache_dir) {
    if (records.empty()) throw EmptyInput("extract_dataset: no patients");
    config.feat.validate();
    const std::uint64_t config_hash = config.feat.hash();

    std::string cache_subdir;
    if (!cache_dir.empty()) {
        std::ostringstream dir;
        dir << cache_dir << "/" << std::hex << config_hash;
        cache_subdir = dir.str();
        std::filesystem::create_directories(cache_subdir);
    }

    struct Task {
        std::size_t patient;
        std::size_t clip;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < records.size(); ++p) {
        for (std::size_t c = 0; c < records[p].clip_paths.size(); ++c) tasks.push_back({p, c});
    }

    std::vector<PatientFeatures> out(records.size());
    for (std::size_t p = 0; p < records.size(); ++p) {
        out[p].patient_id = records[p].patient_id;
        out[p].label = binary_label(records[p].label);
        out[p].coughs.resize(records[p].clip_paths.size());
    }

    parallel_for(tasks.size(), workers, [&](std::size_t t) {
        const auto& record = records[tasks[t].patient];
        const std::string& path = record.clip_paths[tasks[t].clip];
        const std::string cough_id =
            sanitize(record.patient_id) + "_" + std::to_string(tasks[t].clip) + "_" +
            sanitize(clip_stem(path));

        std::string cache_path;
        if (!cache_subdir.empty()) {
            cache_path = cache_subdir + "/" + cough_id + ".fc";
            if (std::filesystem::exists(cache_path)) {
                out[tasks[t].patient].coughs[tasks[t].clip] =
                    load_feature_matrix(cache_path, config_hash);
                return;
            }
        }

        AudioClip clip;
        try {
            clip = read_wav(path);
        } catch (const Error& e) {
            throw IoError("while reading " + path + ": " + e.what());
        }
        clip.patient_id = record.patient_id;
        clip.cough_id = cough_id;
        clip.label = record.label;
        const AudioClip processed = preprocess(clip, config.pre);
        FeatureMatrix features = extract_features(processed, config.feat);
        if (!cache_path.empty()) save_feature_matrix(cache_path, features, config_hash);
        out[tasks[t].patient].coughs[tasks[t].clip] = std::move(features);
    });
    return out;
}

namespace {

struct TrainingSet {
    std::vector<Matrix2D> coughs;
    std::vector<int> labels;
};

/// Gathers the fit patients' coughs and appends SMOTE synthetics for the
/// minority class. Asserts that only fit-partition vectors reach smote.
TrainingSet build_training_set(const std::vector<PatientFeatures>& dataset,
                               const std::unordered_map<std::string, std::size_t>& index,
                               const std::vector<std::string>& fit_ids, const SmoteConfig& smote_cfg,
                               std::uint64_t smote_seed) {
    const auto fit_set = as_set(fit_ids);
    TrainingSet ts;
    std::vector<std::vector<double>> minority;
    std::vector<std::string> minority_sources;
    std::size_t rows = 0, cols = 0;
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& id : fit_ids) {
        const auto it = index.find(id);
        if (it == index.end()) throw InvalidPlan("plan patient missing from dataset: " + id);
        const auto& patient = dataset[it->second];
        for (const auto& cough : patient.coughs) {
            ts.coughs.push_back(cough.values);
            ts.labels.push_back(patient.label);
            (patient.label == 1 ? n_pos : n_neg) += 1;
            rows = cough.values.rows();
            cols = cough.values.cols();
        }
    }
    if (n_pos == 0 || n_neg == 0) {
        throw DegenerateLabels("training side has a single class");
    }

    const int minority_label = n_pos <= n_neg ? 1 : 0;
    const std::size_t majority_count = std::max(n_pos, n_neg);
    for (std::size_t i = 0; i < ts.coughs.size(); ++i) {
        if (ts.labels[i] == minority_label) {
            minority.push_back(ts.coughs[i].data());
            minority_sources.push_back("fit");
        }
    }
    // leakage guard: every vector handed to smote must come from the fit side
    for (const auto& src : minority_sources) {
        if (src != "fit") throw LeakageError("non-fit vector reached smote");
    }
    if (minority.size() >= 2 && majority_count > minority.size()) {
        SmoteConfig cfg = smote_cfg;
        cfg.seed = smote_seed;
        const auto synthetics = smote(minority, majority_count, cfg);
        for (const auto& v : synthetics) {
            ts.coughs.emplace_back(rows, cols, v);
            ts.labels.push_back(minority_label);
        }
    }
    return ts;
}

struct PatientPrediction {
    std::vector<double> per_cough_phat;
    std::vector<double> per_block_probs;
};

PatientPrediction predict_patient(const TrainedModel& model, const PatientFeatures& patient) {
    PatientPrediction pred;
    for (const auto& cough : patient.coughs) {
        const auto probs = model.predict_segment_probs(cough.values);
        double acc = 0.0;
        for (double p : probs) acc += p;
        pred.per_cough_phat.push_back(acc / static_cast<double>(probs.size()));
        pred.per_block_probs.insert(pred.per_block_probs.end(), probs.begin(), probs.end());
    }
    return pred;
}

std::vector<PatientScore> score_patients(const TrainedModel& model,
                                         const std::vector<const PatientFeatures*>& patients,
                                         double gamma_ee) {
    std::vector<PatientScore> scores;
    scores.reserve(patients.size());
    for (const auto* patient : patients) {
        const auto pred = predict_patient(model, *patient);
        scores.push_back(covid_indexes(patient->patient_id, pred.per_cough_phat,
                                       pred.per_block_probs, gamma_ee, patient->label));
    }
    return scores;
}

struct SplitOutcome {
    double dev_auc = kNan;
    double gamma = kNan;
};

SplitOutcome evaluate_split(const std::vector<PatientFeatures>& dataset,
                            const std::unordered_map<std::string, std::size_t>& index,
                            const InnerSplit& split, const ModelSpec& spec,
                            ScoreFunction score_function, const SmoteConfig& smote_cfg,
                            std::uint64_t seed) {
    SplitOutcome outcome;
    TrainedModel model;
    try {
        const TrainingSet ts = build_training_set(dataset, index, split.fit, smote_cfg,
                                                  Rng::derive(seed, {0x50}));
        model = fit(spec, ts.coughs, ts.labels, Rng::derive(seed, {0x51}));
    } catch (const DivergedError&) {
        return outcome;  // NaN marks the split as failed for this point
    } catch (const DegenerateLabels&) {
        return outcome;
    }

    // cough-level ROC on dev gives the EER threshold for Eq-12 style scoring
    std::vector<std::pair<double, int>> cough_scores;
    std::vector<const PatientFeatures*> dev_patients;
    for (const auto& id : split.dev) {
        const auto it = index.find(id);
        if (it == index.end()) throw InvalidPlan("plan patient missing from dataset: " + id);
        const auto& patient = dataset[it->second];
        dev_patients.push_back(&patient);
        const auto pred = predict_patient(model, patient);
        for (double phat : pred.per_cough_phat) cough_scores.emplace_back(phat, patient.label);
    }
    try {
        const RocCurve cough_roc = roc_auc(cough_scores);
        outcome.gamma = eer_threshold(cough_roc);
        const auto scores = score_patients(model, dev_patients, outcome.gamma);
        std::vector<std::pair<double, int>> patient_scored;
        for (const auto& s : scores) {
            patient_scored.emplace_back(
                score_function == ScoreFunction::I1 ? s.covid_i1 : s.covid_i2, s.label);
        }
        outcome.dev_auc = roc_auc(patient_scored).auc;
    } catch (const DegenerateLabels&) {
        outcome.dev_auc = kNan;
        outcome.gamma = kNan;
    }
    return outcome;
}

/// Deterministic budget subsampling of the flat grid indices.
std::vector<std::size_t> select_points(std::size_t grid_size, std::size_t budget,
                                       std::uint64_t seed) {
    std::vector<std::size_t> points(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) points[i] = i;
    if (budget == 0 || budget >= grid_size) return points;
    Rng rng(Rng::derive(seed, {0xb5d6e7}));
    rng.shuffle(points);
    points.resize(budget);
    std::sort(points.begin(), points.end());
    return points;
}

struct Checkpoint {
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, SplitOutcome> done;
    std::ofstream appender;
    std::mutex mutex;

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) return;
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream ss(line);
            std::size_t fold, point, split;
            double auc, gamma;
            if (ss >> fold >> point >> split >> auc >> gamma) {
                done[{fold, point, split}] = {auc, gamma};
            }
        }
    }

    void open_for_append(const std::string& path) {
        appender.open(path, std::ios::app);
        if (!appender) throw IoError("cannot open checkpoint " + path);
    }

    void record(std::size_t fold, std::size_t point, std::size_t split, const SplitOutcome& o) {
        std::lock_guard lock(mutex);
        done[{fold, point, split}] = o;
        if (appender.is_open()) {
            // round-trip double precision so a resumed run is bit-identical
            char line[128];
            std::snprintf(line, sizeof(line), "%zu %zu %zu %.17g %.17g\n", fold, point, split,
                          o.dev_auc, o.gamma);
            appender << line;
            appender.flush();
        }
    }

    const SplitOutcome* find(std::size_t fold, std::size_t point, std::size_t split) {
        const auto it = done.find({fold, point, split});
        return it == done.end() ? nullptr : &it->second;
    }
};

}  // namespace

NestedCvResult run_nested_cv_features(const std::vector<std::vector<PatientFeatures>>& per_config,
                                      const SearchGrid& grid, const FoldPlan& plan,
                                      const NestedCvOptions& options) {
    plan.validate();
    if (per_config.size() != grid.feature_configs.size()) {
        throw ShapeError("run_nested_cv: feature sets do not match the grid");
    }
    if (grid.size() == 0) throw SearchFailed("empty hyperparameter grid");

    // per-config patient index
    std::vector<std::unordered_map<std::string, std::size_t>> indexes(per_config.size());
    for (std::size_t c = 0; c < per_config.size(); ++c) {
        for (std::size_t i = 0; i < per_config[c].size(); ++i) {
            indexes[c][per_config[c][i].patient_id] = i;
        }
    }

    const auto points = select_points(grid.size(), options.budget, options.seed);

    Checkpoint checkpoint;
    if (!options.checkpoint_path.empty()) {
        checkpoint.load(options.checkpoint_path);
        checkpoint.open_for_append(options.checkpoint_path);
    }

    NestedCvResult result;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        const OuterFold& fold = plan.folds[f];
        const std::size_t n_splits = fold.inner.size();

        struct TaskId {
            std::size_t point_pos, split;
        };
        std::vector<TaskId> tasks;
        for (std::size_t p = 0; p < points.size(); ++p) {
            for (std::size_t s = 0; s < n_splits; ++s) tasks.push_back({p, s});
        }

        std::vector<std::vector<SplitOutcome>> outcomes(points.size(),
                                                        std::vector<SplitOutcome>(n_splits));
        parallel_for(tasks.size(), options.workers, [&](std::size_t t) {
            const auto [p, s] = tasks[t];
            const std::size_t flat = points[p];
            if (const auto* prior = checkpoint.find(f, flat, s)) {
                outcomes[p][s] = *prior;
                return;
            }
            const auto gp = grid.point(flat);
            const std::uint64_t seed = Rng::derive(options.seed, {0xcf, f, flat, s});
            SplitOutcome o = evaluate_split(per_config[gp.feature_idx], indexes[gp.feature_idx],
                                            fold.inner[s], grid.model_specs[gp.model_idx],
                                            grid.score_functions[gp.score_idx],
                                            options.smote, seed);
            checkpoint.record(f, flat, s, o);
            outcomes[p][s] = o;
        });

        // pick the best point by mean dev AUC over its valid splits; a point
        // whose every split failed (divergence, degenerate dev draw) is skipped
        std::size_t best_pos = points.size();
        double best_auc = -1.0;
        std::vector<double> mean_gamma(points.size(), kNan);
        for (std::size_t p = 0; p < points.size(); ++p) {
            double auc_acc = 0.0, gamma_acc = 0.0;
            std::size_t valid = 0;
            for (const auto& o : outcomes[p]) {
                if (std::isnan(o.dev_auc)) continue;
                auc_acc += o.dev_auc;
                gamma_acc += o.gamma;
                ++valid;
            }
            if (valid == 0) continue;
            const double mean_auc = auc_acc / static_cast<double>(valid);
            mean_gamma[p] = gamma_acc / static_cast<double>(valid);
            if (mean_auc > best_auc) {
                best_auc = mean_auc;
                best_pos = p;
            }
        }
        if (best_pos == points.size()) {
            throw SearchFailed("every grid point failed on fold " + std::to_string(f));
        }

        const std::size_t flat = points[best_pos];
        const auto gp = grid.point(flat);
        const auto& dataset = per_config[gp.feature_idx];
        const auto& index = indexes[gp.feature_idx];
        const ScoreFunction score_fn = grid.score_functions[gp.score_idx];
        const double gamma = mean_gamma[best_pos];

        const std::uint64_t final_seed = Rng::derive(options.seed, {0xf1a1, f, flat});
        const TrainingSet ts = build_training_set(dataset, index, fold.train, options.smote,
                                                  Rng::derive(final_seed, {0x50}));
        TrainedModel model =
            fit(grid.model_specs[gp.model_idx], ts.coughs, ts.labels, Rng::derive(final_seed, {0x51}));

        std::vector<const PatientFeatures*> test_patients;
        for (const auto& id : fold.test) {
            const auto it = index.find(id);
            if (it == index.end()) throw InvalidPlan("plan patient missing from dataset: " + id);
            test_patients.push_back(&dataset[it->second]);
        }
        const auto scores = score_patients(model, test_patients, gamma);
        const double threshold = score_fn == ScoreFunction::I1 ? 0.5 : gamma;

        FoldResult fr;
        fr.report = report(scores, score_fn, threshold);
        fr.chosen_point = flat;
        fr.chosen_dev_auc = best_auc;
        fr.gamma_ee = gamma;
        fr.model = std::move(model);
        fr.test_scores = scores;
        result.folds.push_back(std::move(fr));
    }

    for (const auto& fr : result.folds) {
        result.mean_auc += fr.report.auc;
        result.mean_sensitivity += fr.report.sensitivity;
        result.mean_specificity += fr.report.specificity;
        result.mean_accuracy += fr.report.accuracy;
    }
    const auto n_folds = static_cast<double>(result.folds.size());
    result.mean_auc /= n_folds;
    result.mean_sensitivity /= n_folds;
    result.mean_specificity /= n_folds;
    result.mean_accuracy /= n_folds;
    return result;
}

SplitScore score_split(const std::vector<PatientFeatures>& dataset, const InnerSplit& split,
                       const ModelSpec& spec, ScoreFunction score_function,
                       const SmoteConfig& smote_config, std::uint64_t seed) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < dataset.size(); ++i) index[dataset[i].patient_id] = i;
    const SplitOutcome o = evaluate_split(dataset, index, split, spec, score_function,
                                          smote_config, seed);
    return {o.dev_auc, o.gamma};
}

NestedCvResult run_nested_cv(const std::vector<PatientRecord>& records, const SearchGrid& grid,
                             const FoldPlan& plan, const NestedCvOptions& options) {
    std::vector<std::vector<PatientFeatures>> per_config;
    per_config.reserve(grid.feature_configs.size());
    for (const auto& feat : grid.feature_configs) {
        PipelineConfig config{options.pre, feat};
        per_config.push_back(extract_dataset(records, config, options.workers));
    }
    return run_nested_cv_features(per_config, grid, plan, options);
}

EvalReport evaluate_external_features(const TrainedModel& model, double gamma_ee,
                                      ScoreFunction score_function,
                                      const std::vector<PatientFeatures>& dataset) {
    if (dataset.empty()) throw EmptyInput("evaluate_external: no patients");
    for (const auto& patient : dataset) {
        for (const auto& cough : patient.coughs) {
            if (cough.values.cols() != model.shape.cols ||
                (model.shape.kind == InputShape::Kind::Matrix &&
                 cough.values.rows() != model.shape.rows)) {
                throw ShapeError("evaluate_external: features do not match the model's shape");
            }
        }
    }
    std::vector<const PatientFeatures*> patients;
    patients.reserve(dataset.size());
    for (const auto& p : dataset) patients.push_back(&p);
    const auto scores = score_patients(model, patients, gamma_ee);
    const double threshold = score_function == ScoreFunction::I1 ? 0.5 : gamma_ee;
    return report(scores, score_function, threshold);
}

EvalReport evaluate_external(const TrainedModel& model, double gamma_ee,
                             ScoreFunction score_function,
                             const std::vector<PatientRecord>& records,
                             const PipelineConfig& config, int workers) {
    if (records.empty()) throw EmptyInput("evaluate_external: empty manifest");
    if (static_cast<std::size_t>(config.feat.feature_dim()) != model.shape.cols) {
        throw ShapeError("evaluate_external: feature config dimension " +
                         std::to_string(config.feat.feature_dim()) + " does not match model (" +
                         std::to_string(model.shape.cols) + ")");
    }
    const auto dataset = extract_dataset(records, config, workers);
    return evaluate_external_features(model, gamma_ee, score_function, dataset);
}

}  // namespace coughnet
