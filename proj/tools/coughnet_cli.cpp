#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coughnet/crossval.hpp"
#include "coughnet/selection.hpp"
#include "coughnet/synth.hpp"

using nlohmann::json;

namespace {

using namespace coughnet;

std::string cache_dir_default() {
    if (const char* env = std::getenv("COUGHNET_CACHE_DIR")) return env;
    return "";
}

FeatureConfig feature_config_from_json(const json& j) {
    FeatureConfig c;
    c.n_mfcc = j.value("n_mfcc", c.n_mfcc);
    c.frame_len = j.value("frame_len", c.frame_len);
    c.n_segments = j.value("n_segments", c.n_segments);
    c.hop_len = j.value("hop_len", c.hop_len);
    c.n_mel_filters = j.value("n_mel_filters", c.n_mel_filters);
    c.include_deltas = j.value("include_deltas", c.include_deltas);
    c.include_log_energy = j.value("include_log_energy", c.include_log_energy);
    c.include_zcr = j.value("include_zcr", c.include_zcr);
    c.include_kurtosis = j.value("include_kurtosis", c.include_kurtosis);
    c.validate();
    return c;
}

PreprocessConfig preprocess_config_from_json(const json& j) {
    PreprocessConfig p;
    p.margin_ms = j.value("margin_ms", p.margin_ms);
    p.window_ms = j.value("window_ms", p.window_ms);
    p.threshold_db = j.value("threshold_db", p.threshold_db);
    return p;
}

ModelSpec model_spec_from_json(const json& j) {
    const ModelFamily family = parse_family(j.at("family").get<std::string>());
    ModelSpec s;
    switch (family) {
        case ModelFamily::LogisticRegression:
            s = ModelSpec::logistic_regression(j.value("nu1", 1.0), j.value("nu2", 0.0),
                                               j.value("nu3", 1.0));
            break;
        case ModelFamily::LinearSvm:
            s = ModelSpec::linear_svm(j.value("nu1", 1.0));
            break;
        case ModelFamily::Mlp:
            s = ModelSpec::mlp(j.value("eta", 50), j.value("zeta1", 1e-4), j.value("zeta2", 0.1));
            break;
        case ModelFamily::Cnn:
            s = ModelSpec::cnn(j.value("alpha1", 24), j.value("alpha2", 2), j.value("alpha3", 0.1),
                               j.value("alpha4", 16), j.value("xi1", 64), j.value("xi2", 10));
            break;
        case ModelFamily::Lstm:
            s = ModelSpec::lstm(j.value("beta1", 64), j.value("beta2", 1e-3), j.value("alpha3", 0.1),
                                j.value("alpha4", 16), j.value("xi1", 64), j.value("xi2", 10));
            break;
        case ModelFamily::ResNet:
            s = ModelSpec::resnet(j.value("preset", std::string("tiny")) == "resnet50_audio"
                                      ? ResNetPreset::ResNet50Audio
                                      : ResNetPreset::Tiny,
                                  j.value("xi1", 64), j.value("xi2", 10));
            break;
    }
    if (j.contains("learning_rate")) s.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("epochs")) s.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) s.batch_size = j["batch_size"].get<int>();
    return s;
}

struct RunConfig {
    std::string manifest;
    std::string external_manifest;
    std::size_t j_size = 234;
    std::size_t k_size = 187;
    std::size_t inner_splits = 4;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    int workers = 0;
    std::string out_dir = "runs/out";
    std::string cache_dir;
    SearchGrid grid;
    PreprocessConfig pre;
    SmoteConfig smote;
};

RunConfig run_config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("run config " + path + ": " + e.what());
    }

    RunConfig rc;
    rc.manifest = j.value("manifest", "");
    rc.external_manifest = j.value("external_manifest", "");
    rc.j_size = j.value("J", rc.j_size);
    rc.k_size = j.value("K", rc.k_size);
    rc.inner_splits = j.value("inner_splits", rc.inner_splits);
    rc.seed = j.value("seed", rc.seed);
    rc.budget = j.value("budget", rc.budget);
    rc.workers = j.value("workers", rc.workers);
    rc.out_dir = j.value("out_dir", rc.out_dir);
    rc.cache_dir = j.value("cache_dir", cache_dir_default());
    if (j.contains("preprocess")) rc.pre = preprocess_config_from_json(j["preprocess"]);
    if (j.contains("smote")) {
        rc.smote.n_candidates = j["smote"].value("n_candidates", rc.smote.n_candidates);
        rc.smote.target_ratio = j["smote"].value("target_ratio", rc.smote.target_ratio);
    }
    rc.smote.seed = rc.seed;

    const json grid = j.value("grid", json::object());
    if (grid.contains("features")) {
        for (const auto& f : grid["features"]) {
            rc.grid.feature_configs.push_back(feature_config_from_json(f));
        }
    } else {
        rc.grid.feature_configs = {FeatureConfig{}};
    }
    if (grid.contains("models")) {
        for (const auto& m : grid["models"]) rc.grid.model_specs.push_back(model_spec_from_json(m));
    } else if (grid.contains("families")) {
        for (const auto& fam : grid["families"]) {
            const auto specs = SearchGrid::default_model_grid(parse_family(fam.get<std::string>()));
            rc.grid.model_specs.insert(rc.grid.model_specs.end(), specs.begin(), specs.end());
        }
    } else {
        rc.grid.model_specs = {ModelSpec::logistic_regression()};
    }
    if (grid.contains("score_functions")) {
        rc.grid.score_functions.clear();
        for (const auto& s : grid["score_functions"]) {
            rc.grid.score_functions.push_back(parse_score_function(s.get<std::string>()));
        }
    }
    return rc;
}

json report_to_json(const EvalReport& rep) {
    return json{{"auc", rep.auc},
                {"gamma_ee", rep.gamma_ee},
                {"decision_threshold", rep.decision_threshold},
                {"sensitivity", rep.sensitivity},
                {"specificity", rep.specificity},
                {"accuracy", rep.accuracy},
                {"eer_sensitivity", rep.eer_sensitivity},
                {"eer_specificity", rep.eer_specificity},
                {"eer_accuracy", rep.eer_accuracy},
                {"score_function", score_function_name(rep.score_function)},
                {"n_patients", rep.n_patients}};
}

struct PreprocessOverrides {
    double margin_ms = -1.0;    // negative = keep config value
    double window_ms = -1.0;
    double threshold_db = 1.0;  // positive = keep config value
};

int cmd_extract(const std::string& config_path, const std::string& manifest_path,
                const std::string& out_dir, int workers, const PreprocessOverrides& overrides) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open feature config " + config_path);
    json j;
    in >> j;
    PipelineConfig config;
    config.feat = feature_config_from_json(j.value("features", j));
    if (j.contains("preprocess")) config.pre = preprocess_config_from_json(j["preprocess"]);
    if (overrides.margin_ms >= 0.0) config.pre.margin_ms = overrides.margin_ms;
    if (overrides.window_ms >= 0.0) config.pre.window_ms = overrides.window_ms;
    if (overrides.threshold_db <= 0.0) config.pre.threshold_db = overrides.threshold_db;

    const auto records = load_manifest(manifest_path);
    std::filesystem::create_directories(out_dir);
    const auto dataset = extract_dataset(records, config, workers, out_dir);
    std::size_t n_coughs = 0;
    for (const auto& p : dataset) n_coughs += p.coughs.size();
    std::cout << "extracted " << n_coughs << " coughs for " << dataset.size()
              << " patients into " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& run_config_path) {
    const RunConfig rc = run_config_from_file(run_config_path);
    if (rc.manifest.empty()) throw IoError("run config missing 'manifest'");
    const auto records = load_manifest(rc.manifest);

    std::vector<std::string> patients;
    patients.reserve(records.size());
    for (const auto& r : records) patients.push_back(r.patient_id);
    const FoldPlan plan = make_fold_plan(patients, rc.j_size, rc.k_size, rc.seed, rc.inner_splits);

    std::filesystem::create_directories(rc.out_dir);
    NestedCvOptions options;
    options.seed = rc.seed;
    options.workers = rc.workers;
    options.budget = rc.budget;
    options.smote = rc.smote;
    options.pre = rc.pre;
    options.checkpoint_path = rc.out_dir + "/checkpoint.log";

    const NestedCvResult result = run_nested_cv(records, rc.grid, plan, options);

    json chosen = json::array();
    for (std::size_t f = 0; f < result.folds.size(); ++f) {
        const auto& fold = result.folds[f];
        const auto gp = rc.grid.point(fold.chosen_point);
        const auto& feat = rc.grid.feature_configs[gp.feature_idx];
        const auto& spec = rc.grid.model_specs[gp.model_idx];
        json fold_json = {{"fold", f},
                          {"chosen_point", fold.chosen_point},
                          {"family", family_name(spec.family)},
                          {"n_mfcc", feat.n_mfcc},
                          {"frame_len", feat.frame_len},
                          {"n_segments", feat.n_segments},
                          {"score_function",
                           score_function_name(rc.grid.score_functions[gp.score_idx])},
                          {"dev_auc", fold.chosen_dev_auc},
                          {"gamma_ee", fold.gamma_ee},
                          {"report", report_to_json(fold.report)}};
        chosen.push_back(fold_json);

        std::ofstream rep(rc.out_dir + "/fold_" + std::to_string(f) + "_report.json");
        rep << fold_json.dump(2) << "\n";
        write_roc_csv(fold.report.roc, rc.out_dir + "/fold_" + std::to_string(f) + "_roc.csv");
        save_model(fold.model, rc.out_dir + "/fold_" + std::to_string(f) + "_model.bin");
        std::ofstream gamma(rc.out_dir + "/fold_" + std::to_string(f) + "_gamma.txt");
        gamma << fold.gamma_ee << "\n";
    }

    const json aggregate = {{"mean_auc", result.mean_auc},
                            {"mean_sensitivity", result.mean_sensitivity},
                            {"mean_specificity", result.mean_specificity},
                            {"mean_accuracy", result.mean_accuracy},
                            {"folds", chosen}};
    std::ofstream agg(rc.out_dir + "/aggregate.json");
    agg << aggregate.dump(2) << "\n";
    std::cout << "mean outer AUC " << result.mean_auc << " over " << result.folds.size()
              << " folds; reports in " << rc.out_dir << "\n";
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& manifest_path,
                 const std::string& out_dir, double gamma, const std::string& score_fn,
                 int workers, const json& feature_json) {
    const TrainedModel model = load_model(model_path);
    const auto records = load_manifest(manifest_path);
    PipelineConfig config;
    config.feat = feature_config_from_json(feature_json);
    const EvalReport rep = evaluate_external(model, gamma, parse_score_function(score_fn), records,
                                             config, workers);
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir + "/external_report.json");
    out << report_to_json(rep).dump(2) << "\n";
    write_roc_csv(rep.roc, out_dir + "/external_roc.csv");
    std::cout << format_report(rep);
    return 0;
}

int cmd_sfs(const std::string& run_config_path, const std::string& family, std::size_t max_dims) {
    const RunConfig rc = run_config_from_file(run_config_path);
    if (rc.manifest.empty()) throw IoError("run config missing 'manifest'");
    const auto records = load_manifest(rc.manifest);

    PipelineConfig config{rc.pre, rc.grid.feature_configs.front()};
    const auto dataset = extract_dataset(records, config, rc.workers,
                                         rc.cache_dir.empty() ? "" : rc.cache_dir);

    std::vector<std::string> patients;
    for (const auto& r : records) patients.push_back(r.patient_id);
    const FoldPlan plan = make_fold_plan(patients, rc.j_size, rc.k_size, rc.seed,
                                         std::max<std::size_t>(2, rc.inner_splits / 2));

    ModelSpec spec = rc.grid.model_specs.front();
    if (!family.empty()) {
        for (const auto& m : rc.grid.model_specs) {
            if (family_name(m.family) == family) {
                spec = m;
                break;
            }
        }
    }

    SfsOptions options;
    options.max_dims = max_dims;
    options.smote = rc.smote;
    options.seed = rc.seed;
    options.workers = rc.workers;
    options.score_function = rc.grid.score_functions.front();

    const SfsResult result = sfs(dataset, spec, plan.folds.front().inner, options);
    std::filesystem::create_directories(rc.out_dir);
    write_sfs_csv(result, rc.out_dir + "/sfs.csv");
    std::cout << "sfs: best AUC " << result.best_auc << " with " << result.best_subset.size()
              << " dims; trace in " << rc.out_dir << "/sfs.csv\n";
    return 0;
}

int cmd_report(const std::string& in_dir, const std::string& out_path) {
    json aggregate;
    {
        std::ifstream in(in_dir + "/aggregate.json");
        if (!in) throw IoError("no aggregate.json under " + in_dir);
        in >> aggregate;
    }
    std::ostringstream table;
    table << "fold  family  features                   specificity  sensitivity  accuracy  auc\n";
    for (const auto& fold : aggregate.at("folds")) {
        const auto& rep = fold.at("report");
        char features[64];
        std::snprintf(features, sizeof(features), "MFCC=%d, Frame=%d, Seg=%d",
                      fold.value("n_mfcc", 0), fold.value("frame_len", 0),
                      fold.value("n_segments", 0));
        char line[256];
        std::snprintf(line, sizeof(line), "%-5d %-7s %-26s %10.2f%% %11.2f%% %8.2f%% %7.4f\n",
                      fold.value("fold", 0), fold.value("family", "?").c_str(), features,
                      100.0 * rep.value("specificity", 0.0), 100.0 * rep.value("sensitivity", 0.0),
                      100.0 * rep.value("accuracy", 0.0), rep.value("auc", 0.0));
        table << line;
    }
    char mean_line[160];
    std::snprintf(mean_line, sizeof(mean_line),
                  "mean %38s %10.2f%% %11.2f%% %8.2f%% %7.4f\n", "",
                  100.0 * aggregate.value("mean_specificity", 0.0),
                  100.0 * aggregate.value("mean_sensitivity", 0.0),
                  100.0 * aggregate.value("mean_accuracy", 0.0),
                  aggregate.value("mean_auc", 0.0));
    table << mean_line;

    if (out_path.empty()) {
        std::cout << table.str();
    } else {
        std::ofstream out(out_path);
        out << table.str();
        std::cout << "report written to " << out_path << "\n";
    }
    return 0;
}

int cmd_synth_demo(std::uint64_t seed, const std::string& out_dir, int workers,
                   std::size_t n_patients) {
    const SynthDemoResult result = run_synth_demo(seed, out_dir, workers, n_patients);
    std::cout << "synth-demo: mean outer AUC " << result.mean_outer_auc << " over "
              << result.fold_aucs.size() << " folds in " << result.seconds << " s\n";
    std::cout << "roc curve: " << result.roc_csv_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cough audio COVID-19 classification toolkit"};
    app.require_subcommand(1);

    int workers = 0;
    app.add_option("--workers", workers, "worker pool size (0 = hardware concurrency)");

    // extract
    auto* extract = app.add_subcommand("extract", "fill the feature cache for a manifest");
    extract->fallthrough();
    std::string extract_config, extract_manifest, extract_out;
    PreprocessOverrides pre_overrides;
    extract->add_option("--config", extract_config, "feature config JSON")->required();
    extract->add_option("--manifest", extract_manifest, "dataset manifest CSV")->required();
    extract->add_option("--out", extract_out, "cache directory")->required();
    extract->add_option("--margin-ms", pre_overrides.margin_ms,
                        "silence margin kept around active audio");
    extract->add_option("--window-ms", pre_overrides.window_ms, "energy detector window");
    extract->add_option("--threshold-db", pre_overrides.threshold_db,
                        "silence threshold relative to peak RMS");

    // train
    auto* train = app.add_subcommand("train", "run nested cross-validation with grid search");
    train->fallthrough();
    std::string train_config;
    train->add_option("--run-config", train_config, "run config JSON")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a trained model on an external set");
    evaluate->fallthrough();
    std::string eval_model, eval_manifest, eval_out = "runs/external", eval_score = "I2";
    double eval_gamma = 0.5;
    int eval_mfcc = 13, eval_frame = 1024, eval_seg = 50;
    evaluate->add_option("--model", eval_model, "model file")->required();
    evaluate->add_option("--manifest", eval_manifest, "external manifest CSV")->required();
    evaluate->add_option("--out", eval_out, "output directory");
    evaluate->add_option("--gamma", eval_gamma, "cough-level EER threshold from training");
    evaluate->add_option("--score-function", eval_score, "I1 or I2");
    evaluate->add_option("--n-mfcc", eval_mfcc, "feature config: MFCC count");
    evaluate->add_option("--frame-len", eval_frame, "feature config: frame length");
    evaluate->add_option("--n-segments", eval_seg, "feature config: segment count");

    // sfs
    auto* sfs_cmd = app.add_subcommand("sfs", "sequential forward feature selection");
    sfs_cmd->fallthrough();
    std::string sfs_config, sfs_family;
    std::size_t sfs_max_dims = 0;
    sfs_cmd->add_option("--run-config", sfs_config, "run config JSON")->required();
    sfs_cmd->add_option("--family", sfs_family, "model family to search with");
    sfs_cmd->add_option("--max-dims", sfs_max_dims, "stop after this many selections");

    // report
    auto* report_cmd = app.add_subcommand("report", "render result tables and CSVs");
    report_cmd->fallthrough();
    std::string report_in, report_out;
    report_cmd->add_option("--in", report_in, "training output directory")->required();
    report_cmd->add_option("--out", report_out, "write the table here instead of stdout");

    // synth-demo
    auto* synth = app.add_subcommand("synth-demo", "synthetic end-to-end pipeline check");
    synth->fallthrough();
    std::uint64_t synth_seed = 7;
    std::string synth_out = "runs/synth-demo";
    std::size_t synth_patients = 60;
    synth->add_option("--seed", synth_seed, "corpus and pipeline seed");
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--patients", synth_patients, "number of synthetic patients (even)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (extract->parsed()) {
            return cmd_extract(extract_config, extract_manifest, extract_out, workers,
                               pre_overrides);
        }
        if (train->parsed()) return cmd_train(train_config);
        if (evaluate->parsed()) {
            const json feat = {{"n_mfcc", eval_mfcc}, {"frame_len", eval_frame},
                               {"n_segments", eval_seg}};
            return cmd_evaluate(eval_model, eval_manifest, eval_out, eval_gamma, eval_score,
                                workers, feat);
        }
        if (sfs_cmd->parsed()) return cmd_sfs(sfs_config, sfs_family, sfs_max_dims);
        if (report_cmd->parsed()) return cmd_report(report_in, report_out);
        if (synth->parsed()) return cmd_synth_demo(synth_seed, synth_out, workers, synth_patients);
    } catch (const std::exception& e) {
        const json error = {{"error", typeid(e).name()}, {"message", e.what()}};
        std::cerr << error.dump() << "\n";
        return 1;
    }
    return 0;
}
