#include "coughnet/synth.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "coughnet/audio.hpp"

namespace coughnet {

std::vector<double> synth_clip(const SynthConfig& config, double center_hz, std::uint64_t seed) {
    Rng rng(seed);
    const double sr = static_cast<double>(config.sample_rate_hz);
    const int n_bursts =
        config.min_bursts +
        static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.max_bursts - config.min_bursts + 1)));

    struct Burst {
        std::size_t start, len;
    };
    std::vector<Burst> bursts;
    std::size_t cursor = static_cast<std::size_t>(0.3 * sr);
    for (int b = 0; b < n_bursts; ++b) {
        const std::size_t len = static_cast<std::size_t>(rng.uniform(0.25, 0.40) * sr);
        bursts.push_back({cursor, len});
        cursor += len + static_cast<std::size_t>(rng.uniform(0.25, 0.50) * sr);
    }
    const std::size_t total = cursor + static_cast<std::size_t>(0.3 * sr);

    const double background_rms = 0.02;
    const double burst_rms = background_rms * std::pow(10.0, config.snr_db / 20.0);

    std::vector<double> samples(total);
    for (double& s : samples) s = background_rms * rng.normal();

    // band-limited noise: a sum of random-phase tones inside the band
    constexpr int kTones = 40;
    for (const auto& burst : bursts) {
        std::vector<double> freqs(kTones), phases(kTones);
        for (int t = 0; t < kTones; ++t) {
            freqs[t] = rng.uniform(center_hz - config.bandwidth_hz / 2.0,
                                   center_hz + config.bandwidth_hz / 2.0);
            phases[t] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        // sum of K equal tones with random phases has RMS sqrt(K/2) per unit amplitude
        const double amplitude = burst_rms / std::sqrt(kTones / 2.0);
        for (std::size_t i = 0; i < burst.len && burst.start + i < total; ++i) {
            const double t = static_cast<double>(i) / sr;
            double v = 0.0;
            for (int k = 0; k < kTones; ++k) {
                v += std::sin(2.0 * std::numbers::pi * freqs[k] * t + phases[k]);
            }
            samples[burst.start + i] += amplitude * v;
        }
    }

    double peak = 0.0;
    for (double s : samples) peak = std::max(peak, std::fabs(s));
    if (peak > 0.0) {
        for (double& s : samples) s *= 0.9 / peak;
    }
    return samples;
}

std::vector<PatientRecord> generate_synth_corpus(const SynthConfig& config,
                                                 const std::string& out_dir) {
    if (config.n_patients < 4 || config.n_patients % 2 != 0) {
        throw InvalidLength("generate_synth_corpus: n_patients must be even and >= 4");
    }
    const std::string audio_dir = out_dir + "/audio";
    std::filesystem::create_directories(audio_dir);

    std::vector<PatientRecord> records;
    Rng rng(Rng::derive(config.seed, {0x5e1f}));
    const std::size_t per_class = config.n_patients / 2;
    for (std::size_t p = 0; p < config.n_patients; ++p) {
        const bool class_a = p < per_class;
        PatientRecord record;
        record.patient_id = (class_a ? "A" : "B") + std::to_string(p % per_class);
        record.label = class_a ? Label::Positive : Label::Healthy;
        const int n_coughs =
            config.min_coughs +
            static_cast<int>(rng.uniform_int(
                static_cast<std::uint64_t>(config.max_coughs - config.min_coughs + 1)));
        for (int c = 0; c < n_coughs; ++c) {
            const std::uint64_t clip_seed = Rng::derive(config.seed, {0xc11b, p, static_cast<std::uint64_t>(c)});
            const auto samples = synth_clip(
                config, class_a ? config.class_a_center_hz : config.class_b_center_hz, clip_seed);
            const std::string path =
                audio_dir + "/" + record.patient_id + "_" + std::to_string(c) + ".wav";
            write_wav_pcm16(path, samples, config.sample_rate_hz);
            record.clip_paths.push_back(path);
        }
        records.push_back(std::move(record));
    }
    write_manifest(out_dir + "/manifest.csv", records);
    return records;
}

SynthDemoResult run_synth_demo(std::uint64_t seed, const std::string& out_dir, int workers,
                               std::size_t n_patients) {
    const auto t0 = std::chrono::steady_clock::now();

    SynthConfig synth_cfg;
    synth_cfg.n_patients = n_patients;
    synth_cfg.seed = seed;
    const auto records = generate_synth_corpus(synth_cfg, out_dir);

    SearchGrid grid;
    FeatureConfig feat;
    feat.n_mfcc = 13;
    feat.frame_len = 1024;
    feat.n_segments = 50;
    grid.feature_configs = {feat};
    grid.model_specs = {ModelSpec::logistic_regression(0.01, 0.0, 1.0),
                        ModelSpec::logistic_regression(1.0, 0.5, 0.5)};
    grid.score_functions = {ScoreFunction::I1, ScoreFunction::I2};

    // J:K scales with the corpus; 60 patients -> J=12, K=10. The K floor of
    // 4 keeps tiny corpora likely to draw mixed-class dev sets.
    const std::size_t j_size = std::max<std::size_t>(2, n_patients / 5);
    const std::size_t k_size = std::max<std::size_t>(4, n_patients / 6);

    std::vector<std::string> patients;
    patients.reserve(records.size());
    for (const auto& r : records) patients.push_back(r.patient_id);

    // small corpora can draw single-class test or dev sets, which have no
    // defined AUC; advance the plan seed until every side is evaluable
    auto evaluable = [&records](const FoldPlan& plan) {
        auto mixed = [&records](const std::vector<std::string>& ids) {
            bool pos = false, other = false;
            for (const auto& id : ids) {
                for (const auto& r : records) {
                    if (r.patient_id == id) {
                        (r.label == Label::Positive ? pos : other) = true;
                        break;
                    }
                }
            }
            return pos && other;
        };
        for (const auto& fold : plan.folds) {
            if (!mixed(fold.test) || !mixed(fold.train)) return false;
            for (const auto& split : fold.inner) {
                if (!mixed(split.dev) || !mixed(split.fit)) return false;
            }
        }
        return true;
    };
    FoldPlan plan = make_fold_plan(patients, j_size, k_size, seed);
    for (std::uint64_t attempt = 1; !evaluable(plan); ++attempt) {
        if (attempt > 256) throw InvalidPlan("synth demo: no evaluable fold plan found");
        plan = make_fold_plan(patients, j_size, k_size, Rng::derive(seed, {0x9a7, attempt}));
    }

    NestedCvOptions options;
    options.seed = seed;
    options.workers = workers;
    options.smote.seed = seed;

    const NestedCvResult result = run_nested_cv(records, grid, plan, options);

    SynthDemoResult demo;
    demo.mean_outer_auc = result.mean_auc;
    demo.manifest_path = out_dir + "/manifest.csv";
    for (const auto& fold : result.folds) demo.fold_aucs.push_back(fold.report.auc);

    // pooled outer-fold patient scores; every patient is tested exactly once
    std::vector<std::pair<double, int>> pooled;
    for (const auto& fold : result.folds) {
        const bool use_i1 = fold.report.score_function == ScoreFunction::I1;
        for (const auto& s : fold.test_scores) {
            pooled.emplace_back(use_i1 ? s.covid_i1 : s.covid_i2, s.label);
        }
    }
    demo.roc_csv_path = out_dir + "/roc.csv";
    write_roc_csv(roc_auc(pooled), demo.roc_csv_path);

    demo.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return demo;
}

}  // namespace coughnet
