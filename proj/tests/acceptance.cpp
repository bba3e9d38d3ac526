// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "coughnet/crossval.hpp"
#include "coughnet/selection.hpp"
#include "coughnet/synth.hpp"
#include "oracles.hpp"

using namespace coughnet;

namespace {

struct Checker {
    bool ok = true;
    std::ostringstream detail;

    void require(bool condition, const std::string& message) {
        if (!condition) {
            ok = false;
            detail << "    failed: " << message << "\n";
        }
    }
};

int g_failures = 0;

void run_criterion(int id, const std::string& name, const std::function<void(Checker&)>& body) {
    Checker checker;
    try {
        body(checker);
    } catch (const std::exception& e) {
        checker.ok = false;
        checker.detail << "    exception: " << e.what() << "\n";
    }
    std::printf("%s criterion %d: %s\n", checker.ok ? "PASS" : "FAIL", id, name.c_str());
    if (!checker.ok) {
        std::fputs(checker.detail.str().c_str(), stdout);
        ++g_failures;
    }
    std::fflush(stdout);
}

std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::vector<std::string> patient_ids(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
    return ids;
}

/// 42-dim features, 39 pure noise. Each informative dim carries a
/// patient-level random effect (mu toward the class, spread tau), giving
/// irreducible patient overlap so dev AUC stays off the 1.0 ceiling and
/// each added informative dim still buys measurable AUC.
std::vector<PatientFeatures> sfs_feature_set(std::size_t n_patients,
                                             const std::set<std::size_t>& informative,
                                             std::uint64_t seed) {
    constexpr std::size_t kSegments = 8;
    constexpr std::size_t kDims = 42;
    constexpr double kMu = 1.0;
    constexpr double kTau = 1.3;
    Rng rng(seed);
    std::vector<PatientFeatures> out;
    for (std::size_t p = 0; p < n_patients; ++p) {
        PatientFeatures patient;
        patient.patient_id = "p" + std::to_string(p);
        patient.label = p % 2 == 0 ? 1 : 0;
        std::vector<double> effect(kDims, 0.0);
        for (std::size_t d : informative) {
            effect[d] = (patient.label == 1 ? kMu : -kMu) + kTau * rng.normal();
        }
        FeatureMatrix fm;
        fm.patient_id = patient.patient_id;
        fm.cough_id = patient.patient_id + "_0";
        fm.label = patient.label == 1 ? Label::Positive : Label::Healthy;
        fm.values = Matrix2D(kSegments, kDims);
        for (std::size_t s = 0; s < kSegments; ++s) {
            for (std::size_t d = 0; d < kDims; ++d) {
                fm.values(s, d) = effect[d] + rng.normal();
            }
        }
        for (std::size_t d = 0; d < kDims; ++d) fm.dim_names.push_back("dim_" + std::to_string(d));
        patient.coughs.push_back(std::move(fm));
        out.push_back(std::move(patient));
    }
    return out;
}

}  // namespace

int main() {
    // 1. published reference results are documentation targets only
    run_criterion(1, "reference results recorded as documentation targets", [](Checker& c) {
        c.require(reference_targets::kResnet50Auc == 0.9759, "Resnet50 AUC target pinned");
        c.require(reference_targets::kResnet50Specificity == 0.98 &&
                      reference_targets::kResnet50Sensitivity == 0.93 &&
                      reference_targets::kResnet50Accuracy == 0.953,
                  "Resnet50 operating-point targets pinned");
        c.require(reference_targets::kLstmSfsAuc == 0.9375, "LSTM+SFS AUC target pinned");
        std::printf("    (targets are documented, not reproduced: they require the original\n"
                    "     private datasets and full-scale training)\n");
    });

    // 2. synthetic end-to-end pipeline
    run_criterion(2, "synth-demo reaches mean outer AUC >= 0.95 within 5 minutes", [](Checker& c) {
        const auto t0 = std::chrono::steady_clock::now();
        const SynthDemoResult demo = run_synth_demo(7, temp_dir("coughnet_accept_demo"), 4, 60);
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("    mean outer AUC %.4f over %zu folds in %.1f s\n", demo.mean_outer_auc,
                    demo.fold_aucs.size(), elapsed);
        c.require(demo.fold_aucs.size() == 5, "J=12 over 60 patients gives 5 outer folds");
        c.require(demo.mean_outer_auc >= 0.95, "mean outer patient-level AUC >= 0.95");
        c.require(elapsed <= 300.0, "wall clock <= 5 minutes");
        c.require(std::filesystem::exists(demo.roc_csv_path), "roc.csv written");
    });

    // 3. DSP oracles
    run_criterion(3, "MFCC and FFT match their independent oracles", [](Checker& c) {
        Rng rng(33001);
        for (const std::size_t n : {256u, 512u, 1024u, 2048u, 4096u}) {
            double worst = 0.0;
            for (int trial = 0; trial < 200; ++trial) {
                std::vector<double> frame(n);
                for (double& v : frame) v = rng.uniform(-1.0, 1.0);
                const auto fast = fft_real(frame);
                const auto slow = oracles::naive_dft(frame);
                for (std::size_t k = 0; k < fast.size(); ++k) {
                    worst = std::max(worst, std::abs(fast[k] - slow[k]));
                }
            }
            c.require(worst <= 1e-9, "fft error " + std::to_string(worst) + " at length " +
                                         std::to_string(n));
        }

        double worst_rel = 0.0;
        for (const int n_mfcc : {13, 26, 39, 52, 65}) {
            for (const int frame_len : {256, 512, 1024, 2048, 4096}) {
                FeatureConfig config;
                config.n_mfcc = n_mfcc;
                config.frame_len = frame_len;
                const MfccExtractor extractor(config, 44100);
                for (int trial = 0; trial < 50; ++trial) {
                    std::vector<double> frame(static_cast<std::size_t>(frame_len));
                    for (double& v : frame) v = rng.uniform(-1.0, 1.0);
                    const auto fast = extractor.compute(frame);
                    const auto slow = oracles::naive_mfcc(frame, n_mfcc, 2 * n_mfcc, 44100.0);
                    for (std::size_t k = 0; k < fast.size(); ++k) {
                        const double rel =
                            std::abs(fast[k] - slow[k]) / std::max(1.0, std::abs(slow[k]));
                        worst_rel = std::max(worst_rel, rel);
                    }
                }
            }
        }
        std::printf("    worst MFCC relative error %.3g over the full config grid\n", worst_rel);
        c.require(worst_rel <= 1e-6, "MFCC within 1e-6 of the oracle on every config pair");
    });

    // 4. gradient checks
    run_criterion(4, "analytic gradients match finite differences to 1e-4", [](Checker& c) {
        const struct {
            const char* name;
            ModelSpec spec;
            InputShape shape;
        } cases[] = {
            {"MLP", ModelSpec::mlp(10, 1e-3, 0.1), {InputShape::Kind::Vector, 0, 8}},
            {"CNN", ModelSpec::cnn(4, 2, 0.0, 8, 4, 5), {InputShape::Kind::Matrix, 8, 8}},
            {"LSTM", ModelSpec::lstm(8, 1e-2, 0.0, 8, 4, 5), {InputShape::Kind::Matrix, 5, 6}},
            {"tiny ResNet", ModelSpec::resnet(ResNetPreset::Tiny, 4, 5),
             {InputShape::Kind::Matrix, 8, 8}},
        };
        for (const auto& cs : cases) {
            const auto r = gradient_check(cs.spec, cs.shape, 44000);
            std::printf("    %-11s max rel err %.3g over %zu params\n", cs.name, r.max_rel_error,
                        r.n_checked);
            c.require(r.n_checked >= 100,
                      std::string(cs.name) + ": checked at least 100 parameters");
            c.require(r.max_rel_error <= 1e-4, std::string(cs.name) + ": gradient error within 1e-4");
        }
    });

    // 5. SMOTE geometry
    run_criterion(5, "SMOTE synthetics are convex combinations and balance classes", [](Checker& c) {
        Rng rng(55001);
        double worst_residual = 0.0;
        for (int trial = 0; trial < 500; ++trial) {
            const std::size_t n = 3 + rng.uniform_int(12);
            const std::size_t dim = 2 + rng.uniform_int(6);
            std::vector<std::vector<double>> minority(n, std::vector<double>(dim));
            for (auto& v : minority) {
                for (double& x : v) x = rng.uniform(-5.0, 5.0);
            }
            const std::size_t majority = n + 1 + rng.uniform_int(2 * n);
            SmoteConfig config;
            config.seed = rng.next_u64();
            const auto synthetics = smote(minority, majority, config);
            if (synthetics.size() + n != majority) {
                c.require(false, "class counts unequal after augmentation");
            }
            for (const auto& s : synthetics) {
                double best = 1e300;
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        if (i == j) continue;
                        // residual from the segment x_i -> x_j
                        double ab2 = 0.0, ap_ab = 0.0;
                        for (std::size_t d = 0; d < dim; ++d) {
                            ab2 += (minority[j][d] - minority[i][d]) * (minority[j][d] - minority[i][d]);
                            ap_ab += (s[d] - minority[i][d]) * (minority[j][d] - minority[i][d]);
                        }
                        const double t = ab2 > 0.0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
                        double d2 = 0.0;
                        for (std::size_t d = 0; d < dim; ++d) {
                            const double proj = minority[i][d] + t * (minority[j][d] - minority[i][d]);
                            d2 += (s[d] - proj) * (s[d] - proj);
                        }
                        best = std::min(best, std::sqrt(d2));
                    }
                }
                worst_residual = std::max(worst_residual, best);
            }
        }
        std::printf("    worst segment residual %.3g over 500 minority sets\n", worst_residual);
        c.require(worst_residual <= 1e-9, "synthetics lie on parent segments");

        std::vector<std::vector<double>> minority(92, std::vector<double>(7));
        Rng seed_rng(5);
        for (auto& v : minority) {
            for (double& x : v) x = seed_rng.normal();
        }
        SmoteConfig config;
        config.seed = 1;
        c.require(smote(minority, 1079, config).size() == 987,
                  "92 minority vs 1079 majority yields exactly 987 synthetics");
    });

    // 6. evaluation oracles
    run_criterion(6, "ROC/AUC and EER match exhaustive oracles", [](Checker& c) {
        Rng rng(66001);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = 2 + rng.uniform_int(49);
            std::vector<std::pair<double, int>> scored;
            bool has_pos = false, has_neg = false;
            for (std::size_t i = 0; i < n; ++i) {
                const double score =
                    trial % 2 == 0 ? rng.uniform()
                                   : static_cast<double>(rng.uniform_int(6)) / 5.0;  // ties
                const int label = rng.uniform() < 0.5 ? 0 : 1;
                scored.emplace_back(score, label);
                (label == 1 ? has_pos : has_neg) = true;
            }
            if (!has_pos) scored[0].second = 1;
            if (!has_neg) scored[n > 1 ? 1 : 0].second = 0;

            const RocCurve curve = roc_auc(scored);
            const double oracle = oracles::pair_count_auc(scored);
            if (std::fabs(curve.auc - oracle) > 1e-12) {
                c.require(false, "auc mismatch: " + std::to_string(curve.auc) + " vs " +
                                     std::to_string(oracle));
                break;
            }

            const double gamma = eer_threshold(curve);
            double best = 1e300, at_gamma = 1e300;
            for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
                const double diff = std::fabs(curve.fpr[i] + curve.tpr[i] - 1.0);
                best = std::min(best, diff);
                if (curve.thresholds[i] == gamma) at_gamma = diff;
            }
            if (std::fabs(at_gamma - best) > 1e-12) {
                c.require(false, "eer threshold missed the sweep minimum");
                break;
            }

            auto transformed = scored;
            for (auto& [s, l] : transformed) s = std::tanh(2.0 * s) * 10.0 + 3.0;
            if (std::fabs(roc_auc(transformed).auc - curve.auc) > 1e-12) {
                c.require(false, "auc not invariant under a monotone transform");
                break;
            }
        }
    });

    // 7. fold hygiene
    run_criterion(7, "fold plans are leak-free and the study-scale plan has 5 folds",
                  [](Checker& c) {
        Rng rng(77001);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 8 + rng.uniform_int(150);
            const std::size_t j = 1 + rng.uniform_int(n / 3);
            std::size_t k = 1 + rng.uniform_int(n / 3);
            if (j + k >= n) k = n - j - 1;
            if (k < 1) continue;
            const FoldPlan plan = make_fold_plan(patient_ids(n), j, k, rng.next_u64());
            plan.validate();
            std::set<std::string> tested;
            for (const auto& fold : plan.folds) {
                for (const auto& id : fold.test) {
                    if (!tested.insert(id).second) {
                        c.require(false, "outer test sets overlap");
                    }
                }
            }
            if (tested.size() != plan.folds.size() * j) {
                c.require(false, "outer test sets do not partition their patients");
            }
        }
        const FoldPlan study = make_fold_plan(patient_ids(1171), 234, 187, 4);
        c.require(study.folds.size() == 5, "N=1171, J=234 yields exactly 5 outer folds");
        study.validate();
    });

    // 8. SFS sanity
    run_criterion(8, "SFS finds 3 informative dims among 42 within 6 steps (>= 9/10 seeds)",
                  [](Checker& c) {
        const std::set<std::size_t> informative = {5, 20, 40};
        int hits = 0;
        double worst_best_gap = 0.0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto dataset = sfs_feature_set(72, informative, 88000 + seed);
            std::vector<std::string> ids;
            for (const auto& p : dataset) ids.push_back(p.patient_id);
            const FoldPlan plan = make_fold_plan(ids, 2, 28, seed, 4);

            ModelSpec spec = ModelSpec::logistic_regression(1e-3);
            spec.epochs = 100;
            SfsOptions options;
            options.seed = seed;
            options.workers = 4;
            options.max_dims = 6;
            const SfsResult result = sfs(dataset, spec, plan.folds.front().inner, options);

            std::set<std::size_t> first_six;
            double max_in_trace = -1.0;
            bool sizes_increase = true;
            for (std::size_t i = 0; i < result.steps.size(); ++i) {
                first_six.insert(result.steps[i].dim_index);
                max_in_trace = std::max(max_in_trace, result.steps[i].dev_auc);
                if (result.steps[i].subset_size != i + 1) sizes_increase = false;
            }
            bool all_found = true;
            for (std::size_t d : informative) {
                if (!first_six.count(d)) all_found = false;
            }
            if (all_found) ++hits;
            c.require(sizes_increase, "trace subset sizes strictly increase");
            worst_best_gap = std::max(worst_best_gap, std::fabs(result.best_auc - max_in_trace));
        }
        std::printf("    informative dims recovered in %d/10 seeds\n", hits);
        c.require(hits >= 9, "informative dims inside the first 6 selections in >= 9/10 seeds");
        c.require(worst_best_gap == 0.0, "reported best AUC equals the trace maximum");
    });

    // 9. ResNet presets
    run_criterion(9, "resnet50_audio shape trace matches; tiny ResNet memorizes 32 samples",
                  [](Checker& c) {
        const TrainedModel big = build_untrained(ModelSpec::resnet(ResNetPreset::ResNet50Audio, 4, 1),
                                                 {InputShape::Kind::Matrix, 50, 117}, 1);
        const auto actual = big.shape_trace();
        const auto declared = resnet50_audio_declared_trace(50, 117);
        c.require(actual.size() == declared.size(),
                  "trace length " + std::to_string(actual.size()) + " vs declared " +
                      std::to_string(declared.size()));
        for (std::size_t i = 0; i < std::min(actual.size(), declared.size()); ++i) {
            if (actual[i] != declared[i]) {
                c.require(false, "trace line " + std::to_string(i) + ": '" + actual[i] +
                                     "' vs declared '" + declared[i] + "'");
            }
        }
        c.require(actual.back() == "dense 2 -> [2]", "50x117 input produces 2 logits");

        Rng rng(99001);
        std::vector<Matrix2D> coughs;
        std::vector<int> labels;
        for (int i = 0; i < 32; ++i) {
            Matrix2D m(50, 39);
            for (double& v : m.data()) v = rng.normal();
            coughs.push_back(std::move(m));
            labels.push_back(i % 2);
        }
        ModelSpec tiny = ModelSpec::resnet(ResNetPreset::Tiny, 0, 200);
        tiny.learning_rate = 0.05;
        const TrainedModel model = fit(tiny, coughs, labels, 2);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < coughs.size(); ++i) {
            const double p = model.predict_proba(coughs[i]);
            if ((p >= 0.5 ? 1 : 0) == labels[i]) ++correct;
        }
        std::printf("    tiny ResNet training accuracy %zu/32 after 200 epochs\n", correct);
        c.require(correct == 32, "memorizes the random-label set to 100%");
    });

    // 10. serialization
    run_criterion(10, "model and WAV round trips are exact", [](Checker& c) {
        const std::string dir = temp_dir("coughnet_accept_io");
        Rng rng(10001);

        std::vector<Matrix2D> vec_coughs, mat_coughs;
        std::vector<int> labels;
        for (int i = 0; i < 8; ++i) {
            Matrix2D v(1, 6), m(10, 6);
            for (double& x : v.data()) x = rng.normal();
            for (double& x : m.data()) x = rng.normal();
            vec_coughs.push_back(std::move(v));
            mat_coughs.push_back(std::move(m));
            labels.push_back(i % 2);
        }
        std::vector<ModelSpec> specs = {
            ModelSpec::logistic_regression(0.1, 0.1, 0.9), ModelSpec::linear_svm(0.1),
            ModelSpec::mlp(8, 1e-4, 0.2), ModelSpec::cnn(4, 2, 0.1, 8, 4, 3),
            ModelSpec::lstm(6, 1e-2, 0.1, 8, 4, 3), ModelSpec::resnet(ResNetPreset::Tiny, 4, 3)};
        for (auto spec : specs) {
            spec.epochs = std::min(spec.epochs, 20);
            const auto& coughs = is_vector_family(spec.family) ? vec_coughs : mat_coughs;
            const TrainedModel model = fit(spec, coughs, labels, 3);
            const std::string path = dir + "/" + family_name(spec.family) + ".bin";
            save_model(model, path);
            const TrainedModel loaded = load_model(path);
            bool exact = loaded.params == model.params;
            for (int i = 0; i < 100 && exact; ++i) {
                Matrix2D probe(is_vector_family(spec.family) ? 1 : 10, 6);
                for (double& x : probe.data()) x = rng.normal();
                if (loaded.predict_proba(probe) != model.predict_proba(probe)) exact = false;
            }
            c.require(exact, std::string(family_name(spec.family)) +
                                 ": predictions preserved bit-exactly");
        }

        std::vector<double> samples(1000);
        for (double& s : samples) {
            s = static_cast<double>(static_cast<std::int64_t>(rng.uniform_int(65536)) - 32768) /
                32768.0;
        }
        const std::string wav_path = dir + "/roundtrip.wav";
        write_wav_pcm16(wav_path, samples, 44100);
        const AudioClip clip = read_wav(wav_path);
        c.require(clip.samples == samples, "PCM16 WAV write/read round trip is exact");
        std::filesystem::remove_all(dir);
    });

    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
