#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coughnet/crossval.hpp"
#include "coughnet/manifest.hpp"

namespace coughnet {

/// Synthetic two-class cough corpus: band-limited noise bursts centered at
/// two different frequencies over a quieter white-noise floor.
struct SynthConfig {
    std::size_t n_patients = 60;  // even; half per class
    int sample_rate_hz = 44100;
    double class_a_center_hz = 400.0;   // labeled positive
    double class_b_center_hz = 1200.0;  // labeled healthy
    double bandwidth_hz = 200.0;
    double snr_db = 10.0;  // burst RMS over background RMS
    int min_bursts = 2;
    int max_bursts = 4;
    int min_coughs = 1;
    int max_coughs = 3;
    std::uint64_t seed = 0;
};

/// Writes WAV files plus a manifest under out_dir and returns the records.
std::vector<PatientRecord> generate_synth_corpus(const SynthConfig& config,
                                                 const std::string& out_dir);

/// One synthetic clip (exposed for tests).
std::vector<double> synth_clip(const SynthConfig& config, double center_hz, std::uint64_t seed);

struct SynthDemoResult {
    double mean_outer_auc = 0.0;
    std::vector<double> fold_aucs;
    double seconds = 0.0;
    std::string roc_csv_path;
    std::string manifest_path;
};

/// End-to-end demo: generates the corpus, extracts MFCC=13/Frame=1024/Seg=50
/// features, and runs SMOTE + LR through nested cross-validation with
/// J=12, K=10 (scaled down proportionally for smaller corpora). Writes
/// roc.csv (pooled outer-fold patient scores) into out_dir.
SynthDemoResult run_synth_demo(std::uint64_t seed, const std::string& out_dir, int workers,
                               std::size_t n_patients = 60);

}  // namespace coughnet
