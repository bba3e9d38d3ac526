#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coughnet/audio.hpp"
#include "coughnet/numerics.hpp"

namespace coughnet {

/// Feature-extraction hyperparameters. The searched grid keeps n_mfcc in
/// {13,26,39,52,65}, frame_len in {256..4096} and n_segments in
/// {50,70,100,120,150}; other fields are fixed-by-default knobs.
struct FeatureConfig {
    int n_mfcc = 13;
    int frame_len = 1024;        // power of two, samples
    int n_segments = 50;
    int hop_len = 0;             // 0 = frame_len (non-overlapping)
    int n_mel_filters = 0;       // 0 = 2 * n_mfcc
    bool include_deltas = true;
    bool include_log_energy = true;
    bool include_zcr = true;
    bool include_kurtosis = true;
    double log_floor = 1e-10;

    int effective_hop() const { return hop_len > 0 ? hop_len : frame_len; }
    int effective_mel_filters() const { return n_mel_filters > 0 ? n_mel_filters : 2 * n_mfcc; }
    /// Columns of the feature matrix this config produces.
    int feature_dim() const {
        return n_mfcc * (1 + (include_deltas ? 2 : 0)) + (include_log_energy ? 1 : 0) +
               (include_zcr ? 1 : 0) + (include_kurtosis ? 1 : 0);
    }
    std::vector<std::string> dim_names() const;
    void validate() const;
    std::uint64_t hash() const;
};

/// Per-cough pooled feature matrix (n_segments x D).
struct FeatureMatrix {
    Matrix2D values;
    std::vector<std::string> dim_names;
    std::string patient_id;
    std::string cough_id;
    Label label = Label::Unlabeled;
};

/// Splits a clip into frames of frame_len at stride hop_len; the final
/// partial frame is zero-padded. Throws TooShort when the clip is shorter
/// than one frame.
std::vector<std::vector<double>> frame_signal(const AudioClip& clip, int frame_len, int hop_len);

/// Mel scale: 2595 * log10(1 + f/700). Throws InvalidFrequency for f < 0.
double mel_scale(double f_hz);
double mel_to_hz(double mel);

/// MFCC pipeline for one frame size: Hamming window -> power spectrum ->
/// triangular mel filterbank (uniform in mel from 0 to Nyquist) -> floored
/// log10 -> orthonormal DCT-II, first n_mfcc kept.
class MfccExtractor {
public:
    MfccExtractor(const FeatureConfig& config, int sample_rate_hz);

    std::vector<double> compute(std::span<const double> frame) const;

    int n_mfcc() const { return n_mfcc_; }

private:
    int frame_len_;
    int n_mfcc_;
    int n_filters_;
    double log_floor_;
    std::vector<double> window_;                       // Hamming
    std::vector<std::vector<double>> filter_weights_;  // per filter, over spectrum bins
    std::vector<double> dct_;                          // n_mfcc x n_filters, row-major
};

/// One-shot MFCC of a single frame (frame length must equal config.frame_len).
std::vector<double> mfcc(std::span<const double> frame, const FeatureConfig& config,
                         int sample_rate_hz);

/// Appends regression deltas: velocity with half-window 2 and edge
/// replication, acceleration as the delta of velocity. Output columns are
/// [static | velocity | acceleration].
Matrix2D add_deltas(const Matrix2D& per_frame);

struct AuxFeatures {
    double log_energy = 0.0;
    double zcr = 0.0;
    double kurtosis = 0.0;
};

/// Log energy log10(0.001 + sum s^2 / N), zero-crossing rate, and kurtosis
/// (population moments; 0 for zero-variance frames).
AuxFeatures frame_aux_features(std::span<const double> frame);

/// Pools T per-frame rows into n_segments contiguous near-equal groups
/// (sizes differ by at most one, larger groups first) by arithmetic mean.
/// When T < n_segments, segment j takes frame (j mod T).
Matrix2D pool_segments(const Matrix2D& per_frame, int n_segments);

/// Full per-cough extraction: framing, MFCC (+deltas), aux features, pooling.
/// The clip must already be preprocessed.
FeatureMatrix extract_features(const AudioClip& clip, const FeatureConfig& config);

/// Feature cache: one self-describing binary file per cough.
void save_feature_matrix(const std::string& path, const FeatureMatrix& matrix,
                         std::uint64_t config_hash);
FeatureMatrix load_feature_matrix(const std::string& path, std::uint64_t expected_config_hash);

}  // namespace coughnet
