#include "coughnet/features.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace coughnet {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
std::uint64_t fnv1a_value(std::uint64_t h, T v) {
    return fnv1a(h, &v, sizeof(v));
}

}  // namespace

void FeatureConfig::validate() const {
    if (!is_power_of_two(frame_len) || frame_len < 2) {
        throw InvalidLength("FeatureConfig: frame_len must be a power of two >= 2");
    }
    if (n_mfcc < 1) throw InvalidLength("FeatureConfig: n_mfcc must be >= 1");
    if (n_segments < 1) throw InvalidLength("FeatureConfig: n_segments must be >= 1");
    if (effective_mel_filters() < n_mfcc) {
        throw InvalidLength("FeatureConfig: n_mel_filters must be >= n_mfcc");
    }
    if (hop_len < 0) throw InvalidLength("FeatureConfig: hop_len must be >= 0");
}

std::vector<std::string> FeatureConfig::dim_names() const {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(feature_dim()));
    auto pad2 = [](int i) {
        std::string s = std::to_string(i);
        return s.size() < 2 ? "0" + s : s;
    };
    for (int i = 0; i < n_mfcc; ++i) names.push_back("mfcc_" + pad2(i));
    if (include_deltas) {
        for (int i = 0; i < n_mfcc; ++i) names.push_back("vel_" + pad2(i));
        for (int i = 0; i < n_mfcc; ++i) names.push_back("acc_" + pad2(i));
    }
    if (include_log_energy) names.push_back("log_energy");
    if (include_zcr) names.push_back("zcr");
    if (include_kurtosis) names.push_back("kurtosis");
    return names;
}

std::uint64_t FeatureConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a_value(h, n_mfcc);
    h = fnv1a_value(h, frame_len);
    h = fnv1a_value(h, n_segments);
    h = fnv1a_value(h, effective_hop());
    h = fnv1a_value(h, effective_mel_filters());
    h = fnv1a_value(h, static_cast<int>(include_deltas));
    h = fnv1a_value(h, static_cast<int>(include_log_energy));
    h = fnv1a_value(h, static_cast<int>(include_zcr));
    h = fnv1a_value(h, static_cast<int>(include_kurtosis));
    h = fnv1a_value(h, log_floor);
    return h;
}

std::vector<std::vector<double>> frame_signal(const AudioClip& clip, int frame_len, int hop_len) {
    const std::size_t n = clip.samples.size();
    const auto flen = static_cast<std::size_t>(frame_len);
    const auto hop = static_cast<std::size_t>(hop_len);
    if (frame_len <= 0 || hop_len <= 0) throw InvalidLength("frame_signal: bad frame/hop length");
    if (n < flen) {
        throw TooShort("frame_signal: clip of " + std::to_string(n) +
                       " samples is shorter than one frame (" + std::to_string(frame_len) + ")");
    }
    std::vector<std::vector<double>> frames;
    for (std::size_t start = 0; start < n; start += hop) {
        std::vector<double> frame(flen, 0.0);
        const std::size_t end = std::min(n, start + flen);
        std::copy(clip.samples.begin() + static_cast<std::ptrdiff_t>(start),
                  clip.samples.begin() + static_cast<std::ptrdiff_t>(end), frame.begin());
        frames.push_back(std::move(frame));
        if (end == n) break;
    }
    return frames;
}

double mel_scale(double f_hz) {
    if (f_hz < 0.0) throw InvalidFrequency("mel_scale: negative frequency");
    return 2595.0 * std::log10(1.0 + f_hz / 700.0);
}

double mel_to_hz(double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MfccExtractor::MfccExtractor(const FeatureConfig& config, int sample_rate_hz)
    : frame_len_(config.frame_len),
      n_mfcc_(config.n_mfcc),
      n_filters_(config.effective_mel_filters()),
      log_floor_(config.log_floor) {
    config.validate();
    if (sample_rate_hz <= 0) throw InvalidFrequency("MfccExtractor: bad sample rate");

    const auto flen = static_cast<std::size_t>(frame_len_);
    window_.resize(flen);
    for (std::size_t i = 0; i < flen; ++i) {
        window_[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(flen - 1));
    }

    // triangular filters with corners uniform in mel from 0 to Nyquist
    const std::size_t n_bins = flen / 2 + 1;
    const double nyquist = sample_rate_hz / 2.0;
    const double mel_hi = mel_scale(nyquist);
    std::vector<double> corners(static_cast<std::size_t>(n_filters_) + 2);
    for (std::size_t j = 0; j < corners.size(); ++j) {
        corners[j] = mel_to_hz(mel_hi * static_cast<double>(j) /
                               static_cast<double>(n_filters_ + 1));
    }
    filter_weights_.assign(static_cast<std::size_t>(n_filters_), std::vector<double>(n_bins, 0.0));
    for (int j = 0; j < n_filters_; ++j) {
        const double left = corners[static_cast<std::size_t>(j)];
        const double center = corners[static_cast<std::size_t>(j) + 1];
        const double right = corners[static_cast<std::size_t>(j) + 2];
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(flen);
            double w = 0.0;
            if (f >= left && f <= center && center > left) {
                w = (f - left) / (center - left);
            } else if (f > center && f <= right && right > center) {
                w = (right - f) / (right - center);
            }
            filter_weights_[static_cast<std::size_t>(j)][k] = w;
        }
    }

    // orthonormal DCT-II matrix, first n_mfcc rows
    dct_.resize(static_cast<std::size_t>(n_mfcc_) * static_cast<std::size_t>(n_filters_));
    const double scale0 = std::sqrt(1.0 / n_filters_);
    const double scale = std::sqrt(2.0 / n_filters_);
    for (int k = 0; k < n_mfcc_; ++k) {
        for (int i = 0; i < n_filters_; ++i) {
            dct_[static_cast<std::size_t>(k) * n_filters_ + i] =
                (k == 0 ? scale0 : scale) *
                std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n_filters_));
        }
    }
}

std::vector<double> MfccExtractor::compute(std::span<const double> frame) const {
    if (frame.size() != static_cast<std::size_t>(frame_len_)) {
        throw InvalidLength("mfcc: frame length " + std::to_string(frame.size()) +
                            " does not match config frame_len " + std::to_string(frame_len_));
    }
    std::vector<double> windowed(frame.size());
    for (std::size_t i = 0; i < frame.size(); ++i) windowed[i] = frame[i] * window_[i];

    const auto spectrum = fft_real(windowed);
    std::vector<double> power(spectrum.size());
    for (std::size_t k = 0; k < spectrum.size(); ++k) power[k] = std::norm(spectrum[k]);

    std::vector<double> log_energies(static_cast<std::size_t>(n_filters_));
    for (int j = 0; j < n_filters_; ++j) {
        const auto& weights = filter_weights_[static_cast<std::size_t>(j)];
        double acc = 0.0;
        for (std::size_t k = 0; k < power.size(); ++k) acc += weights[k] * power[k];
        log_energies[static_cast<std::size_t>(j)] = std::log10(std::max(acc, log_floor_));
    }

    std::vector<double> coeffs(static_cast<std::size_t>(n_mfcc_), 0.0);
    for (int k = 0; k < n_mfcc_; ++k) {
        double acc = 0.0;
        const double* row = dct_.data() + static_cast<std::size_t>(k) * n_filters_;
        for (int i = 0; i < n_filters_; ++i) acc += row[i] * log_energies[static_cast<std::size_t>(i)];
        coeffs[static_cast<std::size_t>(k)] = acc;
    }
    return coeffs;
}

std::vector<double> mfcc(std::span<const double> frame, const FeatureConfig& config,
                         int sample_rate_hz) {
    return MfccExtractor(config, sample_rate_hz).compute(frame);
}

Matrix2D add_deltas(const Matrix2D& per_frame) {
    const std::size_t t_count = per_frame.rows();
    const std::size_t d = per_frame.cols();
    if (t_count == 0) throw EmptyInput("add_deltas: no frames");

    auto regression_delta = [&](const Matrix2D& m) {
        Matrix2D out(m.rows(), m.cols(), 0.0);
        const auto t_max = static_cast<std::ptrdiff_t>(m.rows()) - 1;
        constexpr double denom = 2.0 * (1.0 * 1.0 + 2.0 * 2.0);  // 2 * sum n^2, n = 1..2
        for (std::ptrdiff_t t = 0; t <= t_max; ++t) {
            for (std::size_t c = 0; c < m.cols(); ++c) {
                double acc = 0.0;
                for (std::ptrdiff_t n = 1; n <= 2; ++n) {
                    const auto ahead = static_cast<std::size_t>(std::min(t + n, t_max));
                    const auto behind = static_cast<std::size_t>(std::max(t - n, std::ptrdiff_t{0}));
                    acc += static_cast<double>(n) * (m(ahead, c) - m(behind, c));
                }
                out(static_cast<std::size_t>(t), c) = acc / denom;
            }
        }
        return out;
    };

    const Matrix2D velocity = regression_delta(per_frame);
    const Matrix2D acceleration = regression_delta(velocity);

    Matrix2D out(t_count, 3 * d, 0.0);
    for (std::size_t t = 0; t < t_count; ++t) {
        for (std::size_t c = 0; c < d; ++c) {
            out(t, c) = per_frame(t, c);
            out(t, d + c) = velocity(t, c);
            out(t, 2 * d + c) = acceleration(t, c);
        }
    }
    return out;
}

AuxFeatures frame_aux_features(std::span<const double> frame) {
    if (frame.empty()) throw EmptyInput("frame_aux_features: empty frame");
    const double n = static_cast<double>(frame.size());

    double energy = 0.0;
    for (double s : frame) energy += s * s;
    const double log_energy = std::log10(0.001 + energy / n);

    double zcr = 0.0;
    if (frame.size() > 1) {
        std::size_t crossings = 0;
        for (std::size_t t = 1; t < frame.size(); ++t) {
            if (frame[t] * frame[t - 1] < 0.0) ++crossings;
        }
        zcr = static_cast<double>(crossings) / (n - 1.0);
    }

    const Moments m = moments(frame);
    const double sigma2 = m.stddev * m.stddev;
    const double kurtosis = sigma2 > 0.0 ? m.fourth_central / (sigma2 * sigma2) : 0.0;

    return {log_energy, zcr, kurtosis};
}

Matrix2D pool_segments(const Matrix2D& per_frame, int n_segments) {
    const std::size_t t_count = per_frame.rows();
    const std::size_t d = per_frame.cols();
    if (t_count == 0) throw EmptyInput("pool_segments: no frames");
    if (n_segments < 1) throw InvalidLength("pool_segments: n_segments must be >= 1");
    const auto segs = static_cast<std::size_t>(n_segments);

    Matrix2D out(segs, d, 0.0);
    if (t_count >= segs) {
        const std::size_t base = t_count / segs;
        const std::size_t extra = t_count % segs;  // first `extra` groups get one more frame
        std::size_t start = 0;
        for (std::size_t s = 0; s < segs; ++s) {
            const std::size_t len = base + (s < extra ? 1 : 0);
            for (std::size_t t = start; t < start + len; ++t) {
                for (std::size_t c = 0; c < d; ++c) out(s, c) += per_frame(t, c);
            }
            for (std::size_t c = 0; c < d; ++c) out(s, c) /= static_cast<double>(len);
            start += len;
        }
    } else {
        for (std::size_t s = 0; s < segs; ++s) {
            const std::size_t t = s % t_count;
            for (std::size_t c = 0; c < d; ++c) out(s, c) = per_frame(t, c);
        }
    }
    return out;
}

FeatureMatrix extract_features(const AudioClip& clip, const FeatureConfig& config) {
    config.validate();
    const auto frames = frame_signal(clip, config.frame_len, config.effective_hop());
    const MfccExtractor extractor(config, clip.sample_rate_hz);

    const std::size_t t_count = frames.size();
    Matrix2D static_mfcc(t_count, static_cast<std::size_t>(config.n_mfcc), 0.0);
    std::vector<AuxFeatures> aux(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        const auto coeffs = extractor.compute(frames[t]);
        for (std::size_t c = 0; c < coeffs.size(); ++c) static_mfcc(t, c) = coeffs[c];
        aux[t] = frame_aux_features(frames[t]);
    }

    const Matrix2D mfcc_block = config.include_deltas ? add_deltas(static_mfcc) : static_mfcc;
    const std::size_t d = static_cast<std::size_t>(config.feature_dim());
    Matrix2D per_frame(t_count, d, 0.0);
    for (std::size_t t = 0; t < t_count; ++t) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < mfcc_block.cols(); ++j) per_frame(t, c++) = mfcc_block(t, j);
        if (config.include_log_energy) per_frame(t, c++) = aux[t].log_energy;
        if (config.include_zcr) per_frame(t, c++) = aux[t].zcr;
        if (config.include_kurtosis) per_frame(t, c++) = aux[t].kurtosis;
    }

    FeatureMatrix out;
    out.values = pool_segments(per_frame, config.n_segments);
    out.dim_names = config.dim_names();
    out.patient_id = clip.patient_id;
    out.cough_id = clip.cough_id;
    out.label = clip.label;

    for (double v : out.values.data()) {
        if (!std::isfinite(v)) throw Error("extract_features: non-finite feature value");
    }
    return out;
}

namespace {

constexpr char kCacheMagic[4] = {'C', 'N', 'F', 'C'};
constexpr std::uint32_t kCacheVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_string(std::ofstream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw IoError("truncated cache " + path);
    return v;
}
std::uint64_t get_u64(std::ifstream& in, const std::string& path) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw IoError("truncated cache " + path);
    return v;
}
std::string get_string(std::ifstream& in, const std::string& path) {
    const std::uint32_t len = get_u32(in, path);
    if (len > (1u << 20)) throw IoError("implausible string length in cache " + path);
    std::string s(len, '\0');
    if (!in.read(s.data(), len)) throw IoError("truncated cache " + path);
    return s;
}

}  // namespace

void save_feature_matrix(const std::string& path, const FeatureMatrix& matrix,
                         std::uint64_t config_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(kCacheMagic, 4);
    put_u32(out, kCacheVersion);
    put_u64(out, config_hash);
    put_string(out, matrix.patient_id);
    put_string(out, matrix.cough_id);
    put_u32(out, static_cast<std::uint32_t>(matrix.label));
    put_u32(out, static_cast<std::uint32_t>(matrix.values.rows()));
    put_u32(out, static_cast<std::uint32_t>(matrix.values.cols()));
    put_u32(out, static_cast<std::uint32_t>(matrix.dim_names.size()));
    for (const auto& name : matrix.dim_names) put_string(out, name);
    out.write(reinterpret_cast<const char*>(matrix.values.data().data()),
              static_cast<std::streamsize>(matrix.values.size() * sizeof(double)));
    if (!out) throw IoError("failed writing " + path);
}

FeatureMatrix load_feature_matrix(const std::string& path, std::uint64_t expected_config_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open cache " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kCacheMagic, 4) != 0) {
        throw IoError("bad magic in cache " + path);
    }
    const std::uint32_t version = get_u32(in, path);
    if (version != kCacheVersion) {
        throw IoError("cache version mismatch in " + path + ": " + std::to_string(version));
    }
    const std::uint64_t hash = get_u64(in, path);
    if (hash != expected_config_hash) {
        throw IoError("cache config hash mismatch in " + path);
    }
    FeatureMatrix m;
    m.patient_id = get_string(in, path);
    m.cough_id = get_string(in, path);
    m.label = static_cast<Label>(get_u32(in, path));
    const std::uint32_t rows = get_u32(in, path);
    const std::uint32_t cols = get_u32(in, path);
    const std::uint32_t n_names = get_u32(in, path);
    m.dim_names.reserve(n_names);
    for (std::uint32_t i = 0; i < n_names; ++i) m.dim_names.push_back(get_string(in, path));
    m.values = Matrix2D(rows, cols);
    if (!in.read(reinterpret_cast<char*>(m.values.data().data()),
                 static_cast<std::streamsize>(m.values.size() * sizeof(double)))) {
        throw IoError("truncated cache " + path);
    }
    return m;
}

}  // namespace coughnet
