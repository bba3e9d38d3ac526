#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "coughnet/features.hpp"
#include "oracles.hpp"

using namespace coughnet;

namespace {

AudioClip make_clip(std::vector<double> samples, int sr = 44100) {
    AudioClip clip;
    clip.samples = std::move(samples);
    clip.sample_rate_hz = sr;
    clip.patient_id = "p";
    clip.cough_id = "c";
    clip.label = Label::Positive;
    return clip;
}

std::vector<double> sine(double hz, std::size_t n, int sr) {
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sr);
    }
    return s;
}

}  // namespace

TEST_CASE("frame counts follow the zero-padding rule") {
    AudioClip clip = make_clip(std::vector<double>(4096, 1.0));
    CHECK(frame_signal(clip, 1024, 1024).size() == 4);

    clip.samples.resize(4100, 1.0);
    const auto frames = frame_signal(clip, 1024, 1024);
    REQUIRE(frames.size() == 5);
    CHECK(frames[4][3] == 1.0);
    CHECK(frames[4][4] == 0.0);  // zero-padded tail

    clip.samples.resize(44100, 1.0);
    CHECK(frame_signal(clip, 2048, 2048).size() == 22);

    clip.samples.resize(100);
    CHECK_THROWS_AS(frame_signal(clip, 1024, 1024), TooShort);
}

TEST_CASE("mel scale hits its reference points") {
    CHECK(mel_scale(0.0) == 0.0);
    CHECK(mel_scale(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
    CHECK(mel_scale(700.0) == doctest::Approx(781.17).epsilon(1e-4));
    CHECK(mel_scale(22050.0) == doctest::Approx(3923.33).epsilon(1e-4));
    CHECK_THROWS_AS(mel_scale(-1.0), InvalidFrequency);
    CHECK(mel_to_hz(mel_scale(1234.5)) == doctest::Approx(1234.5));
}

TEST_CASE("mfcc of an all-zero frame is the DC image of the log floor") {
    FeatureConfig config;
    config.n_mfcc = 13;
    config.frame_len = 1024;
    const auto coeffs = mfcc(std::vector<double>(1024, 0.0), config, 44100);
    REQUIRE(coeffs.size() == 13);
    // all filter energies sit at the floor, so only the DC coefficient survives
    const double expected_dc = std::log10(1e-10) * std::sqrt(static_cast<double>(26));
    CHECK(coeffs[0] == doctest::Approx(expected_dc));
    for (std::size_t k = 1; k < coeffs.size(); ++k) CHECK(std::abs(coeffs[k]) < 1e-9);
}

TEST_CASE("mfcc matches the independent reference implementation") {
    FeatureConfig config;
    config.n_mfcc = 13;
    config.frame_len = 1024;
    const auto frame = sine(1000.0, 1024, 44100);
    const auto fast = mfcc(frame, config, 44100);
    const auto slow = oracles::naive_mfcc(frame, 13, 26, 44100.0);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t k = 0; k < fast.size(); ++k) {
        CHECK(std::abs(fast[k] - slow[k]) <= 1e-6 * std::max(1.0, std::abs(slow[k])));
    }
}

TEST_CASE("mfcc agrees with the oracle on random frames across configs") {
    Rng rng(2024);
    for (const int n_mfcc : {13, 26}) {
        for (const int frame_len : {256, 1024}) {
            FeatureConfig config;
            config.n_mfcc = n_mfcc;
            config.frame_len = frame_len;
            const MfccExtractor extractor(config, 44100);
            for (int trial = 0; trial < 5; ++trial) {
                std::vector<double> frame(static_cast<std::size_t>(frame_len));
                for (double& v : frame) v = rng.uniform(-1.0, 1.0);
                const auto fast = extractor.compute(frame);
                const auto slow = oracles::naive_mfcc(frame, n_mfcc, 2 * n_mfcc, 44100.0);
                for (std::size_t k = 0; k < fast.size(); ++k) {
                    CHECK(std::abs(fast[k] - slow[k]) <= 1e-6 * std::max(1.0, std::abs(slow[k])));
                }
            }
        }
    }
}

TEST_CASE("mfcc is deterministic") {
    FeatureConfig config;
    const auto frame = sine(440.0, 1024, 44100);
    CHECK(mfcc(frame, config, 44100) == mfcc(frame, config, 44100));
}

TEST_CASE("deltas of a constant sequence vanish") {
    Matrix2D constant(6, 3, 1.5);
    const Matrix2D out = add_deltas(constant);
    REQUIRE(out.cols() == 9);
    for (std::size_t t = 0; t < out.rows(); ++t) {
        for (std::size_t c = 3; c < 9; ++c) CHECK(out(t, c) == doctest::Approx(0.0));
    }
}

TEST_CASE("deltas of a ramp give constant velocity and zero interior acceleration") {
    Matrix2D ramp(12, 1);
    for (std::size_t t = 0; t < 12; ++t) ramp(t, 0) = static_cast<double>(t);
    const Matrix2D out = add_deltas(ramp);
    // velocity is exact away from the replicated edges (t in [2, T-3])
    for (std::size_t t = 2; t <= 9; ++t) CHECK(out(t, 1) == doctest::Approx(1.0));
    // acceleration needs its own +-2 window of constant velocity
    for (std::size_t t = 4; t <= 7; ++t) CHECK(std::abs(out(t, 2)) < 1e-12);
}

TEST_CASE("deltas match the regression formula with edge replication") {
    Rng rng(55);
    Matrix2D m(5, 4);
    for (auto& v : m.data()) v = rng.uniform(-2.0, 2.0);
    const Matrix2D out = add_deltas(m);
    auto at = [&](std::ptrdiff_t t, std::size_t c) {
        const std::ptrdiff_t clamped = std::clamp<std::ptrdiff_t>(t, 0, 4);
        return m(static_cast<std::size_t>(clamped), c);
    };
    for (std::ptrdiff_t t = 0; t < 5; ++t) {
        for (std::size_t c = 0; c < 4; ++c) {
            const double expected =
                (1.0 * (at(t + 1, c) - at(t - 1, c)) + 2.0 * (at(t + 2, c) - at(t - 2, c))) / 10.0;
            CHECK(out(static_cast<std::size_t>(t), 4 + c) == doctest::Approx(expected));
        }
    }
}

TEST_CASE("aux features of trivial frames") {
    const AuxFeatures zero = frame_aux_features(std::vector<double>(64, 0.0));
    CHECK(zero.log_energy == doctest::Approx(-3.0));
    CHECK(zero.zcr == 0.0);
    CHECK(zero.kurtosis == 0.0);

    const AuxFeatures alternating = frame_aux_features(std::vector<double>{1.0, -1.0, 1.0, -1.0});
    CHECK(alternating.zcr == doctest::Approx(1.0));
}

TEST_CASE("aux features of a normal frame match expectations") {
    Rng rng(808);
    std::vector<double> frame(2048);
    for (double& v : frame) v = rng.normal();
    const AuxFeatures aux = frame_aux_features(frame);
    CHECK(aux.kurtosis == doctest::Approx(3.0).epsilon(0.4 / 3.0));
    CHECK(aux.log_energy == doctest::Approx(std::log10(1.001)).epsilon(0.05));
}

TEST_CASE("segment pooling partitions frames near-equally") {
    Matrix2D identity(4, 2);
    for (std::size_t t = 0; t < 4; ++t) {
        identity(t, 0) = static_cast<double>(t);
        identity(t, 1) = 10.0 + static_cast<double>(t);
    }
    SUBCASE("T equals the segment count: identity") {
        const Matrix2D out = pool_segments(identity, 4);
        for (std::size_t t = 0; t < 4; ++t) CHECK(out(t, 0) == identity(t, 0));
    }
    SUBCASE("T is twice the segment count: pairwise means") {
        const Matrix2D out = pool_segments(identity, 2);
        CHECK(out(0, 0) == doctest::Approx(0.5));
        CHECK(out(1, 0) == doctest::Approx(2.5));
    }
}

TEST_CASE("segment pooling with T=7 into 3 groups of (3,2,2)") {
    Matrix2D m(7, 1);
    for (std::size_t t = 0; t < 7; ++t) m(t, 0) = static_cast<double>(t);
    const Matrix2D out = pool_segments(m, 3);
    CHECK(out(0, 0) == doctest::Approx((0.0 + 1.0 + 2.0) / 3.0));
    CHECK(out(1, 0) == doctest::Approx((3.0 + 4.0) / 2.0));
    CHECK(out(2, 0) == doctest::Approx((5.0 + 6.0) / 2.0));
}

TEST_CASE("segment pooling reuses frames round-robin when T < segments") {
    Matrix2D m(3, 1);
    for (std::size_t t = 0; t < 3; ++t) m(t, 0) = static_cast<double>(t);
    const Matrix2D out = pool_segments(m, 5);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(1, 0) == 1.0);
    CHECK(out(2, 0) == 2.0);
    CHECK(out(3, 0) == 0.0);
    CHECK(out(4, 0) == 1.0);
    CHECK_THROWS_AS(pool_segments(Matrix2D(0, 3), 2), EmptyInput);
}

TEST_CASE("feature dimension contract holds across the searched grid") {
    for (const int n_mfcc : {13, 26, 39, 52, 65}) {
        FeatureConfig config;
        config.n_mfcc = n_mfcc;
        CHECK(config.feature_dim() == n_mfcc * 3 + 3);
        CHECK(config.dim_names().size() == static_cast<std::size_t>(config.feature_dim()));
        config.include_deltas = false;
        config.include_kurtosis = false;
        CHECK(config.feature_dim() == n_mfcc + 2);
    }
}

TEST_CASE("full extraction is deterministic and finite") {
    Rng rng(31337);
    std::vector<double> samples(44100);
    for (double& v : samples) v = rng.uniform(-1.0, 1.0);
    const AudioClip clip = make_clip(std::move(samples));
    FeatureConfig config;
    config.n_mfcc = 13;
    config.frame_len = 1024;
    config.n_segments = 50;
    const FeatureMatrix a = extract_features(clip, config);
    const FeatureMatrix b = extract_features(clip, config);
    CHECK(a.values.data() == b.values.data());
    CHECK(a.values.rows() == 50);
    CHECK(a.values.cols() == 42);
    CHECK(a.dim_names.back() == "kurtosis");
    for (double v : a.values.data()) CHECK(std::isfinite(v));
}

TEST_CASE("halving the amplitude moves log energy and nothing else") {
    Rng rng(606);
    std::vector<double> samples(8192);
    for (double& v : samples) v = rng.uniform(-1.0, 1.0);
    AudioClip loud = make_clip(samples);
    for (double& v : samples) v *= 0.5;
    AudioClip quiet = make_clip(samples);

    FeatureConfig config;
    config.n_mfcc = 13;
    config.frame_len = 1024;
    config.n_segments = 8;
    config.include_deltas = false;

    const FeatureMatrix fl = extract_features(loud, config);
    const FeatureMatrix fq = extract_features(quiet, config);
    const std::size_t d = fl.values.cols();
    for (std::size_t s = 0; s < fl.values.rows(); ++s) {
        // zcr (d-2) and kurtosis (d-1) are scale invariant
        CHECK(fq.values(s, d - 2) == doctest::Approx(fl.values(s, d - 2)));
        CHECK(fq.values(s, d - 1) == doctest::Approx(fl.values(s, d - 1)).epsilon(1e-9));
        // log energy shifts by log10(1/4) while energy >> the 0.001 floor
        CHECK(fq.values(s, d - 3) ==
              doctest::Approx(fl.values(s, d - 3) + std::log10(0.25)).epsilon(0.01));
    }
}

TEST_CASE("feature cache round trip preserves the matrix") {
    Rng rng(4242);
    std::vector<double> samples(22050);
    for (double& v : samples) v = rng.uniform(-1.0, 1.0);
    const AudioClip clip = make_clip(std::move(samples));
    FeatureConfig config;
    config.n_segments = 10;
    const FeatureMatrix original = extract_features(clip, config);

    const std::string path =
        (std::filesystem::temp_directory_path() / "coughnet_cache_test.fc").string();
    save_feature_matrix(path, original, config.hash());
    const FeatureMatrix loaded = load_feature_matrix(path, config.hash());
    CHECK(loaded.values.data() == original.values.data());
    CHECK(loaded.dim_names == original.dim_names);
    CHECK(loaded.patient_id == original.patient_id);
    CHECK(loaded.label == original.label);
    CHECK_THROWS_AS(load_feature_matrix(path, config.hash() + 1), IoError);
    std::filesystem::remove(path);
}
