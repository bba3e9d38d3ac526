#include "coughnet/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace coughnet {

AudioClip normalize(const AudioClip& clip) {
    if (clip.samples.empty()) throw EmptyInput("normalize: empty clip");
    double peak = 0.0;
    for (double s : clip.samples) peak = std::max(peak, std::fabs(s));
    AudioClip out = clip;
    if (peak == 0.0) {
        out.silent = true;
        return out;
    }
    for (double& s : out.samples) s /= peak;
    return out;
}

AudioClip trim_silence(const AudioClip& clip, const PreprocessConfig& config) {
    if (clip.samples.empty()) throw EmptyInput("trim_silence: empty clip");
    const std::size_t n = clip.samples.size();
    const double sr = static_cast<double>(clip.sample_rate_hz);
    const std::size_t window =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.window_ms * sr / 1000.0)));
    const std::size_t margin =
        static_cast<std::size_t>(std::llround(std::max(0.0, config.margin_ms) * sr / 1000.0));

    const std::size_t n_windows = (n + window - 1) / window;
    std::vector<double> rms(n_windows, 0.0);
    double peak_rms = 0.0;
    for (std::size_t w = 0; w < n_windows; ++w) {
        const std::size_t begin = w * window;
        const std::size_t end = std::min(n, begin + window);
        double acc = 0.0;
        for (std::size_t i = begin; i < end; ++i) acc += clip.samples[i] * clip.samples[i];
        rms[w] = std::sqrt(acc / static_cast<double>(end - begin));
        peak_rms = std::max(peak_rms, rms[w]);
    }
    const double threshold = peak_rms * std::pow(10.0, config.threshold_db / 20.0);

    // active sample ranges: windows at or above threshold, widened by the margin
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t w = 0; w < n_windows; ++w) {
        if (peak_rms == 0.0 || rms[w] < threshold) continue;
        const std::size_t begin = w * window;
        const std::size_t end = std::min(n, begin + window);
        const std::size_t lo = begin > margin ? begin - margin : 0;
        const std::size_t hi = std::min(n, end + margin);
        if (!ranges.empty() && lo <= ranges.back().second) {
            ranges.back().second = std::max(ranges.back().second, hi);
        } else {
            ranges.emplace_back(lo, hi);
        }
    }
    if (ranges.empty()) throw EmptyAfterTrim("trim_silence: no audio above threshold");

    AudioClip out = clip;
    out.samples.clear();
    for (const auto& [lo, hi] : ranges) {
        out.samples.insert(out.samples.end(), clip.samples.begin() + static_cast<std::ptrdiff_t>(lo),
                           clip.samples.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    return out;
}

AudioClip preprocess(const AudioClip& clip, const PreprocessConfig& config) {
    AudioClip normalized = normalize(clip);
    if (normalized.silent) throw EmptyAfterTrim("preprocess: all-zero clip");
    return trim_silence(normalized, config);
}

}  // namespace coughnet
