#pragma once

#include "coughnet/audio.hpp"

namespace coughnet {

struct PreprocessConfig {
    double margin_ms = 50.0;      // silence kept on each side of active audio
    double window_ms = 10.0;      // energy-detector analysis window
    double threshold_db = -40.0;  // relative to the clip's peak window RMS
};

/// Peak-normalizes amplitudes to max |sample| = 1. An all-zero clip is
/// returned unchanged with its `silent` flag set.
AudioClip normalize(const AudioClip& clip);

/// Removes silent stretches detected by a windowed RMS energy detector,
/// keeping `margin_ms` of context on each side of every active region.
/// Active samples are preserved verbatim and in order. Throws
/// EmptyAfterTrim when no window is above the threshold.
AudioClip trim_silence(const AudioClip& clip, const PreprocessConfig& config = {});

/// normalize followed by trim_silence.
AudioClip preprocess(const AudioClip& clip, const PreprocessConfig& config = {});

}  // namespace coughnet
