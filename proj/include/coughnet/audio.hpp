#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coughnet/error.hpp"

namespace coughnet {

enum class Label : std::uint8_t { Positive = 0, Negative = 1, Healthy = 2, Unlabeled = 3 };

/// Binary target: COVID-positive vs everything else.
inline int binary_label(Label label) { return label == Label::Positive ? 1 : 0; }

std::string label_name(Label label);
Label parse_label(const std::string& token, std::size_t line_for_error);

/// Mono waveform with provenance. Amplitudes are in [-1, 1] after decode;
/// `silent` is set by preprocessing when the clip is all-zero.
struct AudioClip {
    std::vector<double> samples;
    int sample_rate_hz = 0;
    std::string patient_id;
    std::string cough_id;
    Label label = Label::Unlabeled;
    bool silent = false;
};

/// Parses a RIFF/WAVE file (PCM 16-bit or IEEE float 32-bit, 1-2 channels).
/// Stereo is downmixed by channel averaging; PCM16 samples are scaled by
/// 1/32768. Unknown chunks are skipped. Throws ParseError or
/// UnsupportedFormat on bad input.
AudioClip read_wav(const std::string& path);

/// Decode from an in-memory byte buffer (same contract as read_wav).
AudioClip decode_wav(const std::vector<std::uint8_t>& bytes);

/// Writes a mono PCM16 WAV; samples are scaled by 32768 and clamped to
/// [-32768, 32767]. A read_wav of the result recovers PCM16 values exactly.
void write_wav_pcm16(const std::string& path, const std::vector<double>& samples,
                     int sample_rate_hz);

}  // namespace coughnet
