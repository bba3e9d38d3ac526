#include "coughnet/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace coughnet {

std::string label_name(Label label) {
    switch (label) {
        case Label::Positive: return "positive";
        case Label::Negative: return "negative";
        case Label::Healthy: return "healthy";
        case Label::Unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

Label parse_label(const std::string& token, std::size_t line_for_error) {
    std::string lower(token.size(), '\0');
    std::transform(token.begin(), token.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "positive") return Label::Positive;
    if (lower == "negative") return Label::Negative;
    if (lower == "healthy") return Label::Healthy;
    throw ManifestError(line_for_error, "unknown label '" + token + "'");
}

namespace {

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    void require(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw ParseError(pos_, std::string("truncated while reading ") + what);
        }
    }

    std::uint32_t read_u32(const char* what) {
        require(4, what);
        std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) |
                          (static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8) |
                          (static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16) |
                          (static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }

    std::uint16_t read_u16(const char* what) {
        require(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(
            bytes_[pos_] | (static_cast<std::uint16_t>(bytes_[pos_ + 1]) << 8));
        pos_ += 2;
        return v;
    }

    std::string read_tag() {
        require(4, "chunk tag");
        std::string tag(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
        pos_ += 4;
        return tag;
    }

    const std::uint8_t* raw(std::size_t n, const char* what) {
        require(n, what);
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }

    void skip(std::size_t n, const char* what) {
        require(n, what);
        pos_ += n;
    }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

struct FmtChunk {
    std::uint16_t format_code = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits_per_sample = 0;
    bool present = false;
};

double decode_sample_pcm16(const std::uint8_t* p) {
    std::int16_t v = static_cast<std::int16_t>(p[0] | (static_cast<std::uint16_t>(p[1]) << 8));
    return static_cast<double>(v) / 32768.0;
}

double decode_sample_f32(const std::uint8_t* p) {
    std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                         (static_cast<std::uint32_t>(p[2]) << 16) |
                         (static_cast<std::uint32_t>(p[3]) << 24);
    float f;
    static_assert(sizeof(f) == 4);
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

}  // namespace

AudioClip decode_wav(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);

    if (r.read_tag() != "RIFF") throw ParseError(0, "missing RIFF tag");
    r.read_u32("RIFF size");
    if (r.read_tag() != "WAVE") throw ParseError(8, "missing WAVE tag");

    FmtChunk fmt;
    std::vector<double> samples;
    bool have_data = false;

    while (r.remaining() >= 8) {
        const std::size_t chunk_at = r.offset();
        const std::string tag = r.read_tag();
        const std::uint32_t chunk_len = r.read_u32("chunk size");

        if (tag == "fmt ") {
            if (chunk_len < 16) throw ParseError(chunk_at, "fmt chunk too small");
            const std::uint8_t* p = r.raw(chunk_len, "fmt chunk");
            fmt.format_code = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
            fmt.channels = static_cast<std::uint16_t>(p[2] | (p[3] << 8));
            fmt.sample_rate = static_cast<std::uint32_t>(p[4]) | (static_cast<std::uint32_t>(p[5]) << 8) |
                              (static_cast<std::uint32_t>(p[6]) << 16) |
                              (static_cast<std::uint32_t>(p[7]) << 24);
            fmt.bits_per_sample = static_cast<std::uint16_t>(p[14] | (p[15] << 8));
            fmt.present = true;
        } else if (tag == "data") {
            if (!fmt.present) throw ParseError(chunk_at, "data chunk before fmt chunk");
            if (fmt.channels != 1 && fmt.channels != 2) {
                throw UnsupportedFormat("unsupported channel count " + std::to_string(fmt.channels));
            }
            std::size_t bytes_per_sample;
            if (fmt.format_code == 1 && fmt.bits_per_sample == 16) {
                bytes_per_sample = 2;
            } else if (fmt.format_code == 3 && fmt.bits_per_sample == 32) {
                bytes_per_sample = 4;
            } else {
                throw UnsupportedFormat("unsupported codec: format " +
                                        std::to_string(fmt.format_code) + ", " +
                                        std::to_string(fmt.bits_per_sample) + " bits");
            }
            const std::size_t block = bytes_per_sample * fmt.channels;
            const std::size_t n_frames = chunk_len / block;
            const std::uint8_t* p = r.raw(n_frames * block, "data chunk");
            // trailing partial block, if any, is ignored but must exist
            r.skip(chunk_len - n_frames * block, "data chunk tail");
            samples.resize(n_frames);
            for (std::size_t i = 0; i < n_frames; ++i) {
                double acc = 0.0;
                for (std::size_t c = 0; c < fmt.channels; ++c) {
                    const std::uint8_t* sp = p + i * block + c * bytes_per_sample;
                    acc += bytes_per_sample == 2 ? decode_sample_pcm16(sp) : decode_sample_f32(sp);
                }
                samples[i] = acc / static_cast<double>(fmt.channels);
            }
            have_data = true;
        } else {
            // unknown chunk: skip payload plus RIFF word-alignment pad byte
            r.skip(chunk_len, "chunk payload");
            if ((chunk_len & 1u) != 0 && r.remaining() > 0) r.skip(1, "pad byte");
            continue;
        }
        if ((chunk_len & 1u) != 0 && r.remaining() > 0) r.skip(1, "pad byte");
    }

    if (!fmt.present) throw ParseError(bytes.size(), "no fmt chunk found");
    if (!have_data) throw ParseError(bytes.size(), "no data chunk found");
    if (samples.empty()) throw ParseError(bytes.size(), "data chunk holds no samples");
    if (fmt.sample_rate == 0) throw ParseError(bytes.size(), "sample rate is zero");

    AudioClip clip;
    clip.samples = std::move(samples);
    clip.sample_rate_hz = static_cast<int>(fmt.sample_rate);
    return clip;
}

AudioClip read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_wav(bytes);
}

void write_wav_pcm16(const std::string& path, const std::vector<double>& samples,
                     int sample_rate_hz) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");

    const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
    const std::uint32_t riff_len = 36 + data_len;
    const std::uint32_t sr = static_cast<std::uint32_t>(sample_rate_hz);
    const std::uint32_t byte_rate = sr * 2;

    auto put_u32 = [&](std::uint32_t v) {
        char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
        out.write(b, 4);
    };
    auto put_u16 = [&](std::uint16_t v) {
        char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
        out.write(b, 2);
    };

    out.write("RIFF", 4);
    put_u32(riff_len);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(1);   // PCM
    put_u16(1);   // mono
    put_u32(sr);
    put_u32(byte_rate);
    put_u16(2);   // block align
    put_u16(16);  // bits per sample
    out.write("data", 4);
    put_u32(data_len);
    for (double s : samples) {
        double scaled = std::round(s * 32768.0);
        scaled = std::clamp(scaled, -32768.0, 32767.0);
        put_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace coughnet
