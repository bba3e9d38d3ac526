#include "coughnet/numerics.hpp"

#include <cmath>
#include <numbers>

namespace coughnet {

namespace {

std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT. sign = -1 forward, +1 inverse (unscaled).
void fft_in_place(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = static_cast<double>(sign) * 2.0 * std::numbers::pi / static_cast<double>(len);
        // per-butterfly twiddles computed from index to keep rounding error flat
        const std::size_t half = len / 2;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const std::complex<double> w =
                    std::polar(1.0, angle * static_cast<double>(k));
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + half] * w;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64_next(sm);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::uniform_int(std::uint64_t bound) {
    if (bound == 0) throw InvalidLength("uniform_int: bound must be positive");
    const std::uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % bound;
    }
}

double Rng::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> salts) {
    std::uint64_t x = seed;
    for (std::uint64_t salt : salts) {
        x ^= salt + 0x9e3779b97f4a7c15ULL + (x << 6) + (x >> 2);
        std::uint64_t sm = x;
        x = splitmix64_next(sm);
    }
    return x;
}

std::vector<std::complex<double>> fft_real(std::span<const double> frame) {
    const std::size_t n = frame.size();
    if (!is_power_of_two(n)) {
        throw InvalidLength("fft_real: frame length must be a power of two, got " +
                            std::to_string(n));
    }
    std::vector<std::complex<double>> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = {frame[i], 0.0};
    fft_in_place(a, -1);
    a.resize(n / 2 + 1);
    return a;
}

std::vector<double> ifft_real(std::span<const std::complex<double>> spectrum, std::size_t n) {
    if (!is_power_of_two(n)) {
        throw InvalidLength("ifft_real: length must be a power of two");
    }
    if (spectrum.size() != n / 2 + 1) {
        throw InvalidLength("ifft_real: expected " + std::to_string(n / 2 + 1) + " bins, got " +
                            std::to_string(spectrum.size()));
    }
    std::vector<std::complex<double>> a(n);
    for (std::size_t k = 0; k < spectrum.size(); ++k) a[k] = spectrum[k];
    for (std::size_t k = spectrum.size(); k < n; ++k) a[k] = std::conj(spectrum[n - k]);
    fft_in_place(a, +1);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i].real() / static_cast<double>(n);
    return out;
}

std::vector<double> dct2(std::span<const double> values, std::size_t n_out) {
    const std::size_t n = values.size();
    if (n == 0) throw EmptyInput("dct2: empty input");
    if (n_out > n) {
        throw InvalidLength("dct2: n_out " + std::to_string(n_out) + " exceeds input length " +
                            std::to_string(n));
    }
    const double scale0 = std::sqrt(1.0 / static_cast<double>(n));
    const double scale = std::sqrt(2.0 / static_cast<double>(n));
    std::vector<double> out(n_out, 0.0);
    for (std::size_t k = 0; k < n_out; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += values[i] * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k /
                                        (2.0 * static_cast<double>(n)));
        }
        out[k] = acc * (k == 0 ? scale0 : scale);
    }
    return out;
}

std::vector<double> idct2(std::span<const double> coefficients) {
    const std::size_t n = coefficients.size();
    if (n == 0) throw EmptyInput("idct2: empty input");
    const double scale0 = std::sqrt(1.0 / static_cast<double>(n));
    const double scale = std::sqrt(2.0 / static_cast<double>(n));
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            acc += (k == 0 ? scale0 : scale) * coefficients[k] *
                   std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * static_cast<double>(n)));
        }
        out[i] = acc;
    }
    return out;
}

Moments moments(std::span<const double> values) {
    if (values.empty()) throw EmptyInput("moments: empty input");
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    return {mean, std::sqrt(m2), m4};
}

}  // namespace coughnet
