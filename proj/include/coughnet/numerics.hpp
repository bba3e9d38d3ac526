#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "coughnet/error.hpp"

namespace coughnet {

/// Dense row-major matrix of doubles.
class Matrix2D {
public:
    Matrix2D() = default;
    Matrix2D(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix2D(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw InvalidLength("Matrix2D: data length does not match shape");
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Dense tensor with shape (dim0, dim1, dim2), row-major with dim2 fastest.
class Tensor3D {
public:
    Tensor3D() = default;
    Tensor3D(std::size_t d0, std::size_t d1, std::size_t d2, double fill = 0.0)
        : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, fill) {}

    std::size_t dim0() const { return d0_; }
    std::size_t dim1() const { return d1_; }
    std::size_t dim2() const { return d2_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * d1_ + j) * d2_ + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * d1_ + j) * d2_ + k];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    std::size_t d0_ = 0;
    std::size_t d1_ = 0;
    std::size_t d2_ = 0;
    std::vector<double> data_;
};

/// Seedable deterministic RNG: xoshiro256++ with splitmix64 state expansion.
/// Identical seeds produce identical streams on every platform; this is the
/// only source of randomness in the library (no ambient global RNG).
class Rng {
public:
    static constexpr std::string_view kAlgorithm = "xoshiro256++ (splitmix64-seeded)";

    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    /// Unbiased integer in [0, bound); bound must be > 0.
    std::uint64_t uniform_int(std::uint64_t bound);

    /// Standard normal via Box-Muller (two uniforms per draw).
    double normal();

    /// Fisher-Yates shuffle driven by this stream.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        if (items.size() < 2) return;
        for (std::size_t i = items.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
            std::swap(items[i], items[j]);
        }
    }

    /// Deterministically derives a sub-seed from a base seed and salts, so
    /// independent work units (folds, grid points, splits) get decoupled
    /// streams regardless of execution order.
    static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> salts);

private:
    std::uint64_t state_[4];
};

/// Forward DFT of a real frame whose length is a power of two.
/// Bin k equals sum_n s[n] * exp(-2*pi*i*k*n/N); returns N/2+1 bins.
std::vector<std::complex<double>> fft_real(std::span<const double> frame);

/// Inverse of fft_real: reconstructs the length-n real signal from its
/// half spectrum (n/2+1 bins, n a power of two).
std::vector<double> ifft_real(std::span<const std::complex<double>> spectrum, std::size_t n);

/// Orthonormal DCT-II; keeps the first n_out coefficients.
std::vector<double> dct2(std::span<const double> values, std::size_t n_out);

/// Inverse of the full-length orthonormal DCT-II.
std::vector<double> idct2(std::span<const double> coefficients);

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;          // population convention (divisor N)
    double fourth_central = 0.0;  // E[(x - mean)^4]
};

Moments moments(std::span<const double> values);

}  // namespace coughnet
