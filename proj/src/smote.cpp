#include "coughnet/smote.hpp"

#include <cmath>

namespace coughnet {

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

std::vector<std::vector<double>> smote(const std::vector<std::vector<double>>& minority,
                                       std::size_t majority_count, const SmoteConfig& config) {
    if (minority.size() < 2) {
        throw InsufficientMinority("smote: need at least 2 minority samples, got " +
                                   std::to_string(minority.size()));
    }
    if (majority_count < minority.size()) {
        throw InvalidLength("smote: majority_count below minority size");
    }
    if (config.n_candidates < 1) throw InvalidLength("smote: n_candidates must be >= 1");
    if (!(config.target_ratio > 0.0 && config.target_ratio <= 1.0)) {
        throw InvalidLength("smote: target_ratio must be in (0, 1]");
    }
    const std::size_t dim = minority.front().size();
    for (const auto& v : minority) {
        if (v.size() != dim) throw ShapeError("smote: inhomogeneous minority vectors");
    }

    const auto target =
        static_cast<std::size_t>(std::llround(static_cast<double>(majority_count) * config.target_ratio));
    if (target <= minority.size()) return {};
    const std::size_t n_synthetic = target - minority.size();

    Rng rng(config.seed);
    const std::size_t n = minority.size();
    // candidate pool is everything except x itself; sample without replacement
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(config.n_candidates), n - 1);

    std::vector<std::vector<double>> out;
    out.reserve(n_synthetic);
    std::vector<std::size_t> pool(n - 1);
    for (std::size_t s = 0; s < n_synthetic; ++s) {
        const std::size_t xi = s % n;
        std::size_t w = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != xi) pool[w++] = j;
        }
        // partial Fisher-Yates: first k entries are the candidates
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t pick = j + static_cast<std::size_t>(rng.uniform_int(pool.size() - j));
            std::swap(pool[j], pool[pick]);
        }
        std::size_t best = pool[0];
        double best_dist = squared_distance(minority[xi], minority[best]);
        for (std::size_t j = 1; j < k; ++j) {
            const double dist = squared_distance(minority[xi], minority[pool[j]]);
            if (dist < best_dist || (dist == best_dist && pool[j] < best)) {
                best = pool[j];
                best_dist = dist;
            }
        }
        const double u = rng.uniform();
        std::vector<double> synthetic(dim);
        const auto& x = minority[xi];
        const auto& nn = minority[best];
        for (std::size_t c = 0; c < dim; ++c) synthetic[c] = x[c] + u * (nn[c] - x[c]);
        out.push_back(std::move(synthetic));
    }
    return out;
}

}  // namespace coughnet
