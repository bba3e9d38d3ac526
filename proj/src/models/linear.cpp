#include <cmath>

#include "model_impl.hpp"

namespace coughnet::detail {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double dot_row(std::span<const double> w, std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
    return acc;
}

std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    return order;
}

}  // namespace

LinearFit fit_logistic(const Matrix2D& x, const std::vector<int>& y, const ModelSpec& spec,
                       std::uint64_t seed) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const double nu1 = spec.reg_strength;
    const double lr = spec.learning_rate / (1.0 + nu1);
    const std::size_t batch = spec.batch_size <= 0
                                  ? n
                                  : std::min<std::size_t>(static_cast<std::size_t>(spec.batch_size), n);

    std::vector<double> w(d, 0.0);
    double a = 0.0;
    std::vector<double> dw(d);
    Rng rng(Rng::derive(seed, {0x10}));
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(spec.epochs));

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        const auto order = epoch_order(n, rng);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            const double inv = 1.0 / static_cast<double>(end - start);
            std::fill(dw.begin(), dw.end(), 0.0);
            double da = 0.0;
            double loss = 0.0;
            for (std::size_t idx = start; idx < end; ++idx) {
                const auto row = x.row(order[idx]);
                const double target = y[order[idx]] == 1 ? 1.0 : 0.0;
                const double z = a + dot_row(w, row);
                const double p = sigmoid(z);
                loss += std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::fabs(z)));
                const double g = (p - target) * inv;
                for (std::size_t c = 0; c < d; ++c) dw[c] += g * row[c];
                da += g;
            }
            loss *= inv;
            double penalty = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                penalty += spec.l1_weight * std::fabs(w[c]) + spec.l2_weight * w[c] * w[c];
                const double sign = w[c] > 0.0 ? 1.0 : (w[c] < 0.0 ? -1.0 : 0.0);
                dw[c] += nu1 * (spec.l1_weight * sign + 2.0 * spec.l2_weight * w[c]);
            }
            loss += nu1 * penalty;
            if (!std::isfinite(loss)) throw DivergedError(static_cast<std::size_t>(epoch));
            for (std::size_t c = 0; c < d; ++c) w[c] -= lr * dw[c];
            a -= lr * da;
            epoch_loss += loss;
            ++n_batches;
        }
        trace.push_back(epoch_loss / static_cast<double>(n_batches));
    }

    LinearFit out;
    out.params = std::move(w);
    out.params.push_back(a);
    out.trace = std::move(trace);
    return out;
}

double predict_logistic(std::span<const double> params, std::span<const double> x) {
    const std::size_t d = x.size();
    return sigmoid(params[d] + dot_row(params.subspan(0, d), x));
}

LinearFit fit_svm(const Matrix2D& x, const std::vector<int>& y, const ModelSpec& spec,
                  std::uint64_t seed) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const double nu1 = spec.reg_strength;
    const double lr = spec.learning_rate / (1.0 + nu1);
    const std::size_t batch = spec.batch_size <= 0
                                  ? n
                                  : std::min<std::size_t>(static_cast<std::size_t>(spec.batch_size), n);

    std::vector<double> w(d, 0.0);
    double b = 0.0;
    std::vector<double> dw(d);
    Rng rng(Rng::derive(seed, {0x11}));
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(spec.epochs));

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        const auto order = epoch_order(n, rng);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            const double inv = 1.0 / static_cast<double>(end - start);
            std::fill(dw.begin(), dw.end(), 0.0);
            double db = 0.0;
            double loss = 0.0;
            for (std::size_t idx = start; idx < end; ++idx) {
                const auto row = x.row(order[idx]);
                const double target = y[order[idx]] == 1 ? 1.0 : -1.0;
                const double margin = b + dot_row(w, row);
                const double hinge = 1.0 - target * margin;
                if (hinge > 0.0) {
                    loss += hinge;
                    for (std::size_t c = 0; c < d; ++c) dw[c] -= target * row[c] * inv;
                    db -= target * inv;
                }
            }
            loss *= inv;
            double sq = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                sq += w[c] * w[c];
                dw[c] += nu1 * w[c];
            }
            loss += 0.5 * nu1 * sq;
            if (!std::isfinite(loss)) throw DivergedError(static_cast<std::size_t>(epoch));
            for (std::size_t c = 0; c < d; ++c) w[c] -= lr * dw[c];
            b -= lr * db;
            epoch_loss += loss;
            ++n_batches;
        }
        trace.push_back(epoch_loss / static_cast<double>(n_batches));
    }

    // Platt scaling of the margin on the training data: p = sigmoid(A*m + B)
    std::vector<double> margins(n);
    for (std::size_t i = 0; i < n; ++i) margins[i] = b + dot_row(w, x.row(i));
    double calib_a = 1.0;
    double calib_b = 0.0;
    const double calib_lr = 0.1;
    for (int it = 0; it < 500; ++it) {
        double ga = 0.0, gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double target = y[i] == 1 ? 1.0 : 0.0;
            const double g = (sigmoid(calib_a * margins[i] + calib_b) - target) / static_cast<double>(n);
            ga += g * margins[i];
            gb += g;
        }
        calib_a -= calib_lr * ga;
        calib_b -= calib_lr * gb;
    }

    LinearFit out;
    out.params = std::move(w);
    out.params.push_back(b);
    out.params.push_back(calib_a);
    out.params.push_back(calib_b);
    out.trace = std::move(trace);
    return out;
}

double predict_svm(std::span<const double> params, std::span<const double> x) {
    const std::size_t d = x.size();
    const double margin = params[d] + dot_row(params.subspan(0, d), x);
    return sigmoid(params[d + 1] * margin + params[d + 2]);
}

}  // namespace coughnet::detail
