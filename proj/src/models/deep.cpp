#include <algorithm>
#include <cmath>

#include "model_impl.hpp"

namespace coughnet {

std::string family_name(ModelFamily family) {
    switch (family) {
        case ModelFamily::LogisticRegression: return "LR";
        case ModelFamily::LinearSvm: return "SVM";
        case ModelFamily::Mlp: return "MLP";
        case ModelFamily::Cnn: return "CNN";
        case ModelFamily::Lstm: return "LSTM";
        case ModelFamily::ResNet: return "RESNET";
    }
    return "LR";
}

ModelFamily parse_family(const std::string& name) {
    if (name == "LR") return ModelFamily::LogisticRegression;
    if (name == "SVM") return ModelFamily::LinearSvm;
    if (name == "MLP") return ModelFamily::Mlp;
    if (name == "CNN") return ModelFamily::Cnn;
    if (name == "LSTM") return ModelFamily::Lstm;
    if (name == "RESNET") return ModelFamily::ResNet;
    throw Error("unknown model family '" + name + "'");
}

bool is_vector_family(ModelFamily family) {
    return family == ModelFamily::LogisticRegression || family == ModelFamily::LinearSvm ||
           family == ModelFamily::Mlp;
}

ModelSpec ModelSpec::logistic_regression(double nu1, double nu2, double nu3) {
    ModelSpec s;
    s.family = ModelFamily::LogisticRegression;
    s.reg_strength = nu1;
    s.l1_weight = nu2;
    s.l2_weight = nu3;
    s.learning_rate = 0.5;
    s.epochs = 500;
    s.batch_size = 0;
    return s;
}

ModelSpec ModelSpec::linear_svm(double nu1) {
    ModelSpec s;
    s.family = ModelFamily::LinearSvm;
    s.reg_strength = nu1;
    s.learning_rate = 0.5;
    s.epochs = 500;
    s.batch_size = 0;
    return s;
}

ModelSpec ModelSpec::mlp(int eta, double zeta1, double zeta2) {
    ModelSpec s;
    s.family = ModelFamily::Mlp;
    s.hidden_units = eta;
    s.mlp_l2 = zeta1;
    s.learning_rate = zeta2;
    s.epochs = 300;
    s.batch_size = 0;
    return s;
}

ModelSpec ModelSpec::cnn(int alpha1, int alpha2, double alpha3, int alpha4, int xi1, int xi2) {
    ModelSpec s;
    s.family = ModelFamily::Cnn;
    s.conv_filters = alpha1;
    s.kernel_size = alpha2;
    s.dropout = alpha3;
    s.dense_units = alpha4;
    s.batch_size = xi1;
    s.epochs = xi2;
    s.learning_rate = 1e-3;
    return s;
}

ModelSpec ModelSpec::lstm(int beta1, double beta2, double alpha3, int alpha4, int xi1, int xi2) {
    ModelSpec s;
    s.family = ModelFamily::Lstm;
    s.lstm_units = beta1;
    s.learning_rate = beta2;
    s.dropout = alpha3;
    s.dense_units = alpha4;
    s.batch_size = xi1;
    s.epochs = xi2;
    return s;
}

ModelSpec ModelSpec::resnet(ResNetPreset preset, int xi1, int xi2) {
    ModelSpec s;
    s.family = ModelFamily::ResNet;
    s.preset = preset;
    s.batch_size = xi1;
    s.epochs = xi2;
    s.learning_rate = 1e-3;
    return s;
}

namespace detail {

namespace {

using net::Conv2D;
using net::Dense;
using net::Dropout;
using net::Flatten;
using net::GlobalAvgPool;
using net::Lstm;
using net::MaxPool2D;
using net::Relu;
using net::ResidualBlock;
using net::Tensor;

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
    if (in + 2 * pad < k) throw ShapeError("input too small for kernel");
    return (in + 2 * pad - k) / stride + 1;
}

std::unique_ptr<ResidualBlock> plain_block(std::size_t channels, const std::string& label) {
    std::vector<std::unique_ptr<net::Layer>> branch;
    branch.push_back(std::make_unique<Conv2D>(3, 3, channels, channels, 1, 1));
    branch.push_back(std::make_unique<Relu>());
    branch.push_back(std::make_unique<Conv2D>(3, 3, channels, channels, 1, 1));
    return std::make_unique<ResidualBlock>(std::move(branch), nullptr, label);
}

std::unique_ptr<ResidualBlock> bottleneck_block(std::size_t in_c, std::size_t mid, std::size_t out_c,
                                                std::size_t stride, const std::string& label) {
    std::vector<std::unique_ptr<net::Layer>> branch;
    branch.push_back(std::make_unique<Conv2D>(1, 1, in_c, mid, 1, 0));
    branch.push_back(std::make_unique<Relu>());
    branch.push_back(std::make_unique<Conv2D>(3, 3, mid, mid, stride, 1));
    branch.push_back(std::make_unique<Relu>());
    branch.push_back(std::make_unique<Conv2D>(1, 1, mid, out_c, 1, 0));
    std::unique_ptr<Conv2D> proj;
    if (stride != 1 || in_c != out_c) {
        proj = std::make_unique<Conv2D>(1, 1, in_c, out_c, stride, 0);
    }
    return std::make_unique<ResidualBlock>(std::move(branch), std::move(proj), label);
}

std::unique_ptr<net::Net> build_mlp(const ModelSpec& spec, const InputShape& shape) {
    auto n = std::make_unique<net::Net>();
    const auto hidden = static_cast<std::size_t>(spec.hidden_units);
    n->layers.push_back(std::make_unique<Dense>(shape.cols, hidden));
    n->layers.push_back(std::make_unique<Relu>());
    n->layers.push_back(std::make_unique<Dense>(hidden, 1));
    n->head = net::Head::SigmoidBce;
    n->l2 = spec.mlp_l2;
    return n;
}

std::unique_ptr<net::Net> build_cnn(const ModelSpec& spec, const InputShape& shape) {
    auto n = std::make_unique<net::Net>();
    const auto k = static_cast<std::size_t>(spec.kernel_size);
    const auto filters = static_cast<std::size_t>(spec.conv_filters);
    const auto dense = static_cast<std::size_t>(spec.dense_units);
    n->layers.push_back(std::make_unique<Conv2D>(k, k, 1, filters, 1, 0));
    n->layers.push_back(std::make_unique<Relu>());
    n->layers.push_back(std::make_unique<Dropout>(spec.dropout));
    n->layers.push_back(std::make_unique<MaxPool2D>(2, 2, 0));
    n->layers.push_back(std::make_unique<Flatten>());
    const std::size_t h = conv_out(conv_out(shape.rows, k, 1, 0), 2, 2, 0);
    const std::size_t w = conv_out(conv_out(shape.cols, k, 1, 0), 2, 2, 0);
    n->layers.push_back(std::make_unique<Dense>(h * w * filters, dense));
    n->layers.push_back(std::make_unique<Relu>());
    n->layers.push_back(std::make_unique<Dense>(dense, 8));
    n->layers.push_back(std::make_unique<Relu>());
    n->layers.push_back(std::make_unique<Dense>(8, 2));
    n->head = net::Head::SoftmaxCe;
    return n;
}

std::unique_ptr<net::Net> build_lstm(const ModelSpec& spec, const InputShape& shape) {
    auto n = std::make_unique<net::Net>();
    const auto units = static_cast<std::size_t>(spec.lstm_units);
    const auto dense = static_cast<std::size_t>(spec.dense_units);
    n->layers.push_back(std::make_unique<Lstm>(shape.cols, units));
    n->layers.push_back(std::make_unique<Dropout>(spec.dropout));
    n->layers.push_back(std::make_unique<Dense>(units, dense));
    n->layers.push_back(std::make_unique<Relu>());
    n->layers.push_back(std::make_unique<Dense>(dense, 8));
    n->layers.push_back(std::make_unique<Relu>());
    n->layers.push_back(std::make_unique<Dense>(8, 2));
    n->head = net::Head::SoftmaxCe;
    return n;
}

std::unique_ptr<net::Net> build_tiny_resnet(const InputShape& shape) {
    auto n = std::make_unique<net::Net>();
    n->layers.push_back(std::make_unique<Conv2D>(3, 3, 1, 8, 2, 1));
    n->layers.push_back(std::make_unique<Relu>());
    n->layers.push_back(plain_block(8, "res1"));
    n->layers.push_back(std::make_unique<MaxPool2D>(2, 2, 0));
    n->layers.push_back(plain_block(8, "res2"));
    n->layers.push_back(std::make_unique<Flatten>());
    const std::size_t h = conv_out(conv_out(shape.rows, 3, 2, 1), 2, 2, 0);
    const std::size_t w = conv_out(conv_out(shape.cols, 3, 2, 1), 2, 2, 0);
    n->layers.push_back(std::make_unique<Dense>(h * w * 8, 2));
    n->head = net::Head::SoftmaxCe;
    return n;
}

struct Resnet50Stage {
    std::size_t blocks, mid, out;
};

constexpr Resnet50Stage kResnet50Stages[] = {
    {3, 64, 256}, {4, 128, 512}, {6, 256, 1024}, {3, 512, 2048}};

std::unique_ptr<net::Net> build_resnet50(const InputShape&) {
    auto n = std::make_unique<net::Net>();
    n->layers.push_back(std::make_unique<Conv2D>(7, 7, 1, 64, 2, 3));
    n->layers.push_back(std::make_unique<Relu>());
    n->layers.push_back(std::make_unique<MaxPool2D>(3, 2, 1));
    std::size_t in_c = 64;
    for (std::size_t stage = 0; stage < 4; ++stage) {
        const auto& cfg = kResnet50Stages[stage];
        for (std::size_t b = 0; b < cfg.blocks; ++b) {
            const std::size_t stride = (stage > 0 && b == 0) ? 2 : 1;
            const std::string label =
                "res" + std::to_string(stage + 2) + std::string(1, static_cast<char>('a' + b));
            n->layers.push_back(bottleneck_block(in_c, cfg.mid, cfg.out, stride, label));
            in_c = cfg.out;
        }
    }
    n->layers.push_back(std::make_unique<GlobalAvgPool>());
    n->layers.push_back(std::make_unique<Dense>(2048, 2));
    n->head = net::Head::SoftmaxCe;
    return n;
}

}  // namespace

std::unique_ptr<net::Net> build_net(const ModelSpec& spec, const InputShape& shape) {
    switch (spec.family) {
        case ModelFamily::Mlp: return build_mlp(spec, shape);
        case ModelFamily::Cnn: return build_cnn(spec, shape);
        case ModelFamily::Lstm: return build_lstm(spec, shape);
        case ModelFamily::ResNet:
            return spec.preset == ResNetPreset::Tiny ? build_tiny_resnet(shape)
                                                     : build_resnet50(shape);
        default: throw Error("build_net: not a net-backed family");
    }
}

net::Tensor pack_batch(const std::vector<const Matrix2D*>& coughs, const ModelSpec& spec,
                       const InputShape& shape) {
    const std::size_t n = coughs.size();
    Tensor out;
    if (spec.family == ModelFamily::Lstm) {
        out = Tensor({n, shape.rows, shape.cols});
    } else {
        out = Tensor({n, shape.rows, shape.cols, 1});
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = *coughs[i];
        if (m.rows() != shape.rows || m.cols() != shape.cols) {
            throw ShapeError("pack_batch: cough matrix shape mismatch");
        }
        std::copy(m.data().begin(), m.data().end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(i * m.size()));
    }
    return out;
}

}  // namespace detail

namespace {

InputShape deduce_shape(const ModelSpec& spec, const std::vector<Matrix2D>& coughs) {
    if (coughs.empty()) throw EmptyInput("fit: no training coughs");
    const std::size_t rows = coughs.front().rows();
    const std::size_t cols = coughs.front().cols();
    for (const auto& m : coughs) {
        if (m.cols() != cols || (!is_vector_family(spec.family) && m.rows() != rows)) {
            throw ShapeError("fit: inhomogeneous input shapes");
        }
    }
    InputShape shape;
    if (is_vector_family(spec.family)) {
        shape.kind = InputShape::Kind::Vector;
        shape.rows = 0;
        shape.cols = cols;
    } else {
        shape.kind = InputShape::Kind::Matrix;
        shape.rows = rows;
        shape.cols = cols;
    }
    return shape;
}

/// Expands per-cough matrices into per-segment rows with inherited labels.
void expand_segments(const std::vector<Matrix2D>& coughs, const std::vector<int>& labels,
                     Matrix2D* x, std::vector<int>* y) {
    std::size_t total = 0;
    for (const auto& m : coughs) total += m.rows();
    *x = Matrix2D(total, coughs.front().cols());
    y->resize(total);
    std::size_t r = 0;
    for (std::size_t i = 0; i < coughs.size(); ++i) {
        const auto& m = coughs[i];
        for (std::size_t j = 0; j < m.rows(); ++j, ++r) {
            std::copy(m.row(j).begin(), m.row(j).end(), x->row(r).begin());
            (*y)[r] = labels[i];
        }
    }
}

struct NetFitOutput {
    std::vector<double> params;
    std::vector<double> trace;
    std::shared_ptr<const net::Net> trained;
};

/// Per-dimension mean and standard deviation of the example rows.
void fit_scalers(const Matrix2D& x, std::vector<double>* mean, std::vector<double>* scale) {
    const std::size_t n = x.rows(), d = x.cols();
    mean->assign(d, 0.0);
    scale->assign(d, 1.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) (*mean)[c] += x(r, c);
    }
    for (double& m : *mean) m /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = x(r, c) - (*mean)[c];
            var[c] += diff * diff;
        }
    }
    for (std::size_t c = 0; c < d; ++c) {
        const double sd = std::sqrt(var[c] / static_cast<double>(n));
        (*scale)[c] = sd > 1e-12 ? sd : 1.0;
    }
}

void standardize_rows(Matrix2D* x, const std::vector<double>& mean,
                      const std::vector<double>& scale) {
    for (std::size_t r = 0; r < x->rows(); ++r) {
        for (std::size_t c = 0; c < x->cols(); ++c) {
            (*x)(r, c) = ((*x)(r, c) - mean[c]) / scale[c];
        }
    }
}

NetFitOutput train_net(std::unique_ptr<net::Net> network, net::Tensor all,
                       std::vector<int> all_labels, const ModelSpec& spec, std::uint64_t seed) {
    const std::size_t n = all.batch();
    const std::size_t per_sample = all.sample_count();
    const std::size_t batch = spec.batch_size <= 0
                                  ? n
                                  : std::min<std::size_t>(static_cast<std::size_t>(spec.batch_size), n);

    Rng init_rng(Rng::derive(seed, {1}));
    network->init(init_rng);
    Rng shuffle_rng(Rng::derive(seed, {2}));
    Rng dropout_rng(Rng::derive(seed, {3}));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(spec.epochs));
    std::vector<std::size_t> batch_shape = all.shape;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            batch_shape[0] = end - start;
            net::Tensor xb(batch_shape);
            std::vector<int> yb(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t src = order[i];
                std::copy(all.data.begin() + static_cast<std::ptrdiff_t>(src * per_sample),
                          all.data.begin() + static_cast<std::ptrdiff_t>((src + 1) * per_sample),
                          xb.data.begin() + static_cast<std::ptrdiff_t>((i - start) * per_sample));
                yb[i - start] = all_labels[src];
            }
            network->zero_grads();
            const net::Tensor logits = network->forward(xb, true, dropout_rng);
            net::Tensor dlogits;
            const double data_loss = network->head == net::Head::SoftmaxCe
                                         ? net::softmax_ce(logits, yb, &dlogits)
                                         : net::sigmoid_bce(logits, yb, &dlogits);
            const double loss = data_loss + network->penalty();
            if (!std::isfinite(loss)) throw DivergedError(static_cast<std::size_t>(epoch));
            network->backward(dlogits);
            network->sgd_step(spec.learning_rate);
            epoch_loss += loss;
            ++n_batches;
        }
        trace.push_back(epoch_loss / static_cast<double>(n_batches));
    }

    NetFitOutput out;
    network->copy_params(&out.params);
    out.trace = std::move(trace);
    out.trained = std::shared_ptr<const net::Net>(network.release());
    return out;
}

}  // namespace

TrainedModel fit(const ModelSpec& spec, const std::vector<Matrix2D>& coughs,
                 const std::vector<int>& labels, std::uint64_t seed) {
    if (coughs.size() != labels.size()) throw ShapeError("fit: labels/inputs size mismatch");
    const InputShape shape = deduce_shape(spec, coughs);
    bool has_pos = false, has_neg = false;
    for (int y : labels) (y == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw DegenerateLabels("fit: need at least one example per class");

    TrainedModel model;
    model.spec = spec;
    model.shape = shape;
    model.seed = seed;

    if (is_vector_family(spec.family)) {
        Matrix2D x;
        std::vector<int> y;
        expand_segments(coughs, labels, &x, &y);
        fit_scalers(x, &model.feature_mean, &model.feature_scale);
        standardize_rows(&x, model.feature_mean, model.feature_scale);
        if (spec.family == ModelFamily::Mlp) {
            net::Tensor all({x.rows(), x.cols()});
            std::copy(x.data().begin(), x.data().end(), all.data.begin());
            auto result = train_net(detail::build_net(spec, shape), std::move(all), std::move(y),
                                    spec, seed);
            model.params = std::move(result.params);
            model.loss_trace = std::move(result.trace);
            model.net_ = std::move(result.trained);
        } else {
            auto result = spec.family == ModelFamily::LogisticRegression
                              ? detail::fit_logistic(x, y, spec, seed)
                              : detail::fit_svm(x, y, spec, seed);
            model.params = std::move(result.params);
            model.loss_trace = std::move(result.trace);
        }
    } else {
        std::vector<const Matrix2D*> ptrs;
        ptrs.reserve(coughs.size());
        for (const auto& m : coughs) ptrs.push_back(&m);
        auto result = train_net(detail::build_net(spec, shape),
                                detail::pack_batch(ptrs, spec, shape), labels, spec, seed);
        model.params = std::move(result.params);
        model.loss_trace = std::move(result.trace);
        model.net_ = std::move(result.trained);
    }
    return model;
}

TrainedModel build_untrained(const ModelSpec& spec, const InputShape& shape, std::uint64_t seed) {
    TrainedModel model;
    model.spec = spec;
    model.shape = shape;
    model.seed = seed;
    if (spec.family == ModelFamily::LogisticRegression) {
        model.params.assign(shape.cols + 1, 0.0);
    } else if (spec.family == ModelFamily::LinearSvm) {
        model.params.assign(shape.cols + 3, 0.0);
        model.params[shape.cols + 1] = 1.0;  // calibration scale
    } else {
        auto network = detail::build_net(spec, shape);
        Rng rng(Rng::derive(seed, {1}));
        network->init(rng);
        network->copy_params(&model.params);
        model.net_ = std::shared_ptr<const net::Net>(network.release());
    }
    return model;
}

void TrainedModel::rebuild() {
    if (is_vector_family(spec.family) && spec.family != ModelFamily::Mlp) {
        net_.reset();
        return;
    }
    auto network = detail::build_net(spec, shape);
    network->set_params(params);
    net_ = std::shared_ptr<const net::Net>(network.release());
}

double TrainedModel::predict_vector_proba(std::span<const double> x) const {
    if (x.size() != shape.cols) throw ShapeError("predict: feature dimension mismatch");
    std::vector<double> standardized(x.begin(), x.end());
    if (feature_mean.size() == x.size()) {
        for (std::size_t c = 0; c < x.size(); ++c) {
            standardized[c] = (x[c] - feature_mean[c]) / feature_scale[c];
        }
    }
    switch (spec.family) {
        case ModelFamily::LogisticRegression: return detail::predict_logistic(params, standardized);
        case ModelFamily::LinearSvm: return detail::predict_svm(params, standardized);
        case ModelFamily::Mlp: {
            net::Tensor t({1, shape.cols});
            std::copy(standardized.begin(), standardized.end(), t.data.begin());
            const net::Tensor logits = net_->infer(t);
            return net_->probabilities(logits)[0];
        }
        default: throw ShapeError("predict_vector_proba: matrix-input family");
    }
}

std::vector<double> TrainedModel::predict_segment_probs(const Matrix2D& cough) const {
    if (cough.cols() != shape.cols) throw ShapeError("predict: feature dimension mismatch");
    if (is_vector_family(spec.family)) {
        std::vector<double> probs(cough.rows());
        for (std::size_t r = 0; r < cough.rows(); ++r) {
            probs[r] = predict_vector_proba(cough.row(r));
        }
        return probs;
    }
    if (cough.rows() != shape.rows) throw ShapeError("predict: segment count mismatch");
    std::vector<const Matrix2D*> one{&cough};
    const net::Tensor x = detail::pack_batch(one, spec, shape);
    return net_->probabilities(net_->infer(x));
}

double TrainedModel::predict_proba(const Matrix2D& cough) const {
    const auto probs = predict_segment_probs(cough);
    double acc = 0.0;
    for (double p : probs) acc += p;
    return acc / static_cast<double>(probs.size());
}

std::vector<std::string> TrainedModel::shape_trace() const {
    if (!net_) {
        return {"input [" + std::to_string(shape.cols) + "]", "linear -> [1]"};
    }
    net::Tensor x = spec.family == ModelFamily::Mlp
                        ? net::Tensor({1, shape.cols})
                        : (spec.family == ModelFamily::Lstm
                               ? net::Tensor({1, shape.rows, shape.cols})
                               : net::Tensor({1, shape.rows, shape.cols, 1}));
    return net_->shape_trace(x);
}

GradientCheckResult gradient_check(const ModelSpec& spec, const InputShape& shape,
                                   std::uint64_t seed) {
    ModelSpec probe = spec;
    probe.dropout = 0.0;  // the inference path must equal the cached forward

    auto network = detail::build_net(probe, shape);
    Rng rng(Rng::derive(seed, {0x6c}));
    network->init(rng);

    // toy batch: 4 random inputs, alternating labels
    const std::size_t n = 4;
    net::Tensor x = probe.family == ModelFamily::Mlp
                        ? net::Tensor({n, shape.cols})
                        : (probe.family == ModelFamily::Lstm
                               ? net::Tensor({n, shape.rows, shape.cols})
                               : net::Tensor({n, shape.rows, shape.cols, 1}));
    for (double& v : x.data) v = rng.normal();
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);

    auto loss_at = [&]() {
        const net::Tensor logits = network->infer(x);
        const double data_loss = network->head == net::Head::SoftmaxCe
                                     ? net::softmax_ce(logits, labels, nullptr)
                                     : net::sigmoid_bce(logits, labels, nullptr);
        return data_loss + network->penalty();
    };

    network->zero_grads();
    net::Tensor dlogits;
    {
        Rng unused(0);
        const net::Tensor logits = network->forward(x, true, unused);
        if (network->head == net::Head::SoftmaxCe) {
            net::softmax_ce(logits, labels, &dlogits);
        } else {
            net::sigmoid_bce(logits, labels, &dlogits);
        }
        network->backward(dlogits);
    }

    auto params = network->param_ptrs();
    auto grads = network->grad_ptrs();
    // analytic objective gradient includes the l2 decay term on weights;
    // reuse the optimizer's definition by differencing a zero-lr step
    std::vector<double> analytic(params.size());
    {
        std::vector<double> before(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) before[i] = *params[i];
        network->sgd_step(1.0);
        for (std::size_t i = 0; i < params.size(); ++i) {
            analytic[i] = before[i] - *params[i];  // lr * (grad + decay), lr = 1
            *params[i] = before[i];
        }
        (void)grads;
    }

    const std::size_t target = std::max<std::size_t>(100, params.size() / 50);
    const std::size_t n_check = std::min(params.size(), target);
    std::vector<std::size_t> indices(params.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    rng.shuffle(indices);

    const double h = 1e-5;
    double max_rel = 0.0;
    for (std::size_t c = 0; c < n_check; ++c) {
        const std::size_t idx = indices[c];
        const double saved = *params[idx];
        *params[idx] = saved + h;
        const double plus = loss_at();
        *params[idx] = saved - h;
        const double minus = loss_at();
        *params[idx] = saved;
        const double fd = (plus - minus) / (2.0 * h);
        const double a = analytic[idx];
        const double denom = std::max({std::fabs(a), std::fabs(fd), 1e-4});
        max_rel = std::max(max_rel, std::fabs(a - fd) / denom);
    }
    return {max_rel, n_check};
}

std::vector<std::string> resnet50_audio_declared_trace(std::size_t rows, std::size_t cols) {
    auto out_dim = [](std::size_t in, std::size_t k, std::size_t s, std::size_t p) {
        return (in + 2 * p - k) / s + 1;
    };
    std::vector<std::string> trace;
    auto push = [&trace](const std::string& name, std::size_t h, std::size_t w, std::size_t c) {
        trace.push_back(name + " -> [" + std::to_string(h) + "x" + std::to_string(w) + "x" +
                        std::to_string(c) + "]");
    };
    trace.push_back("input [" + std::to_string(rows) + "x" + std::to_string(cols) + "x1]");
    std::size_t h = out_dim(rows, 7, 2, 3);
    std::size_t w = out_dim(cols, 7, 2, 3);
    push("conv7x7 64/s2", h, w, 64);
    push("relu", h, w, 64);
    h = out_dim(h, 3, 2, 1);
    w = out_dim(w, 3, 2, 1);
    push("maxpool3x3/s2", h, w, 64);
    const struct {
        std::size_t blocks, out;
    } stages[] = {{3, 256}, {4, 512}, {6, 1024}, {3, 2048}};
    for (std::size_t stage = 0; stage < 4; ++stage) {
        for (std::size_t b = 0; b < stages[stage].blocks; ++b) {
            if (stage > 0 && b == 0) {
                h = out_dim(h, 3, 2, 1);
                w = out_dim(w, 3, 2, 1);
            }
            push("res" + std::to_string(stage + 2) + std::string(1, static_cast<char>('a' + b)), h,
                 w, stages[stage].out);
        }
    }
    trace.push_back("gap -> [2048]");
    trace.push_back("dense 2 -> [2]");
    return trace;
}

}  // namespace coughnet
