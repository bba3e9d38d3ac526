#pragma once

// Internal mini network framework: explicit layers with hand-written
// forward/backward passes. Not part of the public API.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "coughnet/error.hpp"
#include "coughnet/numerics.hpp"

namespace coughnet::net {

/// Batched row-major tensor; shape[0] is the batch dimension.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(count(), 0.0);
    }

    std::size_t count() const {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }
    std::size_t batch() const { return shape.empty() ? 0 : shape[0]; }
    /// Elements per sample.
    std::size_t sample_count() const { return shape.empty() ? 0 : count() / shape[0]; }
};

std::string shape_string(const std::vector<std::size_t>& shape);

class Layer {
public:
    virtual ~Layer() = default;

    /// Training-path forward; caches whatever backward needs.
    virtual Tensor forward(const Tensor& x, bool training, Rng& rng) = 0;
    /// Gradient wrt input; accumulates parameter gradients.
    virtual Tensor backward(const Tensor& grad_out) = 0;
    /// Pure inference path (no caching; thread-safe on a const layer).
    virtual Tensor infer(const Tensor& x) const = 0;

    virtual void init(Rng&) {}
    virtual std::vector<double>* params() { return nullptr; }
    virtual std::vector<double>* grads() { return nullptr; }
    virtual const std::vector<double>* params() const { return nullptr; }
    /// Leading params entries subject to l2 decay (weights, not biases).
    virtual std::size_t weight_count() const { return 0; }
    virtual std::string name() const = 0;
};

class Dense : public Layer {
public:
    Dense(std::size_t in, std::size_t out);
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    Tensor infer(const Tensor& x) const override;
    void init(Rng& rng) override;
    std::vector<double>* params() override { return &params_; }
    std::vector<double>* grads() override { return &grads_; }
    const std::vector<double>* params() const override { return &params_; }
    std::size_t weight_count() const override { return in_ * out_; }
    std::string name() const override;

private:
    std::size_t in_, out_;
    std::vector<double> params_;  // [W (in*out) | b (out)]
    std::vector<double> grads_;
    Tensor cached_x_;
};

class Relu : public Layer {
public:
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    Tensor infer(const Tensor& x) const override;
    std::string name() const override { return "relu"; }

private:
    Tensor cached_x_;
};

/// Inverted dropout: active only on the training path.
class Dropout : public Layer {
public:
    explicit Dropout(double rate) : rate_(rate) {}
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    Tensor infer(const Tensor& x) const override { return x; }
    std::string name() const override { return "dropout"; }

private:
    double rate_;
    std::vector<double> mask_;
};

/// 2-D convolution over [N, H, W, C] with channels-last filters [KH, KW, C, F].
class Conv2D : public Layer {
public:
    Conv2D(std::size_t kh, std::size_t kw, std::size_t in_c, std::size_t out_c,
           std::size_t stride, std::size_t pad);
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    Tensor infer(const Tensor& x) const override;
    void init(Rng& rng) override;
    std::vector<double>* params() override { return &params_; }
    std::vector<double>* grads() override { return &grads_; }
    const std::vector<double>* params() const override { return &params_; }
    std::size_t weight_count() const override { return kh_ * kw_ * in_c_ * out_c_; }
    std::string name() const override;

    std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const;

private:
    Tensor run(const Tensor& x) const;
    std::size_t kh_, kw_, in_c_, out_c_, stride_, pad_;
    std::vector<double> params_;  // [W (kh*kw*in_c*out_c) | b (out_c)]
    std::vector<double> grads_;
    Tensor cached_x_;
};

class MaxPool2D : public Layer {
public:
    MaxPool2D(std::size_t k, std::size_t stride, std::size_t pad);
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    Tensor infer(const Tensor& x) const override;
    std::string name() const override;

private:
    Tensor run(const Tensor& x, std::vector<std::size_t>* argmax) const;
    std::size_t k_, stride_, pad_;
    std::vector<std::size_t> argmax_;
    std::vector<std::size_t> in_shape_;
};

class Flatten : public Layer {
public:
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    Tensor infer(const Tensor& x) const override;
    std::string name() const override { return "flatten"; }

private:
    std::vector<std::size_t> in_shape_;
};

class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    Tensor infer(const Tensor& x) const override;
    std::string name() const override { return "gap"; }

private:
    std::vector<std::size_t> in_shape_;
};

/// Single-layer LSTM over [N, T, D]; emits the final hidden state [N, U].
/// Standard cell: sigmoid input/forget/output gates, tanh candidate and
/// output squashing. Gate order in the packed weights is (i, f, g, o).
class Lstm : public Layer {
public:
    Lstm(std::size_t input_dim, std::size_t units);
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    Tensor infer(const Tensor& x) const override;
    void init(Rng& rng) override;
    std::vector<double>* params() override { return &params_; }
    std::vector<double>* grads() override { return &grads_; }
    const std::vector<double>* params() const override { return &params_; }
    std::size_t weight_count() const override { return (d_ + u_) * 4 * u_; }
    std::string name() const override;

private:
    struct StepCache {
        std::vector<double> i, f, g, o, c, tanh_c, h_prev, c_prev;
    };
    void step(const double* x_t, const double* h_prev, const double* c_prev, double* h_out,
              double* c_out, StepCache* cache) const;

    std::size_t d_, u_;
    std::vector<double> params_;  // [Wx (d*4u) | Wh (u*4u) | b (4u)]
    std::vector<double> grads_;
    Tensor cached_x_;
    std::vector<std::vector<StepCache>> caches_;  // per sample, per step
};

/// Residual block: y = relu(branch(x) + skip(x)) with an optional 1x1
/// projection on the skip path when shape changes.
class ResidualBlock : public Layer {
public:
    ResidualBlock(std::vector<std::unique_ptr<Layer>> branch, std::unique_ptr<Conv2D> projection,
                  std::string label);
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    Tensor infer(const Tensor& x) const override;
    void init(Rng& rng) override;
    std::string name() const override { return label_; }

    /// Direct child access for the parameter walk.
    std::vector<Layer*> children();
    std::vector<const Layer*> children() const;

private:
    std::vector<std::unique_ptr<Layer>> branch_;
    std::unique_ptr<Conv2D> projection_;
    std::string label_;
    Tensor sum_cache_;
};

enum class Head { SoftmaxCe, SigmoidBce };

/// Softmax cross-entropy over 2 logits; returns mean loss and fills dlogits.
double softmax_ce(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits);
/// Sigmoid binary cross-entropy over 1 logit.
double sigmoid_bce(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits);

class Net {
public:
    std::vector<std::unique_ptr<Layer>> layers;
    Head head = Head::SoftmaxCe;
    double l2 = 0.0;

    Tensor forward(const Tensor& x, bool training, Rng& rng);
    Tensor infer(const Tensor& x) const;
    void backward(const Tensor& dlogits);

    void init(Rng& rng);
    void zero_grads();
    /// One plain gradient-descent step including l2 decay on weights.
    void sgd_step(double lr);
    /// l2 * sum of squared weights (the penalty added to the loss).
    double penalty() const;

    std::size_t param_count() const;
    void copy_params(std::vector<double>* out) const;
    void set_params(std::span<const double> flat);
    /// Flat parameter and gradient walk used by the gradient checker.
    std::vector<double*> param_ptrs();
    std::vector<double*> grad_ptrs();

    /// Positive-class probability per sample from the logits.
    std::vector<double> probabilities(const Tensor& logits) const;

    std::vector<std::string> shape_trace(const Tensor& x) const;
};

}  // namespace coughnet::net
