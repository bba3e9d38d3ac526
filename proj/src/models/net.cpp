#include "net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace coughnet::net {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_shape(bool ok, const std::string& what) {
    if (!ok) throw ShapeError("net: " + what);
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 1; i < shape.size(); ++i) {  // drop the batch dim
        if (i > 1) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::size_t in, std::size_t out) : in_(in), out_(out) {
    params_.assign(in_ * out_ + out_, 0.0);
    grads_.assign(params_.size(), 0.0);
}

void Dense::init(Rng& rng) {
    const double s = std::sqrt(1.0 / static_cast<double>(in_));
    for (std::size_t i = 0; i < in_ * out_; ++i) params_[i] = rng.uniform(-s, s);
    std::fill(params_.begin() + static_cast<std::ptrdiff_t>(in_ * out_), params_.end(), 0.0);
}

std::string Dense::name() const { return "dense " + std::to_string(out_); }

Tensor Dense::infer(const Tensor& x) const {
    check_shape(x.sample_count() == in_, "dense input dim mismatch");
    const std::size_t n = x.batch();
    Tensor out({n, out_});
    const double* w = params_.data();
    const double* b = params_.data() + in_ * out_;
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x.data.data() + r * in_;
        double* yr = out.data.data() + r * out_;
        for (std::size_t j = 0; j < out_; ++j) yr[j] = b[j];
        for (std::size_t i = 0; i < in_; ++i) {
            const double xv = xr[i];
            const double* wrow = w + i * out_;
            for (std::size_t j = 0; j < out_; ++j) yr[j] += xv * wrow[j];
        }
    }
    return out;
}

Tensor Dense::forward(const Tensor& x, bool, Rng&) {
    cached_x_ = x;
    return infer(x);
}

Tensor Dense::backward(const Tensor& grad_out) {
    const std::size_t n = cached_x_.batch();
    check_shape(grad_out.batch() == n && grad_out.sample_count() == out_, "dense grad mismatch");
    Tensor dx({n, in_});
    const double* w = params_.data();
    double* dw = grads_.data();
    double* db = grads_.data() + in_ * out_;
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = cached_x_.data.data() + r * in_;
        const double* gr = grad_out.data.data() + r * out_;
        double* dxr = dx.data.data() + r * in_;
        for (std::size_t j = 0; j < out_; ++j) db[j] += gr[j];
        for (std::size_t i = 0; i < in_; ++i) {
            const double xv = xr[i];
            const double* wrow = w + i * out_;
            double* dwrow = dw + i * out_;
            double acc = 0.0;
            for (std::size_t j = 0; j < out_; ++j) {
                dwrow[j] += xv * gr[j];
                acc += wrow[j] * gr[j];
            }
            dxr[i] = acc;
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Relu

Tensor Relu::infer(const Tensor& x) const {
    Tensor out = x;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor Relu::forward(const Tensor& x, bool, Rng&) {
    cached_x_ = x;
    return infer(x);
}

Tensor Relu::backward(const Tensor& grad_out) {
    Tensor dx = grad_out;
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
        if (cached_x_.data[i] <= 0.0) dx.data[i] = 0.0;
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Dropout

Tensor Dropout::forward(const Tensor& x, bool training, Rng& rng) {
    if (!training || rate_ <= 0.0) {
        mask_.assign(x.data.size(), 1.0);
        return x;
    }
    const double keep = 1.0 - rate_;
    mask_.resize(x.data.size());
    Tensor out = x;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        mask_[i] = rng.uniform() < rate_ ? 0.0 : 1.0 / keep;
        out.data[i] *= mask_[i];
    }
    return out;
}

Tensor Dropout::backward(const Tensor& grad_out) {
    Tensor dx = grad_out;
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= mask_[i];
    return dx;
}

// ---------------------------------------------------------------------------
// Conv2D

Conv2D::Conv2D(std::size_t kh, std::size_t kw, std::size_t in_c, std::size_t out_c,
               std::size_t stride, std::size_t pad)
    : kh_(kh), kw_(kw), in_c_(in_c), out_c_(out_c), stride_(stride), pad_(pad) {
    params_.assign(kh_ * kw_ * in_c_ * out_c_ + out_c_, 0.0);
    grads_.assign(params_.size(), 0.0);
}

void Conv2D::init(Rng& rng) {
    const double s = std::sqrt(1.0 / static_cast<double>(kh_ * kw_ * in_c_));
    const std::size_t nw = weight_count();
    for (std::size_t i = 0; i < nw; ++i) params_[i] = rng.uniform(-s, s);
    std::fill(params_.begin() + static_cast<std::ptrdiff_t>(nw), params_.end(), 0.0);
}

std::string Conv2D::name() const {
    return "conv" + std::to_string(kh_) + "x" + std::to_string(kw_) + " " +
           std::to_string(out_c_) + "/s" + std::to_string(stride_);
}

std::vector<std::size_t> Conv2D::out_shape(const std::vector<std::size_t>& in) const {
    check_shape(in.size() == 4 && in[3] == in_c_, "conv input shape mismatch");
    check_shape(in[1] + 2 * pad_ >= kh_ && in[2] + 2 * pad_ >= kw_, "conv input too small");
    const std::size_t ho = (in[1] + 2 * pad_ - kh_) / stride_ + 1;
    const std::size_t wo = (in[2] + 2 * pad_ - kw_) / stride_ + 1;
    return {in[0], ho, wo, out_c_};
}

Tensor Conv2D::run(const Tensor& x) const {
    const auto os = out_shape(x.shape);
    const std::size_t n = os[0], ho_n = os[1], wo_n = os[2];
    const std::size_t h = x.shape[1], w = x.shape[2];
    Tensor out(os);
    const double* wp = params_.data();
    const double* bp = params_.data() + weight_count();
    for (std::size_t nn = 0; nn < n; ++nn) {
        const double* xs = x.data.data() + nn * h * w * in_c_;
        for (std::size_t ho = 0; ho < ho_n; ++ho) {
            for (std::size_t wo = 0; wo < wo_n; ++wo) {
                double* acc = out.data.data() + ((nn * ho_n + ho) * wo_n + wo) * out_c_;
                for (std::size_t f = 0; f < out_c_; ++f) acc[f] = bp[f];
                for (std::size_t kh = 0; kh < kh_; ++kh) {
                    const std::ptrdiff_t hi =
                        static_cast<std::ptrdiff_t>(ho * stride_ + kh) - static_cast<std::ptrdiff_t>(pad_);
                    if (hi < 0 || hi >= static_cast<std::ptrdiff_t>(h)) continue;
                    for (std::size_t kw = 0; kw < kw_; ++kw) {
                        const std::ptrdiff_t wi =
                            static_cast<std::ptrdiff_t>(wo * stride_ + kw) - static_cast<std::ptrdiff_t>(pad_);
                        if (wi < 0 || wi >= static_cast<std::ptrdiff_t>(w)) continue;
                        const double* xrow =
                            xs + (static_cast<std::size_t>(hi) * w + static_cast<std::size_t>(wi)) * in_c_;
                        const double* wrow = wp + (kh * kw_ + kw) * in_c_ * out_c_;
                        for (std::size_t c = 0; c < in_c_; ++c) {
                            const double xv = xrow[c];
                            if (xv == 0.0) continue;
                            const double* wf = wrow + c * out_c_;
                            for (std::size_t f = 0; f < out_c_; ++f) acc[f] += xv * wf[f];
                        }
                    }
                }
            }
        }
    }
    return out;
}

Tensor Conv2D::infer(const Tensor& x) const { return run(x); }

Tensor Conv2D::forward(const Tensor& x, bool, Rng&) {
    cached_x_ = x;
    return run(x);
}

Tensor Conv2D::backward(const Tensor& grad_out) {
    const Tensor& x = cached_x_;
    const std::size_t n = x.shape[0], h = x.shape[1], w = x.shape[2];
    const std::size_t ho_n = grad_out.shape[1], wo_n = grad_out.shape[2];
    Tensor dx(x.shape);
    const double* wp = params_.data();
    double* dwp = grads_.data();
    double* dbp = grads_.data() + weight_count();
    for (std::size_t nn = 0; nn < n; ++nn) {
        const double* xs = x.data.data() + nn * h * w * in_c_;
        double* dxs = dx.data.data() + nn * h * w * in_c_;
        for (std::size_t ho = 0; ho < ho_n; ++ho) {
            for (std::size_t wo = 0; wo < wo_n; ++wo) {
                const double* g = grad_out.data.data() + ((nn * ho_n + ho) * wo_n + wo) * out_c_;
                for (std::size_t f = 0; f < out_c_; ++f) dbp[f] += g[f];
                for (std::size_t kh = 0; kh < kh_; ++kh) {
                    const std::ptrdiff_t hi =
                        static_cast<std::ptrdiff_t>(ho * stride_ + kh) - static_cast<std::ptrdiff_t>(pad_);
                    if (hi < 0 || hi >= static_cast<std::ptrdiff_t>(h)) continue;
                    for (std::size_t kw = 0; kw < kw_; ++kw) {
                        const std::ptrdiff_t wi =
                            static_cast<std::ptrdiff_t>(wo * stride_ + kw) - static_cast<std::ptrdiff_t>(pad_);
                        if (wi < 0 || wi >= static_cast<std::ptrdiff_t>(w)) continue;
                        const std::size_t off =
                            (static_cast<std::size_t>(hi) * w + static_cast<std::size_t>(wi)) * in_c_;
                        const double* xrow = xs + off;
                        double* dxrow = dxs + off;
                        const std::size_t wbase = (kh * kw_ + kw) * in_c_ * out_c_;
                        for (std::size_t c = 0; c < in_c_; ++c) {
                            const double xv = xrow[c];
                            const double* wf = wp + wbase + c * out_c_;
                            double* dwf = dwp + wbase + c * out_c_;
                            double acc = 0.0;
                            for (std::size_t f = 0; f < out_c_; ++f) {
                                dwf[f] += xv * g[f];
                                acc += wf[f] * g[f];
                            }
                            dxrow[c] += acc;
                        }
                    }
                }
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2D

MaxPool2D::MaxPool2D(std::size_t k, std::size_t stride, std::size_t pad)
    : k_(k), stride_(stride), pad_(pad) {}

std::string MaxPool2D::name() const {
    return "maxpool" + std::to_string(k_) + "x" + std::to_string(k_) + "/s" +
           std::to_string(stride_);
}

Tensor MaxPool2D::run(const Tensor& x, std::vector<std::size_t>* argmax) const {
    check_shape(x.shape.size() == 4, "maxpool expects 4-D input");
    const std::size_t n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3];
    check_shape(h + 2 * pad_ >= k_ && w + 2 * pad_ >= k_, "maxpool input too small");
    const std::size_t ho_n = (h + 2 * pad_ - k_) / stride_ + 1;
    const std::size_t wo_n = (w + 2 * pad_ - k_) / stride_ + 1;
    Tensor out({n, ho_n, wo_n, c});
    if (argmax) argmax->assign(out.count(), std::numeric_limits<std::size_t>::max());
    for (std::size_t nn = 0; nn < n; ++nn) {
        for (std::size_t ho = 0; ho < ho_n; ++ho) {
            for (std::size_t wo = 0; wo < wo_n; ++wo) {
                for (std::size_t cc = 0; cc < c; ++cc) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_idx = std::numeric_limits<std::size_t>::max();
                    for (std::size_t kh = 0; kh < k_; ++kh) {
                        const std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(ho * stride_ + kh) -
                                                  static_cast<std::ptrdiff_t>(pad_);
                        if (hi < 0 || hi >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kw = 0; kw < k_; ++kw) {
                            const std::ptrdiff_t wi = static_cast<std::ptrdiff_t>(wo * stride_ + kw) -
                                                      static_cast<std::ptrdiff_t>(pad_);
                            if (wi < 0 || wi >= static_cast<std::ptrdiff_t>(w)) continue;
                            const std::size_t idx =
                                ((nn * h + static_cast<std::size_t>(hi)) * w +
                                 static_cast<std::size_t>(wi)) * c + cc;
                            if (x.data[idx] > best) {
                                best = x.data[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    const std::size_t out_idx = ((nn * ho_n + ho) * wo_n + wo) * c + cc;
                    out.data[out_idx] = best_idx == std::numeric_limits<std::size_t>::max() ? 0.0 : best;
                    if (argmax) (*argmax)[out_idx] = best_idx;
                }
            }
        }
    }
    return out;
}

Tensor MaxPool2D::infer(const Tensor& x) const { return run(x, nullptr); }

Tensor MaxPool2D::forward(const Tensor& x, bool, Rng&) {
    in_shape_ = x.shape;
    return run(x, &argmax_);
}

Tensor MaxPool2D::backward(const Tensor& grad_out) {
    Tensor dx(in_shape_);
    for (std::size_t i = 0; i < grad_out.data.size(); ++i) {
        const std::size_t src = argmax_[i];
        if (src != std::numeric_limits<std::size_t>::max()) dx.data[src] += grad_out.data[i];
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Flatten / GlobalAvgPool

Tensor Flatten::infer(const Tensor& x) const {
    Tensor out = x;
    out.shape = {x.batch(), x.sample_count()};
    return out;
}

Tensor Flatten::forward(const Tensor& x, bool, Rng&) {
    in_shape_ = x.shape;
    return infer(x);
}

Tensor Flatten::backward(const Tensor& grad_out) {
    Tensor dx = grad_out;
    dx.shape = in_shape_;
    return dx;
}

Tensor GlobalAvgPool::infer(const Tensor& x) const {
    check_shape(x.shape.size() == 4, "gap expects 4-D input");
    const std::size_t n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3];
    Tensor out({n, c});
    const double inv = 1.0 / static_cast<double>(h * w);
    for (std::size_t nn = 0; nn < n; ++nn) {
        for (std::size_t i = 0; i < h * w; ++i) {
            const double* row = x.data.data() + (nn * h * w + i) * c;
            double* acc = out.data.data() + nn * c;
            for (std::size_t cc = 0; cc < c; ++cc) acc[cc] += row[cc] * inv;
        }
    }
    return out;
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool, Rng&) {
    in_shape_ = x.shape;
    return infer(x);
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
    Tensor dx(in_shape_);
    const std::size_t n = in_shape_[0], h = in_shape_[1], w = in_shape_[2], c = in_shape_[3];
    const double inv = 1.0 / static_cast<double>(h * w);
    for (std::size_t nn = 0; nn < n; ++nn) {
        const double* g = grad_out.data.data() + nn * c;
        for (std::size_t i = 0; i < h * w; ++i) {
            double* row = dx.data.data() + (nn * h * w + i) * c;
            for (std::size_t cc = 0; cc < c; ++cc) row[cc] = g[cc] * inv;
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Lstm

Lstm::Lstm(std::size_t input_dim, std::size_t units) : d_(input_dim), u_(units) {
    params_.assign((d_ + u_) * 4 * u_ + 4 * u_, 0.0);
    grads_.assign(params_.size(), 0.0);
}

void Lstm::init(Rng& rng) {
    const double sx = std::sqrt(1.0 / static_cast<double>(d_));
    const double sh = std::sqrt(1.0 / static_cast<double>(u_));
    std::size_t k = 0;
    for (std::size_t i = 0; i < d_ * 4 * u_; ++i) params_[k++] = rng.uniform(-sx, sx);
    for (std::size_t i = 0; i < u_ * 4 * u_; ++i) params_[k++] = rng.uniform(-sh, sh);
    for (std::size_t i = 0; i < 4 * u_; ++i) params_[k++] = 0.0;
}

std::string Lstm::name() const { return "lstm " + std::to_string(u_); }

void Lstm::step(const double* x_t, const double* h_prev, const double* c_prev, double* h_out,
                double* c_out, StepCache* cache) const {
    const std::size_t g4 = 4 * u_;
    const double* wx = params_.data();
    const double* wh = params_.data() + d_ * g4;
    const double* b = params_.data() + (d_ + u_) * g4;

    std::vector<double> z(b, b + g4);
    for (std::size_t i = 0; i < d_; ++i) {
        const double xv = x_t[i];
        if (xv == 0.0) continue;
        const double* row = wx + i * g4;
        for (std::size_t j = 0; j < g4; ++j) z[j] += xv * row[j];
    }
    for (std::size_t i = 0; i < u_; ++i) {
        const double hv = h_prev[i];
        if (hv == 0.0) continue;
        const double* row = wh + i * g4;
        for (std::size_t j = 0; j < g4; ++j) z[j] += hv * row[j];
    }

    std::vector<double> iv(u_), fv(u_), gv(u_), ov(u_), cv(u_), tv(u_);
    for (std::size_t j = 0; j < u_; ++j) {
        iv[j] = sigmoid(z[j]);
        fv[j] = sigmoid(z[u_ + j]);
        gv[j] = std::tanh(z[2 * u_ + j]);
        ov[j] = sigmoid(z[3 * u_ + j]);
        cv[j] = fv[j] * c_prev[j] + iv[j] * gv[j];
        tv[j] = std::tanh(cv[j]);
        h_out[j] = ov[j] * tv[j];
        c_out[j] = cv[j];
    }
    if (cache) {
        cache->i = std::move(iv);
        cache->f = std::move(fv);
        cache->g = std::move(gv);
        cache->o = std::move(ov);
        cache->c = std::move(cv);
        cache->tanh_c = std::move(tv);
        cache->h_prev.assign(h_prev, h_prev + u_);
        cache->c_prev.assign(c_prev, c_prev + u_);
    }
}

Tensor Lstm::infer(const Tensor& x) const {
    check_shape(x.shape.size() == 3 && x.shape[2] == d_, "lstm input shape mismatch");
    const std::size_t n = x.shape[0], t_len = x.shape[1];
    Tensor out({n, u_});
    std::vector<double> h(u_), c(u_), h_next(u_), c_next(u_);
    for (std::size_t nn = 0; nn < n; ++nn) {
        std::fill(h.begin(), h.end(), 0.0);
        std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t t = 0; t < t_len; ++t) {
            const double* x_t = x.data.data() + (nn * t_len + t) * d_;
            step(x_t, h.data(), c.data(), h_next.data(), c_next.data(), nullptr);
            h.swap(h_next);
            c.swap(c_next);
        }
        std::copy(h.begin(), h.end(), out.data.data() + nn * u_);
    }
    return out;
}

Tensor Lstm::forward(const Tensor& x, bool, Rng&) {
    check_shape(x.shape.size() == 3 && x.shape[2] == d_, "lstm input shape mismatch");
    cached_x_ = x;
    const std::size_t n = x.shape[0], t_len = x.shape[1];
    caches_.assign(n, std::vector<StepCache>(t_len));
    Tensor out({n, u_});
    std::vector<double> h(u_), c(u_), h_next(u_), c_next(u_);
    for (std::size_t nn = 0; nn < n; ++nn) {
        std::fill(h.begin(), h.end(), 0.0);
        std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t t = 0; t < t_len; ++t) {
            const double* x_t = x.data.data() + (nn * t_len + t) * d_;
            step(x_t, h.data(), c.data(), h_next.data(), c_next.data(), &caches_[nn][t]);
            h.swap(h_next);
            c.swap(c_next);
        }
        std::copy(h.begin(), h.end(), out.data.data() + nn * u_);
    }
    return out;
}

Tensor Lstm::backward(const Tensor& grad_out) {
    const Tensor& x = cached_x_;
    const std::size_t n = x.shape[0], t_len = x.shape[1];
    const std::size_t g4 = 4 * u_;
    Tensor dx(x.shape);
    const double* wx = params_.data();
    const double* wh = params_.data() + d_ * g4;
    double* dwx = grads_.data();
    double* dwh = grads_.data() + d_ * g4;
    double* db = grads_.data() + (d_ + u_) * g4;

    std::vector<double> dh(u_), dc(u_), dh_next(u_), dz(g4);
    for (std::size_t nn = 0; nn < n; ++nn) {
        std::copy(grad_out.data.data() + nn * u_, grad_out.data.data() + (nn + 1) * u_, dh.begin());
        std::fill(dc.begin(), dc.end(), 0.0);
        for (std::size_t t = t_len; t-- > 0;) {
            const StepCache& cc = caches_[nn][t];
            for (std::size_t j = 0; j < u_; ++j) {
                const double d_o = dh[j] * cc.tanh_c[j];
                const double dct = dc[j] + dh[j] * cc.o[j] * (1.0 - cc.tanh_c[j] * cc.tanh_c[j]);
                const double d_i = dct * cc.g[j];
                const double d_g = dct * cc.i[j];
                const double d_f = dct * cc.c_prev[j];
                dc[j] = dct * cc.f[j];  // carries to t-1
                dz[j] = d_i * cc.i[j] * (1.0 - cc.i[j]);
                dz[u_ + j] = d_f * cc.f[j] * (1.0 - cc.f[j]);
                dz[2 * u_ + j] = d_g * (1.0 - cc.g[j] * cc.g[j]);
                dz[3 * u_ + j] = d_o * cc.o[j] * (1.0 - cc.o[j]);
            }
            const double* x_t = x.data.data() + (nn * t_len + t) * d_;
            double* dx_t = dx.data.data() + (nn * t_len + t) * d_;
            for (std::size_t j = 0; j < g4; ++j) db[j] += dz[j];
            for (std::size_t i = 0; i < d_; ++i) {
                const double xv = x_t[i];
                const double* row = wx + i * g4;
                double* drow = dwx + i * g4;
                double acc = 0.0;
                for (std::size_t j = 0; j < g4; ++j) {
                    drow[j] += xv * dz[j];
                    acc += row[j] * dz[j];
                }
                dx_t[i] = acc;
            }
            for (std::size_t i = 0; i < u_; ++i) {
                const double hv = cc.h_prev[i];
                const double* row = wh + i * g4;
                double* drow = dwh + i * g4;
                double acc = 0.0;
                for (std::size_t j = 0; j < g4; ++j) {
                    drow[j] += hv * dz[j];
                    acc += row[j] * dz[j];
                }
                dh_next[i] = acc;
            }
            dh.swap(dh_next);
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// ResidualBlock

ResidualBlock::ResidualBlock(std::vector<std::unique_ptr<Layer>> branch,
                             std::unique_ptr<Conv2D> projection, std::string label)
    : branch_(std::move(branch)), projection_(std::move(projection)), label_(std::move(label)) {}

std::vector<Layer*> ResidualBlock::children() {
    std::vector<Layer*> out;
    for (auto& l : branch_) out.push_back(l.get());
    if (projection_) out.push_back(projection_.get());
    return out;
}

std::vector<const Layer*> ResidualBlock::children() const {
    std::vector<const Layer*> out;
    for (const auto& l : branch_) out.push_back(l.get());
    if (projection_) out.push_back(projection_.get());
    return out;
}

void ResidualBlock::init(Rng& rng) {
    for (auto& l : branch_) l->init(rng);
    if (projection_) projection_->init(rng);
}

Tensor ResidualBlock::infer(const Tensor& x) const {
    Tensor b = x;
    for (const auto& l : branch_) b = l->infer(b);
    Tensor s = projection_ ? projection_->infer(x) : x;
    check_shape(b.shape == s.shape, "residual branch/skip shape mismatch");
    for (std::size_t i = 0; i < b.data.size(); ++i) {
        const double v = b.data[i] + s.data[i];
        b.data[i] = v > 0.0 ? v : 0.0;
    }
    return b;
}

Tensor ResidualBlock::forward(const Tensor& x, bool training, Rng& rng) {
    Tensor b = x;
    for (auto& l : branch_) b = l->forward(b, training, rng);
    Tensor s = projection_ ? projection_->forward(x, training, rng) : x;
    check_shape(b.shape == s.shape, "residual branch/skip shape mismatch");
    sum_cache_ = Tensor(b.shape);
    for (std::size_t i = 0; i < b.data.size(); ++i) {
        const double v = b.data[i] + s.data[i];
        sum_cache_.data[i] = v;
        b.data[i] = v > 0.0 ? v : 0.0;
    }
    return b;
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
    Tensor dsum = grad_out;
    for (std::size_t i = 0; i < dsum.data.size(); ++i) {
        if (sum_cache_.data[i] <= 0.0) dsum.data[i] = 0.0;
    }
    Tensor dbranch = dsum;
    for (std::size_t i = branch_.size(); i-- > 0;) dbranch = branch_[i]->backward(dbranch);
    Tensor dskip = projection_ ? projection_->backward(dsum) : dsum;
    check_shape(dbranch.shape == dskip.shape, "residual grad shape mismatch");
    for (std::size_t i = 0; i < dbranch.data.size(); ++i) dbranch.data[i] += dskip.data[i];
    return dbranch;
}

// ---------------------------------------------------------------------------
// Loss heads

double softmax_ce(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits) {
    check_shape(logits.shape.size() == 2 && logits.shape[1] == 2, "softmax head expects 2 logits");
    const std::size_t n = logits.batch();
    check_shape(labels.size() == n, "label count mismatch");
    if (dlogits) *dlogits = Tensor(logits.shape);
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double z0 = logits.data[r * 2];
        const double z1 = logits.data[r * 2 + 1];
        const double m = std::max(z0, z1);
        const double e0 = std::exp(z0 - m);
        const double e1 = std::exp(z1 - m);
        const double zsum = e0 + e1;
        const double p0 = e0 / zsum;
        const double p1 = e1 / zsum;
        const double p = labels[r] == 1 ? p1 : p0;
        loss -= std::log(std::max(p, 1e-300));
        if (dlogits) {
            dlogits->data[r * 2] = (p0 - (labels[r] == 0 ? 1.0 : 0.0)) / static_cast<double>(n);
            dlogits->data[r * 2 + 1] = (p1 - (labels[r] == 1 ? 1.0 : 0.0)) / static_cast<double>(n);
        }
    }
    return loss / static_cast<double>(n);
}

double sigmoid_bce(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits) {
    check_shape(logits.shape.size() == 2 && logits.shape[1] == 1, "sigmoid head expects 1 logit");
    const std::size_t n = logits.batch();
    check_shape(labels.size() == n, "label count mismatch");
    if (dlogits) *dlogits = Tensor(logits.shape);
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double z = logits.data[r];
        const double y = labels[r] == 1 ? 1.0 : 0.0;
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
        if (dlogits) dlogits->data[r] = (sigmoid(z) - y) / static_cast<double>(n);
    }
    return loss / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Net

namespace {

void collect_layers(const std::vector<std::unique_ptr<Layer>>& layers, std::vector<Layer*>* out) {
    for (const auto& l : layers) {
        if (auto* rb = dynamic_cast<ResidualBlock*>(l.get())) {
            for (Layer* c : rb->children()) out->push_back(c);
        } else {
            out->push_back(l.get());
        }
    }
}

}  // namespace

Tensor Net::forward(const Tensor& x, bool training, Rng& rng) {
    Tensor t = x;
    for (auto& l : layers) t = l->forward(t, training, rng);
    return t;
}

Tensor Net::infer(const Tensor& x) const {
    Tensor t = x;
    for (const auto& l : layers) t = l->infer(t);
    return t;
}

void Net::backward(const Tensor& dlogits) {
    Tensor g = dlogits;
    for (std::size_t i = layers.size(); i-- > 0;) g = layers[i]->backward(g);
}

void Net::init(Rng& rng) {
    for (auto& l : layers) l->init(rng);
}

void Net::zero_grads() {
    std::vector<Layer*> flat;
    collect_layers(layers, &flat);
    for (Layer* l : flat) {
        if (auto* g = l->grads()) std::fill(g->begin(), g->end(), 0.0);
    }
}

void Net::sgd_step(double lr) {
    std::vector<Layer*> flat;
    collect_layers(layers, &flat);
    for (Layer* l : flat) {
        auto* p = l->params();
        auto* g = l->grads();
        if (!p) continue;
        const std::size_t nw = l->weight_count();
        for (std::size_t i = 0; i < p->size(); ++i) {
            double grad = (*g)[i];
            if (i < nw && l2 != 0.0) grad += 2.0 * l2 * (*p)[i];
            (*p)[i] -= lr * grad;
        }
    }
}

double Net::penalty() const {
    if (l2 == 0.0) return 0.0;
    std::vector<Layer*> flat;
    collect_layers(layers, &flat);
    double acc = 0.0;
    for (const Layer* l : flat) {
        const auto* p = l->params();
        if (!p) continue;
        const std::size_t nw = l->weight_count();
        for (std::size_t i = 0; i < nw; ++i) acc += (*p)[i] * (*p)[i];
    }
    return l2 * acc;
}

std::size_t Net::param_count() const {
    std::vector<Layer*> flat;
    collect_layers(layers, &flat);
    std::size_t n = 0;
    for (const Layer* l : flat) {
        if (const auto* p = l->params()) n += p->size();
    }
    return n;
}

void Net::copy_params(std::vector<double>* out) const {
    out->clear();
    std::vector<Layer*> flat;
    collect_layers(layers, &flat);
    for (const Layer* l : flat) {
        if (const auto* p = l->params()) {
            out->insert(out->end(), p->begin(), p->end());
        }
    }
}

void Net::set_params(std::span<const double> flat_params) {
    std::vector<Layer*> flat;
    collect_layers(layers, &flat);
    std::size_t k = 0;
    for (Layer* l : flat) {
        if (auto* p = l->params()) {
            if (k + p->size() > flat_params.size()) throw ShapeError("net: parameter blob too small");
            std::copy(flat_params.begin() + static_cast<std::ptrdiff_t>(k),
                      flat_params.begin() + static_cast<std::ptrdiff_t>(k + p->size()), p->begin());
            k += p->size();
        }
    }
    if (k != flat_params.size()) throw ShapeError("net: parameter blob size mismatch");
}

std::vector<double*> Net::param_ptrs() {
    std::vector<Layer*> flat;
    collect_layers(layers, &flat);
    std::vector<double*> out;
    for (Layer* l : flat) {
        if (auto* p = l->params()) {
            for (double& v : *p) out.push_back(&v);
        }
    }
    return out;
}

std::vector<double*> Net::grad_ptrs() {
    std::vector<Layer*> flat;
    collect_layers(layers, &flat);
    std::vector<double*> out;
    for (Layer* l : flat) {
        if (auto* g = l->grads()) {
            for (double& v : *g) out.push_back(&v);
        }
    }
    return out;
}

std::vector<double> Net::probabilities(const Tensor& logits) const {
    const std::size_t n = logits.batch();
    std::vector<double> probs(n);
    if (head == Head::SoftmaxCe) {
        for (std::size_t r = 0; r < n; ++r) {
            const double z0 = logits.data[r * 2];
            const double z1 = logits.data[r * 2 + 1];
            probs[r] = sigmoid(z1 - z0);  // softmax over 2 classes
        }
    } else {
        for (std::size_t r = 0; r < n; ++r) probs[r] = sigmoid(logits.data[r]);
    }
    return probs;
}

std::vector<std::string> Net::shape_trace(const Tensor& x) const {
    std::vector<std::string> trace;
    trace.push_back("input " + shape_string(x.shape));
    Tensor t = x;
    for (const auto& l : layers) {
        t = l->infer(t);
        trace.push_back(l->name() + " -> " + shape_string(t.shape));
    }
    return trace;
}

}  // namespace coughnet::net
