#include "har/layers.hpp"

#include "har/errors.hpp"

namespace har::nn {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

namespace {

void check_conv_input(const Tensor& x, const ConvParams& p) {
    if (x.rank() != 3) {
        throw ValidationError("temporal_conv: input must be [T, D, C], got " + shape_string(x));
    }
    if (p.weights.rank() != 4 || p.weights.dim(1) != 1) {
        throw ValidationError("temporal_conv: weights must be [F, 1, C_in, C_out], got " +
                              shape_string(p.weights));
    }
    if (p.bias.shape() != std::vector<std::size_t>{p.out_channels()}) {
        throw ValidationError("temporal_conv: bias must be [C_out], got " + shape_string(p.bias));
    }
    if (x.dim(2) != p.in_channels()) {
        throw ValidationError("temporal_conv: input has " + std::to_string(x.dim(2)) +
                              " channels, weights expect " + std::to_string(p.in_channels()));
    }
    if (x.dim(0) < p.filter_size()) {
        throw ValidationError("temporal_conv: time length " + std::to_string(x.dim(0)) +
                              " shorter than filter size " + std::to_string(p.filter_size()));
    }
    require_finite(x, "temporal_conv");
}

}  // namespace

Tensor temporal_conv_forward(const Tensor& x, const ConvParams& p, Activation act) {
    check_conv_input(x, p);
    const std::size_t T = x.dim(0), D = x.dim(1), Cin = x.dim(2);
    const std::size_t F = p.filter_size(), Cout = p.out_channels();
    const std::size_t T_out = T - F + 1;

    Tensor out({T_out, D, Cout});
    const double* xv = x.data();
    const double* w = p.weights.data();
    const double* b = p.bias.data();
    double* ov = out.data();

    for (std::size_t t = 0; t < T_out; ++t) {
        for (std::size_t d = 0; d < D; ++d) {
            double* row = ov + (t * D + d) * Cout;
            for (std::size_t co = 0; co < Cout; ++co) row[co] = b[co];
            for (std::size_t f = 0; f < F; ++f) {
                const double* xrow = xv + ((t + f) * D + d) * Cin;
                const double* wrow = w + f * Cin * Cout;
                for (std::size_t ci = 0; ci < Cin; ++ci) {
                    const double xval = xrow[ci];
                    const double* wk = wrow + ci * Cout;
                    for (std::size_t co = 0; co < Cout; ++co) row[co] += xval * wk[co];
                }
            }
            if (act != Activation::identity) {
                for (std::size_t co = 0; co < Cout; ++co) row[co] = activate(row[co], act);
            }
        }
    }
    return out;
}

ConvGrads temporal_conv_backward(const Tensor& grad_out, const Tensor& x, const Tensor& output,
                                 const ConvParams& p, Activation act) {
    check_conv_input(x, p);
    const std::size_t T = x.dim(0), D = x.dim(1), Cin = x.dim(2);
    const std::size_t F = p.filter_size(), Cout = p.out_channels();
    const std::size_t T_out = T - F + 1;
    require_shape(grad_out, {T_out, D, Cout}, "temporal_conv_backward: grad_out");
    require_shape(output, {T_out, D, Cout}, "temporal_conv_backward: output");

    ConvGrads g{Tensor(x.shape()), Tensor(p.weights.shape()), Tensor(p.bias.shape())};
    const double* go = grad_out.data();
    const double* yv = output.data();
    const double* xv = x.data();
    const double* w = p.weights.data();
    double* gx = g.x.data();
    double* gw = g.weights.data();
    double* gb = g.bias.data();

    std::vector<double> dz(Cout);
    for (std::size_t t = 0; t < T_out; ++t) {
        for (std::size_t d = 0; d < D; ++d) {
            const std::size_t base = (t * D + d) * Cout;
            for (std::size_t co = 0; co < Cout; ++co) {
                dz[co] = go[base + co] * activation_grad_from_output(yv[base + co], act);
                gb[co] += dz[co];
            }
            for (std::size_t f = 0; f < F; ++f) {
                const std::size_t xbase = ((t + f) * D + d) * Cin;
                const double* wrow = w + f * Cin * Cout;
                double* gwrow = gw + f * Cin * Cout;
                for (std::size_t ci = 0; ci < Cin; ++ci) {
                    const double xval = xv[xbase + ci];
                    const double* wk = wrow + ci * Cout;
                    double* gwk = gwrow + ci * Cout;
                    double acc = 0.0;
                    for (std::size_t co = 0; co < Cout; ++co) {
                        acc += wk[co] * dz[co];
                        gwk[co] += xval * dz[co];
                    }
                    gx[xbase + ci] += acc;
                }
            }
        }
    }
    return g;
}

ConvGrads temporal_conv_backward(const Tensor& grad_out, const Tensor& x, const ConvParams& p,
                                 Activation act) {
    return temporal_conv_backward(grad_out, x, temporal_conv_forward(x, p, act), p, act);
}

Tensor max_pool_forward(const Tensor& x, std::size_t pool, std::size_t stride,
                        std::vector<std::size_t>* argmax) {
    if (x.rank() != 3) {
        throw ValidationError("max_pool: input must be [T, D, C], got " + shape_string(x));
    }
    if (pool < 1 || stride < 1) throw ValidationError("max_pool: pool and stride must be >= 1");
    const std::size_t T = x.dim(0), D = x.dim(1), C = x.dim(2);
    if (T < pool) {
        throw ValidationError("max_pool: time length " + std::to_string(T) +
                              " shorter than pool size " + std::to_string(pool));
    }
    const std::size_t T_out = (T - pool) / stride + 1;

    Tensor out({T_out, D, C});
    if (argmax) argmax->assign(out.size(), 0);
    const double* xv = x.data();
    double* ov = out.data();

    for (std::size_t t = 0; t < T_out; ++t) {
        for (std::size_t d = 0; d < D; ++d) {
            for (std::size_t c = 0; c < C; ++c) {
                std::size_t best_idx = ((t * stride) * D + d) * C + c;
                double best = xv[best_idx];
                for (std::size_t p = 1; p < pool; ++p) {
                    const std::size_t idx = ((t * stride + p) * D + d) * C + c;
                    if (xv[idx] > best) {
                        best = xv[idx];
                        best_idx = idx;
                    }
                }
                const std::size_t out_idx = (t * D + d) * C + c;
                ov[out_idx] = best;
                if (argmax) (*argmax)[out_idx] = best_idx;
            }
        }
    }
    return out;
}

Tensor max_pool_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                         const std::vector<std::size_t>& input_shape) {
    if (grad_out.size() != argmax.size()) {
        throw ValidationError("max_pool_backward: grad/argmax size mismatch");
    }
    Tensor gx(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        gx[argmax[i]] += grad_out[i];
    }
    return gx;
}

Tensor fully_connected_forward(const Tensor& x, const DenseParams& p, Activation act) {
    if (x.rank() != 1 || x.dim(0) != p.in_width()) {
        throw ValidationError("fully_connected: input width " + shape_string(x) +
                              " does not match weights " + shape_string(p.weights));
    }
    if (p.bias.shape() != std::vector<std::size_t>{p.out_width()}) {
        throw ValidationError("fully_connected: bias must be [U], got " + shape_string(p.bias));
    }
    require_finite(x, "fully_connected");

    const std::size_t M = p.in_width(), U = p.out_width();
    Tensor out({U});
    const double* xv = x.data();
    const double* w = p.weights.data();
    double* ov = out.data();
    for (std::size_t u = 0; u < U; ++u) ov[u] = p.bias[u];
    for (std::size_t m = 0; m < M; ++m) {
        const double xval = xv[m];
        const double* wrow = w + m * U;
        for (std::size_t u = 0; u < U; ++u) ov[u] += xval * wrow[u];
    }
    for (std::size_t u = 0; u < U; ++u) ov[u] = activate(ov[u], act);
    return out;
}

DenseGrads fully_connected_backward(const Tensor& grad_out, const Tensor& x, const Tensor& output,
                                    const DenseParams& p, Activation act) {
    const std::size_t M = p.in_width(), U = p.out_width();
    require_shape(grad_out, {U}, "fully_connected_backward: grad_out");
    require_shape(x, {M}, "fully_connected_backward: x");
    require_shape(output, {U}, "fully_connected_backward: output");

    DenseGrads g{Tensor({M}), Tensor({M, U}), Tensor({U})};
    std::vector<double> dz(U);
    for (std::size_t u = 0; u < U; ++u) {
        dz[u] = grad_out[u] * activation_grad_from_output(output[u], act);
        g.bias[u] = dz[u];
    }
    const double* w = p.weights.data();
    double* gw = g.weights.data();
    for (std::size_t m = 0; m < M; ++m) {
        const double* wrow = w + m * U;
        double* gwrow = gw + m * U;
        const double xval = x[m];
        double acc = 0.0;
        for (std::size_t u = 0; u < U; ++u) {
            acc += wrow[u] * dz[u];
            gwrow[u] = xval * dz[u];
        }
        g.x[m] = acc;
    }
    return g;
}

Tensor dropout(const Tensor& x, double rate, Mode mode, RngState& rng, Tensor* mask) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ValidationError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
    }
    if (mode == Mode::eval || rate == 0.0) {
        if (mask) *mask = Tensor::full(x.shape(), 1.0);
        return x;
    }
    const double scale = 1.0 / (1.0 - rate);
    Tensor out(x.shape());
    if (mask) *mask = Tensor(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = rng.uniform() >= rate ? scale : 0.0;
        out[i] = x[i] * keep;
        if (mask) (*mask)[i] = keep;
    }
    return out;
}

}  // namespace har::nn
