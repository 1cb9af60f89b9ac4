#include "har/lstm.hpp"

#include <cmath>
#include <vector>

#include "har/errors.hpp"

namespace har::nn {

LstmParams LstmParams::zeros(std::size_t input_size, std::size_t hidden_size) {
    LstmParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    for (std::size_t k = 0; k < 4; ++k) {
        p.w_input[k] = Tensor({input_size, hidden_size});
        p.w_recurrent[k] = Tensor({hidden_size, hidden_size});
        p.bias[k] = Tensor({hidden_size});
    }
    return p;
}

void LstmParams::check() const {
    for (std::size_t k = 0; k < 4; ++k) {
        require_shape(w_input[k], {input_size, hidden_size}, "lstm: input weights");
        require_shape(w_recurrent[k], {hidden_size, hidden_size}, "lstm: recurrent weights");
        require_shape(bias[k], {hidden_size}, "lstm: bias");
    }
}

namespace {

inline double sigm(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// pre += W^T v for W [rows, H], v [rows].
void add_mat_vec(const Tensor& w, const double* v, std::size_t rows, double* pre, std::size_t H) {
    const double* wd = w.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double vr = v[r];
        const double* wrow = wd + r * H;
        for (std::size_t h = 0; h < H; ++h) pre[h] += vr * wrow[h];
    }
}

}  // namespace

LstmResult lstm_forward(const Tensor& seq, const LstmParams& p, const Tensor& h0, const Tensor& c0,
                        LstmCache* cache) {
    p.check();
    if (seq.rank() != 2 || seq.dim(1) != p.input_size) {
        throw ValidationError("lstm_forward: sequence must be [T, " +
                              std::to_string(p.input_size) + "], got " + shape_string(seq));
    }
    if (seq.dim(0) < 1) throw ValidationError("lstm_forward: empty sequence");
    const std::size_t T = seq.dim(0), M = p.input_size, H = p.hidden_size;
    require_shape(h0, {H}, "lstm_forward: h0");
    require_shape(c0, {H}, "lstm_forward: c0");
    require_finite(seq, "lstm_forward");

    Tensor hidden({T, H});
    Tensor cells({T, H});
    Tensor gates({T, 4, H});
    Tensor tanh_cells({T, H});

    std::vector<double> pre(4 * H);
    const double* h_prev = h0.data();
    const double* c_prev = c0.data();

    for (std::size_t t = 0; t < T; ++t) {
        const double* x_t = seq.data() + t * M;
        for (std::size_t k = 0; k < 4; ++k) {
            double* pk = pre.data() + k * H;
            for (std::size_t h = 0; h < H; ++h) pk[h] = p.bias[k][h];
            add_mat_vec(p.w_input[k], x_t, M, pk, H);
            add_mat_vec(p.w_recurrent[k], h_prev, H, pk, H);
        }
        double* gate_t = gates.data() + t * 4 * H;
        double* c_t = cells.data() + t * H;
        double* tc_t = tanh_cells.data() + t * H;
        double* h_t = hidden.data() + t * H;
        for (std::size_t h = 0; h < H; ++h) {
            const double ig = sigm(pre[kGateInput * H + h]);
            const double fg = sigm(pre[kGateForget * H + h]);
            const double gg = std::tanh(pre[kGateCell * H + h]);
            const double og = sigm(pre[kGateOutput * H + h]);
            gate_t[kGateInput * H + h] = ig;
            gate_t[kGateForget * H + h] = fg;
            gate_t[kGateCell * H + h] = gg;
            gate_t[kGateOutput * H + h] = og;
            c_t[h] = fg * c_prev[h] + ig * gg;
            tc_t[h] = std::tanh(c_t[h]);
            h_t[h] = og * tc_t[h];
        }
        h_prev = h_t;
        c_prev = c_t;
    }

    LstmResult out;
    out.hidden_seq = hidden;
    out.h_final = Tensor({H}, std::vector<double>(hidden.data() + (T - 1) * H,
                                                  hidden.data() + T * H));
    out.c_final = Tensor({H}, std::vector<double>(cells.data() + (T - 1) * H,
                                                  cells.data() + T * H));
    if (cache) {
        cache->x_seq = seq;
        cache->gates = std::move(gates);
        cache->cells = std::move(cells);
        cache->tanh_cells = std::move(tanh_cells);
        cache->hidden = std::move(hidden);
        cache->h0 = h0;
        cache->c0 = c0;
    }
    return out;
}

LstmGrads lstm_backward(const Tensor& grad_hidden_seq, const LstmParams& p,
                        const LstmCache& cache) {
    p.check();
    const std::size_t M = p.input_size, H = p.hidden_size;
    const std::size_t T = cache.x_seq.dim(0);
    require_shape(grad_hidden_seq, {T, H}, "lstm_backward: grad_hidden_seq");

    LstmGrads g;
    g.seq = Tensor({T, M});
    g.params = LstmParams::zeros(M, H);
    g.h0 = Tensor({H});
    g.c0 = Tensor({H});

    std::vector<double> dh_carry(H, 0.0), dc_carry(H, 0.0);
    std::vector<double> dh(H), dc(H);
    std::vector<double> dpre(4 * H);

    for (std::size_t ti = T; ti-- > 0;) {
        const double* gate_t = cache.gates.data() + ti * 4 * H;
        const double* tc_t = cache.tanh_cells.data() + ti * H;
        const double* c_prev = ti > 0 ? cache.cells.data() + (ti - 1) * H : cache.c0.data();
        const double* h_prev = ti > 0 ? cache.hidden.data() + (ti - 1) * H : cache.h0.data();
        const double* x_t = cache.x_seq.data() + ti * M;
        const double* go_t = grad_hidden_seq.data() + ti * H;

        for (std::size_t h = 0; h < H; ++h) {
            dh[h] = go_t[h] + dh_carry[h];
            const double ig = gate_t[kGateInput * H + h];
            const double fg = gate_t[kGateForget * H + h];
            const double gg = gate_t[kGateCell * H + h];
            const double og = gate_t[kGateOutput * H + h];
            const double tc = tc_t[h];

            dc[h] = dh[h] * og * (1.0 - tc * tc) + dc_carry[h];
            dpre[kGateOutput * H + h] = dh[h] * tc * og * (1.0 - og);
            dpre[kGateInput * H + h] = dc[h] * gg * ig * (1.0 - ig);
            dpre[kGateCell * H + h] = dc[h] * ig * (1.0 - gg * gg);
            dpre[kGateForget * H + h] = dc[h] * c_prev[h] * fg * (1.0 - fg);
            dc_carry[h] = dc[h] * fg;
        }

        double* dx_t = g.seq.data() + ti * M;
        std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
        for (std::size_t k = 0; k < 4; ++k) {
            const double* dpk = dpre.data() + k * H;
            for (std::size_t h = 0; h < H; ++h) g.params.bias[k][h] += dpk[h];

            const double* wx = p.w_input[k].data();
            double* gwx = g.params.w_input[k].data();
            for (std::size_t m = 0; m < M; ++m) {
                const double xv = x_t[m];
                const double* wrow = wx + m * H;
                double* gwrow = gwx + m * H;
                double acc = 0.0;
                for (std::size_t h = 0; h < H; ++h) {
                    acc += wrow[h] * dpk[h];
                    gwrow[h] += xv * dpk[h];
                }
                dx_t[m] += acc;
            }

            const double* wh = p.w_recurrent[k].data();
            double* gwh = g.params.w_recurrent[k].data();
            for (std::size_t r = 0; r < H; ++r) {
                const double hv = h_prev[r];
                const double* wrow = wh + r * H;
                double* gwrow = gwh + r * H;
                double acc = 0.0;
                for (std::size_t h = 0; h < H; ++h) {
                    acc += wrow[h] * dpk[h];
                    gwrow[h] += hv * dpk[h];
                }
                dh_carry[r] += acc;
            }
        }
    }

    for (std::size_t h = 0; h < H; ++h) {
        g.h0[h] = dh_carry[h];
        g.c0[h] = dc_carry[h];
    }
    return g;
}

}  // namespace har::nn
