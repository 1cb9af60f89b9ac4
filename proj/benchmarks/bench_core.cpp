#include <benchmark/benchmark.h>

#include "har/attributes.hpp"
#include "har/layers.hpp"
#include "har/lstm.hpp"
#include "har/models.hpp"
#include "har/rng.hpp"

using namespace har;
using namespace har::nn;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, RngState& rng) {
    Tensor t(std::move(shape));
    rng.fill_uniform(t, -1.0, 1.0);
    return t;
}

ConvParams random_conv(std::size_t filter, std::size_t c_in, std::size_t c_out,
                       RngState& rng) {
    ConvParams p;
    p.weights = random_tensor({filter, 1, c_in, c_out}, rng);
    p.bias = random_tensor({c_out}, rng);
    return p;
}

void BM_TemporalConvForward(benchmark::State& state) {
    const auto D = static_cast<std::size_t>(state.range(0));
    const auto C = static_cast<std::size_t>(state.range(1));
    RngState rng(1);
    const Tensor x = random_tensor({24, D, C}, rng);
    const ConvParams p = random_conv(5, C, C, rng);
    for (auto _ : state) {
        Tensor y = temporal_conv_forward(x, p, Activation::relu);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * 20 * D * C * 5 * C);
}

void BM_TemporalConvBackward(benchmark::State& state) {
    const auto D = static_cast<std::size_t>(state.range(0));
    const auto C = static_cast<std::size_t>(state.range(1));
    RngState rng(2);
    const Tensor x = random_tensor({24, D, C}, rng);
    const ConvParams p = random_conv(5, C, C, rng);
    const Tensor y = temporal_conv_forward(x, p, Activation::relu);
    const Tensor grad = random_tensor(y.shape(), rng);
    for (auto _ : state) {
        ConvGrads g = temporal_conv_backward(grad, x, y, p, Activation::relu);
        benchmark::DoNotOptimize(g.weights.data());
    }
}

void BM_MaxPool(benchmark::State& state) {
    RngState rng(3);
    const Tensor x = random_tensor({100, 40, 64}, rng);
    std::vector<std::size_t> argmax;
    for (auto _ : state) {
        Tensor y = max_pool_forward(x, 2, 1, &argmax);
        benchmark::DoNotOptimize(y.data());
    }
}

void BM_FullyConnected(benchmark::State& state) {
    const auto M = static_cast<std::size_t>(state.range(0));
    RngState rng(4);
    DenseParams p;
    p.weights = random_tensor({M, 128}, rng);
    p.bias = random_tensor({128}, rng);
    const Tensor x = random_tensor({M}, rng);
    for (auto _ : state) {
        Tensor y = fully_connected_forward(x, p, Activation::relu);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * M * 128);
}

void BM_LstmForward(benchmark::State& state) {
    const auto M = static_cast<std::size_t>(state.range(0));
    RngState rng(5);
    LstmParams p = LstmParams::zeros(M, 128);
    for (std::size_t k = 0; k < 4; ++k) {
        rng.fill_uniform(p.w_input[k], -0.1, 0.1);
        rng.fill_uniform(p.w_recurrent[k], -0.1, 0.1);
    }
    const Tensor seq = random_tensor({8, M}, rng);
    const Tensor h0({128}), c0({128});
    for (auto _ : state) {
        LstmResult r = lstm_forward(seq, p, h0, c0);
        benchmark::DoNotOptimize(r.hidden_seq.data());
    }
}

void BM_AttrCnnForward(benchmark::State& state) {
    NetworkConfig cfg;
    cfg.architecture = Architecture::attr_cnn;
    cfg.window_length = 24;
    cfg.channel_count = static_cast<std::size_t>(state.range(0));
    cfg.attribute_count = 10;
    cfg.conv_filters = static_cast<std::size_t>(state.range(1));
    const Network net = build_attr_cnn(cfg, 7);
    RngState rng(6);
    Tensor x({cfg.window_length, cfg.channel_count});
    rng.fill_uniform(x, 0.0, 1.0);
    for (auto _ : state) {
        Tensor scores = net.forward_sample(x, Mode::eval, nullptr);
        benchmark::DoNotOptimize(scores.data());
    }
}

void BM_DecodeNearest(benchmark::State& state) {
    RngState rng(7);
    const AttributeMatrix m = random_representation(18, 32, rng);
    std::vector<double> scores(32);
    for (double& v : scores) v = rng.uniform(1e-3, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(decode_nearest(scores, m));
    }
}

}  // namespace

BENCHMARK(BM_TemporalConvForward)->Args({6, 16})->Args({113, 64});
BENCHMARK(BM_TemporalConvBackward)->Args({6, 16})->Args({113, 64});
BENCHMARK(BM_MaxPool);
BENCHMARK(BM_FullyConnected)->Arg(768)->Arg(57856);
BENCHMARK(BM_LstmForward)->Arg(384)->Arg(7232);
BENCHMARK(BM_AttrCnnForward)->Args({6, 16})->Args({113, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecodeNearest);

BENCHMARK_MAIN();
