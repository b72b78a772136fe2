#include <benchmark/benchmark.h>

#include <random>

#include "sdgg/blocks.hpp"
#include "sdgg/metrics.hpp"
#include "sdgg/tensor.hpp"

using namespace sdgg;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

Graph random_graph(Rng& rng, std::size_t n, std::size_t d, double p) {
    Graph g;
    g.node_count = n;
    g.feature_dim = d;
    g.adjacency.assign(n * n, 0.0);
    std::bernoulli_distribution edge(p);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (edge(rng)) g.adjacency[u * n + v] = g.adjacency[v * n + u] = 1.0;
    g.features = random_vec(rng, n * d);
    return g;
}

void bm_matmul_forward_backward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(7);
    Param a("a", n, n), b("b", n, n);
    a.value = random_vec(rng, n * n);
    b.value = random_vec(rng, n * n);
    for (auto _ : state) {
        a.zero_grad();
        b.zero_grad();
        Tape t;
        Tensor loss = frobenius_sq(matmul(t.leaf(a), t.leaf(b)));
        t.backward(loss);
        benchmark::DoNotOptimize(a.grad.data());
    }
}
BENCHMARK(bm_matmul_forward_backward)->Arg(16)->Arg(64)->Arg(128);

void bm_encoder_embed(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(7);
    Graph g = random_graph(rng, n, 8, 0.2);
    GraphEncoder enc("enc", 8, 3, 16);
    enc.init(rng);
    for (auto _ : state) {
        Tape t;
        Tensor e = enc.embed(t, graph_tensor_features(t, g),
                             graph_tensor_adjacency(t, g));
        benchmark::DoNotOptimize(e.value().data());
    }
}
BENCHMARK(bm_encoder_embed)->Arg(16)->Arg(64)->Arg(128);

void bm_roc_auc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(7);
    std::vector<double> scores = random_vec(rng, n);
    std::vector<int> labels(n);
    std::bernoulli_distribution pos(0.3);
    for (int& y : labels) y = pos(rng) ? 1 : 0;
    labels[0] = 0;
    labels[1] = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(roc_auc(scores, labels));
    }
}
BENCHMARK(bm_roc_auc)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
