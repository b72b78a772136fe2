#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "sdgg/blocks.hpp"

using namespace sdgg;
using namespace testutil;

namespace {

void fill_uniform(Param& p, Rng& rng, double lo = -0.5, double hi = 0.5) {
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& x : p.value) x = u(rng);
}

}  // namespace

TEST_CASE("single-node gin layer reduces to its mlp") {
    Rng rng(1);
    GinLayer layer("g", 3, 4, 4);
    layer.init(rng);
    for (Param* p : layer.params()) fill_uniform(*p, rng);

    std::vector<double> h{0.3, -0.7, 1.1};
    Tape t;
    Tensor H = t.constant({1, 3}, h);
    Tensor A = t.constant({1, 1}, {0.0});
    std::vector<double> out = layer.forward(t, H, A).value();

    // by hand: relu(relu(h W1 + b1) W2 + b2), no neighbor term
    auto affine = [](const std::vector<double>& in, const Param& W,
                     const Param& b) {
        std::vector<double> o(W.shape.cols, 0.0);
        for (std::size_t j = 0; j < W.shape.cols; ++j) {
            o[j] = b.value[j];
            for (std::size_t i = 0; i < W.shape.rows; ++i)
                o[j] += in[i] * W.value[i * W.shape.cols + j];
        }
        return o;
    };
    std::vector<double> hid = affine(h, layer.a1.W, layer.a1.b);
    for (double& x : hid) x = std::max(0.0, x);
    std::vector<double> expect = affine(hid, layer.a2.W, layer.a2.b);
    for (double& x : expect) x = std::max(0.0, x);
    REQUIRE(out.size() == expect.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        CHECK(out[k] == doctest::Approx(expect[k]).epsilon(1e-12));
}

TEST_CASE("two-node path with identity mlp aggregates to [3],[3]") {
    GinLayer layer("p", 1, 1, 1);
    layer.a1.W.value = {1.0};
    layer.a2.W.value = {1.0};
    Tape t;
    Tensor H = t.constant({2, 1}, {1.0, 2.0});
    Tensor A = t.constant({2, 2}, {0, 1, 1, 0});
    CHECK(layer.forward(t, H, A).value() == std::vector<double>{3.0, 3.0});
}

TEST_CASE("gin layer is permutation-equivariant") {
    Rng rng(2);
    GinLayer layer("e", 2, 8, 8);
    layer.init(rng);
    Graph g = random_graph(rng, 6, 0.4, 2);
    std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    Graph pg = permute_graph(g, perm);

    Tape t;
    std::vector<double> base =
        layer.forward(t, graph_tensor_features(t, g), graph_tensor_adjacency(t, g))
            .value();
    std::vector<double> permuted =
        layer
            .forward(t, graph_tensor_features(t, pg),
                     graph_tensor_adjacency(t, pg))
            .value();
    for (std::size_t v = 0; v < 6; ++v)
        for (std::size_t k = 0; k < 8; ++k)
            CHECK(permuted[perm[v] * 8 + k] ==
                  doctest::Approx(base[v * 8 + k]).epsilon(1e-12));
}

TEST_CASE("graph readout oracles") {
    Tape t;
    SUBCASE("single node passes through") {
        Tensor a = t.constant({1, 2}, {1.5, -2.0});
        Tensor b = t.constant({1, 3}, {0, 4, 1});
        CHECK(graph_readout({a, b}).value() ==
              std::vector<double>{1.5, -2.0, 0, 4, 1});
    }
    SUBCASE("duplicated rows change nothing") {
        Tensor a = t.constant({2, 2}, {1, 5, 3, 2});
        Tensor dup = t.constant({4, 2}, {1, 5, 3, 2, 1, 5, 3, 2});
        std::vector<double> once = graph_readout({a}).value();
        CHECK(once == graph_readout({dup}).value());
    }
    SUBCASE("columnwise max by hand") {
        Tensor a = t.constant({2, 2}, {1, 5, 3, 2});
        CHECK(graph_readout({a}).value() == std::vector<double>{3, 5});
    }
    SUBCASE("empty input is rejected") {
        CHECK_THROWS(graph_readout({}));
    }
}

TEST_CASE("zeroed classifier head scores one half everywhere") {
    Rng rng(3);
    GraphEncoder enc("enc", 2, 3, 8);
    enc.init(rng);
    ScoreHead head("head", enc.embed_dim(), true);
    // head stays zero-initialized
    for (int i = 0; i < 5; ++i) {
        Graph g = random_graph(rng, 5, 0.5, 2);
        CHECK(score_graph(enc, head, g) == 0.5);
    }
}

TEST_CASE("graph scores survive isomorphic relabeling") {
    Rng rng(4);
    GraphEncoder enc("enc", 3, 3, 16);
    enc.init(rng);
    ScoreHead head("head", enc.embed_dim(), false);
    head.init(rng);
    fill_uniform(head.out.b, rng);

    std::vector<std::size_t> perm(7);
    for (int i = 0; i < 20; ++i) {
        Graph g = random_graph(rng, 7, 0.4, 3);
        double base = score_graph(enc, head, g);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        double permuted = score_graph(enc, head, permute_graph(g, perm));
        CHECK(std::abs(base - permuted) <= 1e-6);
    }
}

TEST_CASE("zero-initialized mlp generator emits constant rows") {
    MlpGenerator gen("g", 4, 8, 3);  // weights and biases all zero
    Tape t;
    Tensor Z = t.constant({3, 4}, std::vector<double>(12, 0.7));
    GeneratedGraph out = gen.generate(t, Z);
    for (double x : out.X.value()) CHECK(x == 0.0);
    const std::vector<double>& A = out.A.value();
    for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t v = 0; v < 3; ++v)
            CHECK(A[u * 3 + v] == (u == v ? 0.0 : 0.5));
}

TEST_CASE("generated adjacency invariants hold for both generators") {
    Rng rng(5);
    MlpGenerator mlp("m", 4, 8, 3);
    mlp.init(rng);
    VgaePair vgae(3, 2, 8, 4);
    vgae.init(rng);
    for (int trial = 0; trial < 5; ++trial) {
        Tape t;
        std::size_t n = 4 + static_cast<std::size_t>(trial);
        Tensor Z = t.constant({n, 4}, [&] {
            std::normal_distribution<double> gauss;
            std::vector<double> v(n * 4);
            for (double& x : v) x = gauss(rng);
            return v;
        }());
        Graph g = random_graph(rng, n, 0.3, 3);
        Tensor X = graph_tensor_features(t, g);
        Tensor A = graph_tensor_adjacency(t, g);
        for (const GeneratedGraph& out :
             {mlp.generate(t, Z), vgae.perturb(t, X, A, rng, false).graph}) {
            const std::vector<double>& a = out.A.value();
            for (std::size_t u = 0; u < n; ++u) {
                CHECK(a[u * n + u] == 0.0);
                for (std::size_t v = 0; v < n; ++v) {
                    CHECK(a[u * n + v] == a[v * n + u]);
                    CHECK(a[u * n + v] >= 0.0);
                    CHECK(a[u * n + v] <= 1.0);
                }
            }
        }
    }
}

TEST_CASE("vgae encoding basics") {
    Rng rng(6);
    Vgae v("v", 2, 2, 8, 4, true, 2);
    v.init(rng);
    Graph g = random_graph(rng, 5, 0.4, 2);
    Tape t;
    Tensor X = graph_tensor_features(t, g);
    Tensor A = graph_tensor_adjacency(t, g);

    SUBCASE("zeroed log-sigma head gives unit sigma") {
        for (Param* p : v.logsigma_head.params())
            std::fill(p->value.begin(), p->value.end(), 0.0);
        VgaeEncoding enc = v.encode(t, X, A);
        for (double s : enc.sigma.value()) CHECK(s == 1.0);
    }
    SUBCASE("sigma is strictly positive after random init") {
        for (Param* p : v.params()) fill_uniform(*p, rng);
        VgaeEncoding enc = v.encode(t, X, A);
        CHECK(enc.mu.shape() == Shape{5, 4});
        CHECK(enc.sigma.shape() == Shape{5, 4});
        for (double s : enc.sigma.value()) CHECK(s > 0.0);
    }
}

TEST_CASE("reparameterization arithmetic") {
    Tape t;
    Tensor mu = t.constant({2, 2}, {1, 2, 3, 4});
    Tensor sigma = t.constant({2, 2}, {1, 1, 2, 2});
    VgaeEncoding enc{mu, sigma};
    SUBCASE("zero noise returns mu") {
        Tensor noise = t.constant({2, 2}, {0, 0, 0, 0});
        std::vector<double> z = reparameterize(enc, noise).value();
        CHECK(z == mu.value());
    }
    SUBCASE("standard case returns the noise") {
        VgaeEncoding std_enc{t.constant({2, 2}, {0, 0, 0, 0}),
                             t.constant({2, 2}, {1, 1, 1, 1})};
        Tensor noise = t.constant({2, 2}, {0.3, -1.2, 0.8, 2.0});
        std::vector<double> z = reparameterize(std_enc, noise).value();
        CHECK(z == noise.value());
    }
}

TEST_CASE("deterministic perturbation is repeatable bit for bit") {
    Rng rng(7);
    VgaePair vgae(2, 2, 8, 4);
    vgae.init(rng);
    Graph g = random_graph(rng, 4, 0.5, 2);
    auto run = [&] {
        Tape t;
        Tensor X = graph_tensor_features(t, g);
        Tensor A = graph_tensor_adjacency(t, g);
        Rng ignored(0);
        auto res = vgae.perturb(t, X, A, ignored, true);
        return std::make_pair(res.graph.X.value(), res.graph.A.value());
    };
    auto a = run();
    auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("inner-product decoder oracles") {
    Tape t;
    SUBCASE("zero latent gives one-half off-diagonal") {
        Tensor Z = t.constant({3, 2}, std::vector<double>(6, 0.0));
        const std::vector<double>& A = decode_adjacency(t, Z).value();
        for (std::size_t u = 0; u < 3; ++u)
            for (std::size_t v = 0; v < 3; ++v)
                CHECK(A[u * 3 + v] == (u == v ? 0.0 : 0.5));
    }
    SUBCASE("identity latent rows") {
        Tensor Z = t.constant({2, 2}, {1, 0, 0, 1});
        const std::vector<double>& A = decode_adjacency(t, Z).value();
        CHECK(A[0] == 0.0);
        CHECK(A[3] == 0.0);
        CHECK(A[1] == 0.5);  // sigmoid(0)
        CHECK(A[2] == 0.5);
    }
}

TEST_CASE("parameter json round trip reproduces scores bit-exactly") {
    Rng rng(8);
    GraphEncoder enc("enc", 2, 3, 8);
    enc.init(rng);
    ScoreHead head("head", enc.embed_dim(), true);
    head.init(rng);
    Graph g = random_graph(rng, 5, 0.4, 2);
    double before = score_graph(enc, head, g);

    TempDir dir("ckpt");
    std::vector<Param*> ps = enc.params();
    for (Param* p : head.params()) ps.push_back(p);
    save_params_json((dir.path / "p.json").string(), {{"k", "v"}},
                     std::span<Param* const>(ps));

    for (Param* p : ps) std::fill(p->value.begin(), p->value.end(), 0.0);
    auto meta = load_params_json((dir.path / "p.json").string(),
                                 std::span<Param* const>(ps));
    CHECK(score_graph(enc, head, g) == before);
    REQUIRE(meta.size() == 1);
    CHECK(meta[0].first == "k");
}
