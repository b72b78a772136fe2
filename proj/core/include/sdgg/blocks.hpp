#pragma once

#include <random>
#include <string>
#include <vector>

#include "sdgg/graph_data.hpp"
#include "sdgg/tensor.hpp"

namespace sdgg {

using Rng = std::mt19937_64;

// Uniform Glorot for weights, zeros for biases.
void glorot_init(Param& p, Rng& rng);

struct Affine {
    Param W, b;

    Affine() = default;
    Affine(const std::string& name, std::size_t in, std::size_t out)
        : W(name + ".W", in, out), b(name + ".b", 1, out) {}

    void init(Rng& rng) {
        glorot_init(W, rng);
        std::fill(b.value.begin(), b.value.end(), 0.0);
    }
    Tensor forward(Tape& t, const Tensor& x) {
        return add(matmul(x, t.leaf(W)), t.leaf(b));
    }
    std::vector<Param*> params() { return {&W, &b}; }
};

// One GIN layer: pre = (1+eps0)*H + A*H with eps0 fixed at 0, combined by a
// two-affine MLP with ReLU between. `final_relu` is off for the VGAE heads.
struct GinLayer {
    Affine a1, a2;
    bool final_relu = true;

    GinLayer() = default;
    GinLayer(const std::string& name, std::size_t in, std::size_t hidden,
             std::size_t out, bool final_relu_ = true)
        : a1(name + ".a1", in, hidden), a2(name + ".a2", hidden, out),
          final_relu(final_relu_) {}

    void init(Rng& rng) {
        a1.init(rng);
        a2.init(rng);
    }
    Tensor forward(Tape& t, const Tensor& H, const Tensor& A);
    std::vector<Param*> params();
};

// K stacked GIN layers with concat-then-columnwise-max readout.
struct GraphEncoder {
    std::vector<GinLayer> layers;
    std::size_t input_dim = 0;
    std::size_t agg_dim = 0;

    GraphEncoder() = default;
    GraphEncoder(const std::string& name, std::size_t input_dim_, std::size_t K,
                 std::size_t agg_dim_);

    void init(Rng& rng);
    // node-level features after every layer, in order
    std::vector<Tensor> forward_layers(Tape& t, const Tensor& X, const Tensor& A);
    // 1 x (K * agg_dim) graph representation
    Tensor embed(Tape& t, const Tensor& X, const Tensor& A);
    std::size_t embed_dim() const { return layers.size() * agg_dim; }
    std::vector<Param*> params();
};

Tensor graph_readout(const std::vector<Tensor>& per_layer);

struct ScoreHead {
    Affine out;
    bool sigmoid_out = false;  // false: critic, true: classifier

    ScoreHead() = default;
    ScoreHead(const std::string& name, std::size_t in, bool sigmoid_out_)
        : out(name, in, 1), sigmoid_out(sigmoid_out_) {}

    void init(Rng& rng) { out.init(rng); }
    Tensor score(Tape& t, const Tensor& embedding);
    std::vector<Param*> params() { return out.params(); }
};

Tensor graph_tensor_features(Tape& t, const Graph& g);
Tensor graph_tensor_adjacency(Tape& t, const Graph& g);

double score_graph(GraphEncoder& enc, ScoreHead& head, const Graph& g);

struct GeneratedGraph {
    Tensor X;  // n x d
    Tensor A;  // n x n, symmetric, zero diagonal, entries in [0,1]
};

// Noise-to-graph generator: X = MLP(Z), A = sigmoid(X X^T) with the diagonal
// forced to zero and exact symmetrization.
struct MlpGenerator {
    Affine a1, a2;

    MlpGenerator() = default;
    MlpGenerator(const std::string& name, std::size_t latent_dim,
                 std::size_t hidden, std::size_t feature_dim)
        : a1(name + ".a1", latent_dim, hidden), a2(name + ".a2", hidden, feature_dim) {}

    void init(Rng& rng) {
        a1.init(rng);
        a2.init(rng);
    }
    GeneratedGraph generate(Tape& t, const Tensor& Z);
    std::vector<Param*> params();
};

struct VgaeEncoding {
    Tensor mu;     // n x d_z
    Tensor sigma;  // n x d_z, strictly positive
};

// Shared structure of the Node/Edge VGAE: GIN encoder stack over the input
// graph, then one GIN layer each for mu and log-sigma on the node-level
// hidden features. Only the node variant carries a decoder.
struct Vgae {
    GraphEncoder encoder;
    GinLayer mu_head, logsigma_head;
    Affine dec1, dec2;   // node variant only
    bool has_decoder = false;
    std::size_t latent_dim = 0;

    Vgae() = default;
    Vgae(const std::string& name, std::size_t input_dim, std::size_t K,
         std::size_t agg_dim, std::size_t latent_dim_, bool has_decoder_,
         std::size_t output_dim = 0);

    void init(Rng& rng);
    VgaeEncoding encode(Tape& t, const Tensor& X, const Tensor& A);
    Tensor decode_features(Tape& t, const Tensor& Z);
    std::vector<Param*> params();
};

// Z = mu + noise .* sigma; in deterministic mode Z = mu (ablation switch).
Tensor reparameterize(const VgaeEncoding& enc, const Tensor& noise);

// Inner-product adjacency: sigmoid(Z Z^T), diagonal zeroed, symmetrized.
Tensor decode_adjacency(Tape& t, const Tensor& Z);

// Node-VGAE + Edge-VGAE pair acting as the perturbation generator.
struct VgaePair {
    Vgae node_vgae;
    Vgae edge_vgae;

    VgaePair() = default;
    VgaePair(std::size_t input_dim, std::size_t K, std::size_t agg_dim,
             std::size_t latent_dim);

    void init(Rng& rng);
    std::vector<Param*> params();

    struct Result {
        GeneratedGraph graph;
        VgaeEncoding node_enc;
        VgaeEncoding edge_enc;
    };
    // Perturbs one real graph. Noise is sampled from rng unless deterministic.
    Result perturb(Tape& t, const Tensor& X, const Tensor& A, Rng& rng,
                   bool deterministic);
    // Same with caller-provided reparameterization noise (frozen for
    // gradient checks).
    Result perturb_with_noise(Tape& t, const Tensor& X, const Tensor& A,
                              const std::vector<double>& noise_node,
                              const std::vector<double>& noise_edge);
};

// --- checkpointing ----------------------------------------------------------

void save_params_json(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& meta,
                      std::span<Param* const> params);
// Loads flat arrays back into matching params; throws on missing key or size
// mismatch. Returns the meta map.
std::vector<std::pair<std::string, std::string>> load_params_json(
    const std::string& path, std::span<Param* const> params);

}  // namespace sdgg
