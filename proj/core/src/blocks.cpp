#include "sdgg/blocks.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace sdgg {

void glorot_init(Param& p, Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(p.shape.rows + p.shape.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : p.value) v = dist(rng);
}

Tensor GinLayer::forward(Tape& t, const Tensor& H, const Tensor& A) {
    if (H.shape().cols != a1.W.shape.rows)
        throw ShapeError("gin layer: input width " + H.shape().str() +
                         " vs expected " + std::to_string(a1.W.shape.rows));
    Tensor pre = add(H, matmul(A, H));  // (1 + eps0) * H + A*H, eps0 = 0
    Tensor h = relu(a1.forward(t, pre));
    Tensor out = a2.forward(t, h);
    return final_relu ? relu(out) : out;
}

std::vector<Param*> GinLayer::params() {
    return {&a1.W, &a1.b, &a2.W, &a2.b};
}

GraphEncoder::GraphEncoder(const std::string& name, std::size_t input_dim_,
                           std::size_t K, std::size_t agg_dim_)
    : input_dim(input_dim_), agg_dim(agg_dim_) {
    for (std::size_t k = 0; k < K; ++k) {
        std::size_t in = (k == 0) ? input_dim : agg_dim;
        layers.emplace_back(name + ".gin" + std::to_string(k), in, agg_dim,
                            agg_dim);
    }
}

void GraphEncoder::init(Rng& rng) {
    for (auto& l : layers) l.init(rng);
}

std::vector<Tensor> GraphEncoder::forward_layers(Tape& t, const Tensor& X,
                                                 const Tensor& A) {
    std::vector<Tensor> per_layer;
    Tensor h = X;
    for (auto& l : layers) {
        h = l.forward(t, h, A);
        per_layer.push_back(h);
    }
    return per_layer;
}

Tensor graph_readout(const std::vector<Tensor>& per_layer) {
    if (per_layer.empty())
        throw ShapeError("graph_readout: empty layer list");
    Tensor cat = per_layer[0];
    for (std::size_t k = 1; k < per_layer.size(); ++k)
        cat = concat_cols(cat, per_layer[k]);
    return colwise_max(cat);
}

Tensor GraphEncoder::embed(Tape& t, const Tensor& X, const Tensor& A) {
    return graph_readout(forward_layers(t, X, A));
}

std::vector<Param*> GraphEncoder::params() {
    std::vector<Param*> ps;
    for (auto& l : layers)
        for (Param* p : l.params()) ps.push_back(p);
    return ps;
}

Tensor ScoreHead::score(Tape& t, const Tensor& embedding) {
    Tensor s = out.forward(t, embedding);
    return sigmoid_out ? sigmoid(s) : s;
}

Tensor graph_tensor_features(Tape& t, const Graph& g) {
    return t.constant({g.node_count, g.feature_dim}, g.features);
}

Tensor graph_tensor_adjacency(Tape& t, const Graph& g) {
    return t.constant({g.node_count, g.node_count}, g.adjacency);
}

double score_graph(GraphEncoder& enc, ScoreHead& head, const Graph& g) {
    Tape t;
    Tensor X = graph_tensor_features(t, g);
    Tensor A = graph_tensor_adjacency(t, g);
    return head.score(t, enc.embed(t, X, A)).scalar();
}

namespace {

// elementwise mask that zeroes the diagonal
Tensor offdiag_mask(Tape& t, std::size_t n) {
    std::vector<double> m(n * n, 1.0);
    for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 0.0;
    return t.constant({n, n}, std::move(m));
}

Tensor symmetrize_zero_diag(Tape& t, const Tensor& A) {
    std::size_t n = A.shape().rows;
    Tensor sym = scalar_mul(add(A, transpose(A)), 0.5);
    return mul(sym, offdiag_mask(t, n));
}

}  // namespace

GeneratedGraph MlpGenerator::generate(Tape& t, const Tensor& Z) {
    Tensor X = a2.forward(t, relu(a1.forward(t, Z)));
    Tensor A = symmetrize_zero_diag(t, sigmoid(matmul(X, transpose(X))));
    return {X, A};
}

std::vector<Param*> MlpGenerator::params() {
    return {&a1.W, &a1.b, &a2.W, &a2.b};
}

Vgae::Vgae(const std::string& name, std::size_t input_dim, std::size_t K,
           std::size_t agg_dim, std::size_t latent_dim_, bool has_decoder_,
           std::size_t output_dim)
    : encoder(name + ".enc", input_dim, K, agg_dim),
      mu_head(name + ".mu", agg_dim, agg_dim, latent_dim_, false),
      logsigma_head(name + ".logsigma", agg_dim, agg_dim, latent_dim_, false),
      has_decoder(has_decoder_), latent_dim(latent_dim_) {
    if (has_decoder) {
        dec1 = Affine(name + ".dec1", latent_dim, agg_dim);
        dec2 = Affine(name + ".dec2", agg_dim, output_dim);
    }
}

void Vgae::init(Rng& rng) {
    encoder.init(rng);
    mu_head.init(rng);
    logsigma_head.init(rng);
    if (has_decoder) {
        dec1.init(rng);
        dec2.init(rng);
    }
}

VgaeEncoding Vgae::encode(Tape& t, const Tensor& X, const Tensor& A) {
    // node-level hidden features (pre-readout) feed the latent heads
    Tensor H = encoder.forward_layers(t, X, A).back();
    Tensor mu = mu_head.forward(t, H, A);
    Tensor sigma = exp(logsigma_head.forward(t, H, A));
    return {mu, sigma};
}

Tensor Vgae::decode_features(Tape& t, const Tensor& Z) {
    if (!has_decoder)
        throw std::logic_error("decode_features on a decoder-less VGAE");
    return dec2.forward(t, relu(dec1.forward(t, Z)));
}

std::vector<Param*> Vgae::params() {
    std::vector<Param*> ps = encoder.params();
    for (Param* p : mu_head.params()) ps.push_back(p);
    for (Param* p : logsigma_head.params()) ps.push_back(p);
    if (has_decoder) {
        for (Param* p : dec1.params()) ps.push_back(p);
        for (Param* p : dec2.params()) ps.push_back(p);
    }
    return ps;
}

Tensor reparameterize(const VgaeEncoding& enc, const Tensor& noise) {
    if (!(enc.mu.shape() == noise.shape()))
        throw ShapeError("reparameterize: mu " + enc.mu.shape().str() +
                         " vs noise " + noise.shape().str());
    return add(enc.mu, mul(noise, enc.sigma));
}

Tensor decode_adjacency(Tape& t, const Tensor& Z) {
    return symmetrize_zero_diag(t, sigmoid(matmul(Z, transpose(Z))));
}

VgaePair::VgaePair(std::size_t input_dim, std::size_t K, std::size_t agg_dim,
                   std::size_t latent_dim)
    : node_vgae("node_vgae", input_dim, K, agg_dim, latent_dim, true, input_dim),
      edge_vgae("edge_vgae", input_dim, K, agg_dim, latent_dim, false) {}

void VgaePair::init(Rng& rng) {
    node_vgae.init(rng);
    edge_vgae.init(rng);
}

std::vector<Param*> VgaePair::params() {
    std::vector<Param*> ps = node_vgae.params();
    for (Param* p : edge_vgae.params()) ps.push_back(p);
    return ps;
}

VgaePair::Result VgaePair::perturb(Tape& t, const Tensor& X, const Tensor& A,
                                   Rng& rng, bool deterministic) {
    VgaeEncoding ne = node_vgae.encode(t, X, A);
    VgaeEncoding ee = edge_vgae.encode(t, X, A);
    Tensor zn, ze;
    if (deterministic) {
        zn = ne.mu;
        ze = ee.mu;
    } else {
        std::normal_distribution<double> gauss(0.0, 1.0);
        auto draw = [&](Shape s) {
            std::vector<double> v(s.size());
            for (double& x : v) x = gauss(rng);
            return t.constant(s, std::move(v));
        };
        zn = reparameterize(ne, draw(ne.mu.shape()));
        ze = reparameterize(ee, draw(ee.mu.shape()));
    }
    GeneratedGraph g{node_vgae.decode_features(t, zn), decode_adjacency(t, ze)};
    return {g, ne, ee};
}

VgaePair::Result VgaePair::perturb_with_noise(Tape& t, const Tensor& X,
                                              const Tensor& A,
                                              const std::vector<double>& noise_node,
                                              const std::vector<double>& noise_edge) {
    VgaeEncoding ne = node_vgae.encode(t, X, A);
    VgaeEncoding ee = edge_vgae.encode(t, X, A);
    if (noise_node.size() != ne.mu.shape().size() ||
        noise_edge.size() != ee.mu.shape().size())
        throw ShapeError("perturb_with_noise: noise size mismatch");
    Tensor zn = reparameterize(ne, t.constant(ne.mu.shape(), noise_node));
    Tensor ze = reparameterize(ee, t.constant(ee.mu.shape(), noise_edge));
    GeneratedGraph g{node_vgae.decode_features(t, zn), decode_adjacency(t, ze)};
    return {g, ne, ee};
}

void save_params_json(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& meta,
                      std::span<Param* const> params) {
    nlohmann::json j;
    for (const auto& [k, v] : meta) j["meta"][k] = v;
    for (const Param* p : params)
        j["params"][p->name] = p->value;
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump(2) << "\n";
}

std::vector<std::pair<std::string, std::string>> load_params_json(
    const std::string& path, std::span<Param* const> params) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read checkpoint: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    for (Param* p : params) {
        if (!j["params"].contains(p->name))
            throw std::runtime_error("checkpoint missing param: " + p->name);
        auto v = j["params"][p->name].get<std::vector<double>>();
        if (v.size() != p->value.size())
            throw std::runtime_error("checkpoint size mismatch for " + p->name);
        p->value = std::move(v);
    }
    std::vector<std::pair<std::string, std::string>> meta;
    if (j.contains("meta"))
        for (auto& [k, v] : j["meta"].items())
            meta.emplace_back(k, v.get<std::string>());
    return meta;
}

}  // namespace sdgg
