#include "sdgg/training.hpp"

#include <chrono>
#include <cmath>

#include "json.hpp"
#include "sdgg/metrics.hpp"

namespace sdgg {

std::string method_name(Method m) {
    switch (m) {
        case Method::ATI: return "ATI";
        case Method::ATII: return "ATII";
        case Method::NAT: return "NAT";
    }
    return "?";
}

Method method_from_name(const std::string& s) {
    if (s == "ATI" || s == "ati") return Method::ATI;
    if (s == "ATII" || s == "atii") return Method::ATII;
    if (s == "NAT" || s == "nat") return Method::NAT;
    throw std::invalid_argument("unknown method: " + s);
}

void TrainConfig::validate() const {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
    if (method != Method::NAT && clip <= 0.0)
        throw std::invalid_argument("clip must be > 0 for ATI/ATII");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (K < 1) throw std::invalid_argument("K must be >= 1");
}

void Optimizer::step(std::span<Param* const> params) {
    constexpr double eps = 1e-8;
    ++t_;
    for (Param* p : params) {
        State& st = state_[p];
        if (st.acc.empty()) {
            st.acc.assign(p->value.size(), 0.0);
            if (kind_ == OptimizerKind::Adam) st.m.assign(p->value.size(), 0.0);
        }
        if (kind_ == OptimizerKind::RmsProp) {
            for (std::size_t k = 0; k < p->value.size(); ++k) {
                double g = p->grad[k];
                st.acc[k] = 0.99 * st.acc[k] + 0.01 * g * g;
                p->value[k] -= lr_ * g / (std::sqrt(st.acc[k]) + eps);
            }
        } else {
            double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t_));
            double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t_));
            for (std::size_t k = 0; k < p->value.size(); ++k) {
                double g = p->grad[k];
                st.m[k] = 0.9 * st.m[k] + 0.1 * g;
                st.acc[k] = 0.999 * st.acc[k] + 0.001 * g * g;
                double mhat = st.m[k] / bc1;
                double vhat = st.acc[k] / bc2;
                p->value[k] -= lr_ * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }
}

void clip_params(std::span<Param* const> params, double c) {
    for (Param* p : params)
        for (double& v : p->value) v = std::clamp(v, -c, c);
}

namespace {

constexpr double kProbClamp = 1e-7;

void zero_grads(std::span<Param* const> params) {
    for (Param* p : params) p->zero_grad();
}

}  // namespace

Tensor discrepancy_loss(Tape& t, const std::vector<Tensor>& real_X,
                        const std::vector<Tensor>& real_A,
                        const std::vector<GeneratedGraph>& generated) {
    if (real_X.size() != generated.size() || real_A.size() != generated.size())
        throw ShapeError("discrepancy_loss: list length mismatch");
    Tensor total = t.constant_scalar(0.0);
    for (std::size_t i = 0; i < generated.size(); ++i) {
        if (!(real_X[i].shape() == generated[i].X.shape()))
            throw ShapeError("discrepancy_loss: X " + real_X[i].shape().str() +
                             " vs " + generated[i].X.shape().str());
        Tensor attr = frobenius_sq(sub(real_X[i], generated[i].X));
        Tensor p = clamp(generated[i].A, kProbClamp, 1.0 - kProbClamp);
        Tensor bce = mean(add(mul(real_A[i], log(p)),
                              mul(scalar_add(neg(real_A[i]), 1.0),
                                  log(scalar_add(neg(p), 1.0)))));
        total = add(total, sub(attr, bce));
    }
    return scalar_mul(total, 1.0 / static_cast<double>(generated.size()));
}

Tensor kl_loss(const VgaeEncoding& enc) {
    const Tensor& mu = enc.mu;
    const Tensor& sigma = enc.sigma;
    for (double s : sigma.value())
        if (!(s > 0.0))
            throw TensorDomainError("kl_loss: sigma must be positive");
    Tensor inner = scalar_add(
        sub(add(mul(mu, mu), mul(sigma, sigma)), scalar_mul(log(sigma), 2.0)),
        -1.0);
    return scalar_mul(mean(inner), 0.5);
}

Tensor bce_loss(Tape& t, const Tensor& prob, double target) {
    Tensor p = clamp(prob, kProbClamp, 1.0 - kProbClamp);
    if (target == 1.0) return neg(mean(log(p)));
    if (target == 0.0) return neg(mean(log(scalar_add(neg(p), 1.0))));
    (void)t;
    throw std::invalid_argument("bce_loss: target must be 0 or 1");
}

// --- trained model ----------------------------------------------------------

std::vector<Param*> TrainedModel::discriminator_params() {
    std::vector<Param*> ps = encoder.params();
    for (Param* p : head.params()) ps.push_back(p);
    return ps;
}

std::vector<Param*> TrainedModel::generator_params() {
    if (mlp_generator) return mlp_generator->params();
    if (vgae) return vgae->params();
    return {};
}

std::vector<Param*> TrainedModel::all_params() {
    std::vector<Param*> ps = discriminator_params();
    for (Param* p : generator_params()) ps.push_back(p);
    return ps;
}

double TrainedModel::anomaly_score(const Graph& g) {
    if (g.feature_dim != feature_dim)
        throw ShapeError("anomaly_score: feature width " +
                         std::to_string(g.feature_dim) + " vs model " +
                         std::to_string(feature_dim));
    double s = score_graph(encoder, head, g);
    return cfg.method == Method::NAT ? s : -s;
}

void TrainedModel::save_checkpoint(const std::string& path) {
    std::vector<std::pair<std::string, std::string>> meta = {
        {"method", method_name(cfg.method)},
        {"feature_dim", std::to_string(feature_dim)},
        {"K", std::to_string(cfg.K)},
        {"agg_dim", std::to_string(cfg.agg_dim)},
        {"latent_dim", std::to_string(cfg.latent_dim)},
        {"deterministic_generator",
         cfg.deterministic_generator ? "1" : "0"},
    };
    auto ps = all_params();
    save_params_json(path, meta, ps);
}

namespace {

TrainedModel build_model(const TrainConfig& cfg, std::size_t feature_dim) {
    TrainedModel m;
    m.cfg = cfg;
    m.feature_dim = feature_dim;
    m.encoder = GraphEncoder("disc.enc", feature_dim, cfg.K, cfg.agg_dim);
    m.head = ScoreHead("disc.head", m.encoder.embed_dim(),
                       cfg.method == Method::NAT);
    if (cfg.method == Method::ATI)
        m.mlp_generator = MlpGenerator("gen", cfg.latent_dim, cfg.agg_dim,
                                       feature_dim);
    else
        m.vgae = VgaePair(feature_dim, cfg.K, cfg.agg_dim, cfg.latent_dim);
    return m;
}

}  // namespace

TrainedModel TrainedModel::load_checkpoint(const std::string& path) {
    // first pass to read meta, second to fill params
    std::vector<Param*> none;
    auto meta = load_params_json(path, none);
    auto get = [&](const std::string& key) -> std::string {
        for (auto& [k, v] : meta)
            if (k == key) return v;
        throw std::runtime_error("checkpoint missing meta key: " + key);
    };
    TrainConfig cfg;
    cfg.method = method_from_name(get("method"));
    cfg.K = std::stoul(get("K"));
    cfg.agg_dim = std::stoul(get("agg_dim"));
    cfg.latent_dim = std::stoul(get("latent_dim"));
    cfg.deterministic_generator = get("deterministic_generator") == "1";
    std::size_t feature_dim = std::stoul(get("feature_dim"));
    TrainedModel m = build_model(cfg, feature_dim);
    auto ps = m.all_params();
    load_params_json(path, ps);
    return m;
}

// --- training loops ---------------------------------------------------------

namespace {

struct BatchIterator {
    std::vector<std::size_t> order;
    std::size_t batch_size;

    BatchIterator(std::size_t n, std::size_t bs, Rng& rng) : batch_size(bs) {
        order.resize(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
    }
    template <typename F>
    void for_each_batch(F&& f) const {
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            std::size_t end = std::min(order.size(), start + batch_size);
            f(std::span<const std::size_t>(order.data() + start, end - start));
        }
    }
};

Tensor gaussian_constant(Tape& t, Shape s, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(s.size());
    for (double& x : v) x = gauss(rng);
    return t.constant(s, std::move(v));
}

double epoch_test_auc(TrainedModel& m,
                      const std::vector<std::pair<Graph, int>>& test) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& [g, y] : test) {
        scores.push_back(m.anomaly_score(g));
        labels.push_back(y);
    }
    return roc_auc(scores, labels);
}

void emit_log(std::ostream* log, const EpochRecord& r, Method method) {
    if (!log) return;
    nlohmann::json j;
    j["epoch"] = r.epoch;
    if (method == Method::NAT) {
        j["total_loss"] = r.total_loss;
    } else {
        j["generator_loss"] = r.generator_loss;
        j["critic_loss"] = r.critic_loss;
    }
    if (r.test_auc >= 0.0) j["test_auc"] = r.test_auc;
    j["wall_seconds"] = r.wall_seconds;
    (*log) << j.dump() << "\n";
}

// Shared skeleton of the two adversarial loops; `make_fakes` produces the
// generated batch (and any generator-side penalty terms) on the given tape.
// `model` stays owned by the caller: the make_fakes closures reference it.
template <typename MakeFakes, typename GenPenalty>
void train_adversarial(const Split& split, const TrainConfig& cfg,
                       const TrainOptions& opts, MakeFakes&& make_fakes,
                       GenPenalty&& gen_penalty, TrainedModel& model,
                       Rng& rng) {
    const auto& train = split.train;
    Optimizer opt_gen(cfg.optimizer, cfg.lr);
    Optimizer opt_disc(cfg.optimizer, cfg.lr);
    auto gen_params = model.generator_params();
    auto disc_params = model.discriminator_params();

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        double gen_loss_sum = 0.0, disc_loss_sum = 0.0;
        std::size_t n_batches = 0;
        BatchIterator batches(train.size(), cfg.batch_size, rng);
        batches.for_each_batch([&](std::span<const std::size_t> idx) {
            double inv_m = 1.0 / static_cast<double>(idx.size());

            // generator step (discriminator frozen)
            {
                Tape t;
                std::vector<Tensor> rX, rA;
                std::vector<GeneratedGraph> fakes =
                    make_fakes(t, idx, rX, rA);
                Tensor fake_sum = t.constant_scalar(0.0);
                for (const auto& f : fakes)
                    fake_sum = add(fake_sum,
                                   model.head.score(t, model.encoder.embed(
                                                           t, f.X, f.A)));
                Tensor loss = scalar_mul(fake_sum, -inv_m);
                loss = gen_penalty(t, loss, rX, rA, fakes);
                zero_grads(std::span<Param* const>(gen_params));
                zero_grads(std::span<Param* const>(disc_params));
                t.backward(loss);
                opt_gen.step(std::span<Param* const>(gen_params));
                gen_loss_sum += loss.scalar();
            }

            // critic step (generator frozen), fresh noise
            {
                Tape t;
                std::vector<Tensor> rX, rA;
                std::vector<GeneratedGraph> fakes =
                    make_fakes(t, idx, rX, rA);
                Tensor real_sum = t.constant_scalar(0.0);
                for (std::size_t j = 0; j < idx.size(); ++j) {
                    Tensor X = graph_tensor_features(t, train[idx[j]]);
                    Tensor A = graph_tensor_adjacency(t, train[idx[j]]);
                    real_sum = add(real_sum,
                                   model.head.score(
                                       t, model.encoder.embed(t, X, A)));
                }
                Tensor fake_sum = t.constant_scalar(0.0);
                for (const auto& f : fakes)
                    fake_sum = add(fake_sum,
                                   model.head.score(t, model.encoder.embed(
                                                           t, f.X, f.A)));
                Tensor loss = add(scalar_mul(real_sum, -inv_m),
                                  scalar_mul(fake_sum, inv_m));
                zero_grads(std::span<Param* const>(gen_params));
                zero_grads(std::span<Param* const>(disc_params));
                t.backward(loss);
                opt_disc.step(std::span<Param* const>(disc_params));
                clip_params(std::span<Param* const>(disc_params), cfg.clip);
                if (opts.after_critic_step)
                    opts.after_critic_step(
                        std::span<Param* const>(disc_params));
                disc_loss_sum += loss.scalar();
            }
            ++n_batches;
        });

        EpochRecord rec;
        rec.epoch = epoch;
        rec.generator_loss = gen_loss_sum / static_cast<double>(n_batches);
        rec.critic_loss = disc_loss_sum / static_cast<double>(n_batches);
        if (opts.eval_test) rec.test_auc = epoch_test_auc(model, *opts.eval_test);
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        emit_log(opts.log, rec, cfg.method);
        model.history.push_back(rec);
    }
}

}  // namespace

TrainedModel train_ati(const Split& split, const TrainConfig& cfg,
                       const TrainOptions& opts) {
    if (cfg.method != Method::ATI)
        throw std::invalid_argument("train_ati: cfg.method must be ATI");
    cfg.validate();
    if (split.train.empty())
        throw std::invalid_argument("train_ati: empty training set");

    Rng rng(cfg.seed);
    TrainedModel model = build_model(cfg, split.train[0].feature_dim);
    if (model.mlp_generator) model.mlp_generator->init(rng);
    model.encoder.init(rng);
    model.head.init(rng);

    // fake graph sizes are drawn from the multiset of training sizes
    std::vector<std::size_t> sizes;
    for (const auto& g : split.train) sizes.push_back(g.node_count);
    std::uniform_int_distribution<std::size_t> pick(0, sizes.size() - 1);

    auto make_fakes = [&](Tape& t, std::span<const std::size_t> idx,
                          std::vector<Tensor>&, std::vector<Tensor>&) {
        std::vector<GeneratedGraph> fakes;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            std::size_t n = sizes[pick(rng)];
            Tensor Z = gaussian_constant(t, {n, cfg.latent_dim}, rng);
            fakes.push_back(model.mlp_generator->generate(t, Z));
        }
        return fakes;
    };
    auto no_penalty = [](Tape&, Tensor loss, const std::vector<Tensor>&,
                         const std::vector<Tensor>&,
                         const std::vector<GeneratedGraph>&) { return loss; };
    train_adversarial(split, cfg, opts, make_fakes, no_penalty, model, rng);
    return model;
}

namespace {

// Perturbs each batch graph through the VGAE pair; returns fakes and collects
// real tensors plus the per-batch KL term.
struct VgaeBatch {
    std::vector<GeneratedGraph> fakes;
    Tensor kl;  // mean over the batch of the node/edge KL average
};

VgaeBatch vgae_perturb_batch(Tape& t, VgaePair& vgae,
                             const std::vector<Graph>& train,
                             std::span<const std::size_t> idx, Rng& rng,
                             bool deterministic, std::vector<Tensor>& rX,
                             std::vector<Tensor>& rA) {
    VgaeBatch out;
    Tensor kl_sum = t.constant_scalar(0.0);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        Tensor X = graph_tensor_features(t, train[idx[j]]);
        Tensor A = graph_tensor_adjacency(t, train[idx[j]]);
        rX.push_back(X);
        rA.push_back(A);
        auto res = vgae.perturb(t, X, A, rng, deterministic);
        out.fakes.push_back(res.graph);
        kl_sum = add(kl_sum, scalar_mul(add(kl_loss(res.node_enc),
                                            kl_loss(res.edge_enc)),
                                        0.5));
    }
    out.kl = scalar_mul(kl_sum, 1.0 / static_cast<double>(idx.size()));
    return out;
}

}  // namespace

TrainedModel train_atii(const Split& split, const TrainConfig& cfg,
                        const TrainOptions& opts) {
    if (cfg.method != Method::ATII)
        throw std::invalid_argument("train_atii: cfg.method must be ATII");
    cfg.validate();
    if (split.train.empty())
        throw std::invalid_argument("train_atii: empty training set");

    Rng rng(cfg.seed);
    TrainedModel model = build_model(cfg, split.train[0].feature_dim);
    if (model.vgae) model.vgae->init(rng);
    model.encoder.init(rng);
    model.head.init(rng);

    // stashed per generator step so the penalty sees the same KL term
    Tensor pending_kl;

    auto make_fakes = [&](Tape& t, std::span<const std::size_t> idx,
                          std::vector<Tensor>& rX, std::vector<Tensor>& rA) {
        VgaeBatch b = vgae_perturb_batch(t, *model.vgae, split.train, idx, rng,
                                         cfg.deterministic_generator, rX, rA);
        pending_kl = b.kl;
        return b.fakes;
    };
    auto penalty = [&](Tape& t, Tensor loss, const std::vector<Tensor>& rX,
                       const std::vector<Tensor>& rA,
                       const std::vector<GeneratedGraph>& fakes) {
        if (cfg.lambda != 0.0)
            loss = add(loss, scalar_mul(discrepancy_loss(t, rX, rA, fakes),
                                        cfg.lambda));
        if (cfg.gamma != 0.0)
            loss = add(loss, scalar_mul(pending_kl, cfg.gamma));
        return loss;
    };
    train_adversarial(split, cfg, opts, make_fakes, penalty, model, rng);
    return model;
}

TrainedModel train_nat(const Split& split, const TrainConfig& cfg,
                       const TrainOptions& opts) {
    if (cfg.method != Method::NAT)
        throw std::invalid_argument("train_nat: cfg.method must be NAT");
    cfg.validate();
    if (split.train.empty())
        throw std::invalid_argument("train_nat: empty training set");

    Rng rng(cfg.seed);
    TrainedModel model = build_model(cfg, split.train[0].feature_dim);
    if (model.vgae) model.vgae->init(rng);
    model.encoder.init(rng);
    model.head.init(rng);

    Optimizer opt(cfg.optimizer, cfg.lr);
    auto all_params = model.all_params();

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        BatchIterator batches(split.train.size(), cfg.batch_size, rng);
        batches.for_each_batch([&](std::span<const std::size_t> idx) {
            Tape t;
            std::vector<Tensor> rX, rA;
            VgaeBatch b = vgae_perturb_batch(t, *model.vgae, split.train, idx,
                                             rng, cfg.deterministic_generator,
                                             rX, rA);
            // classification: label 0 for normal graphs, 1 for generated
            Tensor cls_sum = t.constant_scalar(0.0);
            for (std::size_t j = 0; j < idx.size(); ++j) {
                Tensor real_p = model.head.score(
                    t, model.encoder.embed(t, rX[j], rA[j]));
                Tensor fake_p = model.head.score(
                    t, model.encoder.embed(t, b.fakes[j].X, b.fakes[j].A));
                cls_sum = add(cls_sum, add(bce_loss(t, real_p, 0.0),
                                           bce_loss(t, fake_p, 1.0)));
            }
            Tensor loss =
                scalar_mul(cls_sum, 1.0 / static_cast<double>(idx.size()));
            if (cfg.lambda != 0.0)
                loss = add(loss, scalar_mul(discrepancy_loss(t, rX, rA, b.fakes),
                                            cfg.lambda));
            if (cfg.gamma != 0.0)
                loss = add(loss, scalar_mul(b.kl, cfg.gamma));
            zero_grads(std::span<Param* const>(all_params));
            t.backward(loss);
            opt.step(std::span<Param* const>(all_params));
            loss_sum += loss.scalar();
            ++n_batches;
        });

        EpochRecord rec;
        rec.epoch = epoch;
        rec.total_loss = loss_sum / static_cast<double>(n_batches);
        if (opts.eval_test) rec.test_auc = epoch_test_auc(model, *opts.eval_test);
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        emit_log(opts.log, rec, cfg.method);
        model.history.push_back(rec);
    }
    return model;
}

TrainedModel train_model(const Split& split, const TrainConfig& cfg,
                         const TrainOptions& opts) {
    switch (cfg.method) {
        case Method::ATI: return train_ati(split, cfg, opts);
        case Method::ATII: return train_atii(split, cfg, opts);
        case Method::NAT: return train_nat(split, cfg, opts);
    }
    throw std::invalid_argument("unknown method");
}

}  // namespace sdgg
