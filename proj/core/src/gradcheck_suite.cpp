#include "sdgg/gradcheck_suite.hpp"

#include <random>

#include "sdgg/blocks.hpp"
#include "sdgg/training.hpp"

namespace sdgg {
namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

// Reduces an arbitrary tensor to a scalar with fixed random weights so every
// output entry contributes to the checked gradient.
Tensor weighted(Tape& t, const Tensor& x, const std::vector<double>& w) {
    return sum(mul(x, t.constant(x.shape(), w)));
}

struct Suite {
    double step, tol;
    Rng rng{12345};
    std::vector<GradCheckCase> cases;

    void op_case(const std::string& name, Shape shape, double lo, double hi,
                 const std::function<Tensor(Tape&, const Tensor&)>& f) {
        std::vector<double> point = random_vec(rng, shape.size(), lo, hi);
        cases.push_back({"op/" + name, grad_check(f, shape, point, step, tol)});
    }

    void param_case(const std::string& name,
                    const std::function<Tensor(Tape&)>& loss,
                    const std::vector<Param*>& params) {
        cases.push_back({name, grad_check_params(loss, params, step, tol)});
    }

    // Zero-initialized biases can leave a pre-activation exactly on the relu
    // kink (a dead layer feeds the next bias through unchanged), where the
    // loss is nondifferentiable and central differences are meaningless.
    // Checking at a jittered, generic point avoids that measure-zero set.
    void jitter(const std::vector<Param*>& params) {
        std::uniform_real_distribution<double> u(-0.1, 0.1);
        for (Param* p : params)
            for (double& v : p->value) v += u(rng);
    }
};

void add_op_cases(Suite& s) {
    const Shape m{3, 4};
    std::vector<double> wa = random_vec(s.rng, 12, -1.0, 1.0);
    std::vector<double> wb = random_vec(s.rng, 12, -1.0, 1.0);
    std::vector<double> w33 = random_vec(s.rng, 9, -1.0, 1.0);
    std::vector<double> w1c = random_vec(s.rng, 4, -1.0, 1.0);

    s.op_case("matmul", m, -1.0, 1.0, [&, B = random_vec(s.rng, 12, -1.0, 1.0)](
                                          Tape& t, const Tensor& x) {
        return weighted(t, matmul(x, t.constant({4, 3}, B)), w33);
    });
    s.op_case("transpose", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, transpose(x), wa);
    });
    s.op_case("add", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, add(x, t.constant(m, wb)), wa);
    });
    s.op_case("add_row_broadcast", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, add(x, t.constant({1, 4}, w1c)), wa);
    });
    s.op_case("sub", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, sub(x, t.constant(m, wb)), wa);
    });
    s.op_case("neg", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, neg(x), wa);
    });
    s.op_case("scalar_mul", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, scalar_mul(x, 1.7), wa);
    });
    s.op_case("scalar_add", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, scalar_add(x, -0.3), wa);
    });
    s.op_case("mul", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, mul(x, t.constant(m, wb)), wa);
    });
    // kept away from the kink / clamp edges so central differences are valid
    s.op_case("relu", m, 0.05, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, relu(x), wa);
    });
    s.op_case("sigmoid", m, -2.0, 2.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, sigmoid(x), wa);
    });
    s.op_case("exp", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, exp(x), wa);
    });
    s.op_case("log", m, 0.2, 2.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, log(x), wa);
    });
    s.op_case("sum", m, -1.0, 1.0, [](Tape&, const Tensor& x) { return sum(x); });
    s.op_case("mean", m, -1.0, 1.0, [](Tape&, const Tensor& x) { return mean(x); });
    std::vector<double> w2m = random_vec(s.rng, 24, -1.0, 1.0);
    s.op_case("concat_rows", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, concat_rows(x, t.constant(m, wb)), w2m);
    });
    s.op_case("concat_cols", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, concat_cols(x, t.constant(m, wb)), w2m);
    });
    s.op_case("colwise_max", m, -1.0, 1.0, [&](Tape& t, const Tensor& x) {
        return weighted(t, colwise_max(x), w1c);
    });
    s.op_case("frobenius_sq", m, -1.0, 1.0,
              [](Tape&, const Tensor& x) { return frobenius_sq(x); });
    s.op_case("clamp", m, -0.4, 0.4, [&](Tape& t, const Tensor& x) {
        return weighted(t, clamp(x, -0.5, 0.5), wa);
    });
}

struct ToyGraph {
    Shape xs, as;
    std::vector<double> X, A;
};

ToyGraph path3() {
    return {{3, 2},
            {3, 3},
            {0.3, -0.7, 1.1, 0.4, -0.2, 0.9},
            {0, 1, 0, 1, 0, 1, 0, 1, 0}};
}

ToyGraph edge2() {
    return {{2, 2}, {2, 2}, {-0.5, 0.8, 0.2, -1.0}, {0, 1, 1, 0}};
}

void add_block_cases(Suite& s) {
    const std::size_t K = 2, agg = 6, latent = 4;
    ToyGraph g = path3();

    {
        GinLayer layer("gin", 2, agg, agg);
        layer.init(s.rng);
        s.jitter(layer.params());
        std::vector<double> w = random_vec(s.rng, 3 * agg, -1.0, 1.0);
        s.param_case(
            "block/gin_layer",
            [&](Tape& t) {
                return weighted(t, layer.forward(t, t.constant(g.xs, g.X),
                                                 t.constant(g.as, g.A)),
                                w);
            },
            layer.params());
    }
    {
        GraphEncoder enc("enc", 2, K, agg);
        enc.init(s.rng);
        s.jitter(enc.params());
        std::vector<double> w = random_vec(s.rng, enc.embed_dim(), -1.0, 1.0);
        s.param_case(
            "block/graph_encoder",
            [&](Tape& t) {
                return weighted(t, enc.embed(t, t.constant(g.xs, g.X),
                                             t.constant(g.as, g.A)),
                                w);
            },
            enc.params());
    }
    for (bool sig : {false, true}) {
        auto head = std::make_shared<ScoreHead>("head", 5, sig);
        head->init(s.rng);
        s.jitter(head->params());
        std::vector<double> e = random_vec(s.rng, 5, -1.0, 1.0);
        s.param_case(
            sig ? "block/score_head_sigmoid" : "block/score_head_linear",
            [head, e](Tape& t) {
                return head->score(t, t.constant({1, 5}, e));
            },
            head->params());
    }
    {
        MlpGenerator gen("gen", latent, agg, 2);
        gen.init(s.rng);
        s.jitter(gen.params());
        std::vector<double> Z = random_vec(s.rng, 3 * latent, -1.0, 1.0);
        std::vector<double> wx = random_vec(s.rng, 6, -1.0, 1.0);
        std::vector<double> wa = random_vec(s.rng, 9, -1.0, 1.0);
        s.param_case(
            "block/mlp_generator",
            [&](Tape& t) {
                GeneratedGraph gg = gen.generate(t, t.constant({3, latent}, Z));
                return add(weighted(t, gg.X, wx), weighted(t, gg.A, wa));
            },
            gen.params());
    }
    {
        Vgae vgae("nv", 2, K, agg, latent, true, 2);
        vgae.init(s.rng);
        s.jitter(vgae.params());
        std::vector<double> wm = random_vec(s.rng, 3 * latent, -1.0, 1.0);
        std::vector<double> ws = random_vec(s.rng, 3 * latent, -1.0, 1.0);
        s.param_case(
            "block/vgae_encode",
            [&](Tape& t) {
                VgaeEncoding e = vgae.encode(t, t.constant(g.xs, g.X),
                                             t.constant(g.as, g.A));
                return add(weighted(t, e.mu, wm), weighted(t, e.sigma, ws));
            },
            vgae.params());
        s.param_case(
            "loss/kl", [&](Tape& t) {
                return kl_loss(vgae.encode(t, t.constant(g.xs, g.X),
                                           t.constant(g.as, g.A)));
            },
            vgae.params());
    }
    {
        VgaePair pair(2, K, agg, latent);
        pair.init(s.rng);
        s.jitter(pair.params());
        std::vector<double> nn = random_vec(s.rng, 3 * latent, -1.0, 1.0);
        std::vector<double> ne = random_vec(s.rng, 3 * latent, -1.0, 1.0);
        std::vector<double> wx = random_vec(s.rng, 6, -1.0, 1.0);
        std::vector<double> wa = random_vec(s.rng, 9, -1.0, 1.0);
        s.param_case(
            "block/vgae_pair_perturb",
            [&](Tape& t) {
                auto r = pair.perturb_with_noise(t, t.constant(g.xs, g.X),
                                                 t.constant(g.as, g.A), nn, ne);
                return add(weighted(t, r.graph.X, wx),
                           weighted(t, r.graph.A, wa));
            },
            pair.params());
        s.param_case(
            "loss/discrepancy",
            [&](Tape& t) {
                Tensor X = t.constant(g.xs, g.X);
                Tensor A = t.constant(g.as, g.A);
                auto r = pair.perturb_with_noise(t, X, A, nn, ne);
                return discrepancy_loss(t, {X}, {A}, {r.graph});
            },
            pair.params());
    }
}

void add_loss_cases(Suite& s) {
    const std::size_t K = 2, agg = 6, latent = 4;
    ToyGraph g1 = path3(), g2 = edge2();

    GraphEncoder disc_enc("d.enc", 2, K, agg);
    disc_enc.init(s.rng);
    s.jitter(disc_enc.params());
    ScoreHead critic("d.head", disc_enc.embed_dim(), false);
    critic.init(s.rng);
    s.jitter(critic.params());
    ScoreHead classifier("c.head", disc_enc.embed_dim(), true);
    classifier.init(s.rng);
    s.jitter(classifier.params());

    auto disc_params = [&](ScoreHead& h) {
        std::vector<Param*> p = disc_enc.params();
        for (Param* q : h.params()) p.push_back(q);
        return p;
    };
    auto critic_score = [&](Tape& t, const Tensor& X, const Tensor& A,
                            ScoreHead& h) {
        return h.score(t, disc_enc.embed(t, X, A));
    };

    {
        MlpGenerator gen("g", latent, agg, 2);
        gen.init(s.rng);
        s.jitter(gen.params());
        std::vector<double> Z1 = random_vec(s.rng, 3 * latent, -1.0, 1.0);
        std::vector<double> Z2 = random_vec(s.rng, 2 * latent, -1.0, 1.0);
        auto fakes = [&](Tape& t) {
            return std::vector<GeneratedGraph>{
                gen.generate(t, t.constant({3, latent}, Z1)),
                gen.generate(t, t.constant({2, latent}, Z2))};
        };
        auto gen_loss = [&](Tape& t) {
            Tensor acc = t.constant_scalar(0.0);
            for (const GeneratedGraph& f : fakes(t))
                acc = add(acc, critic_score(t, f.X, f.A, critic));
            return scalar_mul(acc, -0.5);
        };
        std::vector<Param*> all = gen.params();
        for (Param* p : disc_params(critic)) all.push_back(p);
        s.param_case("loss/noise_generator_full", gen_loss, all);

        auto critic_loss = [&](Tape& t) {
            Tensor real = add(
                critic_score(t, t.constant(g1.xs, g1.X), t.constant(g1.as, g1.A),
                             critic),
                critic_score(t, t.constant(g2.xs, g2.X), t.constant(g2.as, g2.A),
                             critic));
            Tensor fake = t.constant_scalar(0.0);
            for (const GeneratedGraph& f : fakes(t))
                fake = add(fake, critic_score(t, f.X, f.A, critic));
            return scalar_mul(sub(fake, real), 0.5);
        };
        s.param_case("loss/critic_full", critic_loss, all);
    }
    {
        VgaePair pair(2, K, agg, latent);
        pair.init(s.rng);
        s.jitter(pair.params());
        std::vector<double> nn1 = random_vec(s.rng, 3 * latent, -1.0, 1.0);
        std::vector<double> ne1 = random_vec(s.rng, 3 * latent, -1.0, 1.0);
        std::vector<double> nn2 = random_vec(s.rng, 2 * latent, -1.0, 1.0);
        std::vector<double> ne2 = random_vec(s.rng, 2 * latent, -1.0, 1.0);
        const double lambda = 1.0, gamma = 1e-2;

        auto batch = [&](Tape& t, std::vector<Tensor>& X, std::vector<Tensor>& A,
                         std::vector<GeneratedGraph>& fakes, Tensor& kl) {
            X = {t.constant(g1.xs, g1.X), t.constant(g2.xs, g2.X)};
            A = {t.constant(g1.as, g1.A), t.constant(g2.as, g2.A)};
            auto r1 = pair.perturb_with_noise(t, X[0], A[0], nn1, ne1);
            auto r2 = pair.perturb_with_noise(t, X[1], A[1], nn2, ne2);
            fakes = {r1.graph, r2.graph};
            kl = scalar_mul(
                add(add(kl_loss(r1.node_enc), kl_loss(r1.edge_enc)),
                    add(kl_loss(r2.node_enc), kl_loss(r2.edge_enc))),
                0.5);
        };

        auto atii_gen_loss = [&](Tape& t) {
            std::vector<Tensor> X, A;
            std::vector<GeneratedGraph> fakes;
            Tensor kl;
            batch(t, X, A, fakes, kl);
            Tensor d = t.constant_scalar(0.0);
            for (const GeneratedGraph& f : fakes)
                d = add(d, critic_score(t, f.X, f.A, critic));
            return add(scalar_mul(d, -0.5),
                       add(scalar_mul(discrepancy_loss(t, X, A, fakes), lambda),
                           scalar_mul(kl, gamma)));
        };
        std::vector<Param*> all = pair.params();
        for (Param* p : disc_params(critic)) all.push_back(p);
        s.param_case("loss/perturbation_generator_full", atii_gen_loss, all);

        auto nat_loss = [&](Tape& t) {
            std::vector<Tensor> X, A;
            std::vector<GeneratedGraph> fakes;
            Tensor kl;
            batch(t, X, A, fakes, kl);
            Tensor acc = t.constant_scalar(0.0);
            for (std::size_t i = 0; i < X.size(); ++i) {
                acc = add(acc, bce_loss(t, critic_score(t, X[i], A[i], classifier),
                                        0.0));
                acc = add(acc, bce_loss(t, critic_score(t, fakes[i].X, fakes[i].A,
                                                        classifier),
                                        1.0));
            }
            return add(scalar_mul(acc, 0.5),
                       add(scalar_mul(discrepancy_loss(t, X, A, fakes), lambda),
                           scalar_mul(kl, gamma)));
        };
        std::vector<Param*> nat_params = pair.params();
        for (Param* p : disc_params(classifier)) nat_params.push_back(p);
        s.param_case("loss/joint_full", nat_loss, nat_params);
    }
    {
        auto prob = std::make_shared<ScoreHead>("b.head", 3, true);
        prob->init(s.rng);
        s.jitter(prob->params());
        std::vector<double> e = random_vec(s.rng, 3, -1.0, 1.0);
        for (double target : {0.0, 1.0}) {
            s.param_case(
                target == 0.0 ? "loss/bce_target0" : "loss/bce_target1",
                [prob, e, target](Tape& t) {
                    return bce_loss(t, prob->score(t, t.constant({1, 3}, e)),
                                    target);
                },
                prob->params());
        }
    }
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(double step, double tol) {
    Suite s{step, tol};
    add_op_cases(s);
    add_block_cases(s);
    add_loss_cases(s);
    return s.cases;
}

}  // namespace sdgg
