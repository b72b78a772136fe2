#include "sdgg/synth2d.hpp"

#include <cmath>
#include <cstdio>

#include "sdgg/training.hpp"

namespace sdgg {

std::vector<Point2> gen_sine_data(const SineConfig& cfg) {
    if (!(cfg.a > 0.0)) throw std::invalid_argument("sine: a must be > 0");
    if (!(cfg.z_lo < cfg.z_hi))
        throw std::invalid_argument("sine: z_lo must be < z_hi");
    if (cfg.n_samples < 2)
        throw std::invalid_argument("sine: n_samples must be >= 2");
    Rng rng(cfg.seed);
    std::uniform_real_distribution<double> zdist(cfg.z_lo, cfg.z_hi);
    std::uniform_real_distribution<double> edist(-cfg.a, cfg.a);
    std::vector<Point2> pts(cfg.n_samples);
    for (auto& p : pts) {
        p.z = zdist(rng);
        p.x = std::sin(p.z) + edist(rng);
    }
    return pts;
}

Synth2dModel::Synth2dModel()
    : enc1("vae.enc1", 2, 16), enc_mu("vae.mu", 16, 2),
      enc_logsigma("vae.logsigma", 16, 2), dec1("vae.dec1", 2, 16),
      dec2("vae.dec2", 16, 2), cls1("cls.a1", 2, 16), cls2("cls.a2", 16, 16),
      cls3("cls.a3", 16, 1) {}

void Synth2dModel::init(Rng& rng) {
    for (Affine* a : {&enc1, &enc_mu, &enc_logsigma, &dec1, &dec2, &cls1, &cls2,
                      &cls3})
        a->init(rng);
}

std::vector<Param*> Synth2dModel::vae_params() {
    std::vector<Param*> ps;
    for (Affine* a : {&enc1, &enc_mu, &enc_logsigma, &dec1, &dec2})
        for (Param* p : a->params()) ps.push_back(p);
    return ps;
}

std::vector<Param*> Synth2dModel::classifier_params() {
    std::vector<Param*> ps;
    for (Affine* a : {&cls1, &cls2, &cls3})
        for (Param* p : a->params()) ps.push_back(p);
    return ps;
}

std::vector<Param*> Synth2dModel::all_params() {
    std::vector<Param*> ps = classifier_params();
    for (Param* p : vae_params()) ps.push_back(p);
    return ps;
}

Synth2dModel::VaeOut Synth2dModel::vae_forward(Tape& t, const Tensor& pts,
                                               const Tensor& noise) {
    Tensor h = relu(enc1.forward(t, pts));
    Tensor mu = enc_mu.forward(t, h);
    Tensor sigma = exp(enc_logsigma.forward(t, h));
    Tensor z = add(mu, mul(noise, sigma));
    Tensor rec = dec2.forward(t, relu(dec1.forward(t, z)));
    return {mu, sigma, rec};
}

Tensor Synth2dModel::classify(Tape& t, const Tensor& pts) {
    Tensor h = relu(cls1.forward(t, pts));
    h = relu(cls2.forward(t, h));
    return sigmoid(cls3.forward(t, h));
}

double Synth2dModel::score(double z, double x) {
    Tape t;
    Tensor p = t.constant({1, 2}, {z, x});
    return classify(t, p).scalar();
}

namespace {

Tensor points_tensor(Tape& t, const std::vector<Point2>& points) {
    std::vector<double> v;
    v.reserve(points.size() * 2);
    for (const auto& p : points) {
        v.push_back(p.z);
        v.push_back(p.x);
    }
    return t.constant({points.size(), 2}, std::move(v));
}

constexpr double kProbClamp = 1e-7;

Tensor bce_mean(const Tensor& prob, double target) {
    Tensor p = clamp(prob, kProbClamp, 1.0 - kProbClamp);
    if (target == 1.0) return neg(mean(log(p)));
    return neg(mean(log(scalar_add(neg(p), 1.0))));
}

}  // namespace

Synth2dModel train_2d(const std::vector<Point2>& points,
                      const Train2dOptions& opts) {
    if (points.empty())
        throw std::invalid_argument("train_2d: empty input");
    Rng rng(opts.seed);
    Synth2dModel model;
    model.init(rng);

    Optimizer opt(OptimizerKind::Adam, opts.lr);
    auto params = model.all_params();
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
        Tape t;
        Tensor pts = points_tensor(t, points);
        std::vector<double> nv(points.size() * 2);
        for (double& x : nv) x = gauss(rng);
        Tensor noise = t.constant({points.size(), 2}, std::move(nv));

        auto vae = model.vae_forward(t, pts, noise);
        Tensor real_p = model.classify(t, pts);
        Tensor fake_p = model.classify(t, vae.reconstructed);
        Tensor loss = add(bce_mean(real_p, 0.0), bce_mean(fake_p, 1.0));
        if (opts.lambda != 0.0) {
            Tensor rec = scalar_mul(frobenius_sq(sub(pts, vae.reconstructed)),
                                    1.0 / static_cast<double>(points.size()));
            loss = add(loss, scalar_mul(rec, opts.lambda));
        }
        if (opts.gamma != 0.0) {
            Tensor inner = scalar_add(
                sub(add(mul(vae.mu, vae.mu), mul(vae.sigma, vae.sigma)),
                    scalar_mul(log(vae.sigma), 2.0)),
                -1.0);
            loss = add(loss, scalar_mul(mean(inner), 0.5 * opts.gamma));
        }
        for (Param* p : params) p->zero_grad();
        t.backward(loss);
        opt.step(std::span<Param* const>(params));
    }
    return model;
}

std::vector<GridRow> boundary_grid(Synth2dModel& model, double z_lo, double z_hi,
                                   double x_lo, double x_hi,
                                   std::size_t resolution) {
    if (resolution < 2)
        throw std::invalid_argument("boundary_grid: resolution must be >= 2");
    if (!(z_lo < z_hi) || !(x_lo < x_hi))
        throw std::invalid_argument("boundary_grid: degenerate range");
    std::vector<GridRow> rows;
    rows.reserve(resolution * resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        double z = z_lo + (z_hi - z_lo) * static_cast<double>(i) /
                              static_cast<double>(resolution - 1);
        // evaluate one grid row per tape
        Tape t;
        std::vector<double> v;
        v.reserve(resolution * 2);
        for (std::size_t j = 0; j < resolution; ++j) {
            double x = x_lo + (x_hi - x_lo) * static_cast<double>(j) /
                                  static_cast<double>(resolution - 1);
            v.push_back(z);
            v.push_back(x);
        }
        Tensor pts = t.constant({resolution, 2}, std::move(v));
        Tensor s = model.classify(t, pts);
        for (std::size_t j = 0; j < resolution; ++j) {
            double x = x_lo + (x_hi - x_lo) * static_cast<double>(j) /
                                  static_cast<double>(resolution - 1);
            rows.push_back({z, x, s.value()[j]});
        }
    }
    return rows;
}

void write_boundary_csv(const std::vector<GridRow>& grid,
                        const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + path.string());
    std::fprintf(f, "z,x,score\n");
    for (const auto& r : grid)
        std::fprintf(f, "%.9g,%.9g,%.9g\n", r.z, r.x, r.score);
    std::fclose(f);
}

}  // namespace sdgg
