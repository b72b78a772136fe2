#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sdgg/blocks.hpp"
#include "sdgg/tensor.hpp"

namespace sdgg {

struct SineConfig {
    double a = 0.3;           // noise half-width
    std::size_t n_samples = 1000;
    double z_lo = 0.0;
    double z_hi = 2.0 * 3.14159265358979323846;
    std::uint64_t seed = 0;
};

struct Point2 {
    double z = 0.0;
    double x = 0.0;
};

// x = sin(z) + e with z ~ U(z_lo, z_hi) and e ~ U(-a, a).
std::vector<Point2> gen_sine_data(const SineConfig& cfg);

// Plain-vector analogue of the non-adversarial pipeline: a VAE generator
// (2 -> 16 -> latent 2 -> 16 -> 2) perturbs the training points and an MLP
// classifier (2 -> 16 -> 16 -> 1, sigmoid) learns to separate them.
struct Synth2dModel {
    Affine enc1, enc_mu, enc_logsigma, dec1, dec2;
    Affine cls1, cls2, cls3;

    Synth2dModel();
    void init(Rng& rng);
    std::vector<Param*> vae_params();
    std::vector<Param*> classifier_params();
    std::vector<Param*> all_params();

    struct VaeOut {
        Tensor mu, sigma, reconstructed;
    };
    VaeOut vae_forward(Tape& t, const Tensor& pts, const Tensor& noise);
    Tensor classify(Tape& t, const Tensor& pts);  // n x 1 sigmoid scores

    double score(double z, double x);
};

struct Train2dOptions {
    double lambda = 1.0;
    double gamma = 1e-5;
    std::size_t epochs = 500;
    double lr = 1e-2;
    std::uint64_t seed = 0;
};

Synth2dModel train_2d(const std::vector<Point2>& points,
                      const Train2dOptions& opts);

struct GridRow {
    double z, x, score;
};

std::vector<GridRow> boundary_grid(Synth2dModel& model, double z_lo, double z_hi,
                                   double x_lo, double x_hi,
                                   std::size_t resolution);

// header "z,x,score", row-major over the grid
void write_boundary_csv(const std::vector<GridRow>& grid,
                        const std::filesystem::path& path);

}  // namespace sdgg
