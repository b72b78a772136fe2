#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sdgg/blocks.hpp"
#include "sdgg/graph_data.hpp"
#include "sdgg/tensor.hpp"

namespace sdgg {

enum class Method { ATI, ATII, NAT };
enum class OptimizerKind { RmsProp, Adam };

std::string method_name(Method m);
Method method_from_name(const std::string& s);

struct TrainConfig {
    Method method = Method::NAT;
    double lambda = 1.0;      // discrepancy weight
    double gamma = 1e-5;      // KL weight
    double clip = 0.01;       // critic weight bound (ATI/ATII)
    std::size_t batch_size = 4;
    double lr = 1e-3;
    std::size_t epochs = 300;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 0;
    bool deterministic_generator = false;
    std::size_t K = 3;
    std::size_t agg_dim = 16;
    std::size_t latent_dim = 10;

    void validate() const;
};

// Per-parameter accumulator state. RMSProp: squared-gradient EMA
// (decay 0.99); Adam: first/second moments (0.9/0.999) with bias correction.
class Optimizer {
  public:
    explicit Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}
    void step(std::span<Param* const> params);
    OptimizerKind kind() const { return kind_; }

  private:
    struct State {
        std::vector<double> acc;  // RMSProp EMA or Adam second moment
        std::vector<double> m;    // Adam first moment
    };
    OptimizerKind kind_;
    double lr_;
    std::size_t t_ = 0;
    std::unordered_map<Param*, State> state_;
};

void clip_params(std::span<Param* const> params, double c);

// --- losses -----------------------------------------------------------------

// Eq-style discrepancy between real graphs and their perturbations:
// attribute Frobenius reconstruction plus adjacency BCE (mean over entries),
// averaged over the batch. Adjacency probabilities are clamped to
// [1e-7, 1-1e-7] before the logs.
Tensor discrepancy_loss(Tape& t, const std::vector<Tensor>& real_X,
                        const std::vector<Tensor>& real_A,
                        const std::vector<GeneratedGraph>& generated);

// mean over elements of 0.5 * (mu^2 + sigma^2 - 1 - 2 log sigma)
Tensor kl_loss(const VgaeEncoding& enc);

// BCE against a constant target in {0,1}; probabilities clamped at 1e-7.
Tensor bce_loss(Tape& t, const Tensor& prob, double target);

// --- trained model ----------------------------------------------------------

struct EpochRecord {
    std::size_t epoch = 0;
    double generator_loss = 0.0;   // ATI/ATII
    double critic_loss = 0.0;      // ATI/ATII
    double total_loss = 0.0;       // NAT
    double test_auc = -1.0;        // only with eval-every-epoch
    double wall_seconds = 0.0;
};

struct TrainedModel {
    TrainConfig cfg;
    std::size_t feature_dim = 0;
    GraphEncoder encoder;  // discriminator / classifier backbone
    ScoreHead head;
    std::optional<MlpGenerator> mlp_generator;  // ATI
    std::optional<VgaePair> vgae;               // ATII / NAT
    std::vector<EpochRecord> history;

    std::vector<Param*> discriminator_params();
    std::vector<Param*> generator_params();
    std::vector<Param*> all_params();

    // higher = more anomalous: classifier output for NAT, negated critic
    // output for ATI/ATII
    double anomaly_score(const Graph& g);

    void save_checkpoint(const std::string& path);
    static TrainedModel load_checkpoint(const std::string& path);
};

struct TrainOptions {
    std::ostream* log = nullptr;                 // one JSON line per epoch
    const std::vector<std::pair<Graph, int>>* eval_test = nullptr;
    // Instrumentation: called after every critic update (post-clip) in the
    // adversarial loops with the critic parameters.
    std::function<void(std::span<Param* const>)> after_critic_step;
};

TrainedModel train_ati(const Split& split, const TrainConfig& cfg,
                       const TrainOptions& opts = {});
TrainedModel train_atii(const Split& split, const TrainConfig& cfg,
                        const TrainOptions& opts = {});
TrainedModel train_nat(const Split& split, const TrainConfig& cfg,
                       const TrainOptions& opts = {});
TrainedModel train_model(const Split& split, const TrainConfig& cfg,
                         const TrainOptions& opts = {});

}  // namespace sdgg
