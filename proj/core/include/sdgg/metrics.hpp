#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sdgg/graph_data.hpp"
#include "sdgg/training.hpp"

namespace sdgg {

// Rank-based AUC: ties between a positive and a negative count one half.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct ThresholdRule {
    enum class Kind { Fixed, TrainQuantile };
    Kind kind = Kind::Fixed;
    double value = 0.5;                 // fixed threshold or quantile level
    std::vector<double> train_scores;   // quantile rule only
};

struct PrMetrics {
    double aucpr = 0.0;
    double f1 = 0.0;
    double recall = 0.0;
    double threshold = 0.0;
};

// AUCPR as average precision (step interpolation over score thresholds);
// F1/recall at the resolved threshold.
PrMetrics pr_metrics(const std::vector<double>& scores,
                     const std::vector<int>& labels, const ThresholdRule& rule);

struct ScoreReport {
    std::vector<double> scores;
    std::vector<int> labels;
    double auc = 0.0;
    double aucpr = 0.0;
    double f1 = 0.0;
    double recall = 0.0;
    double threshold = 0.0;
};

ScoreReport make_score_report(const std::vector<double>& scores,
                              const std::vector<int>& labels,
                              const ThresholdRule& rule);
std::string score_report_json(const ScoreReport& r);

std::vector<double> anomaly_scores(TrainedModel& model,
                                   const std::vector<Graph>& graphs);

struct TrialSummary {
    // per metric name: one value per trial
    std::map<std::string, std::vector<double>> trials;
    double mean(const std::string& metric) const;
    double stddev(const std::string& metric) const;  // population std
    std::string json() const;
};

using SplitFactory = std::function<Split(std::uint64_t seed)>;

// Trains and evaluates with seeds seed0 .. seed0+k-1, fresh split and
// initialization per trial.
TrialSummary run_trials(const SplitFactory& split_factory, TrainConfig cfg,
                        std::size_t k);

// The motivation-geometry ratio: expected pseudo-anomaly count near the
// normal manifold over the count elsewhere in the radius-r hypersphere.
// widths holds w_{alpha+1} .. w_d; w_1..w_alpha are 2r implicitly.
struct GeometryParams {
    std::size_t d = 2;
    std::size_t alpha = 1;  // 1 <= alpha < d
    double r = 1.0;
    std::vector<double> widths;
};

double interpolation_ratio(const GeometryParams& p);

// Writes embeddings.csv, scores.csv, metrics.json under out_dir.
void export_artifacts(TrainedModel& model, const Split& split,
                      const std::filesystem::path& out_dir);

}  // namespace sdgg
