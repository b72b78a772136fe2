#include "sdgg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace sdgg {

namespace {

void check_two_classes(const std::vector<double>& scores,
                       const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("scores and labels differ in length");
    bool pos = false, neg = false;
    for (int y : labels) (y == 1 ? pos : neg) = true;
    if (!pos || !neg)
        throw std::invalid_argument("both classes must be present");
}

}  // namespace

double roc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels) {
    check_two_classes(scores, labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tie groups
    double pos_rank_sum = 0.0;
    std::size_t p = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) {
                pos_rank_sum += avg_rank;
                ++p;
            }
        i = j;
    }
    std::size_t neg = n - p;
    return (pos_rank_sum - 0.5 * static_cast<double>(p) *
                               static_cast<double>(p + 1)) /
           (static_cast<double>(p) * static_cast<double>(neg));
}

PrMetrics pr_metrics(const std::vector<double>& scores,
                     const std::vector<int>& labels, const ThresholdRule& rule) {
    check_two_classes(scores, labels);
    const std::size_t n = scores.size();
    std::size_t total_pos = 0;
    for (int y : labels) total_pos += (y == 1);

    // average precision: step over descending score thresholds, tied scores
    // processed as one group
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    double ap = 0.0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        std::size_t dtp = 0, dfp = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? dtp : dfp)++;
            ++j;
        }
        tp += dtp;
        fp += dfp;
        double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += precision * static_cast<double>(dtp) /
              static_cast<double>(total_pos);
        i = j;
    }

    PrMetrics out;
    out.aucpr = ap;
    if (rule.kind == ThresholdRule::Kind::Fixed) {
        out.threshold = rule.value;
    } else {
        if (rule.train_scores.empty())
            throw std::invalid_argument(
                "train-quantile threshold rule needs train scores");
        std::vector<double> sorted = rule.train_scores;
        std::sort(sorted.begin(), sorted.end());
        double q = rule.value;
        std::size_t idx = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(sorted.size())));
        idx = std::clamp<std::size_t>(idx, 1, sorted.size()) - 1;
        out.threshold = sorted[idx];
    }
    std::size_t tp2 = 0, fp2 = 0, fn2 = 0;
    for (std::size_t k = 0; k < n; ++k) {
        bool pred = scores[k] > out.threshold;
        if (labels[k] == 1)
            (pred ? tp2 : fn2)++;
        else if (pred)
            ++fp2;
    }
    out.recall = static_cast<double>(tp2) / static_cast<double>(total_pos);
    double precision =
        (tp2 + fp2) ? static_cast<double>(tp2) / static_cast<double>(tp2 + fp2)
                    : 0.0;
    out.f1 = (precision + out.recall > 0.0)
                 ? 2.0 * precision * out.recall / (precision + out.recall)
                 : 0.0;
    return out;
}

ScoreReport make_score_report(const std::vector<double>& scores,
                              const std::vector<int>& labels,
                              const ThresholdRule& rule) {
    ScoreReport r;
    r.scores = scores;
    r.labels = labels;
    r.auc = roc_auc(scores, labels);
    PrMetrics pr = pr_metrics(scores, labels, rule);
    r.aucpr = pr.aucpr;
    r.f1 = pr.f1;
    r.recall = pr.recall;
    r.threshold = pr.threshold;
    return r;
}

std::string score_report_json(const ScoreReport& r) {
    std::size_t n_anom = 0;
    for (int y : r.labels) n_anom += (y == 1);
    nlohmann::json j;
    j["auc"] = r.auc;
    j["aucpr"] = r.aucpr;
    j["f1"] = r.f1;
    j["recall"] = r.recall;
    j["threshold"] = r.threshold;
    j["n_test"] = r.labels.size();
    j["n_anomalous"] = n_anom;
    return j.dump(2);
}

std::vector<double> anomaly_scores(TrainedModel& model,
                                   const std::vector<Graph>& graphs) {
    std::vector<double> out;
    out.reserve(graphs.size());
    for (const Graph& g : graphs) out.push_back(model.anomaly_score(g));
    return out;
}

double TrialSummary::mean(const std::string& metric) const {
    const auto& v = trials.at(metric);
    return std::accumulate(v.begin(), v.end(), 0.0) /
           static_cast<double>(v.size());
}

double TrialSummary::stddev(const std::string& metric) const {
    const auto& v = trials.at(metric);
    double m = mean(metric);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

std::string TrialSummary::json() const {
    nlohmann::json j;
    for (const auto& [name, values] : trials) {
        j[name]["values"] = values;
        j[name]["mean"] = mean(name);
        j[name]["std"] = stddev(name);
    }
    return j.dump(2);
}

TrialSummary run_trials(const SplitFactory& split_factory, TrainConfig cfg,
                        std::size_t k) {
    if (k < 1) throw std::invalid_argument("run_trials: k must be >= 1");
    TrialSummary summary;
    for (std::size_t trial = 0; trial < k; ++trial) {
        try {
            std::uint64_t seed = cfg.seed + trial;
            Split split = split_factory(seed);
            TrainConfig tc = cfg;
            tc.seed = seed;
            TrainedModel model = train_model(split, tc);

            std::vector<double> test_scores;
            std::vector<int> labels;
            for (auto& [g, y] : split.test) {
                test_scores.push_back(model.anomaly_score(g));
                labels.push_back(y);
            }
            ThresholdRule rule;
            if (cfg.method == Method::NAT) {
                rule = {ThresholdRule::Kind::Fixed, 0.5, {}};
            } else {
                rule.kind = ThresholdRule::Kind::TrainQuantile;
                rule.value = 0.95;
                rule.train_scores = anomaly_scores(model, split.train);
            }
            ScoreReport rep = make_score_report(test_scores, labels, rule);
            summary.trials["auc"].push_back(rep.auc);
            summary.trials["aucpr"].push_back(rep.aucpr);
            summary.trials["f1"].push_back(rep.f1);
            summary.trials["recall"].push_back(rep.recall);
        } catch (const std::exception& e) {
            throw std::runtime_error("trial " + std::to_string(trial) +
                                     " failed: " + e.what());
        }
    }
    return summary;
}

double interpolation_ratio(const GeometryParams& p) {
    if (p.alpha < 1 || p.alpha >= p.d)
        throw std::invalid_argument("interpolation_ratio: need 1 <= alpha < d");
    if (!(p.r > 0.0))
        throw std::invalid_argument("interpolation_ratio: r must be > 0");
    if (p.widths.size() != p.d - p.alpha)
        throw std::invalid_argument("interpolation_ratio: need d - alpha widths");
    double shadow = std::pow(2.0 * p.r, static_cast<double>(p.alpha));
    for (double w : p.widths) {
        if (!(w > 0.0))
            throw std::invalid_argument("interpolation_ratio: widths must be > 0");
        shadow *= w;
    }
    double hd = static_cast<double>(p.d);
    double sphere = std::pow(M_PI, hd / 2.0) * std::pow(p.r, hd) /
                    std::tgamma(1.0 + hd / 2.0);
    double denom = sphere - shadow;
    if (!(denom > 0.0))
        throw std::domain_error(
            "interpolation_ratio: shadow volume exceeds hypersphere volume");
    return shadow / denom;
}

namespace {

void write_csv_value(std::FILE* f, double v) { std::fprintf(f, "%.9g", v); }

struct CsvFile {
    std::FILE* f;
    explicit CsvFile(const std::filesystem::path& p) {
        f = std::fopen(p.string().c_str(), "w");
        if (!f) throw std::runtime_error("cannot write " + p.string());
    }
    ~CsvFile() { std::fclose(f); }
};

}  // namespace

void export_artifacts(TrainedModel& model, const Split& split,
                      const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::size_t emb_dim = model.encoder.embed_dim();

    CsvFile emb(out_dir / "embeddings.csv");
    std::fprintf(emb.f, "graph_id,role");
    for (std::size_t j = 0; j < emb_dim; ++j) std::fprintf(emb.f, ",e%zu", j);
    std::fprintf(emb.f, "\n");

    CsvFile sc(out_dir / "scores.csv");
    std::fprintf(sc.f, "graph_id,role,score\n");

    auto emit = [&](std::size_t id, const char* role, const Tensor& embedding,
                    double score) {
        std::fprintf(emb.f, "%zu,%s", id, role);
        for (double v : embedding.value()) {
            std::fputc(',', emb.f);
            write_csv_value(emb.f, v);
        }
        std::fputc('\n', emb.f);
        std::fprintf(sc.f, "%zu,%s,", id, role);
        write_csv_value(sc.f, score);
        std::fputc('\n', sc.f);
    };

    auto emit_graph = [&](std::size_t id, const char* role, const Graph& g) {
        Tape t;
        Tensor X = graph_tensor_features(t, g);
        Tensor A = graph_tensor_adjacency(t, g);
        Tensor e = model.encoder.embed(t, X, A);
        Tensor s = model.head.score(t, e);
        double score = model.cfg.method == Method::NAT ? s.scalar() : -s.scalar();
        emit(id, role, e, score);
    };

    std::size_t id = 0;
    for (const Graph& g : split.train) emit_graph(id++, "train-normal", g);
    std::vector<double> test_scores;
    std::vector<int> labels;
    for (const auto& [g, y] : split.test) {
        emit_graph(id++, y ? "test-anomalous" : "test-normal", g);
        test_scores.push_back(model.anomaly_score(g));
        labels.push_back(y);
    }
    // one generated graph per training graph, perturbation generators only
    if (model.vgae) {
        Rng rng(model.cfg.seed);
        for (std::size_t i = 0; i < split.train.size(); ++i) {
            Tape t;
            Tensor X = graph_tensor_features(t, split.train[i]);
            Tensor A = graph_tensor_adjacency(t, split.train[i]);
            auto res = model.vgae->perturb(t, X, A, rng,
                                           model.cfg.deterministic_generator);
            Tensor e = model.encoder.embed(t, res.graph.X, res.graph.A);
            Tensor s = model.head.score(t, e);
            double score =
                model.cfg.method == Method::NAT ? s.scalar() : -s.scalar();
            emit(i, "generated", e, score);
        }
    }

    ThresholdRule rule;
    if (model.cfg.method == Method::NAT) {
        rule = {ThresholdRule::Kind::Fixed, 0.5, {}};
    } else {
        rule.kind = ThresholdRule::Kind::TrainQuantile;
        rule.value = 0.95;
        rule.train_scores = anomaly_scores(model, split.train);
    }
    ScoreReport rep = make_score_report(test_scores, labels, rule);
    // write-to-temp then rename so readers never see a partial file
    auto tmp = out_dir / "metrics.json.tmp";
    {
        std::ofstream out(tmp);
        out << score_report_json(rep) << "\n";
    }
    std::filesystem::rename(tmp, out_dir / "metrics.json");
}

}  // namespace sdgg
