#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "sdgg/metrics.hpp"

using namespace sdgg;
using namespace testutil;

namespace {

// random instance with deliberate ties (scores drawn from a small lattice)
void random_instance(std::mt19937_64& rng, std::size_t max_n,
                     std::vector<double>& scores, std::vector<int>& labels) {
    std::uniform_int_distribution<std::size_t> n_dist(2, max_n);
    std::uniform_int_distribution<int> lattice(0, 9);
    std::uniform_int_distribution<int> coin(0, 1);
    for (;;) {
        std::size_t n = n_dist(rng);
        scores.assign(n, 0.0);
        labels.assign(n, 0);
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = lattice(rng) / 9.0;
            labels[i] = coin(rng);
            (labels[i] ? pos : neg) = true;
        }
        if (pos && neg) return;
    }
}

}  // namespace

TEST_CASE("roc auc basics") {
    CHECK(roc_auc({0.9, 0.8, 0.1}, {1, 1, 0}) == 1.0);
    CHECK(roc_auc({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0}) == 0.5);
    CHECK_THROWS(roc_auc({0.1, 0.2}, {1, 1}));
    CHECK_THROWS(roc_auc({0.1, 0.2}, {0, 0}));
    CHECK_THROWS(roc_auc({0.1}, {0, 1}));
}

TEST_CASE("roc auc equals the pairwise oracle on 1000 instances") {
    std::mt19937_64 rng(100);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 1000; ++i) {
        random_instance(rng, 50, scores, labels);
        CHECK(roc_auc(scores, labels) == brute_force_auc(scores, labels));
    }
}

TEST_CASE("roc auc ignores strictly increasing transforms") {
    std::mt19937_64 rng(101);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 100; ++i) {
        random_instance(rng, 30, scores, labels);
        double base = roc_auc(scores, labels);
        std::vector<double> warped = scores;
        for (double& s : warped) s = std::exp(3.0 * s) - 2.0;
        CHECK(roc_auc(warped, labels) == base);
    }
}

TEST_CASE("negating tie-free scores flips the auc") {
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> scores(20);
    std::vector<int> labels(20);
    for (std::size_t i = 0; i < 20; ++i) {
        scores[i] = u(rng);  // continuous draws: ties have measure zero
        labels[i] = i < 8;
    }
    std::vector<double> negated = scores;
    for (double& s : negated) s = -s;
    CHECK(roc_auc(negated, labels) ==
          doctest::Approx(1.0 - roc_auc(scores, labels)).epsilon(1e-12));
}

TEST_CASE("pr metrics on separated scores") {
    std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
    std::vector<int> labels{1, 1, 0, 0};
    PrMetrics pr =
        pr_metrics(scores, labels, {ThresholdRule::Kind::Fixed, 0.5, {}});
    CHECK(pr.aucpr == 1.0);
    CHECK(pr.f1 == 1.0);
    CHECK(pr.recall == 1.0);
    CHECK(pr.threshold == 0.5);
}

TEST_CASE("all-positive predictions give full recall") {
    std::vector<double> scores{0.9, 0.9, 0.9, 0.9, 0.9};
    std::vector<int> labels{1, 0, 0, 0, 1};
    PrMetrics pr =
        pr_metrics(scores, labels, {ThresholdRule::Kind::Fixed, 0.0, {}});
    CHECK(pr.recall == 1.0);
    // precision equals the prevalence 2/5, so f1 = 2p/(p+1)
    double p = 0.4;
    CHECK(pr.f1 == doctest::Approx(2.0 * p / (p + 1.0)).epsilon(1e-12));
}

TEST_CASE("aucpr equals the threshold-sweep oracle on 1000 instances") {
    std::mt19937_64 rng(103);
    std::vector<double> scores;
    std::vector<int> labels;
    ThresholdRule fixed{ThresholdRule::Kind::Fixed, 0.5, {}};
    for (int i = 0; i < 1000; ++i) {
        random_instance(rng, 15, scores, labels);
        CHECK(pr_metrics(scores, labels, fixed).aucpr ==
              doctest::Approx(brute_force_ap(scores, labels)).epsilon(1e-12));
    }
}

TEST_CASE("threshold rules") {
    std::vector<double> scores{0.1, 0.9};
    std::vector<int> labels{0, 1};
    SUBCASE("train quantile picks the empirical quantile") {
        ThresholdRule rule;
        rule.kind = ThresholdRule::Kind::TrainQuantile;
        rule.value = 0.95;
        for (int i = 1; i <= 20; ++i)
            rule.train_scores.push_back(static_cast<double>(i));
        CHECK(pr_metrics(scores, labels, rule).threshold == 19.0);
    }
    SUBCASE("quantile rule without train scores is rejected") {
        ThresholdRule rule;
        rule.kind = ThresholdRule::Kind::TrainQuantile;
        CHECK_THROWS(pr_metrics(scores, labels, rule));
    }
}

TEST_CASE("trial summary statistics match a direct computation") {
    TrialSummary s;
    s.trials["auc"] = {0.91, 0.87, 0.99, 0.4, 0.65};
    const auto& v = s.trials["auc"];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    CHECK(s.mean("auc") == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.stddev("auc") == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    CHECK(s.mean("auc") >= *std::min_element(v.begin(), v.end()));
    CHECK(s.mean("auc") <= *std::max_element(v.begin(), v.end()));

    TrialSummary single;
    single.trials["auc"] = {0.7};
    CHECK(single.stddev("auc") == 0.0);
}

TEST_CASE("interpolation ratio closed forms") {
    SUBCASE("planar reduction 2w/(pi r - 2w)") {
        GeometryParams p{2, 1, 2.0, {1.0}};
        CHECK(interpolation_ratio(p) ==
              doctest::Approx(1.0 / (M_PI - 1.0)).epsilon(1e-12));
        std::mt19937_64 rng(104);
        std::uniform_real_distribution<double> wr(0.05, 0.5), rr(1.0, 5.0);
        for (int i = 0; i < 100; ++i) {
            double w = wr(rng), r = rr(rng);
            GeometryParams q{2, 1, r, {w}};
            CHECK(interpolation_ratio(q) ==
                  doctest::Approx(2.0 * w / (M_PI * r - 2.0 * w))
                      .epsilon(1e-12));
        }
    }
    SUBCASE("three dimensions by direct formula") {
        GeometryParams p{3, 1, 1.0, {0.1, 0.1}};
        double expect = 2.0 * 0.01 / ((4.0 / 3.0) * M_PI - 0.02);
        CHECK(interpolation_ratio(p) == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("monotone in r and each width") {
        std::mt19937_64 rng(105);
        std::uniform_real_distribution<double> wr(0.05, 0.3), rr(1.0, 4.0);
        for (int i = 0; i < 10; ++i) {
            double w = wr(rng), r = rr(rng);
            GeometryParams base{2, 1, r, {w}};
            GeometryParams bigger_r{2, 1, r + 0.1, {w}};
            GeometryParams bigger_w{2, 1, r, {w + 0.01}};
            CHECK(interpolation_ratio(bigger_r) < interpolation_ratio(base));
            CHECK(interpolation_ratio(bigger_w) > interpolation_ratio(base));
        }
        GeometryParams p{2, 1, 4.0, {0.1}};
        GeometryParams q{2, 1, 2.0, {0.1}};
        CHECK(interpolation_ratio(p) < interpolation_ratio(q));
    }
    SUBCASE("invalid inputs") {
        CHECK_THROWS(interpolation_ratio({2, 1, 0.1, {5.0}}));  // shadow > sphere
        CHECK_THROWS(interpolation_ratio({2, 2, 1.0, {}}));     // alpha >= d
        CHECK_THROWS(interpolation_ratio({3, 1, 1.0, {0.1}}));  // width count
    }
}

TEST_CASE("run_trials aggregates deterministic trials") {
    Dataset ds = build_features(make_synth_dataset(8, 7), FeatureSpec{});
    SplitFactory factory = [&](std::uint64_t seed) {
        return make_split(ds, 0, 0.8, seed);
    };
    TrainConfig cfg;
    cfg.method = Method::NAT;
    cfg.epochs = 5;
    cfg.K = 2;
    cfg.agg_dim = 8;
    cfg.latent_dim = 4;
    TrialSummary one = run_trials(factory, cfg, 1);
    CHECK(one.stddev("auc") == 0.0);
    TrialSummary again = run_trials(factory, cfg, 1);
    CHECK(one.mean("auc") == again.mean("auc"));
    CHECK_THROWS(run_trials(factory, cfg, 0));
}

TEST_CASE("export artifacts covers every split member") {
    Dataset ds = build_features(make_synth_dataset(6, 8), FeatureSpec{});
    Split split = make_split(ds, 0, 0.8, 3);
    TrainConfig cfg;
    cfg.method = Method::NAT;
    cfg.epochs = 2;
    cfg.K = 2;
    cfg.agg_dim = 8;
    cfg.latent_dim = 4;
    TrainedModel model = train_nat(split, cfg);

    TempDir dir("export");
    export_artifacts(model, split, dir.path);

    auto count_lines = [](const std::filesystem::path& p, std::string& header) {
        std::ifstream in(p);
        REQUIRE(in.good());
        std::size_t n = 0;
        std::string line;
        while (std::getline(in, line)) {
            if (n == 0) header = line;
            ++n;
        }
        return n - 1;  // data rows
    };
    std::string header;
    std::size_t members = split.train.size() + split.test.size();
    // one generated row per training graph for the vgae-backed methods
    CHECK(count_lines(dir.path / "scores.csv", header) ==
          members + split.train.size());
    CHECK(header == "graph_id,role,score");
    CHECK(count_lines(dir.path / "embeddings.csv", header) ==
          members + split.train.size());
    // header: graph_id,role then one column per embedding coordinate
    std::size_t commas = std::count(header.begin(), header.end(), ',');
    CHECK(commas - 1 == model.encoder.embed_dim());
    CHECK(model.encoder.embed_dim() == cfg.K * cfg.agg_dim);

    std::ifstream mj(dir.path / "metrics.json");
    nlohmann::json j = nlohmann::json::parse(mj);
    for (const char* key :
         {"auc", "aucpr", "f1", "recall", "threshold", "n_test", "n_anomalous"})
        CHECK(j.contains(key));
    CHECK(j["n_test"].get<std::size_t>() == split.test.size());
}

TEST_CASE("anomaly score direction per method") {
    Rng rng(9);
    TrainedModel m;
    m.cfg.method = Method::NAT;
    m.feature_dim = 2;
    m.encoder = GraphEncoder("enc", 2, 2, 8);
    m.encoder.init(rng);
    m.head = ScoreHead("head", m.encoder.embed_dim(), true);
    // zeroed classifier head: every anomaly score is sigmoid(0) = 0.5
    Dataset ds = build_features(make_synth_dataset(3, 10), FeatureSpec{});
    for (double s : anomaly_scores(m, ds.graphs)) CHECK(s == 0.5);

    TrainedModel c;
    c.cfg.method = Method::ATI;
    c.feature_dim = 2;
    c.encoder = GraphEncoder("enc", 2, 2, 8);
    c.encoder.init(rng);
    c.head = ScoreHead("head", c.encoder.embed_dim(), false);
    c.head.init(rng);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (double& x : c.head.out.b.value) x = u(rng);
    for (const Graph& g : ds.graphs)
        CHECK(c.anomaly_score(g) ==
              doctest::Approx(-score_graph(c.encoder, c.head, g))
                  .epsilon(1e-12));

    Graph wrong = ds.graphs[0];
    wrong.feature_dim = 5;
    wrong.features.assign(wrong.node_count * 5, 0.0);
    CHECK_THROWS_AS(m.anomaly_score(wrong), ShapeError);
}
