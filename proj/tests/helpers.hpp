#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "sdgg/graph_data.hpp"

namespace testutil {

// Self-cleaning temporary directory under the system temp root.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("sdgg_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

// Writes a dataset in TU layout. graph_labels/node_labels are optional
// (skipped when empty).
inline void write_tu_files(const std::filesystem::path& dir,
                           const std::string& name, const std::string& edges,
                           const std::string& indicator,
                           const std::string& graph_labels = "",
                           const std::string& node_labels = "") {
    std::filesystem::create_directories(dir);
    write_file(dir / (name + "_A.txt"), edges);
    write_file(dir / (name + "_graph_indicator.txt"), indicator);
    if (!graph_labels.empty())
        write_file(dir / (name + "_graph_labels.txt"), graph_labels);
    if (!node_labels.empty())
        write_file(dir / (name + "_node_labels.txt"), node_labels);
}

inline sdgg::Graph path_graph(std::size_t n, int node_label, int class_label) {
    sdgg::Graph g;
    g.node_count = n;
    g.adjacency.assign(n * n, 0.0);
    for (std::size_t v = 0; v + 1 < n; ++v) {
        g.adjacency[v * n + v + 1] = 1.0;
        g.adjacency[(v + 1) * n + v] = 1.0;
    }
    g.class_label = class_label;
    g.node_labels.assign(n, node_label);
    return g;
}

inline sdgg::Graph complete_graph(std::size_t n, int node_label,
                                  int class_label) {
    sdgg::Graph g;
    g.node_count = n;
    g.adjacency.assign(n * n, 1.0);
    for (std::size_t v = 0; v < n; ++v) g.adjacency[v * n + v] = 0.0;
    g.class_label = class_label;
    g.node_labels.assign(n, node_label);
    return g;
}

// Two cleanly separable classes: class 0 = paths with node label 0,
// class 1 = complete graphs with node label 1. Sizes vary with the seed.
inline sdgg::Dataset make_synth_dataset(std::size_t per_class,
                                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size(4, 7);
    sdgg::Dataset ds;
    ds.name = "synthetic";
    for (std::size_t i = 0; i < per_class; ++i)
        ds.graphs.push_back(path_graph(size(rng), 0, 0));
    for (std::size_t i = 0; i < per_class; ++i)
        ds.graphs.push_back(complete_graph(size(rng), 1, 1));
    ds.class_set = {0, 1};
    return ds;
}

// Same dataset written as TU files (for CLI round trips).
inline void write_synth_tu(const std::filesystem::path& dir,
                           const std::string& name, std::size_t per_class,
                           std::uint64_t seed) {
    sdgg::Dataset ds = make_synth_dataset(per_class, seed);
    std::string edges, indicator, graph_labels, node_labels;
    std::size_t offset = 0;
    for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
        const sdgg::Graph& g = ds.graphs[gi];
        for (std::size_t u = 0; u < g.node_count; ++u)
            for (std::size_t v = u + 1; v < g.node_count; ++v)
                if (g.adj(u, v) > 0.0)
                    edges += std::to_string(offset + u + 1) + ", " +
                             std::to_string(offset + v + 1) + "\n";
        for (std::size_t v = 0; v < g.node_count; ++v) {
            indicator += std::to_string(gi + 1) + "\n";
            node_labels += std::to_string(g.node_labels[v]) + "\n";
        }
        graph_labels += std::to_string(g.class_label) + "\n";
        offset += g.node_count;
    }
    write_tu_files(dir, name, edges, indicator, graph_labels, node_labels);
}

inline sdgg::Graph random_graph(std::mt19937_64& rng, std::size_t n,
                                double p, std::size_t feature_dim) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    sdgg::Graph g;
    g.node_count = n;
    g.feature_dim = feature_dim;
    g.adjacency.assign(n * n, 0.0);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (unit(rng) < p) {
                g.adjacency[u * n + v] = 1.0;
                g.adjacency[v * n + u] = 1.0;
            }
    g.features.resize(n * feature_dim);
    for (double& x : g.features) x = unit(rng);
    return g;
}

inline sdgg::Graph permute_graph(const sdgg::Graph& g,
                                 const std::vector<std::size_t>& perm) {
    const std::size_t n = g.node_count;
    sdgg::Graph out = g;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v)
            out.adjacency[perm[u] * n + perm[v]] = g.adjacency[u * n + v];
        for (std::size_t k = 0; k < g.feature_dim; ++k)
            out.features[perm[u] * g.feature_dim + k] =
                g.features[u * g.feature_dim + k];
        if (!g.node_labels.empty()) out.node_labels[perm[u]] = g.node_labels[u];
    }
    return out;
}

// O(P*N) pairwise oracle for the rank-based AUC, ties counted one half.
inline double brute_force_auc(const std::vector<double>& scores,
                              const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] == 1) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// Average precision via an explicit sweep over descending unique thresholds:
// predict positive at score >= t, accumulate precision * recall increment.
inline double brute_force_ap(const std::vector<double>& scores,
                             const std::vector<int>& labels) {
    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());
    std::size_t total_pos = 0;
    for (int y : labels) total_pos += (y == 1);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (double t : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) (labels[i] == 1 ? tp : fp)++;
        }
        double precision =
            static_cast<double>(tp) / static_cast<double>(tp + fp);
        double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        ap += precision * (recall - prev_recall);
        prev_recall = recall;
    }
    return ap;
}

}  // namespace testutil
