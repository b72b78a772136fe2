#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdgg {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One attributed, undirected graph. Adjacency is dense row-major n x n with
// zero diagonal; real input graphs use {0,1} entries, generated ones may be
// continuous in [0,1].
struct Graph {
    std::size_t node_count = 0;
    std::vector<double> adjacency;       // n x n
    std::vector<double> features;        // n x feature_dim
    std::size_t feature_dim = 0;
    int class_label = 0;
    std::vector<int> node_labels;        // raw labels from file, may be empty

    double adj(std::size_t u, std::size_t v) const {
        return adjacency[u * node_count + v];
    }
    std::size_t degree(std::size_t v) const;
};

struct Dataset {
    std::string name;
    std::vector<Graph> graphs;
    std::size_t feature_dim = 0;
    std::set<int> class_set;
};

struct Split {
    std::vector<Graph> train;                       // all normal
    std::vector<std::pair<Graph, int>> test;        // (graph, anomaly label)
    std::vector<int> normal_classes;
    std::uint64_t seed = 0;
};

struct FeatureSpec {
    enum class Mode { OneHotNodeLabel, DegreeOneHot };
    Mode mode = Mode::OneHotNodeLabel;
    std::size_t degree_cap = 10;
};

// Parses a dataset in TU layout: <name>_A.txt, <name>_graph_indicator.txt and
// the optional labels/attributes files. Edge lists are 1-indexed and
// symmetrized; errors name the offending file and line.
Dataset parse_tu_dataset(const std::filesystem::path& directory,
                         const std::string& name);

// Fills per-node features: one-hot over densified node labels, or one-hot of
// min(degree, cap). Returns a copy with feature_dim set on every graph.
Dataset build_features(const Dataset& dataset, const FeatureSpec& spec);

Split make_split(const Dataset& dataset, const std::vector<int>& normal_classes,
                 double train_fraction, std::uint64_t seed);

inline Split make_split(const Dataset& dataset, int normal_class,
                        double train_fraction, std::uint64_t seed) {
    return make_split(dataset, std::vector<int>{normal_class}, train_fraction,
                      seed);
}

// JSON round-trip of a dataset (explicit adjacency lists, feature rows,
// labels).
std::string dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(const std::string& json_text);

}  // namespace sdgg
