#include "sdgg/graph_data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace sdgg {

namespace fs = std::filesystem;

std::size_t Graph::degree(std::size_t v) const {
    std::size_t d = 0;
    for (std::size_t u = 0; u < node_count; ++u)
        if (adjacency[v * node_count + u] != 0.0) ++d;
    return d;
}

namespace {

std::vector<std::string> read_lines(const fs::path& file, bool required) {
    std::ifstream in(file);
    if (!in) {
        if (required)
            throw DataError("missing file: " + file.string());
        return {};
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    // trailing blank lines are common in TU files
    while (!lines.empty() && lines.back().find_first_not_of(" \t") ==
                                 std::string::npos)
        lines.pop_back();
    return lines;
}

long parse_int(const std::string& tok, const fs::path& file, std::size_t lineno) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || tok.find_first_not_of(" \t", pos) != std::string::npos)
        throw DataError("expected integer, got '" + tok + "' (" + file.string() +
                        ":" + std::to_string(lineno) + ")");
    return v;
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

}  // namespace

Dataset parse_tu_dataset(const fs::path& directory, const std::string& name) {
    const fs::path a_file = directory / (name + "_A.txt");
    const fs::path ind_file = directory / (name + "_graph_indicator.txt");
    const fs::path glab_file = directory / (name + "_graph_labels.txt");
    const fs::path nlab_file = directory / (name + "_node_labels.txt");
    const fs::path nattr_file = directory / (name + "_node_attributes.txt");

    auto indicator_lines = read_lines(ind_file, true);
    const std::size_t total_nodes = indicator_lines.size();
    if (total_nodes == 0)
        throw DataError("empty graph indicator: " + ind_file.string());

    std::vector<std::size_t> graph_of(total_nodes);
    std::size_t n_graphs = 0;
    for (std::size_t k = 0; k < total_nodes; ++k) {
        long g = parse_int(indicator_lines[k], ind_file, k + 1);
        if (g < 1)
            throw DataError("graph id must be >= 1 (" + ind_file.string() + ":" +
                            std::to_string(k + 1) + ")");
        graph_of[k] = static_cast<std::size_t>(g - 1);
        n_graphs = std::max(n_graphs, static_cast<std::size_t>(g));
    }

    // local index of each global node within its graph
    std::vector<std::size_t> sizes(n_graphs, 0);
    std::vector<std::size_t> local(total_nodes);
    for (std::size_t k = 0; k < total_nodes; ++k)
        local[k] = sizes[graph_of[k]]++;

    Dataset ds;
    ds.name = name;
    ds.graphs.resize(n_graphs);
    for (std::size_t g = 0; g < n_graphs; ++g) {
        ds.graphs[g].node_count = sizes[g];
        ds.graphs[g].adjacency.assign(sizes[g] * sizes[g], 0.0);
    }

    // edges; a file may legitimately be empty (edgeless graphs)
    auto edge_lines = read_lines(a_file, true);
    for (std::size_t k = 0; k < edge_lines.size(); ++k) {
        if (edge_lines[k].find_first_not_of(" \t") == std::string::npos) continue;
        auto toks = split_commas(edge_lines[k]);
        if (toks.size() != 2)
            throw DataError("expected 'i, j' (" + a_file.string() + ":" +
                            std::to_string(k + 1) + ")");
        long u = parse_int(toks[0], a_file, k + 1);
        long v = parse_int(toks[1], a_file, k + 1);
        if (u < 1 || v < 1 || static_cast<std::size_t>(u) > total_nodes ||
            static_cast<std::size_t>(v) > total_nodes)
            throw DataError("node index out of range (" + a_file.string() + ":" +
                            std::to_string(k + 1) + ")");
        std::size_t gu = graph_of[static_cast<std::size_t>(u - 1)];
        std::size_t gv = graph_of[static_cast<std::size_t>(v - 1)];
        if (gu != gv)
            throw DataError("edge crosses graph boundary (" + a_file.string() +
                            ":" + std::to_string(k + 1) + ")");
        if (u == v) continue;  // keep diagonal zero
        Graph& gr = ds.graphs[gu];
        std::size_t lu = local[static_cast<std::size_t>(u - 1)];
        std::size_t lv = local[static_cast<std::size_t>(v - 1)];
        gr.adjacency[lu * gr.node_count + lv] = 1.0;
        gr.adjacency[lv * gr.node_count + lu] = 1.0;
    }

    auto glab_lines = read_lines(glab_file, false);
    if (!glab_lines.empty()) {
        if (glab_lines.size() < n_graphs)
            throw DataError("too few graph labels: " + glab_file.string());
        for (std::size_t g = 0; g < n_graphs; ++g)
            ds.graphs[g].class_label =
                static_cast<int>(parse_int(glab_lines[g], glab_file, g + 1));
    }

    auto nlab_lines = read_lines(nlab_file, false);
    if (!nlab_lines.empty()) {
        if (nlab_lines.size() < total_nodes)
            throw DataError("too few node labels: " + nlab_file.string());
        for (auto& g : ds.graphs) g.node_labels.resize(g.node_count);
        for (std::size_t k = 0; k < total_nodes; ++k)
            ds.graphs[graph_of[k]].node_labels[local[k]] =
                static_cast<int>(parse_int(nlab_lines[k], nlab_file, k + 1));
    }

    auto nattr_lines = read_lines(nattr_file, false);
    if (!nattr_lines.empty()) {
        if (nattr_lines.size() < total_nodes)
            throw DataError("too few node attributes: " + nattr_file.string());
        std::size_t dim = split_commas(nattr_lines[0]).size();
        for (auto& g : ds.graphs) {
            g.feature_dim = dim;
            g.features.assign(g.node_count * dim, 0.0);
        }
        for (std::size_t k = 0; k < total_nodes; ++k) {
            auto toks = split_commas(nattr_lines[k]);
            if (toks.size() != dim)
                throw DataError("attribute width mismatch (" +
                                nattr_file.string() + ":" +
                                std::to_string(k + 1) + ")");
            Graph& g = ds.graphs[graph_of[k]];
            for (std::size_t j = 0; j < dim; ++j) {
                try {
                    g.features[local[k] * dim + j] = std::stod(toks[j]);
                } catch (const std::exception&) {
                    throw DataError("expected real, got '" + toks[j] + "' (" +
                                    nattr_file.string() + ":" +
                                    std::to_string(k + 1) + ")");
                }
            }
        }
        ds.feature_dim = dim;
    }

    for (const auto& g : ds.graphs) ds.class_set.insert(g.class_label);
    return ds;
}

Dataset build_features(const Dataset& dataset, const FeatureSpec& spec) {
    Dataset out = dataset;
    if (spec.mode == FeatureSpec::Mode::OneHotNodeLabel) {
        // densify labels to contiguous indices in first-seen order
        std::map<int, std::size_t> dense;
        bool any = false;
        for (const auto& g : dataset.graphs) {
            if (g.node_labels.empty()) continue;
            any = true;
            for (int lab : g.node_labels) dense.emplace(lab, dense.size());
        }
        if (!any)
            throw DataError("one-hot feature mode requires node labels");
        std::size_t d = dense.size();
        out.feature_dim = d;
        for (auto& g : out.graphs) {
            g.feature_dim = d;
            g.features.assign(g.node_count * d, 0.0);
            for (std::size_t v = 0; v < g.node_count; ++v)
                g.features[v * d + dense.at(g.node_labels[v])] = 1.0;
        }
    } else {
        if (spec.degree_cap < 1)
            throw DataError("degree_cap must be >= 1");
        std::size_t d = spec.degree_cap + 1;
        out.feature_dim = d;
        for (auto& g : out.graphs) {
            g.feature_dim = d;
            g.features.assign(g.node_count * d, 0.0);
            for (std::size_t v = 0; v < g.node_count; ++v) {
                std::size_t deg = std::min(g.degree(v), spec.degree_cap);
                g.features[v * d + deg] = 1.0;
            }
        }
    }
    return out;
}

Split make_split(const Dataset& dataset, const std::vector<int>& normal_classes,
                 double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw DataError("train_fraction must be in (0,1)");
    for (int c : normal_classes)
        if (!dataset.class_set.count(c))
            throw DataError("normal class " + std::to_string(c) +
                            " not present in dataset");
    auto is_normal = [&](const Graph& g) {
        return std::find(normal_classes.begin(), normal_classes.end(),
                         g.class_label) != normal_classes.end();
    };
    std::vector<std::size_t> normal_idx, anomalous_idx;
    for (std::size_t i = 0; i < dataset.graphs.size(); ++i)
        (is_normal(dataset.graphs[i]) ? normal_idx : anomalous_idx).push_back(i);
    if (anomalous_idx.empty())
        throw DataError("no anomalous graphs available for the test set");

    std::mt19937_64 rng(seed);
    std::shuffle(normal_idx.begin(), normal_idx.end(), rng);
    std::shuffle(anomalous_idx.begin(), anomalous_idx.end(), rng);

    std::size_t n_train = static_cast<std::size_t>(
        train_fraction * static_cast<double>(normal_idx.size()));
    std::size_t n_test_normal = normal_idx.size() - n_train;
    std::size_t k = std::min(n_test_normal, anomalous_idx.size());

    Split s;
    s.normal_classes = normal_classes;
    s.seed = seed;
    for (std::size_t i = 0; i < n_train; ++i)
        s.train.push_back(dataset.graphs[normal_idx[i]]);
    for (std::size_t i = n_train; i < normal_idx.size(); ++i)
        s.test.emplace_back(dataset.graphs[normal_idx[i]], 0);
    for (std::size_t i = 0; i < k; ++i)
        s.test.emplace_back(dataset.graphs[anomalous_idx[i]], 1);
    return s;
}

std::string dataset_to_json(const Dataset& dataset) {
    nlohmann::json j;
    j["name"] = dataset.name;
    j["feature_dim"] = dataset.feature_dim;
    j["graphs"] = nlohmann::json::array();
    for (const auto& g : dataset.graphs) {
        nlohmann::json jg;
        jg["n"] = g.node_count;
        jg["class_label"] = g.class_label;
        nlohmann::json adj = nlohmann::json::array();
        for (std::size_t u = 0; u < g.node_count; ++u) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t v = 0; v < g.node_count; ++v)
                if (g.adj(u, v) != 0.0)
                    row.push_back({v, g.adj(u, v)});
            adj.push_back(row);
        }
        jg["adjacency"] = adj;
        jg["feature_dim"] = g.feature_dim;
        jg["features"] = g.features;
        jg["node_labels"] = g.node_labels;
        j["graphs"].push_back(std::move(jg));
    }
    return j.dump();
}

Dataset dataset_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    Dataset ds;
    ds.name = j.at("name").get<std::string>();
    ds.feature_dim = j.at("feature_dim").get<std::size_t>();
    for (const auto& jg : j.at("graphs")) {
        Graph g;
        g.node_count = jg.at("n").get<std::size_t>();
        g.class_label = jg.at("class_label").get<int>();
        g.adjacency.assign(g.node_count * g.node_count, 0.0);
        const auto& adj = jg.at("adjacency");
        for (std::size_t u = 0; u < g.node_count; ++u)
            for (const auto& entry : adj.at(u)) {
                std::size_t v = entry.at(0).get<std::size_t>();
                g.adjacency[u * g.node_count + v] = entry.at(1).get<double>();
            }
        g.feature_dim = jg.at("feature_dim").get<std::size_t>();
        g.features = jg.at("features").get<std::vector<double>>();
        g.node_labels = jg.at("node_labels").get<std::vector<int>>();
        ds.class_set.insert(g.class_label);
        ds.graphs.push_back(std::move(g));
    }
    return ds;
}

}  // namespace sdgg
