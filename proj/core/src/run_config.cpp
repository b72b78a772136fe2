#include "sdgg/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sdgg {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

double parse_real(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size())
        throw ConfigError("key '" + key + "': expected real, got '" + v + "'");
    return x;
}

long parse_integer(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size())
        throw ConfigError("key '" + key + "': expected integer, got '" + v + "'");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "': expected boolean, got '" + v + "'");
}

void apply(RunConfig& cfg, const std::string& key, const std::string& raw) {
    std::string v = strip_quotes(raw);
    if (key == "dataset_dir") cfg.dataset_dir = v;
    else if (key == "dataset_name") cfg.dataset_name = v;
    else if (key == "normal_class") {
        cfg.normal_classes.clear();
        std::stringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ','))
            cfg.normal_classes.push_back(
                static_cast<int>(parse_integer(key, trim(tok))));
        if (cfg.normal_classes.empty())
            throw ConfigError("key 'normal_class': empty list");
    } else if (key == "method") cfg.train.method = method_from_name(v);
    else if (key == "lambda") cfg.train.lambda = parse_real(key, v);
    else if (key == "gamma") cfg.train.gamma = parse_real(key, v);
    else if (key == "clip") cfg.train.clip = parse_real(key, v);
    else if (key == "batch_size")
        cfg.train.batch_size = static_cast<std::size_t>(parse_integer(key, v));
    else if (key == "lr") cfg.train.lr = parse_real(key, v);
    else if (key == "epochs")
        cfg.train.epochs = static_cast<std::size_t>(parse_integer(key, v));
    else if (key == "optimizer") {
        cfg.optimizer_explicit = true;
        if (v == "rmsprop") cfg.train.optimizer = OptimizerKind::RmsProp;
        else if (v == "adam") cfg.train.optimizer = OptimizerKind::Adam;
        else throw ConfigError("key 'optimizer': expected rmsprop or adam");
    } else if (key == "seed")
        cfg.train.seed = static_cast<std::uint64_t>(parse_integer(key, v));
    else if (key == "deterministic_generator")
        cfg.train.deterministic_generator = parse_bool(key, v);
    else if (key == "K")
        cfg.train.K = static_cast<std::size_t>(parse_integer(key, v));
    else if (key == "agg_dim")
        cfg.train.agg_dim = static_cast<std::size_t>(parse_integer(key, v));
    else if (key == "latent_dim")
        cfg.train.latent_dim = static_cast<std::size_t>(parse_integer(key, v));
    else if (key == "trials")
        cfg.trials = static_cast<std::size_t>(parse_integer(key, v));
    else if (key == "out_dir") cfg.out_dir = v;
    else if (key == "feature_mode") {
        if (v == "one-hot-node-label")
            cfg.features.mode = FeatureSpec::Mode::OneHotNodeLabel;
        else if (v == "degree-one-hot")
            cfg.features.mode = FeatureSpec::Mode::DegreeOneHot;
        else
            throw ConfigError(
                "key 'feature_mode': expected one-hot-node-label or "
                "degree-one-hot");
    } else if (key == "degree_cap")
        cfg.features.degree_cap = static_cast<std::size_t>(parse_integer(key, v));
    else if (key == "train_fraction") cfg.train_fraction = parse_real(key, v);
    else if (key == "eval_every_epoch")
        cfg.eval_every_epoch = parse_bool(key, v);
    else if (key == "checkpoint") cfg.checkpoint = v;
    else if (key == "sim_a") cfg.sim_a = parse_real(key, v);
    else if (key == "sim_samples")
        cfg.sim_samples = static_cast<std::size_t>(parse_integer(key, v));
    else if (key == "sim_resolution")
        cfg.sim_resolution = static_cast<std::size_t>(parse_integer(key, v));
    else if (key == "sim_epochs")
        cfg.sim_epochs = static_cast<std::size_t>(parse_integer(key, v));
    else if (key == "sim_lr") cfg.sim_lr = parse_real(key, v);
    else
        throw ConfigError("unknown config key: '" + key + "'");
}

}  // namespace

RunConfig parse_config(const std::string& file,
                       const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw ConfigError("cannot open config file: " + file);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected key=value (" + file + ":" +
                                  std::to_string(lineno) + ")");
            apply(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }
    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override must be key=value: '" + ov + "'");
        apply(cfg, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }
    if (const char* env = std::getenv("SDGG_SEED"))
        cfg.train.seed =
            static_cast<std::uint64_t>(parse_integer("SDGG_SEED", env));
    if (!cfg.optimizer_explicit)
        cfg.train.optimizer = cfg.train.method == Method::NAT
                                  ? OptimizerKind::Adam
                                  : OptimizerKind::RmsProp;
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
        throw ConfigError("train_fraction must be in (0,1)");
    try {
        cfg.train.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

}  // namespace sdgg
