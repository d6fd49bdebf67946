#include "tnid/config.hpp"

#include "tnid/error.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tnid {

namespace {

std::string trim(const std::string& s) {
    const std::size_t first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const std::size_t last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::size_t parse_size(const std::string& value, const std::string& key) {
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("cannot parse integer for '" + key + "': " + value);
    }
    return out;
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t consumed = 0;
        const double out = std::stod(value, &consumed);
        if (consumed != value.size()) {
            throw std::invalid_argument(value);
        }
        return out;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse number for '" + key + "': " + value);
    }
}

std::vector<std::uint64_t> parse_seeds(const std::string& value) {
    std::vector<std::uint64_t> seeds;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            continue;
        }
        std::uint64_t seed = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), seed);
        if (ec != std::errc() || ptr != item.data() + item.size()) {
            throw ConfigError("cannot parse seed: " + item);
        }
        seeds.push_back(seed);
    }
    if (seeds.empty()) {
        throw ConfigError("seed list is empty");
    }
    return seeds;
}

} // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    ExperimentConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        config.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

void ExperimentConfig::apply(const std::string& key, const std::string& value) {
    if (key == "dataset") {
        if (value != "mnist" && value != "fashion") {
            throw ConfigError("dataset must be 'mnist' or 'fashion', got: " + value);
        }
        dataset = value;
    } else if (key == "data_dir") {
        data_dir = value;
    } else if (key == "cache_dir") {
        cache_dir = value;
    } else if (key == "kind") {
        if (value != "tr" && value != "ttn") {
            throw ConfigError("kind must be 'tr' or 'ttn', got: " + value);
        }
        kind = value;
    } else if (key == "m") {
        m = parse_size(value, key);
    } else if (key == "bond") {
        bond = parse_size(value, key);
    } else if (key == "classes") {
        classes = parse_size(value, key);
    } else if (key == "degrees") {
        degrees = value;
    } else if (key == "filter") {
        filter_from_name(value); // validates
        filter = value;
    } else if (key == "batch_size") {
        batch_size = parse_size(value, key);
    } else if (key == "learning_rate") {
        learning_rate = parse_double(value, key);
    } else if (key == "optimizer") {
        if (value != "adam" && value != "sgd") {
            throw ConfigError("optimizer must be 'adam' or 'sgd', got: " + value);
        }
        optimizer = value;
    } else if (key == "beta1") {
        beta1 = parse_double(value, key);
    } else if (key == "beta2") {
        beta2 = parse_double(value, key);
    } else if (key == "epsilon") {
        epsilon = parse_double(value, key);
    } else if (key == "epochs") {
        epochs = parse_size(value, key);
    } else if (key == "init_noise") {
        init_noise = parse_double(value, key);
    } else if (key == "seeds") {
        seeds = parse_seeds(value);
    } else if (key == "train_subset") {
        train_subset = parse_size(value, key);
    } else if (key == "jobs") {
        jobs = parse_size(value, key);
    } else if (key == "out_dir") {
        out_dir = value;
    } else {
        throw ConfigError("unknown config key: " + key);
    }
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json doc;
    doc["dataset"] = dataset;
    doc["data_dir"] = data_dir;
    doc["cache_dir"] = resolved_cache_dir();
    doc["kind"] = kind;
    doc["m"] = m;
    doc["bond"] = bond;
    doc["classes"] = classes;
    doc["degrees"] = degrees;
    doc["degrees_tag"] = degree_set().tag();
    doc["filter"] = filter;
    doc["batch_size"] = batch_size;
    doc["learning_rate"] = learning_rate;
    doc["optimizer"] = optimizer;
    doc["beta1"] = beta1;
    doc["beta2"] = beta2;
    doc["epsilon"] = epsilon;
    doc["epochs"] = epochs;
    doc["init_noise"] = init_noise;
    doc["seeds"] = seeds;
    doc["train_subset"] = train_subset;
    doc["jobs"] = jobs;
    doc["out_dir"] = out_dir;
    return doc;
}

ModelKind ExperimentConfig::model_kind() const {
    return kind == "tr" ? ModelKind::tensor_ring : ModelKind::tree_tensor_network;
}

ResampleFilter ExperimentConfig::resample_filter() const { return filter_from_name(filter); }

DegreeSet ExperimentConfig::degree_set() const { return DegreeSet::parse(degrees, m); }

LossConfig ExperimentConfig::loss_config(std::uint64_t seed) const {
    LossConfig cfg;
    cfg.batch_size = batch_size;
    cfg.learning_rate = learning_rate;
    cfg.optimizer = optimizer == "adam" ? OptimizerKind::adam : OptimizerKind::sgd;
    cfg.beta1 = beta1;
    cfg.beta2 = beta2;
    cfg.epsilon = epsilon;
    cfg.epochs = epochs;
    cfg.seed = seed;
    return cfg;
}

InitScheme ExperimentConfig::init_scheme() const {
    InitScheme scheme;
    scheme.noise_std = init_noise;
    return scheme;
}

std::string ExperimentConfig::resolved_cache_dir() const {
    if (const char* env = std::getenv("TNID_CACHE_DIR")) {
        return env;
    }
    if (!cache_dir.empty()) {
        return cache_dir;
    }
    return (std::filesystem::path(data_dir) / "cache").string();
}

namespace {

std::string find_idx_file(const std::filesystem::path& dir, const std::string& name) {
    const std::filesystem::path raw = dir / name;
    const std::filesystem::path gz = dir / (name + ".gz");
    if (std::filesystem::exists(raw)) {
        return raw.string();
    }
    if (std::filesystem::exists(gz)) {
        return gz.string();
    }
    throw DataError("missing dataset file: tried " + raw.string() + " and " + gz.string());
}

} // namespace

std::string ExperimentConfig::images_path(const std::string& split) const {
    const std::filesystem::path dir = std::filesystem::path(data_dir) / dataset;
    return find_idx_file(dir, split == "train" ? "train-images-idx3-ubyte"
                                               : "t10k-images-idx3-ubyte");
}

std::string ExperimentConfig::labels_path(const std::string& split) const {
    const std::filesystem::path dir = std::filesystem::path(data_dir) / dataset;
    return find_idx_file(dir, split == "train" ? "train-labels-idx1-ubyte"
                                               : "t10k-labels-idx1-ubyte");
}

std::string ExperimentConfig::cache_path(const std::string& split) const {
    std::ostringstream name;
    name << dataset << '_' << split << '_' << filter << ".tnds";
    return (std::filesystem::path(resolved_cache_dir()) / name.str()).string();
}

std::string ExperimentConfig::run_prefix(std::uint64_t seed) const {
    std::ostringstream name;
    name << dataset << '_' << kind << '_' << bond << '_' << degree_set().tag() << '_' << seed;
    return (std::filesystem::path(out_dir) / name.str()).string();
}

} // namespace tnid
