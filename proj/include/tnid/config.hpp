#pragma once

#include "tnid/data.hpp"
#include "tnid/model.hpp"
#include "tnid/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace tnid {

// Declarative experiment description: flat key = value file, '#' comments,
// command-line overrides applied on top. The resolved form (defaults filled
// in) is embedded verbatim in every output artifact.
struct ExperimentConfig {
    std::string dataset = "mnist"; // mnist | fashion
    std::string data_dir = "data";
    std::string cache_dir;         // TNID_CACHE_DIR > this field > <data_dir>/cache
    std::string kind = "tr";       // tr | ttn
    std::size_t m = 64;
    std::size_t bond = 20;
    std::size_t classes = 10;
    std::string degrees = "full";
    std::string filter = "box";
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    std::string optimizer = "adam"; // adam | sgd
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t epochs = 30;
    double init_noise = 0.03;
    std::vector<std::uint64_t> seeds = {1};
    std::size_t train_subset = 0; // 0 = whole training split
    std::size_t jobs = 1;
    std::string out_dir = "runs";

    static ExperimentConfig from_file(const std::string& path);
    void apply(const std::string& key, const std::string& value);

    nlohmann::json to_json() const;

    ModelKind model_kind() const;
    ResampleFilter resample_filter() const;
    DegreeSet degree_set() const;
    LossConfig loss_config(std::uint64_t seed) const;
    InitScheme init_scheme() const;

    std::string resolved_cache_dir() const;
    // Locates <data_dir>/<dataset>/<name>[.gz]; throws DataError listing the
    // candidates when absent.
    std::string images_path(const std::string& split) const;
    std::string labels_path(const std::string& split) const;
    std::string cache_path(const std::string& split) const;
    // runs/<dataset>_<kind>_<bond>_<dsettag>_<seed>
    std::string run_prefix(std::uint64_t seed) const;
};

} // namespace tnid
