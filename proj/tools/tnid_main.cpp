// tnid: tensor ring / tree tensor network regression with per-degree
// interaction decomposition. Subcommands: prepare, train, decompose, report.

#include "tnid/analysis.hpp"
#include "tnid/checkpoint.hpp"
#include "tnid/config.hpp"
#include "tnid/data.hpp"
#include "tnid/digest.hpp"
#include "tnid/error.hpp"
#include "tnid/model.hpp"
#include "tnid/parallel.hpp"
#include "tnid/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

namespace {

using tnid::ExperimentConfig;
namespace fs = std::filesystem;

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides; // key=value
    std::vector<std::uint64_t> seeds;
    std::string dataset;
    std::string kind;
    std::string degrees;
    std::string out_dir;
    std::string data_dir;
    std::string filter;
    std::size_t bond = 0;
    std::size_t epochs = 0;
    bool has_bond = false;
    bool has_epochs = false;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "declarative config file (key = value)");
    cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set batch_size=64")
        ->expected(-1);
    cmd->add_option("--seed", opts.seeds, "random seed (repeatable)")->expected(-1);
    cmd->add_option("--dataset", opts.dataset, "mnist | fashion");
    cmd->add_option("--kind", opts.kind, "tr | ttn");
    cmd->add_option("--degrees", opts.degrees, "full | cum:J | deg:J | comma list");
    cmd->add_option("--out", opts.out_dir, "output directory for runs and reports");
    cmd->add_option("--data-dir", opts.data_dir, "directory holding <dataset>/ IDX files");
    cmd->add_option("--filter", opts.filter, "resize filter: box | bilinear");
    cmd->add_option("--bond", opts.bond, "virtual (bond) dimension r")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", opts.epochs, "training epochs");
}

ExperimentConfig resolve_config(const CommonOptions& opts, const CLI::App* cmd) {
    ExperimentConfig config;
    if (!opts.config_path.empty()) {
        config = ExperimentConfig::from_file(opts.config_path);
    }
    for (const std::string& entry : opts.overrides) {
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos) {
            throw tnid::ConfigError("--set expects key=value, got: " + entry);
        }
        config.apply(entry.substr(0, eq), entry.substr(eq + 1));
    }
    if (!opts.dataset.empty()) {
        config.apply("dataset", opts.dataset);
    }
    if (!opts.kind.empty()) {
        config.apply("kind", opts.kind);
    }
    if (!opts.degrees.empty()) {
        config.apply("degrees", opts.degrees);
    }
    if (!opts.out_dir.empty()) {
        config.apply("out_dir", opts.out_dir);
    }
    if (!opts.data_dir.empty()) {
        config.apply("data_dir", opts.data_dir);
    }
    if (!opts.filter.empty()) {
        config.apply("filter", opts.filter);
    }
    if (cmd->count("--bond") > 0) {
        config.bond = opts.bond;
    }
    if (cmd->count("--epochs") > 0) {
        config.epochs = opts.epochs;
    }
    if (!opts.seeds.empty()) {
        config.seeds = opts.seeds;
    }
    return config;
}

// Loads the cached split, rebuilding when the cache is missing or its
// source digest no longer matches the IDX files.
tnid::Dataset prepare_split(const ExperimentConfig& config, const std::string& split,
                            bool verbose) {
    const std::string cache = config.cache_path(split);
    const std::string images = config.images_path(split);
    const std::string labels = config.labels_path(split);

    tnid::Sha1 digest;
    digest.update(tnid::read_idx_file(images));
    digest.update(tnid::read_idx_file(labels));
    const std::string source_digest = digest.hex_digest();

    if (fs::exists(cache)) {
        tnid::Dataset ds = tnid::load_dataset_cache(cache);
        if (ds.source_digest == source_digest &&
            ds.filter_tag == tnid::filter_name(config.resample_filter())) {
            if (verbose) {
                std::cout << split << ": cache up to date (" << cache << ", N=" << ds.count
                          << ", digest " << ds.source_digest << ")\n";
            }
            return ds;
        }
    }
    tnid::Dataset ds = tnid::build_dataset(images, labels, split, config.resample_filter(),
                                           config.classes);
    fs::create_directories(config.resolved_cache_dir());
    tnid::save_dataset_cache(ds, cache);
    if (verbose) {
        std::cout << split << ": built cache " << cache << " (N=" << ds.count
                  << ", m=" << ds.m << ", digest " << ds.source_digest << ")\n";
    }
    return ds;
}

int cmd_prepare(const ExperimentConfig& config) {
    prepare_split(config, "train", true);
    prepare_split(config, "test", true);
    return 0;
}

void run_one_seed(const ExperimentConfig& config, std::uint64_t seed,
                  const tnid::Dataset& train_full, const tnid::Dataset& test_set,
                  bool verbose) {
    const tnid::Dataset train_set =
        config.train_subset > 0 ? train_full.subset(config.train_subset) : train_full;

    tnid::Model model = tnid::init_model(config.model_kind(), config.m, config.bond,
                                         config.classes, seed, config.init_scheme());
    const tnid::DegreeSet dset = config.degree_set();
    const std::string prefix = config.run_prefix(seed);
    fs::create_directories(fs::path(prefix).parent_path());

    std::ofstream log(prefix + ".jsonl");
    if (!log) {
        throw tnid::DataError("cannot write " + prefix + ".jsonl");
    }
    nlohmann::json header;
    header["config"] = config.to_json();
    header["seed"] = seed;
    header["input_digests"] = {{"train", train_full.source_digest},
                               {"test", test_set.source_digest}};
    log << header.dump() << "\n";
    log.flush();

    auto history = tnid::train(model, train_set, test_set, dset, config.loss_config(seed),
                               [&](const tnid::EpochRecord& record) {
                                   nlohmann::json line;
                                   line["epoch"] = record.epoch;
                                   line["train_loss"] = record.train_loss;
                                   line["test_accuracy"] = record.test_accuracy;
                                   line["wall_time_s"] = record.wall_time_s;
                                   log << line.dump() << "\n";
                                   log.flush();
                                   if (verbose) {
                                       std::cout << "seed " << seed << " epoch " << record.epoch
                                                 << ": loss " << record.train_loss << ", test acc "
                                                 << record.test_accuracy << "\n";
                                   }
                               });

    tnid::save_checkpoint(model, seed, config.init_scheme().tag(), prefix + ".ckpt");
    if (verbose && !history.empty()) {
        std::cout << "seed " << seed << ": final test accuracy "
                  << history.back().test_accuracy << ", checkpoint " << prefix << ".ckpt\n";
    }
}

int cmd_train(const ExperimentConfig& config) {
    const tnid::Dataset train_full = prepare_split(config, "train", false);
    const tnid::Dataset test_set = prepare_split(config, "test", false);

    const std::size_t jobs = std::max<std::size_t>(1, config.jobs);
    if (jobs <= 1 || config.seeds.size() <= 1) {
        for (const std::uint64_t seed : config.seeds) {
            run_one_seed(config, seed, train_full, test_set, true);
        }
        return 0;
    }
    // Seeds run as independent jobs; worker threads are split between them.
    const std::size_t total_threads = tnid::thread_count();
    tnid::set_thread_count(std::max<std::size_t>(1, total_threads / jobs));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < std::min(jobs, config.seeds.size()); ++w) {
        workers.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= config.seeds.size()) {
                    return;
                }
                try {
                    run_one_seed(config, config.seeds[i], train_full, test_set, false);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
    tnid::set_thread_count(total_threads);
    if (first_error) {
        std::rethrow_exception(first_error);
    }
    return 0;
}

int cmd_decompose(const ExperimentConfig& config, const std::string& checkpoint_path,
                  std::size_t j_max, bool has_j_max) {
    const tnid::LoadedCheckpoint loaded = tnid::load_checkpoint(checkpoint_path);
    const tnid::Dataset test_set = prepare_split(config, "test", false);
    const tnid::ModelDims dims = tnid::dims_of(loaded.model);
    if (test_set.m != dims.m) {
        throw tnid::DataError("checkpoint and dataset disagree on the feature count");
    }
    const std::size_t cap = has_j_max ? j_max : dims.m;

    tnid::DecompositionReport report =
        tnid::decompose_over_dataset(loaded.model, test_set, cap);
    report.dataset = config.dataset;
    report.dset_tag = config.degree_set().tag();
    report.seed = loaded.meta.seed;
    nlohmann::json embedded = config.to_json();
    embedded["seed"] = loaded.meta.seed;
    embedded["checkpoint"] = checkpoint_path;
    embedded["j_max"] = cap;
    report.config_json = embedded.dump();

    fs::create_directories(config.out_dir);
    const std::string csv_path =
        (fs::path(config.out_dir) / tnid::report_file_name(report, "csv")).string();
    const std::string json_path =
        (fs::path(config.out_dir) / tnid::report_file_name(report, "json")).string();
    tnid::write_report_csv(report, csv_path);
    tnid::write_report_json(report, json_path);
    std::cout << "wrote " << csv_path << " and " << json_path << "\n";
    return 0;
}

struct RunGroup {
    nlohmann::json config;
    std::vector<double> final_accuracies; // percent
    std::vector<std::uint64_t> seeds;
};

int cmd_report(const std::string& run_dir) {
    std::map<std::string, RunGroup> groups;
    std::size_t runs = 0;
    if (!fs::is_directory(run_dir)) {
        throw tnid::DataError("not a run directory: " + run_dir);
    }
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (entry.path().extension() != ".jsonl") {
            continue;
        }
        std::ifstream in(entry.path());
        std::string line;
        if (!std::getline(in, line)) {
            continue;
        }
        nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
        if (header.is_discarded() || !header.contains("config")) {
            throw tnid::DataError("not a training log: " + entry.path().string());
        }
        nlohmann::json last_epoch;
        while (std::getline(in, line)) {
            nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
            if (!record.is_discarded() && record.contains("test_accuracy")) {
                last_epoch = std::move(record);
            }
        }
        if (last_epoch.is_null()) {
            continue; // run produced no epochs; skip it
        }
        const nlohmann::json& config = header["config"];
        const std::string key = config.value("dataset", "?") + "|" +
                                config.value("kind", "?") + "|" +
                                config.value("degrees_tag", "?");
        RunGroup& group = groups[key];
        if (group.final_accuracies.empty()) {
            group.config = config;
        } else {
            for (const char* field : {"bond", "m", "epochs", "batch_size", "learning_rate",
                                      "optimizer", "filter", "train_subset"}) {
                if (group.config[field] != config[field]) {
                    throw tnid::ConfigError(
                        std::string("inconsistent '") + field +
                        "' across runs aggregated in " + run_dir);
                }
            }
        }
        group.final_accuracies.push_back(last_epoch["test_accuracy"].get<double>() * 100.0);
        group.seeds.push_back(header.value("seed", 0));
        ++runs;
    }
    if (runs == 0) {
        throw tnid::DataError("no completed runs under " + run_dir);
    }

    nlohmann::json table = nlohmann::json::array();
    std::ostringstream csv;
    csv << "dataset,kind,degrees,seeds,mean_accuracy,sem,formatted\n";
    for (const auto& [key, group] : groups) {
        const tnid::Aggregate agg = tnid::aggregate_values(group.final_accuracies);
        const std::string formatted = tnid::format_mean_sem(agg.mean, agg.sem);
        nlohmann::json row;
        row["dataset"] = group.config.value("dataset", "");
        row["kind"] = group.config.value("kind", "");
        row["degrees"] = group.config.value("degrees_tag", "");
        row["seeds"] = group.seeds;
        row["mean_accuracy"] = agg.mean;
        if (agg.sem) {
            row["sem"] = *agg.sem;
        }
        row["formatted"] = formatted;
        row["config"] = group.config;
        table.push_back(row);
        csv << row["dataset"].get<std::string>() << ',' << row["kind"].get<std::string>()
            << ',' << row["degrees"].get<std::string>() << ',' << group.seeds.size() << ','
            << agg.mean << ',' << (agg.sem ? std::to_string(*agg.sem) : "") << ','
            << formatted << "\n";
    }
    const std::string csv_path = (fs::path(run_dir) / "summary.csv").string();
    const std::string json_path = (fs::path(run_dir) / "summary.json").string();
    std::ofstream(csv_path) << csv.str();
    std::ofstream(json_path) << table.dump(2) << "\n";
    std::cout << csv.str();
    std::cout << "wrote " << csv_path << " and " << json_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tensor network regression with per-degree interaction decomposition"};
    app.require_subcommand(1);

    CommonOptions prepare_opts;
    CLI::App* prepare = app.add_subcommand("prepare", "build the 8x8 dataset caches");
    add_common_options(prepare, prepare_opts);

    CommonOptions train_opts;
    CLI::App* train = app.add_subcommand("train", "train one model per seed");
    add_common_options(train, train_opts);

    CommonOptions decompose_opts;
    std::string checkpoint_path;
    std::size_t j_max = 0;
    CLI::App* decompose =
        app.add_subcommand("decompose", "per-degree decomposition of a checkpoint");
    add_common_options(decompose, decompose_opts);
    decompose->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    CLI::Option* j_max_opt = decompose->add_option("--jmax", j_max, "largest degree (default m)");

    std::string report_dir;
    CLI::App* report = app.add_subcommand("report", "aggregate seeds into mean(sem) tables");
    report->add_option("dir", report_dir, "run directory with .jsonl logs")->required();

    try {
        app.parse(argc, argv);
        if (prepare->parsed()) {
            return cmd_prepare(resolve_config(prepare_opts, prepare));
        }
        if (train->parsed()) {
            return cmd_train(resolve_config(train_opts, train));
        }
        if (decompose->parsed()) {
            return cmd_decompose(resolve_config(decompose_opts, decompose), checkpoint_path,
                                 j_max, j_max_opt->count() > 0);
        }
        if (report->parsed()) {
            return cmd_report(report_dir);
        }
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const tnid::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const tnid::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const tnid::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const tnid::ValueError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const tnid::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
