#include "tnid/analysis.hpp"

#include "tnid/error.hpp"
#include "tnid/parallel.hpp"
#include "tnid/train.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace tnid {

DecompositionReport decompose_over_dataset(const Model& model, const Dataset& ds,
                                           std::size_t j_max) {
    const ModelDims dims = dims_of(model);
    if (ds.m != dims.m) {
        throw ShapeError("dataset feature count does not match the model");
    }
    if (ds.count == 0) {
        throw DataError("dataset is empty");
    }
    const std::size_t rows = j_max + 1;

    const std::size_t workers = std::min(thread_count(), ds.count);
    std::vector<std::vector<double>> l1_partials(workers, std::vector<double>(rows, 0.0));
    std::vector<std::vector<std::size_t>> ind_hits(workers,
                                                   std::vector<std::size_t>(rows, 0));
    std::vector<std::vector<std::size_t>> cum_hits(workers,
                                                   std::vector<std::size_t>(rows, 0));

    parallel_for(ds.count, [&](std::size_t begin, std::size_t end, std::size_t w) {
        std::vector<double> cumulative(dims.n);
        for (std::size_t i = begin; i < end; ++i) {
            const DenseTensor rows_tensor = interaction_decompose(model, ds.sample(i), j_max);
            std::fill(cumulative.begin(), cumulative.end(), 0.0);
            for (std::size_t j = 0; j < rows; ++j) {
                const double* row = rows_tensor.data() + j * dims.n;
                double l1 = 0.0;
                for (std::size_t k = 0; k < dims.n; ++k) {
                    l1 += std::abs(row[k]);
                    cumulative[k] += row[k];
                }
                l1_partials[w][j] += l1;
                if (predict_class({row, dims.n}) == ds.labels[i]) {
                    ++ind_hits[w][j];
                }
                if (predict_class(cumulative) == ds.labels[i]) {
                    ++cum_hits[w][j];
                }
            }
        }
    });

    DecompositionReport report;
    report.j_max = j_max;
    report.mean_l1.assign(rows, 0.0);
    report.acc_individual.assign(rows, 0.0);
    report.acc_cumulative.assign(rows, 0.0);
    report.bond = dims.r;
    report.kind_tag = kind_of(model) == ModelKind::tensor_ring ? "tr" : "ttn";
    for (std::size_t j = 0; j < rows; ++j) {
        double l1 = 0.0;
        std::size_t ind = 0;
        std::size_t cum = 0;
        for (std::size_t w = 0; w < workers; ++w) {
            l1 += l1_partials[w][j];
            ind += ind_hits[w][j];
            cum += cum_hits[w][j];
        }
        const double count = static_cast<double>(ds.count);
        report.mean_l1[j] = l1 / count;
        report.acc_individual[j] = static_cast<double>(ind) / count;
        report.acc_cumulative[j] = static_cast<double>(cum) / count;
    }
    report.dataset = ds.split;
    return report;
}

std::vector<double> degree_magnitudes(const Model& model, const Dataset& ds) {
    return decompose_over_dataset(model, ds, dims_of(model).m).mean_l1;
}

std::vector<double> per_degree_accuracy(const Model& model, const Dataset& ds,
                                        AccuracyMode mode) {
    DecompositionReport report = decompose_over_dataset(model, ds, dims_of(model).m);
    return mode == AccuracyMode::individual ? std::move(report.acc_individual)
                                            : std::move(report.acc_cumulative);
}

namespace {

void check_report(const DecompositionReport& report) {
    const std::size_t rows = report.j_max + 1;
    if (report.mean_l1.empty() || report.mean_l1.size() != rows ||
        report.acc_individual.size() != rows || report.acc_cumulative.size() != rows) {
        throw ConfigError("decomposition report is empty or inconsistent");
    }
}

} // namespace

void write_report_csv(const DecompositionReport& report, const std::string& path) {
    check_report(report);
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out << "# " << (report.config_json.empty() ? "{}" : report.config_json) << "\n";
    out << "degree,mean_l1,acc_individual,acc_cumulative\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t j = 0; j <= report.j_max; ++j) {
        out << j << ',' << report.mean_l1[j] << ',' << report.acc_individual[j] << ','
            << report.acc_cumulative[j] << "\n";
    }
    if (!out) {
        throw DataError("failed writing " + path);
    }
}

DecompositionReport read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    DecompositionReport report;
    std::string line;
    if (!std::getline(in, line) || line.size() < 2 || line[0] != '#') {
        throw DataError(path + " is not a decomposition report");
    }
    report.config_json = line.substr(2);
    if (!std::getline(in, line)) {
        throw DataError(path + " is missing the header row");
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        const std::size_t degree = std::stoul(cell);
        if (degree != report.mean_l1.size()) {
            throw DataError("report rows out of order in " + path);
        }
        std::getline(row, cell, ',');
        report.mean_l1.push_back(std::stod(cell));
        std::getline(row, cell, ',');
        report.acc_individual.push_back(std::stod(cell));
        std::getline(row, cell, ',');
        report.acc_cumulative.push_back(std::stod(cell));
    }
    if (report.mean_l1.empty()) {
        throw DataError("report has no rows: " + path);
    }
    report.j_max = report.mean_l1.size() - 1;
    // Identity fields live in the embedded config.
    const auto config = nlohmann::json::parse(report.config_json, nullptr, false);
    if (config.is_discarded()) {
        throw DataError("report config line is not valid json: " + path);
    }
    report.dataset = config.value("dataset", "");
    report.kind_tag = config.value("kind", "");
    report.dset_tag = config.value("degrees_tag", "");
    report.bond = config.value("bond", 0);
    report.seed = config.value("seed", 0);
    return report;
}

void write_report_json(const DecompositionReport& report, const std::string& path) {
    check_report(report);
    nlohmann::json doc;
    doc["dataset"] = report.dataset;
    doc["kind"] = report.kind_tag;
    doc["degrees_tag"] = report.dset_tag;
    doc["bond"] = report.bond;
    doc["seed"] = report.seed;
    doc["j_max"] = report.j_max;
    doc["mean_l1"] = report.mean_l1;
    doc["acc_individual"] = report.acc_individual;
    doc["acc_cumulative"] = report.acc_cumulative;
    if (!report.config_json.empty()) {
        auto config = nlohmann::json::parse(report.config_json, nullptr, false);
        if (!config.is_discarded()) {
            doc["config"] = std::move(config);
        }
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out << doc.dump(2) << "\n";
}

std::string format_mean_sem(double mean, std::optional<double> sem) {
    std::ostringstream out;
    if (!sem || *sem <= 0.0) {
        out << std::fixed << std::setprecision(4) << mean;
        std::string s = out.str();
        while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') {
            s.pop_back();
        }
        return s;
    }
    // Round the standard error to one significant digit; that digit's place
    // sets the precision of the mean.
    int exponent = static_cast<int>(std::floor(std::log10(*sem)));
    double digit = std::round(*sem / std::pow(10.0, exponent));
    if (digit >= 10.0) {
        digit = 1.0;
        ++exponent;
    }
    const int decimals = std::max(0, -exponent);
    out << std::fixed << std::setprecision(decimals) << mean << '('
        << static_cast<int>(digit);
    for (int i = 0; i < exponent; ++i) {
        out << '0';
    }
    out << ')';
    return out.str();
}

Aggregate aggregate_values(const std::vector<double>& values) {
    if (values.empty()) {
        throw ConfigError("nothing to aggregate");
    }
    Aggregate agg;
    agg.count = values.size();
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    agg.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (const double v : values) {
            sq += (v - agg.mean) * (v - agg.mean);
        }
        const double variance = sq / static_cast<double>(values.size() - 1);
        agg.sem = std::sqrt(variance / static_cast<double>(values.size()));
    }
    return agg;
}

std::string report_file_name(const DecompositionReport& report, const std::string& ext) {
    std::ostringstream name;
    name << report.dataset << '_' << report.kind_tag << '_' << report.bond << '_'
         << report.dset_tag << '_' << report.seed << '.' << ext;
    return name.str();
}

} // namespace tnid
