#pragma once

#include "tnid/data.hpp"
#include "tnid/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tnid {

// Per-degree measurements over a dataset: mean L1 magnitude of each degree
// contribution, plus classification accuracy of each contribution alone and
// of the cumulative sum up to each degree. All three come out of a single
// decomposition pass per sample.
struct DecompositionReport {
    std::string dataset;
    std::string kind_tag; // "tr" | "ttn"
    std::string dset_tag;
    std::size_t bond = 0;
    std::uint64_t seed = 0;
    std::size_t j_max = 0;
    std::vector<double> mean_l1;        // j_max + 1 entries
    std::vector<double> acc_individual; // fractions in [0, 1]
    std::vector<double> acc_cumulative;
    std::string config_json; // resolved config embedded in emitted files
};

DecompositionReport decompose_over_dataset(const Model& model, const Dataset& ds,
                                           std::size_t j_max);

// Spec-surface wrappers over the single-pass computation.
std::vector<double> degree_magnitudes(const Model& model, const Dataset& ds);
enum class AccuracyMode { individual, cumulative };
std::vector<double> per_degree_accuracy(const Model& model, const Dataset& ds,
                                        AccuracyMode mode);

// CSV: one row per degree, columns degree,mean_l1,acc_individual,acc_cumulative.
// A leading '#' comment line carries the embedded config. Values round-trip
// exactly (written with max_digits10).
void write_report_csv(const DecompositionReport& report, const std::string& path);
DecompositionReport read_report_csv(const std::string& path);
void write_report_json(const DecompositionReport& report, const std::string& path);

// "a(b)": mean a, standard error b in the last displayed digit; without a
// standard error just the mean. Values are percentages in Table layouts.
std::string format_mean_sem(double mean, std::optional<double> sem);

// Mean and standard error of the mean (no outlier rejection); sem is empty
// for a single value.
struct Aggregate {
    double mean = 0.0;
    std::optional<double> sem;
    std::size_t count = 0;
};
Aggregate aggregate_values(const std::vector<double>& values);

std::string report_file_name(const DecompositionReport& report, const std::string& ext);

} // namespace tnid
