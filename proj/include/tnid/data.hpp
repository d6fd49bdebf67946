#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tnid {

// IDX ingestion, 28x28 -> 8x8 downsampling, [-0.5, 0.5] normalization and
// the versioned dataset cache.

struct RawImages {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels; // count * rows * cols

    std::span<const std::uint8_t> image(std::size_t i) const {
        return {pixels.data() + i * rows * cols, rows * cols};
    }
};

// Strict IDX parsers: big-endian magic 0x00000803 (images, u8, 3 dims) or
// 0x00000801 (labels, u8, 1 dim); payload length must match the header.
RawImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

bool is_gzip(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes, const std::string& name);

std::vector<std::uint8_t> read_file(const std::string& path);
// read_file + transparent gunzip.
std::vector<std::uint8_t> read_idx_file(const std::string& path);

enum class ResampleFilter : std::uint8_t { box = 0, bilinear = 1 };
const char* filter_name(ResampleFilter filter);
ResampleFilter filter_from_name(std::string_view name);

// Resamples an in_h x in_w byte image to out_h x out_w reals in [0, 255].
// box = area-weighted average with fractional-overlap weights;
// bilinear = interpolation at output cell centers.
std::vector<double> resample(std::span<const std::uint8_t> image, std::size_t in_h,
                             std::size_t in_w, std::size_t out_h, std::size_t out_w,
                             ResampleFilter filter);

std::vector<double> downsample_8x8(std::span<const std::uint8_t> image28x28,
                                   ResampleFilter filter = ResampleFilter::box);

// x -> x/255 - 0.5; inputs must lie in [0, 255].
double normalize_pixel(double value);
void normalize(std::span<double> pixels);

struct Dataset {
    std::size_t m = 0;
    std::size_t n_classes = 10;
    std::size_t count = 0;
    std::vector<double> features; // count x m, every value in [-0.5, 0.5]
    std::vector<std::uint8_t> labels;
    std::string split;         // "train" | "test"
    std::string source_digest; // sha1 over images-file bytes then labels-file bytes
    std::string filter_tag;

    std::span<const double> sample(std::size_t i) const {
        return {features.data() + i * m, m};
    }
    // First k samples (reduced-budget runs).
    Dataset subset(std::size_t k) const;
};

// Full pipeline: read (gunzipping if needed), parse, downsample to 8x8,
// normalize. The digest covers the decompressed source bytes.
Dataset build_dataset(const std::string& images_path, const std::string& labels_path,
                      std::string split, ResampleFilter filter,
                      std::size_t n_classes = 10);

// Versioned binary cache, header: magic "TNDS", version, m, N, filter tag,
// source digest (then split tag and class count).
void save_dataset_cache(const Dataset& ds, const std::string& path);
Dataset load_dataset_cache(const std::string& path);

std::vector<std::size_t> label_histogram(const Dataset& ds);

} // namespace tnid
