#pragma once

// Synthetic IDX fixtures for the data and pipeline tests: a deterministic
// 10-class "stripes" image set in the MNIST wire format. Class c draws a
// thick bar (horizontal for c < 5, vertical otherwise) whose position is
// c mod 5, plus jitter and pixel noise, so the classes survive 8x8
// downsampling and are easily separable.

#include "tnid/rng.hpp"

#include <zlib.h>

#include <array>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fixtures {

inline void push_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::vector<std::uint8_t> idx_image_bytes(
    const std::vector<std::array<std::uint8_t, 28 * 28>>& images) {
    std::vector<std::uint8_t> out;
    push_u32_be(out, 0x00000803u);
    push_u32_be(out, static_cast<std::uint32_t>(images.size()));
    push_u32_be(out, 28);
    push_u32_be(out, 28);
    for (const auto& image : images) {
        out.insert(out.end(), image.begin(), image.end());
    }
    return out;
}

inline std::vector<std::uint8_t> idx_label_bytes(const std::vector<std::uint8_t>& labels) {
    std::vector<std::uint8_t> out;
    push_u32_be(out, 0x00000801u);
    push_u32_be(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

inline std::array<std::uint8_t, 28 * 28> stripe_image(std::uint8_t label, tnid::Rng& rng) {
    std::array<std::uint8_t, 28 * 28> image{};
    for (auto& pixel : image) {
        pixel = static_cast<std::uint8_t>(rng.below(25));
    }
    const bool vertical = label >= 5;
    const std::size_t band = label % 5;
    const std::size_t start = 2 + band * 5 + rng.below(2);
    for (std::size_t a = start; a < start + 4 && a < 28; ++a) {
        for (std::size_t b = 4; b < 24; ++b) {
            const std::size_t row = vertical ? b : a;
            const std::size_t col = vertical ? a : b;
            image[row * 28 + col] =
                static_cast<std::uint8_t>(190 + rng.below(60));
        }
    }
    return image;
}

struct SyntheticSplit {
    std::vector<std::array<std::uint8_t, 28 * 28>> images;
    std::vector<std::uint8_t> labels;
};

inline SyntheticSplit make_synthetic_split(std::size_t count, std::uint64_t seed) {
    tnid::Rng rng(seed);
    SyntheticSplit split;
    split.images.reserve(count);
    split.labels.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto label = static_cast<std::uint8_t>(i % 10);
        split.labels.push_back(label);
        split.images.push_back(stripe_image(label, rng));
    }
    return split;
}

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("cannot write fixture " + path);
    }
}

inline std::vector<std::uint8_t> gzip_bytes(const std::vector<std::uint8_t>& bytes) {
    z_stream stream{};
    if (deflateInit2(&stream, Z_BEST_SPEED, Z_DEFLATED, 15 + 16, 8,
                     Z_DEFAULT_STRATEGY) != Z_OK) {
        throw std::runtime_error("deflateInit2 failed");
    }
    std::vector<std::uint8_t> out(deflateBound(&stream, static_cast<uLong>(bytes.size())));
    stream.next_in = const_cast<Bytef*>(bytes.data());
    stream.avail_in = static_cast<uInt>(bytes.size());
    stream.next_out = out.data();
    stream.avail_out = static_cast<uInt>(out.size());
    if (deflate(&stream, Z_FINISH) != Z_STREAM_END) {
        deflateEnd(&stream);
        throw std::runtime_error("deflate failed");
    }
    out.resize(stream.total_out);
    deflateEnd(&stream);
    return out;
}

// Writes the four MNIST-named files (train gzipped, test raw) under dir.
inline void write_synthetic_dataset(const std::string& dir, std::size_t train_count,
                                    std::size_t test_count, std::uint64_t seed) {
    const SyntheticSplit train = make_synthetic_split(train_count, seed);
    const SyntheticSplit test = make_synthetic_split(test_count, seed + 1);
    write_bytes(dir + "/train-images-idx3-ubyte.gz", gzip_bytes(idx_image_bytes(train.images)));
    write_bytes(dir + "/train-labels-idx1-ubyte.gz", gzip_bytes(idx_label_bytes(train.labels)));
    write_bytes(dir + "/t10k-images-idx3-ubyte", idx_image_bytes(test.images));
    write_bytes(dir + "/t10k-labels-idx1-ubyte", idx_label_bytes(test.labels));
}

} // namespace fixtures
