#include "tnid/data.hpp"

#include "tnid/digest.hpp"
#include "tnid/error.hpp"
#include "tnid/parallel.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tnid {

namespace {

std::uint32_t read_u32_be(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void check_payload(std::span<const std::uint8_t> bytes, std::size_t header,
                   std::size_t expected) {
    if (bytes.size() < header + expected) {
        std::ostringstream msg;
        msg << "truncated idx payload: expected " << header + expected << " bytes, got "
            << bytes.size();
        throw DataError(msg.str());
    }
    if (bytes.size() > header + expected) {
        std::ostringstream msg;
        msg << "idx payload has trailing bytes: expected " << header + expected
            << " bytes, got " << bytes.size();
        throw DataError(msg.str());
    }
}

} // namespace

RawImages parse_idx_images(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16) {
        throw DataError("idx image file too short for its header");
    }
    const std::uint32_t magic = read_u32_be(bytes.data());
    if (magic != 0x00000803u) {
        std::ostringstream msg;
        msg << "bad idx image magic 0x" << std::hex << magic << " (want 0x803)";
        throw DataError(msg.str());
    }
    RawImages out;
    out.count = read_u32_be(bytes.data() + 4);
    out.rows = read_u32_be(bytes.data() + 8);
    out.cols = read_u32_be(bytes.data() + 12);
    if (out.rows == 0 || out.cols == 0 || out.rows > SIZE_MAX / out.cols ||
        (out.count > 0 && out.count > SIZE_MAX / (out.rows * out.cols))) {
        throw DataError("idx image dimensions overflow");
    }
    const std::size_t payload = out.count * out.rows * out.cols;
    check_payload(bytes, 16, payload);
    out.pixels.assign(bytes.begin() + 16, bytes.end());
    return out;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) {
        throw DataError("idx label file too short for its header");
    }
    const std::uint32_t magic = read_u32_be(bytes.data());
    if (magic != 0x00000801u) {
        std::ostringstream msg;
        msg << "bad idx label magic 0x" << std::hex << magic << " (want 0x801)";
        throw DataError(msg.str());
    }
    const std::size_t count = read_u32_be(bytes.data() + 4);
    check_payload(bytes, 8, count);
    return {bytes.begin() + 8, bytes.end()};
}

bool is_gzip(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes, const std::string& name) {
    z_stream stream{};
    if (inflateInit2(&stream, 15 + 16) != Z_OK) {
        throw DataError("zlib init failed for " + name);
    }
    std::vector<std::uint8_t> out;
    out.resize(std::max<std::size_t>(bytes.size() * 4, 1 << 16));
    stream.next_in = const_cast<Bytef*>(bytes.data());
    stream.avail_in = static_cast<uInt>(bytes.size());
    std::size_t written = 0;
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        if (written == out.size()) {
            out.resize(out.size() * 2);
        }
        stream.next_out = out.data() + written;
        stream.avail_out = static_cast<uInt>(out.size() - written);
        rc = inflate(&stream, Z_NO_FLUSH);
        written = out.size() - stream.avail_out;
        if (rc != Z_OK && rc != Z_STREAM_END) {
            const auto offset = static_cast<std::size_t>(stream.total_in);
            inflateEnd(&stream);
            std::ostringstream msg;
            msg << "corrupted gzip stream in " << name << " at offset " << offset << ": "
                << (stream.msg ? stream.msg : zError(rc));
            throw DataError(msg.str());
        }
    }
    inflateEnd(&stream);
    out.resize(written);
    return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw DataError("cannot open " + path);
    }
    file.seekg(0, std::ios::end);
    const std::streamoff size = file.tellg();
    file.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    file.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!file) {
        throw DataError("failed reading " + path);
    }
    return bytes;
}

std::vector<std::uint8_t> read_idx_file(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_file(path);
    if (is_gzip(bytes)) {
        return gunzip(bytes, path);
    }
    return bytes;
}

const char* filter_name(ResampleFilter filter) {
    return filter == ResampleFilter::box ? "box" : "bilinear";
}

ResampleFilter filter_from_name(std::string_view name) {
    if (name == "box") {
        return ResampleFilter::box;
    }
    if (name == "bilinear") {
        return ResampleFilter::bilinear;
    }
    throw ConfigError("unknown resample filter: " + std::string(name));
}

namespace {

std::vector<double> resample_box(std::span<const std::uint8_t> image, std::size_t in_h,
                                 std::size_t in_w, std::size_t out_h, std::size_t out_w) {
    const double scale_h = static_cast<double>(in_h) / static_cast<double>(out_h);
    const double scale_w = static_cast<double>(in_w) / static_cast<double>(out_w);
    std::vector<double> out(out_h * out_w, 0.0);
    for (std::size_t i = 0; i < out_h; ++i) {
        const double r0 = scale_h * static_cast<double>(i);
        const double r1 = scale_h * static_cast<double>(i + 1);
        const auto p0 = static_cast<std::size_t>(std::floor(r0));
        const auto p1 = std::min(in_h, static_cast<std::size_t>(std::ceil(r1)));
        for (std::size_t j = 0; j < out_w; ++j) {
            const double c0 = scale_w * static_cast<double>(j);
            const double c1 = scale_w * static_cast<double>(j + 1);
            const auto q0 = static_cast<std::size_t>(std::floor(c0));
            const auto q1 = std::min(in_w, static_cast<std::size_t>(std::ceil(c1)));
            double sum = 0.0;
            for (std::size_t p = p0; p < p1; ++p) {
                const double wr = std::min(r1, static_cast<double>(p + 1)) -
                                  std::max(r0, static_cast<double>(p));
                for (std::size_t q = q0; q < q1; ++q) {
                    const double wc = std::min(c1, static_cast<double>(q + 1)) -
                                      std::max(c0, static_cast<double>(q));
                    sum += wr * wc * static_cast<double>(image[p * in_w + q]);
                }
            }
            out[i * out_w + j] = sum / (scale_h * scale_w);
        }
    }
    return out;
}

std::vector<double> resample_bilinear(std::span<const std::uint8_t> image, std::size_t in_h,
                                      std::size_t in_w, std::size_t out_h, std::size_t out_w) {
    const double scale_h = static_cast<double>(in_h) / static_cast<double>(out_h);
    const double scale_w = static_cast<double>(in_w) / static_cast<double>(out_w);
    std::vector<double> out(out_h * out_w, 0.0);
    for (std::size_t i = 0; i < out_h; ++i) {
        const double y = (static_cast<double>(i) + 0.5) * scale_h - 0.5;
        const double yc = std::clamp(y, 0.0, static_cast<double>(in_h - 1));
        const auto p0 = static_cast<std::size_t>(yc);
        const std::size_t p1 = std::min(p0 + 1, in_h - 1);
        const double fy = yc - static_cast<double>(p0);
        for (std::size_t j = 0; j < out_w; ++j) {
            const double x = (static_cast<double>(j) + 0.5) * scale_w - 0.5;
            const double xc = std::clamp(x, 0.0, static_cast<double>(in_w - 1));
            const auto q0 = static_cast<std::size_t>(xc);
            const std::size_t q1 = std::min(q0 + 1, in_w - 1);
            const double fx = xc - static_cast<double>(q0);
            const double v00 = image[p0 * in_w + q0];
            const double v01 = image[p0 * in_w + q1];
            const double v10 = image[p1 * in_w + q0];
            const double v11 = image[p1 * in_w + q1];
            out[i * out_w + j] = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                 fy * ((1 - fx) * v10 + fx * v11);
        }
    }
    return out;
}

} // namespace

std::vector<double> resample(std::span<const std::uint8_t> image, std::size_t in_h,
                             std::size_t in_w, std::size_t out_h, std::size_t out_w,
                             ResampleFilter filter) {
    if (image.size() != in_h * in_w) {
        throw ShapeError("image byte count does not match its dimensions");
    }
    if (out_h == 0 || out_w == 0) {
        throw ShapeError("output dimensions must be positive");
    }
    return filter == ResampleFilter::box ? resample_box(image, in_h, in_w, out_h, out_w)
                                         : resample_bilinear(image, in_h, in_w, out_h, out_w);
}

std::vector<double> downsample_8x8(std::span<const std::uint8_t> image28x28,
                                   ResampleFilter filter) {
    return resample(image28x28, 28, 28, 8, 8, filter);
}

double normalize_pixel(double value) {
    if (!(value >= 0.0 && value <= 255.0)) {
        std::ostringstream msg;
        msg << "pixel value " << value << " outside [0, 255]";
        throw ValueError(msg.str());
    }
    return value / 255.0 - 0.5;
}

void normalize(std::span<double> pixels) {
    for (double& v : pixels) {
        v = normalize_pixel(v);
    }
}

Dataset Dataset::subset(std::size_t k) const {
    if (k >= count) {
        return *this;
    }
    Dataset out = *this;
    out.count = k;
    out.features.resize(k * m);
    out.labels.resize(k);
    return out;
}

Dataset build_dataset(const std::string& images_path, const std::string& labels_path,
                      std::string split, ResampleFilter filter, std::size_t n_classes) {
    const std::vector<std::uint8_t> image_bytes = read_idx_file(images_path);
    const std::vector<std::uint8_t> label_bytes = read_idx_file(labels_path);

    Sha1 digest;
    digest.update(image_bytes);
    digest.update(label_bytes);

    const RawImages images = parse_idx_images(image_bytes);
    const std::vector<std::uint8_t> labels = parse_idx_labels(label_bytes);
    if (images.count != labels.size()) {
        std::ostringstream msg;
        msg << "image/label count mismatch: " << images.count << " images, "
            << labels.size() << " labels";
        throw DataError(msg.str());
    }
    if (images.count == 0) {
        throw DataError("dataset is empty");
    }
    for (const std::uint8_t label : labels) {
        if (label >= n_classes) {
            throw DataError("label " + std::to_string(label) + " outside class range");
        }
    }

    Dataset ds;
    ds.m = 64;
    ds.n_classes = n_classes;
    ds.count = images.count;
    ds.labels = labels;
    ds.split = std::move(split);
    ds.source_digest = digest.hex_digest();
    ds.filter_tag = filter_name(filter);
    ds.features.resize(ds.count * ds.m);
    parallel_for(ds.count, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) {
            std::vector<double> cell =
                resample(images.image(i), images.rows, images.cols, 8, 8, filter);
            normalize(cell);
            std::copy(cell.begin(), cell.end(), ds.features.begin() + i * ds.m);
        }
    });
    return ds;
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b), 8);
}

void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
        v = (v << 8) | b[i];
    }
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    std::uint8_t b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | b[i];
    }
    return v;
}

std::string read_string(std::istream& in) {
    const std::uint32_t len = read_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

constexpr std::uint32_t kCacheVersion = 1;

} // namespace

void save_dataset_cache(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out.write("TNDS", 4);
    write_u32(out, kCacheVersion);
    write_u32(out, static_cast<std::uint32_t>(ds.m));
    write_u64(out, ds.count);
    out.put(static_cast<char>(filter_from_name(ds.filter_tag) == ResampleFilter::box ? 0 : 1));
    write_string(out, ds.source_digest);
    write_string(out, ds.split);
    out.put(static_cast<char>(ds.n_classes));
    out.write(reinterpret_cast<const char*>(ds.labels.data()),
              static_cast<std::streamsize>(ds.labels.size()));
    // f64 little-endian; this writes through the native layout, which the
    // supported targets share.
    out.write(reinterpret_cast<const char*>(ds.features.data()),
              static_cast<std::streamsize>(ds.features.size() * sizeof(double)));
    if (!out) {
        throw DataError("failed writing " + path);
    }
}

Dataset load_dataset_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TNDS", 4) != 0) {
        throw DataError(path + " is not a dataset cache (bad magic)");
    }
    const std::uint32_t version = read_u32(in);
    if (version != kCacheVersion) {
        throw DataError("unsupported dataset cache version " + std::to_string(version));
    }
    Dataset ds;
    ds.m = read_u32(in);
    ds.count = read_u64(in);
    const int filter = in.get();
    ds.filter_tag = filter_name(filter == 0 ? ResampleFilter::box : ResampleFilter::bilinear);
    ds.source_digest = read_string(in);
    ds.split = read_string(in);
    ds.n_classes = static_cast<std::size_t>(in.get());
    ds.labels.resize(ds.count);
    in.read(reinterpret_cast<char*>(ds.labels.data()),
            static_cast<std::streamsize>(ds.count));
    ds.features.resize(ds.count * ds.m);
    in.read(reinterpret_cast<char*>(ds.features.data()),
            static_cast<std::streamsize>(ds.features.size() * sizeof(double)));
    if (!in) {
        throw DataError("truncated dataset cache: " + path);
    }
    return ds;
}

std::vector<std::size_t> label_histogram(const Dataset& ds) {
    std::vector<std::size_t> hist(ds.n_classes, 0);
    for (const std::uint8_t label : ds.labels) {
        ++hist[label];
    }
    return hist;
}

} // namespace tnid
