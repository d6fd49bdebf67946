#include "tnid/checkpoint.hpp"

#include "tnid/error.hpp"

#include <cstring>
#include <fstream>

namespace tnid {

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

std::uint32_t read_u32(std::istream& in) {
    std::uint8_t b[4] = {};
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
        v = (v << 8) | b[i];
    }
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    std::uint8_t b[8] = {};
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | b[i];
    }
    return v;
}

constexpr std::uint32_t kCheckpointVersion = 1;

} // namespace

void write_tensor_fragment(std::ostream& out, const DenseTensor& t) {
    write_u32(out, static_cast<std::uint32_t>(t.order()));
    for (const std::size_t dim : t.shape()) {
        write_u64(out, dim);
    }
    // f64 little-endian through the native layout of the supported targets.
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
}

DenseTensor read_tensor_fragment(std::istream& in) {
    const std::uint32_t order = read_u32(in);
    if (!in || order > 64) {
        throw DataError("corrupt tensor fragment header");
    }
    std::vector<std::size_t> shape(order);
    for (std::uint32_t d = 0; d < order; ++d) {
        shape[d] = read_u64(in);
    }
    DenseTensor t{shape};
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) {
        throw DataError("truncated tensor fragment");
    }
    return t;
}

TensorRingModel make_tr_structure(std::size_t m, std::size_t r, std::size_t n) {
    TensorRingModel model;
    model.m = m;
    model.r = r;
    model.n = n;
    model.output_position = m;
    model.feature_cores.assign(m, DenseTensor({r, 2, r}));
    model.output_core = DenseTensor({r, n, r});
    return model;
}

TreeTensorNetworkModel make_ttn_structure(std::size_t m, std::size_t r, std::size_t n) {
    TreeTensorNetworkModel model;
    model.m = m;
    model.r = r;
    model.n = n;
    std::size_t layers = 0;
    for (std::size_t v = 1; v < m; v <<= 1) {
        ++layers;
    }
    if (m < 2 || (std::size_t{1} << layers) != m) {
        throw ConfigError("tree models require a power-of-two feature count");
    }
    model.layers = layers;
    if (layers == 1) {
        model.top_core = DenseTensor({2, 2, n});
        return model;
    }
    model.leaf_cores.assign(m / 2, DenseTensor({2, 2, r}));
    for (std::size_t layer = 2; layer < layers; ++layer) {
        model.internal_cores.emplace_back(m >> layer, DenseTensor({r, r, r}));
    }
    model.top_core = DenseTensor({r, r, n});
    return model;
}

Model make_model_structure(ModelKind kind, std::size_t m, std::size_t r, std::size_t n) {
    if (kind == ModelKind::tensor_ring) {
        return make_tr_structure(m, r, n);
    }
    return make_ttn_structure(m, r, n);
}

void save_checkpoint(const Model& model, std::uint64_t seed, std::uint8_t init_tag,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    const ModelDims dims = dims_of(model);
    const ModelKind kind = kind_of(model);
    std::size_t layers = 0;
    if (const auto* ttn = std::get_if<TreeTensorNetworkModel>(&model)) {
        layers = ttn->layers;
    }
    out.write("TNID", 4);
    write_u32(out, kCheckpointVersion);
    out.put(static_cast<char>(kind));
    write_u32(out, static_cast<std::uint32_t>(dims.m));
    write_u32(out, static_cast<std::uint32_t>(dims.r));
    write_u32(out, static_cast<std::uint32_t>(dims.n));
    write_u32(out, static_cast<std::uint32_t>(layers));
    write_u64(out, seed);
    out.put(static_cast<char>(init_tag));
    for (const DenseTensor* core : parameter_cores(model)) {
        write_tensor_fragment(out, *core);
    }
    if (!out) {
        throw DataError("failed writing " + path);
    }
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TNID", 4) != 0) {
        throw DataError(path + " is not a model checkpoint (bad magic)");
    }
    const std::uint32_t version = read_u32(in);
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    LoadedCheckpoint loaded;
    const int kind_byte = in.get();
    if (kind_byte != 0 && kind_byte != 1) {
        throw DataError("unknown model kind in checkpoint");
    }
    loaded.meta.kind = static_cast<ModelKind>(kind_byte);
    loaded.meta.m = read_u32(in);
    loaded.meta.r = read_u32(in);
    loaded.meta.n = read_u32(in);
    loaded.meta.layers = read_u32(in);
    loaded.meta.seed = read_u64(in);
    loaded.meta.init_tag = static_cast<std::uint8_t>(in.get());
    if (!in) {
        throw DataError("truncated checkpoint header: " + path);
    }

    loaded.model =
        make_model_structure(loaded.meta.kind, loaded.meta.m, loaded.meta.r, loaded.meta.n);
    for (DenseTensor* core : parameter_cores(loaded.model)) {
        DenseTensor fragment = read_tensor_fragment(in);
        if (!fragment.same_shape(*core)) {
            throw DataError("checkpoint core shape mismatch in " + path);
        }
        *core = std::move(fragment);
    }
    return loaded;
}

} // namespace tnid
