#pragma once

#include "tnid/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace tnid {

// Binary tensor fragment: little-endian u32 order, u64 shape entries,
// f64 elements.
void write_tensor_fragment(std::ostream& out, const DenseTensor& t);
DenseTensor read_tensor_fragment(std::istream& in);

struct CheckpointMeta {
    ModelKind kind = ModelKind::tensor_ring;
    std::size_t m = 0;
    std::size_t r = 0;
    std::size_t n = 0;
    std::size_t layers = 0; // 0 for rings
    std::uint64_t seed = 0;
    std::uint8_t init_tag = 0;
};

// Model checkpoint: magic "TNID", u32 version, u8 kind, u32 m/r/n/l,
// u64 seed, u8 init-scheme tag, then core fragments in traversal order
// (the parameter_cores order).
void save_checkpoint(const Model& model, std::uint64_t seed, std::uint8_t init_tag,
                     const std::string& path);

struct LoadedCheckpoint {
    Model model;
    CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Zero-initialized models with the right core shapes (checkpoint loading,
// constructed test fixtures).
TensorRingModel make_tr_structure(std::size_t m, std::size_t r, std::size_t n);
TreeTensorNetworkModel make_ttn_structure(std::size_t m, std::size_t r, std::size_t n);
Model make_model_structure(ModelKind kind, std::size_t m, std::size_t r, std::size_t n);

} // namespace tnid
