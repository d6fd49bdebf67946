#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace tnid {

// SHA-1, used for dataset/input provenance digests only.
class Sha1 {
public:
    Sha1();
    void update(std::span<const std::uint8_t> bytes);
    // Finalizes and returns the 40-char lowercase hex digest.
    std::string hex_digest();

    static std::string of(std::span<const std::uint8_t> bytes);

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[5];
    std::uint64_t length_ = 0;
    std::uint8_t buffer_[64];
    std::size_t buffered_ = 0;
};

} // namespace tnid
