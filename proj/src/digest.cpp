#include "tnid/digest.hpp"

#include <cstring>

namespace tnid {

namespace {

inline std::uint32_t rotl(std::uint32_t v, int bits) {
    return (v << bits) | (v >> (32 - bits));
}

} // namespace

Sha1::Sha1() {
    state_[0] = 0x67452301u;
    state_[1] = 0xEFCDAB89u;
    state_[2] = 0x98BADCFEu;
    state_[3] = 0x10325476u;
    state_[4] = 0xC3D2E1F0u;
}

void Sha1::process_block(const std::uint8_t* block) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i) {
        w[i] = (std::uint32_t(block[i * 4]) << 24) | (std::uint32_t(block[i * 4 + 1]) << 16) |
               (std::uint32_t(block[i * 4 + 2]) << 8) | std::uint32_t(block[i * 4 + 3]);
    }
    for (int i = 16; i < 80; ++i) {
        w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    }
    std::uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3], e = state_[4];
    for (int i = 0; i < 80; ++i) {
        std::uint32_t f, k;
        if (i < 20) {
            f = (b & c) | (~b & d);
            k = 0x5A827999u;
        } else if (i < 40) {
            f = b ^ c ^ d;
            k = 0x6ED9EBA1u;
        } else if (i < 60) {
            f = (b & c) | (b & d) | (c & d);
            k = 0x8F1BBCDCu;
        } else {
            f = b ^ c ^ d;
            k = 0xCA62C1D6u;
        }
        const std::uint32_t temp = rotl(a, 5) + f + e + k + w[i];
        e = d;
        d = c;
        c = rotl(b, 30);
        b = a;
        a = temp;
    }
    state_[0] += a;
    state_[1] += b;
    state_[2] += c;
    state_[3] += d;
    state_[4] += e;
}

void Sha1::update(std::span<const std::uint8_t> bytes) {
    length_ += bytes.size() * 8;
    std::size_t offset = 0;
    if (buffered_ > 0) {
        const std::size_t take = std::min(bytes.size(), std::size_t{64} - buffered_);
        std::memcpy(buffer_ + buffered_, bytes.data(), take);
        buffered_ += take;
        offset = take;
        if (buffered_ == 64) {
            process_block(buffer_);
            buffered_ = 0;
        }
    }
    while (offset + 64 <= bytes.size()) {
        process_block(bytes.data() + offset);
        offset += 64;
    }
    if (offset < bytes.size()) {
        std::memcpy(buffer_, bytes.data() + offset, bytes.size() - offset);
        buffered_ = bytes.size() - offset;
    }
}

std::string Sha1::hex_digest() {
    const std::uint64_t total_bits = length_;
    const std::uint8_t pad = 0x80;
    update({&pad, 1});
    const std::uint8_t zero = 0x00;
    while (buffered_ != 56) {
        update({&zero, 1});
    }
    std::uint8_t len_bytes[8];
    for (int i = 0; i < 8; ++i) {
        len_bytes[i] = static_cast<std::uint8_t>(total_bits >> (56 - 8 * i));
    }
    std::memcpy(buffer_ + 56, len_bytes, 8);
    process_block(buffer_);
    buffered_ = 0;

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(40);
    for (const std::uint32_t word : state_) {
        for (int shift = 28; shift >= 0; shift -= 4) {
            out.push_back(hex[(word >> shift) & 0xF]);
        }
    }
    return out;
}

std::string Sha1::of(std::span<const std::uint8_t> bytes) {
    Sha1 h;
    h.update(bytes);
    return h.hex_digest();
}

} // namespace tnid
