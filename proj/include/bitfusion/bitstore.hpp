#pragma once

#include <cstring>
#include <vector>

#include "bitfusion/common.hpp"

namespace bitfusion {

// Bit-addressable little-endian byte store. Values are packed densely: bit i
// of the store lives at bit (i % 8) of byte (i / 8). Backs both the on-chip
// scratchpads and the off-chip memory image, so sub-byte element widths pack
// identically everywhere.
class BitStore {
public:
    BitStore() = default;
    explicit BitStore(std::uint64_t capacity_bits)
        : capacity_bits_(capacity_bits), bytes_((capacity_bits + 7) / 8, 0) {}

    std::uint64_t capacity_bits() const { return capacity_bits_; }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::vector<std::uint8_t>& bytes() { return bytes_; }

    void resize_bits(std::uint64_t capacity_bits) {
        capacity_bits_ = capacity_bits;
        bytes_.assign((capacity_bits + 7) / 8, 0);
    }

    bool in_range(std::uint64_t bit_addr, std::uint64_t nbits) const {
        return nbits <= capacity_bits_ && bit_addr <= capacity_bits_ - nbits;
    }

    // Reads up to 64 bits starting at bit_addr.
    std::uint64_t read(std::uint64_t bit_addr, unsigned nbits) const {
        BF_CHECK(nbits <= 64, "BitStore::read: width above 64 bits");
        if (!in_range(bit_addr, nbits)) throw SimError("BitStore::read: out of range");
        std::uint64_t v = 0;
        for (unsigned i = 0; i < nbits; ++i) {
            const std::uint64_t b = bit_addr + i;
            v |= std::uint64_t((bytes_[b >> 3] >> (b & 7)) & 1) << i;
        }
        return v;
    }

    void write(std::uint64_t bit_addr, unsigned nbits, std::uint64_t value) {
        BF_CHECK(nbits <= 64, "BitStore::write: width above 64 bits");
        if (!in_range(bit_addr, nbits)) throw SimError("BitStore::write: out of range");
        for (unsigned i = 0; i < nbits; ++i) {
            const std::uint64_t b = bit_addr + i;
            const std::uint8_t mask = std::uint8_t(1) << (b & 7);
            if ((value >> i) & 1) {
                bytes_[b >> 3] |= mask;
            } else {
                bytes_[b >> 3] &= std::uint8_t(~mask);
            }
        }
    }

    // Bulk copy between stores; widths may be large.
    static void copy(const BitStore& src, std::uint64_t src_addr, BitStore& dst,
                     std::uint64_t dst_addr, std::uint64_t nbits) {
        if (!src.in_range(src_addr, nbits)) throw SimError("BitStore::copy: source out of range");
        if (!dst.in_range(dst_addr, nbits)) throw SimError("BitStore::copy: destination out of range");
        std::uint64_t done = 0;
        while (done < nbits) {
            const unsigned chunk = static_cast<unsigned>(std::min<std::uint64_t>(64, nbits - done));
            dst.write(dst_addr + done, chunk, src.read(src_addr + done, chunk));
            done += chunk;
        }
    }

private:
    std::uint64_t capacity_bits_ = 0;
    std::vector<std::uint8_t> bytes_;
};

} // namespace bitfusion
