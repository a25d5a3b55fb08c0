#pragma once

#include <string>
#include <vector>

#include "bitfusion/bitstore.hpp"
#include "bitfusion/common.hpp"

namespace bitfusion {

enum class ScratchpadKind { Ibuf, Obuf, Wbuf };

inline const char* to_string(ScratchpadKind k) {
    switch (k) {
        case ScratchpadKind::Ibuf: return "ibuf";
        case ScratchpadKind::Obuf: return "obuf";
        case ScratchpadKind::Wbuf: return "wbuf";
    }
    return "?";
}

// On-chip buffer with an access-width row register per consumer port.
// Datapath operand extraction goes through a port register: a register miss
// costs one data-array read (the register fill), hits cost nothing. Block
// transfers (tile deposits and drains) stream whole access-width words and
// are counted directly.
class Scratchpad {
public:
    Scratchpad() = default;
    Scratchpad(ScratchpadKind kind, std::uint64_t capacity_bits, unsigned ports,
               unsigned access_bits = 32)
        : kind_(kind),
          access_bits_(access_bits),
          store_(capacity_bits),
          registers_(ports, Register{}) {
        BF_CHECK(access_bits_ % 16 == 0 && access_bits_ >= 16,
                 "buffer access width must be a multiple of 16");
    }

    ScratchpadKind kind() const { return kind_; }
    std::uint64_t capacity_bits() const { return store_.capacity_bits(); }
    unsigned access_bits() const { return access_bits_; }
    unsigned ports() const { return static_cast<unsigned>(registers_.size()); }

    std::uint64_t data_array_reads() const { return reads_; }
    std::uint64_t data_array_writes() const { return writes_; }
    std::uint64_t register_fills() const { return register_fills_; }

    void invalidate_registers() {
        for (auto& r : registers_) r.valid = false;
    }

    // Datapath read of one operand through a port register.
    std::uint64_t extract(unsigned port, std::uint64_t bit_addr, unsigned nbits) {
        BF_CHECK(port < registers_.size(), "scratchpad port out of range");
        if (!store_.in_range(bit_addr, nbits)) {
            throw SimError(std::string(to_string(kind_)) + ": extract out of bounds");
        }
        Register& reg = registers_[port];
        std::uint64_t value = 0;
        unsigned got = 0;
        while (got < nbits) {
            const std::uint64_t window = (bit_addr + got) / access_bits_;
            if (!reg.valid || reg.window != window) {
                reg.valid = true;
                reg.window = window;
                ++reads_;
                ++register_fills_;
            }
            const std::uint64_t window_end = (window + 1) * access_bits_;
            const unsigned chunk = static_cast<unsigned>(
                std::min<std::uint64_t>(nbits - got, window_end - (bit_addr + got)));
            value |= store_.read(bit_addr + got, chunk) << got;
            got += chunk;
        }
        return value;
    }

    // `count` operands of width `operand_bits`, little-endian consecutive,
    // all served from one register window.
    std::vector<std::uint64_t> extract_operands(unsigned port, std::uint64_t bit_addr,
                                                unsigned operand_bits, unsigned count) {
        BF_CHECK(std::uint64_t(operand_bits) * count <= access_bits_,
                 "operand group wider than the access register");
        std::vector<std::uint64_t> out;
        out.reserve(count);
        for (unsigned i = 0; i < count; ++i) {
            out.push_back(extract(port, bit_addr + std::uint64_t(i) * operand_bits, operand_bits));
        }
        return out;
    }

    // Block transfer into the data array (ld-mem deposit, column emission).
    void deposit(std::uint64_t bit_addr, std::uint64_t nbits, const BitStore& src,
                 std::uint64_t src_addr) {
        if (!store_.in_range(bit_addr, nbits)) {
            throw SimError(std::string(to_string(kind_)) + ": deposit overflows scratchpad");
        }
        BitStore::copy(src, src_addr, store_, bit_addr, nbits);
        writes_ += touched_windows(bit_addr, nbits);
        invalidate_registers();
    }

    void write_value(std::uint64_t bit_addr, unsigned nbits, std::uint64_t value) {
        if (!store_.in_range(bit_addr, nbits)) {
            throw SimError(std::string(to_string(kind_)) + ": write overflows scratchpad");
        }
        store_.write(bit_addr, nbits, value);
        writes_ += touched_windows(bit_addr, nbits);
        invalidate_registers();
    }

    // Block transfer out of the data array (st-mem drain).
    void fetch(std::uint64_t bit_addr, std::uint64_t nbits, BitStore& dst,
               std::uint64_t dst_addr) {
        if (!store_.in_range(bit_addr, nbits)) {
            throw SimError(std::string(to_string(kind_)) + ": fetch out of bounds");
        }
        BitStore::copy(store_, bit_addr, dst, dst_addr, nbits);
        reads_ += touched_windows(bit_addr, nbits);
    }

    std::uint64_t read_value(std::uint64_t bit_addr, unsigned nbits) const {
        return store_.read(bit_addr, nbits);
    }

    // Data-array read outside the register path (read-modify-write of held
    // partial sums).
    std::uint64_t read_counted(std::uint64_t bit_addr, unsigned nbits) {
        reads_ += touched_windows(bit_addr, nbits);
        return store_.read(bit_addr, nbits);
    }

private:
    struct Register {
        bool valid = false;
        std::uint64_t window = 0;
    };

    std::uint64_t touched_windows(std::uint64_t bit_addr, std::uint64_t nbits) const {
        if (nbits == 0) return 0;
        const std::uint64_t first = bit_addr / access_bits_;
        const std::uint64_t last = (bit_addr + nbits - 1) / access_bits_;
        return last - first + 1;
    }

    ScratchpadKind kind_ = ScratchpadKind::Ibuf;
    unsigned access_bits_ = 32;
    BitStore store_;
    std::vector<Register> registers_;
    std::uint64_t reads_ = 0;
    std::uint64_t writes_ = 0;
    std::uint64_t register_fills_ = 0;
};

} // namespace bitfusion
