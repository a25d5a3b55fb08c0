#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "bitfusion/brick.hpp"
#include "bitfusion/common.hpp"

namespace bitfusion {

constexpr unsigned kBricksPerUnit = 16;

constexpr bool valid_operand_bits(unsigned bits) {
    return bits == 2 || bits == 4 || bits == 8 || bits == 16;
}

// An (input bitwidth, weight bitwidth) pair. Everything else about how a
// fusion unit partitions into Fused-PEs derives from it:
//   - spatial_footprint: bricks consumed by one Fused-PE (16-bit operands are
//     handled as 8-bit halves over multiple cycles, so the spatial side caps
//     at 8 bits),
//   - fused_pe_count:    Fused-PEs per 16-brick unit,
//   - temporal_cycles:   cycles per multiply when an operand exceeds 8 bits.
struct FusionConfig {
    unsigned input_bits = 8;
    unsigned weight_bits = 8;

    constexpr bool valid() const {
        return valid_operand_bits(input_bits) && valid_operand_bits(weight_bits);
    }
    constexpr unsigned spatial_input_bits() const { return input_bits < 8 ? input_bits : 8; }
    constexpr unsigned spatial_weight_bits() const { return weight_bits < 8 ? weight_bits : 8; }
    constexpr unsigned input_slices() const { return spatial_input_bits() / 2; }
    constexpr unsigned weight_slices() const { return spatial_weight_bits() / 2; }
    constexpr unsigned spatial_footprint() const { return input_slices() * weight_slices(); }
    constexpr unsigned fused_pe_count() const { return kBricksPerUnit / spatial_footprint(); }
    constexpr unsigned temporal_cycles() const {
        const unsigned ic = input_bits > 8 ? input_bits / 8 : 1;
        const unsigned wc = weight_bits > 8 ? weight_bits / 8 : 1;
        return ic * wc;
    }
    constexpr bool is_temporal() const { return temporal_cycles() > 1; }

    constexpr bool operator==(const FusionConfig&) const = default;
};

// Radix-4 decomposition of an operand: 2-bit slices, least significant
// first. Exactly the top slice carries the sign when the source is signed,
// which makes recomposition sum(slice_i * 4^i) exact.
struct SliceVector {
    std::array<BrickOperand, 8> slices{};
    unsigned count = 0;
    unsigned source_bits = 0;
    bool source_signed = false;

    std::int64_t recompose() const {
        std::int64_t acc = 0;
        for (unsigned i = 0; i < count; ++i) {
            acc += static_cast<std::int64_t>(sign_extend(slices[i])) << (2 * i);
        }
        return acc;
    }
};

inline SliceVector decompose(std::int64_t value, unsigned bits, bool is_signed) {
    if (!valid_operand_bits(bits)) {
        throw RangeError("decompose: bitwidth must be one of 2,4,8,16");
    }
    if (!fits(value, bits, is_signed)) {
        throw RangeError("decompose: value out of range for bitwidth");
    }
    SliceVector out;
    out.count = bits / 2;
    out.source_bits = bits;
    out.source_signed = is_signed;
    const std::uint64_t raw = static_cast<std::uint64_t>(value);
    for (unsigned i = 0; i < out.count; ++i) {
        out.slices[i].bits = static_cast<std::uint8_t>((raw >> (2 * i)) & 0b11);
        out.slices[i].is_signed = is_signed && (i + 1 == out.count);
    }
    return out;
}

// Left-shift amounts applied to each brick's product inside a Fused-PE.
// Brick (i,j) pairs input slice i with weight slice j and shifts by 2i+2j.
struct ShiftTable {
    unsigned input_slices = 0;
    unsigned weight_slices = 0;

    constexpr unsigned shift(unsigned input_slice, unsigned weight_slice) const {
        return 2 * input_slice + 2 * weight_slice;
    }
    // Row-major flattening (input slice index varies slowest).
    std::vector<unsigned> flat() const {
        std::vector<unsigned> v;
        v.reserve(std::size_t{input_slices} * weight_slices);
        for (unsigned i = 0; i < input_slices; ++i) {
            for (unsigned j = 0; j < weight_slices; ++j) {
                v.push_back(shift(i, j));
            }
        }
        return v;
    }
};

inline ShiftTable shift_table(const FusionConfig& config) {
    BF_CHECK(config.valid(), "shift_table: invalid fusion config");
    return ShiftTable{config.input_slices(), config.weight_slices()};
}

// One Fused-PE multiply: decompose both operands to bricks, shift each brick
// product per the table, and sum. The spatial path covers operands up to
// 8 bits; the result is checked against the exact product.
inline std::int32_t fused_pe_multiply(std::int64_t x, bool x_signed,
                                      std::int64_t w, bool w_signed,
                                      const FusionConfig& config) {
    if (!config.valid() || config.is_temporal()) {
        throw ConfigError("fused_pe_multiply: spatial path requires <= 8-bit config");
    }
    const SliceVector xs = decompose(x, config.input_bits, x_signed);
    const SliceVector ws = decompose(w, config.weight_bits, w_signed);
    const ShiftTable table = shift_table(config);
    std::int64_t acc = 0;
    for (unsigned i = 0; i < xs.count; ++i) {
        for (unsigned j = 0; j < ws.count; ++j) {
            const BrickProduct p = brick_multiply(xs.slices[i], ws.slices[j]);
            acc += static_cast<std::int64_t>(p.value) << table.shift(i, j);
        }
    }
    BF_CHECK(acc == x * w, "fused_pe_multiply: shift-add tree disagrees with product");
    return static_cast<std::int32_t>(acc);
}

// Convenience overload for the common signed/signed case.
inline std::int32_t fused_pe_multiply(std::int64_t x, std::int64_t w,
                                      const FusionConfig& config) {
    return fused_pe_multiply(x, true, w, true, config);
}

// One cycle of a fusion unit: every Fused-PE multiplies its lane and the unit
// folds all products plus the incoming partial sum into a 32-bit outgoing
// partial sum (two's-complement wrap; wraps are reported, not hidden).
inline std::int32_t fusion_unit_cycle(std::span<const std::int64_t> inputs, bool inputs_signed,
                                      std::span<const std::int64_t> weights, bool weights_signed,
                                      std::int32_t psum_in, const FusionConfig& config,
                                      std::uint64_t* overflow_count = nullptr) {
    if (!config.valid() || config.is_temporal()) {
        throw ConfigError("fusion_unit_cycle: spatial path requires <= 8-bit config");
    }
    if (inputs.size() != weights.size() || inputs.size() != config.fused_pe_count()) {
        throw ConfigError("fusion_unit_cycle: lane count must equal fused_pe_count");
    }
    std::int64_t sum = 0;
    for (std::size_t lane = 0; lane < inputs.size(); ++lane) {
        sum += fused_pe_multiply(inputs[lane], inputs_signed, weights[lane], weights_signed, config);
    }
    bool overflowed = false;
    const std::int32_t out = add_wrap32(psum_in, sum, &overflowed);
    if (overflowed && overflow_count) ++*overflow_count;
    return out;
}

struct TemporalResult {
    std::int32_t product = 0;
    unsigned cycles = 0;
};

namespace detail {

struct Half {
    std::int64_t value;
    unsigned bits;
    bool is_signed;
};

// Splits a 16-bit operand into an unsigned low byte and a high byte that
// inherits the source sign; narrower operands pass through as their own
// "low" half.
inline std::array<Half, 2> split16(std::int64_t v, unsigned bits, bool is_signed) {
    if (bits <= 8) {
        return {Half{v, bits, is_signed}, Half{0, bits, false}};
    }
    const std::uint64_t raw = static_cast<std::uint64_t>(v);
    const std::int64_t lo = static_cast<std::int64_t>(raw & 0xFF);
    const std::int64_t hi = interpret(raw >> 8, 8, is_signed);
    return {Half{lo, 8, false}, Half{hi, 8, is_signed}};
}

} // namespace detail

// Multiply with at least one 16-bit operand. Each cycle runs one spatial
// multiply over 8-bit halves; the per-cycle results are shifted by the
// matching multiple of 8 and accumulated. Quadrant order is
// (lo,lo), (hi,lo), (lo,hi), (hi,hi).
inline TemporalResult temporal_multiply(std::int64_t x, bool x_signed,
                                        std::int64_t w, bool w_signed,
                                        const FusionConfig& config,
                                        std::uint64_t* overflow_count = nullptr) {
    if (!config.valid() || !config.is_temporal()) {
        throw ConfigError("temporal_multiply: config must have a 16-bit operand");
    }
    if (!fits(x, config.input_bits, x_signed) || !fits(w, config.weight_bits, w_signed)) {
        throw RangeError("temporal_multiply: operand out of range");
    }
    const auto xh = detail::split16(x, config.input_bits, x_signed);
    const auto wh = detail::split16(w, config.weight_bits, w_signed);
    const unsigned x_halves = config.input_bits > 8 ? 2 : 1;
    const unsigned w_halves = config.weight_bits > 8 ? 2 : 1;

    const FusionConfig spatial{config.spatial_input_bits(), config.spatial_weight_bits()};
    std::int64_t acc = 0;
    unsigned cycles = 0;
    // Quadrant walk: weight half outer, input half inner.
    for (unsigned j = 0; j < w_halves; ++j) {
        for (unsigned i = 0; i < x_halves; ++i) {
            const std::int32_t p = fused_pe_multiply(
                xh[i].value, xh[i].is_signed, wh[j].value, wh[j].is_signed, spatial);
            acc += static_cast<std::int64_t>(p) << (8 * (i + j));
            ++cycles;
        }
    }
    BF_CHECK(cycles == config.temporal_cycles(), "temporal_multiply: cycle count mismatch");
    bool overflowed = false;
    const std::int32_t wrapped = add_wrap32(0, acc, &overflowed);
    if (overflowed && overflow_count) ++*overflow_count;
    return TemporalResult{wrapped, cycles};
}

// Exact product of two operands under a config, routed through the spatial or
// temporal path as the bitwidths demand. Returns the 32-bit wrapped product.
inline std::int32_t configured_multiply(std::int64_t x, bool x_signed,
                                        std::int64_t w, bool w_signed,
                                        const FusionConfig& config,
                                        std::uint64_t* overflow_count = nullptr) {
    if (config.is_temporal()) {
        return temporal_multiply(x, x_signed, w, w_signed, config, overflow_count).product;
    }
    return fused_pe_multiply(x, x_signed, w, w_signed, config);
}

} // namespace bitfusion
