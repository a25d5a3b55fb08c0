#pragma once

#include "bitfusion/common.hpp"

namespace bitfusion {

// One 2-bit operand of the atomic compute unit, together with its sign mode.
// Unsigned operands cover [0,3]; signed operands cover [-2,1] in two's
// complement.
struct BrickOperand {
    std::uint8_t bits = 0; // 2-bit pattern, 0..3
    bool is_signed = false;

    constexpr bool valid() const { return bits <= 3; }
};

// 6-bit signed product of two sign-extended 2-bit operands. The reachable
// range is [-6, 9]; the 6-bit bound is a checked invariant, not a wrap.
struct BrickProduct {
    std::int8_t value = 0;
};

// Interprets the operand under its sign mode. The result always fits 3-bit
// two's complement, which is the width the hardware multiplier consumes.
constexpr std::int8_t sign_extend(BrickOperand op) {
    BF_CHECK(op.valid(), "brick operand wider than 2 bits");
    if (op.is_signed && (op.bits & 0b10)) {
        return static_cast<std::int8_t>(static_cast<int>(op.bits) - 4);
    }
    return static_cast<std::int8_t>(op.bits);
}

// 2b x 2b multiply through the 3-bit signed multiplier.
constexpr BrickProduct brick_multiply(BrickOperand x, BrickOperand y) {
    const int p = static_cast<int>(sign_extend(x)) * static_cast<int>(sign_extend(y));
    BF_CHECK(p >= -32 && p <= 31, "brick product exceeds 6-bit range");
    return BrickProduct{static_cast<std::int8_t>(p)};
}

} // namespace bitfusion
