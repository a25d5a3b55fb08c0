#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bitfusion {

// Base class for all recoverable errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Operand or field value outside its representable range.
class RangeError : public Error {
public:
    using Error::Error;
};

// Inconsistent configuration (vector lengths, unsupported bitwidths, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed assembly or binary input.
class ParseError : public Error {
public:
    using Error::Error;
};

// Infeasible schedule (tile does not fit a scratchpad, illegal reorder, ...).
class ScheduleError : public Error {
public:
    using Error::Error;
};

// Runtime fault during simulation (buffer overflow, bad address, ...).
class SimError : public Error {
public:
    using Error::Error;
};

namespace detail {
[[noreturn]] inline void fail_invariant(const char* msg) {
    throw Error(std::string("invariant violated: ") + msg);
}
} // namespace detail

// Always-on invariant check (independent of NDEBUG).
#define BF_CHECK(cond, msg)                                \
    do {                                                   \
        if (!(cond)) ::bitfusion::detail::fail_invariant(msg); \
    } while (0)

// Smallest/largest value representable in `bits` under `is_signed`.
constexpr std::int64_t min_value(unsigned bits, bool is_signed) {
    return is_signed ? -(std::int64_t{1} << (bits - 1)) : 0;
}
constexpr std::int64_t max_value(unsigned bits, bool is_signed) {
    return is_signed ? (std::int64_t{1} << (bits - 1)) - 1
                     : (std::int64_t{1} << bits) - 1;
}

constexpr bool fits(std::int64_t value, unsigned bits, bool is_signed) {
    return value >= min_value(bits, is_signed) && value <= max_value(bits, is_signed);
}

// Two's-complement interpretation of the low `bits` of a raw pattern.
constexpr std::int64_t interpret(std::uint64_t raw, unsigned bits, bool is_signed) {
    const std::uint64_t mask = (bits >= 64) ? ~std::uint64_t{0}
                                            : (std::uint64_t{1} << bits) - 1;
    std::uint64_t v = raw & mask;
    if (is_signed && bits < 64 && (v >> (bits - 1)) != 0) {
        return static_cast<std::int64_t>(v | ~mask);
    }
    return static_cast<std::int64_t>(v);
}

// Wrap an arbitrary-width value into 32-bit two's complement.
constexpr std::int32_t wrap32(std::int64_t v) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(
        static_cast<std::uint64_t>(v)));
}

// 32-bit add with wrap; *overflowed is set when the exact sum does not fit.
inline std::int32_t add_wrap32(std::int32_t a, std::int64_t b, bool* overflowed = nullptr) {
    const std::int64_t exact = static_cast<std::int64_t>(a) + b;
    const std::int32_t wrapped = wrap32(exact);
    if (overflowed && wrapped != exact) *overflowed = true;
    return wrapped;
}

// Arithmetic right shift followed by saturation into `bits` (signed).
constexpr std::int64_t shift_saturate(std::int64_t v, unsigned shift, unsigned bits,
                                      bool is_signed = true) {
    const std::int64_t shifted = v >> shift;
    const std::int64_t lo = min_value(bits, is_signed);
    const std::int64_t hi = max_value(bits, is_signed);
    return shifted < lo ? lo : (shifted > hi ? hi : shifted);
}

constexpr std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
    return (a + b - 1) / b;
}

} // namespace bitfusion
