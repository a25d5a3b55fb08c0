#include <catch2/catch_amalgamated.hpp>

#include "bitfusion/brick.hpp"

using namespace bitfusion;

TEST_CASE("sign extension interprets operands under their sign mode", "[brick]") {
    CHECK(sign_extend(BrickOperand{0b11, false}) == 3);
    CHECK(sign_extend(BrickOperand{0b10, true}) == -2);
    CHECK(sign_extend(BrickOperand{0b01, true}) == 1);
    CHECK(sign_extend(BrickOperand{0b00, true}) == 0);
    CHECK(sign_extend(BrickOperand{0b11, true}) == -1);
}

TEST_CASE("brick multiply worked values", "[brick]") {
    CHECK(brick_multiply({0b11, false}, {0b11, false}).value == 9);
    CHECK(brick_multiply({0b10, true}, {0b11, false}).value == -6);
    for (std::uint8_t b = 0; b < 4; ++b) {
        CHECK(brick_multiply({0, false}, {b, false}).value == 0);
        CHECK(brick_multiply({0, true}, {b, true}).value == 0);
    }
}

TEST_CASE("brick multiply matches wide multiplication exhaustively", "[brick]") {
    // All 4 x 4 x 2 x 2 = 64 operand/sign combinations.
    for (int xs = 0; xs < 2; ++xs) {
        for (int ys = 0; ys < 2; ++ys) {
            for (std::uint8_t xb = 0; xb < 4; ++xb) {
                for (std::uint8_t yb = 0; yb < 4; ++yb) {
                    const BrickOperand x{xb, xs != 0};
                    const BrickOperand y{yb, ys != 0};
                    const int expect = int(sign_extend(x)) * int(sign_extend(y));
                    const BrickProduct p = brick_multiply(x, y);
                    REQUIRE(int(p.value) == expect);
                    // Commutativity under operand swap.
                    REQUIRE(brick_multiply(y, x).value == p.value);
                    // Reachable product range of sign-extended 2-bit operands.
                    REQUIRE(p.value >= -6);
                    REQUIRE(p.value <= 9);
                }
            }
        }
    }
}

TEST_CASE("invalid operand patterns are rejected", "[brick]") {
    CHECK_THROWS_AS(sign_extend(BrickOperand{4, false}), Error);
}
